#include "saddlelab/landscapes.hpp"

#include <atomic>
#include <cmath>

namespace saddlelab::landscapes {

const char* to_string(NoiseKind k) {
    switch (k) {
        case NoiseKind::None: return "none";
        case NoiseKind::AdditiveGradient: return "additive";
        case NoiseKind::MatrixEntry: return "matrix_entry";
    }
    return "?";
}

const char* to_string(LandscapeKind k) {
    switch (k) {
        case LandscapeKind::Quadratic: return "quadratic";
        case LandscapeKind::NonBilinear1: return "nonbilinear1";
        case LandscapeKind::NonBilinear2: return "nonbilinear2";
        case LandscapeKind::NonBilinear3: return "nonbilinear3";
    }
    return "?";
}

namespace {

std::uint64_t next_id() {
    static std::atomic<std::uint64_t> counter{1};
    return counter++;
}

void validate_noise(const NoiseSpec& n, int d, bool bilinear) {
    if (n.kind == NoiseKind::None) return;
    if (n.sigma.dim() != d)
        throw Error(ErrorKind::InvalidDimension, "noise sigma length must equal d");
    if ((n.sigma.entries().array() < 0.0).any())
        throw Error(ErrorKind::InvalidInput, "noise sigma must be nonnegative");
    if (n.kind == NoiseKind::MatrixEntry && !bilinear)
        throw Error(ErrorKind::UnsupportedNoise, "matrix-entry noise requires a bilinear game");
}

// phi for game #1: z^2/4 - z^4/2 + z^6/6
double phi1(double z) { double z2 = z * z; return z2 / 4 - z2 * z2 / 2 + z2 * z2 * z2 / 6; }
double dphi1(double z) { double z2 = z * z; return z / 2 - 2 * z * z2 + z * z2 * z2; }
double d2phi1(double z) { double z2 = z * z; return 0.5 - 6 * z2 + 5 * z2 * z2; }
// phi for game #2: z^2/2 - z^4/4
double phi2(double z) { double z2 = z * z; return z2 / 2 - z2 * z2 / 4; }
double dphi2(double z) { return z - z * z * z; }
double d2phi2(double z) { return 1 - 3 * z * z; }
// phi for game #3: z^2/2 - z^4/4 + z^6/6 - z^8/8
double phi3(double z) {
    double z2 = z * z, z4 = z2 * z2;
    return z2 / 2 - z4 / 4 + z4 * z2 / 6 - z4 * z4 / 8;
}
double dphi3(double z) {
    double z2 = z * z, z4 = z2 * z2;
    return z - z * z2 + z * z4 - z * z4 * z2;
}
double d2phi3(double z) {
    double z2 = z * z, z4 = z2 * z2;
    return 1 - 3 * z2 + 5 * z4 - 7 * z4 * z2;
}

}  // namespace

Landscape Landscape::quadratic(DiagMatrix a, DiagMatrix lam, NoiseSpec noise) {
    if (a.dim() != lam.dim()) throw Error(ErrorKind::InvalidDimension, "A and Lambda must share d");
    Landscape l;
    l.kind_ = LandscapeKind::Quadratic;
    l.d_ = a.dim();
    l.a_ = std::move(a);
    l.lam_ = std::move(lam);
    validate_noise(noise, l.d_, l.a_.is_zero());
    l.noise_ = std::move(noise);
    l.id_ = next_id();
    return l;
}

Landscape Landscape::bilinear(DiagMatrix lam, NoiseSpec noise) {
    int d = lam.dim();
    return quadratic(DiagMatrix::constant(d, 0.0), std::move(lam), std::move(noise));
}

Landscape Landscape::nonbilinear1(NoiseSpec noise) {
    Landscape l;
    l.kind_ = LandscapeKind::NonBilinear1;
    l.shift_ = -0.45;
    validate_noise(noise, 1, false);
    l.noise_ = std::move(noise);
    l.id_ = next_id();
    return l;
}

Landscape Landscape::nonbilinear2(double eps, NoiseSpec noise) {
    if (!std::isfinite(eps)) throw Error(ErrorKind::InvalidInput, "eps must be finite");
    Landscape l;
    l.kind_ = LandscapeKind::NonBilinear2;
    l.eps_ = eps;
    validate_noise(noise, 1, false);
    l.noise_ = std::move(noise);
    l.id_ = next_id();
    return l;
}

Landscape Landscape::nonbilinear3(NoiseSpec noise) {
    Landscape l;
    l.kind_ = LandscapeKind::NonBilinear3;
    validate_noise(noise, 1, false);
    l.noise_ = std::move(noise);
    l.id_ = next_id();
    return l;
}

Landscape Landscape::with_noise(NoiseSpec noise) const {
    Landscape l = *this;
    validate_noise(noise, d_, is_bilinear());
    l.noise_ = std::move(noise);
    l.id_ = next_id();
    return l;
}

double Landscape::p(double x) const {
    switch (kind_) {
        case LandscapeKind::NonBilinear1: return phi1(x);
        case LandscapeKind::NonBilinear3: return phi3(x);
        default: return 0.0;
    }
}
double Landscape::dp(double x) const {
    switch (kind_) {
        case LandscapeKind::NonBilinear1: return dphi1(x);
        case LandscapeKind::NonBilinear3: return dphi3(x);
        default: return 0.0;
    }
}
double Landscape::d2p(double x) const {
    switch (kind_) {
        case LandscapeKind::NonBilinear1: return d2phi1(x);
        case LandscapeKind::NonBilinear3: return d2phi3(x);
        default: return 0.0;
    }
}
double Landscape::q(double y) const {
    switch (kind_) {
        case LandscapeKind::NonBilinear1: return phi1(y);
        case LandscapeKind::NonBilinear2: return eps_ * phi2(y);
        case LandscapeKind::NonBilinear3: return phi3(y);
        default: return 0.0;
    }
}
double Landscape::dq(double y) const {
    switch (kind_) {
        case LandscapeKind::NonBilinear1: return dphi1(y);
        case LandscapeKind::NonBilinear2: return eps_ * dphi2(y);
        case LandscapeKind::NonBilinear3: return dphi3(y);
        default: return 0.0;
    }
}
double Landscape::d2q(double y) const {
    switch (kind_) {
        case LandscapeKind::NonBilinear1: return d2phi1(y);
        case LandscapeKind::NonBilinear2: return eps_ * d2phi2(y);
        case LandscapeKind::NonBilinear3: return d2phi3(y);
        default: return 0.0;
    }
}

void Landscape::check_dim(const StateVector& z) const {
    if (z.dim() != d_) throw Error(ErrorKind::InvalidDimension, "state dimension does not match landscape");
}

void Landscape::check_tag(const SampleTag& tag) const {
    if (tag.owner != id_ || tag.kind != noise_.kind)
        throw Error(ErrorKind::InvalidTag, "sample tag was produced by another landscape");
}

double Landscape::value(const StateVector& s) const {
    check_dim(s);
    auto x = s.x();
    auto y = s.y();
    if (is_quadratic()) {
        const Vec& a = a_.entries();
        return 0.5 * (a.array() * x.array().square()).sum() + (lam_.entries().array() * x.array() * y.array()).sum() -
               0.5 * (a.array() * y.array().square()).sum();
    }
    return x[0] * (y[0] + shift_) + p(x[0]) - q(y[0]);
}

void Landscape::field_into(const Vec& z, Vec& out) const {
    const int d = d_;
    if (is_quadratic()) {
        const Vec& a = a_.entries();
        const Vec& l = lam_.entries();
        for (int i = 0; i < d; ++i) {
            double x = z[i], y = z[d + i];
            out[i] = a[i] * x + l[i] * y;
            out[d + i] = -l[i] * x + a[i] * y;
        }
        return;
    }
    double x = z[0], y = z[1];
    out[0] = y + shift_ + dp(x);
    out[1] = -x + dq(y);
}

void Landscape::jacobian_times(const Vec& z, const Vec& v, Vec& out) const {
    const int d = d_;
    if (is_quadratic()) {
        const Vec& a = a_.entries();
        const Vec& l = lam_.entries();
        for (int i = 0; i < d; ++i) {
            double vx = v[i], vy = v[d + i];
            out[i] = a[i] * vx + l[i] * vy;
            out[d + i] = -l[i] * vx + a[i] * vy;
        }
        return;
    }
    double vx = v[0], vy = v[1];
    out[0] = d2p(z[0]) * vx + vy;
    out[1] = -vx + d2q(z[1]) * vy;
}

void Landscape::jacobian_t_times(const Vec& z, const Vec& v, Vec& out) const {
    const int d = d_;
    if (is_quadratic()) {
        const Vec& a = a_.entries();
        const Vec& l = lam_.entries();
        for (int i = 0; i < d; ++i) {
            double vx = v[i], vy = v[d + i];
            out[i] = a[i] * vx - l[i] * vy;
            out[d + i] = l[i] * vx + a[i] * vy;
        }
        return;
    }
    double vx = v[0], vy = v[1];
    out[0] = d2p(z[0]) * vx - vy;
    out[1] = vx + d2q(z[1]) * vy;
}

StateVector Landscape::field(const StateVector& s) const {
    check_dim(s);
    Vec out(2 * d_);
    field_into(s.z(), out);
    return StateVector(std::move(out));
}

SquareMatrix Landscape::field_jacobian(const StateVector& s) const {
    check_dim(s);
    const int d = d_;
    SquareMatrix j = SquareMatrix::Zero(2 * d, 2 * d);
    if (is_quadratic()) {
        for (int i = 0; i < d; ++i) {
            j(i, i) = a_[i];
            j(i, d + i) = lam_[i];
            j(d + i, i) = -lam_[i];
            j(d + i, d + i) = a_[i];
        }
        return j;
    }
    j << d2p(s.x()[0]), 1.0, -1.0, d2q(s.y()[0]);
    return j;
}

SquareMatrix Landscape::hessian(const StateVector& s) const {
    check_dim(s);
    const int d = d_;
    SquareMatrix h = SquareMatrix::Zero(2 * d, 2 * d);
    if (is_quadratic()) {
        for (int i = 0; i < d; ++i) {
            h(i, i) = a_[i];
            h(i, d + i) = lam_[i];
            h(d + i, i) = lam_[i];
            h(d + i, d + i) = -a_[i];
        }
        return h;
    }
    h << d2p(s.x()[0]), 1.0, 1.0, -d2q(s.y()[0]);
    return h;
}

double Landscape::hamiltonian(const StateVector& s) const {
    return field(s).half_sq_norm();
}

StateVector Landscape::hamiltonian_gradient(const StateVector& s) const {
    check_dim(s);
    Vec f(2 * d_), g(2 * d_);
    field_into(s.z(), f);
    jacobian_t_times(s.z(), f, g);
    return StateVector(std::move(g));
}

void Landscape::draw_tag_into(RngStream& rng, SampleTag& tag) const {
    tag.owner = id_;
    tag.kind = noise_.kind;
    const int d = d_;
    switch (noise_.kind) {
        case NoiseKind::None:
            tag.draw.resize(0);
            return;
        case NoiseKind::AdditiveGradient: {
            tag.draw.resize(2 * d);
            const Vec& s = noise_.sigma.entries();
            core::fill_gaussian(rng, 1.0, tag.draw);
            for (int i = 0; i < d; ++i) {
                tag.draw[i] *= s[i];
                tag.draw[d + i] *= -s[i];
            }
            return;
        }
        case NoiseKind::MatrixEntry: {
            tag.draw.resize(d);
            core::fill_gaussian(rng, 1.0, tag.draw);
            tag.draw.array() *= noise_.sigma.entries().array();
            return;
        }
    }
}

void Landscape::sampled_field_into(const Vec& z, const SampleTag& tag, Vec& out) const {
    switch (noise_.kind) {
        case NoiseKind::None:
            field_into(z, out);
            return;
        case NoiseKind::AdditiveGradient:
            field_into(z, out);
            out += tag.draw;
            return;
        case NoiseKind::MatrixEntry: {
            const int d = d_;
            const Vec& l = lam_.entries();
            for (int i = 0; i < d; ++i) {
                double li = l[i] + tag.draw[i];
                out[i] = li * z[d + i];
                out[d + i] = -li * z[i];
            }
            return;
        }
    }
}

void Landscape::sampled_jacobian_t_times(const Vec& z, const SampleTag& tag, const Vec& v, Vec& out) const {
    if (noise_.kind != NoiseKind::MatrixEntry) {
        jacobian_t_times(z, v, out);
        return;
    }
    const int d = d_;
    const Vec& l = lam_.entries();
    for (int i = 0; i < d; ++i) {
        double li = l[i] + tag.draw[i];
        out[i] = -li * v[d + i];
        out[d + i] = li * v[i];
    }
}

std::pair<StateVector, SampleTag> Landscape::sample_field(const StateVector& s, RngStream& rng) const {
    check_dim(s);
    SampleTag tag;
    draw_tag_into(rng, tag);
    Vec out(2 * d_);
    sampled_field_into(s.z(), tag, out);
    return {StateVector(std::move(out)), std::move(tag)};
}

StateVector Landscape::sample_field_at(const StateVector& s, const SampleTag& tag) const {
    check_dim(s);
    check_tag(tag);
    Vec out(2 * d_);
    sampled_field_into(s.z(), tag, out);
    return StateVector(std::move(out));
}

SquareMatrix Landscape::sample_field_jacobian(const StateVector& s, const SampleTag& tag) const {
    check_tag(tag);
    if (noise_.kind != NoiseKind::MatrixEntry) return field_jacobian(s);
    check_dim(s);
    const int d = d_;
    SquareMatrix j = SquareMatrix::Zero(2 * d, 2 * d);
    for (int i = 0; i < d; ++i) {
        double li = lam_[i] + tag.draw[i];
        j(i, d + i) = li;
        j(d + i, i) = -li;
    }
    return j;
}

}  // namespace saddlelab::landscapes

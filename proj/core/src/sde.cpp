#include "saddlelab/sde.hpp"

#include <cmath>

namespace saddlelab::sde {

using landscapes::NoiseKind;

const char* to_string(SdeLabel l) {
    switch (l) {
        case SdeLabel::SgdaSde: return "SgdaSde";
        case SdeLabel::SegSde: return "SegSde";
        case SdeLabel::SegSmallRhoSde: return "SegSmallRhoSde";
        case SdeLabel::ShgdSde: return "ShgdSde";
    }
    return "?";
}

SdeModel::SdeModel(SdeLabel label, int d, double eta, double rho, Sampling sampling, DriftFn drift,
                   DiffusionFn diffusion, bool state_dependent_diffusion)
    : label_(label),
      d_(d),
      eta_(eta),
      rho_(rho),
      sampling_(sampling),
      drift_(std::move(drift)),
      diffusion_(std::move(diffusion)),
      state_dependent_(state_dependent_diffusion) {}

void SdeModel::drift_into(const Vec& z, double t, Vec& out) const {
    if (!time_dependent()) {
        drift_(z, rho_, out);
        return;
    }
    drift_(z, rho_ * rho_sched_(t), out);
    out *= eta_sched_(t);
}

void SdeModel::diffusion_into(const Vec& z, double t, Mat& out) const {
    if (!time_dependent()) {
        diffusion_(z, rho_, out);
        return;
    }
    diffusion_(z, rho_ * rho_sched_(t), out);
    out *= eta_sched_(t);
}

StateVector SdeModel::drift(const StateVector& z, double t) const {
    if (z.dim() != d_) throw Error(ErrorKind::InvalidDimension, "state dimension does not match SDE");
    Vec out(2 * d_);
    drift_into(z.z(), t, out);
    return StateVector(std::move(out));
}

SquareMatrix SdeModel::diffusion(const StateVector& z, double t) const {
    if (z.dim() != d_) throw Error(ErrorKind::InvalidDimension, "state dimension does not match SDE");
    Mat out = Mat::Zero(2 * d_, 2 * d_);
    diffusion_into(z.z(), t, out);
    return out;
}

SdeModel SdeModel::with_label(SdeLabel l) const {
    SdeModel m = *this;
    m.label_ = l;
    return m;
}

SdeModel SdeModel::with_schedulers(Scheduler eta_sched, Scheduler rho_sched) const {
    SdeModel m = *this;
    m.eta_sched_ = eta_sched;
    m.rho_sched_ = rho_sched;
    return m;
}

namespace {

void require_eta(double eta) {
    if (!(eta > 0.0) || !std::isfinite(eta)) throw Error(ErrorKind::InvalidInput, "eta must be > 0");
}

// Symmetric square root of the PSD 2x2 matrix [[a, b], [b, c]].
void sqrt2(double a, double b, double c, double& s00, double& s01, double& s11) {
    double det = std::max(a * c - b * b, 0.0);
    double s = std::sqrt(det);
    double tr = a + c + 2.0 * s;
    if (!(tr > 0.0)) {
        s00 = s01 = s11 = 0.0;
        return;
    }
    double t = std::sqrt(tr);
    s00 = (a + s) / t;
    s01 = b / t;
    s11 = (c + s) / t;
}

// Writes sqrt(k) * u u^T / |u| into the (i, d+i) block; the PSD root of k u u^T.
void rank_one_root(Mat& out, int d, int i, double k, double ux, double uy) {
    double n = std::sqrt(ux * ux + uy * uy);
    double c = n > 0.0 ? std::sqrt(std::max(k, 0.0)) / n : 0.0;
    out(i, i) = c * ux * ux;
    out(i, d + i) = c * ux * uy;
    out(d + i, i) = c * ux * uy;
    out(d + i, d + i) = c * uy * uy;
}

// 2x2 covariance of one coordinate pair of the SEG direction under entry noise on Lambda.
void seg_entry_cov(double lam, double s2, double rho, Sampling sampling, double x, double y, double& c00,
                   double& c01, double& c11) {
    if (sampling == Sampling::IndependentSample) {
        // direction = l1 * w(l2), w = (y + rho l2 x, -x + rho l2 y)
        double w0 = y + rho * lam * x, w1 = -x + rho * lam * y;
        double k = (lam * lam + s2) * rho * rho * s2;
        c00 = s2 * w0 * w0 + k * x * x;
        c01 = s2 * w0 * w1 + k * x * y;
        c11 = s2 * w1 * w1 + k * y * y;
        return;
    }
    // direction = l p + l^2 q, p = (y, -x), q = rho (x, y)
    double p0 = y, p1 = -x, q0 = rho * x, q1 = rho * y;
    double vl = s2, vl2 = 4.0 * lam * lam * s2 + 2.0 * s2 * s2, cv = 2.0 * lam * s2;
    c00 = vl * p0 * p0 + vl2 * q0 * q0 + 2.0 * cv * p0 * q0;
    c01 = vl * p0 * p1 + vl2 * q0 * q1 + cv * (p0 * q1 + q0 * p1);
    c11 = vl * p1 * p1 + vl2 * q1 * q1 + 2.0 * cv * p1 * q1;
}

double shgd_entry_factor(double lam, double s2, Sampling sampling) {
    return sampling == Sampling::IndependentSample ? 2.0 * lam * lam * s2 + s2 * s2
                                                   : 4.0 * lam * lam * s2 + 2.0 * s2 * s2;
}

Mat sigma_diag(const Landscape& l) {
    const int d = l.dim();
    Mat s = Mat::Zero(2 * d, 2 * d);
    if (l.noise().kind == NoiseKind::AdditiveGradient) {
        const Vec& sg = l.noise().sigma.entries();
        for (int i = 0; i < d; ++i) {
            s(i, i) = sg[i] * sg[i];
            s(d + i, d + i) = sg[i] * sg[i];
        }
    }
    return s;
}

void check(const Landscape& l, const StateVector& z) {
    if (z.dim() != l.dim()) throw Error(ErrorKind::InvalidDimension, "state dimension does not match landscape");
}

void sgda_drift(const Landscape& l, const Vec& z, Vec& out) {
    l.field_into(z, out);
    out = -out;
}

void sgda_diffusion(const Landscape& l, double eta, const Mat& root, const Vec& z, Mat& out) {
    if (l.noise().kind != NoiseKind::MatrixEntry) {
        out = root;
        return;
    }
    const int d = l.dim();
    out.setZero(2 * d, 2 * d);
    const Vec& sg = l.noise().sigma.entries();
    for (int i = 0; i < d; ++i) rank_one_root(out, d, i, eta * sg[i] * sg[i], z[d + i], -z[i]);
}

}  // namespace

SquareMatrix sgda_covariance(const Landscape& l, const StateVector& s) {
    check(l, s);
    const int d = l.dim();
    if (l.noise().kind != NoiseKind::MatrixEntry) return sigma_diag(l);
    Mat c = Mat::Zero(2 * d, 2 * d);
    const Vec& sg = l.noise().sigma.entries();
    for (int i = 0; i < d; ++i) {
        double x = s.x()[i], y = s.y()[i], s2 = sg[i] * sg[i];
        c(i, i) = s2 * y * y;
        c(i, d + i) = c(d + i, i) = -s2 * x * y;
        c(d + i, d + i) = s2 * x * x;
    }
    return c;
}

SquareMatrix seg_covariance(const Landscape& l, const StateVector& s, double rho, Sampling sampling) {
    check(l, s);
    const int d = l.dim();
    switch (l.noise().kind) {
        case NoiseKind::None: return Mat::Zero(2 * d, 2 * d);
        case NoiseKind::AdditiveGradient: {
            Mat sig = sigma_diag(l);
            if (sampling == Sampling::IndependentSample) return sig;
            Mat b = Mat::Identity(2 * d, 2 * d) - rho * l.field_jacobian(s);
            return b * sig * b.transpose();
        }
        case NoiseKind::MatrixEntry: {
            Mat c = Mat::Zero(2 * d, 2 * d);
            const Vec& sg = l.noise().sigma.entries();
            for (int i = 0; i < d; ++i) {
                double c00, c01, c11;
                seg_entry_cov(l.lam()[i], sg[i] * sg[i], rho, sampling, s.x()[i], s.y()[i], c00, c01, c11);
                c(i, i) = c00;
                c(i, d + i) = c(d + i, i) = c01;
                c(d + i, d + i) = c11;
            }
            return c;
        }
    }
    return {};
}

SquareMatrix shgd_covariance(const Landscape& l, const StateVector& s, Sampling sampling) {
    check(l, s);
    const int d = l.dim();
    switch (l.noise().kind) {
        case NoiseKind::None: return Mat::Zero(2 * d, 2 * d);
        case NoiseKind::AdditiveGradient: {
            Mat h = l.hessian(s);
            Mat c = h * sigma_diag(l) * h;
            return sampling == Sampling::SameSample ? c : Mat(0.5 * c);
        }
        case NoiseKind::MatrixEntry: {
            Mat c = Mat::Zero(2 * d, 2 * d);
            const Vec& sg = l.noise().sigma.entries();
            for (int i = 0; i < d; ++i) {
                double k = shgd_entry_factor(l.lam()[i], sg[i] * sg[i], sampling);
                double x = s.x()[i], y = s.y()[i];
                c(i, i) = k * x * x;
                c(i, d + i) = c(d + i, i) = k * x * y;
                c(d + i, d + i) = k * y * y;
            }
            return c;
        }
    }
    return {};
}

namespace {

void seg_drift(const Landscape& l, const Vec& z, double rho, Sampling sampling, Vec& f, Vec& out) {
    l.field_into(z, f);
    if (rho == 0.0) {
        out = -f;
        return;
    }
    if (l.noise().kind == NoiseKind::MatrixEntry && sampling == Sampling::SameSample) {
        // E[grad F_xi F_xi] = -(lam^2 + sigma^2) (x, y)
        const int d = l.dim();
        const Vec& sg = l.noise().sigma.entries();
        for (int i = 0; i < d; ++i) {
            double m = l.lam()[i] * l.lam()[i] + sg[i] * sg[i];
            out[i] = -(f[i] + rho * m * z[i]);
            out[d + i] = -(f[d + i] + rho * m * z[d + i]);
        }
        return;
    }
    l.jacobian_times(z, f, out);
    out = -(f - rho * out);
}

void shgd_drift(const Landscape& l, const Vec& z, Sampling sampling, Vec& f, Vec& out) {
    if (l.noise().kind == NoiseKind::MatrixEntry) {
        const int d = l.dim();
        const Vec& sg = l.noise().sigma.entries();
        for (int i = 0; i < d; ++i) {
            double m = l.lam()[i] * l.lam()[i] + (sampling == Sampling::SameSample ? sg[i] * sg[i] : 0.0);
            out[i] = -m * z[i];
            out[d + i] = -m * z[d + i];
        }
        return;
    }
    l.field_into(z, f);
    l.jacobian_t_times(z, f, out);
    out = -out;
}

}  // namespace

StateVector seg_drift_field(const Landscape& l, const StateVector& s, double rho, Sampling sampling) {
    check(l, s);
    Vec f(2 * l.dim()), out(2 * l.dim());
    seg_drift(l, s.z(), rho, sampling, f, out);
    return StateVector(Vec(-out));
}

StateVector shgd_drift_field(const Landscape& l, const StateVector& s, Sampling sampling) {
    check(l, s);
    Vec f(2 * l.dim()), out(2 * l.dim());
    shgd_drift(l, s.z(), sampling, f, out);
    return StateVector(Vec(-out));
}

SdeModel build_sgda_sde(const Landscape& l, double eta) {
    require_eta(eta);
    Mat root = core::psd_sqrt(eta * sigma_diag(l));
    auto drift = [l](const Vec& z, double, Vec& out) { sgda_drift(l, z, out); };
    auto diff = [l, eta, root](const Vec& z, double, Mat& out) { sgda_diffusion(l, eta, root, z, out); };
    return SdeModel(SdeLabel::SgdaSde, l.dim(), eta, 0.0, Sampling::SameSample, drift, diff,
                    l.noise().kind == NoiseKind::MatrixEntry);
}

SdeModel build_seg_sde(const Landscape& l, double eta, double rho, Sampling sampling) {
    require_eta(eta);
    if (!std::isfinite(rho)) throw Error(ErrorKind::InvalidInput, "rho must be finite");
    const int d = l.dim();
    Mat root = core::psd_sqrt(eta * sigma_diag(l));
    auto drift = [l, sampling](const Vec& z, double r, Vec& out) {
        thread_local Vec f;
        f.resize(z.size());
        seg_drift(l, z, r, sampling, f, out);
    };
    auto diff = [l, eta, root, sampling](const Vec& z, double r, Mat& out) {
        if (r == 0.0) {
            sgda_diffusion(l, eta, root, z, out);
            return;
        }
        const int d = l.dim();
        switch (l.noise().kind) {
            case NoiseKind::None:
                out.setZero(2 * d, 2 * d);
                return;
            case NoiseKind::AdditiveGradient:
                if (sampling == Sampling::IndependentSample) {
                    out = root;
                } else {
                    out = root - r * (l.field_jacobian(StateVector(z)) * root);
                }
                return;
            case NoiseKind::MatrixEntry: {
                out.setZero(2 * d, 2 * d);
                const Vec& sg = l.noise().sigma.entries();
                for (int i = 0; i < d; ++i) {
                    double c00, c01, c11, s00, s01, s11;
                    seg_entry_cov(l.lam()[i], sg[i] * sg[i], r, sampling, z[i], z[d + i], c00, c01, c11);
                    sqrt2(eta * c00, eta * c01, eta * c11, s00, s01, s11);
                    out(i, i) = s00;
                    out(i, d + i) = out(d + i, i) = s01;
                    out(d + i, d + i) = s11;
                }
                return;
            }
        }
    };
    bool state_dep = l.noise().kind == NoiseKind::MatrixEntry ||
                     (l.noise().kind == NoiseKind::AdditiveGradient && sampling == Sampling::SameSample &&
                      !l.is_quadratic());
    return SdeModel(SdeLabel::SegSde, d, eta, rho, sampling, drift, diff, state_dep);
}

SdeModel build_seg_small_rho_sde(const Landscape& l, double eta) {
    return build_sgda_sde(l, eta).with_label(SdeLabel::SegSmallRhoSde);
}

SdeModel build_shgd_sde(const Landscape& l, double eta, Sampling sampling) {
    require_eta(eta);
    const int d = l.dim();
    Mat sqrt_sigma = core::psd_sqrt(sigma_diag(l));
    const double factor = std::sqrt(sampling == Sampling::SameSample ? eta : 0.5 * eta);
    auto drift = [l, sampling](const Vec& z, double, Vec& out) {
        thread_local Vec f;
        f.resize(z.size());
        shgd_drift(l, z, sampling, f, out);
    };
    auto diff = [l, eta, sampling, factor, sqrt_sigma](const Vec& z, double, Mat& out) {
        const int d = l.dim();
        switch (l.noise().kind) {
            case NoiseKind::None:
                out.setZero(2 * d, 2 * d);
                return;
            case NoiseKind::AdditiveGradient:
                out = factor * (l.hessian(StateVector(z)) * sqrt_sigma);
                return;
            case NoiseKind::MatrixEntry: {
                out.setZero(2 * d, 2 * d);
                const Vec& sg = l.noise().sigma.entries();
                for (int i = 0; i < d; ++i) {
                    double k = shgd_entry_factor(l.lam()[i], sg[i] * sg[i], sampling);
                    rank_one_root(out, d, i, eta * k, z[i], z[d + i]);
                }
                return;
            }
        }
    };
    bool state_dep = l.noise().kind == NoiseKind::MatrixEntry ||
                     (l.noise().kind == NoiseKind::AdditiveGradient && !l.is_quadratic());
    return SdeModel(SdeLabel::ShgdSde, d, eta, 0.0, sampling, drift, diff, state_dep);
}

SdeModel scheduled_sde(const SdeModel& m, Scheduler eta_sched, Scheduler rho_sched) {
    return m.with_schedulers(eta_sched, rho_sched);
}

Trajectory euler_maruyama(const SdeModel& m, const StateVector& z0, double dt, long steps, RngStream& rng,
                          long record_every) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorKind::InvalidInput, "dt must be > 0");
    if (steps < 1) throw Error(ErrorKind::InvalidInput, "steps must be >= 1");
    if (record_every < 1) throw Error(ErrorKind::InvalidInput, "record_every must be >= 1");
    if (z0.dim() != m.dim()) throw Error(ErrorKind::InvalidDimension, "initial point does not match SDE");
    const int n = 2 * m.dim();
    const double sq = std::sqrt(dt);
    // With a state-independent diffusion and constant rho schedule the coefficient is
    // its t = 0 value times eta_sched(t), so it is built once.
    const bool fixed = !m.state_dependent_diffusion() && m.rho_sched().is_constant();
    const bool scaled = fixed && !m.eta_sched().is_constant();
    Vec z = z0.z(), b(n), g(n), inc(n);
    Mat s = Mat::Zero(n, n);
    if (fixed) m.diffusion_into(z, 0.0, s);
    // A diagonal coefficient skips the dense product; the dropped terms are exact zeros.
    const bool diag = fixed && s.isDiagonal(0.0);
    const Vec sd = s.diagonal();

    Trajectory tr;
    const long n_rec = steps / record_every + 2;
    tr.states.reserve(n_rec);
    tr.step_times.reserve(n_rec);
    tr.step_index.reserve(n_rec);
    tr.states.push_back(z0);
    tr.step_times.push_back(0.0);
    tr.step_index.push_back(0);
    for (long k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        m.drift_into(z, t, b);
        if (!fixed) m.diffusion_into(z, t, s);
        core::fill_gaussian(rng, 1.0, g);
        if (diag)
            inc = sd.cwiseProduct(g);
        else
            inc.noalias() = s * g;
        z += dt * b + (scaled ? sq * m.eta_sched()(t) : sq) * inc;
        const long kk = k + 1;
        if (optimizers::diverged(z)) {
            tr.diverged_at = kk;
            break;
        }
        if (kk % record_every == 0 || kk == steps) {
            tr.states.emplace_back(z);
            tr.step_times.push_back(static_cast<double>(kk) * dt);
            tr.step_index.push_back(kk);
        }
    }
    return tr;
}

}  // namespace saddlelab::sde

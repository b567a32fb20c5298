#include "saddlelab/analytic.hpp"

#include "saddlelab/sde.hpp"

#include <boost/math/tools/minima.hpp>

#include <cmath>
#include <limits>
#include <numeric>

namespace saddlelab::analytic {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_dims(const DiagMatrix& lam, const DiagMatrix& sigma, const StateVector& z0) {
    if (lam.dim() != sigma.dim() || z0.dim() != lam.dim())
        throw Error(ErrorKind::InvalidDimension, "lambda, sigma and z0 must share d");
}

void require_time(double t) {
    if (!(t >= 0.0)) throw Error(ErrorKind::InvalidInput, "t must be >= 0");
}

double half_sq(const StateVector& z, int i) {
    double x = z.x()[i], y = z.y()[i];
    return 0.5 * (x * x + y * y);
}

// 1 - e^{-k t}, accurate for small k t and exact at t = infinity.
double one_minus_exp(double k, double t) {
    if (std::isinf(t)) return k > 0 ? 1.0 : -kInf;
    return -std::expm1(-k * t);
}

double decay(double k, double t) {
    if (std::isinf(t)) return k > 0 ? 0.0 : (k == 0 ? 1.0 : kInf);
    return std::exp(-k * t);
}

// int_0^t (s+1)^-g ds
double power_integral(double g, double t) {
    if (g == 0.0) return t;
    if (g == 1.0) return std::log1p(t);
    return (std::pow(1.0 + t, 1.0 - g) - 1.0) / (1.0 - g);
}

}  // namespace

void QuadraticGameParams::validate() const {
    if (a.dim() != lam.dim() || sigma.dim() != lam.dim())
        throw Error(ErrorKind::InvalidDimension, "a, lambda, sigma must share d");
    if ((lam.entries().array() < 0.0).any()) throw Error(ErrorKind::InvalidInput, "lambda must be >= 0");
    if ((sigma.entries().array() < 0.0).any()) throw Error(ErrorKind::InvalidInput, "sigma must be >= 0");
    if (!(eta > 0.0)) throw Error(ErrorKind::InvalidInput, "eta must be > 0");
    if (!std::isfinite(rho)) throw Error(ErrorKind::InvalidInput, "rho must be finite");
}

void BoundParams::validate() const {
    if (mu == 0.0 || !std::isfinite(mu)) throw Error(ErrorKind::InvalidInput, "mu must be non-zero");
    if (!(L_T > 0.0)) throw Error(ErrorKind::InvalidInput, "L_T must be > 0");
    if (!(L_V >= 0.0)) throw Error(ErrorKind::InvalidInput, "L_V must be >= 0");
    if (!(H0 >= 0.0)) throw Error(ErrorKind::InvalidInput, "H0 must be >= 0");
}

double seg_quadratic_exponent(const QuadraticGameParams& p, int i) {
    double a = p.a[i], l = p.lam[i];
    return p.rho * (a * a - l * l) - a;
}

double seg_quadratic_rotation(const QuadraticGameParams& p, int i) {
    return p.lam[i] * (1.0 - 2.0 * p.rho * p.a[i]);
}

double seg_quadratic_B(const QuadraticGameParams& p, int i) {
    double a = p.a[i], l = p.lam[i], r = p.rho;
    double den = 2.0 * (a + r * (l * l - a * a));
    if (!(den > 0.0)) throw Error(ErrorKind::DivergentRegime, "coordinate " + std::to_string(i));
    return ((1.0 - r * a) * (1.0 - r * a) + r * r * l * l) / den;
}

StateVector seg_quadratic_mean(const QuadraticGameParams& p, const StateVector& z0, double t) {
    p.validate();
    require_time(t);
    if (z0.dim() != p.dim()) throw Error(ErrorKind::InvalidDimension, "z0 does not match parameters");
    StateVector out = z0;
    for (int i = 0; i < p.dim(); ++i) {
        double e = std::exp(seg_quadratic_exponent(p, i) * t);
        double th = seg_quadratic_rotation(p, i) * t;
        double c = std::cos(th), s = std::sin(th);
        double x = z0.x()[i], y = z0.y()[i];
        out.x()[i] = e * (c * x - s * y);
        out.y()[i] = e * (s * x + c * y);
    }
    return out;
}

SquareMatrix seg_quadratic_cov(const QuadraticGameParams& p, double t, bool linear_if_sgda_bilinear) {
    p.validate();
    require_time(t);
    const int d = p.dim();
    SquareMatrix c = SquareMatrix::Zero(2 * d, 2 * d);
    for (int i = 0; i < d; ++i) {
        double s2 = p.sigma[i] * p.sigma[i];
        double v;
        if (p.rho == 0.0 && p.a[i] == 0.0) {
            if (!linear_if_sgda_bilinear)
                throw Error(ErrorKind::SgdaBilinearDivergence, "coordinate " + std::to_string(i));
            v = p.eta * s2 * t;
        } else {
            double e = seg_quadratic_exponent(p, i);
            double b = seg_quadratic_B(p, i);
            v = p.eta * s2 * one_minus_exp(-2.0 * e, t) * b;
        }
        c(i, i) = v;
        c(d + i, d + i) = v;
    }
    return c;
}

StateVector shgd_quadratic_mean(const QuadraticGameParams& p, const StateVector& z0, double t) {
    p.validate();
    require_time(t);
    if (z0.dim() != p.dim()) throw Error(ErrorKind::InvalidDimension, "z0 does not match parameters");
    StateVector out = z0;
    for (int i = 0; i < p.dim(); ++i) {
        double e = std::exp(-(p.lam[i] * p.lam[i] + p.a[i] * p.a[i]) * t);
        out.x()[i] *= e;
        out.y()[i] *= e;
    }
    return out;
}

SquareMatrix shgd_quadratic_cov(const QuadraticGameParams& p, double t) {
    p.validate();
    require_time(t);
    const int d = p.dim();
    SquareMatrix c = SquareMatrix::Zero(2 * d, 2 * d);
    for (int i = 0; i < d; ++i) {
        double k = 2.0 * (p.lam[i] * p.lam[i] + p.a[i] * p.a[i]);
        double v = 0.5 * p.eta * p.sigma[i] * p.sigma[i] * (k > 0 ? one_minus_exp(k, t) : 0.0);
        c(i, i) = v;
        c(d + i, d + i) = v;
    }
    return c;
}

std::vector<bool> shgd_stuck_coordinates(const QuadraticGameParams& p) {
    std::vector<bool> out(p.dim());
    for (int i = 0; i < p.dim(); ++i) out[i] = p.lam[i] == 0.0 && p.a[i] == 0.0;
    return out;
}

double expected_half_sq_norm(const StateVector& mean, const SquareMatrix& cov) {
    return mean.half_sq_norm() + 0.5 * cov.trace();
}

double shgd_stochastic_exponent(double lam, double sigma, double eta) {
    double l2 = lam * lam, s2 = sigma * sigma;
    return 2.0 * l2 - eta * s2 * (2.0 * l2 + s2);
}

double seg_stochastic_exponent(double lam, double sigma, double eta, double rho) {
    double l2 = lam * lam, s2 = sigma * sigma;
    return 2.0 * rho * l2 - eta * s2 * (1.0 + rho * rho * (2.0 * l2 + s2));
}

double shgd_norm_stochastic_bilinear(const DiagMatrix& lam, const DiagMatrix& sigma, double eta,
                                     const StateVector& z0, double t) {
    require_dims(lam, sigma, z0);
    require_time(t);
    double s = 0.0;
    for (int i = 0; i < lam.dim(); ++i) s += half_sq(z0, i) * decay(shgd_stochastic_exponent(lam[i], sigma[i], eta), t);
    return s;
}

bool shgd_stochastic_converges(const DiagMatrix& lam, const DiagMatrix& sigma, double eta) {
    for (int i = 0; i < lam.dim(); ++i)
        if (!(shgd_stochastic_exponent(lam[i], sigma[i], eta) > 0.0)) return false;
    return true;
}

double seg_norm_stochastic_bilinear(const DiagMatrix& lam, const DiagMatrix& sigma, double eta, double rho,
                                    const StateVector& z0, double t) {
    require_dims(lam, sigma, z0);
    require_time(t);
    double s = 0.0;
    for (int i = 0; i < lam.dim(); ++i)
        s += half_sq(z0, i) * decay(seg_stochastic_exponent(lam[i], sigma[i], eta, rho), t);
    return s;
}

bool seg_stochastic_converges(const DiagMatrix& lam, const DiagMatrix& sigma, double eta, double rho) {
    for (int i = 0; i < lam.dim(); ++i)
        if (!(seg_stochastic_exponent(lam[i], sigma[i], eta, rho) > 0.0)) return false;
    return true;
}

double shgd_norm_fixed_bilinear(const DiagMatrix& lam, const DiagMatrix& sigma, double eta, const StateVector& z0,
                                double t) {
    require_dims(lam, sigma, z0);
    require_time(t);
    double s = 0.0;
    for (int i = 0; i < lam.dim(); ++i) {
        double k = 2.0 * lam[i] * lam[i];
        double asym = 0.5 * eta * sigma[i] * sigma[i];
        s += half_sq(z0, i) * decay(k, t) + asym * (k > 0 ? one_minus_exp(k, t) : 0.0);
    }
    return s;
}

double seg_norm_fixed_bilinear(const DiagMatrix& lam, const DiagMatrix& sigma, double eta, double rho,
                               const StateVector& z0, double t) {
    require_dims(lam, sigma, z0);
    require_time(t);
    if (!(rho > 0.0)) throw Error(ErrorKind::DivergentRegime, "rho must be > 0 on the bilinear game");
    double s = 0.0;
    for (int i = 0; i < lam.dim(); ++i) {
        double l2 = lam[i] * lam[i];
        if (l2 == 0.0) throw Error(ErrorKind::DivergentRegime, "coordinate " + std::to_string(i) + " has lambda = 0");
        double k = 2.0 * rho * l2;
        double asym = 0.5 * eta * sigma[i] * sigma[i] * (1.0 + rho * rho * l2) / (rho * l2);
        s += half_sq(z0, i) * decay(k, t) + asym * one_minus_exp(k, t);
    }
    return s;
}

double scheduled_norm(AnalyticMethod method, const DiagMatrix& lam, const DiagMatrix& sigma, double eta, double rho,
                      const Scheduler& eta_sched, const Scheduler& rho_sched, const StateVector& z0, double t) {
    require_dims(lam, sigma, z0);
    require_time(t);
    if (!std::isfinite(t)) throw Error(ErrorKind::InvalidInput, "scheduled_norm needs a finite horizon");
    if (!(eta > 0.0)) throw Error(ErrorKind::InvalidInput, "eta must be > 0");
    const double g = eta_sched.exponent();
    if (method == AnalyticMethod::SEG && !(rho > 0.0))
        throw Error(ErrorKind::DivergentRegime, "scheduled SEG needs rho > 0");
    // Exponent of the contraction: integral of eta_s (SHGD) or eta_s rho_s (SEG).
    const double gp = method == AnalyticMethod::SHGD ? g : g + rho_sched.exponent();
    const double It = power_integral(gp, t);
    double s = 0.0;
    for (int i = 0; i < lam.dim(); ++i) {
        const double l2 = lam[i] * lam[i], s2 = sigma[i] * sigma[i];
        const double k = method == AnalyticMethod::SHGD ? 2.0 * l2 : 2.0 * rho * l2;
        double inner = 0.0;
        if (s2 > 0.0) {
            auto integrand = [&](double u) {
                double es = eta_sched(u);
                double w = std::exp(-k * (It - power_integral(gp, u))) * es * es;
                if (method == AnalyticMethod::SHGD) return l2 * w;
                double rs = rho_sched(u);
                return w * (1.0 + l2 * rho * rho * rs * rs);
            };
            inner = integrate(integrand, 0.0, t, 1e-11);
        }
        s += std::exp(-k * It) * half_sq(z0, i) + eta * s2 * inner;
    }
    return s;
}

double shgd_scheduled_inverse_time(const DiagMatrix& lam, const DiagMatrix& sigma, double eta, const StateVector& z0,
                                   double t) {
    require_dims(lam, sigma, z0);
    require_time(t);
    double s = 0.0;
    const double tp = t + 1.0;
    for (int i = 0; i < lam.dim(); ++i) {
        const double l2 = lam[i] * lam[i], s2 = sigma[i] * sigma[i];
        const double h0 = half_sq(z0, i);
        const double k = 2.0 * l2;
        // (tp^{k-1} - 1) / (k - 1), continuous through k = 1 where it becomes log(tp)
        const double lt = std::log(tp);
        const double g = std::abs(k - 1.0) * lt < 1e-300 ? lt : std::expm1((k - 1.0) * lt) / (k - 1.0);
        s += std::pow(tp, -k) * (h0 + eta * s2 * l2 * g);
    }
    return s;
}

bool scheduler_converges(AnalyticMethod method, const Scheduler& eta_sched, const Scheduler& rho_sched) {
    const double g = eta_sched.exponent();
    if (method == AnalyticMethod::SHGD) return g > 0.0 && g <= 1.0;
    const double gr = rho_sched.exponent();
    // int eta rho = inf, eta rho -> 0, eta / rho -> 0
    return g + gr <= 1.0 && g + gr > 0.0 && g > gr;
}

QuadraticPredicate seg_convergence_predicate_quadratic(const QuadraticGameParams& p) {
    QuadraticPredicate out;
    for (int i = 0; i < p.dim(); ++i) {
        double a = p.a[i], l = p.lam[i];
        out.converges.push_back(p.rho * (a * a - l * l) - a < 0.0);
        out.faster_than_sgda.push_back(p.rho * (a * a - l * l) < 0.0);
    }
    return out;
}

namespace {

double trace_B(const QuadraticGameParams& p, double rho) {
    QuadraticGameParams q = p;
    q.rho = rho;
    double s = 0.0;
    for (int i = 0; i < q.dim(); ++i) s += seg_quadratic_B(q, i);
    return s;
}

double trace_minimizer(const QuadraticGameParams& p) {
    double lo = -kInf, hi = kInf;
    for (int i = 0; i < p.dim(); ++i) {
        double a = p.a[i], l = p.lam[i], c = l * l - a * a;
        // need a + rho c > 0
        if (c > 0) lo = std::max(lo, -a / c);
        else if (c < 0) hi = std::min(hi, -a / c);
        else if (!(a > 0)) throw Error(ErrorKind::Degenerate, "coordinate " + std::to_string(i));
    }
    if (!(lo < hi)) throw Error(ErrorKind::Degenerate, "no extrapolation step converges on every coordinate");
    double m;
    if (std::isfinite(lo) && std::isfinite(hi)) m = 0.5 * (lo + hi);
    else if (std::isfinite(lo)) m = lo + 1.0;
    else if (std::isfinite(hi)) m = hi - 1.0;
    else m = 0.0;
    auto f = [&](double r) { return trace_B(p, r); };
    const double fm = f(m);
    double left = lo, right = hi;
    if (!std::isfinite(left)) {
        double s = 1.0;
        while (f(m - s) <= fm) s *= 2.0;
        left = m - s;
    }
    if (!std::isfinite(right)) {
        double s = 1.0;
        while (f(m + s) <= fm) s *= 2.0;
        right = m + s;
    }
    // Endpoints may sit on the divergence boundary; the minimizer only samples the interior.
    double width = right - left;
    left += 1e-12 * width;
    right -= 1e-12 * width;
    auto r = boost::math::tools::brent_find_minima(f, left, right, std::numeric_limits<double>::digits / 2);
    return r.first;
}

}  // namespace

Vec optimal_rho(const QuadraticGameParams& p, RhoObjective objective) {
    p.validate();
    const int d = p.dim();
    switch (objective) {
        case RhoObjective::PerCoordinateVariance: {
            Vec r(d);
            for (int i = 0; i < d; ++i) {
                double s = p.a[i] + p.lam[i];
                if (s == 0.0) throw Error(ErrorKind::Degenerate, "coordinate " + std::to_string(i));
                r[i] = 1.0 / s;
            }
            return r;
        }
        case RhoObjective::MatchShgdDecay: {
            Vec r(d);
            for (int i = 0; i < d; ++i) {
                double a = p.a[i], l = p.lam[i], den = l * l - a * a;
                if (den == 0.0) throw Error(ErrorKind::Degenerate, "coordinate " + std::to_string(i));
                r[i] = (a * a + l * l - a) / den;
            }
            return r;
        }
        case RhoObjective::TraceVariance: {
            Vec r(1);
            if (p.a.is_zero()) {
                double s = 0.0;
                for (int i = 0; i < d; ++i) {
                    if (p.lam[i] == 0.0) throw Error(ErrorKind::Degenerate, "coordinate " + std::to_string(i));
                    s += 1.0 / (p.lam[i] * p.lam[i]);
                }
                r[0] = std::sqrt(s / d);
            } else {
                r[0] = trace_minimizer(p);
            }
            return r;
        }
    }
    return {};
}

double hamiltonian_bound(const BoundParams& b, BoundRegime regime, double eta, double t) {
    b.validate();
    require_time(t);
    if (!(eta > 0.0)) throw Error(ErrorKind::InvalidInput, "eta must be > 0");
    if (t == 0.0) return b.H0;
    const double m2 = 2.0 * b.mu * b.mu;
    const double c = eta * b.L_V * b.L_T;
    switch (regime) {
        case BoundRegime::Scaling:
            return b.H0 * decay(m2 - c, t);
        case BoundRegime::Bounded:
            return b.H0 * decay(m2, t) + one_minus_exp(m2, t) * c / m2;
        case BoundRegime::GeneralAlpha: {
            if (b.alpha == 1.0)
                throw Error(ErrorKind::InvalidInput, "alpha = 1 is the Scaling regime");
            const double al = b.alpha;
            // u = r^(1-alpha) solves a linear ODE: u_t = c/m2 + (u_0 - c/m2) e^{(alpha-1) m2 t}
            const double u0 = std::pow(b.H0, 1.0 - al);
            double e = std::isinf(t) ? 0.0 : std::exp((al - 1.0) * m2 * t);
            if (std::isinf(t) && al > 1.0) e = kInf;
            double u = c / m2 + (u0 - c / m2) * e;
            if (std::isinf(u0)) u = kInf;
            if (u <= 0.0) return kInf;
            return std::pow(u, 1.0 / (1.0 - al));
        }
    }
    return kInf;
}

double seg_mu_rho(const Landscape& l, double rho, const StateVector& z) {
    const int d = l.dim();
    SquareMatrix h = l.hessian(z);
    Mat hxx = h.topLeftCorner(d, d), hxy = h.topRightCorner(d, d), hyy = h.bottomRightCorner(d, d);
    Mat cross = hxy * hxy.transpose();
    Mat m11 = hxx + rho * (cross - hxx * hxx);
    Mat m22 = -hyy + rho * (cross - hyy * hyy);
    Eigen::SelfAdjointEigenSolver<Mat> e1(0.5 * (m11 + m11.transpose()), Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<Mat> e2(0.5 * (m22 + m22.transpose()), Eigen::EigenvaluesOnly);
    return std::min(e1.eigenvalues().cwiseAbs().minCoeff(), e2.eigenvalues().cwiseAbs().minCoeff());
}

SquareMatrix hamiltonian_hessian(const Landscape& l, const StateVector& z) {
    if (l.is_quadratic()) {
        SquareMatrix j = l.field_jacobian(z);
        return j.transpose() * j;
    }
    const int n = 2 * l.dim();
    const double h = 1e-5;
    SquareMatrix out(n, n);
    for (int k = 0; k < n; ++k) {
        Vec zp = z.z(), zm = z.z();
        zp[k] += h;
        zm[k] -= h;
        out.col(k) = (l.hamiltonian_gradient(StateVector(zp)).z() - l.hamiltonian_gradient(StateVector(zm)).z()) /
                     (2.0 * h);
    }
    return 0.5 * (out + out.transpose());
}

std::vector<double> hamiltonian_ode_terms(AnalyticMethod method, const Landscape& l, double eta, double rho,
                                          const std::vector<StateVector>& z_samples, Sampling sampling) {
    if (z_samples.empty()) throw Error(ErrorKind::InvalidInput, "need at least one state sample");
    std::vector<double> out;
    out.reserve(z_samples.size());
    for (const auto& z : z_samples) {
        Vec gh = l.hamiltonian_gradient(z).z();
        SquareMatrix h2 = hamiltonian_hessian(l, z);
        double drift, noise;
        if (method == AnalyticMethod::SHGD) {
            drift = -gh.dot(sde::shgd_drift_field(l, z, sampling).z());
            noise = (sde::shgd_covariance(l, z, sampling) * h2).trace();
        } else {
            drift = -gh.dot(sde::seg_drift_field(l, z, rho, sampling).z());
            noise = (sde::seg_covariance(l, z, rho, sampling) * h2).trace();
        }
        out.push_back(drift + 0.5 * eta * noise);
    }
    return out;
}

double hamiltonian_ode_rhs(AnalyticMethod method, const Landscape& l, double eta, double rho,
                           const std::vector<StateVector>& z_samples, Sampling sampling) {
    auto v = hamiltonian_ode_terms(method, l, eta, rho, z_samples, sampling);
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace saddlelab::analytic

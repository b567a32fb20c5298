#include "saddlelab/optimizers.hpp"

#include <cmath>

namespace saddlelab::optimizers {

Scheduler Scheduler::power_law(double gamma) {
    if (!(gamma >= 0.0) || !std::isfinite(gamma))
        throw Error(ErrorKind::InvalidInput, "power-law exponent must be finite and >= 0");
    return {Kind::PowerLaw, gamma};
}

double Scheduler::operator()(double t) const {
    if (kind == Kind::Constant || gamma == 0.0) return 1.0;
    return std::pow(t + 1.0, -gamma);
}

const char* to_string(Method m) {
    switch (m) {
        case Method::SGDA: return "SGDA";
        case Method::SEG: return "SEG";
        case Method::SHGD: return "SHGD";
    }
    return "?";
}

const char* to_string(Sampling s) {
    return s == Sampling::SameSample ? "same" : "independent";
}

void OptimizerConfig::validate(int d) const {
    if (!(eta > 0.0) || !std::isfinite(eta)) throw Error(ErrorKind::InvalidInput, "eta must be > 0");
    if (!std::isfinite(rho)) throw Error(ErrorKind::InvalidInput, "rho must be finite");
    if (eta_coords.size() != 0) {
        if (method != Method::SGDA)
            throw Error(ErrorKind::InvalidInput, "coordinate-wise stepsizes are supported for SGDA only");
        if (eta_coords.size() != 2 * d)
            throw Error(ErrorKind::InvalidDimension, "coordinate-wise stepsizes need length 2d");
        if ((eta_coords.array() <= 0.0).any())
            throw Error(ErrorKind::InvalidInput, "coordinate-wise stepsizes must be > 0");
    }
}

bool diverged(const Vec& z) {
    for (Eigen::Index i = 0; i < z.size(); ++i)
        if (!(std::abs(z[i]) <= kDivergenceThreshold)) return true;
    return false;
}

Stepper::Stepper(const Landscape& l, const OptimizerConfig& cfg) : l_(l), cfg_(cfg) {
    cfg_.validate(l.dim());
    const int n = 2 * l.dim();
    f1_.resize(n);
    f2_.resize(n);
    zt_.resize(n);
    g1_.resize(n);
    g2_.resize(n);
}

void Stepper::step(Vec& z, double eta_k, double rho_k, RngStream& rng) {
    switch (cfg_.method) {
        case Method::SGDA:
            l_.draw_tag_into(rng, t1_);
            l_.sampled_field_into(z, t1_, f1_);
            if (cfg_.eta_coords.size() != 0)
                z.array() -= (eta_k / cfg_.eta) * cfg_.eta_coords.array() * f1_.array();
            else
                z.noalias() -= eta_k * f1_;
            return;
        case Method::SEG:
            if (rho_k == 0.0) {
                l_.draw_tag_into(rng, t1_);
                l_.sampled_field_into(z, t1_, f1_);
                z.noalias() -= eta_k * f1_;
                return;
            }
            l_.draw_tag_into(rng, t2_);
            l_.sampled_field_into(z, t2_, f2_);
            zt_ = z - rho_k * f2_;
            if (cfg_.sampling == Sampling::SameSample) {
                l_.sampled_field_into(zt_, t2_, f1_);
            } else {
                l_.draw_tag_into(rng, t1_);
                l_.sampled_field_into(zt_, t1_, f1_);
            }
            z.noalias() -= eta_k * f1_;
            return;
        case Method::SHGD:
            l_.draw_tag_into(rng, t1_);
            l_.sampled_field_into(z, t1_, f1_);
            if (cfg_.sampling == Sampling::SameSample) {
                l_.sampled_jacobian_t_times(z, t1_, f1_, g1_);
                z.noalias() -= eta_k * g1_;
                return;
            }
            l_.draw_tag_into(rng, t2_);
            l_.sampled_field_into(z, t2_, f2_);
            l_.sampled_jacobian_t_times(z, t1_, f2_, g1_);
            l_.sampled_jacobian_t_times(z, t2_, f1_, g2_);
            z.noalias() -= (0.5 * eta_k) * (g1_ + g2_);
            return;
    }
}

namespace {

StateVector single_step(const Landscape& l, const StateVector& z, OptimizerConfig cfg, double eta_k, double rho_k,
                        RngStream& rng) {
    if (!(eta_k > 0.0)) throw Error(ErrorKind::InvalidInput, "step size must be > 0");
    if (z.dim() != l.dim()) throw Error(ErrorKind::InvalidDimension, "state dimension does not match landscape");
    cfg.eta = eta_k;
    Stepper s(l, cfg);
    Vec v = z.z();
    s.step(v, eta_k, rho_k, rng);
    if (!v.allFinite()) throw Error(ErrorKind::DivergenceDetected, "non-finite state after one step");
    return StateVector(std::move(v));
}

}  // namespace

StateVector sgda_step(const Landscape& l, const StateVector& z, double eta_k, RngStream& rng) {
    OptimizerConfig c;
    c.method = Method::SGDA;
    return single_step(l, z, c, eta_k, 0.0, rng);
}

StateVector seg_step(const Landscape& l, const StateVector& z, double eta_k, double rho_k, Sampling sampling,
                     RngStream& rng) {
    OptimizerConfig c;
    c.method = Method::SEG;
    c.sampling = sampling;
    return single_step(l, z, c, eta_k, rho_k, rng);
}

StateVector shgd_step(const Landscape& l, const StateVector& z, double eta_k, Sampling sampling, RngStream& rng) {
    OptimizerConfig c;
    c.method = Method::SHGD;
    c.sampling = sampling;
    return single_step(l, z, c, eta_k, 0.0, rng);
}

Trajectory run_optimizer(const Landscape& l, const OptimizerConfig& cfg, const StateVector& z0, long steps,
                         RngStream& rng, long record_every) {
    if (steps < 1) throw Error(ErrorKind::InvalidInput, "steps must be >= 1");
    if (record_every < 1) throw Error(ErrorKind::InvalidInput, "record_every must be >= 1");
    if (z0.dim() != l.dim()) throw Error(ErrorKind::InvalidDimension, "initial point does not match landscape");
    Stepper stepper(l, cfg);
    Trajectory tr;
    const long n_rec = steps / record_every + 2;
    tr.states.reserve(n_rec);
    tr.step_times.reserve(n_rec);
    tr.step_index.reserve(n_rec);
    tr.states.push_back(z0);
    tr.step_times.push_back(0.0);
    tr.step_index.push_back(0);
    Vec z = z0.z();
    for (long k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) * cfg.eta;
        const double eta_k = cfg.eta * cfg.eta_sched(t);
        const double rho_k = cfg.rho * cfg.rho_sched(t);
        stepper.step(z, eta_k, rho_k, rng);
        const long kk = k + 1;
        if (diverged(z)) {
            tr.diverged_at = kk;
            break;
        }
        if (kk % record_every == 0 || kk == steps) {
            tr.states.emplace_back(z);
            tr.step_times.push_back(static_cast<double>(kk) * cfg.eta);
            tr.step_index.push_back(kk);
        }
    }
    return tr;
}

}  // namespace saddlelab::optimizers

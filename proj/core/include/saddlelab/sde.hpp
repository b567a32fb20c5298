#pragma once

#include "saddlelab/landscapes.hpp"
#include "saddlelab/optimizers.hpp"

#include <functional>

namespace saddlelab::sde {

using core::RngStream;
using core::SquareMatrix;
using core::StateVector;
using landscapes::Landscape;
using optimizers::Sampling;
using optimizers::Scheduler;
using optimizers::Trajectory;

enum class SdeLabel { SgdaSde, SegSde, SegSmallRhoSde, ShgdSde };
const char* to_string(SdeLabel l);

// Base drift/diffusion evaluated at an effective extrapolation step rho.
using DriftFn = std::function<void(const Vec& z, double rho, Vec& out)>;
using DiffusionFn = std::function<void(const Vec& z, double rho, Mat& out)>;

class SdeModel {
public:
    SdeModel(SdeLabel label, int d, double eta, double rho, Sampling sampling, DriftFn drift, DiffusionFn diffusion,
             bool state_dependent_diffusion);

    SdeLabel label() const { return label_; }
    int dim() const { return d_; }
    double eta() const { return eta_; }
    double rho() const { return rho_; }
    Sampling sampling() const { return sampling_; }
    const Scheduler& eta_sched() const { return eta_sched_; }
    const Scheduler& rho_sched() const { return rho_sched_; }
    bool time_dependent() const { return !eta_sched_.is_constant() || !rho_sched_.is_constant(); }
    bool state_dependent_diffusion() const { return state_dependent_; }

    StateVector drift(const StateVector& z, double t = 0.0) const;
    SquareMatrix diffusion(const StateVector& z, double t = 0.0) const;
    void drift_into(const Vec& z, double t, Vec& out) const;
    void diffusion_into(const Vec& z, double t, Mat& out) const;

    SdeModel with_label(SdeLabel l) const;
    SdeModel with_schedulers(Scheduler eta_sched, Scheduler rho_sched) const;

private:
    SdeLabel label_;
    int d_;
    double eta_, rho_;
    Sampling sampling_;
    DriftFn drift_;
    DiffusionFn diffusion_;
    bool state_dependent_;
    Scheduler eta_sched_, rho_sched_;
};

// Per-step noise covariances Sigma(z) of each method's update direction, so that the
// diffusion coefficient realizes sqrt(eta * Sigma).
SquareMatrix sgda_covariance(const Landscape& l, const StateVector& z);
SquareMatrix seg_covariance(const Landscape& l, const StateVector& z, double rho, Sampling sampling);
SquareMatrix shgd_covariance(const Landscape& l, const StateVector& z, Sampling sampling);
// Mean update directions E[F_gamma] (SGDA), E[F_g1(z - rho F_g2)] to first order (SEG), E[grad H_g1,g2] (SHGD).
StateVector seg_drift_field(const Landscape& l, const StateVector& z, double rho, Sampling sampling);
StateVector shgd_drift_field(const Landscape& l, const StateVector& z, Sampling sampling);

SdeModel build_sgda_sde(const Landscape& l, double eta);
SdeModel build_seg_sde(const Landscape& l, double eta, double rho, Sampling sampling);
SdeModel build_seg_small_rho_sde(const Landscape& l, double eta);
SdeModel build_shgd_sde(const Landscape& l, double eta, Sampling sampling);
SdeModel scheduled_sde(const SdeModel& m, Scheduler eta_sched, Scheduler rho_sched);

Trajectory euler_maruyama(const SdeModel& m, const StateVector& z0, double dt, long steps, RngStream& rng,
                          long record_every = 1);

}  // namespace saddlelab::sde

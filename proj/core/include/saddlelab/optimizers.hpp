#pragma once

#include "saddlelab/landscapes.hpp"

#include <optional>
#include <vector>

namespace saddlelab::optimizers {

using core::RngStream;
using core::StateVector;
using landscapes::Landscape;

struct Scheduler {
    enum class Kind { Constant, PowerLaw };
    Kind kind = Kind::Constant;
    double gamma = 0.0;

    static Scheduler constant() { return {}; }
    static Scheduler power_law(double gamma);

    // 1 for Constant, (t+1)^-gamma for PowerLaw.
    double operator()(double t) const;
    // Decay exponent: 0 for Constant.
    double exponent() const { return kind == Kind::Constant ? 0.0 : gamma; }
    bool is_constant() const { return exponent() == 0.0; }
};

enum class Method { SGDA, SEG, SHGD };
enum class Sampling { SameSample, IndependentSample };

const char* to_string(Method m);
const char* to_string(Sampling s);

struct OptimizerConfig {
    Method method = Method::SGDA;
    double eta = 0.01;
    double rho = 0.0;
    Scheduler eta_sched;
    Scheduler rho_sched;
    Sampling sampling = Sampling::SameSample;
    // Coordinate-wise stepsizes (length 2d); SGDA only. Empty means scalar eta.
    Vec eta_coords;

    void validate(int d) const;
};

struct Trajectory {
    std::vector<StateVector> states;
    std::vector<double> step_times;
    std::vector<long> step_index;
    std::optional<long> diverged_at;
};

// |component| above this, or non-finite, counts as divergence.
inline constexpr double kDivergenceThreshold = 1e150;
bool diverged(const Vec& z);

StateVector sgda_step(const Landscape& l, const StateVector& z, double eta_k, RngStream& rng);
StateVector seg_step(const Landscape& l, const StateVector& z, double eta_k, double rho_k, Sampling sampling,
                     RngStream& rng);
StateVector shgd_step(const Landscape& l, const StateVector& z, double eta_k, Sampling sampling, RngStream& rng);

// States are recorded at every record_every-th step and at the final step.
Trajectory run_optimizer(const Landscape& l, const OptimizerConfig& cfg, const StateVector& z0, long steps,
                         RngStream& rng, long record_every = 1);

// Reusable step kernel; holds scratch buffers so the inner loop does not allocate.
class Stepper {
public:
    Stepper(const Landscape& l, const OptimizerConfig& cfg);
    // Advances z in place by one step with effective stepsizes (eta_k, rho_k).
    void step(Vec& z, double eta_k, double rho_k, RngStream& rng);

private:
    const Landscape& l_;
    OptimizerConfig cfg_;
    landscapes::SampleTag t1_, t2_;
    Vec f1_, f2_, zt_, g1_, g2_;
};

}  // namespace saddlelab::optimizers

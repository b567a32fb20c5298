#pragma once

#include "saddlelab/landscapes.hpp"
#include "saddlelab/optimizers.hpp"

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace saddlelab::stats {

using core::StateVector;
using optimizers::Trajectory;

struct Statistic {
    std::string label;
    std::function<double(const StateVector&)> fn;

    double operator()(const StateVector& z) const { return fn(z); }
};

Statistic half_sq_norm();
Statistic norm();
Statistic hamiltonian(const landscapes::Landscape& l);
// Component k of the concatenated state (x_0..x_{d-1}, y_0..y_{d-1}).
Statistic coordinate(int k);
// Parses "half-sq-norm", "norm", "hamiltonian", "coordinate-<k>" / "x<i>" / "y<i>".
Statistic statistic_by_name(const std::string& name, const landscapes::Landscape& l);

struct MomentSeries {
    std::vector<double> times;
    std::vector<double> mean;
    std::vector<double> stderr_;
    std::vector<long> n_effective;
    std::string statistic;
    long n_runs = 0;
    bool truncated = false;

    std::size_t size() const { return times.size(); }
    // Sample variance of the statistic across runs at index k.
    double variance(std::size_t k) const { return stderr_[k] * stderr_[k] * static_cast<double>(n_effective[k]); }
};

// Streaming per-time mean/variance (Welford), fed one run at a time in run_index order.
class MomentAccumulator {
public:
    MomentAccumulator(Statistic g) : g_(std::move(g)) {}
    void add(const Trajectory& tr);
    // One run given as its checkpoint times and statistic values; values past `valid` are ignored.
    void add_values(const std::vector<double>& times, const std::vector<double>& values, std::size_t valid);
    MomentSeries finish() const;

private:
    Statistic g_;
    std::vector<double> times_;
    std::vector<double> mean_, m2_;
    std::vector<long> count_;
    long runs_ = 0;
    std::size_t min_len_ = 0;
};

MomentSeries estimate_moments(const std::vector<Trajectory>& trajs, const Statistic& g);

struct WeakError {
    double value = 0.0;
    double combined_stderr = 0.0;  // at the argmax
    double at_time = 0.0;
    bool interpolated = false;
};

// Max over the algorithm's times of |algo - sde|; the sde series is linearly interpolated
// when a time does not fall on its grid.
WeakError weak_error(const MomentSeries& algo, const MomentSeries& sde);

double order_fit(const std::vector<double>& etas, const std::vector<double>& errors);

// Least-squares line through the mean curve after the first burn_in fraction of points.
std::pair<double, double> linear_variance_fit(const MomentSeries& s, double burn_in);

// Least-squares slope of -log(mean) against time over t in [t0, t1].
double fit_decay_rate(const MomentSeries& s, double t0, double t1);

double combined_stderr(double a, double b);

}  // namespace saddlelab::stats

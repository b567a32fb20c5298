#include "saddlelab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace saddlelab::stats {

Statistic half_sq_norm() {
    return {"half-sq-norm", [](const StateVector& z) { return z.half_sq_norm(); }};
}

Statistic norm() {
    return {"norm", [](const StateVector& z) { return z.z().norm(); }};
}

Statistic hamiltonian(const landscapes::Landscape& l) {
    return {"hamiltonian", [l](const StateVector& z) { return l.hamiltonian(z); }};
}

Statistic coordinate(int k) {
    if (k < 0) throw Error(ErrorKind::InvalidInput, "coordinate index must be non-negative");
    return {"coordinate-" + std::to_string(k), [k](const StateVector& z) {
                if (k >= z.z().size()) throw Error(ErrorKind::InvalidDimension, "coordinate index out of range");
                return z.z()[k];
            }};
}

Statistic statistic_by_name(const std::string& name, const landscapes::Landscape& l) {
    if (name == "half-sq-norm") return half_sq_norm();
    if (name == "norm") return norm();
    if (name == "hamiltonian") return hamiltonian(l);
    auto index = [&](const std::string& s) {
        std::size_t used = 0;
        int k = -1;
        try {
            k = std::stoi(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != s.size() || s.empty() || k < 0) throw Error(ErrorKind::ConfigError, "unknown statistic: " + name);
        return k;
    };
    if (name.rfind("coordinate-", 0) == 0) return coordinate(index(name.substr(11)));
    if (!name.empty() && (name[0] == 'x' || name[0] == 'y')) {
        int i = index(name.substr(1));
        if (i >= l.dim()) throw Error(ErrorKind::ConfigError, "statistic index out of range: " + name);
        Statistic s = coordinate(name[0] == 'x' ? i : l.dim() + i);
        s.label = name;
        return s;
    }
    throw Error(ErrorKind::ConfigError, "unknown statistic: " + name);
}

namespace {

bool same_time(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(a)); }

}  // namespace

void MomentAccumulator::add(const Trajectory& tr) {
    std::size_t n = tr.states.size();
    if (tr.step_times.size() != n) throw Error(ErrorKind::GridMismatch, "trajectory has mismatched time grid");
    std::size_t valid = n;
    if (tr.diverged_at && tr.step_index.size() == n) {
        valid = 0;
        while (valid < n && tr.step_index[valid] < *tr.diverged_at) ++valid;
    }
    std::vector<double> values(n, 0.0);
    for (std::size_t k = 0; k < valid; ++k) {
        if (!tr.states[k].finite()) {
            valid = k;
            break;
        }
        values[k] = g_(tr.states[k]);
    }
    add_values(tr.step_times, values, valid);
}

void MomentAccumulator::add_values(const std::vector<double>& times, const std::vector<double>& values,
                                   std::size_t valid) {
    std::size_t n = std::min(times.size(), values.size());
    valid = std::min(valid, n);
    if (runs_ == 0) {
        times_.assign(times.begin(), times.begin() + static_cast<long>(n));
        mean_.assign(n, 0.0);
        m2_.assign(n, 0.0);
        count_.assign(n, 0);
        min_len_ = valid;
    } else {
        // Shorter runs (divergence) must lie on a prefix of the common grid.
        std::size_t common = std::min(times_.size(), n);
        for (std::size_t k = 0; k < common; ++k)
            if (!same_time(times_[k], times[k]))
                throw Error(ErrorKind::GridMismatch, "trajectories do not share step times");
        if (n > times_.size()) {
            times_.assign(times.begin(), times.begin() + static_cast<long>(n));
            mean_.resize(n, 0.0);
            m2_.resize(n, 0.0);
            count_.resize(n, 0);
        }
        min_len_ = std::min(min_len_, valid);
    }
    for (std::size_t k = 0; k < valid; ++k) {
        double v = values[k];
        if (!std::isfinite(v)) {
            min_len_ = std::min(min_len_, k);
            break;
        }
        long c = ++count_[k];
        double delta = v - mean_[k];
        mean_[k] += delta / static_cast<double>(c);
        m2_[k] += delta * (v - mean_[k]);
    }
    ++runs_;
}

MomentSeries MomentAccumulator::finish() const {
    if (runs_ == 0) throw Error(ErrorKind::InvalidInput, "no trajectories");
    MomentSeries s;
    s.statistic = g_.label;
    s.n_runs = runs_;
    s.truncated = min_len_ < times_.size();
    std::size_t len = min_len_;
    s.times.assign(times_.begin(), times_.begin() + static_cast<long>(len));
    s.mean.assign(mean_.begin(), mean_.begin() + static_cast<long>(len));
    s.n_effective.assign(count_.begin(), count_.begin() + static_cast<long>(len));
    s.stderr_.resize(len);
    for (std::size_t k = 0; k < len; ++k) {
        long c = count_[k];
        s.stderr_[k] = c >= 2 ? std::sqrt(m2_[k] / static_cast<double>(c - 1) / static_cast<double>(c))
                              : std::numeric_limits<double>::quiet_NaN();
    }
    return s;
}

MomentSeries estimate_moments(const std::vector<Trajectory>& trajs, const Statistic& g) {
    if (trajs.empty()) throw Error(ErrorKind::InvalidInput, "no trajectories");
    MomentAccumulator acc(g);
    for (const auto& tr : trajs) acc.add(tr);
    return acc.finish();
}

double combined_stderr(double a, double b) { return std::sqrt(a * a + b * b); }

WeakError weak_error(const MomentSeries& algo, const MomentSeries& sde) {
    if (algo.statistic != sde.statistic)
        throw Error(ErrorKind::StatisticMismatch, "statistics differ: " + algo.statistic + " vs " + sde.statistic);
    if (algo.size() == 0 || sde.size() == 0) throw Error(ErrorKind::InvalidInput, "empty series");
    WeakError w;
    w.value = -1.0;
    std::size_t j = 0;
    for (std::size_t k = 0; k < algo.size(); ++k) {
        double t = algo.times[k];
        while (j + 1 < sde.size() && sde.times[j + 1] <= t && !same_time(sde.times[j], t)) ++j;
        double m, se;
        bool interp = false;
        if (same_time(sde.times[j], t)) {
            m = sde.mean[j];
            se = sde.stderr_[j];
        } else if (j + 1 < sde.size() && same_time(sde.times[j + 1], t)) {
            ++j;
            m = sde.mean[j];
            se = sde.stderr_[j];
        } else if (sde.times[j] < t && j + 1 < sde.size()) {
            double a = (t - sde.times[j]) / (sde.times[j + 1] - sde.times[j]);
            m = (1 - a) * sde.mean[j] + a * sde.mean[j + 1];
            se = (1 - a) * sde.stderr_[j] + a * sde.stderr_[j + 1];
            interp = true;
        } else {
            throw Error(ErrorKind::GridMismatch, "algorithm time " + std::to_string(t) + " outside the SDE grid");
        }
        w.interpolated = w.interpolated || interp;
        double e = std::abs(algo.mean[k] - m);
        if (e > w.value) {
            w.value = e;
            w.at_time = t;
            w.combined_stderr = combined_stderr(algo.stderr_[k], se);
        }
    }
    return w;
}

double order_fit(const std::vector<double>& etas, const std::vector<double>& errors) {
    if (etas.size() != errors.size()) throw Error(ErrorKind::InvalidDimension, "etas and errors differ in length");
    if (etas.size() < 3) throw Error(ErrorKind::InvalidInput, "order fit needs at least 3 points");
    std::size_t n = etas.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(etas[i] > 0) || !(errors[i] > 0)) throw Error(ErrorKind::InvalidInput, "order fit needs positive entries");
        double x = std::log(etas[i]), y = std::log(errors[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    double den = n * sxx - sx * sx;
    if (std::all_of(etas.begin(), etas.end(), [&](double e) { return e == etas.front(); }) || den == 0) throw Error(ErrorKind::Degenerate, "order fit needs distinct stepsizes");
    return (n * sxy - sx * sy) / den;
}

namespace {

std::pair<double, double> ls_line(const std::vector<double>& x, const std::vector<double>& y) {
    std::size_t n = x.size();
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0) throw Error(ErrorKind::Degenerate, "fit needs distinct times");
    double slope = sxy / sxx;
    return {slope, my - slope * mx};
}

}  // namespace

std::pair<double, double> linear_variance_fit(const MomentSeries& s, double burn_in) {
    if (!(burn_in >= 0 && burn_in < 1)) throw Error(ErrorKind::InvalidInput, "burn_in must be in [0, 1)");
    std::size_t start = static_cast<std::size_t>(std::floor(burn_in * static_cast<double>(s.size())));
    if (s.size() < start + 10) throw Error(ErrorKind::InvalidInput, "variance fit needs at least 10 points");
    std::vector<double> x, y;
    for (std::size_t k = start; k < s.size(); ++k) {
        x.push_back(s.times[k]);
        y.push_back(s.mean[k]);
    }
    return ls_line(x, y);
}

double fit_decay_rate(const MomentSeries& s, double t0, double t1) {
    std::vector<double> x, y;
    for (std::size_t k = 0; k < s.size(); ++k) {
        if (s.times[k] < t0 || s.times[k] > t1) continue;
        if (!(s.mean[k] > 0)) throw Error(ErrorKind::InvalidInput, "decay fit needs a positive mean");
        x.push_back(s.times[k]);
        y.push_back(std::log(s.mean[k]));
    }
    if (x.size() < 3) throw Error(ErrorKind::InvalidInput, "decay fit needs at least 3 points");
    return -ls_line(x, y).first;
}

}  // namespace saddlelab::stats

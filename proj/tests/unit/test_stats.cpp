#include "helpers.hpp"

#include "saddlelab/analytic.hpp"
#include "saddlelab/stats.hpp"

#include <cmath>
#include <limits>
#include <random>

using namespace saddlelab;
using namespace saddlelab::stats;
using core::RngStream;
using core::StateVector;
using optimizers::Trajectory;
using testing::error_kind;
using testing::vec;

namespace {

Trajectory constant_traj(const StateVector& z, int n, double dt) {
    Trajectory t;
    for (int k = 0; k < n; ++k) {
        t.states.push_back(z);
        t.step_times.push_back(k * dt);
        t.step_index.push_back(k);
    }
    return t;
}

MomentSeries series(std::vector<double> times, std::vector<double> mean, double se = 0.0) {
    MomentSeries s;
    s.times = std::move(times);
    s.mean = std::move(mean);
    s.stderr_.assign(s.times.size(), se);
    s.n_effective.assign(s.times.size(), 10);
    s.statistic = "half-sq-norm";
    s.n_runs = 10;
    return s;
}

}  // namespace

TEST_SUITE("stats") {

TEST_CASE("identical trajectories have zero stderr; zero trajectories have zero mean") {
    auto z = StateVector(vec({0.3}), vec({-0.2}));
    std::vector<Trajectory> same(5, constant_traj(z, 20, 0.1));
    auto s = estimate_moments(same, half_sq_norm());
    for (std::size_t k = 0; k < s.size(); ++k) {
        CHECK(s.stderr_[k] == 0.0);
        CHECK(s.mean[k] == doctest::Approx(z.half_sq_norm()));
    }
    std::vector<Trajectory> zero(4, constant_traj(StateVector::zeros(2), 10, 0.1));
    auto s0 = estimate_moments(zero, half_sq_norm());
    for (double m : s0.mean) CHECK(m == 0.0);
    CHECK(s0.n_runs == 4);
}

TEST_CASE("mean and stderr against the two-pass formulas") {
    std::vector<double> vals{1.0, 2.0, 4.0, 7.0};
    MomentAccumulator acc(coordinate(0));
    for (double v : vals) acc.add_values({0.0}, {v}, 1);
    auto s = acc.finish();
    double mean = 3.5, var = ((2.5 * 2.5) + (1.5 * 1.5) + (0.5 * 0.5) + (3.5 * 3.5)) / 3.0;
    CHECK(s.mean[0] == doctest::Approx(mean));
    CHECK(s.stderr_[0] == doctest::Approx(std::sqrt(var / 4)));
    CHECK(s.variance(0) == doctest::Approx(var));
}

TEST_CASE("diverged runs truncate the series") {
    auto z = StateVector(vec({1.0}), vec({1.0}));
    std::vector<Trajectory> trajs(3, constant_traj(z, 10, 0.1));
    trajs[1].diverged_at = 6;
    auto s = estimate_moments(trajs, norm());
    CHECK(s.truncated);
    CHECK(s.size() == 6);
    CHECK(s.mean[0] == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("statistics by name") {
    auto l = landscapes::Landscape::bilinear(core::DiagMatrix(vec({2.0})));
    auto z = StateVector(vec({1.0}), vec({3.0}));
    CHECK(statistic_by_name("half-sq-norm", l)(z) == 5.0);
    CHECK(statistic_by_name("norm", l)(z) == doctest::Approx(std::sqrt(10.0)));
    CHECK(statistic_by_name("hamiltonian", l)(z) == 20.0);
    CHECK(statistic_by_name("coordinate-1", l)(z) == 3.0);
    CHECK(statistic_by_name("x0", l)(z) == 1.0);
    CHECK(statistic_by_name("y0", l)(z) == 3.0);
    CHECK(error_kind([&] { statistic_by_name("bogus", l); }) == ErrorKind::ConfigError);
    CHECK(error_kind([&] { statistic_by_name("y1", l); }) == ErrorKind::ConfigError);
}

TEST_CASE("SHGD closed form is the Monte Carlo mean (fixed bilinear, Figure 3 settings)") {
    const double lam = 2, eta = 0.01, sigma = 0.001;
    auto l = landscapes::Landscape::bilinear(core::DiagMatrix(vec({lam})),
                                             landscapes::NoiseSpec::additive(core::DiagMatrix(vec({sigma}))));
    optimizers::OptimizerConfig c;
    c.method = optimizers::Method::SHGD;
    c.eta = eta;
    auto z0 = StateVector(vec({0.1}), vec({0.1}));
    MomentAccumulator acc(half_sq_norm());
    for (int r = 0; r < 1000; ++r) {
        RngStream rng(2023, static_cast<std::uint64_t>(r));
        acc.add(optimizers::run_optimizer(l, c, z0, 2000, rng, 100));
    }
    auto s = acc.finish();
    REQUIRE(s.size() == 21);
    // Exact discrete oracle: mean contracts by c = 1 - eta lam^2 per step, each component's variance
    // follows V <- c^2 V + (eta lam sigma)^2.
    const double cc = 1 - eta * lam * lam, q = eta * eta * lam * lam * sigma * sigma;
    for (std::size_t k = 1; k < s.size(); ++k) {
        const double n = std::round(s.times[k] / eta);
        const double c2n = std::pow(cc * cc, n);
        double discrete = c2n * z0.half_sq_norm() + q * (1 - c2n) / (1 - cc * cc);
        CAPTURE(s.times[k]);
        CHECK(std::abs(s.mean[k] - discrete) < 3 * s.stderr_[k] + 1e-9 * discrete);
        // once the transient has died out the continuous-time closed form applies up to O(eta lam^2)
        if (s.times[k] >= 5.0) {
            double closed = analytic::shgd_norm_fixed_bilinear(core::DiagMatrix(vec({lam})),
                                                               core::DiagMatrix(vec({sigma})), eta, z0, s.times[k]);
            CHECK(std::abs(s.mean[k] - closed) < 3 * s.stderr_[k] + eta * lam * lam * closed);
        }
    }
}

TEST_CASE("weak_error: identical and constant-offset series") {
    auto a = series({0, 1, 2, 3}, {1, 2, 3, 4}, 0.1);
    CHECK(weak_error(a, a).value == 0.0);
    auto b = a;
    b.mean[2] += 0.75;
    auto w = weak_error(a, b);
    CHECK(w.value == doctest::Approx(0.75));
    CHECK(w.at_time == 2.0);
    CHECK(w.combined_stderr == doctest::Approx(std::sqrt(0.02)));
    CHECK_FALSE(w.interpolated);
}

TEST_CASE("weak_error is symmetric and nonnegative on aligned grids") {
    std::mt19937_64 gen(4);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> t, a, b;
        for (int k = 0; k < 15; ++k) {
            t.push_back(0.1 * k);
            a.push_back(nd(gen));
            b.push_back(nd(gen));
        }
        auto sa = series(t, a, 0.1), sb = series(t, b, 0.2);
        CHECK(weak_error(sa, sb).value == weak_error(sb, sa).value);
        CHECK(weak_error(sa, sb).value >= 0.0);
    }
}

TEST_CASE("weak_error interpolates a finer grid and rejects mismatches") {
    auto coarse = series({0, 1, 2}, {0, 1, 2});
    auto fine = series({0, 0.5, 1, 1.5, 2}, {0, 0.5, 1, 1.5, 2});
    CHECK(weak_error(coarse, fine).value == doctest::Approx(0.0));
    auto off = series({0, 0.25, 2}, {0, 0.5, 2});
    auto w = weak_error(off, coarse);
    CHECK(w.interpolated);
    CHECK(w.value == doctest::Approx(0.25));
    auto other = coarse;
    other.statistic = "norm";
    CHECK(error_kind([&] { weak_error(coarse, other); }) == ErrorKind::StatisticMismatch);
    auto shorter = series({0, 1}, {0, 1});
    CHECK(error_kind([&] { weak_error(coarse, shorter); }) == ErrorKind::GridMismatch);
}

TEST_CASE("order_fit on exact power laws") {
    std::vector<double> etas{0.04, 0.02, 0.01, 0.005};
    std::vector<double> e1, e2;
    for (double e : etas) {
        e1.push_back(3.0 * e);
        e2.push_back(0.7 * e * e);
    }
    CHECK(order_fit(etas, e1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(order_fit(etas, e2) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(error_kind([&] { order_fit({0.1, 0.2}, {1, 2}); }) == ErrorKind::InvalidInput);
    CHECK(error_kind([&] { order_fit({0.1, 0.2, 0.3}, {1, 0, 2}); }) == ErrorKind::InvalidInput);
    CHECK(error_kind([&] { order_fit({0.1, 0.1, 0.1}, {1, 2, 3}); }) == ErrorKind::Degenerate);
}

TEST_CASE("linear_variance_fit: exact lines and constants") {
    std::vector<double> t, y, c;
    for (int k = 0; k < 40; ++k) {
        t.push_back(0.5 * k);
        y.push_back(0.3 * (0.5 * k) - 1.25);
        c.push_back(2.0);
    }
    auto [slope, icpt] = linear_variance_fit(series(t, y), 0.2);
    CHECK(slope == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(icpt == doctest::Approx(-1.25).epsilon(1e-12));
    auto [s0, i0] = linear_variance_fit(series(t, c), 0.0);
    CHECK(std::abs(s0) < 1e-14);
    CHECK(i0 == doctest::Approx(2.0));
    CHECK(error_kind([&] { linear_variance_fit(series({0, 1, 2}, {0, 1, 2}), 0.0); }) == ErrorKind::InvalidInput);
}

TEST_CASE("fit_decay_rate recovers an exponential") {
    std::vector<double> t, y;
    for (int k = 0; k <= 50; ++k) {
        t.push_back(0.1 * k);
        y.push_back(2.0 * std::exp(-1.7 * 0.1 * k));
    }
    CHECK(fit_decay_rate(series(t, y), 0.5, 4.0) == doctest::Approx(1.7).epsilon(1e-12));
}

TEST_CASE("combined_stderr") { CHECK(combined_stderr(3.0, 4.0) == 5.0); }

}  // TEST_SUITE

#include "helpers.hpp"

#include "saddlelab/optimizers.hpp"

#include <cmath>

using namespace saddlelab;
using core::DiagMatrix;
using core::RngStream;
using core::StateVector;
using landscapes::Landscape;
using landscapes::NoiseSpec;
using optimizers::Method;
using optimizers::OptimizerConfig;
using optimizers::Sampling;
using optimizers::Scheduler;
using testing::error_kind;
using testing::vec;

namespace {

StateVector sv(std::initializer_list<double> x, std::initializer_list<double> y) { return {vec(x), vec(y)}; }
DiagMatrix diag(std::initializer_list<double> v) { return DiagMatrix(vec(v)); }

void check_close(const StateVector& a, const StateVector& b, double tol = 1e-15) {
    CHECK((a.z() - b.z()).cwiseAbs().maxCoeff() <= tol);
}

}  // namespace

TEST_SUITE("optimizers") {

TEST_CASE("Scheduler values") {
    CHECK(Scheduler::constant()(5.0) == 1.0);
    CHECK(Scheduler::power_law(1.0)(0.0) == 1.0);
    CHECK(Scheduler::power_law(1.0)(3.0) == 0.25);
    CHECK(Scheduler::power_law(0.0)(7.0) == 1.0);
    CHECK(Scheduler::power_law(0.0).is_constant());
    for (double g : {0.0, 0.5, 1.0, 2.0})
        for (double t : {0.0, 1.0, 10.0, 1e6}) CHECK(Scheduler::power_law(g)(t) > 0.0);
    CHECK(error_kind([] { Scheduler::power_law(-0.1); }) == ErrorKind::InvalidInput);
}

TEST_CASE("single-step hand evaluations on the bilinear game") {
    auto l = Landscape::bilinear(diag({1}));
    RngStream rng(0, 0);
    check_close(optimizers::sgda_step(l, sv({1}, {1}), 0.1, rng), sv({0.9}, {1.1}));
    check_close(optimizers::seg_step(l, sv({1}, {1}), 0.1, 0.5, Sampling::SameSample, rng), sv({0.85}, {1.05}));
    check_close(optimizers::shgd_step(l, sv({1}, {1}), 0.1, Sampling::SameSample, rng), sv({0.9}, {0.9}));
}

TEST_CASE("critical points are fixed") {
    auto l = Landscape::nonbilinear2(0.01);
    RngStream rng(0, 0);
    auto z = StateVector::zeros(1);
    CHECK(optimizers::sgda_step(l, z, 0.1, rng) == z);
    CHECK(optimizers::seg_step(l, z, 0.1, 0.3, Sampling::IndependentSample, rng) == z);
    CHECK(optimizers::shgd_step(l, z, 0.1, Sampling::SameSample, rng) == z);
}

TEST_CASE("deterministic SHGD contracts by 1 - eta (a^2 + lam^2) per coordinate") {
    auto l = Landscape::quadratic(diag({2.0, 0.5}), diag({1.0, 3.0}));
    RngStream rng(0, 0);
    const double eta = 0.01;
    auto z = sv({0.7, -0.2}, {0.4, 1.0});
    auto next = optimizers::shgd_step(l, z, eta, Sampling::SameSample, rng);
    const double c0 = 1 - eta * 5.0, c1 = 1 - eta * 9.25;
    check_close(next, sv({c0 * 0.7, c1 * -0.2}, {c0 * 0.4, c1 * 1.0}), 1e-15);
}

TEST_CASE("SEG with rho = 0 is bit-identical to SGDA under a shared stream") {
    auto noise = NoiseSpec::additive(DiagMatrix::constant(2, 0.7));
    for (const auto& l : {Landscape::bilinear(diag({1.0, 2.0}), noise),
                          Landscape::quadratic(diag({0.5, -1.0}), diag({1.0, 2.0}), noise)}) {
        for (auto s : {Sampling::SameSample, Sampling::IndependentSample}) {
            RngStream a(3, 4), b(3, 4);
            auto za = sv({0.1, 0.2}, {-0.3, 0.4}), zb = za;
            for (int k = 0; k < 200; ++k) {
                za = optimizers::sgda_step(l, za, 0.05, a);
                zb = optimizers::seg_step(l, zb, 0.05, 0.0, s, b);
                REQUIRE(za == zb);
            }
        }
    }
}

TEST_CASE("deterministic SEG on the bilinear game applies I - eta M_rho") {
    auto lam = vec({0.5, 2.0});
    auto l = Landscape::bilinear(DiagMatrix(lam));
    RngStream rng(0, 0);
    const double eta = 0.02, rho = 0.1;
    auto z = sv({0.3, -1.0}, {0.8, 0.25});
    for (int k = 0; k < 50; ++k) {
        Vec expect(4);
        for (int i = 0; i < 2; ++i) {
            double x = z.z()[i], y = z.z()[2 + i], L = lam[i];
            expect[i] = x - eta * (rho * L * L * x + L * y);
            expect[2 + i] = y - eta * (-L * x + rho * L * L * y);
        }
        z = optimizers::seg_step(l, z, eta, rho, Sampling::SameSample, rng);
        CHECK((z.z() - expect).cwiseAbs().maxCoeff() < 1e-15);
        z = StateVector(expect);
    }
}

TEST_CASE("run_optimizer: steps = 1 reproduces the single step") {
    auto l = Landscape::bilinear(diag({1}));
    RngStream rng(0, 0);
    OptimizerConfig c;
    c.method = Method::SEG;
    c.eta = 0.1;
    c.rho = 0.5;
    auto tr = optimizers::run_optimizer(l, c, sv({1}, {1}), 1, rng);
    REQUIRE(tr.states.size() == 2);
    check_close(tr.states[1], sv({0.85}, {1.05}));
    CHECK(tr.step_times[1] == doctest::Approx(0.1));
}

TEST_CASE("SGDA on the bilinear game grows like (1 + eta^2)^N") {
    auto l = Landscape::bilinear(diag({1}));
    RngStream rng(0, 0);
    OptimizerConfig c;
    c.eta = 0.01;
    auto z0 = sv({0.3}, {0.4});
    const long n = 10000;
    auto tr = optimizers::run_optimizer(l, c, z0, n, rng, 100);
    double expect = z0.z().squaredNorm() * std::pow(1 + c.eta * c.eta, double(n));
    CHECK(tr.states.back().z().squaredNorm() == doctest::Approx(expect).epsilon(1e-10));
    CHECK(tr.states.back().z().squaredNorm() > z0.z().squaredNorm());
    CHECK(tr.states.size() == 101);
}

TEST_CASE("deterministic SHGD on Quadratic(2, 1): geometric norm decay and monotone Hamiltonian") {
    auto l = Landscape::quadratic(diag({2}), diag({1}));
    RngStream rng(0, 0);
    OptimizerConfig c;
    c.method = Method::SHGD;
    c.eta = 0.01;
    auto z0 = sv({1}, {-0.5});
    auto tr = optimizers::run_optimizer(l, c, z0, 500, rng);
    for (std::size_t k = 0; k < tr.states.size(); ++k) {
        double expect = z0.z().norm() * std::pow(0.95, double(k));
        CHECK(tr.states[k].z().norm() == doctest::Approx(expect).epsilon(1e-12));
        if (k > 0) CHECK(l.hamiltonian(tr.states[k]) < l.hamiltonian(tr.states[k - 1]));
    }
}

TEST_CASE("run_optimizer stream continuity: a + b steps equals a then b") {
    auto l = Landscape::nonbilinear1(NoiseSpec::additive(DiagMatrix::constant(1, 0.2)));
    for (auto m : {Method::SGDA, Method::SEG, Method::SHGD}) {
        OptimizerConfig c;
        c.method = m;
        c.eta = 0.01;
        c.rho = 0.05;
        RngStream a(17, 2), b(17, 2);
        auto z0 = sv({0.5}, {0.5});
        auto full = optimizers::run_optimizer(l, c, z0, 300, a);
        auto first = optimizers::run_optimizer(l, c, z0, 120, b);
        auto second = optimizers::run_optimizer(l, c, first.states.back(), 180, b);
        CHECK(full.states.back() == second.states.back());
    }
}

TEST_CASE("schedulers are evaluated at t = k eta") {
    auto l = Landscape::bilinear(diag({1}));
    RngStream rng(0, 0);
    OptimizerConfig c;
    c.method = Method::SHGD;
    c.eta = 0.5;
    c.eta_sched = Scheduler::power_law(1.0);
    auto tr = optimizers::run_optimizer(l, c, sv({1}, {0}), 3, rng);
    // steps use eta * (k eta + 1)^-1 for k = 0, 1, 2
    double z = 1.0;
    for (int k = 0; k < 3; ++k) z *= 1 - c.eta / (k * c.eta + 1);
    CHECK(tr.states.back().z()[0] == doctest::Approx(z).epsilon(1e-14));
}

TEST_CASE("divergence is recorded, not thrown") {
    auto l = Landscape::bilinear(diag({1}));
    RngStream rng(0, 0);
    OptimizerConfig c;
    c.eta = 5.0;
    auto tr = optimizers::run_optimizer(l, c, sv({1}, {1}), 100000, rng);
    REQUIRE(tr.diverged_at.has_value());
    CHECK(*tr.diverged_at < 1000);
}

TEST_CASE("coordinate-wise stepsizes are SGDA only") {
    OptimizerConfig c;
    c.eta_coords = vec({0.1, 0.2});
    CHECK_FALSE(error_kind([&] { c.validate(1); }));
    c.method = Method::SEG;
    CHECK(error_kind([&] { c.validate(1); }) == ErrorKind::InvalidInput);

    auto l = Landscape::bilinear(diag({1}));
    RngStream rng(0, 0);
    OptimizerConfig s;
    s.eta_coords = vec({0.1, 0.2});
    auto tr = optimizers::run_optimizer(l, s, sv({1}, {1}), 1, rng);
    check_close(tr.states[1], sv({0.9}, {1.2}));
}

}  // TEST_SUITE

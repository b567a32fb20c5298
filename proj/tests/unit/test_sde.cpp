#include "helpers.hpp"

#include "saddlelab/analytic.hpp"
#include "saddlelab/sde.hpp"
#include "saddlelab/stats.hpp"

#include <cmath>
#include <random>

using namespace saddlelab;
using core::DiagMatrix;
using core::RngStream;
using core::StateVector;
using landscapes::Landscape;
using landscapes::NoiseSpec;
using optimizers::Sampling;
using optimizers::Scheduler;
using testing::vec;

namespace {

StateVector sv(std::initializer_list<double> x, std::initializer_list<double> y) { return {vec(x), vec(y)}; }
DiagMatrix diag(std::initializer_list<double> v) { return DiagMatrix(vec(v)); }

std::vector<StateVector> points(int d, int n, unsigned seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    std::vector<StateVector> out;
    for (int k = 0; k < n; ++k) {
        Vec z(2 * d);
        for (int i = 0; i < 2 * d; ++i) z[i] = u(gen);
        out.emplace_back(z);
    }
    return out;
}

bool same_model(const sde::SdeModel& a, const sde::SdeModel& b, const std::vector<StateVector>& zs) {
    for (const auto& z : zs)
        if (!(a.drift(z) == b.drift(z)) || a.diffusion(z) != b.diffusion(z)) return false;
    return true;
}

}  // namespace

TEST_SUITE("sde") {

TEST_CASE("SGDA SDE: noiseless, additive and matrix-entry diffusions") {
    auto z = sv({1}, {1});
    auto none = sde::build_sgda_sde(Landscape::bilinear(diag({1})), 0.01);
    CHECK(none.diffusion(z).isZero(0.0));
    CHECK(none.drift(z) == sv({-1}, {1}));

    auto add = sde::build_sgda_sde(Landscape::bilinear(diag({1}), NoiseSpec::additive(diag({1}))), 0.01);
    for (const auto& p : points(1, 5, 1)) CHECK((add.diffusion(p) - 0.1 * Mat::Identity(2, 2)).norm() < 1e-15);

    auto me = Landscape::bilinear(diag({1}), NoiseSpec::matrix_entry(diag({1})));
    Mat sigma = sde::sgda_covariance(me, z);
    CHECK(sigma(0, 0) == doctest::Approx(1.0));
    CHECK(sigma(1, 1) == doctest::Approx(1.0));
    CHECK(sde::build_sgda_sde(me, 0.01).state_dependent_diffusion());
    // one scalar xi_i drives both x_i and y_i: the noise (xi y, -xi x) has covariance
    // sigma^2 [[y^2, -xy], [-xy, x^2]]
    Mat s2 = sde::sgda_covariance(me, sv({2}, {3}));
    CHECK(s2(0, 0) == doctest::Approx(9.0));
    CHECK(s2(1, 1) == doctest::Approx(4.0));
    CHECK(s2(0, 1) == doctest::Approx(-6.0));
    CHECK(s2(1, 0) == doctest::Approx(-6.0));
}

TEST_CASE("SEG SDE with rho = 0 is the SGDA SDE") {
    auto noise = NoiseSpec::additive(diag({0.5, 1.0}));
    auto l = Landscape::quadratic(diag({1.0, -0.5}), diag({2.0, 1.0}), noise);
    auto zs = points(2, 20, 2);
    for (auto s : {Sampling::SameSample, Sampling::IndependentSample})
        CHECK(same_model(sde::build_seg_sde(l, 0.01, 0.0, s), sde::build_sgda_sde(l, 0.01), zs));
    auto me = Landscape::bilinear(diag({1.0, 2.0}), NoiseSpec::matrix_entry(diag({0.3, 0.6})));
    for (const auto& z : zs)
        CHECK((sde::seg_covariance(me, z, 0.0, Sampling::SameSample) - sde::sgda_covariance(me, z)).norm() < 1e-14);
}

TEST_CASE("SEG SDE drift on the bilinear game") {
    const double rho = 0.3;
    auto l = Landscape::bilinear(diag({1}), NoiseSpec::additive(diag({1})));
    auto m = sde::build_seg_sde(l, 0.01, rho, Sampling::SameSample);
    for (const auto& z : points(1, 10, 3)) {
        double x = z.z()[0], y = z.z()[1];
        Vec expect = vec({-y - rho * x, x - rho * y});
        CHECK((m.drift(z).z() - expect).cwiseAbs().maxCoeff() < 1e-15);
    }
}

TEST_CASE("SEG SDE drift matrix on quadratic games") {
    const double a = 2.0, lam = 1.0, rho = 0.25;
    auto l = Landscape::quadratic(diag({a}), diag({lam}));
    auto m = sde::build_seg_sde(l, 0.01, rho, Sampling::SameSample);
    const double e = rho * (a * a - lam * lam) - a, w = lam * (1 - 2 * rho * a);
    Mat k(2, 2);
    k << e, -w, w, e;
    for (const auto& z : points(1, 10, 4)) CHECK((m.drift(z).z() - k * z.z()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("SEG SDE same-sample diffusion uses the factored form") {
    const double eta = 0.01, rho = 0.2;
    auto l = Landscape::nonbilinear2(0.01, NoiseSpec::additive(diag({0.5})));
    auto m = sde::build_seg_sde(l, eta, rho, Sampling::SameSample);
    auto ind = sde::build_seg_sde(l, eta, rho, Sampling::IndependentSample);
    for (const auto& z : points(1, 10, 5)) {
        Mat expect = (Mat::Identity(2, 2) - rho * l.field_jacobian(z)) * std::sqrt(eta) * 0.5;
        CHECK((m.diffusion(z) - expect).norm() < 1e-14);
        CHECK((ind.diffusion(z) - std::sqrt(eta) * 0.5 * Mat::Identity(2, 2)).norm() < 1e-14);
    }
}

TEST_CASE("small-rho SEG SDE equals the SGDA SDE with its own label") {
    auto l = Landscape::nonbilinear1(NoiseSpec::additive(diag({0.1})));
    auto m = sde::build_seg_small_rho_sde(l, 0.01);
    CHECK(m.label() == sde::SdeLabel::SegSmallRhoSde);
    CHECK(same_model(m, sde::build_sgda_sde(l, 0.01), points(1, 20, 6)));
    auto b = sde::build_seg_small_rho_sde(Landscape::bilinear(diag({1})), 0.01);
    CHECK(b.drift(sv({1}, {1})) == sv({-1}, {1}));
}

TEST_CASE("SHGD SDE: drift and diffusion") {
    auto none = sde::build_shgd_sde(Landscape::bilinear(diag({1})), 0.01, Sampling::SameSample);
    CHECK(none.diffusion(sv({1}, {2})).isZero(0.0));
    CHECK(none.drift(sv({1}, {2})) == sv({-1}, {-2}));

    const double eta = 0.01, s = 0.7;
    auto lam = vec({0.5, 2.0});
    auto l = Landscape::bilinear(DiagMatrix(lam), NoiseSpec::additive(DiagMatrix::constant(2, s)));
    auto same = sde::build_shgd_sde(l, eta, Sampling::SameSample);
    auto ind = sde::build_shgd_sde(l, eta, Sampling::IndependentSample);
    auto z = sv({0.1, 0.2}, {0.3, 0.4});
    Mat dd = same.diffusion(z) * same.diffusion(z).transpose();
    Vec expect(4);
    expect << lam.array().square(), lam.array().square();
    expect *= eta * s * s;
    CHECK((dd - Mat(expect.asDiagonal())).norm() < 1e-15);
    Mat di = ind.diffusion(z) * ind.diffusion(z).transpose();
    CHECK((di - 0.5 * Mat(expect.asDiagonal())).norm() < 1e-15);

    auto q = Landscape::quadratic(diag({2.0}), diag({1.0}));
    auto mq = sde::build_shgd_sde(q, eta, Sampling::SameSample);
    for (const auto& p : points(1, 5, 7)) CHECK((mq.drift(p).z() + 5.0 * p.z()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("SHGD SDE drift is minus the finite-difference gradient of H") {
    const double h = 1e-6;
    for (const auto& l : {Landscape::nonbilinear1(), Landscape::nonbilinear2(0.01), Landscape::nonbilinear3(),
                          Landscape::quadratic(diag({0.5, -1.0}), diag({1.0, 2.0}))}) {
        auto m = sde::build_shgd_sde(l, 0.01, Sampling::SameSample);
        const int d = l.dim();
        for (const auto& z : points(d, 30, 8)) {
            Vec g(2 * d);
            for (int i = 0; i < 2 * d; ++i) {
                Vec zp = z.z(), zm = z.z();
                zp[i] += h;
                zm[i] -= h;
                g[i] = (l.hamiltonian(StateVector(zp)) - l.hamiltonian(StateVector(zm))) / (2 * h);
            }
            double scale = std::max(g.cwiseAbs().maxCoeff(), 1.0);
            CHECK((m.drift(z).z() + g).cwiseAbs().maxCoeff() / scale < 1e-5);
        }
    }
}

TEST_CASE("diffusion is never NotPSD on validation landscapes") {
    auto me = Landscape::bilinear(diag({1.0, 2.0}), NoiseSpec::matrix_entry(diag({0.3, 0.6})));
    for (const auto& z : points(2, 30, 9)) {
        for (auto s : {Sampling::SameSample, Sampling::IndependentSample}) {
            Mat dd;
            CHECK_NOTHROW(dd = sde::build_shgd_sde(me, 0.01, s).diffusion(z));
            CHECK_NOTHROW(dd = sde::build_seg_sde(me, 0.01, 0.1, s).diffusion(z));
            Mat c = dd * dd.transpose();
            CHECK(Eigen::SelfAdjointEigenSolver<Mat>(c).eigenvalues().minCoeff() > -1e-14);
        }
    }
}

TEST_CASE("euler_maruyama: degenerate, rotation and contraction") {
    RngStream rng(1, 0);
    auto zero = sde::SdeModel(
        sde::SdeLabel::SgdaSde, 1, 0.01, 0.0, Sampling::SameSample, [](const Vec&, double, Vec& o) { o.setZero(); },
        [](const Vec&, double, Mat& o) { o.setZero(); }, false);
    auto tr = sde::euler_maruyama(zero, sv({0.3}, {0.7}), 0.01, 100, rng);
    for (const auto& s : tr.states) CHECK(s == sv({0.3}, {0.7}));
    CHECK(tr.step_times.back() == doctest::Approx(1.0));

    auto rot = sde::build_sgda_sde(Landscape::bilinear(diag({1})), 0.01);
    auto z0 = sv({0.6}, {-0.8});
    auto tr2 = sde::euler_maruyama(rot, z0, 1e-4, 10000, rng, 10000);
    CHECK(std::abs(tr2.states.back().z().norm() / z0.z().norm() - 1.0) < 1e-3);

    const double dt = 1e-3;
    auto shgd = sde::build_shgd_sde(Landscape::quadratic(diag({2}), diag({1})), 0.01, Sampling::SameSample);
    auto tr3 = sde::euler_maruyama(shgd, z0, dt, 1000, rng, 100);
    for (std::size_t k = 0; k < tr3.states.size(); ++k) {
        double t = tr3.step_times[k];
        Vec expect = z0.z() * std::exp(-5.0 * t);
        CHECK((tr3.states[k].z() - expect).cwiseAbs().maxCoeff() < 10 * dt * z0.z().cwiseAbs().maxCoeff());
    }
}

TEST_CASE("SEG SDE with rho = 0 and the SGDA SDE give bit-identical paths") {
    auto l = Landscape::nonbilinear2(0.01, NoiseSpec::additive(diag({0.3})));
    RngStream a(5, 5), b(5, 5);
    auto ta = sde::euler_maruyama(sde::build_seg_sde(l, 0.01, 0.0, Sampling::SameSample), sv({0.5}, {0.5}), 1e-3,
                                  2000, a);
    auto tb = sde::euler_maruyama(sde::build_sgda_sde(l, 0.01), sv({0.5}, {0.5}), 1e-3, 2000, b);
    REQUIRE(ta.states.size() == tb.states.size());
    for (std::size_t k = 0; k < ta.states.size(); ++k) REQUIRE(ta.states[k] == tb.states[k]);
}

TEST_CASE("scheduled_sde: constant schedulers are the base model; scale follows the scheduler") {
    auto l = Landscape::bilinear(diag({2}), NoiseSpec::additive(diag({0.5})));
    auto base = sde::build_shgd_sde(l, 0.01, Sampling::SameSample);
    auto same = sde::scheduled_sde(base, Scheduler::constant(), Scheduler::constant());
    auto zs = points(1, 10, 10);
    CHECK(same_model(base, same, zs));
    auto p1 = sde::scheduled_sde(base, Scheduler::power_law(1.0), Scheduler::constant());
    for (const auto& z : zs) {
        CHECK(p1.drift(z, 0.0) == base.drift(z));
        CHECK((p1.drift(z, 3.0).z() - 0.25 * base.drift(z).z()).cwiseAbs().maxCoeff() < 1e-15);
        CHECK((p1.diffusion(z, 3.0) - 0.25 * base.diffusion(z)).cwiseAbs().maxCoeff() < 1e-15);
    }
    auto seg = sde::build_seg_sde(l, 0.01, 0.5, Sampling::SameSample);
    auto rs = sde::scheduled_sde(seg, Scheduler::constant(), Scheduler::power_law(1.0));
    auto seg_quarter = sde::build_seg_sde(l, 0.01, 0.125, Sampling::SameSample);
    for (const auto& z : zs) CHECK((rs.drift(z, 3.0).z() - seg_quarter.drift(z).z()).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("SHGD SDE with eta_t = 1/(t+1) matches the closed form in expectation") {
    // 2 lam^2 = 1 admits the explicit log form
    const double lam = std::sqrt(0.5), sigma = 1.0, eta = 0.1, T = 4.0, dt = 0.005;
    auto l = Landscape::bilinear(DiagMatrix::constant(1, lam), NoiseSpec::additive(DiagMatrix::constant(1, sigma)));
    auto m = sde::scheduled_sde(sde::build_shgd_sde(l, eta, Sampling::SameSample), Scheduler::power_law(1.0),
                                Scheduler::constant());
    auto z0 = sv({1.0}, {0.5});
    const long steps = static_cast<long>(std::lround(T / dt));
    stats::MomentAccumulator acc(stats::half_sq_norm());
    for (int r = 0; r < 4000; ++r) {
        RngStream rng(77, static_cast<std::uint64_t>(r));
        acc.add(sde::euler_maruyama(m, z0, dt, steps, rng, steps / 8));
    }
    auto s = acc.finish();
    for (std::size_t k = 1; k < s.size(); ++k) {
        double t = s.times[k];
        double expect = analytic::shgd_scheduled_inverse_time(DiagMatrix::constant(1, lam),
                                                              DiagMatrix::constant(1, sigma), eta, z0, t);
        CAPTURE(t);
        // 3 standard errors plus the O(dt) bias of the scheme
        CHECK(std::abs(s.mean[k] - expect) < 3 * s.stderr_[k] + 2 * dt * expect);
    }
}

}  // TEST_SUITE

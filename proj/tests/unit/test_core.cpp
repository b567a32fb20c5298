#include "helpers.hpp"

#include "saddlelab/core.hpp"

#include <random>

using namespace saddlelab;
using core::RngStream;
using core::StateVector;
using testing::error_kind;
using testing::vec;

TEST_SUITE("core") {

TEST_CASE("gaussian_vector with zero scale is the zero vector") {
    RngStream rng(7, 0);
    Vec g = core::gaussian_vector(rng, 3, 0.0);
    REQUIRE(g.size() == 3);
    CHECK(g == Vec::Zero(3));
}

TEST_CASE("gaussian_vector is deterministic for fresh streams") {
    RngStream a(42, 0), b(42, 0);
    CHECK(core::gaussian_vector(a, 2, 1.0) == core::gaussian_vector(b, 2, 1.0));
}

TEST_CASE("gaussian_vector rejects dim 0 and negative scale") {
    RngStream rng(1, 0);
    CHECK(error_kind([&] { core::gaussian_vector(rng, 0, 1.0); }) == ErrorKind::InvalidDimension);
    CHECK(error_kind([&] { core::gaussian_vector(rng, 2, -1.0); }) == ErrorKind::InvalidInput);
}

TEST_CASE("gaussian_vector sample moments over 1e5 draws") {
    RngStream rng(2024, 3);
    const int n = 100000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
        double v = core::gaussian_vector(rng, 1, 1.0)[0];
        s += v;
        s2 += v * v;
    }
    double mean = s / n;
    double var = s2 / n - mean * mean;
    CHECK(std::abs(mean) < 0.02);
    CHECK(std::abs(var - 1.0) < 0.05);
}

TEST_CASE("streams with different run_index are uncorrelated") {
    RngStream a(5, 0), b(5, 1);
    const int n = 100000;
    double sab = 0;
    for (int i = 0; i < n; ++i) sab += a.normal() * b.normal();
    // correlation estimate has standard error 1/sqrt(n)
    CHECK(std::abs(sab / n) < 4.0 / std::sqrt(double(n)));
}

TEST_CASE("uniform lies in the open unit interval") {
    RngStream rng(9, 9);
    for (int i = 0; i < 10000; ++i) {
        double u = rng.uniform();
        CHECK_MESSAGE((u > 0.0 && u < 1.0), u);
    }
}

TEST_CASE("RNG yields the same sequence whether drawn raw or through normals") {
    // Philox counter only advances per block, so the counter reflects consumption.
    RngStream a(11, 2), b(11, 2);
    for (int i = 0; i < 100; ++i) CHECK(a() == b());
    CHECK(a.counter() == b.counter());
}

TEST_CASE("Philox4x32-10 known-answer vectors") {
    using core::detail::philox4x32_10;
    using A4 = std::array<std::uint32_t, 4>;
    CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) == A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(philox4x32_10({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
          A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(philox4x32_10({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
          A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("RngStream draws are consecutive Philox blocks, high word first") {
    const std::uint64_t seed = 0x299f31d0a4093822ull, run = 0x0370734413198a2eull;
    RngStream rng(seed, run);
    for (std::uint64_t block = 0; block < 100; ++block) {
        auto b = core::detail::philox4x32_10(
            {static_cast<std::uint32_t>(block), 0, static_cast<std::uint32_t>(run), static_cast<std::uint32_t>(run >> 32)},
            {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
        CHECK(rng() == ((std::uint64_t{b[0]} << 32) | b[1]));
        CHECK(rng() == ((std::uint64_t{b[2]} << 32) | b[3]));
    }
}

TEST_CASE("psd_sqrt of identity and diagonal matrices") {
    Mat id = Mat::Identity(2, 2);
    CHECK((core::psd_sqrt(id) - id).norm() < 1e-14);
    Mat d = vec({4, 9}).asDiagonal();
    Mat s = core::psd_sqrt(d);
    CHECK(s(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(s(1, 1) == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(std::abs(s(0, 1)) < 1e-15);
}

TEST_CASE("psd_sqrt reconstructs random PSD matrices") {
    std::mt19937_64 gen(123);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 50; ++trial) {
        Mat g(4, 4);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) g(i, j) = nd(gen);
        Mat m = g * g.transpose();
        Mat s = core::psd_sqrt(m);
        CHECK((s * s - m).norm() < 1e-10);
        CHECK((s * s - m).norm() / m.norm() < 1e-8);
        CHECK((s - s.transpose()).norm() == 0.0);
        Eigen::SelfAdjointEigenSolver<Mat> es(s);
        CHECK(es.eigenvalues().minCoeff() >= -1e-12);
    }
}

TEST_CASE("psd_sqrt clips tiny negative eigenvalues and rejects real ones") {
    Mat m = vec({1.0, -1e-13}).asDiagonal();
    Mat s = core::psd_sqrt(m, 1e-12);
    CHECK(s(1, 1) == 0.0);
    Mat bad = vec({1.0, -1e-6}).asDiagonal();
    CHECK(error_kind([&] { core::psd_sqrt(bad); }) == ErrorKind::NotPSD);
    Mat asym(2, 2);
    asym << 1, 0.5, 0, 1;
    CHECK(error_kind([&] { core::psd_sqrt(asym); }) == ErrorKind::NotSymmetric);
}

TEST_CASE("StateVector split and concatenation round-trip exactly") {
    Vec x = vec({1.5, -2.0, 1e-300}), y = vec({3.0, 0.125, -7.0});
    StateVector z(x, y);
    CHECK(z.dim() == 3);
    CHECK(Vec(z.x()) == x);
    CHECK(Vec(z.y()) == y);
    StateVector w(z.z());
    CHECK(w == z);
    CHECK(StateVector(Vec(w.x()), Vec(w.y())) == z);
}

TEST_CASE("StateVector rejects mismatched halves") {
    CHECK(error_kind([] { StateVector(testing::vec({1, 2}), testing::vec({1})); }) == ErrorKind::InvalidDimension);
    CHECK(error_kind([] { StateVector(testing::vec({1, 2, 3})); }) == ErrorKind::InvalidDimension);
}

TEST_CASE("DiagMatrix flagged psd rejects negative entries") {
    CHECK(error_kind([] { core::DiagMatrix(testing::vec({1, -1}), true); }) == ErrorKind::InvalidInput);
    CHECK_FALSE(error_kind([] { core::DiagMatrix(testing::vec({1, -1}), false); }));
}

}  // TEST_SUITE

#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace saddlelab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class ErrorKind {
    InvalidDimension,
    InvalidInput,
    NotSymmetric,
    NotPSD,
    UnsupportedNoise,
    InvalidTag,
    DivergenceDetected,
    DivergentRegime,
    SgdaBilinearDivergence,
    Degenerate,
    QuadratureError,
    GridMismatch,
    StatisticMismatch,
    ConfigError,
};

const char* to_string(ErrorKind k);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace saddlelab

namespace saddlelab::core {

// A point z = (x, y) of R^d x R^d, stored concatenated.
class StateVector {
public:
    StateVector() = default;
    explicit StateVector(Vec z);
    StateVector(const Vec& x, const Vec& y);

    static StateVector zeros(int d) { return StateVector(Vec::Zero(2 * d)); }

    int dim() const { return static_cast<int>(z_.size() / 2); }
    const Vec& z() const { return z_; }
    Vec& z() { return z_; }
    auto x() const { return z_.head(dim()); }
    auto y() const { return z_.tail(dim()); }
    auto x() { return z_.head(dim()); }
    auto y() { return z_.tail(dim()); }

    bool finite() const { return z_.allFinite(); }
    double half_sq_norm() const { return 0.5 * z_.squaredNorm(); }

    bool operator==(const StateVector& o) const {
        return z_.size() == o.z_.size() && z_ == o.z_;
    }

private:
    Vec z_;
};

class DiagMatrix {
public:
    DiagMatrix() = default;
    explicit DiagMatrix(Vec entries, bool psd = false);
    static DiagMatrix constant(int d, double v, bool psd = false) {
        return DiagMatrix(Vec::Constant(d, v), psd);
    }

    int dim() const { return static_cast<int>(entries_.size()); }
    const Vec& entries() const { return entries_; }
    double operator[](int i) const { return entries_[i]; }
    Mat dense() const { return entries_.asDiagonal(); }
    bool is_zero() const { return (entries_.array() == 0.0).all(); }

private:
    Vec entries_;
};

using SquareMatrix = Mat;

namespace detail {
// One Philox4x32-10 block; reference for the batched generator.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key);
}  // namespace detail

// Counter-based Philox4x32-10 stream keyed by (base_seed, run_index).
class RngStream {
public:
    using result_type = std::uint64_t;
    // Philox4x32-10 blocks generated per refill; counters advance by one per block.
    static constexpr int kLanes = 8;
    static constexpr int kBuffer = 4 * kLanes;

    RngStream(std::uint64_t base_seed, std::uint64_t run_index);

    std::uint64_t base_seed() const { return seed_; }
    std::uint64_t run_index() const { return run_; }
    std::uint64_t counter() const { return ctr_; }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
    result_type operator()();

    double uniform();  // in (0, 1)
    double normal();

private:
    void refill();

    std::uint64_t seed_;
    std::uint64_t run_;
    std::uint64_t ctr_ = 0;
    std::array<std::uint32_t, kBuffer> buf_{};
    int pos_ = kBuffer;
};

Vec gaussian_vector(RngStream& rng, int dim, double scale);
// Fills out with i.i.d. N(0, scale^2) draws.
void fill_gaussian(RngStream& rng, double scale, Eigen::Ref<Vec> out);

// Symmetric PSD square root by eigendecomposition; eigenvalues in [-tol, 0) clip to 0.
SquareMatrix psd_sqrt(const SquareMatrix& m, double tol = 1e-12);

}  // namespace saddlelab::core

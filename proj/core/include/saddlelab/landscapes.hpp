#pragma once

#include "saddlelab/core.hpp"

#include <cstdint>
#include <string>
#include <utility>

namespace saddlelab::landscapes {

using core::DiagMatrix;
using core::RngStream;
using core::SquareMatrix;
using core::StateVector;

enum class NoiseKind { None, AdditiveGradient, MatrixEntry };

struct NoiseSpec {
    NoiseKind kind = NoiseKind::None;
    DiagMatrix sigma;  // per-coordinate standard deviation, length d

    static NoiseSpec none() { return {}; }
    static NoiseSpec additive(DiagMatrix s) { return {NoiseKind::AdditiveGradient, std::move(s)}; }
    static NoiseSpec matrix_entry(DiagMatrix s) { return {NoiseKind::MatrixEntry, std::move(s)}; }
};

enum class LandscapeKind { Quadratic, NonBilinear1, NonBilinear2, NonBilinear3 };

const char* to_string(NoiseKind k);
const char* to_string(LandscapeKind k);

// One stochastic sample gamma. AdditiveGradient: draw = (U^x, -U^y), length 2d.
// MatrixEntry: draw = xi, length d. None: empty.
struct SampleTag {
    std::uint64_t owner = 0;
    NoiseKind kind = NoiseKind::None;
    Vec draw;
};

class Landscape {
public:
    static Landscape quadratic(DiagMatrix a, DiagMatrix lam, NoiseSpec noise = {});
    static Landscape bilinear(DiagMatrix lam, NoiseSpec noise = {});
    static Landscape nonbilinear1(NoiseSpec noise = {});
    static Landscape nonbilinear2(double eps = 0.01, NoiseSpec noise = {});
    static Landscape nonbilinear3(NoiseSpec noise = {});

    LandscapeKind kind() const { return kind_; }
    int dim() const { return d_; }
    const NoiseSpec& noise() const { return noise_; }
    const DiagMatrix& a() const { return a_; }
    const DiagMatrix& lam() const { return lam_; }
    double eps() const { return eps_; }
    bool is_quadratic() const { return kind_ == LandscapeKind::Quadratic; }
    bool is_bilinear() const { return is_quadratic() && a_.is_zero(); }
    std::uint64_t id() const { return id_; }
    Landscape with_noise(NoiseSpec noise) const;

    double value(const StateVector& z) const;
    StateVector field(const StateVector& z) const;
    SquareMatrix field_jacobian(const StateVector& z) const;
    SquareMatrix hessian(const StateVector& z) const;
    double hamiltonian(const StateVector& z) const;
    // grad H = (grad F)^T F
    StateVector hamiltonian_gradient(const StateVector& z) const;

    std::pair<StateVector, SampleTag> sample_field(const StateVector& z, RngStream& rng) const;
    // Re-applies the sample carried by tag at another point.
    StateVector sample_field_at(const StateVector& z, const SampleTag& tag) const;
    SquareMatrix sample_field_jacobian(const StateVector& z, const SampleTag& tag) const;

    // Allocation-free kernels used by the integrators. Buffers must be sized 2d.
    void field_into(const Vec& z, Vec& out) const;
    void jacobian_times(const Vec& z, const Vec& v, Vec& out) const;
    void jacobian_t_times(const Vec& z, const Vec& v, Vec& out) const;
    void draw_tag_into(RngStream& rng, SampleTag& tag) const;
    void sampled_field_into(const Vec& z, const SampleTag& tag, Vec& out) const;
    void sampled_jacobian_t_times(const Vec& z, const SampleTag& tag, const Vec& v, Vec& out) const;

private:
    Landscape() = default;
    void check_dim(const StateVector& z) const;
    void check_tag(const SampleTag& tag) const;
    // Scalar pieces of the d = 1 nonbilinear games: f = x(y + b) + p(x) - q(y).
    double p(double x) const;
    double dp(double x) const;
    double d2p(double x) const;
    double q(double y) const;
    double dq(double y) const;
    double d2q(double y) const;

    LandscapeKind kind_ = LandscapeKind::Quadratic;
    int d_ = 1;
    DiagMatrix a_, lam_;
    double eps_ = 0.0;
    double shift_ = 0.0;
    NoiseSpec noise_;
    std::uint64_t id_ = 0;
};

}  // namespace saddlelab::landscapes

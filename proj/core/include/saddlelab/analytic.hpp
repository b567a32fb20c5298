#pragma once

#include "saddlelab/landscapes.hpp"
#include "saddlelab/optimizers.hpp"

#include <vector>

namespace saddlelab::analytic {

using core::DiagMatrix;
using core::SquareMatrix;
using core::StateVector;
using landscapes::Landscape;
using optimizers::Sampling;
using optimizers::Scheduler;

struct QuadraticGameParams {
    DiagMatrix a;      // may be signed
    DiagMatrix lam;    // >= 0
    DiagMatrix sigma;  // >= 0
    double eta = 0.01;
    double rho = 0.0;

    int dim() const { return lam.dim(); }
    void validate() const;
};

struct BoundParams {
    double mu = 1.0;
    double L_T = 1.0;
    double L_V = 0.0;
    double H0 = 0.0;
    double alpha = 1.0;

    void validate() const;
};

enum class AnalyticMethod { SHGD, SEG };
enum class RhoObjective { PerCoordinateVariance, TraceVariance, MatchShgdDecay };
enum class BoundRegime { Scaling, Bounded, GeneralAlpha };

// Mean and covariance of the SEG SDE on a quadratic game.
double seg_quadratic_exponent(const QuadraticGameParams& p, int i);  // rho(a^2 - lam^2) - a
double seg_quadratic_rotation(const QuadraticGameParams& p, int i);  // lam (1 - 2 rho a)
double seg_quadratic_B(const QuadraticGameParams& p, int i);
StateVector seg_quadratic_mean(const QuadraticGameParams& p, const StateVector& z0, double t);
// With linear_if_sgda_bilinear, coordinates with rho = 0 and a_i = 0 return the
// linearly growing covariance eta sigma^2 t instead of raising SgdaBilinearDivergence.
SquareMatrix seg_quadratic_cov(const QuadraticGameParams& p, double t, bool linear_if_sgda_bilinear = false);

StateVector shgd_quadratic_mean(const QuadraticGameParams& p, const StateVector& z0, double t);
SquareMatrix shgd_quadratic_cov(const QuadraticGameParams& p, double t);
// Coordinates with a_i = lam_i = 0, where SHGD does not move.
std::vector<bool> shgd_stuck_coordinates(const QuadraticGameParams& p);

// E|Z|^2 / 2 for a Gaussian with the given mean and covariance.
double expected_half_sq_norm(const StateVector& mean, const SquareMatrix& cov);

// Entry noise on the coupling matrix (E|Z_t|^2/2 decays exponentially).
double shgd_stochastic_exponent(double lam, double sigma, double eta);
double seg_stochastic_exponent(double lam, double sigma, double eta, double rho);
double shgd_norm_stochastic_bilinear(const DiagMatrix& lam, const DiagMatrix& sigma, double eta,
                                     const StateVector& z0, double t);
bool shgd_stochastic_converges(const DiagMatrix& lam, const DiagMatrix& sigma, double eta);
double seg_norm_stochastic_bilinear(const DiagMatrix& lam, const DiagMatrix& sigma, double eta, double rho,
                                    const StateVector& z0, double t);
bool seg_stochastic_converges(const DiagMatrix& lam, const DiagMatrix& sigma, double eta, double rho);

// Additive gradient noise on the bilinear game; t may be +infinity.
double shgd_norm_fixed_bilinear(const DiagMatrix& lam, const DiagMatrix& sigma, double eta, const StateVector& z0,
                                double t);
double seg_norm_fixed_bilinear(const DiagMatrix& lam, const DiagMatrix& sigma, double eta, double rho,
                               const StateVector& z0, double t);

double scheduled_norm(AnalyticMethod method, const DiagMatrix& lam, const DiagMatrix& sigma, double eta, double rho,
                      const Scheduler& eta_sched, const Scheduler& rho_sched, const StateVector& z0, double t);
// Explicit SHGD solution for eta_t = 1/(t+1).
double shgd_scheduled_inverse_time(const DiagMatrix& lam, const DiagMatrix& sigma, double eta, const StateVector& z0,
                                   double t);
bool scheduler_converges(AnalyticMethod method, const Scheduler& eta_sched, const Scheduler& rho_sched);

struct QuadraticPredicate {
    std::vector<bool> converges;
    std::vector<bool> faster_than_sgda;
};
QuadraticPredicate seg_convergence_predicate_quadratic(const QuadraticGameParams& p);

// Per-coordinate values for PerCoordinateVariance and MatchShgdDecay; one value for TraceVariance.
Vec optimal_rho(const QuadraticGameParams& p, RhoObjective objective);

double hamiltonian_bound(const BoundParams& b, BoundRegime regime, double eta, double t);

double seg_mu_rho(const Landscape& l, double rho, const StateVector& z);

// Per-sample terms of the Hamiltonian evolution right-hand side; the estimate is their mean.
std::vector<double> hamiltonian_ode_terms(AnalyticMethod method, const Landscape& l, double eta, double rho,
                                          const std::vector<StateVector>& z_samples,
                                          Sampling sampling = Sampling::SameSample);
double hamiltonian_ode_rhs(AnalyticMethod method, const Landscape& l, double eta, double rho,
                           const std::vector<StateVector>& z_samples, Sampling sampling = Sampling::SameSample);
SquareMatrix hamiltonian_hessian(const Landscape& l, const StateVector& z);

// Adaptive trapezoid with Richardson extrapolation; relative error below rel_tol or QuadratureError.
template <class F>
double integrate(F&& f, double a, double b, double rel_tol = 1e-8);

}  // namespace saddlelab::analytic

#include "saddlelab/detail/quadrature.hpp"

#pragma once

#include <vector>

#include "hypocert/dynamics.hpp"
#include "hypocert/metric.hpp"
#include "hypocert/potentials.hpp"

namespace hypocert {

// Short-time Gaussian picture of Z_t: mean + the explicit Gaussian part
//   G_t = integral_0^t (A1 + (t - s) grad B . A1) sigma dW_s
// plus an error whose covariance contribution is higher order in t.

// First-order direction in which velocity noise propagates to positions:
// grad B(z) . A1, which is (1, -1) per dimension for the kinetic drift.
Eigen::VectorXd commutator_direction(const PotentialSpec& p, const PhaseState& z);

// Exact per-(x_i, v_i) covariance of the Gaussian part:
//   [ s^2 t^3/3,        s^2 (t^2/2 - t^3/3)    ]
//   [ s^2 (t^2/2-t^3/3), s^2 (t - t^2 + t^3/3) ]   with s = sigma.
Eigen::Matrix2d gaussian_part_cov(double t, double sigma);

// Block-diagonal embedding into the packed 2d x 2d layout.
Eigen::MatrixXd gaussian_part_cov_full(int dim, double t, double sigma);

struct ApproxPoint {
    double t = 0.0;
    double dev_norm = 0.0;  // || Cov_MC(Z_t) - Sigma_G(t) ||_inf
    double predicted = 0.0; // sigma^2 t^4 reference scale
    double mean_dev = 0.0;  // | mean_MC - reference mean |, quadratic case
    double mean_se = 0.0;
};

struct ApproxReport {
    PhaseState z0;
    std::vector<ApproxPoint> points;
    double slope = 0.0; // log-log regression of dev_norm against t
    bool mean_pass = true;
};

// MC covariance of Z_t against gaussian_part_cov over a small-t grid, with
// the scaling slope of the deviation.
ApproxReport validate_gaussian_approx(const PotentialSpec& p, const PhaseState& z0,
                                      const std::vector<double>& t_grid,
                                      const SimConfig& cfg);

void write_approx_csv(std::ostream& os, const ApproxReport& rep);

struct ProbEstimate {
    PhaseState z1, z2;
    double t = 0.0;
    double delta = 0.0;
    std::size_t n = 0;
    // {|Z1 - Z2| < delta}
    std::size_t hits_euclid = 0;
    double p_euclid = 0.0, lo_euclid = 0.0, hi_euclid = 0.0;
    // {rho_r(Z1, Z2) < delta and both in B(0, R')}
    std::size_t hits_rho = 0;
    double p_rho = 0.0, lo_rho = 0.0, hi_rho = 0.0;
    bool inconclusive = false; // zero successes on either event
};

// Wilson 95% interval for k successes out of n.
void wilson_interval(std::size_t k, std::size_t n, double& lo, double& hi);

// Simulates n independent pairs from (z1, z2) and estimates both coupling
// events. The rho_r event uses the straight-line upper bound on rho_r,
// which under-counts successes (conservative). mp may be null to skip the
// weighted event; r_prime is the ball radius of the weighted event.
ProbEstimate coupling_probability(const PotentialSpec& p, const PhaseState& z1,
                                  const PhaseState& z2, double t, double delta,
                                  const SimConfig& cfg, const MetricParams* mp = nullptr,
                                  double r_prime = std::numeric_limits<double>::infinity());

void write_prob_csv(std::ostream& os, const std::vector<ProbEstimate>& estimates);

// Reference-only analytic bound alpha = C delta^2 t^{-2} exp(-k m^2 / t^3)
// - 8 exp(-delta^2 / (16 C t^5)), clamped to [0, 1]. Never used in the
// certificate.
double alpha_reference_bound(double t, double delta, double R, double C, double k, double m);

} // namespace hypocert

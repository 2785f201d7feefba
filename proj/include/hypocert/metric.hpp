#pragma once

#include <functional>
#include <vector>

#include "hypocert/dynamics.hpp"
#include "hypocert/lyapunov.hpp"
#include "hypocert/potentials.hpp"

namespace hypocert {

// Parameters of the weighted metrics
//   rho(z1, z2)   = inf over paths of integral L(gamma) |gamma'| dt,
//   rho_r         = same with L^r,
//   d(z1, z2)     = min(rho_r / delta, 1) + beta_w rho.
// beta_w is the metric-mixing weight, distinct from the Lyapunov beta.
struct MetricParams {
    const PotentialSpec* potential = nullptr;
    LyapunovParams lp;
    double r = 0.5;      // in (0, 1]
    double delta = 0.5;  // > 0
    double beta_w = 0.1; // in (0, 1)

    void validate() const;
};

// Upper bound on rho_{exponent} via the straight-line path, with 32-point
// Gauss-Legendre quadrature of L^exponent along the segment. Saturation of
// the weight propagates as +infinity.
double rho_upper(const PhaseState& z1, const PhaseState& z2, const MetricParams& mp,
                 double exponent);

// min(rho_r / delta, 1) + beta_w rho, both terms via rho_upper.
double metric_d(const PhaseState& z1, const PhaseState& z2, const MetricParams& mp);

using GroundMetric = std::function<double(const PhaseState&, const PhaseState&)>;

// Exact empirical Wasserstein-1 distance between equal-size samples:
// optimal assignment cost / n via a shortest-augmenting-path solver
// (Jonker-Volgenant). Throws on unequal sizes or non-finite costs.
// With float_costs the matching is computed on a single-precision copy of
// the cost matrix (roughly 2x faster on large ensembles) and the true costs
// are re-summed over that matching.
double wasserstein1(const std::vector<PhaseState>& samples_a,
                    const std::vector<PhaseState>& samples_b,
                    const GroundMetric& ground, int workers = 0, bool float_costs = false);

// 1D Euclidean shortcut: mean absolute difference of sorted samples.
double wasserstein1_1d_euclidean(std::vector<double> a, std::vector<double> b);

// Minimum-cost perfect matching on a dense n x n cost matrix (row-major);
// writes the assigned column of each row into `row_to_col`.
double solve_assignment(int n, const std::vector<double>& cost, std::vector<int>& row_to_col);

} // namespace hypocert

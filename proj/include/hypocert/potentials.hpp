#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

namespace hypocert {

// Confining potential U with its gradient, a uniform Hessian bound M and
// the drift constants (c1, c2, c3) of  x . grad U >= c1 U + c2 |x|^2 - c3.
// Instances are immutable after construction and safe to share.
struct PotentialSpec {
    int dim = 1;
    std::function<double(const Eigen::VectorXd&)> eval;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> grad;
    // Analytic Hessian when available; otherwise hessian() below falls back
    // to central differences of grad.
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> hess;
    double hess_bound = 0.0; // M
    double c1 = 1.0, c2 = 1.0, c3 = 1.0;
    std::string name;

    bool is_quadratic() const { return name == "quadratic"; }
};

// Hessian of U at x: analytic when the spec carries one, else central
// finite differences of grad with h = 1e-5 * max(1, |x|).
Eigen::MatrixXd hessian(const PotentialSpec& p, const Eigen::VectorXd& x);

// U(x) = |x|^2 / 2, M = 1, (c1, c2, c3) = (1, 1/2, 0+).
PotentialSpec make_quadratic(int dim);

// 1D double well with quadratic tails:
//   U(x) = x^2/2 + A exp(-x^2 / (2 w^2)) - min,
// two wells for A/w^2 > 1 while keeping U'' bounded. Constants found by a
// scan over [-50, 50]; the quadratic term dominates outside that range.
PotentialSpec make_bump_double_well(double amplitude, double width);

struct HypothesisReport {
    double drift_margin = 0.0;          // min of x.gradU - c1 U - c2|x|^2 + c3
    double hessian_margin = 0.0;        // min of M - max eigenvalue of Hess U
    Eigen::VectorXd drift_argmin;
    Eigen::VectorXd hessian_argmin;
    bool drift_pass = false;
    bool hessian_pass = false;
    bool pass() const { return drift_pass && hessian_pass; }
};

// Worst-case margins of both hypotheses over a deterministic grid in
// B(0, radius). Failures are reported, not thrown.
HypothesisReport check_hypotheses(const PotentialSpec& p, double radius, int n_grid);

// Deterministic evaluation points in B(0, radius): a dense grid in 1D,
// radial lines along axes and diagonals in higher dimension.
std::vector<Eigen::VectorXd> hypothesis_grid(int dim, double radius, int n_grid);

} // namespace hypocert

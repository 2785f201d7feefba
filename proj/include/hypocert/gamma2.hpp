#pragma once

#include <vector>

#include "hypocert/dynamics.hpp"
#include "hypocert/lyapunov.hpp"
#include "hypocert/potentials.hpp"

namespace hypocert {

// f(z) = z.Az + b.z + c on 2d-dimensional phase space; all derivatives are
// exact, which keeps the carre-du-champ checks free of differentiation noise.
struct QuadraticObservable {
    Eigen::MatrixXd A; // symmetric 2d x 2d
    Eigen::VectorXd b;
    double c = 0.0;

    QuadraticObservable() = default;
    QuadraticObservable(Eigen::MatrixXd A_, Eigen::VectorXd b_, double c_);

    int dim() const { return static_cast<int>(b.size()) / 2; }
    double eval(const PhaseState& z) const;
    Eigen::VectorXd grad(const PhaseState& z) const; // packed (d_x f, d_v f)
    Eigen::VectorXd grad_x(const PhaseState& z) const;
    Eigen::VectorXd grad_v(const PhaseState& z) const;
    Eigen::MatrixXd hess_xv() const; // d_x d_v f, constant
    Eigen::MatrixXd hess_vv() const;
    Eigen::MatrixXd hess_xx() const;
};

// Gamma(f,g) = 2 d_x f . d_x g - d_x f . d_v g - d_v f . d_x g + 2 d_v f . d_v g.
double gamma_form(const QuadraticObservable& f, const QuadraticObservable& g,
                  const PhaseState& z);

// Gamma_2(f) = L Gamma(f,f) - 2 Gamma(f, Lf), evaluated through the expanded
// form (exact for quadratic observables):
//   4|d_xd_v f|^2 - 4 d_xd_v f : d_vd_v f + 4|d_vd_v f|^2
//   + 4 d_x f . Hess U d_v f - 2 d_v f . Hess U d_v f
//   + 2|d_x f|^2 - 6 d_x f . d_v f + 4|d_v f|^2.
double gamma2_form(const QuadraticObservable& f, const PotentialSpec& p,
                   const PhaseState& z);

// C_M = 15 + 6 M^2 + 2 M.
inline double gradient_bound_constant(double M) { return 15.0 + 6.0 * M * M + 2.0 * M; }

// Generator applied to a quadratic observable; exact when U is quadratic
// (used as the independent route for checking gamma2_form).
QuadraticObservable apply_generator_quadratic(const QuadraticObservable& f,
                                              const PotentialSpec& p);

struct GradientPoint {
    PhaseState z;
    std::size_t fn_index = 0;
    double lhs = 0.0;    // |grad P_t f(z)|^2 via E[J^T grad f(Z_t)]
    double rhs = 0.0;    // C_M P_t(f^2) + 3 e^{-t/3} P_t(|grad f|^2)
    double rhs_se = 0.0; // standard error of the RHS estimate
    bool pass = false;
};

struct GradientReport {
    double t = 0.0;
    double c_m = 0.0;
    std::vector<GradientPoint> points;
    bool pass = false;
};

// Monte-Carlo check of the semigroup gradient bound with common random
// numbers: pass iff LHS <= RHS + 3 SE at every (f, z).
GradientReport verify_gradient_bound(const PotentialSpec& p, double t,
                                     const std::vector<QuadraticObservable>& test_fns,
                                     const std::vector<PhaseState>& z_grid,
                                     const SimConfig& cfg);

void write_gradient_csv(std::ostream& os, const GradientReport& rep);

} // namespace hypocert

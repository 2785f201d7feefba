#include "hypocert/gamma2.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace hypocert {

QuadraticObservable::QuadraticObservable(Eigen::MatrixXd A_, Eigen::VectorXd b_, double c_)
    : A(std::move(A_)), b(std::move(b_)), c(c_) {
    if (A.rows() != A.cols() || A.rows() != b.size() || b.size() % 2 != 0)
        throw std::invalid_argument("QuadraticObservable: A must be 2d x 2d and b length 2d");
    if (!A.isApprox(A.transpose(), 1e-12))
        throw std::invalid_argument("QuadraticObservable: A must be symmetric");
}

double QuadraticObservable::eval(const PhaseState& z) const {
    const Eigen::VectorXd zz = z.packed();
    return zz.dot(A * zz) + b.dot(zz) + c;
}

Eigen::VectorXd QuadraticObservable::grad(const PhaseState& z) const {
    return 2.0 * A * z.packed() + b;
}

Eigen::VectorXd QuadraticObservable::grad_x(const PhaseState& z) const {
    return grad(z).head(dim());
}

Eigen::VectorXd QuadraticObservable::grad_v(const PhaseState& z) const {
    return grad(z).tail(dim());
}

Eigen::MatrixXd QuadraticObservable::hess_xx() const {
    const int d = dim();
    return 2.0 * A.topLeftCorner(d, d);
}

Eigen::MatrixXd QuadraticObservable::hess_xv() const {
    const int d = dim();
    return 2.0 * A.topRightCorner(d, d);
}

Eigen::MatrixXd QuadraticObservable::hess_vv() const {
    const int d = dim();
    return 2.0 * A.bottomRightCorner(d, d);
}

double gamma_form(const QuadraticObservable& f, const QuadraticObservable& g,
                  const PhaseState& z) {
    const Eigen::VectorXd fx = f.grad_x(z), fv = f.grad_v(z);
    const Eigen::VectorXd gx = g.grad_x(z), gv = g.grad_v(z);
    return 2.0 * fx.dot(gx) - fx.dot(gv) - fv.dot(gx) + 2.0 * fv.dot(gv);
}

double gamma2_form(const QuadraticObservable& f, const PotentialSpec& p,
                   const PhaseState& z) {
    const Eigen::VectorXd gx = f.grad_x(z), gv = f.grad_v(z);
    const Eigen::MatrixXd Hxv = f.hess_xv(), Hvv = f.hess_vv();
    const Eigen::MatrixXd HU = hessian(p, z.x);
    return 4.0 * Hxv.squaredNorm() - 4.0 * Hxv.cwiseProduct(Hvv).sum() +
           4.0 * Hvv.squaredNorm() + 4.0 * gx.dot(HU * gv) - 2.0 * gv.dot(HU * gv) +
           2.0 * gx.squaredNorm() - 6.0 * gx.dot(gv) + 4.0 * gv.squaredNorm();
}

QuadraticObservable apply_generator_quadratic(const QuadraticObservable& f,
                                              const PotentialSpec& p) {
    if (!p.is_quadratic())
        throw std::invalid_argument("apply_generator_quadratic: requires the quadratic potential");
    const int d = f.dim();
    // L f = (Dz).grad f + (sigma^2/2) Lap_v f with D = [[0, I], [-I, -I]], sigma^2 = 2.
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(2 * d, 2 * d);
    D.topRightCorner(d, d) = Eigen::MatrixXd::Identity(d, d);
    D.bottomLeftCorner(d, d) = -Eigen::MatrixXd::Identity(d, d);
    D.bottomRightCorner(d, d) = -Eigen::MatrixXd::Identity(d, d);
    Eigen::MatrixXd A2 = D.transpose() * f.A + f.A * D;
    Eigen::VectorXd b2 = D.transpose() * f.b;
    const double c2 = 2.0 * f.A.bottomRightCorner(d, d).trace();
    return QuadraticObservable(0.5 * (A2 + A2.transpose()), std::move(b2), c2);
}

GradientReport verify_gradient_bound(const PotentialSpec& p, double t,
                                     const std::vector<QuadraticObservable>& test_fns,
                                     const std::vector<PhaseState>& z_grid,
                                     const SimConfig& cfg) {
    if (t <= 0.0) throw std::invalid_argument("verify_gradient_bound: t must be positive");
    if (test_fns.empty() || z_grid.empty())
        throw std::invalid_argument("verify_gradient_bound: empty test functions or grid");

    GradientReport rep;
    rep.t = t;
    rep.c_m = gradient_bound_constant(p.hess_bound);
    rep.pass = true;
    const double decay = 3.0 * std::exp(-t / 3.0);

    SimConfig run = cfg;
    run.t_final = t;

    for (const auto& z0 : z_grid) {
        // One ensemble per start point, reused across the test functions
        // (common random numbers).
        const auto ens = simulate_ensemble(z0, p, run, {t}, true);
        const std::size_t n = ens.n_paths();
        for (std::size_t fi = 0; fi < test_fns.size(); ++fi) {
            const auto& f = test_fns[fi];
            Eigen::VectorXd grad_sum = Eigen::VectorXd::Zero(2 * z0.dim());
            double f2_sum = 0.0, f2_sum2 = 0.0;
            double g2_sum = 0.0, g2_sum2 = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const PhaseState& zt = ens.states[0][i];
                grad_sum += ens.tangents[0][i].transpose() * f.grad(zt);
                const double fv = f.eval(zt);
                const double f2 = fv * fv;
                const double g2 = f.grad(zt).squaredNorm();
                f2_sum += f2;
                f2_sum2 += f2 * f2;
                g2_sum += g2;
                g2_sum2 += g2 * g2;
            }
            const double f2_mean = f2_sum / n;
            const double g2_mean = g2_sum / n;
            const double f2_var = std::max(0.0, f2_sum2 / n - f2_mean * f2_mean) * n / (n - 1.0);
            const double g2_var = std::max(0.0, g2_sum2 / n - g2_mean * g2_mean) * n / (n - 1.0);

            GradientPoint pt;
            pt.z = z0;
            pt.fn_index = fi;
            pt.lhs = (grad_sum / static_cast<double>(n)).squaredNorm();
            pt.rhs = rep.c_m * f2_mean + decay * g2_mean;
            pt.rhs_se = std::sqrt(rep.c_m * rep.c_m * f2_var / n +
                                  decay * decay * g2_var / n);
            pt.pass = pt.lhs <= pt.rhs + 3.0 * pt.rhs_se;
            if (!pt.pass) rep.pass = false;
            rep.points.push_back(std::move(pt));
        }
    }
    return rep;
}

void write_gradient_csv(std::ostream& os, const GradientReport& rep) {
    const int d = rep.points.empty() ? 1 : rep.points.front().z.dim();
    os << "fn_index,";
    for (int j = 1; j <= d; ++j) os << "x_" << j << ",";
    for (int j = 1; j <= d; ++j) os << "v_" << j << ",";
    os << "lhs,rhs,rhs_se,pass\n";
    char buf[32];
    auto put = [&](double value, char sep) {
        std::snprintf(buf, sizeof(buf), "%.17g", value);
        os << buf << sep;
    };
    for (const auto& pt : rep.points) {
        os << pt.fn_index << ",";
        for (int j = 0; j < d; ++j) put(pt.z.x(j), ',');
        for (int j = 0; j < d; ++j) put(pt.z.v(j), ',');
        put(pt.lhs, ',');
        put(pt.rhs, ',');
        put(pt.rhs_se, ',');
        os << (pt.pass ? "1" : "0") << "\n";
    }
}

} // namespace hypocert

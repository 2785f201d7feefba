#include "hypocert/potentials.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace hypocert {

Eigen::MatrixXd hessian(const PotentialSpec& p, const Eigen::VectorXd& x) {
    if (p.hess) return p.hess(x);
    const int d = p.dim;
    const double h = 1e-5 * std::max(1.0, x.norm());
    Eigen::MatrixXd H(d, d);
    Eigen::VectorXd xp = x, xm = x;
    for (int j = 0; j < d; ++j) {
        xp(j) = x(j) + h;
        xm(j) = x(j) - h;
        H.col(j) = (p.grad(xp) - p.grad(xm)) / (2.0 * h);
        xp(j) = x(j);
        xm(j) = x(j);
    }
    return 0.5 * (H + H.transpose());
}

PotentialSpec make_quadratic(int dim) {
    if (dim < 1) throw std::invalid_argument("make_quadratic: dim must be >= 1");
    PotentialSpec p;
    p.dim = dim;
    p.eval = [](const Eigen::VectorXd& x) { return 0.5 * x.squaredNorm(); };
    p.grad = [](const Eigen::VectorXd& x) { return x; };
    p.hess = [dim](const Eigen::VectorXd&) {
        return Eigen::MatrixXd(Eigen::MatrixXd::Identity(dim, dim));
    };
    p.hess_bound = 1.0;
    p.c1 = 1.0;
    p.c2 = 0.5;
    p.c3 = 1e-12; // the inequality is tight with c3 = 0; keep it strictly positive
    p.name = "quadratic";
    return p;
}

namespace {

double bump_raw(double x, double A, double w) {
    return 0.5 * x * x + A * std::exp(-0.5 * x * x / (w * w));
}

double bump_d1(double x, double A, double w) {
    return x * (1.0 - (A / (w * w)) * std::exp(-0.5 * x * x / (w * w)));
}

double bump_d2(double x, double A, double w) {
    const double s = x * x / (w * w);
    return 1.0 + (A / (w * w)) * std::exp(-0.5 * s) * (s - 1.0);
}

} // namespace

PotentialSpec make_bump_double_well(double amplitude, double width) {
    if (amplitude <= 0.0 || width <= 0.0)
        throw std::invalid_argument("make_bump_double_well: amplitude and width must be positive");
    const double A = amplitude, w = width;

    // Minimum: x = 0 when A <= w^2, otherwise the two wells at
    // x*^2 = 2 w^2 log(A / w^2) where U(x*) = x*^2/2 + w^2.
    double shift;
    if (A > w * w) {
        const double xstar2 = 2.0 * w * w * std::log(A / (w * w));
        shift = 0.5 * xstar2 + w * w;
    } else {
        shift = A;
    }

    PotentialSpec p;
    p.dim = 1;
    p.eval = [A, w, shift](const Eigen::VectorXd& x) { return bump_raw(x(0), A, w) - shift; };
    p.grad = [A, w](const Eigen::VectorXd& x) {
        Eigen::VectorXd g(1);
        g(0) = bump_d1(x(0), A, w);
        return g;
    };
    p.hess = [A, w](const Eigen::VectorXd& x) {
        Eigen::MatrixXd H(1, 1);
        H(0, 0) = bump_d2(x(0), A, w);
        return H;
    };
    p.name = "bump_double_well";

    const int n_scan = 20001;
    const double x_max = 50.0;

    // M: U'' has its maximum at x^2 = 3 w^2 and tends to 1 in the tail.
    p.hess_bound = std::max(1.0, 1.0 + 2.0 * (A / (w * w)) * std::exp(-1.5));

    // Drift constants: c1 = 1 and the largest c2 on a coarse descending
    // search, with c3 set to the worst scan violation. The tail needs
    // 1 - c1/2 - c2 > 0 so the x^2 terms dominate beyond the scan window.
    const double c3_cap = 1e3;
    p.c1 = 1.0;
    bool found = false;
    for (double c2 = 0.95 * (1.0 - 0.5 * p.c1); c2 > 1e-4; c2 *= 0.5) {
        double c3_needed = 1e-12;
        double x_violate = 0.0;
        for (int i = 0; i < n_scan; ++i) {
            const double x = -x_max + 2.0 * x_max * i / (n_scan - 1);
            const double u = bump_raw(x, A, w) - shift;
            const double lack = p.c1 * u + c2 * x * x - x * bump_d1(x, A, w);
            if (lack > c3_needed) {
                c3_needed = lack;
                x_violate = x;
            }
        }
        if (c3_needed <= c3_cap) {
            p.c2 = c2;
            p.c3 = c3_needed + 1e-3; // pad over the scan's interpolation error
            found = true;
            break;
        }
        if (c2 * 0.5 <= 1e-4) {
            throw std::runtime_error(
                "make_bump_double_well: drift condition violated near x = " +
                std::to_string(x_violate) + " for every (c1,c2,c3) in the search range");
        }
    }
    if (!found)
        throw std::runtime_error("make_bump_double_well: no admissible drift constants found");
    return p;
}

std::vector<Eigen::VectorXd> hypothesis_grid(int dim, double radius, int n_grid) {
    std::vector<Eigen::VectorXd> pts;
    if (dim == 1) {
        pts.reserve(n_grid);
        for (int i = 0; i < n_grid; ++i) {
            Eigen::VectorXd x(1);
            x(0) = -radius + 2.0 * radius * i / (n_grid - 1);
            pts.push_back(x);
        }
        return pts;
    }
    // Radial lines: coordinate axes plus the all-ones diagonals.
    std::vector<Eigen::VectorXd> dirs;
    for (int j = 0; j < dim; ++j) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(dim);
        e(j) = 1.0;
        dirs.push_back(e);
    }
    dirs.push_back(Eigen::VectorXd::Ones(dim).normalized());
    Eigen::VectorXd alt(dim);
    for (int j = 0; j < dim; ++j) alt(j) = (j % 2 == 0) ? 1.0 : -1.0;
    dirs.push_back(alt.normalized());
    for (const auto& dir : dirs) {
        for (int i = 0; i < n_grid; ++i) {
            const double r = -radius + 2.0 * radius * i / (n_grid - 1);
            pts.push_back(r * dir);
        }
    }
    return pts;
}

HypothesisReport check_hypotheses(const PotentialSpec& p, double radius, int n_grid) {
    if (radius <= 0.0) throw std::invalid_argument("check_hypotheses: radius must be positive");
    if (n_grid < 2) throw std::invalid_argument("check_hypotheses: n_grid must be >= 2");
    if (p.c1 <= 0.0 || p.c2 <= 0.0 || p.c3 <= 0.0)
        throw std::invalid_argument("check_hypotheses: c1, c2, c3 must be positive");

    HypothesisReport rep;
    rep.drift_margin = std::numeric_limits<double>::infinity();
    rep.hessian_margin = std::numeric_limits<double>::infinity();
    for (const auto& x : hypothesis_grid(p.dim, radius, n_grid)) {
        const double drift =
            x.dot(p.grad(x)) - p.c1 * p.eval(x) - p.c2 * x.squaredNorm() + p.c3;
        if (drift < rep.drift_margin) {
            rep.drift_margin = drift;
            rep.drift_argmin = x;
        }
        const Eigen::MatrixXd H = hessian(p, x);
        const double lam_max =
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(H).eigenvalues().maxCoeff();
        const double hm = p.hess_bound - lam_max;
        if (hm < rep.hessian_margin) {
            rep.hessian_margin = hm;
            rep.hessian_argmin = x;
        }
    }
    const double tol = 1e-9;
    rep.drift_pass = rep.drift_margin >= -tol;
    rep.hessian_pass = rep.hessian_margin >= -tol;
    return rep;
}

} // namespace hypocert

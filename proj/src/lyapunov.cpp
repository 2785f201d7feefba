#include "hypocert/lyapunov.hpp"

#include <cmath>
#include <limits>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace hypocert {

double q_form(const PhaseState& z, const PotentialSpec& p) {
    return z.v.squaredNorm() + 2.0 * p.eval(z.x) + 0.5 * z.x.squaredNorm() + z.x.dot(z.v);
}

double h_form(const PhaseState& z, const PotentialSpec& p, double sigma) {
    return z.v.squaredNorm() + z.x.dot(p.grad(z.x)) - z.dim() * sigma * sigma;
}

double p_form(const PhaseState& z, const PotentialSpec& p, double k) {
    return 2.0 * (z.x.squaredNorm() + z.v.squaredNorm() + k * p.eval(z.x));
}

double log_weight(const PhaseState& z, const PotentialSpec& p, const LyapunovParams& lp) {
    return lp.a_star * (z.v.squaredNorm() + 2.0 * p.eval(z.x) +
                        2.0 * lp.k * z.x.squaredNorm() + lp.k * z.x.dot(z.v));
}

WeightValue weight_L(const PhaseState& z, const PotentialSpec& p,
                     const LyapunovParams& lp, double r) {
    if (r <= 0.0 || r > 2.0 * lp.kappa + 1e-12)
        throw std::invalid_argument("weight_L: exponent r outside (0, 2 kappa]");
    const double arg = r * log_weight(z, p, lp);
    if (arg > 700.0) return WeightValue{std::numeric_limits<double>::max(), true};
    return WeightValue{std::exp(arg), false};
}

double weight_lower_bracket(double s, const LyapunovParams& lp) {
    return std::exp(lp.a_star * lp.bracket_lo * s * s);
}

double weight_upper_bracket(double s, const LyapunovParams& lp) {
    return std::exp(lp.a_star * (lp.bracket_hi * s * s + lp.bracket_off));
}

namespace {

// 2x2 symmetric eigen bounds of [[a11, a12], [a12, a22]].
std::pair<double, double> sym2_eigs(double a11, double a12, double a22) {
    const double m = 0.5 * (a11 + a22);
    const double r = std::sqrt(0.25 * (a11 - a22) * (a11 - a22) + a12 * a12);
    return {m - r, m + r};
}

double op_norm(const Eigen::MatrixXd& J) {
    if (J.rows() == 2) {
        // closed form via the largest eigenvalue of J^T J
        const Eigen::Matrix2d G = J.transpose() * J;
        return std::sqrt(sym2_eigs(G(0, 0), G(0, 1), G(1, 1)).second);
    }
    return J.jacobiSvd().singularValues()(0);
}

} // namespace

LyapunovParams derive_params(const PotentialSpec& p, double sigma) {
    LyapunovParams lp;
    lp.M = p.hess_bound;
    lp.k = p.c1;

    // beta: maximize (H - c3)/P_k over a phase grid in B(0, 20)^2.
    const double r_max = 20.0;
    const int n_r = 81;
    double beta = -std::numeric_limits<double>::infinity();
    const auto x_dirs = hypothesis_grid(p.dim, 1.0, 3); // unit-scale directions
    for (const auto& xd : x_dirs) {
        if (xd.norm() < 1e-12) continue;
        const Eigen::VectorXd ux = xd.normalized();
        for (int i = 0; i < n_r; ++i) {
            const double rx = -r_max + 2.0 * r_max * i / (n_r - 1);
            for (int j = 0; j < n_r; ++j) {
                const double rv = -r_max + 2.0 * r_max * j / (n_r - 1);
                if (std::abs(rx) < 1e-9 && std::abs(rv) < 1e-9) continue;
                const PhaseState z(rx * ux, rv * ux);
                const double pk = p_form(z, p, lp.k);
                if (pk < 1e-12) continue;
                beta = std::max(beta, (h_form(z, p, sigma) - p.c3) / pk);
            }
        }
    }
    if (!(beta > 0.0))
        throw std::runtime_error("derive_params: drift rate beta came out nonpositive");
    lp.beta = beta;

    const double a_upper = lp.beta * p.c1 / 32.0; // a^*
    lp.a_star = 3.0 * a_upper / (8.0 * (3.0 + lp.M));
    lp.a = lp.a_star;
    lp.kappa = 4.0 * (3.0 + lp.M) / 3.0;

    // Radial envelopes of the weight exponent. Lower: drop U >= 0. Upper:
    // 2U <= M x^2 + off with the offset scanned over the construction window.
    lp.bracket_lo = sym2_eigs(2.0 * lp.k, 0.5 * lp.k, 1.0).first;
    lp.bracket_hi = sym2_eigs(2.0 * lp.k + lp.M, 0.5 * lp.k, 1.0).second;
    double off = 0.0;
    for (const auto& x : hypothesis_grid(p.dim, 50.0, 4001))
        off = std::max(off, 2.0 * p.eval(x) - lp.M * x.squaredNorm());
    lp.bracket_off = off;
    if (lp.bracket_lo <= 0.0)
        throw std::runtime_error("derive_params: weight envelope is not coercive");

    // kappa check: s L^*(s) <= C L_*(s)^kappa on [0, 20] with C = e^{a q0}/a.
    const double C = std::exp(lp.a_star * lp.bracket_off) / lp.a_star;
    for (int i = 0; i <= 2000; ++i) {
        const double s = 20.0 * i / 2000.0;
        const double lhs = s * weight_upper_bracket(s, lp);
        const double rhs = C * std::pow(weight_lower_bracket(s, lp), lp.kappa);
        if (lhs > rhs * (1.0 + 1e-9))
            throw std::runtime_error("derive_params: kappa envelope inequality failed at |z| = " +
                                     std::to_string(s));
    }
    return lp;
}

DriftReport verify_drift(const PotentialSpec& p, const LyapunovParams& lp, double t,
                         const std::vector<PhaseState>& z_grid, const SimConfig& cfg) {
    if (t <= 0.0 || t > 1.0)
        throw std::invalid_argument("verify_drift: t must lie in (0, 1]");
    if (lp.a <= 0.0 || lp.a > lp.a_star + 1e-15)
        throw std::invalid_argument("verify_drift: need 0 < a <= a_star");
    const double denom = p.c1 * lp.beta - 16.0 * lp.a;
    if (denom <= 0.0)
        throw std::invalid_argument("verify_drift: a too large, c1 beta - 16 a <= 0");

    DriftReport rep;
    rep.t = t;
    rep.a = lp.a;
    rep.slack_strict = p.c1 * lp.beta / denom;
    rep.slack = std::exp(1.0 + lp.M) * rep.slack_strict;
    rep.pass = true;
    rep.max_ratio = 0.0;

    SimConfig run = cfg;
    run.t_final = t;
    const double discount = std::exp(-lp.beta * t / 4.0);

    for (const auto& z0 : z_grid) {
        const auto ens = simulate_ensemble(z0, p, run, {t}, true);
        const std::size_t n = ens.n_paths();
        double sum = 0.0, sum2 = 0.0;
        bool saturated = false;
        for (std::size_t i = 0; i < n; ++i) {
            const double arg = lp.a * q_form(ens.states[0][i], p);
            if (arg > 700.0) {
                saturated = true;
                break;
            }
            const double y = std::exp(arg) * op_norm(ens.tangents[0][i]);
            sum += y;
            sum2 += y * y;
        }
        DriftPoint pt;
        pt.z = z0;
        const double q0 = q_form(z0, p);
        pt.rhs = rep.slack * std::exp(lp.a * discount * q0);
        pt.rhs_strict = rep.slack_strict * std::exp(lp.a * discount * q0);
        if (saturated) {
            pt.inconclusive = true;
            rep.pass = false;
        } else {
            const double mean = sum / n;
            const double var = std::max(0.0, sum2 / n - mean * mean) * n / (n - 1.0);
            const double se = std::sqrt(var / n);
            pt.lhs_mean = mean;
            pt.lhs_ucb = mean + 2.3263478740408408 * se; // 99% one-sided
            pt.pass = pt.lhs_ucb <= pt.rhs;
            pt.pass_strict = pt.lhs_ucb <= pt.rhs_strict;
            rep.max_ratio = std::max(rep.max_ratio, pt.lhs_ucb / std::exp(lp.a * q0));
            if (!pt.pass) rep.pass = false;
        }
        rep.points.push_back(std::move(pt));
    }
    return rep;
}

void write_drift_csv(std::ostream& os, const DriftReport& rep) {
    const int d = rep.points.empty() ? 1 : rep.points.front().z.dim();
    for (int j = 1; j <= d; ++j) os << "x_" << j << ",";
    for (int j = 1; j <= d; ++j) os << "v_" << j << ",";
    os << "lhs_estimate,lhs_ucb,rhs,pass\n";
    char buf[32];
    auto put = [&](double value, char sep) {
        std::snprintf(buf, sizeof(buf), "%.17g", value);
        os << buf << sep;
    };
    for (const auto& pt : rep.points) {
        for (int j = 0; j < d; ++j) put(pt.z.x(j), ',');
        for (int j = 0; j < d; ++j) put(pt.z.v(j), ',');
        put(pt.lhs_mean, ',');
        put(pt.lhs_ucb, ',');
        put(pt.rhs, ',');
        os << (pt.inconclusive ? "inconclusive" : (pt.pass ? "1" : "0")) << "\n";
    }
}

} // namespace hypocert

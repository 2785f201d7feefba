#include "hypocert/certify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace hypocert {

namespace {

// log of the radial envelopes' inequality gap at radius s:
//   ln C + a xi (hi s^2 + off) - ln alpha - a lo s^2.
double far_gap(double s, const LyapunovParams& lp, double xi, double c_drift, double alpha) {
    return std::log(c_drift) +
           lp.a_star * xi * (lp.bracket_hi * s * s + lp.bracket_off) - std::log(alpha) -
           lp.a_star * lp.bracket_lo * s * s;
}

std::vector<PhaseState> corner_grid(int dim, double b) {
    std::vector<PhaseState> grid;
    if (dim == 1) {
        for (double x : {-b, 0.0, b})
            for (double v : {-b, 0.0, b}) {
                Eigen::VectorXd xx(1), vv(1);
                xx << x;
                vv << v;
                grid.emplace_back(xx, vv);
            }
        return grid;
    }
    grid.emplace_back(Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Zero(dim));
    for (int j = 0; j < dim; ++j)
        for (double s : {-b, b}) {
            Eigen::VectorXd e = Eigen::VectorXd::Zero(dim);
            e(j) = s;
            grid.emplace_back(e, Eigen::VectorXd::Zero(dim));
            grid.emplace_back(Eigen::VectorXd::Zero(dim), e);
        }
    return grid;
}

} // namespace

double measure_drift_constant(const PotentialSpec& p, const LyapunovParams& lp, double t,
                              const std::vector<PhaseState>& z_grid, const SimConfig& cfg) {
    if (t <= 0.0) throw std::invalid_argument("measure_drift_constant: t must be positive");
    SimConfig run = cfg;
    run.t_final = t;
    double worst = 0.0;
    for (const auto& z0 : z_grid) {
        const auto ens = simulate_ensemble(z0, p, run, {t}, true);
        const std::size_t n = ens.n_paths();
        double sum = 0.0, sum2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double arg = lp.a_star * q_form(ens.states[0][i], p);
            if (arg > 700.0)
                throw CertifyError("drift_constant", "weight saturated along a path");
            const Eigen::MatrixXd& J = ens.tangents[0][i];
            const double y = std::exp(arg) * J.jacobiSvd().singularValues()(0);
            sum += y;
            sum2 += y * y;
        }
        const double mean = sum / n;
        const double var = std::max(0.0, sum2 / n - mean * mean) * n / (n - 1.0);
        const double ucb = mean + 2.3263478740408408 * std::sqrt(var / n);
        worst = std::max(worst, ucb / std::exp(lp.a_star * q_form(z0, p)));
    }
    return worst;
}

FarReport far_region_factor(const LyapunovParams& lp, const MetricParams& mp, double t,
                            double alpha_target, double c_drift) {
    (void)mp;
    if (alpha_target < 0.5 || alpha_target >= 1.0)
        throw std::invalid_argument("far_region_factor: alpha_target must lie in [1/2, 1)");
    if (c_drift <= 0.0)
        throw std::invalid_argument("far_region_factor: c_drift must be positive");
    const double xi = std::exp(-lp.beta * t / 4.0);
    if (lp.bracket_lo - xi * lp.bracket_hi <= 0.0)
        throw CertifyError("far_region",
                           "t too small: discounted upper envelope dominates the lower one");
    FarReport rep;
    rep.t = t;
    rep.alpha_target = alpha_target;
    if (far_gap(0.0, lp, xi, c_drift, alpha_target) <= 0.0) {
        rep.R = 0.0;
        rep.c1_prop = 0.0;
        rep.K = 0.0;
        rep.degenerate = true;
        return rep;
    }
    double lo = 0.0, hi = 1e3;
    if (far_gap(hi, lp, xi, c_drift, alpha_target) > 0.0)
        throw CertifyError("far_region", "no contraction radius below 1e3; t too small");
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (far_gap(mid, lp, xi, c_drift, alpha_target) > 0.0 ? lo : hi) = mid;
    }
    rep.R = hi;
    rep.c1_prop =
        c_drift * rep.R * std::exp(lp.a_star * (lp.bracket_hi * rep.R * rep.R + lp.bracket_off));
    if (!std::isfinite(rep.c1_prop))
        throw CertifyError("far_region", "additive constant C1 overflowed");
    rep.K = 4.0 * rep.c1_prop;
    return rep;
}

SmallReport small_region_factor(double c_drift, const LyapunovParams& lp,
                                const MetricParams& mp, double t) {
    SmallReport rep;
    rep.t_min = std::max(4.0 * std::log(lp.kappa / mp.r) / lp.beta, 3.0 * std::log(12.0));
    rep.delta_max = 1.0 / (2.0 * (c_drift + 2.0));
    if (t < rep.t_min)
        throw CertifyError("small_region", "t = " + std::to_string(t) +
                                               " below the minimal admissible t = " +
                                               std::to_string(rep.t_min));
    if (mp.delta > rep.delta_max + 1e-15)
        throw CertifyError("small_region", "delta exceeds the cap 1/(2(C+2)) = " +
                                               std::to_string(rep.delta_max));
    return rep;
}

double derive_r_prime(const LyapunovParams& lp, double R, double c1_prop) {
    if (c1_prop <= 0.0) return R;
    const double target = 8.0 * c1_prop;
    const double a = lp.a_star * lp.bracket_lo;
    const double ds = 1e-2;
    double acc = 0.0;
    double s = R;
    double f_prev = std::exp(a * s * s);
    while (s < 1e5) {
        const double s_next = s + ds;
        const double f_next = std::exp(a * s_next * s_next);
        acc += 0.5 * (f_prev + f_next) * ds;
        s = s_next;
        f_prev = f_next;
        if (acc >= target) return s;
        if (!std::isfinite(acc))
            throw CertifyError("mid_region", "tail integral for R' overflowed");
    }
    throw CertifyError("mid_region", "no R' below 1e5 satisfies the tail-integral condition");
}

MidReport mid_region_factor(const LyapunovParams& lp, const MetricParams& mp,
                            double c_drift, const FarReport& far,
                            const ProbEstimate& coupling) {
    MidReport rep;
    rep.r_prime = derive_r_prime(lp, far.R, far.c1_prop);
    const double a = coupling.lo_rho > 0.0 ? coupling.lo_rho : coupling.lo_euclid;
    if (a <= 0.0)
        throw InconclusiveError(
            "mid_region: coupling lower bound is zero; increase n_paths or t");
    rep.a_coupling = a;
    rep.factor = 1.0 - a / 4.0;
    rep.log_c_star =
        std::log(std::max(1.0, c_drift)) +
        lp.kappa * lp.a_star * (lp.bracket_hi * rep.r_prime * rep.r_prime + lp.bracket_off);
    // beta_w <= a / (8 C_*), evaluated in log space to survive huge C_*
    const double log_cap = std::log(a) - std::log(8.0) - rep.log_c_star;
    const double cap = std::max(std::exp(log_cap), std::numeric_limits<double>::min());
    rep.beta_w = std::min(mp.beta_w, cap);
    return rep;
}

HarrisCertificate assemble(const PotentialSpec& p, const SimConfig& cfg) {
    const auto hyp = check_hypotheses(p, 10.0, 401);
    if (!hyp.pass())
        throw CertifyError("hypotheses",
                           "potential fails " +
                               std::string(hyp.drift_pass ? "Hessian bound" : "drift condition") +
                               " (margin " +
                               std::to_string(std::min(hyp.drift_margin, hyp.hessian_margin)) +
                               ")");

    HarrisCertificate cert;
    cert.potential = p.name;
    try {
        cert.lp = derive_params(p, cfg.sigma);
    } catch (const std::exception& e) {
        throw CertifyError("derive_params", e.what());
    }
    const LyapunovParams& lp = cert.lp;
    cert.c_m = gradient_bound_constant(p.hess_bound);

    MetricParams mp;
    mp.potential = &p;
    mp.lp = lp;
    mp.r = cert.r_metric;
    mp.beta_w = 0.5; // provisional; capped by the mid-region constraint below

    // Common time at which all three regional contractions are admissible.
    const double t_small = std::max(4.0 * std::log(lp.kappa / mp.r) / lp.beta,
                                    3.0 * std::log(12.0));
    const double t_far =
        4.0 * std::log(2.0 * lp.bracket_hi / lp.bracket_lo) / lp.beta;
    cert.t_cert = std::max(t_small, t_far);

    const auto grid = corner_grid(p.dim, 2.0);
    cert.c_drift = measure_drift_constant(p, lp, cert.t_cert, grid, cfg);

    cert.delta = std::min(0.5, 1.0 / (2.0 * (cert.c_drift + 2.0)));
    mp.delta = cert.delta;

    cert.small = small_region_factor(cert.c_drift, lp, mp, cert.t_cert);

    const auto drift = verify_drift(p, lp, 1.0, grid, cfg);
    if (!drift.pass)
        throw CertifyError("drift", "Lyapunov drift inequality failed on the verification grid");

    {
        const int d = p.dim;
        std::vector<QuadraticObservable> fns;
        Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(2 * d, 2 * d);
        Eigen::VectorXd ex = Eigen::VectorXd::Zero(2 * d), ev = ex;
        ex(0) = 1.0;
        ev(d) = 1.0;
        fns.emplace_back(zero, ex, 0.0);
        fns.emplace_back(zero, ev, 0.0);
        fns.emplace_back(zero, Eigen::VectorXd(ex + ev), 0.0);
        fns.emplace_back(Eigen::MatrixXd(Eigen::MatrixXd::Identity(2 * d, 2 * d)),
                         Eigen::VectorXd(Eigen::VectorXd::Zero(2 * d)), 0.0);
        const auto grad = verify_gradient_bound(p, 1.0, fns, corner_grid(d, 1.0), cfg);
        if (!grad.pass)
            throw CertifyError("gradient", "semigroup gradient bound failed at t = 1");
    }

    cert.far = far_region_factor(lp, mp, cert.t_cert, 0.5, cert.c_drift);
    const double r_prime = derive_r_prime(lp, cert.far.R, cert.far.c1_prop);

    // Coupling over representative pairs inside the middle region.
    const double b = cert.far.degenerate ? 0.0 : std::min(2.0, r_prime);
    std::vector<std::pair<PhaseState, PhaseState>> pairs;
    auto pt = [&](double x) {
        Eigen::VectorXd xx = Eigen::VectorXd::Zero(p.dim);
        xx(0) = x;
        return PhaseState(xx, Eigen::VectorXd::Zero(p.dim));
    };
    if (b > 0.0) {
        pairs = {{pt(-b), pt(b)}, {pt(-b), pt(0.0)}, {pt(0.0), pt(b)}};
    } else {
        pairs = {{pt(0.0), pt(0.0)}};
    }
    // In the degenerate branch the middle region is empty, so the ball
    // constraint of the weighted event is dropped; the measured bound then
    // only feeds a vacuous factor.
    const double r_prime_event =
        cert.far.degenerate ? std::numeric_limits<double>::infinity() : r_prime;
    bool have = false;
    for (const auto& [za, zb] : pairs) {
        const auto est =
            coupling_probability(p, za, zb, cert.t_cert, cert.delta, cfg, &mp, r_prime_event);
        if (!have || std::min(est.lo_rho, est.lo_euclid) <
                         std::min(cert.coupling.lo_rho, cert.coupling.lo_euclid)) {
            cert.coupling = est;
            have = true;
        }
    }
    if (cert.coupling.inconclusive)
        throw InconclusiveError(
            "coupling: zero successes at t = " + std::to_string(cert.t_cert) +
            "; increase n_paths");

    cert.mid = mid_region_factor(lp, mp, cert.c_drift, cert.far, cert.coupling);
    cert.beta_w = cert.mid.beta_w;
    mp.beta_w = cert.beta_w;

    cert.gamma_far = cert.far.alpha_target;
    cert.gamma_small = cert.small.factor;
    cert.gamma_mid = cert.mid.factor;
    const double gamma = std::max({cert.gamma_far, cert.gamma_small, cert.gamma_mid});
    if (gamma >= 1.0)
        throw CertifyError("assemble", "no regional factor below 1");
    cert.lambda_final = -std::log(gamma) / cert.t_cert;

    // W_rho <= (1/beta_w) W_d and d <= (1/delta + beta_w) rho give the
    // prefactor; kept in log space since beta_w may be astronomically small.
    cert.log_c_final = std::log(1.0 / cert.delta + cert.beta_w) - std::log(cert.beta_w) -
                       std::log(gamma);
    cert.c_final = std::exp(cert.log_c_final);
    return cert;
}

void write_certificate(std::ostream& os, const HarrisCertificate& cert) {
    char buf[32];
    auto put = [&](const char* key, double value) {
        std::snprintf(buf, sizeof(buf), "%.17g", value);
        os << key << "=" << buf << "\n";
    };
    os << "potential=" << cert.potential << "\n";
    put("a_star", cert.lp.a_star);
    put("k", cert.lp.k);
    put("beta", cert.lp.beta);
    put("kappa", cert.lp.kappa);
    put("M", cert.lp.M);
    put("C_M", cert.c_m);
    put("r", cert.r_metric);
    put("delta", cert.delta);
    put("beta_w", cert.beta_w);
    put("T_cert", cert.t_cert);
    put("C_drift", cert.c_drift);
    put("R", cert.far.R);
    put("C1", cert.far.c1_prop);
    put("K", cert.far.K);
    put("R_prime", cert.mid.r_prime);
    put("log_C_star", cert.mid.log_c_star);
    put("a_coupling", cert.mid.a_coupling);
    put("gamma_far", cert.gamma_far);
    put("gamma_small", cert.gamma_small);
    put("gamma_mid", cert.gamma_mid);
    put("lambda_final", cert.lambda_final);
    put("log_C_final", cert.log_c_final);
    put("C_final", cert.c_final);
}

DecayCurve measure_decay(const PotentialSpec& p, const PhaseState& za, const PhaseState& zb,
                         const std::vector<double>& t_grid, const SimConfig& cfg,
                         const MetricParams& mp, bool with_euclid, bool with_rho) {
    if (t_grid.empty()) throw std::invalid_argument("measure_decay: empty time grid");
    if (!with_euclid && !with_rho)
        throw std::invalid_argument("measure_decay: at least one ground metric required");
    for (std::size_t k = 1; k < t_grid.size(); ++k)
        if (t_grid[k] < t_grid[k - 1])
            throw std::invalid_argument("measure_decay: t_grid must be sorted");

    SimConfig run = cfg;
    run.t_final = std::max(t_grid.back(), 1e-12);
    std::vector<double> times = t_grid;
    if (times.front() <= 0.0) times.front() = 0.0;
    // simulate_ensemble wants positive record times; handle t = 0 by
    // recording at an epsilon only if needed
    const bool has_zero = times.front() == 0.0;
    std::vector<double> rec(times.begin() + (has_zero ? 1 : 0), times.end());
    if (rec.empty()) rec.push_back(run.t_final);

    SimConfig run_b = run, run_a2 = run;
    run_b.master_seed = run.master_seed + 0x9E3779B97F4A7C15ULL;
    run_a2.master_seed = run.master_seed + 2 * 0x9E3779B97F4A7C15ULL;
    const auto ens_a = simulate_ensemble(za, p, run, rec, false);
    const auto ens_b = simulate_ensemble(zb, p, run_b, rec, false);
    const auto ens_a2 = simulate_ensemble(za, p, run_a2, rec, false);
    const std::size_t n = ens_a.n_paths();

    const GroundMetric euclid = [](const PhaseState& a, const PhaseState& b) {
        return (a.packed() - b.packed()).norm();
    };
    const GroundMetric rho = [&mp](const PhaseState& a, const PhaseState& b) {
        return rho_upper(a, b, mp, 1.0);
    };

    DecayCurve curve;
    curve.times = times;
    auto at = [&](const TrajectoryEnsemble& e, std::size_t k) { return e.states[k]; };
    for (std::size_t kt = 0; kt < times.size(); ++kt) {
        if (has_zero && kt == 0) {
            // both ensembles are still delta masses; W1 is the ground distance
            if (with_euclid) curve.w1_euclid.push_back(euclid(za, zb));
            if (with_rho) curve.w1_rho.push_back(rho(za, zb));
            continue;
        }
        const std::size_t k = kt - (has_zero ? 1 : 0);
        if (with_euclid)
            curve.w1_euclid.push_back(wasserstein1(at(ens_a, k), at(ens_b, k), euclid, cfg.workers, true));
        if (with_rho)
            curve.w1_rho.push_back(wasserstein1(at(ens_a, k), at(ens_b, k), rho, cfg.workers, true));
    }
    const std::size_t klast = rec.size() - 1;
    if (with_euclid)
        curve.floor_euclid = wasserstein1(at(ens_a, klast), at(ens_a2, klast), euclid, cfg.workers, true);
    if (with_rho)
        curve.floor_rho = wasserstein1(at(ens_a, klast), at(ens_a2, klast), rho, cfg.workers, true);

    const std::vector<double>& w1 = with_euclid ? curve.w1_euclid : curve.w1_rho;
    const double floor = with_euclid ? curve.floor_euclid : curve.floor_rho;
    std::size_t end = 0;
    while (end < w1.size() && w1[end] > 3.0 * floor) ++end;
    curve.window_begin = 0;
    curve.window_end = end;
    if (end < 3) {
        curve.inconclusive = true;
        return curve;
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double m = static_cast<double>(end);
    for (std::size_t i = 0; i < end; ++i) {
        sx += times[i];
        sy += std::log(w1[i]);
        sxx += times[i] * times[i];
        sxy += times[i] * std::log(w1[i]);
    }
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    const double intercept = (sy - slope * sx) / m;
    double rss = 0.0;
    for (std::size_t i = 0; i < end; ++i) {
        const double r = std::log(w1[i]) - (intercept + slope * times[i]);
        rss += r * r;
    }
    const double sxx_c = sxx - sx * sx / m;
    const double se = end > 2 ? std::sqrt(rss / (m - 2.0) / sxx_c) : 0.0;
    curve.lambda_hat = -slope;
    curve.lambda_ci = 1.959963984540054 * se;
    return curve;
}

void write_decay_csv(std::ostream& os, const DecayCurve& curve) {
    os << "t,w1_euclid,w1_rho,in_window,lambda_hat,lambda_ci,floor_euclid,floor_rho\n";
    char buf[32];
    auto fmt = [&](double value) {
        std::snprintf(buf, sizeof(buf), "%.17g", value);
        return std::string(buf);
    };
    for (std::size_t i = 0; i < curve.times.size(); ++i) {
        os << fmt(curve.times[i]) << ","
           << (i < curve.w1_euclid.size() ? fmt(curve.w1_euclid[i]) : "") << ","
           << (i < curve.w1_rho.size() ? fmt(curve.w1_rho[i]) : "") << ","
           << (i >= curve.window_begin && i < curve.window_end ? "1" : "0") << ","
           << fmt(curve.lambda_hat) << "," << fmt(curve.lambda_ci) << ","
           << fmt(curve.floor_euclid) << "," << fmt(curve.floor_rho) << "\n";
    }
}

} // namespace hypocert

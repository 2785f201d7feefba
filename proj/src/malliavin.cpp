#include "hypocert/malliavin.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace hypocert {

Eigen::VectorXd commutator_direction(const PotentialSpec& p, const PhaseState& z) {
    const int d = z.dim();
    Eigen::VectorXd a1 = Eigen::VectorXd::Zero(2 * d);
    a1.tail(d).setOnes(); // noise enters velocity only
    return drift_jacobian(p, z.x) * a1;
}

Eigen::Matrix2d gaussian_part_cov(double t, double sigma) {
    if (t <= 0.0) throw std::invalid_argument("gaussian_part_cov: t must be positive");
    const double s2 = sigma * sigma;
    const double t2 = t * t, t3 = t2 * t;
    Eigen::Matrix2d S;
    S << s2 * t3 / 3.0, s2 * (t2 / 2.0 - t3 / 3.0), //
        s2 * (t2 / 2.0 - t3 / 3.0), s2 * (t - t2 + t3 / 3.0);
    return S;
}

Eigen::MatrixXd gaussian_part_cov_full(int dim, double t, double sigma) {
    const Eigen::Matrix2d S = gaussian_part_cov(t, sigma);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(2 * dim, 2 * dim);
    for (int i = 0; i < dim; ++i) {
        out(i, i) = S(0, 0);
        out(i, dim + i) = S(0, 1);
        out(dim + i, i) = S(1, 0);
        out(dim + i, dim + i) = S(1, 1);
    }
    return out;
}

ApproxReport validate_gaussian_approx(const PotentialSpec& p, const PhaseState& z0,
                                      const std::vector<double>& t_grid,
                                      const SimConfig& cfg) {
    if (t_grid.empty())
        throw std::invalid_argument("validate_gaussian_approx: empty time grid");
    for (double t : t_grid)
        if (t <= 0.0 || t > 0.5)
            throw std::invalid_argument("validate_gaussian_approx: times must lie in (0, 0.5]");

    ApproxReport rep;
    rep.z0 = z0;
    const int d2 = 2 * z0.dim();

    for (double t : t_grid) {
        SimConfig run = cfg;
        run.t_final = t;
        const auto ens = simulate_ensemble(z0, p, run, {t}, false);
        const std::size_t n = ens.n_paths();
        if (n < 2) throw std::invalid_argument("validate_gaussian_approx: need n_paths >= 2");

        Eigen::VectorXd mean = Eigen::VectorXd::Zero(d2);
        for (std::size_t i = 0; i < n; ++i) mean += ens.states[0][i].packed();
        mean /= static_cast<double>(n);
        Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d2, d2);
        Eigen::VectorXd var = Eigen::VectorXd::Zero(d2);
        for (std::size_t i = 0; i < n; ++i) {
            const Eigen::VectorXd c = ens.states[0][i].packed() - mean;
            cov += c * c.transpose();
            var += c.cwiseAbs2();
        }
        cov /= static_cast<double>(n - 1);
        var /= static_cast<double>(n - 1);

        ApproxPoint pt;
        pt.t = t;
        pt.dev_norm =
            (cov - gaussian_part_cov_full(z0.dim(), t, run.sigma)).cwiseAbs().maxCoeff();
        pt.predicted = run.sigma * run.sigma * t * t * t * t;
        if (p.is_quadratic()) {
            const Eigen::VectorXd ref = quadratic_flow_matrix(z0.dim(), t) * z0.packed();
            const Eigen::VectorXd se = (var / static_cast<double>(n)).cwiseSqrt();
            pt.mean_dev = (mean - ref).cwiseAbs().maxCoeff();
            pt.mean_se = se.maxCoeff();
            if (((mean - ref).cwiseAbs() - 3.0 * se).maxCoeff() > 0.0) rep.mean_pass = false;
        }
        rep.points.push_back(pt);
    }

    // log-log least-squares slope of dev_norm against t
    if (rep.points.size() >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const double m = static_cast<double>(rep.points.size());
        for (const auto& pt : rep.points) {
            const double lx = std::log(pt.t);
            const double ly = std::log(std::max(pt.dev_norm, 1e-300));
            sx += lx;
            sy += ly;
            sxx += lx * lx;
            sxy += lx * ly;
        }
        rep.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    }
    return rep;
}

void write_approx_csv(std::ostream& os, const ApproxReport& rep) {
    os << "t,dev_norm,predicted,mean_dev,mean_se,slope\n";
    char buf[32];
    auto put = [&](double value, char sep) {
        std::snprintf(buf, sizeof(buf), "%.17g", value);
        os << buf << sep;
    };
    for (const auto& pt : rep.points) {
        put(pt.t, ',');
        put(pt.dev_norm, ',');
        put(pt.predicted, ',');
        put(pt.mean_dev, ',');
        put(pt.mean_se, ',');
        put(rep.slope, '\n');
    }
}

void wilson_interval(std::size_t k, std::size_t n, double& lo, double& hi) {
    if (n == 0) throw std::invalid_argument("wilson_interval: n must be positive");
    const double z = 1.959963984540054; // 95% two-sided
    const double nn = static_cast<double>(n);
    const double phat = static_cast<double>(k) / nn;
    const double denom = 1.0 + z * z / nn;
    const double center = (phat + z * z / (2.0 * nn)) / denom;
    const double half =
        z * std::sqrt(phat * (1.0 - phat) / nn + z * z / (4.0 * nn * nn)) / denom;
    lo = std::max(0.0, center - half);
    hi = std::min(1.0, center + half);
}

ProbEstimate coupling_probability(const PotentialSpec& p, const PhaseState& z1,
                                  const PhaseState& z2, double t, double delta,
                                  const SimConfig& cfg, const MetricParams* mp,
                                  double r_prime) {
    if (delta <= 0.0) throw std::invalid_argument("coupling_probability: delta must be positive");
    if (t <= 0.0) throw std::invalid_argument("coupling_probability: t must be positive");

    SimConfig run1 = cfg;
    run1.t_final = t;
    SimConfig run2 = run1;
    run2.master_seed = cfg.master_seed + 0x9E3779B97F4A7C15ULL; // independent pair member

    const auto ens1 = simulate_ensemble(z1, p, run1, {t}, false);
    const auto ens2 = simulate_ensemble(z2, p, run2, {t}, false);

    ProbEstimate est;
    est.z1 = z1;
    est.z2 = z2;
    est.t = t;
    est.delta = delta;
    est.n = ens1.n_paths();
    for (std::size_t i = 0; i < est.n; ++i) {
        const PhaseState& a = ens1.states[0][i];
        const PhaseState& b = ens2.states[0][i];
        if ((a.packed() - b.packed()).norm() < delta) ++est.hits_euclid;
        if (mp) {
            if (a.packed().norm() <= r_prime && b.packed().norm() <= r_prime &&
                rho_upper(a, b, *mp, mp->r) < delta)
                ++est.hits_rho;
        }
    }
    est.p_euclid = static_cast<double>(est.hits_euclid) / est.n;
    wilson_interval(est.hits_euclid, est.n, est.lo_euclid, est.hi_euclid);
    if (mp) {
        est.p_rho = static_cast<double>(est.hits_rho) / est.n;
        wilson_interval(est.hits_rho, est.n, est.lo_rho, est.hi_rho);
    }
    est.inconclusive = est.hits_euclid == 0 || (mp && est.hits_rho == 0);
    return est;
}

void write_prob_csv(std::ostream& os, const std::vector<ProbEstimate>& estimates) {
    const int d = estimates.empty() ? 1 : estimates.front().z1.dim();
    for (const char* tag : {"z1_x_", "z1_v_", "z2_x_", "z2_v_"})
        for (int j = 1; j <= d; ++j) os << tag << j << ",";
    os << "t,delta,n,p_euclid,lo_euclid,hi_euclid,p_rho,lo_rho,hi_rho,inconclusive\n";
    char buf[32];
    auto put = [&](double value, char sep) {
        std::snprintf(buf, sizeof(buf), "%.17g", value);
        os << buf << sep;
    };
    for (const auto& e : estimates) {
        for (int j = 0; j < d; ++j) put(e.z1.x(j), ',');
        for (int j = 0; j < d; ++j) put(e.z1.v(j), ',');
        for (int j = 0; j < d; ++j) put(e.z2.x(j), ',');
        for (int j = 0; j < d; ++j) put(e.z2.v(j), ',');
        put(e.t, ',');
        put(e.delta, ',');
        os << e.n << ",";
        put(e.p_euclid, ',');
        put(e.lo_euclid, ',');
        put(e.hi_euclid, ',');
        put(e.p_rho, ',');
        put(e.lo_rho, ',');
        put(e.hi_rho, ',');
        os << (e.inconclusive ? "1" : "0") << "\n";
    }
}

double alpha_reference_bound(double t, double delta, double R, double C, double k, double m) {
    if (t <= 0.0 || delta <= 0.0 || R <= 0.0)
        throw std::invalid_argument("alpha_reference_bound: t, delta, R must be positive");
    const double t3 = t * t * t;
    const double gauss_mass = C * delta * delta / (t * t) * std::exp(-k * m * m / t3);
    const double tail = 8.0 * std::exp(-delta * delta / (16.0 * C * t3 * t * t));
    return std::min(1.0, std::max(0.0, gauss_mass - tail));
}

} // namespace hypocert

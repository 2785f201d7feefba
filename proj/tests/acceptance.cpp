// Acceptance suite: one criterion per invocation, selected by argv[1].
// Prints a single PASS/FAIL line per criterion; exit 0 on pass.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hypocert/certify.hpp"
#include "hypocert/gamma2.hpp"
#include "hypocert/malliavin.hpp"
#include "hypocert/metric.hpp"

using namespace hypocert;

namespace {

PhaseState state1(double x, double v) {
    Eigen::VectorXd xv(1), vv(1);
    xv << x;
    vv << v;
    return PhaseState(xv, vv);
}

std::vector<PhaseState> lattice(double radius, int n_axis) {
    std::vector<PhaseState> grid;
    for (int i = 0; i < n_axis; ++i)
        for (int j = 0; j < n_axis; ++j)
            grid.push_back(state1(-radius + 2.0 * radius * i / (n_axis - 1),
                                  -radius + 2.0 * radius * j / (n_axis - 1)));
    return grid;
}

int report(int id, bool pass, const std::string& detail) {
    std::printf("criterion %d: %s (%s)\n", id, pass ? "PASS" : "FAIL", detail.c_str());
    return pass ? 0 : 1;
}

const char* kRateFile = "acceptance_rate.txt";

// 1. Spectral-rate reproduction: delta masses at (+-3, 0), n = 4096,
//    Euclidean empirical W1 on t in [0, 8]; fitted rate within [0.4, 0.6]
//    against the spectral abscissa 1/2; wall time <= 2 minutes.
int criterion_1() {
    const auto t0 = std::chrono::steady_clock::now();
    const PotentialSpec p = make_quadratic(1);
    SimConfig cfg;
    cfg.t_final = 8.0;
    cfg.n_paths = 4096;
    cfg.master_seed = 7;
    cfg.scheme = Scheme::exact_ou;
    cfg.workers = 1; // the matching solver dominates and is serial anyway
    MetricParams mp;
    mp.potential = &p;
    LyapunovParams lp = derive_params(p);
    mp.lp = lp;
    const std::vector<double> t_grid{0, 1, 2, 3, 4, 5, 6, 7, 8};
    const DecayCurve curve =
        measure_decay(p, state1(3.0, 0.0), state1(-3.0, 0.0), t_grid, cfg, mp, true, false);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::ofstream(kRateFile) << curve.lambda_hat << " " << curve.lambda_ci << "\n";

    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "lambda_hat = %.4f +/- %.4f, target [0.4, 0.6], wall %.1fs <= 120s",
                  curve.lambda_hat, curve.lambda_ci, wall);
    const bool pass = !curve.inconclusive && curve.lambda_hat >= 0.4 &&
                      curve.lambda_hat <= 0.6 && wall <= 120.0;
    return report(1, pass, detail);
}

// 2. Gaussian-approximation scaling: n = 10^6, t in {0.05, 0.1, 0.2, 0.4},
//    log-log slope of ||Cov_MC - Sigma_G||_inf against t must be >= 3.5;
//    wall time <= 5 minutes.
int criterion_2() {
    const auto t0 = std::chrono::steady_clock::now();
    const PotentialSpec p = make_quadratic(1);
    SimConfig cfg;
    cfg.t_final = 0.4;
    cfg.n_paths = 1000000;
    cfg.master_seed = 2;
    cfg.scheme = Scheme::exact_ou;
    cfg.workers = 0;
    const auto rep =
        validate_gaussian_approx(p, state1(1.0, 0.0), {0.05, 0.1, 0.2, 0.4}, cfg);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "deviation slope = %.3f, threshold 3.5; mean check %s; wall %.1fs <= 300s",
                  rep.slope, rep.mean_pass ? "ok" : "failed", wall);
    const bool pass = rep.slope >= 3.5 && rep.mean_pass && wall <= 300.0;
    return report(2, pass, detail);
}

// 3. Lyapunov drift inequality with 99% UCB at all 25 grid points x 3 times
//    for both shipped potentials.
int criterion_3() {
    SimConfig cfg;
    cfg.dt = 1e-2;
    cfg.n_paths = 10000;
    cfg.master_seed = 3;
    cfg.workers = 0;
    const auto grid = lattice(2.0, 5);
    bool all = true;
    std::ostringstream detail;
    for (const PotentialSpec& p : {make_quadratic(1), make_bump_double_well(2.0, 1.0)}) {
        const LyapunovParams lp = derive_params(p);
        for (double t : {0.25, 0.5, 1.0}) {
            cfg.t_final = t;
            const DriftReport rep = verify_drift(p, lp, t, grid, cfg);
            int n_pass = 0;
            for (const auto& pt : rep.points) n_pass += pt.pass ? 1 : 0;
            all = all && rep.pass;
            detail << p.name << " t=" << t << " " << n_pass << "/25 ";
        }
    }
    return report(3, all, detail.str());
}

// 4. Pointwise second-order lower bound and the first-order sandwich on
//    1000 random quadratic observables x random points, both potentials,
//    to 1e-10.
int criterion_4() {
    std::mt19937 gen(44);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    auto rand_obs = [&]() {
        Eigen::MatrixXd A(2, 2);
        A(0, 0) = u(gen);
        A(1, 1) = u(gen);
        A(0, 1) = A(1, 0) = u(gen);
        Eigen::VectorXd b(2);
        b << u(gen), u(gen);
        return QuadraticObservable(A, b, u(gen));
    };
    int violations = 0;
    double worst = 0.0;
    for (const PotentialSpec& p : {make_quadratic(1), make_bump_double_well(2.0, 1.0)}) {
        const double M = p.hess_bound;
        const double c_lower = 14.0 + 6.0 * M * M + 2.0 * M;
        for (int i = 0; i < 1000; ++i) {
            const QuadraticObservable f = rand_obs();
            const PhaseState z = state1(u(gen), u(gen));
            const double gx2 = f.grad_x(z).squaredNorm();
            const double gv2 = f.grad_v(z).squaredNorm();
            const double margin2 = gamma2_form(f, p, z) - (gx2 - c_lower * gv2);
            const double g = gamma_form(f, f, z);
            const double lo = g - (gx2 + gv2);
            const double hi = 3.0 * (gx2 + gv2) - g;
            worst = std::min({worst, margin2, lo, hi});
            if (margin2 < -1e-10 || lo < -1e-10 || hi < -1e-10) ++violations;
        }
    }
    char detail[120];
    std::snprintf(detail, sizeof(detail), "%d/2000 violations, worst margin %.3e >= -1e-10",
                  violations, worst);
    return report(4, violations == 0, detail);
}

// 5. Semigroup gradient bound (LHS <= RHS + 3 SE) on the quadratic
//    benchmark at t in {0.5, 1, 2, 10}.
int criterion_5() {
    const PotentialSpec p = make_quadratic(1);
    SimConfig cfg;
    cfg.n_paths = 20000;
    cfg.master_seed = 5;
    cfg.scheme = Scheme::exact_ou;
    cfg.workers = 0;

    std::vector<QuadraticObservable> fns;
    const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(2, 2);
    Eigen::VectorXd ex(2), ev(2);
    ex << 1.0, 0.0;
    ev << 0.0, 1.0;
    fns.emplace_back(zero, ex, 0.0);
    fns.emplace_back(zero, ev, 0.0);
    fns.emplace_back(zero, Eigen::VectorXd(ex + ev), 0.0);
    fns.emplace_back(Eigen::MatrixXd(Eigen::MatrixXd::Identity(2, 2)),
                     Eigen::VectorXd(Eigen::VectorXd::Zero(2)), 0.0);
    const auto grid = lattice(1.0, 3);

    bool all = true;
    std::ostringstream detail;
    for (double t : {0.5, 1.0, 2.0, 10.0}) {
        cfg.t_final = t;
        const GradientReport rep = verify_gradient_bound(p, t, fns, grid, cfg);
        all = all && rep.pass;
        detail << "t=" << t << (rep.pass ? " ok " : " FAIL ");
    }
    return report(5, all, detail.str());
}

// 6. Coupling positivity: R = 2, delta = 0.5, t = 1, quadratic potential,
//    n = 10^5 pairs; the Wilson 95% lower bound is positive on all 9
//    initial pairs, for the Euclidean and the weighted event.
int criterion_6() {
    const PotentialSpec p = make_quadratic(1);
    const LyapunovParams lp = derive_params(p);
    MetricParams mp;
    mp.potential = &p;
    mp.lp = lp;
    SimConfig cfg;
    cfg.t_final = 1.0;
    cfg.n_paths = 100000;
    cfg.master_seed = 6;
    cfg.scheme = Scheme::exact_ou;
    cfg.workers = 0;

    double min_lo_euclid = 1.0, min_lo_rho = 1.0;
    for (double xa : {-2.0, 0.0, 2.0})
        for (double xb : {-2.0, 0.0, 2.0}) {
            const auto est =
                coupling_probability(p, state1(xa, 0.0), state1(xb, 0.0), 1.0, 0.5, cfg,
                                     &mp, std::numeric_limits<double>::infinity());
            min_lo_euclid = std::min(min_lo_euclid, est.lo_euclid);
            min_lo_rho = std::min(min_lo_rho, est.lo_rho);
        }
    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "min Wilson lower bound over 9 pairs: euclidean %.4g, weighted %.4g (> 0)",
                  min_lo_euclid, min_lo_rho);
    return report(6, min_lo_euclid > 0.0 && min_lo_rho > 0.0, detail);
}

// 7. Matching-oracle equivalence: exact matcher vs factorial brute force on
//    50 random instances with n <= 6 (1e-12), and the 1D sorted coupling vs
//    the matcher at n = 100 (1e-12).
int criterion_7() {
    std::mt19937 gen(707);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    std::uniform_int_distribution<int> size(1, 6);
    double worst = 0.0;
    for (int inst = 0; inst < 50; ++inst) {
        const int n = size(gen);
        std::vector<double> cost(static_cast<std::size_t>(n) * n);
        for (auto& c : cost) c = u(gen);
        std::vector<int> perm(n), asg;
        std::iota(perm.begin(), perm.end(), 0);
        double best = std::numeric_limits<double>::infinity();
        do {
            double tot = 0.0;
            for (int i = 0; i < n; ++i) tot += cost[static_cast<std::size_t>(i) * n + perm[i]];
            best = std::min(best, tot);
        } while (std::next_permutation(perm.begin(), perm.end()));
        worst = std::max(worst, std::abs(solve_assignment(n, cost, asg) - best));
    }

    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> xa(100), xb(100);
    std::vector<PhaseState> sa, sb;
    for (int i = 0; i < 100; ++i) {
        xa[i] = g(gen);
        xb[i] = g(gen) + 0.7;
        sa.push_back(state1(xa[i], 0.0));
        sb.push_back(state1(xb[i], 0.0));
    }
    const double matcher = wasserstein1(
        sa, sb,
        [](const PhaseState& a, const PhaseState& b) { return (a.packed() - b.packed()).norm(); },
        0);
    const double sorted = wasserstein1_1d_euclidean(xa, xb);
    const double dev_1d = std::abs(matcher - sorted);

    char detail[140];
    std::snprintf(detail, sizeof(detail),
                  "brute-force deviation %.3e, 1d-coupling deviation %.3e (both <= 1e-12)",
                  worst, dev_1d);
    return report(7, worst <= 1e-12 && dev_1d <= 1e-12, detail);
}

// 8. End-to-end certificate: the CLI exits 0 with lambda_final > 0 for the
//    quadratic and bump-double-well configs, and the certified quadratic
//    rate does not exceed the measured rate from criterion 1 beyond its CI.
int criterion_8(const std::string& cli, const std::string& config_dir) {
    auto run = [&](const std::string& cfg_name, const std::string& out_dir) {
        const std::string cmd = "\"" + cli + "\" certify --config \"" + config_dir + "/" +
                                cfg_name + "\" --out " + out_dir + " --set run.decay=0" +
                                " > " + out_dir + ".log 2>&1";
        const int rc = std::system(cmd.c_str());
        return rc == 0;
    };
    auto read_key = [](const std::string& path, const std::string& key) {
        std::ifstream in(path);
        std::string line;
        while (std::getline(in, line))
            if (line.rfind(key + "=", 0) == 0) return std::strtod(line.c_str() + key.size() + 1, nullptr);
        return std::nan("");
    };

    const bool quad_ok = run("quadratic.cfg", "acceptance_cert_quadratic");
    const bool bump_ok = run("bumpwell.cfg", "acceptance_cert_bumpwell");
    const double lambda_quad =
        read_key("acceptance_cert_quadratic/certificate.txt", "lambda_final");
    const double lambda_bump =
        read_key("acceptance_cert_bumpwell/certificate.txt", "lambda_final");

    double lambda_hat = std::nan(""), ci = 0.0;
    std::ifstream rate(kRateFile);
    if (rate) rate >> lambda_hat >> ci;
    const bool ordering = std::isfinite(lambda_hat) && lambda_quad <= lambda_hat + ci;

    char detail[240];
    std::snprintf(detail, sizeof(detail),
                  "quadratic exit %s lambda=%.3e, bump exit %s lambda=%.3e, "
                  "soundness %.3e <= %.4f + %.4f: %s",
                  quad_ok ? "0" : "!=0", lambda_quad, bump_ok ? "0" : "!=0", lambda_bump,
                  lambda_quad, lambda_hat, ci, ordering ? "yes" : "no");
    const bool pass = quad_ok && bump_ok && lambda_quad > 0.0 && lambda_bump > 0.0 && ordering;
    return report(8, pass, detail);
}

// 9. Determinism: the CSV artifacts of each pipeline are bit-identical
//    between 1-worker and 8-worker runs at a fixed seed.
int criterion_9() {
    const PotentialSpec p = make_bump_double_well(2.0, 1.0);
    const LyapunovParams lp = derive_params(p);
    MetricParams mp;
    mp.potential = &p;
    mp.lp = lp;

    auto render = [&](int workers) {
        SimConfig cfg;
        cfg.dt = 1e-2;
        cfg.t_final = 1.0;
        cfg.n_paths = 512;
        cfg.master_seed = 99;
        cfg.workers = workers;
        std::ostringstream os;

        const auto ens = simulate_ensemble(state1(1.0, -0.5), p, cfg, {0.5, 1.0}, true);
        write_ensemble_csv(os, ens, true);

        const DriftReport drift = verify_drift(p, lp, 1.0, lattice(2.0, 3), cfg);
        write_drift_csv(os, drift);

        const GradientReport grad = verify_gradient_bound(
            p, 1.0,
            {QuadraticObservable(Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2),
                                 0.0)},
            {state1(0.0, 0.0)}, cfg);
        write_gradient_csv(os, grad);

        const DecayCurve curve = measure_decay(p, state1(2.0, 0.0), state1(-2.0, 0.0),
                                               {0.5, 1.0}, cfg, mp, true, true);
        write_decay_csv(os, curve);
        return os.str();
    };

    const std::string one = render(1);
    const std::string eight = render(8);
    char detail[120];
    std::snprintf(detail, sizeof(detail), "%zu CSV bytes, 1-worker vs 8-worker %s", one.size(),
                  one == eight ? "identical" : "DIFFER");
    return report(9, one == eight && !one.empty(), detail);
}

} // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: acceptance CRITERION [cli_path config_dir]\n");
        return 2;
    }
    const int id = std::atoi(argv[1]);
    try {
        switch (id) {
        case 1: return criterion_1();
        case 2: return criterion_2();
        case 3: return criterion_3();
        case 4: return criterion_4();
        case 5: return criterion_5();
        case 6: return criterion_6();
        case 7: return criterion_7();
        case 8:
            if (argc < 4) {
                std::fprintf(stderr, "criterion 8 needs cli_path and config_dir\n");
                return 2;
            }
            return criterion_8(argv[2], argv[3]);
        case 9: return criterion_9();
        default:
            std::fprintf(stderr, "unknown criterion %d\n", id);
            return 2;
        }
    } catch (const std::exception& e) {
        std::printf("criterion %d: FAIL (exception: %s)\n", id, e.what());
        return 1;
    }
}

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "hypocert/certify.hpp"
#include "hypocert/config.hpp"
#include "hypocert/gamma2.hpp"
#include "hypocert/malliavin.hpp"
#include "hypocert/metric.hpp"

namespace fs = std::filesystem;
using namespace hypocert;

namespace {

constexpr const char* kVersion = "hypocert 1.0.0";

constexpr int kExitPass = 0;
constexpr int kExitUsage = 1;
constexpr int kExitFail = 2;
constexpr int kExitInconclusive = 3;

PotentialSpec build_potential(const Config& cfg) {
    const std::string name = cfg.get_str("potential.name", "quadratic");
    if (name == "quadratic") return make_quadratic(cfg.get_int("potential.dim", 1));
    if (name == "bump_double_well")
        return make_bump_double_well(cfg.get_real("potential.amplitude", 2.0),
                                     cfg.get_real("potential.width", 1.0));
    throw ConfigError("field potential.name: unknown potential \"" + name + "\"");
}

SimConfig build_sim(const Config& cfg) {
    SimConfig sim;
    sim.dt = cfg.get_real("sim.dt", 1e-2);
    sim.t_final = cfg.get_real("sim.t_final", 1.0);
    sim.n_paths = cfg.get_int("sim.n_paths", 1000);
    sim.master_seed = cfg.get_u64("sim.seed", 12345);
    sim.sigma = cfg.get_real("sim.sigma", 1.4142135623730951);
    sim.workers = cfg.get_int("sim.workers", 0);
    const std::string scheme = cfg.get_str("sim.scheme", "euler_maruyama");
    if (scheme == "euler_maruyama")
        sim.scheme = Scheme::euler_maruyama;
    else if (scheme == "exact_ou")
        sim.scheme = Scheme::exact_ou;
    else
        throw ConfigError("field sim.scheme: expected euler_maruyama or exact_ou, got \"" +
                          scheme + "\"");
    sim.validate();
    return sim;
}

MetricParams build_metric(const Config& cfg, const PotentialSpec& p, const LyapunovParams& lp) {
    MetricParams mp;
    mp.potential = &p;
    mp.lp = lp;
    mp.r = cfg.get_real("metric.r", 0.5);
    mp.delta = cfg.get_real("metric.delta", 0.5);
    mp.beta_w = cfg.get_real("metric.beta_w", 0.1);
    mp.validate();
    return mp;
}

PhaseState phase_from_list(const std::vector<double>& packed, const std::string& field) {
    if (packed.size() % 2 != 0)
        throw ConfigError("field " + field + ": expected an even-length x,v list");
    const int d = static_cast<int>(packed.size()) / 2;
    Eigen::VectorXd x(d), v(d);
    for (int j = 0; j < d; ++j) {
        x(j) = packed[j];
        v(j) = packed[d + j];
    }
    return PhaseState(x, v);
}

std::vector<PhaseState> lattice_grid(int dim, double radius, int n_axis) {
    std::vector<PhaseState> grid;
    if (dim == 1) {
        for (int i = 0; i < n_axis; ++i)
            for (int j = 0; j < n_axis; ++j) {
                Eigen::VectorXd x(1), v(1);
                x << -radius + 2.0 * radius * i / (n_axis - 1);
                v << -radius + 2.0 * radius * j / (n_axis - 1);
                grid.emplace_back(x, v);
            }
        return grid;
    }
    grid.emplace_back(Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Zero(dim));
    for (int j = 0; j < dim; ++j)
        for (double s : {-radius, radius}) {
            Eigen::VectorXd e = Eigen::VectorXd::Zero(dim);
            e(j) = s;
            grid.emplace_back(e, Eigen::VectorXd::Zero(dim));
            grid.emplace_back(Eigen::VectorXd::Zero(dim), e);
        }
    return grid;
}

// Overwrites path with content; if the file already exists its header
// (first line) must match, keeping CSV schemas stable across runs.
void write_artifact(const fs::path& path, const std::string& content) {
    const std::string header = content.substr(0, content.find('\n'));
    if (fs::exists(path)) {
        std::ifstream in(path);
        std::string existing;
        std::getline(in, existing);
        if (!existing.empty() && existing != header)
            throw ConfigError("schema mismatch for " + path.string() + ": existing header \"" +
                              existing + "\" differs from \"" + header + "\"");
    }
    std::ofstream out(path, std::ios::binary); // binary: LF endings everywhere
    if (!out) throw ConfigError("cannot write " + path.string());
    out << content;
}

void write_manifest(const fs::path& out_dir, const std::string& subcommand, const Config& cfg,
                    std::uint64_t seed, double wall_seconds) {
    std::ostringstream os;
    os << "tool=" << kVersion << "\n";
    os << "subcommand=" << subcommand << "\n";
    os << "seed=" << seed << "\n";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", wall_seconds);
    os << "wall_seconds=" << buf << "\n";
    for (const auto& [key, value] : cfg.items()) os << "config." << key << "=" << value << "\n";
    write_artifact(out_dir / "manifest.txt", os.str());
}

std::vector<QuadraticObservable> standard_observables(int d) {
    std::vector<QuadraticObservable> fns;
    const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(2 * d, 2 * d);
    Eigen::VectorXd ex = Eigen::VectorXd::Zero(2 * d), ev = ex;
    ex(0) = 1.0;
    ev(d) = 1.0;
    fns.emplace_back(zero, ex, 0.0);
    fns.emplace_back(zero, ev, 0.0);
    fns.emplace_back(zero, Eigen::VectorXd(ex + ev), 0.0);
    fns.emplace_back(Eigen::MatrixXd(Eigen::MatrixXd::Identity(2 * d, 2 * d)),
                     Eigen::VectorXd(Eigen::VectorXd::Zero(2 * d)), 0.0);
    return fns;
}

int cmd_simulate(const Config& cfg, const fs::path& out_dir) {
    const PotentialSpec p = build_potential(cfg);
    const SimConfig sim = build_sim(cfg);
    const PhaseState z0 =
        phase_from_list(cfg.get_reals("run.z0", {1.0, 0.0}), "run.z0");
    std::vector<double> t_grid = cfg.get_reals("run.t_grid", {sim.t_final});
    const bool tangent = cfg.get_int("run.tangent", 0) != 0;
    const auto ens = simulate_ensemble(z0, p, sim, t_grid, tangent);
    std::ostringstream os;
    write_ensemble_csv(os, ens, tangent);
    write_artifact(out_dir / "ensemble.csv", os.str());
    std::cout << "wrote " << (out_dir / "ensemble.csv").string() << " (" << ens.n_paths()
              << " paths, " << t_grid.size() << " times)\n";
    return kExitPass;
}

int cmd_lyapunov(const Config& cfg, const fs::path& out_dir) {
    const PotentialSpec p = build_potential(cfg);
    const SimConfig sim = build_sim(cfg);
    const LyapunovParams lp = derive_params(p, sim.sigma);
    const auto grid = lattice_grid(p.dim, cfg.get_real("run.grid_radius", 2.0),
                                   cfg.get_int("run.grid_n", 5));
    const std::vector<double> times = cfg.get_reals("run.times", {0.25, 0.5, 1.0});
    bool all_pass = true, any_inconclusive = false;
    for (double t : times) {
        const auto rep = verify_drift(p, lp, t, grid, sim);
        std::ostringstream os;
        write_drift_csv(os, rep);
        char name[64];
        std::snprintf(name, sizeof(name), "drift_t%g.csv", t);
        write_artifact(out_dir / name, os.str());
        for (const auto& pt : rep.points) any_inconclusive |= pt.inconclusive;
        all_pass &= rep.pass;
        std::cout << "t=" << t << " drift " << (rep.pass ? "PASS" : "FAIL")
                  << " (max ratio " << rep.max_ratio << ")\n";
    }
    if (any_inconclusive) return kExitInconclusive;
    return all_pass ? kExitPass : kExitFail;
}

int cmd_gradient(const Config& cfg, const fs::path& out_dir) {
    const PotentialSpec p = build_potential(cfg);
    const SimConfig sim = build_sim(cfg);
    const double t = cfg.get_real("run.t", 1.0);
    const auto grid = lattice_grid(p.dim, cfg.get_real("run.grid_radius", 1.0),
                                   cfg.get_int("run.grid_n", 3));
    const auto rep = verify_gradient_bound(p, t, standard_observables(p.dim), grid, sim);
    std::ostringstream os;
    write_gradient_csv(os, rep);
    write_artifact(out_dir / "gradient.csv", os.str());
    std::cout << "t=" << t << " gradient bound " << (rep.pass ? "PASS" : "FAIL") << "\n";
    return rep.pass ? kExitPass : kExitFail;
}

int cmd_coupling(const Config& cfg, const fs::path& out_dir) {
    const PotentialSpec p = build_potential(cfg);
    const SimConfig sim = build_sim(cfg);
    const LyapunovParams lp = derive_params(p, sim.sigma);
    MetricParams mp = build_metric(cfg, p, lp);
    const double R = cfg.get_real("run.R", 2.0);
    const double delta = cfg.get_real("run.delta", 0.5);
    const double t = cfg.get_real("run.t", 1.0);
    const double r_prime = cfg.get_real("run.R_prime",
                                        std::numeric_limits<double>::infinity());
    mp.delta = delta;
    std::vector<ProbEstimate> estimates;
    bool positive = true, inconclusive = false;
    for (double xa : {-R, 0.0, R})
        for (double xb : {-R, 0.0, R}) {
            Eigen::VectorXd za = Eigen::VectorXd::Zero(p.dim), zb = za;
            za(0) = xa;
            zb(0) = xb;
            const PhaseState z1(za, Eigen::VectorXd::Zero(p.dim));
            const PhaseState z2(zb, Eigen::VectorXd::Zero(p.dim));
            const auto est = coupling_probability(p, z1, z2, t, delta, sim, &mp, r_prime);
            positive &= est.lo_euclid > 0.0 && est.lo_rho > 0.0;
            inconclusive |= est.inconclusive;
            estimates.push_back(est);
        }
    std::ostringstream os;
    write_prob_csv(os, estimates);
    write_artifact(out_dir / "coupling.csv", os.str());
    if (inconclusive) {
        std::cout << "coupling INCONCLUSIVE (zero successes on some pair)\n";
        return kExitInconclusive;
    }
    std::cout << "coupling " << (positive ? "PASS" : "FAIL")
              << " (all Wilson lower bounds positive: " << (positive ? "yes" : "no") << ")\n";
    return positive ? kExitPass : kExitFail;
}

int cmd_rate(const Config& cfg, const fs::path& out_dir) {
    const PotentialSpec p = build_potential(cfg);
    const SimConfig sim = build_sim(cfg);
    const LyapunovParams lp = derive_params(p, sim.sigma);
    const MetricParams mp = build_metric(cfg, p, lp);
    const PhaseState za = phase_from_list(cfg.get_reals("run.z0", {3.0, 0.0}), "run.z0");
    const PhaseState zb = phase_from_list(cfg.get_reals("run.z1", {-3.0, 0.0}), "run.z1");
    const std::vector<double> t_grid =
        cfg.get_reals("run.t_grid", {0, 1, 2, 3, 4, 5, 6, 7, 8});
    const std::string metrics = cfg.get_str("run.metrics", "euclid");
    const bool with_euclid = metrics == "euclid" || metrics == "both";
    const bool with_rho = metrics == "rho" || metrics == "both";
    const auto curve = measure_decay(p, za, zb, t_grid, sim, mp, with_euclid, with_rho);
    std::ostringstream os;
    write_decay_csv(os, curve);
    write_artifact(out_dir / "decay.csv", os.str());
    if (curve.inconclusive) {
        std::cout << "decay rate INCONCLUSIVE (curve below the noise floor)\n";
        return kExitInconclusive;
    }
    std::cout << "lambda_hat=" << curve.lambda_hat << " +/- " << curve.lambda_ci << "\n";
    return kExitPass;
}

void emit_report(const HarrisCertificate& cert, const DecayCurve* curve) {
    struct Row {
        const char* name;
        double value;
        const char* provenance;
    };
    const Row rows[] = {
        {"a_star", cert.lp.a_star, "derived"},
        {"beta", cert.lp.beta, "derived"},
        {"kappa", cert.lp.kappa, "derived"},
        {"C_M", cert.c_m, "derived"},
        {"delta", cert.delta, "derived"},
        {"beta_w", cert.beta_w, "derived"},
        {"T_cert", cert.t_cert, "derived"},
        {"C_drift", cert.c_drift, "measured"},
        {"a_coupling", cert.mid.a_coupling, "measured"},
        {"gamma_far", cert.gamma_far, "configured"},
        {"gamma_small", cert.gamma_small, "derived"},
        {"gamma_mid", cert.gamma_mid, "measured"},
        {"C (log)", cert.log_c_final, "derived"},
        {"lambda", cert.lambda_final, "derived"},
    };
    std::printf("%-12s %-24s %s\n", "constant", "value", "provenance");
    for (const auto& row : rows)
        std::printf("%-12s %-24.12g %s\n", row.name, row.value, row.provenance);
    if (curve) {
        if (curve->inconclusive)
            std::printf("%-12s %-24s %s\n", "lambda_hat", "inconclusive", "measured");
        else
            std::printf("%-12s %-24.12g %s\n", "lambda_hat", curve->lambda_hat, "measured");
    }
}

int cmd_certify(const Config& cfg, const fs::path& out_dir) {
    const PotentialSpec p = build_potential(cfg);
    const SimConfig sim = build_sim(cfg);
    const auto cert = assemble(p, sim);
    std::ostringstream os;
    write_certificate(os, cert);
    write_artifact(out_dir / "certificate.txt", os.str());

    DecayCurve curve;
    bool have_curve = false;
    if (cfg.get_int("run.decay", 1) != 0) {
        MetricParams mp;
        mp.potential = &p;
        mp.lp = cert.lp;
        mp.r = cert.r_metric;
        mp.delta = cert.delta;
        mp.beta_w = cert.beta_w > 0.0 ? std::min(cert.beta_w, 0.999) : 0.1;
        const PhaseState za = phase_from_list(cfg.get_reals("run.z0", {3.0, 0.0}), "run.z0");
        const PhaseState zb = phase_from_list(cfg.get_reals("run.z1", {-3.0, 0.0}), "run.z1");
        const std::vector<double> t_grid =
            cfg.get_reals("run.t_grid", {0, 1, 2, 3, 4, 5, 6, 7, 8});
        curve = measure_decay(p, za, zb, t_grid, sim, mp, true, false);
        std::ostringstream ds;
        write_decay_csv(ds, curve);
        write_artifact(out_dir / "decay.csv", ds.str());
        have_curve = true;
    }
    emit_report(cert, have_curve ? &curve : nullptr);
    if (!(cert.lambda_final > 0.0)) return kExitFail;
    return kExitPass;
}

int cmd_selftest() {
    int failures = 0;
    auto check = [&](bool ok, const char* what) {
        std::cout << (ok ? "PASS " : "FAIL ") << what << "\n";
        if (!ok) ++failures;
    };
    const PotentialSpec quad = make_quadratic(1);
    Eigen::VectorXd one(1), zero(1);
    one << 1.0;
    zero << 0.0;
    const PhaseState z10(one, zero);
    check(std::abs(q_form(z10, quad) - 1.5) < 1e-12, "Q(1,0) = 3/2 for the quadratic potential");
    const auto fns = standard_observables(1);
    check(std::abs(gamma_form(fns[0], fns[0], z10) - 2.0) < 1e-12, "Gamma(x,x) = 2");
    check(std::abs(gamma_form(fns[2], fns[2], z10) - 2.0) < 1e-12, "Gamma(x+v,x+v) = 2");
    check(std::abs(gamma2_form(fns[1], quad, z10) - 2.0) < 1e-12, "Gamma2(v) = 2 at M = 1");
    const Eigen::VectorXd dir = commutator_direction(quad, z10);
    check(std::abs(dir(0) - 1.0) < 1e-12 && std::abs(dir(1) + 1.0) < 1e-12,
          "commutator direction (1,-1)");
    const Eigen::Matrix2d S = gaussian_part_cov(0.1, 1.0);
    check(std::abs(S(0, 0) - 1e-3 / 3.0) < 1e-12, "Gaussian part Var_X = t^3/3");
    std::vector<double> a{0.0}, b{1.0};
    check(std::abs(wasserstein1_1d_euclidean(a, b) - 1.0) < 1e-12, "1D W1({0},{1}) = 1");
    double lo, hi;
    wilson_interval(50, 100, lo, hi);
    check(lo > 0.4 && hi < 0.6, "Wilson interval sanity at 50/100");
    return failures == 0 ? kExitPass : kExitFail;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical Harris-type convergence certificates for the kinetic Langevin "
                 "equation"};
    app.set_version_flag("--version", kVersion);
    app.fallthrough();
    app.require_subcommand(1);

    std::string config_path, out_dir = "out";
    std::uint64_t seed = 0;
    std::vector<std::string> overrides;
    app.add_option("--config", config_path, "configuration file (key=value with [sections])");
    auto* seed_opt = app.add_option("--seed", seed, "master RNG seed (overrides sim.seed)");
    app.add_option("--out", out_dir, "output directory for artifacts");
    app.add_option("--set", overrides, "KEY=VALUE config override (repeatable)");

    for (const char* name : {"simulate", "lyapunov", "gradient", "coupling", "rate", "certify"})
        app.add_subcommand(name);
    app.add_subcommand("selftest");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }
    const std::string subcommand = app.get_subcommands().front()->get_name();

    const auto t0 = std::chrono::steady_clock::now();
    try {
        Config cfg = config_path.empty() ? Config() : Config::load(config_path);
        for (const auto& o : overrides) cfg.set_override(o);
        if (seed_opt->count() > 0) cfg.set("sim.seed", std::to_string(seed));

        const fs::path out(out_dir);
        fs::create_directories(out);

        int code = kExitUsage;
        if (subcommand == "simulate")
            code = cmd_simulate(cfg, out);
        else if (subcommand == "lyapunov")
            code = cmd_lyapunov(cfg, out);
        else if (subcommand == "gradient")
            code = cmd_gradient(cfg, out);
        else if (subcommand == "coupling")
            code = cmd_coupling(cfg, out);
        else if (subcommand == "rate")
            code = cmd_rate(cfg, out);
        else if (subcommand == "certify")
            code = cmd_certify(cfg, out);
        else if (subcommand == "selftest")
            code = cmd_selftest();

        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (subcommand != "selftest")
            write_manifest(out, subcommand, cfg, cfg.get_u64("sim.seed", 12345), wall);
        return code;
    } catch (const ConfigError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const InconclusiveError& e) {
        std::cerr << "inconclusive: " << e.what() << "\n";
        return kExitInconclusive;
    } catch (const CertifyError& e) {
        std::cerr << "verification failure: " << e.what() << "\n";
        return kExitFail;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFail;
    }
}

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hypocert/certify.hpp"
#include "hypocert/gamma2.hpp"
#include "hypocert/malliavin.hpp"
#include "hypocert/metric.hpp"

namespace py = pybind11;
using namespace hypocert;

namespace {

PhaseState state_from_array(const Eigen::VectorXd& packed) {
    if (packed.size() % 2 != 0)
        throw std::invalid_argument("phase state must have even length (x then v)");
    return PhaseState::from_packed(packed);
}

SimConfig sim_from_kwargs(double dt, double t_final, int n_paths, std::uint64_t seed,
                          const std::string& scheme, double sigma, int workers) {
    SimConfig cfg;
    cfg.dt = dt;
    cfg.t_final = t_final;
    cfg.n_paths = n_paths;
    cfg.master_seed = seed;
    cfg.sigma = sigma;
    cfg.workers = workers;
    if (scheme == "euler_maruyama")
        cfg.scheme = Scheme::euler_maruyama;
    else if (scheme == "exact_ou")
        cfg.scheme = Scheme::exact_ou;
    else
        throw std::invalid_argument("scheme must be euler_maruyama or exact_ou");
    cfg.validate();
    return cfg;
}

py::dict lyapunov_dict(const LyapunovParams& lp) {
    py::dict d;
    d["a_star"] = lp.a_star;
    d["k"] = lp.k;
    d["beta"] = lp.beta;
    d["kappa"] = lp.kappa;
    d["M"] = lp.M;
    d["bracket_lo"] = lp.bracket_lo;
    d["bracket_hi"] = lp.bracket_hi;
    d["bracket_off"] = lp.bracket_off;
    return d;
}

} // namespace

PYBIND11_MODULE(_hypocert, m) {
    m.doc() = "kinetic Langevin simulation and Harris-certificate verification";

    py::class_<PotentialSpec>(m, "Potential")
        .def_property_readonly("dim", [](const PotentialSpec& p) { return p.dim; })
        .def_property_readonly("name", [](const PotentialSpec& p) { return p.name; })
        .def_property_readonly("hess_bound", [](const PotentialSpec& p) { return p.hess_bound; })
        .def_property_readonly("c1", [](const PotentialSpec& p) { return p.c1; })
        .def_property_readonly("c2", [](const PotentialSpec& p) { return p.c2; })
        .def_property_readonly("c3", [](const PotentialSpec& p) { return p.c3; })
        .def("__call__",
             [](const PotentialSpec& p, const Eigen::VectorXd& x) { return p.eval(x); })
        .def("grad", [](const PotentialSpec& p, const Eigen::VectorXd& x) { return p.grad(x); })
        .def("hessian",
             [](const PotentialSpec& p, const Eigen::VectorXd& x) { return hessian(p, x); });

    m.def("make_quadratic", &make_quadratic, py::arg("dim") = 1);
    m.def("make_bump_double_well", &make_bump_double_well, py::arg("amplitude") = 2.0,
          py::arg("width") = 1.0);

    m.def(
        "check_hypotheses",
        [](const PotentialSpec& p, double radius, int n_grid) {
            const auto rep = check_hypotheses(p, radius, n_grid);
            py::dict d;
            d["drift_margin"] = rep.drift_margin;
            d["hessian_margin"] = rep.hessian_margin;
            d["pass"] = rep.pass();
            return d;
        },
        py::arg("potential"), py::arg("radius") = 10.0, py::arg("n_grid") = 401);

    m.def(
        "derive_params",
        [](const PotentialSpec& p, double sigma) { return lyapunov_dict(derive_params(p, sigma)); },
        py::arg("potential"), py::arg("sigma") = 1.4142135623730951);

    m.def(
        "q_form",
        [](const Eigen::VectorXd& z, const PotentialSpec& p) {
            return q_form(state_from_array(z), p);
        },
        py::arg("z"), py::arg("potential"));

    m.def(
        "simulate",
        [](const PotentialSpec& p, const Eigen::VectorXd& z0, std::vector<double> record_times,
           double dt, int n_paths, std::uint64_t seed, const std::string& scheme, double sigma,
           int workers, bool tangent) {
            const SimConfig cfg = sim_from_kwargs(dt, record_times.back(), n_paths, seed, scheme,
                                                  sigma, workers);
            const auto ens =
                simulate_ensemble(state_from_array(z0), p, cfg, record_times, tangent);
            const std::size_t nt = ens.times.size(), n = ens.n_paths();
            const std::size_t d2 = 2 * static_cast<std::size_t>(ens.dim);
            py::array_t<double> states({nt, n, d2});
            auto s = states.mutable_unchecked<3>();
            for (std::size_t k = 0; k < nt; ++k)
                for (std::size_t i = 0; i < n; ++i) {
                    const Eigen::VectorXd z = ens.states[k][i].packed();
                    for (std::size_t j = 0; j < d2; ++j) s(k, i, j) = z(j);
                }
            py::dict out;
            out["times"] = ens.times;
            out["states"] = states;
            if (tangent) {
                py::array_t<double> flows({nt, n, d2, d2});
                auto f = flows.mutable_unchecked<4>();
                for (std::size_t k = 0; k < nt; ++k)
                    for (std::size_t i = 0; i < n; ++i)
                        for (std::size_t r = 0; r < d2; ++r)
                            for (std::size_t c = 0; c < d2; ++c)
                                f(k, i, r, c) = ens.tangents[k][i](r, c);
                out["tangents"] = flows;
            }
            return out;
        },
        py::arg("potential"), py::arg("z0"), py::arg("record_times"), py::arg("dt") = 1e-2,
        py::arg("n_paths") = 1000, py::arg("seed") = 12345,
        py::arg("scheme") = "euler_maruyama", py::arg("sigma") = 1.4142135623730951,
        py::arg("workers") = 0, py::arg("tangent") = false);

    m.def(
        "gamma",
        [](const Eigen::MatrixXd& fa, const Eigen::VectorXd& fb, double fc,
           const Eigen::MatrixXd& ga, const Eigen::VectorXd& gb, double gc,
           const Eigen::VectorXd& z) {
            return gamma_form(QuadraticObservable(fa, fb, fc), QuadraticObservable(ga, gb, gc),
                              state_from_array(z));
        },
        py::arg("f_A"), py::arg("f_b"), py::arg("f_c"), py::arg("g_A"), py::arg("g_b"),
        py::arg("g_c"), py::arg("z"));

    m.def(
        "gamma2",
        [](const Eigen::MatrixXd& fa, const Eigen::VectorXd& fb, double fc,
           const PotentialSpec& p, const Eigen::VectorXd& z) {
            return gamma2_form(QuadraticObservable(fa, fb, fc), p, state_from_array(z));
        },
        py::arg("f_A"), py::arg("f_b"), py::arg("f_c"), py::arg("potential"), py::arg("z"));

    m.def("gradient_bound_constant", &gradient_bound_constant, py::arg("M"));

    m.def(
        "gaussian_part_cov",
        [](double t, double sigma) { return Eigen::MatrixXd(gaussian_part_cov(t, sigma)); },
        py::arg("t"), py::arg("sigma") = 1.4142135623730951);

    m.def(
        "commutator_direction",
        [](const PotentialSpec& p, const Eigen::VectorXd& z) {
            return commutator_direction(p, state_from_array(z));
        },
        py::arg("potential"), py::arg("z"));

    m.def(
        "coupling_probability",
        [](const PotentialSpec& p, const Eigen::VectorXd& z1, const Eigen::VectorXd& z2,
           double t, double delta, int n_pairs, std::uint64_t seed, const std::string& scheme,
           double dt, int workers) {
            const SimConfig cfg =
                sim_from_kwargs(dt, t, n_pairs, seed, scheme, 1.4142135623730951, workers);
            const auto est = coupling_probability(p, state_from_array(z1), state_from_array(z2),
                                                  t, delta, cfg);
            py::dict d;
            d["p_hat"] = est.p_euclid;
            d["lo"] = est.lo_euclid;
            d["hi"] = est.hi_euclid;
            d["n"] = est.n;
            d["inconclusive"] = est.inconclusive;
            return d;
        },
        py::arg("potential"), py::arg("z1"), py::arg("z2"), py::arg("t"), py::arg("delta"),
        py::arg("n_pairs") = 10000, py::arg("seed") = 12345,
        py::arg("scheme") = "euler_maruyama", py::arg("dt") = 1e-2, py::arg("workers") = 0);

    m.def(
        "wasserstein1",
        [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, int workers) {
            if (a.cols() != b.cols())
                throw std::invalid_argument("sample matrices must have equal column count");
            std::vector<PhaseState> sa, sb;
            for (Eigen::Index i = 0; i < a.rows(); ++i)
                sa.push_back(state_from_array(a.row(i).transpose()));
            for (Eigen::Index i = 0; i < b.rows(); ++i)
                sb.push_back(state_from_array(b.row(i).transpose()));
            return wasserstein1(
                sa, sb,
                [](const PhaseState& x, const PhaseState& y) {
                    return (x.packed() - y.packed()).norm();
                },
                workers);
        },
        py::arg("samples_a"), py::arg("samples_b"), py::arg("workers") = 0,
        "exact Euclidean W1 between equal-size samples of packed (x, v) rows");

    m.def("wasserstein1_1d", &wasserstein1_1d_euclidean, py::arg("a"), py::arg("b"));

    m.def(
        "certify",
        [](const PotentialSpec& p, int n_paths, std::uint64_t seed, const std::string& scheme,
           double dt, int workers) {
            const SimConfig cfg =
                sim_from_kwargs(dt, 1.0, n_paths, seed, scheme, 1.4142135623730951, workers);
            const auto cert = assemble(p, cfg);
            py::dict d;
            d["potential"] = cert.potential;
            d["lyapunov"] = lyapunov_dict(cert.lp);
            d["C_M"] = cert.c_m;
            d["delta"] = cert.delta;
            d["beta_w"] = cert.beta_w;
            d["T_cert"] = cert.t_cert;
            d["C_drift"] = cert.c_drift;
            d["R"] = cert.far.R;
            d["K"] = cert.far.K;
            d["R_prime"] = cert.mid.r_prime;
            d["a_coupling"] = cert.mid.a_coupling;
            d["gamma_far"] = cert.gamma_far;
            d["gamma_small"] = cert.gamma_small;
            d["gamma_mid"] = cert.gamma_mid;
            d["lambda_final"] = cert.lambda_final;
            d["log_C_final"] = cert.log_c_final;
            return d;
        },
        py::arg("potential"), py::arg("n_paths") = 2000, py::arg("seed") = 12345,
        py::arg("scheme") = "euler_maruyama", py::arg("dt") = 1e-2, py::arg("workers") = 0);

    m.def(
        "measure_decay",
        [](const PotentialSpec& p, const Eigen::VectorXd& za, const Eigen::VectorXd& zb,
           std::vector<double> t_grid, int n_paths, std::uint64_t seed,
           const std::string& scheme, double dt, int workers) {
            const SimConfig cfg = sim_from_kwargs(dt, std::max(t_grid.back(), dt), n_paths, seed,
                                                  scheme, 1.4142135623730951, workers);
            const LyapunovParams lp = derive_params(p, cfg.sigma);
            MetricParams mp;
            mp.potential = &p;
            mp.lp = lp;
            const auto curve = measure_decay(p, state_from_array(za), state_from_array(zb),
                                             t_grid, cfg, mp, true, false);
            py::dict d;
            d["times"] = curve.times;
            d["w1"] = curve.w1_euclid;
            d["noise_floor"] = curve.floor_euclid;
            d["lambda_hat"] = curve.lambda_hat;
            d["lambda_ci"] = curve.lambda_ci;
            d["inconclusive"] = curve.inconclusive;
            return d;
        },
        py::arg("potential"), py::arg("za"), py::arg("zb"), py::arg("t_grid"),
        py::arg("n_paths") = 1024, py::arg("seed") = 12345,
        py::arg("scheme") = "euler_maruyama", py::arg("dt") = 1e-2, py::arg("workers") = 0);
}

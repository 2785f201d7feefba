#include <doctest.h>

#include <cmath>
#include <random>

#include "hypocert/gamma2.hpp"

using namespace hypocert;

namespace {

PhaseState state1(double x, double v) {
    Eigen::VectorXd xv(1), vv(1);
    xv << x;
    vv << v;
    return PhaseState(xv, vv);
}

QuadraticObservable linear1(double bx, double bv) {
    Eigen::VectorXd b(2);
    b << bx, bv;
    return QuadraticObservable(Eigen::MatrixXd::Zero(2, 2), b, 0.0);
}

QuadraticObservable random_obs(std::mt19937& gen, int d) {
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    Eigen::MatrixXd A(2 * d, 2 * d);
    for (int i = 0; i < 2 * d; ++i)
        for (int j = 0; j <= i; ++j) A(i, j) = A(j, i) = u(gen);
    Eigen::VectorXd b(2 * d);
    for (int i = 0; i < 2 * d; ++i) b(i) = u(gen);
    return QuadraticObservable(A, b, u(gen));
}

PhaseState random_state(std::mt19937& gen, int d) {
    std::uniform_real_distribution<double> u(-4.0, 4.0);
    Eigen::VectorXd x(d), v(d);
    for (int i = 0; i < d; ++i) {
        x(i) = u(gen);
        v(i) = u(gen);
    }
    return PhaseState(x, v);
}

} // namespace

TEST_CASE("carre du champ on coordinate observables") {
    const PhaseState z = state1(0.3, -0.8);
    const QuadraticObservable fx = linear1(1.0, 0.0);
    const QuadraticObservable fxv = linear1(1.0, 1.0);
    CHECK(gamma_form(fx, fx, z) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(gamma_form(fxv, fxv, z) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("carre du champ is symmetric and positive semidefinite") {
    std::mt19937 gen(7);
    for (int i = 0; i < 200; ++i) {
        const auto f = random_obs(gen, 1);
        const auto g = random_obs(gen, 1);
        const PhaseState z = random_state(gen, 1);
        CHECK(gamma_form(f, g, z) == doctest::Approx(gamma_form(g, f, z)).epsilon(1e-12));
        CHECK(gamma_form(f, f, z) >= -1e-12);
        // Cauchy-Schwarz in the form's inner product
        const double cross = gamma_form(f, g, z);
        CHECK(cross * cross <= gamma_form(f, f, z) * gamma_form(g, g, z) + 1e-9);
    }
}

TEST_CASE("carre du champ sandwich against the plain gradient") {
    std::mt19937 gen(11);
    for (int i = 0; i < 1000; ++i) {
        const auto f = random_obs(gen, 1);
        const PhaseState z = random_state(gen, 1);
        const double gx2 = f.grad_x(z).squaredNorm();
        const double gv2 = f.grad_v(z).squaredNorm();
        const double g = gamma_form(f, f, z);
        CHECK(g >= gx2 + gv2 - 1e-10);
        CHECK(g <= 3.0 * (gx2 + gv2) + 1e-10);
    }
}

TEST_CASE("second-order form on f = v at unit curvature") {
    const PotentialSpec p = make_quadratic(1);
    CHECK(gamma2_form(linear1(0.0, 1.0), p, state1(0.5, 0.5)) ==
          doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("generator route agrees with the expanded second-order form") {
    // Gamma_2(f) = L Gamma(f,f) - 2 Gamma(f, Lf); for a quadratic potential
    // both routes are exact on quadratic observables.
    const PotentialSpec p = make_quadratic(1);
    std::mt19937 gen(13);
    for (int i = 0; i < 300; ++i) {
        const auto f = random_obs(gen, 1);
        const PhaseState z = random_state(gen, 1);

        const QuadraticObservable lf = apply_generator_quadratic(f, p);
        // Gamma(f,f) is again quadratic; assemble it explicitly.
        const Eigen::MatrixXd gxx = f.hess_xx(), gxv = f.hess_xv(), gvv = f.hess_vv();
        const int n = 2;
        auto grad_parts = [&](const Eigen::VectorXd& zz) {
            const PhaseState s = PhaseState::from_packed(zz);
            Eigen::VectorXd gx = f.grad_x(s), gv = f.grad_v(s);
            return std::make_pair(gx, gv);
        };
        // quadratic fit of Gamma(f,f): sample it at the monomial points
        // and reconstruct exactly (it is a polynomial of degree 2).
        Eigen::MatrixXd A2 = Eigen::MatrixXd::Zero(n, n);
        Eigen::VectorXd b2 = Eigen::VectorXd::Zero(n);
        const PhaseState zero = PhaseState::from_packed(Eigen::VectorXd::Zero(n));
        const double c2 = gamma_form(f, f, zero);
        for (int j = 0; j < n; ++j) {
            Eigen::VectorXd ej = Eigen::VectorXd::Zero(n);
            ej(j) = 1.0;
            const double plus = gamma_form(f, f, PhaseState::from_packed(ej));
            const double minus = gamma_form(f, f, PhaseState::from_packed(-ej));
            A2(j, j) = 0.5 * (plus + minus) - c2;
            b2(j) = 0.5 * (plus - minus);
        }
        for (int j = 0; j < n; ++j)
            for (int k = j + 1; k < n; ++k) {
                Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
                e(j) = 1.0;
                e(k) = 1.0;
                const double val = gamma_form(f, f, PhaseState::from_packed(e));
                const double cross =
                    0.5 * (val - c2 - A2(j, j) - A2(k, k) - b2(j) - b2(k));
                A2(j, k) = A2(k, j) = cross;
            }
        const QuadraticObservable gff(A2, b2, c2);

        const double route_a = apply_generator_quadratic(gff, p).eval(z) -
                               2.0 * gamma_form(f, lf, z);
        const double route_b = gamma2_form(f, p, z);
        CHECK(route_a == doctest::Approx(route_b).epsilon(1e-8));
        (void)grad_parts;
    }
}

TEST_CASE("second-order lower bound on random observables, both potentials") {
    std::mt19937 gen(29);
    for (const PotentialSpec& p :
         {make_quadratic(1), make_bump_double_well(2.0, 1.0)}) {
        const double M = p.hess_bound;
        const double c_lower = 14.0 + 6.0 * M * M + 2.0 * M;
        for (int i = 0; i < 1000; ++i) {
            const auto f = random_obs(gen, 1);
            const PhaseState z = random_state(gen, 1);
            const double gx2 = f.grad_x(z).squaredNorm();
            const double gv2 = f.grad_v(z).squaredNorm();
            CHECK(gamma2_form(f, p, z) >= gx2 - c_lower * gv2 - 1e-10);
        }
    }
}

TEST_CASE("semigroup gradient constant") {
    CHECK(gradient_bound_constant(1.0) == doctest::Approx(23.0));
    CHECK(gradient_bound_constant(0.0) == doctest::Approx(15.0));
}

TEST_CASE("generator on a quadratic observable against finite differences") {
    const PotentialSpec p = make_quadratic(1);
    std::mt19937 gen(31);
    const auto f = random_obs(gen, 1);
    const PhaseState z = random_state(gen, 1);
    const QuadraticObservable lf = apply_generator_quadratic(f, p);

    // Lf = (v, -(v + gradU)) . grad f + sigma^2/2 tr(Hess_vv f), sigma^2 = 2
    const Eigen::VectorXd gx = f.grad_x(z), gv = f.grad_v(z);
    const double expected =
        z.v.dot(gx) - (z.v + p.grad(z.x)).dot(gv) + f.hess_vv().trace();
    CHECK(lf.eval(z) == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("gradient bound verification on the quadratic benchmark") {
    const PotentialSpec p = make_quadratic(1);
    SimConfig cfg;
    cfg.dt = 1e-2;
    cfg.t_final = 1.0;
    cfg.n_paths = 20000;
    cfg.master_seed = 8;
    cfg.workers = 1;
    std::vector<QuadraticObservable> fns{linear1(1.0, 0.0), linear1(0.0, 1.0)};
    std::vector<PhaseState> grid{state1(0.0, 0.0), state1(1.0, 0.0)};
    const GradientReport rep = verify_gradient_bound(p, 1.0, fns, grid, cfg);
    CHECK(rep.pass);
    CHECK(rep.c_m == doctest::Approx(23.0));
    for (const auto& pt : rep.points) {
        CHECK(pt.pass);
        CHECK(pt.lhs >= 0.0);
        CHECK(pt.rhs > 0.0);
    }
}

TEST_CASE("gradient bound at t = 0 is the pointwise sandwich") {
    // exact check without simulation: |grad f|^2 <= C_M f^2 + 3 |grad f|^2
    const PotentialSpec p = make_quadratic(1);
    std::mt19937 gen(37);
    for (int i = 0; i < 200; ++i) {
        const auto f = random_obs(gen, 1);
        const PhaseState z = random_state(gen, 1);
        const double g2 = f.grad(z).squaredNorm();
        const double rhs = gradient_bound_constant(p.hess_bound) * f.eval(z) * f.eval(z) +
                           3.0 * g2;
        CHECK(g2 <= rhs + 1e-12);
    }
}

#include <doctest.h>

#include <cmath>
#include <sstream>
#include <unsupported/Eigen/MatrixFunctions>

#include "hypocert/dynamics.hpp"

using namespace hypocert;

namespace {

PhaseState state1(double x, double v) {
    Eigen::VectorXd xv(1), vv(1);
    xv << x;
    vv << v;
    return PhaseState(xv, vv);
}

Eigen::MatrixXd drift_matrix(int dim) {
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(2 * dim, 2 * dim);
    D.topRightCorner(dim, dim).setIdentity();
    D.bottomLeftCorner(dim, dim) = -Eigen::MatrixXd::Identity(dim, dim);
    D.bottomRightCorner(dim, dim) = -Eigen::MatrixXd::Identity(dim, dim);
    return D;
}

} // namespace

TEST_CASE("single Euler step against hand arithmetic") {
    const PotentialSpec p = make_quadratic(1);
    Eigen::VectorXd no_noise = Eigen::VectorXd::Zero(1);

    const PhaseState a = step(state1(0.0, 1.0), p, 0.01, no_noise);
    CHECK(a.x(0) == doctest::Approx(0.01).epsilon(1e-14));
    CHECK(a.v(0) == doctest::Approx(0.99).epsilon(1e-14));

    const PhaseState b = step(state1(1.0, 0.0), p, 0.01, no_noise);
    CHECK(b.x(0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(b.v(0) == doctest::Approx(-0.01).epsilon(1e-14));
}

TEST_CASE("noise enters the velocity only") {
    const PotentialSpec p = make_quadratic(1);
    Eigen::VectorXd dW(1);
    dW << 0.3;
    const PhaseState z = step(state1(0.0, 0.0), p, 0.01, dW, 2.0);
    CHECK(z.x(0) == doctest::Approx(0.0));
    CHECK(z.v(0) == doctest::Approx(0.6).epsilon(1e-14));
}

TEST_CASE("tangent flow at t=1 matches the matrix exponential") {
    const PotentialSpec p = make_quadratic(1);
    const double dt = 1e-4;
    TangentFlow J = TangentFlow::identity(1);
    const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(1);
    for (int i = 0; i < 10000; ++i) J = step_tangent(J, x0, p, dt);
    const Eigen::MatrixXd exact = drift_matrix(1).exp();
    CHECK((J.J - exact).cwiseAbs().maxCoeff() < 1e-3);
    CHECK((quadratic_flow_matrix(1, 1.0) - exact).norm() < 1e-12);
}

TEST_CASE("quadratic flow composes: Phi(s+t) = Phi(t) Phi(s)") {
    const Eigen::MatrixXd lhs = quadratic_flow_matrix(2, 3.0);
    const Eigen::MatrixXd rhs = quadratic_flow_matrix(2, 2.0) * quadratic_flow_matrix(2, 1.0);
    CHECK((lhs - rhs).norm() < 1e-10);
}

TEST_CASE("tangent flow satisfies J_{s,t} = J_{0,t} J_{0,s}^{-1} along a frozen path") {
    const PotentialSpec p = make_bump_double_well(2.0, 1.0);
    const double dt = 1e-3;
    Rng rng(99, 0);
    PhaseState z = state1(1.0, 0.0);
    std::vector<Eigen::VectorXd> xs;
    for (int i = 0; i < 1000; ++i) {
        xs.push_back(z.x);
        Eigen::VectorXd dW(1);
        dW << std::sqrt(dt) * rng.normal();
        z = step(z, p, dt, dW);
    }
    auto propagate = [&](int from, int to) {
        TangentFlow J = TangentFlow::identity(1);
        for (int i = from; i < to; ++i) J = step_tangent(J, xs[i], p, dt);
        return J.J;
    };
    const Eigen::MatrixXd j0t = propagate(0, 1000);
    const Eigen::MatrixXd j0s = propagate(0, 400);
    const Eigen::MatrixXd jst = propagate(400, 1000);
    CHECK((jst * j0s - j0t).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("exact transition reproduces the linear-SDE mean") {
    const PotentialSpec p = make_quadratic(1);
    const PhaseState z0 = state1(2.0, -1.0);
    const double t = 1.0;
    const int n = 100000;
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    Eigen::Vector2d sq = Eigen::Vector2d::Zero();
    for (int i = 0; i < n; ++i) {
        Rng rng(7, static_cast<std::uint64_t>(i));
        const PhaseState zt = exact_ou_transition(z0, p, t, std::sqrt(2.0), rng);
        const Eigen::Vector2d v(zt.x(0), zt.v(0));
        mean += v;
        sq += v.cwiseProduct(v);
    }
    mean /= n;
    const Eigen::Vector2d var = sq / n - mean.cwiseProduct(mean);
    const Eigen::Vector2d expected = quadratic_flow_matrix(1, t) * Eigen::Vector2d(2.0, -1.0);
    for (int j = 0; j < 2; ++j) {
        const double se = std::sqrt(var(j) / n);
        CHECK(std::abs(mean(j) - expected(j)) < 3.0 * se);
    }
}

TEST_CASE("long-time exact transition matches the stationary Gaussian") {
    // Stationary covariance solves D S + S D^T + sigma^2 e e^T = 0; for
    // sigma = sqrt(2) the solution is the identity.
    const PotentialSpec p = make_quadratic(1);
    const PhaseState z0 = state1(3.0, 0.0);
    const int n = 20000;
    double sx = 0, sv = 0, sxx = 0, svv = 0, sxv = 0;
    for (int i = 0; i < n; ++i) {
        Rng rng(11, static_cast<std::uint64_t>(i));
        const PhaseState z = exact_ou_transition(z0, p, 50.0, std::sqrt(2.0), rng);
        sx += z.x(0);
        sv += z.v(0);
        sxx += z.x(0) * z.x(0);
        svv += z.v(0) * z.v(0);
        sxv += z.x(0) * z.v(0);
    }
    const double mx = sx / n, mv = sv / n;
    const double var_x = sxx / n - mx * mx;
    const double var_v = svv / n - mv * mv;
    const double cov = sxv / n - mx * mv;
    // var of the variance estimator of a Gaussian is 2 sigma^4 / n
    const double se2 = std::sqrt(2.0 / n);
    CHECK(std::abs(mx) < 3.0 / std::sqrt(n));
    CHECK(std::abs(mv) < 3.0 / std::sqrt(n));
    CHECK(std::abs(var_x - 1.0) < 3.0 * se2);
    CHECK(std::abs(var_v - 1.0) < 3.0 * se2);
    CHECK(std::abs(cov) < 3.0 / std::sqrt(n));
}

TEST_CASE("exact transition covariance matches quadrature of the flow") {
    // independent route: Simpson integration of Phi(s) sigma^2 e e^T Phi(s)^T
    const double t = 0.7, sigma = std::sqrt(2.0);
    const int m = 2000;
    Eigen::Matrix2d acc = Eigen::Matrix2d::Zero();
    const Eigen::Vector2d e(0.0, 1.0);
    for (int i = 0; i <= m; ++i) {
        const double s = t * i / m;
        const double w = (i == 0 || i == m) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        const Eigen::Matrix2d phi = quadratic_flow_matrix(1, s);
        acc += w * phi * (sigma * sigma) * e * e.transpose() * phi.transpose();
    }
    acc *= t / (3.0 * m);
    CHECK((exact_ou_covariance(1, t, sigma) - acc).norm() < 1e-8);
}

TEST_CASE("Euler-Maruyama converges weakly to the exact mean") {
    const PotentialSpec p = make_quadratic(1);
    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_final = 1.0;
    cfg.n_paths = 20000;
    cfg.master_seed = 5;
    cfg.workers = 1;
    const auto ens = simulate_ensemble(state1(2.0, 0.0), p, cfg, {1.0}, false);
    double mx = 0.0;
    for (const auto& z : ens.states[0]) mx += z.x(0);
    mx /= cfg.n_paths;
    const double exact = (quadratic_flow_matrix(1, 1.0) * Eigen::Vector2d(2.0, 0.0))(0);
    CHECK(std::abs(mx - exact) < 0.03); // O(dt) bias + 3 SE head-room
}

TEST_CASE("ensembles are bit-identical across worker counts") {
    const PotentialSpec p = make_bump_double_well(2.0, 1.0);
    SimConfig cfg;
    cfg.dt = 1e-2;
    cfg.t_final = 0.5;
    cfg.n_paths = 64;
    cfg.master_seed = 42;
    const std::vector<double> times{0.25, 0.5};

    cfg.workers = 1;
    const auto a = simulate_ensemble(state1(1.0, -1.0), p, cfg, times, true);
    cfg.workers = 8;
    const auto b = simulate_ensemble(state1(1.0, -1.0), p, cfg, times, true);

    REQUIRE(a.states.size() == b.states.size());
    for (std::size_t k = 0; k < a.states.size(); ++k)
        for (std::size_t i = 0; i < a.states[k].size(); ++i) {
            CHECK(a.states[k][i].x(0) == b.states[k][i].x(0));
            CHECK(a.states[k][i].v(0) == b.states[k][i].v(0));
            CHECK((a.tangents[k][i] - b.tangents[k][i]).cwiseAbs().maxCoeff() == 0.0);
        }

    std::ostringstream csv_a, csv_b;
    write_ensemble_csv(csv_a, a, true);
    write_ensemble_csv(csv_b, b, true);
    CHECK(csv_a.str() == csv_b.str());
}

TEST_CASE("blowup raises with path and time attached") {
    PotentialSpec p = make_quadratic(1);
    p.grad = [](const Eigen::VectorXd& x) { return Eigen::VectorXd(-1e12 * x); };
    SimConfig cfg;
    cfg.dt = 0.1;
    cfg.t_final = 10.0;
    cfg.n_paths = 2;
    cfg.workers = 1;
    CHECK_THROWS_AS(simulate_ensemble(state1(1.0, 0.0), p, cfg, {10.0}, false), BlowupError);
}

TEST_CASE("config validation rejects bad parameters") {
    SimConfig cfg;
    cfg.dt = -1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = SimConfig{};
    cfg.n_paths = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = SimConfig{};
    cfg.sigma = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

#include "hypocert/dynamics.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <map>
#include <mutex>
#include <ostream>

#include "hypocert/parallel.hpp"

namespace hypocert {

PhaseState::PhaseState(Eigen::VectorXd x_, Eigen::VectorXd v_)
    : x(std::move(x_)), v(std::move(v_)) {
    if (x.size() != v.size())
        throw std::invalid_argument("PhaseState: x and v must have equal length");
    if (!x.allFinite() || !v.allFinite())
        throw std::invalid_argument("PhaseState: non-finite component");
}

Eigen::VectorXd PhaseState::packed() const {
    Eigen::VectorXd z(2 * dim());
    z << x, v;
    return z;
}

PhaseState PhaseState::from_packed(const Eigen::VectorXd& z) {
    const int d = static_cast<int>(z.size()) / 2;
    return PhaseState(z.head(d), z.tail(d));
}

void SimConfig::validate() const {
    if (dt <= 0.0) throw std::invalid_argument("SimConfig: dt must be positive");
    if (t_final <= 0.0) throw std::invalid_argument("SimConfig: t_final must be positive");
    if (dt > t_final) throw std::invalid_argument("SimConfig: dt must not exceed t_final");
    if (n_paths < 1) throw std::invalid_argument("SimConfig: n_paths must be >= 1");
    if (sigma <= 0.0) throw std::invalid_argument("SimConfig: sigma must be positive");
}

PhaseState step(const PhaseState& z, const PotentialSpec& p, double dt,
                const Eigen::VectorXd& dW, double sigma) {
    if (dt <= 0.0) throw std::invalid_argument("step: dt must be positive");
    PhaseState out;
    out.x = z.x + dt * z.v;
    out.v = z.v - dt * (z.v + p.grad(z.x)) + sigma * dW;
    return out;
}

Eigen::MatrixXd drift_jacobian(const PotentialSpec& p, const Eigen::VectorXd& x) {
    const int d = static_cast<int>(x.size());
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(2 * d, 2 * d);
    D.topRightCorner(d, d) = Eigen::MatrixXd::Identity(d, d);
    D.bottomLeftCorner(d, d) = -hessian(p, x);
    D.bottomRightCorner(d, d) = -Eigen::MatrixXd::Identity(d, d);
    return D;
}

TangentFlow step_tangent(const TangentFlow& J, const Eigen::VectorXd& x,
                         const PotentialSpec& p, double dt) {
    if (dt < 0.0) throw std::invalid_argument("step_tangent: dt must be nonnegative");
    if (dt == 0.0) return J;
    return TangentFlow{J.J + dt * drift_jacobian(p, x) * J.J};
}

namespace {

Eigen::Matrix2d kinetic_block(double t) {
    Eigen::Matrix2d D;
    D << 0.0, 1.0, -1.0, -1.0;
    return (t * D).exp();
}

// Covariance of the exact OU transition for one (x_i, v_i) pair, by
// composite Simpson quadrature of exp(sD) sigma^2 e e^T exp(sD)^T.
Eigen::Matrix2d ou_cov_block(double t, double sigma) {
    const int n = 2048; // even
    const double h = t / n;
    Eigen::Matrix2d acc = Eigen::Matrix2d::Zero();
    for (int i = 0; i <= n; ++i) {
        const Eigen::Vector2d f = kinetic_block(i * h).col(1);
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        acc += w * f * f.transpose();
    }
    return (sigma * sigma * h / 3.0) * acc;
}

struct OuTransitionCache {
    Eigen::Matrix2d mean_map;
    Eigen::Matrix2d chol;
};

const OuTransitionCache& ou_transition(double t, double sigma) {
    static std::map<std::pair<double, double>, OuTransitionCache> cache;
    static std::mutex mutex;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find({t, sigma});
    if (it == cache.end()) {
        OuTransitionCache entry;
        entry.mean_map = kinetic_block(t);
        if (t > 0.0) {
            entry.chol = Eigen::LLT<Eigen::Matrix2d>(ou_cov_block(t, sigma)).matrixL();
        } else {
            entry.chol = Eigen::Matrix2d::Zero();
        }
        it = cache.emplace(std::make_pair(t, sigma), entry).first;
    }
    return it->second;
}

} // namespace

Eigen::MatrixXd quadratic_flow_matrix(int dim, double t) {
    const Eigen::Matrix2d b = kinetic_block(t);
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(2 * dim, 2 * dim);
    for (int i = 0; i < dim; ++i) {
        J(i, i) = b(0, 0);
        J(i, dim + i) = b(0, 1);
        J(dim + i, i) = b(1, 0);
        J(dim + i, dim + i) = b(1, 1);
    }
    return J;
}

Eigen::MatrixXd exact_ou_covariance(int dim, double t, double sigma) {
    const Eigen::Matrix2d S = ou_cov_block(t, sigma);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(2 * dim, 2 * dim);
    for (int i = 0; i < dim; ++i) {
        out(i, i) = S(0, 0);
        out(i, dim + i) = S(0, 1);
        out(dim + i, i) = S(1, 0);
        out(dim + i, dim + i) = S(1, 1);
    }
    return out;
}

PhaseState exact_ou_transition(const PhaseState& z0, const PotentialSpec& p,
                               double t, double sigma, Rng& rng) {
    if (!p.is_quadratic())
        throw std::invalid_argument("exact_ou_transition: scheme requires the quadratic potential");
    if (t < 0.0) throw std::invalid_argument("exact_ou_transition: t must be nonnegative");
    if (t == 0.0) return z0;
    const auto& tr = ou_transition(t, sigma);
    const int d = z0.dim();
    PhaseState out;
    out.x.resize(d);
    out.v.resize(d);
    for (int i = 0; i < d; ++i) {
        const Eigen::Vector2d mean = tr.mean_map * Eigen::Vector2d(z0.x(i), z0.v(i));
        const Eigen::Vector2d noise = tr.chol * Eigen::Vector2d(rng.normal(), rng.normal());
        out.x(i) = mean(0) + noise(0);
        out.v(i) = mean(1) + noise(1);
    }
    return out;
}

TrajectoryEnsemble simulate_ensemble(const PhaseState& z0, const PotentialSpec& p,
                                     const SimConfig& cfg,
                                     const std::vector<double>& record_times,
                                     bool record_tangent) {
    cfg.validate();
    if (record_times.empty())
        throw std::invalid_argument("simulate_ensemble: record_times is empty");
    for (std::size_t k = 0; k < record_times.size(); ++k) {
        if (record_times[k] < 0.0 || record_times[k] > cfg.t_final + 1e-12)
            throw std::invalid_argument("simulate_ensemble: record time outside [0, t_final]");
        if (k > 0 && record_times[k] < record_times[k - 1])
            throw std::invalid_argument("simulate_ensemble: record_times must be sorted");
    }
    if (cfg.scheme == Scheme::exact_ou && !p.is_quadratic())
        throw std::invalid_argument("simulate_ensemble: exact_ou requires the quadratic potential");

    const std::size_t n = static_cast<std::size_t>(cfg.n_paths);
    const std::size_t n_rec = record_times.size();
    TrajectoryEnsemble ens;
    ens.dim = z0.dim();
    ens.times = record_times;
    ens.states.assign(n_rec, std::vector<PhaseState>(n));
    if (record_tangent) ens.tangents.assign(n_rec, std::vector<Eigen::MatrixXd>(n));
    ens.substream_ids.resize(n);
    for (std::size_t i = 0; i < n; ++i) ens.substream_ids[i] = i;

    const int d = z0.dim();
    std::exception_ptr first_error;
    std::mutex error_mutex;

    parallel_for(n, resolve_workers(cfg.workers), [&](std::size_t begin, std::size_t end) {
        Eigen::VectorXd dW(d);
        for (std::size_t i = begin; i < end; ++i) {
            try {
                Rng rng(cfg.master_seed, i);
                PhaseState z = z0;
                TangentFlow J = TangentFlow::identity(d);
                double t = 0.0;
                for (std::size_t k = 0; k < n_rec; ++k) {
                    const double target = record_times[k];
                    if (cfg.scheme == Scheme::exact_ou) {
                        z = exact_ou_transition(z, p, target - t, cfg.sigma, rng);
                        t = target;
                        if (record_tangent) J.J = quadratic_flow_matrix(d, target);
                    } else {
                        const double span = target - t;
                        if (span > 0.0) {
                            const int n_steps =
                                std::max(1, static_cast<int>(std::ceil(span / cfg.dt - 1e-9)));
                            const double h = span / n_steps;
                            const double sq = std::sqrt(h);
                            for (int s = 0; s < n_steps; ++s) {
                                if (record_tangent) J = step_tangent(J, z.x, p, h);
                                for (int j = 0; j < d; ++j) dW(j) = sq * rng.normal();
                                z = step(z, p, h, dW, cfg.sigma);
                            }
                        }
                        t = target;
                    }
                    if (!z.x.allFinite() || !z.v.allFinite()) throw BlowupError(i, target);
                    ens.states[k][i] = z;
                    if (record_tangent) {
                        if (!J.J.allFinite()) throw BlowupError(i, target);
                        ens.tangents[k][i] = J.J;
                    }
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    });
    if (first_error) std::rethrow_exception(first_error);
    return ens;
}

void write_ensemble_csv(std::ostream& os, const TrajectoryEnsemble& ens, bool include_tangent) {
    const int d = ens.dim;
    os << "path_id,t";
    for (int j = 1; j <= d; ++j) os << ",x_" << j;
    for (int j = 1; j <= d; ++j) os << ",v_" << j;
    if (include_tangent && !ens.tangents.empty())
        for (int r = 0; r < 2 * d; ++r)
            for (int c = 0; c < 2 * d; ++c) os << ",J_" << r << "_" << c;
    os << "\n";
    char buf[32];
    auto put = [&](double value) {
        std::snprintf(buf, sizeof(buf), "%.17g", value);
        os << ',' << buf;
    };
    for (std::size_t i = 0; i < ens.n_paths(); ++i) {
        for (std::size_t k = 0; k < ens.times.size(); ++k) {
            os << i;
            put(ens.times[k]);
            const PhaseState& z = ens.states[k][i];
            for (int j = 0; j < d; ++j) put(z.x(j));
            for (int j = 0; j < d; ++j) put(z.v(j));
            if (include_tangent && !ens.tangents.empty()) {
                const Eigen::MatrixXd& J = ens.tangents[k][i];
                for (int r = 0; r < 2 * d; ++r)
                    for (int c = 0; c < 2 * d; ++c) put(J(r, c));
            }
            os << "\n";
        }
    }
}

} // namespace hypocert

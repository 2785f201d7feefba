#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "hypocert/potentials.hpp"
#include "hypocert/rng.hpp"

namespace hypocert {

// Point z = (x, v) in 2d-dimensional phase space. Components must be finite.
struct PhaseState {
    Eigen::VectorXd x;
    Eigen::VectorXd v;

    PhaseState() = default;
    PhaseState(Eigen::VectorXd x_, Eigen::VectorXd v_);

    int dim() const { return static_cast<int>(x.size()); }
    double norm() const { return std::sqrt(x.squaredNorm() + v.squaredNorm()); }
    Eigen::VectorXd packed() const;
    static PhaseState from_packed(const Eigen::VectorXd& z);
};

// Derivative of the flow map with respect to the initial condition,
// advanced alongside the path by  J' = J + dt [[0, I], [-Hess U, -I]] J.
struct TangentFlow {
    Eigen::MatrixXd J;
    static TangentFlow identity(int dim) {
        return TangentFlow{Eigen::MatrixXd::Identity(2 * dim, 2 * dim)};
    }
    double op_norm() const { return J.jacobiSvd().singularValues()(0); }
};

enum class Scheme { euler_maruyama, exact_ou };

struct SimConfig {
    double dt = 1e-2;
    double t_final = 1.0;
    int n_paths = 1;
    std::uint64_t master_seed = 1;
    Scheme scheme = Scheme::euler_maruyama;
    double sigma = 1.4142135623730951; // sqrt(2)
    int workers = 0;                   // 0 = resolve from env / hardware

    void validate() const;
};

struct BlowupError : std::runtime_error {
    std::size_t path_index;
    double time;
    BlowupError(std::size_t path, double t)
        : std::runtime_error("numerical blowup on path " + std::to_string(path) +
                             " at t = " + std::to_string(t)),
          path_index(path), time(t) {}
};

// One Euler-Maruyama step: x' = x + v dt, v' = v - (v + grad U(x)) dt + sigma dW.
PhaseState step(const PhaseState& z, const PotentialSpec& p, double dt,
                const Eigen::VectorXd& dW, double sigma = 1.4142135623730951);

// Euler step of the tangent flow along a position x.
TangentFlow step_tangent(const TangentFlow& J, const Eigen::VectorXd& x,
                         const PotentialSpec& p, double dt);

// Drift Jacobian [[0, I], [-Hess U(x), -I]].
Eigen::MatrixXd drift_jacobian(const PotentialSpec& p, const Eigen::VectorXd& x);

// For the quadratic potential the drift Jacobian is constant; exact flow
// quantities below use exp(t D) with D = [[0, I], [-I, -I]].
Eigen::MatrixXd quadratic_flow_matrix(int dim, double t);

// Exact Gaussian transition for the quadratic potential: mean exp(tD) z0,
// covariance integral_0^t exp(sD) sigma^2 e e^T exp(sD^T) ds (cached per t).
PhaseState exact_ou_transition(const PhaseState& z0, const PotentialSpec& p,
                               double t, double sigma, Rng& rng);
Eigen::MatrixXd exact_ou_covariance(int dim, double t, double sigma);

// N paths recorded at the given times, with tangent flows. Path i draws
// from the RNG substream (master_seed, i); output is independent of the
// worker count.
struct TrajectoryEnsemble {
    int dim = 1;
    std::vector<double> times;
    // states[k][i]: path i at times[k]
    std::vector<std::vector<PhaseState>> states;
    std::vector<std::vector<Eigen::MatrixXd>> tangents; // empty when not recorded
    std::vector<std::uint64_t> substream_ids;

    std::size_t n_paths() const { return substream_ids.size(); }
};

TrajectoryEnsemble simulate_ensemble(const PhaseState& z0, const PotentialSpec& p,
                                     const SimConfig& cfg,
                                     const std::vector<double>& record_times,
                                     bool record_tangent = true);

// CSV columns: path_id, t, x_1..x_d, v_1..v_d [, J row-major].
void write_ensemble_csv(std::ostream& os, const TrajectoryEnsemble& ens, bool include_tangent);

} // namespace hypocert

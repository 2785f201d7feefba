#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "hypocert/gamma2.hpp"
#include "hypocert/lyapunov.hpp"
#include "hypocert/malliavin.hpp"
#include "hypocert/metric.hpp"

namespace hypocert {

// A pipeline stage failed; exit code 2 at the CLI.
struct CertifyError : std::runtime_error {
    std::string stage;
    CertifyError(std::string stage_, const std::string& msg)
        : std::runtime_error(stage_ + ": " + msg), stage(std::move(stage_)) {}
};

// A Monte-Carlo estimate could not separate from zero; exit code 3.
struct InconclusiveError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FarReport {
    double t = 0.0;
    double alpha_target = 0.5;
    double R = 0.0;       // contraction holds for |z| >= R; 0 means everywhere
    double c1_prop = 0.0; // C R e^{M'' R^2} with M'' = a bracket_hi
    double K = 0.0;       // 4 c1_prop
    bool degenerate = false;
};

// R from the root of  C L^*(s)^{e^{-beta t/4}} = alpha L_*(s)  on the radial
// envelopes (bisection), then C1 = C R e^{a(hi R^2 + off)} and K = 4 C1.
FarReport far_region_factor(const LyapunovParams& lp, const MetricParams& mp, double t,
                            double alpha_target, double c_drift);

struct SmallReport {
    double factor = 0.75;
    double t_min = 0.0;     // max(4 ln(kappa/r)/beta, 3 ln 12)
    double delta_max = 0.0; // 1 / (2 (C + 2))
};

// Thresholds kappa e^{-beta t/4} <= r and 3 e^{-t/3} <= 1/4 checked; the
// contraction factor on the delta-close region is 3/4.
SmallReport small_region_factor(double c_drift, const LyapunovParams& lp,
                                const MetricParams& mp, double t);

// Smallest R' with integral_R^{R'} L_*(s) ds >= 8 C1 (R' = R when C1 = 0).
double derive_r_prime(const LyapunovParams& lp, double R, double c1_prop);

struct MidReport {
    double factor = 0.0;     // 1 - a/4 with a the coupling CI lower bound
    double a_coupling = 0.0;
    double r_prime = 0.0;
    double log_c_star = 0.0; // ln of C_* (kept in log space; C_* can overflow)
    double beta_w = 0.0;     // after the a/(8 C_*) cap
};

MidReport mid_region_factor(const LyapunovParams& lp, const MetricParams& mp,
                            double c_drift, const FarReport& far,
                            const ProbEstimate& coupling);

struct HarrisCertificate {
    std::string potential;
    LyapunovParams lp;
    double c_m = 0.0;
    double r_metric = 0.5;
    double delta = 0.0;
    double beta_w = 0.0;
    double t_cert = 0.0;
    double c_drift = 0.0;
    FarReport far;
    SmallReport small;
    MidReport mid;
    ProbEstimate coupling;
    double gamma_far = 0.0, gamma_small = 0.0, gamma_mid = 0.0;
    double lambda_final = 0.0;
    double log_c_final = 0.0; // ln C; exp may overflow, the log is authoritative
    double c_final = 0.0;
};

// Measured drift constant: max over the grid of the 99% UCB of
// E[exp(a Q(Z_t)) |J|] / exp(a Q(z)).
double measure_drift_constant(const PotentialSpec& p, const LyapunovParams& lp, double t,
                              const std::vector<PhaseState>& z_grid, const SimConfig& cfg);

// Full pipeline: hypotheses -> derive_params -> drift -> gradient ->
// far/small thresholds -> coupling at the derived region -> mid factor.
// Throws CertifyError (stage failure) or InconclusiveError.
HarrisCertificate assemble(const PotentialSpec& p, const SimConfig& cfg);

void write_certificate(std::ostream& os, const HarrisCertificate& cert);

struct DecayCurve {
    std::vector<double> times;
    std::vector<double> w1_euclid; // empty when not requested
    std::vector<double> w1_rho;
    double floor_euclid = 0.0, floor_rho = 0.0;
    double lambda_hat = 0.0;
    double lambda_ci = 0.0; // 95% half-width of the fitted rate
    std::size_t window_begin = 0, window_end = 0;
    bool inconclusive = false;
};

// Empirical W1 between two delta-mass-initialized ensembles over t_grid,
// with a log-linear rate fit over the window above the MC noise floor
// (the W1 between two independent samples of the same law).
DecayCurve measure_decay(const PotentialSpec& p, const PhaseState& za, const PhaseState& zb,
                         const std::vector<double>& t_grid, const SimConfig& cfg,
                         const MetricParams& mp, bool with_euclid = true,
                         bool with_rho = true);

void write_decay_csv(std::ostream& os, const DecayCurve& curve);

} // namespace hypocert

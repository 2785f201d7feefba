#pragma once

#include <vector>

#include "hypocert/dynamics.hpp"
#include "hypocert/potentials.hpp"

namespace hypocert {

// Constants of the exponential Lyapunov weight
//   L(z) = exp(a_star (|v|^2 + 2 U(x) + 2 k |x|^2 + k x.v)).
// bracket_lo / bracket_hi are the extremal coefficients of the quadratic
// form in the exponent, so that
//   exp(a bracket_lo |z|^2) <= L(z) <= exp(a bracket_hi |z|^2)
// on the calibration ball.
struct LyapunovParams {
    double a_star = 0.0;
    double a = 0.0; // working exponent, in (0, a_star]
    double k = 1.0;
    double beta = 0.0;
    double kappa = 1.0;
    double M = 0.0;
    double bracket_lo = 0.75;
    double bracket_hi = 3.0;
    double bracket_off = 0.0; // additive exponent offset in the upper bracket
};

// L_*(s) = exp(a bracket_lo s^2) and L^*(s) = exp(a (bracket_hi s^2 + bracket_off)),
// the increasing radial envelopes of the weight.
double weight_lower_bracket(double s, const LyapunovParams& lp);
double weight_upper_bracket(double s, const LyapunovParams& lp);

// Q(x,v) = |v|^2 + 2 U(x) + |x|^2/2 + x.v  (the drift functional).
double q_form(const PhaseState& z, const PotentialSpec& p);

// H(z) = |v|^2 + x.grad U(x) - d sigma^2, the negated drift of a Q(Z_t).
double h_form(const PhaseState& z, const PotentialSpec& p, double sigma);

// P_k(z) = 2(|x|^2 + |v|^2 + k U(x)).
double p_form(const PhaseState& z, const PotentialSpec& p, double k);

// Exponent of the weight: a_star (|v|^2 + 2U + 2k|x|^2 + k x.v).
double log_weight(const PhaseState& z, const PotentialSpec& p, const LyapunovParams& lp);

struct WeightValue {
    double value = 1.0;
    bool saturated = false; // exponent exceeded 700; value not meaningful
};

// L(z)^r; guarded against overflow.
WeightValue weight_L(const PhaseState& z, const PotentialSpec& p,
                     const LyapunovParams& lp, double r);

// beta from grid maximization of (H - c3)/P_k over B(0, 20), then
// a^* = beta c1 / 32, a_star = 3 a^* / (8 (3 + M)), k = c1,
// kappa = 4 (3 + M) / 3, with the kappa inequality validated on a grid.
LyapunovParams derive_params(const PotentialSpec& p, double sigma = 1.4142135623730951);

struct DriftPoint {
    PhaseState z;
    double lhs_mean = 0.0;
    double lhs_ucb = 0.0;  // 99% upper confidence bound
    double rhs = 0.0;      // slack * exp(a e^{-beta t/4} Q(z))
    double rhs_strict = 0.0;
    bool pass = false;
    bool pass_strict = false;
    bool inconclusive = false; // weight saturated on some sample
};

struct DriftReport {
    double t = 0.0;
    double a = 0.0;
    double slack = 1.0;        // e^{1+M} C(a)
    double slack_strict = 1.0; // C(a) = c1 beta / (c1 beta - 16 a)
    std::vector<DriftPoint> points;
    bool pass = false;
    // Largest observed ratio lhs_ucb / exp(a Q(z)); feeds the certificate's
    // measured contraction constant.
    double max_ratio = 0.0;
};

// Monte-Carlo check of  E[ exp(a Q(Z_t)) |J_{0,t}| ] <= slack exp(a e^{-beta t/4} Q(z))
// at each grid point.
DriftReport verify_drift(const PotentialSpec& p, const LyapunovParams& lp, double t,
                         const std::vector<PhaseState>& z_grid, const SimConfig& cfg);

void write_drift_csv(std::ostream& os, const DriftReport& rep);

} // namespace hypocert

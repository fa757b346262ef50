#pragma once

#include <array>

#include "ftlab/gas.hpp"

namespace ftlab {

// Eigenstructure of the Lagrangian Euler flux at a state. Families 1 and 3
// are genuinely nonlinear and carry the normalization r_i . grad lambda_i = 1;
// family 2 is linearly degenerate with lambda_2 = 0 and a unit-length r_2.
struct EigenSystem {
    Vec3 lambdas;                 // (-c, 0, +c)
    std::array<Vec3, 3> r;        // right eigenvectors, normalized as above
};

EigenSystem eigen(const State& u, const GasParameters& g);

double lambda_family(const State& u, const GasParameters& g, int family);
Vec3 grad_lambda_family(const State& u, const GasParameters& g, int family);

enum class WaveKind { shock, rarefaction, contact };

// One point on a parametrized wave curve. For families 1 and 3 the parameter
// sigma is the shift of lambda_i along the curve; for family 2 it is arc
// length in conserved variables. speed is the Rankine-Hugoniot speed for
// shock points, 0 for contacts, and the characteristic speed for rarefaction
// points.
struct WaveCurvePoint {
    State state;
    double sigma = 0.0;
    double speed = 0.0;
    int family = 0;
    WaveKind kind = WaveKind::shock;
};

// Hugoniot locus through u0 with the lambda-shift parametrization, both
// branches (sigma < 0 is the entropic/Lax branch). Continuation in sigma with
// a Newton solve of the RH system closed by the lambda normalization.
WaveCurvePoint hugoniot_locus(const State& u0, const GasParameters& g, int family,
                              double sigma, const StateBox& box);

// Entropic shock curve: hugoniot_locus restricted to sigma <= 0.
WaveCurvePoint shock_curve(const State& u0, const GasParameters& g, int family,
                           double sigma, const StateBox& box);

// Integral curve of r_i from u0, sigma >= 0; isentropic by construction.
WaveCurvePoint rarefaction_curve(const State& u0, const GasParameters& g, int family,
                                 double sigma, const StateBox& box);

// Straight line at constant (p, w), arc-length parametrized, speed 0.
WaveCurvePoint contact_curve(const State& u0, const GasParameters& g, double sigma,
                             const StateBox& box);

// Which branch convention composition uses per genuinely nonlinear family.
enum class CurveChart {
    physical_fan,  // shock for sigma < 0, rarefaction for sigma > 0
    shock_only,    // Hugoniot locus for both signs (the BLY q_i chart)
};

State apply_curve(const State& u0, const GasParameters& g, int family, double sigma,
                  CurveChart chart, const StateBox& box);

// W3(s3) o W2(s2) o W1(s1) applied to u_left.
State compose_curves(const State& u_left, const GasParameters& g, const Vec3& sigmas,
                     CurveChart chart, const StateBox& box);

struct RiemannFan {
    Vec3 sigmas;
    State middle_left;    // after the 1-wave
    State middle_right;   // after the 2-wave
    std::array<WaveKind, 3> wave_kinds;
    std::array<double, 3> speeds;  // RH speed, 0, RH speed (fan-edge value for rarefactions)
};

struct RiemannOptions {
    double tol = 1e-11;
    int max_iterations = 100;
    double solvability_threshold = 0.5;  // max |u_L - u_R| accepted
    Vec3 initial_guess{};                // warm start for the Newton iteration
};

// Damped Newton on the three curve parameters, seeded at (0,0,0).
Vec3 solve_wave_coordinates(const State& u_left, const State& u_right, const GasParameters& g,
                            CurveChart chart, const StateBox& box,
                            const RiemannOptions& opts = {});

RiemannFan solve_riemann(const State& u_left, const State& u_right, const GasParameters& g,
                         const StateBox& box, const RiemannOptions& opts = {});

}  // namespace ftlab

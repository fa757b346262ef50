#pragma once

#include <string>
#include <vector>

#include "ftlab/front_tracking.hpp"
#include "ftlab/glimm.hpp"

namespace ftlab {

// Coordinates (q1,q2,q3) of v relative to u along the shock-curve chart:
// v = S3(q3) o S2(q2) o S1(q1)(u).
struct WaveDecomposition {
    Vec3 q;
};

WaveDecomposition decompose(const State& u, const State& v, const GasParameters& g,
                            const StateBox& box, const Vec3& seed = Vec3{});

// BLY field weights at a point: the transversal-wave sums plus, for the
// genuinely nonlinear families, the same-family term selected by sign(q_i).
Vec3 a_fields(double x, const Profile& u, const Profile& v, const Vec3& q_at_x);

struct BlyConstants {
    double kappa1 = 1.0;
    double kappa2 = 1.0;
};

struct PhiResult {
    double value = 0.0;   // sum_i int |q_i| W_i dx
    double l1 = 0.0;      // int |v - u| dx on the same refinement
    double min_w = 1.0;   // extremes of W_i over cells and families
    double max_w = 1.0;
};

// Exact evaluation on the common refinement of both front partitions. The
// profiles must agree outside their fronts (compact-support difference).
PhiResult phi(const Profile& u, const Profile& v, const GasParameters& g,
              const StateBox& box, const BlyConstants& bc);

struct PhiSample {
    double t;
    double phi;
    double slope;       // forward difference to the next sample; NaN on last
    double shift_term;  // sum over psi shocks of |d psi| |hdot - hdot_true|
};

struct PhiWindow {
    double t0, t1;
    bool skipped;  // window shorter than 10 sample_dt
    std::vector<PhiSample> samples;
};

struct PhiEventCheck {
    double t;
    double before, after;
    bool ok;
};

struct SlopeMonitorResult {
    std::vector<PhiWindow> windows;
    std::vector<PhiEventCheck> events;
    double max_slope = 0.0;       // largest forward-difference slope seen
    double max_shift_term = 0.0;  // largest shift term seen
    bool events_ok = true;        // Phi(t+) <= Phi(t-) at every interaction
    double nu = 0.0;
    // constants of the slope bound K * shift_term + C * nu used in the CSV
    // verdict column; callers set them from their calibration
    double bound_k = 1.0;
    double bound_c = 1.0;

    std::string to_csv() const;
    std::string to_json() const;
};

// Samples Phi(u(t), psi(t)) between interaction times of either trajectory
// and audits the drop of Phi across every interaction.
SlopeMonitorResult phi_slope_monitor(const TrajectoryRecord& u_traj,
                                     const TrajectoryRecord& psi_traj, double sample_dt,
                                     const GasParameters& g, const StateBox& box,
                                     const BlyConstants& bc);

// Shrinks (kappa1, kappa2) by halving until W_i <= 2 on the suite, then grows
// kappa2 by doubling until Phi is non-increasing at every interaction.
BlyConstants calibrate_bly(const std::vector<std::pair<const TrajectoryRecord*,
                                                       const TrajectoryRecord*>>& suite,
                           const GasParameters& g, const StateBox& box);

}  // namespace ftlab

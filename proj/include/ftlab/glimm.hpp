#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ftlab/front_tracking.hpp"

namespace ftlab {

struct GlimmReport {
    double L = 0.0;        // total variation (sum of front jump norms)
    double Q = 0.0;        // interaction potential over approaching pairs
    double upsilon = 0.0;  // L + kappa Q
    double kappa = 0.0;
    // contributions of each approaching pair (indices into the profile)
    struct Pair {
        std::size_t left, right;
        double product;
    };
    std::vector<Pair> pairs;
};

// A pair (alpha left of beta) approaches iff family(alpha) > family(beta), or
// they share a genuinely nonlinear family and at least one is a shock.
// Non-physical fronts count as a fastest fictitious family.
bool approaching(const Front& left, const Front& right);

GlimmReport glimm(const Profile& p, double kappa);

// Signed sigma-bar of the weight measure: contacts scale the temperature jump
// by 1/(C1 J); families 1/3 carry -|du| at shocks and +|du| at rarefaction
// steps; non-physical fronts carry +|du|.
double sigma_bar(const Front& f, const GasParameters& g, double c1, double j_const);

struct WeightProfile {
    double c1 = 1.0;
    double j_const = 0.0;  // J = inf theta / 2 over the box
    double kappa = 0.0;
    // levels[k] is the weight left of front k; levels back() is the rightmost
    std::vector<double> levels;
    std::vector<double> sigma_bars;  // per front

    double level_left_of(std::size_t front_index) const { return levels[front_index]; }
    double level_right_of(std::size_t front_index) const { return levels[front_index + 1]; }
    // weight at a point (fronts from the matching profile)
    double at(const Profile& p, double x) const;
};

// Inductive construction from the extreme left:
//   a(1) = 1 + C1 (L + kappa Q),
//   a(i+1) = a(i) + C1 ( -(sbar_1)_- + (sbar_3)_- + (J a_hat/theta_hat) sbar_2 )
// with a_hat, theta_hat taken immediately left of the contact.
WeightProfile build_weight(const Profile& p, const GasParameters& g, const StateBox& box,
                           double kappa, double c1);

struct RatioCheck {
    std::size_t front_index;
    int family;
    FrontKind kind;
    double ratio;      // a_right / a_left
    double lo, hi;     // admissible window (equal bounds for contacts)
    bool ok;
};

struct RatioReport {
    std::vector<RatioCheck> checks;
    bool all_ok = true;
    std::string to_json() const;
};

// (con1): 1-shock ratio in [1-2C1 s0, 1-C1 s0/2]; (con2): 3-shock ratio in
// [1+C1 s0/2, 1+2C1 s0]; (con3): contact ratio = theta_R/theta_L exactly;
// rarefactions and non-physical fronts leave the weight unchanged.
RatioReport check_ratios(const Profile& p, const WeightProfile& w, const GasParameters& g);

struct DecayEventAudit {
    double time;
    double upsilon_before, upsilon_after;
    double worst_weight_rise;  // max over x (away from the point) of a(t+) - a(t-)
    bool upsilon_ok, weight_ok;
};

struct DecayReport {
    std::vector<DecayEventAudit> events;
    bool all_ok = true;
    double kappa;
    std::string to_json() const;
};

// Verifies Upsilon(t+) <= Upsilon(t-) and pointwise a(x,t+) <= a(x,t-) away
// from the interaction point, at every event of the trajectory.
DecayReport weight_decay_audit(const TrajectoryRecord& traj, double kappa, double c1,
                               double tol = 1e-12);

// Smallest power of two in [1, 2^10] for which Upsilon decays at every event
// of every calibration trajectory; throws ConfigError if none works.
double calibrate_kappa(const std::vector<TrajectoryRecord>& suite, double tol = 1e-12);

// CSV rows "t,L,Q,upsilon" sampled after each event (plus t=0).
std::string glimm_series_csv(const TrajectoryRecord& traj, double kappa);

}  // namespace ftlab

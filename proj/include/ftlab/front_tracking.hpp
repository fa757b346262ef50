#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ftlab/front.hpp"
#include "ftlab/rng.hpp"
#include "ftlab/wave_curves.hpp"

namespace ftlab {

// The accuracy parameter nu budgets all three scheme errors: front speed
// perturbations, rarefaction step strength, and total non-physical strength.
struct SchemeParameters {
    double nu = 1e-2;
    // Non-physical front speed; above all box characteristic speeds. Also
    // scales the shift windows, which need slack around the 1-shock speeds.
    double lambda_hat = 4.0;
    double kappa = 8.0;        // Glimm weight for Upsilon = L + kappa Q
    // Strength-product threshold routing an interaction to the simplified
    // solver. Defaults to nu^3: at nu even first-generation step crossings
    // route simplified and the total non-physical strength stalls at the
    // Glimm-potential scale instead of vanishing with nu.
    double np_threshold = -1;
    double speed_jitter = -1;  // max speed perturbation; <0 -> nu/10
    std::uint64_t seed = 1;
    std::uint64_t max_events = 2'000'000;

    double np_threshold_value() const {
        return np_threshold < 0 ? nu * nu * nu : np_threshold;
    }
    double jitter_value() const { return speed_jitter < 0 ? nu / 10.0 : speed_jitter; }
    void validate(const GasParameters& g, const StateBox& box) const;
};

// Imposed shock speeds. Policies see the front and the current time; the
// trace-driven policy closes over whatever reference data it needs. Only
// shocks are ever shifted.
class ShiftPolicy {
  public:
    virtual ~ShiftPolicy() = default;
    virtual std::optional<double> imposed_speed(const Front& shock, double t) const = 0;
};

// Speed window of admissible shifts: [-lambda_hat/2, -alpha] for 1-shocks,
// [alpha, lambda_hat/2] for 3-shocks.
double clip_to_shift_window(int family, double speed, double alpha, double lambda_hat);

class ConstantOffsetShift : public ShiftPolicy {
  public:
    ConstantOffsetShift(double offset, double alpha, double lambda_hat)
        : offset_(offset), alpha_(alpha), lambda_hat_(lambda_hat) {}
    std::optional<double> imposed_speed(const Front& shock, double t) const override;

  private:
    double offset_, alpha_, lambda_hat_;
};

class FunctionShift : public ShiftPolicy {
  public:
    using Rule = std::function<std::optional<double>(const Front&, double)>;
    explicit FunctionShift(Rule rule) : rule_(std::move(rule)) {}
    std::optional<double> imposed_speed(const Front& shock, double t) const override {
        return rule_(shock, t);
    }

  private:
    Rule rule_;
};

struct InitialJump {
    double position;
    State right;
};

struct InitialData {
    State leftmost;
    std::vector<InitialJump> jumps;  // strictly increasing positions
};

// Samples scalar initial data into a piecewise-constant approximation with
// L-infinity error at most nu and no increase of total variation.
InitialData discretize_initial(const std::function<State(double)>& data, double x_lo,
                               double x_hi, const StateBox& box, double nu,
                               int fine_samples = 4096);

// Random small-BV datum: jumps at jittered positions in [x_lo, x_hi], each a
// single wave-curve step of random family and strength <= max_sigma from the
// running state. Stays inside the box by construction.
InitialData random_waves_data(Rng& rng, const GasParameters& g, const StateBox& box,
                              int n_jumps, double max_sigma, double x_lo, double x_hi);

struct InteractionRecord {
    double time;
    double position;
    bool simplified;
    std::array<Front, 2> incoming;
    std::vector<Front> outgoing;  // positions at the interaction point
    // policy re-evaluations applied to surviving shocks at this event
    std::vector<std::pair<std::uint64_t, double>> speed_updates;
};

struct TrajectoryRecord {
    GasParameters gas;
    StateBox box;
    SchemeParameters params;
    bool shifted = false;
    double t_begin = 0.0;
    double t_end = 0.0;
    Profile initial;  // after the t_begin Riemann resolutions
    std::vector<InteractionRecord> events;

    Profile profile_at(double t, bool before_events_at_t = false) const;
    std::string to_json() const;
};

// Monotone-time replay of a trajectory; arithmetic mirrors the evolution loop
// so reconstructed positions are bit-identical to the live run.
class ProfileCursor {
  public:
    explicit ProfileCursor(const TrajectoryRecord& traj);

    // t must not decrease between calls. With before_events_at_t the profile
    // excludes the effect of events at exactly time t (the left limit).
    const Profile& at(double t, bool before_events_at_t = false);

  private:
    const TrajectoryRecord* traj_;
    Profile current_;
    std::size_t next_event_ = 0;
    double base_time_ = 0.0;  // time the stored positions refer to
    Profile out_;

    void apply_event(const InteractionRecord& ev);
};

// Exact fan of (u_L, u_R) with rarefactions split into steps of strength at
// most nu. Fresh ids are drawn from id_counter; jitter is keyed on them.
std::vector<Front> accurate_solver(const State& u_left, const State& u_right,
                                   const GasParameters& g, const StateBox& box,
                                   const SchemeParameters& params,
                                   std::uint64_t& id_counter);

// Pass-through solver: incoming physical waves survive (same-family waves
// merge), the residual becomes one non-physical front at speed lambda_hat.
std::vector<Front> simplified_solver(const Front& left, const Front& right,
                                     const GasParameters& g, const StateBox& box,
                                     const SchemeParameters& params,
                                     std::uint64_t& id_counter);

// True Rankine-Hugoniot speed of the front's own states (least-squares
// projection of the jump relation). Zero for contacts; usage error otherwise.
double rh_speed(const Front& front, const GasParameters& g);

// Event-driven evolution from t = 0 to t_end.
TrajectoryRecord evolve(const InitialData& data, double t_end, const GasParameters& g,
                        const StateBox& box, const SchemeParameters& params,
                        const ShiftPolicy* shift = nullptr);

// CSV rows "x,tau,w,e_total", one per constant region.
std::string profile_to_csv(const Profile& p, double x_lo, double x_hi);

}  // namespace ftlab

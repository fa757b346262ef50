#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ftlab/bly.hpp"
#include "ftlab/front_tracking.hpp"
#include "ftlab/glimm.hpp"

namespace ftlab {

// Speed of information: s with |q(a;b)| <= s eta(a|b) over the box and the
// states b visited by the shifted approximation, enforced above lambda_hat.
struct InfoSpeed {
    double s = 0.0;
    double lambda_hat = 0.0;
    double raw_max = 0.0;  // sampled max of |q|/eta before the 1.05 margin
    State cert_a, cert_b;  // argmax pair
};

InfoSpeed info_speed(const StateBox& box, const std::vector<State>& psi_range, int grid_n,
                     double lambda_hat, const GasParameters& g);

// All states a trajectory visits (initial profile plus event outgoing states).
std::vector<State> states_of(const TrajectoryRecord& traj);

struct DissipationSample {
    std::uint64_t front_id = 0;
    double t = 0.0;
    State left_trace, right_trace;
    double a_left = 1.0, a_right = 1.0;
    double h_dot = 0.0;
    double rh = 0.0;  // Rankine-Hugoniot speed of the front's own states
    double value = 0.0;
};

// D = a_R [q(u+;uR) - hdot eta(u+|uR)] - a_L [q(u-;uL) - hdot eta(u-|uL)].
DissipationSample dissipation_at_front(const State& u_minus, const State& u_plus,
                                       const Front& front, double a_left, double a_right,
                                       double h_dot, const GasParameters& g);

// Piecewise-constant grid view of a reference solution (midpoint sampling).
struct GridProfile {
    double x_lo = 0.0, dx = 0.0;
    std::vector<State> cells;

    const State& at(double x) const;
    State trace_left(double x) const { return at(x - 0.51 * dx); }
    State trace_right(double x) const { return at(x + 0.51 * dx); }
};

GridProfile sample_to_grid(const Profile& p, double x_lo, double x_hi, int n_cells);

struct EnergyResult {
    double value = 0.0;
    double quad_bound = 0.0;  // midpoint-sampling error estimate
};

// int a(x) eta(u|psi) dx over [x_lo, x_hi], exact on the common refinement of
// grid cells and psi fronts.
EnergyResult weighted_energy(const GridProfile& u, const Profile& psi,
                             const WeightProfile& w, double x_lo, double x_hi,
                             const GasParameters& g);

// Exact L^p distances between two piecewise-constant profiles on a window.
double l1_distance(const Profile& a, const Profile& b, double x_lo, double x_hi);
double l2_distance(const Profile& a, const Profile& b, double x_lo, double x_hi);
double linf_distance(const Profile& a, const Profile& b, double x_lo, double x_hi);

// Shift rule of a-contraction type: hdot = rh + A/(2 gain a2 s0) clipped to
// the admissible window, with A the weighted relative-entropy imbalance of
// the reference traces at the shock.
class TraceDrivenShift : public ShiftPolicy {
  public:
    TraceDrivenShift(const TrajectoryRecord& reference, double gain, double c1,
                     double alpha, double lambda_hat);
    std::optional<double> imposed_speed(const Front& shock, double t) const override;

  private:
    std::unique_ptr<ProfileCursor> cursor_;
    const GasParameters gas_;
    double gain_, c1_, alpha_, lambda_hat_;
};

struct AuditOptions {
    int grid_cells = 600;
    double trace_dt = 2.5e-3;   // sub-sampling of boundary-flux integrands
    double nu_budget_k = 50.0;  // K in the K nu (t - t_j) slab slack
};

struct SlabRecord {
    double t0, t1;
    double residual_sum;   // sum over quads of (E_end - E_start - net flux)
    double quad_bound;     // accumulated quadrature error estimate
    double needed_k;       // (residual - quad_bound) / (nu * duration), if > 0
    bool ok;
};

struct LedgerBuckets {
    double e_initial = 0.0;        // weighted energy over the cone base at t=0
    double e_terminal = 0.0;       // over (-R, R) at t = tau
    double shock_dissipation = 0.0;  // int sum s0 (rh - hdot)^2 dr
    double np_sup = 0.0;           // sup_t of total NP strength in psi
    double nu = 0.0;
    double boundary_flux = 0.0;    // total cone-boundary contribution (<= 0)
};

struct QuadAuditResult {
    std::vector<SlabRecord> slabs;
    LedgerBuckets buckets;
    double worst_event_rise = 0.0;  // max energy rise across events
    double k_ledger = 0.0;          // smallest K closing (terminal <= initial
                                    // - B2/K + K (nu + np_sup))
    bool balanced = true;
    std::string to_json() const;
};

// Integrates the weighted relative entropy of (u | psi) over the information
// cone, slab by slab between psi's interaction times, checking the local
// balances and accumulating the global ledger.
QuadAuditResult quadrilateral_audit(const TrajectoryRecord& u_traj,
                                    const TrajectoryRecord& psi_traj, double kappa,
                                    double c1, double R, double tau, double s_info,
                                    const AuditOptions& opts = {});

struct RarefactionCheckResult {
    double lhs = 0.0;     // time-integrated relative flux/entropy expression
    double delta = 0.0;   // fan parameter spread + state spread
    double du = 0.0;      // |u_L - u_R|
    double t = 0.0;
    double ratio = 0.0;   // lhs / (delta |du| t)
};

// Prop.-4.4-style bound for a discrete rarefaction fan against a reference
// trajectory, along the ray x = v t.
RarefactionCheckResult rarefaction_dissipation_check(const TrajectoryRecord& u_traj,
                                                     const State& u_left, int family,
                                                     double sigma, double v_ray, double t,
                                                     const GasParameters& g,
                                                     const StateBox& box, double dt_sub);

struct HolderConfig {
    InitialData base_data;
    std::vector<double> perturbations;  // ladder of offsets applied to the data
    double perturbation_width = 0.6;    // support of the perturbation bump
    double nu_fine = 5e-4;              // u and v runs
    double nu_psi = 2e-3;               // shifted machinery run
    double R = 3.0;
    double tau = 0.8;
    double kappa = 8.0, c1 = 1.0;
    BlyConstants bc;
    double shift_gain = 0.25;
    std::uint64_t seed = 1;
    int grid_cells = 600;
    double trace_dt = 2.5e-3;
    int info_grid_n = 5;
    int jobs = 1;  // ladder cells are independent; results merge in order
};

struct HolderRow {
    double perturbation;
    double l2_initial;    // over (-R - s tau, R + s tau) at t = 0
    double l2_terminal;   // over (-R, R) at t = tau
    double l2_pipeline_bound;
    double phi_terminal;
    double phi_cs_bound;
    double ledger_k;
    bool ledger_balanced;
};

struct HolderResult {
    std::vector<HolderRow> rows;
    double s_info = 0.0;
    double fitted_exponent = 0.0;
    double exponent_stderr = 0.0;
    double k_envelope = 0.0;  // max terminal / sqrt(initial)
    std::string to_csv() const;
    std::string to_json() const;
};

HolderResult holder_experiment(const HolderConfig& cfg, const GasParameters& g,
                               const StateBox& box);

}  // namespace ftlab

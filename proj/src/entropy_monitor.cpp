#include "ftlab/entropy_monitor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <thread>

#include <json.hpp>

#include "ftlab/errors.hpp"
#include "ftlab/rng.hpp"

namespace ftlab {

InfoSpeed info_speed(const StateBox& box, const std::vector<State>& psi_range, int grid_n,
                     double lambda_hat, const GasParameters& g) {
    if (psi_range.empty()) throw UsageError("info_speed: empty psi range");
    if (grid_n < 2) throw UsageError("info_speed: grid_n must be at least 2");
    InfoSpeed out;
    out.lambda_hat = lambda_hat;
    for (int i = 0; i < grid_n; ++i)
        for (int j = 0; j < grid_n; ++j)
            for (int k = 0; k < grid_n; ++k) {
                const State a = State::from_vec(
                    Vec3{{box.lo[0] + (box.hi[0] - box.lo[0]) * i / (grid_n - 1.0),
                          box.lo[1] + (box.hi[1] - box.lo[1]) * j / (grid_n - 1.0),
                          box.lo[2] + (box.hi[2] - box.lo[2]) * k / (grid_n - 1.0)}});
                for (const State& b : psi_range) {
                    if (norm(a - b) < 1e-9) continue;  // 0/0 limit, finite by expansion
                    const double re = relative_entropy(a, b, g);
                    if (!(re > 0.0)) continue;
                    const double ratio = std::abs(relative_flux(a, b, g)) / re;
                    if (ratio > out.raw_max) {
                        out.raw_max = ratio;
                        out.cert_a = a;
                        out.cert_b = b;
                    }
                }
            }
    out.s = 1.05 * out.raw_max;
    if (out.s <= lambda_hat) out.s = 1.05 * lambda_hat;
    return out;
}

std::vector<State> states_of(const TrajectoryRecord& traj) {
    std::vector<State> out;
    out.push_back(traj.initial.leftmost);
    for (const auto& f : traj.initial.fronts) out.push_back(f.right_state);
    for (const auto& ev : traj.events)
        for (const auto& f : ev.outgoing) out.push_back(f.right_state);
    return out;
}

DissipationSample dissipation_at_front(const State& u_minus, const State& u_plus,
                                       const Front& front, double a_left, double a_right,
                                       double h_dot, const GasParameters& g) {
    DissipationSample s;
    s.front_id = front.id;
    s.left_trace = u_minus;
    s.right_trace = u_plus;
    s.a_left = a_left;
    s.a_right = a_right;
    s.h_dot = h_dot;
    s.rh = front.kind == FrontKind::shock || front.kind == FrontKind::contact
               ? rh_speed(front, g)
               : front.nominal_speed;
    const double right = relative_flux(u_plus, front.right_state, g) -
                         h_dot * relative_entropy(u_plus, front.right_state, g);
    const double left = relative_flux(u_minus, front.left_state, g) -
                        h_dot * relative_entropy(u_minus, front.left_state, g);
    s.value = a_right * right - a_left * left;
    return s;
}

const State& GridProfile::at(double x) const {
    const auto n = static_cast<std::ptrdiff_t>(cells.size());
    auto idx = static_cast<std::ptrdiff_t>(std::floor((x - x_lo) / dx));
    idx = std::clamp<std::ptrdiff_t>(idx, 0, n - 1);
    return cells[static_cast<std::size_t>(idx)];
}

GridProfile sample_to_grid(const Profile& p, double x_lo, double x_hi, int n_cells) {
    if (!(x_hi > x_lo) || n_cells < 1) throw UsageError("sample_to_grid: bad window");
    GridProfile g;
    g.x_lo = x_lo;
    g.dx = (x_hi - x_lo) / n_cells;
    g.cells.reserve(n_cells);
    std::size_t fi = 0;
    for (int k = 0; k < n_cells; ++k) {
        const double mid = x_lo + (k + 0.5) * g.dx;
        while (fi < p.fronts.size() && p.fronts[fi].position <= mid) ++fi;
        g.cells.push_back(fi == 0 ? p.leftmost : p.fronts[fi - 1].right_state);
    }
    return g;
}

EnergyResult weighted_energy(const GridProfile& u, const Profile& psi,
                             const WeightProfile& w, double x_lo, double x_hi,
                             const GasParameters& g) {
    if (!(x_hi >= x_lo)) throw UsageError("weighted_energy: empty window");
    if (x_lo < u.x_lo - 1e-9 || x_hi > u.x_lo + u.dx * u.cells.size() + 1e-9)
        throw UsageError("weighted_energy: window leaves the sampled grid");
    EnergyResult out;
    // refinement cuts: grid boundaries and psi fronts inside the window
    std::vector<double> cuts{x_lo};
    const auto first_cell = static_cast<std::ptrdiff_t>(
        std::ceil((x_lo - u.x_lo) / u.dx - 1e-12));
    for (std::ptrdiff_t k = first_cell;; ++k) {
        const double x = u.x_lo + k * u.dx;
        if (x >= x_hi) break;
        if (x > x_lo) cuts.push_back(x);
    }
    for (const auto& f : psi.fronts)
        if (f.position > x_lo && f.position < x_hi) cuts.push_back(f.position);
    cuts.push_back(x_hi);
    std::sort(cuts.begin(), cuts.end());

    double prev_eta = 0.0;
    bool have_prev = false;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        const double width = cuts[k + 1] - cuts[k];
        const double mid = 0.5 * (cuts[k] + cuts[k + 1]);
        const State& uv = u.at(mid);
        const double re = relative_entropy(uv, psi.state_at(mid), g);
        const double a = w.at(psi, mid);
        if (width > 0.0) out.value += a * re * width;
        // midpoint-sampling error proxy: variation of the integrand across
        // grid boundaries, half a cell each
        if (have_prev) out.quad_bound += std::abs(a * re - prev_eta) * 0.5 * u.dx;
        prev_eta = a * re;
        have_prev = true;
    }
    return out;
}

namespace {

// shared sweep for the exact profile-vs-profile L^p distances
template <typename F>
void for_each_refinement_cell(const Profile& a, const Profile& b, double x_lo, double x_hi,
                              F&& body) {
    std::vector<double> cuts{x_lo};
    for (const auto& f : a.fronts)
        if (f.position > x_lo && f.position < x_hi) cuts.push_back(f.position);
    for (const auto& f : b.fronts)
        if (f.position > x_lo && f.position < x_hi) cuts.push_back(f.position);
    cuts.push_back(x_hi);
    std::sort(cuts.begin(), cuts.end());
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        const double width = cuts[k + 1] - cuts[k];
        if (width <= 0.0) continue;
        const double mid = 0.5 * (cuts[k] + cuts[k + 1]);
        body(width, norm(a.state_at(mid) - b.state_at(mid)));
    }
}

}  // namespace

double l1_distance(const Profile& a, const Profile& b, double x_lo, double x_hi) {
    double s = 0.0;
    for_each_refinement_cell(a, b, x_lo, x_hi,
                             [&](double w, double d) { s += w * d; });
    return s;
}

double l2_distance(const Profile& a, const Profile& b, double x_lo, double x_hi) {
    double s = 0.0;
    for_each_refinement_cell(a, b, x_lo, x_hi,
                             [&](double w, double d) { s += w * d * d; });
    return std::sqrt(s);
}

double linf_distance(const Profile& a, const Profile& b, double x_lo, double x_hi) {
    double s = 0.0;
    for_each_refinement_cell(a, b, x_lo, x_hi,
                             [&](double, double d) { s = std::max(s, d); });
    return s;
}

TraceDrivenShift::TraceDrivenShift(const TrajectoryRecord& reference, double gain,
                                   double c1, double alpha, double lambda_hat)
    : cursor_(std::make_unique<ProfileCursor>(reference)),
      gas_(reference.gas),
      gain_(gain),
      c1_(c1),
      alpha_(alpha),
      lambda_hat_(lambda_hat) {
    if (!(gain > 0.0)) throw UsageError("trace shift: gain must be positive");
}

std::optional<double> TraceDrivenShift::imposed_speed(const Front& shock, double t) const {
    const double rh = rh_speed(shock, gas_);
    const double s0 = shock.s0;
    if (s0 < 1e-10)
        return clip_to_shift_window(shock.family, rh, alpha_, lambda_hat_);
    const Profile& ref = cursor_->at(t);
    const State u_minus = ref.state_before(shock.position);
    const State u_plus = ref.state_at(shock.position);
    // window-compatible weight pair: a2/a1 = 1 -+ C1 s0
    const double a1 = 1.0;
    const double a2 = shock.family == 1 ? 1.0 - c1_ * s0 : 1.0 + c1_ * s0;
    const double imbalance = a2 * relative_entropy(u_plus, shock.right_state, gas_) -
                             a1 * relative_entropy(u_minus, shock.left_state, gas_);
    const double h_dot = rh + imbalance / (2.0 * gain_ * a2 * s0);
    return clip_to_shift_window(shock.family, h_dot, alpha_, lambda_hat_);
}

// ---------------------------------------------------------------------------
// Quadrilateral ledger

namespace {

struct SlabProfile {
    Profile psi;           // fronts at positions of slab start
    WeightProfile weight;
    double t0;

    Profile at(double t) const {
        Profile p = psi;
        const double dt = t - t0;
        for (auto& f : p.fronts) f.position += f.speed * dt;
        p.time = t;
        return p;
    }
};

}  // namespace

QuadAuditResult quadrilateral_audit(const TrajectoryRecord& u_traj,
                                    const TrajectoryRecord& psi_traj, double kappa,
                                    double c1, double R, double tau, double s_info,
                                    const AuditOptions& opts) {
    QuadAuditResult out;
    out.buckets.nu = psi_traj.params.nu;
    const GasParameters& g = psi_traj.gas;

    // fixed sampling window covering the whole cone
    const double pad = 0.5;
    const double win_lo = -R - s_info * tau - pad;
    const double win_hi = R + s_info * tau + pad;
    auto cone_lo = [&](double t) { return -R + s_info * (t - tau); };
    auto cone_hi = [&](double t) { return R - s_info * (t - tau); };

    // slab boundaries: psi's interaction times inside (0, tau)
    std::vector<double> edges{psi_traj.t_begin};
    for (const auto& ev : psi_traj.events)
        if (ev.time > psi_traj.t_begin && ev.time < tau) edges.push_back(ev.time);
    edges.push_back(tau);

    ProfileCursor u_cursor(u_traj);
    ProfileCursor psi_cursor(psi_traj);

    double prev_slab_end_energy = 0.0;
    bool have_prev = false;

    for (std::size_t j = 0; j + 1 < edges.size(); ++j) {
        const double t0 = edges[j];
        const double t1 = edges[j + 1];
        SlabProfile slab;
        slab.t0 = t0;
        slab.psi = psi_cursor.at(t0, false);
        slab.weight = build_weight(slab.psi, g, psi_traj.box, kappa, c1);

        // NP bucket and cone containment
        double np_total = 0.0;
        for (const auto& f : slab.psi.fronts) {
            if (f.kind == FrontKind::non_physical) np_total += f.strength();
        }
        out.buckets.np_sup = std::max(out.buckets.np_sup, np_total);
        for (double t : {t0, t1}) {
            const Profile p = slab.at(t);
            for (const auto& f : p.fronts)
                if (f.position <= cone_lo(t) || f.position >= cone_hi(t))
                    throw UsageError(
                        "quadrilateral_audit: front leaves the information cone; "
                        "increase R");
        }

        // energies at the slab ends (same u cursor, nondecreasing times)
        const GridProfile grid0 = sample_to_grid(u_cursor.at(t0), win_lo, win_hi,
                                                 opts.grid_cells);
        const Profile psi0 = slab.at(t0);
        const EnergyResult e0 =
            weighted_energy(grid0, psi0, slab.weight, cone_lo(t0), cone_hi(t0), g);
        if (j == 0) out.buckets.e_initial = e0.value;
        if (have_prev)
            out.worst_event_rise = std::max(out.worst_event_rise, e0.value - prev_slab_end_energy);

        // boundary-flux and dissipation integrals over sub-intervals
        const int n_sub = std::max(1, static_cast<int>(std::ceil((t1 - t0) / opts.trace_dt)));
        const double dt_sub = (t1 - t0) / n_sub;
        double flux_total = 0.0;     // net influx (cone edges + interior pairing)
        double flux_bound = 0.0;     // variation-based error estimate
        std::vector<double> prev_f;  // previous sub-interval integrands
        for (int k = 0; k < n_sub; ++k) {
            const double r = t0 + (k + 0.5) * dt_sub;
            const GridProfile grid = sample_to_grid(u_cursor.at(r), win_lo, win_hi,
                                                    opts.grid_cells);
            const Profile psir = slab.at(r);
            std::vector<double> cur_f;

            // cone boundaries: left edge moves at +s, right edge at -s
            {
                const double xl = cone_lo(r);
                const State up = grid.trace_right(xl);
                const State pv = psir.state_at(xl);
                const double a = slab.weight.at(psir, xl);
                const double f_in = a * (relative_flux(up, pv, g) -
                                         s_info * relative_entropy(up, pv, g));
                const double xr = cone_hi(r);
                const State um = grid.trace_left(xr);
                const State pv2 = psir.state_at(xr);
                const double a2 = slab.weight.at(psir, xr);
                const double f_out = a2 * (relative_flux(um, pv2, g) +
                                           s_info * relative_entropy(um, pv2, g));
                flux_total += (f_in - f_out) * dt_sub;
                out.buckets.boundary_flux += (f_in - f_out) * dt_sub;
                cur_f.push_back(f_in);
                cur_f.push_back(f_out);
            }

            // interior fronts: paired dissipation with grid traces
            for (std::size_t fi = 0; fi < psir.fronts.size(); ++fi) {
                const Front& f = psir.fronts[fi];
                const State um = grid.trace_left(f.position);
                const State up = grid.trace_right(f.position);
                const auto d = dissipation_at_front(um, up, f,
                                                    slab.weight.level_left_of(fi),
                                                    slab.weight.level_right_of(fi),
                                                    f.speed, g);
                flux_total += d.value * dt_sub;
                cur_f.push_back(d.value);
                if (f.kind == FrontKind::shock)
                    out.buckets.shock_dissipation +=
                        f.strength() * (d.rh - f.speed) * (d.rh - f.speed) * dt_sub;
            }
            if (!prev_f.empty() && prev_f.size() == cur_f.size())
                for (std::size_t i = 0; i < cur_f.size(); ++i)
                    flux_bound += std::abs(cur_f[i] - prev_f[i]) * 0.5 * dt_sub;
            prev_f = std::move(cur_f);
        }

        const GridProfile grid1 = sample_to_grid(u_cursor.at(t1), win_lo, win_hi,
                                                 opts.grid_cells);
        const Profile psi1 = slab.at(t1);
        const EnergyResult e1 =
            weighted_energy(grid1, psi1, slab.weight, cone_lo(t1), cone_hi(t1), g);
        prev_slab_end_energy = e1.value;
        have_prev = true;
        if (j + 2 == edges.size()) out.buckets.e_terminal = e1.value;

        SlabRecord rec;
        rec.t0 = t0;
        rec.t1 = t1;
        rec.residual_sum = e1.value - e0.value - flux_total;
        rec.quad_bound = e0.quad_bound + e1.quad_bound + flux_bound;
        const double excess = rec.residual_sum - rec.quad_bound;
        rec.needed_k = excess > 0.0 ? excess / (out.buckets.nu * std::max(t1 - t0, 1e-12))
                                    : 0.0;
        rec.ok = rec.needed_k <= opts.nu_budget_k;
        out.balanced = out.balanced && rec.ok;
        out.slabs.push_back(rec);
    }

    // global ledger constant: smallest K with
    //   e_terminal <= e_initial - B2/K + K (nu + np_sup)
    const double de = out.buckets.e_initial - out.buckets.e_terminal;
    const double budget = out.buckets.nu + out.buckets.np_sup;
    const double b2 = out.buckets.shock_dissipation;
    out.k_ledger = (-de + std::sqrt(de * de + 4.0 * budget * b2)) / (2.0 * budget);
    out.balanced = out.balanced && out.worst_event_rise <= 1e-9;
    return out;
}

std::string QuadAuditResult::to_json() const {
    nlohmann::json doc;
    doc["schema_version"] = 1;
    doc["balanced"] = balanced;
    doc["k_ledger"] = k_ledger;
    doc["worst_event_rise"] = worst_event_rise;
    doc["buckets"] = {{"e_initial", buckets.e_initial},
                      {"e_terminal", buckets.e_terminal},
                      {"shock_dissipation", buckets.shock_dissipation},
                      {"np_sup", buckets.np_sup},
                      {"nu", buckets.nu},
                      {"boundary_flux", buckets.boundary_flux}};
    doc["slabs"] = nlohmann::json::array();
    for (const auto& s : slabs)
        doc["slabs"].push_back({{"t0", s.t0},
                                {"t1", s.t1},
                                {"residual", s.residual_sum},
                                {"quad_bound", s.quad_bound},
                                {"needed_k", s.needed_k},
                                {"ok", s.ok}});
    return doc.dump();
}

RarefactionCheckResult rarefaction_dissipation_check(const TrajectoryRecord& u_traj,
                                                     const State& u_left, int family,
                                                     double sigma, double v_ray, double t,
                                                     const GasParameters& g,
                                                     const StateBox& box, double dt_sub) {
    if (!(sigma >= 0.0)) throw UsageError("rarefaction check: sigma must be >= 0");
    RarefactionCheckResult out;
    out.t = t;
    const State u_right = rarefaction_curve(u_left, g, family, sigma, box).state;
    out.du = norm(u_right - u_left);
    double spread = 0.0;
    for (int k = 0; k <= 16; ++k) {
        const State mid = rarefaction_curve(u_left, g, family, sigma * k / 16.0, box).state;
        spread = std::max(spread, norm(mid - u_left));
    }
    out.delta = sigma + spread;

    const int n_sub = std::max(1, static_cast<int>(std::ceil(t / dt_sub)));
    const double dt = t / n_sub;
    ProfileCursor cursor(u_traj);
    for (int k = 0; k < n_sub; ++k) {
        const double r = (k + 0.5) * dt;
        const Profile& p = cursor.at(r);
        const double x = v_ray * r;
        const State um = p.state_before(x);
        const State up = p.state_at(x);
        const double integrand =
            relative_flux(up, u_right, g) - relative_flux(um, u_left, g) -
            v_ray * (relative_entropy(up, u_right, g) - relative_entropy(um, u_left, g));
        out.lhs += integrand * dt;
    }
    const double denom = out.delta * out.du * t;
    out.ratio = denom > 0.0 ? out.lhs / denom : 0.0;
    return out;
}

// ---------------------------------------------------------------------------
// Hoelder experiment

namespace {

InitialData perturb_data(const InitialData& base, double delta, double width,
                         const GasParameters& g, const StateBox& box) {
    if (delta == 0.0) return base;
    InitialData out;
    out.leftmost = base.leftmost;
    const double x_on = -0.5 * width;
    const double x_off = 0.5 * width;
    State cur = base.leftmost;
    bool on_done = false, off_done = false;
    auto perturbed = [&](const State& u) {
        return compose_curves(u, g, Vec3{{0.25 * delta, delta, 0.25 * delta}},
                              CurveChart::physical_fan, box);
    };
    for (const auto& jump : base.jumps) {
        if (!on_done && jump.position > x_on) {
            out.jumps.push_back({x_on, perturbed(cur)});
            on_done = true;
        }
        if (on_done && !off_done && jump.position > x_off) {
            out.jumps.push_back({x_off, cur});
            off_done = true;
        }
        State next = jump.right;
        out.jumps.push_back({jump.position, off_done || !on_done ? next : perturbed(next)});
        cur = next;
    }
    if (!on_done) out.jumps.push_back({x_on, perturbed(cur)});
    if (!off_done) out.jumps.push_back({x_off, cur});
    return out;
}

double shock_strength_time_integral(const TrajectoryRecord& psi, double tau) {
    double total = 0.0;
    std::vector<double> edges{psi.t_begin};
    for (const auto& ev : psi.events)
        if (ev.time < tau) edges.push_back(ev.time);
    edges.push_back(tau);
    ProfileCursor cursor(psi);
    for (std::size_t j = 0; j + 1 < edges.size(); ++j) {
        const Profile& p = cursor.at(edges[j], false);
        double s = 0.0;
        for (const auto& f : p.fronts)
            if (f.kind == FrontKind::shock) s += f.strength();
        total += s * (edges[j + 1] - edges[j]);
    }
    return total;
}

}  // namespace

namespace {

// failures surface with the pipeline stage that produced them
template <typename F>
auto holder_stage(const char* stage, F&& f) {
    try {
        return f();
    } catch (const std::exception& e) {
        throw SolverError(std::string("holder[") + stage + "]: " + e.what(), 0.0, 0);
    }
}

}  // namespace

HolderResult holder_experiment(const HolderConfig& cfg, const GasParameters& g,
                               const StateBox& box) {
    if (cfg.perturbations.empty()) throw UsageError("holder: empty perturbation ladder");
    HolderResult out;

    // box-wide constants: information speed, relative-entropy sandwich, and
    // the decomposition equivalence (sampled, as everywhere in this artifact)
    SchemeParameters fine;
    fine.nu = cfg.nu_fine;
    fine.seed = cfg.seed;
    SchemeParameters coarse;
    coarse.nu = cfg.nu_psi;
    coarse.seed = cfg.seed;
    const double alpha = box.min_char_speed(g) / 2.0;

    std::vector<State> range;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            for (int k = 0; k < 4; ++k)
                range.push_back(State::from_vec(
                    Vec3{{box.lo[0] + (box.hi[0] - box.lo[0]) * i / 3.0,
                          box.lo[1] + (box.hi[1] - box.lo[1]) * j / 3.0,
                          box.lo[2] + (box.hi[2] - box.lo[2]) * k / 3.0}}));
    const InfoSpeed s = info_speed(box, range, cfg.info_grid_n, fine.lambda_hat, g);
    out.s_info = s.s;

    double c_star = 0.0, k_dec = 1.0;
    {
        Rng rng(cfg.seed ^ 0x9e37ULL);
        for (int k = 0; k < 200; ++k) {
            Vec3 a, b;
            for (int i = 0; i < 3; ++i) {
                a[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * (0.1 + 0.8 * rng.uniform());
                b[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * (0.1 + 0.8 * rng.uniform());
            }
            const State ua = State::from_vec(a), ub = State::from_vec(b);
            const double d = norm(ub - ua);
            if (d < 1e-8) continue;
            const double re = relative_entropy(ua, ub, g);
            c_star = std::max(c_star, d * d / re);
            if (d > 0.4) continue;  // decomposition is a local chart
            try {
                const Vec3 q = solve_wave_coordinates(ua, ub, g, CurveChart::shock_only, box);
                k_dec = std::max(k_dec,
                                 d / (std::abs(q[0]) + std::abs(q[1]) + std::abs(q[2])));
            } catch (const CurveRangeError&) {
                // the connecting Hugoniot branch leaves the box; skip the pair
            } catch (const SolverError&) {
                // no in-box connection; skip the pair
            }
        }
    }

    const auto v_fine = holder_stage(
        "base_fine_run", [&] { return evolve(cfg.base_data, cfg.tau, g, box, fine); });
    const auto v_psi = holder_stage(
        "base_coarse_run", [&] { return evolve(cfg.base_data, cfg.tau, g, box, coarse); });

    AuditOptions audit_opts;
    audit_opts.grid_cells = cfg.grid_cells;
    audit_opts.trace_dt = cfg.trace_dt;

    out.rows.resize(cfg.perturbations.size());
    std::atomic<std::size_t> next{0};
    auto run_cell = [&](std::size_t cell) {
        const double delta = cfg.perturbations[cell];
        const InitialData data_k = holder_stage("perturb_data", [&] {
            return perturb_data(cfg.base_data, delta, cfg.perturbation_width, g, box);
        });
        const auto u_k = holder_stage(
            "reference_run", [&] { return evolve(data_k, cfg.tau, g, box, fine); });

        TraceDrivenShift shift(u_k, cfg.shift_gain, cfg.c1, alpha, coarse.lambda_hat);
        const auto psi_k = holder_stage("shifted_run", [&] {
            return evolve(cfg.base_data, cfg.tau, g, box, coarse, &shift);
        });

        const auto ledger = holder_stage("ledger", [&] {
            return quadrilateral_audit(u_k, psi_k, cfg.kappa, cfg.c1, cfg.R, cfg.tau, s.s,
                                       audit_opts);
        });

        HolderRow row;
        row.perturbation = delta;
        row.l2_initial = l2_distance(u_k.initial, v_fine.initial, -cfg.R - s.s * cfg.tau,
                                     cfg.R + s.s * cfg.tau);
        const Profile u_tau = u_k.profile_at(cfg.tau);
        const Profile v_tau = v_fine.profile_at(cfg.tau);
        const Profile vpsi_tau = v_psi.profile_at(cfg.tau);
        const Profile psi_tau = psi_k.profile_at(cfg.tau);
        row.l2_terminal = l2_distance(u_tau, v_tau, -cfg.R, cfg.R);
        row.ledger_k = ledger.k_ledger;
        row.ledger_balanced = ledger.balanced;

        row.phi_terminal = phi(vpsi_tau, psi_tau, g, box, cfg.bc).value;
        row.phi_cs_bound =
            std::sqrt(shock_strength_time_integral(psi_k, cfg.tau) *
                      ledger.buckets.shock_dissipation);

        // Step 3 composition: L1 via psi, then L2 by interpolation
        const double e_rhs = ledger.buckets.e_initial +
                             ledger.k_ledger * (ledger.buckets.nu + ledger.buckets.np_sup);
        const double l2_u_psi = std::sqrt(c_star * std::max(e_rhs, 0.0));
        const double l1_psi_v = k_dec * row.phi_terminal;
        const double l1_bound = std::sqrt(2.0 * cfg.R) * l2_u_psi + l1_psi_v +
                                l1_distance(v_tau, vpsi_tau, -cfg.R, cfg.R);
        const double linf = linf_distance(u_tau, v_tau, -cfg.R, cfg.R);
        row.l2_pipeline_bound = std::sqrt(l1_bound * std::max(linf, 1e-300));
        out.rows[cell] = row;
    };
    if (cfg.jobs <= 1) {
        for (std::size_t c = 0; c < cfg.perturbations.size(); ++c) run_cell(c);
    } else {
        std::vector<std::thread> pool;
        const int workers =
            std::min<std::size_t>(cfg.jobs, cfg.perturbations.size());
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t c = next.fetch_add(1); c < cfg.perturbations.size();
                     c = next.fetch_add(1))
                    run_cell(c);
            });
        for (auto& t : pool) t.join();
    }

    // log-log fit of terminal against initial distance
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (const auto& r : out.rows) {
        if (r.l2_initial <= 0.0 || r.l2_terminal <= 0.0) continue;
        const double x = std::log(r.l2_initial), y = std::log(r.l2_terminal);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
        out.k_envelope = std::max(out.k_envelope, r.l2_terminal / std::sqrt(r.l2_initial));
    }
    if (n >= 2) {
        const double det = n * sxx - sx * sx;
        out.fitted_exponent = (n * sxy - sx * sy) / det;
        double rss = 0.0;
        const double b0 = (sy - out.fitted_exponent * sx) / n;
        for (const auto& r : out.rows) {
            if (r.l2_initial <= 0.0 || r.l2_terminal <= 0.0) continue;
            const double e = std::log(r.l2_terminal) -
                             (b0 + out.fitted_exponent * std::log(r.l2_initial));
            rss += e * e;
        }
        if (n > 2)
            out.exponent_stderr = std::sqrt(rss / (n - 2) / (sxx - sx * sx / n));
    }
    return out;
}

std::string HolderResult::to_csv() const {
    std::string out =
        "perturbation,l2_initial,l2_terminal,l2_pipeline_bound,phi_terminal,"
        "phi_cs_bound,ledger_k,ledger_balanced\n";
    char line[320];
    for (const auto& r : rows) {
        std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n",
                      r.perturbation, r.l2_initial, r.l2_terminal, r.l2_pipeline_bound,
                      r.phi_terminal, r.phi_cs_bound, r.ledger_k,
                      r.ledger_balanced ? 1 : 0);
        out += line;
    }
    return out;
}

std::string HolderResult::to_json() const {
    nlohmann::json doc;
    doc["schema_version"] = 1;
    doc["s_info"] = s_info;
    doc["fitted_exponent"] = fitted_exponent;
    doc["exponent_stderr"] = exponent_stderr;
    doc["k_envelope"] = k_envelope;
    doc["rows"] = nlohmann::json::array();
    for (const auto& r : rows)
        doc["rows"].push_back({{"perturbation", r.perturbation},
                               {"l2_initial", r.l2_initial},
                               {"l2_terminal", r.l2_terminal},
                               {"l2_pipeline_bound", r.l2_pipeline_bound},
                               {"phi_terminal", r.phi_terminal},
                               {"phi_cs_bound", r.phi_cs_bound},
                               {"ledger_k", r.ledger_k},
                               {"ledger_balanced", r.ledger_balanced}});
    return doc.dump();
}

}  // namespace ftlab

#include "ftlab/bly.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include <json.hpp>

#include "ftlab/errors.hpp"

namespace ftlab {

WaveDecomposition decompose(const State& u, const State& v, const GasParameters& g,
                            const StateBox& box, const Vec3& seed) {
    RiemannOptions opts;
    opts.initial_guess = seed;
    return WaveDecomposition{
        solve_wave_coordinates(u, v, g, CurveChart::shock_only, box, opts)};
}

Vec3 a_fields(double x, const Profile& u, const Profile& v, const Vec3& q_at_x) {
    Vec3 a{};
    auto absorb = [&](const Front& f, bool from_u) {
        const double s = f.strength();
        for (int i = 1; i <= 3; ++i) {
            if (f.position < x ? f.family > i : (f.position > x && f.family < i))
                a[i - 1] += s;
        }
        // genuinely nonlinear families: same-family term picked by sign(q_i)
        if (f.family == 1 || f.family == 3) {
            const int i = f.family;
            const bool left = f.position < x;
            const bool right = f.position > x;
            if (q_at_x[i - 1] < 0.0 ? (from_u ? left : right) : (from_u ? right : left))
                a[i - 1] += s;
        }
    };
    for (const auto& f : u.fronts) absorb(f, true);
    for (const auto& f : v.fronts) absorb(f, false);
    return a;
}

PhiResult phi(const Profile& u, const Profile& v, const GasParameters& g,
              const StateBox& box, const BlyConstants& bc) {
    if (norm(u.leftmost - v.leftmost) > 1e-12)
        throw UsageError("phi: profiles differ at -infinity; Phi would diverge");
    const State& u_last = u.fronts.empty() ? u.leftmost : u.fronts.back().right_state;
    const State& v_last = v.fronts.empty() ? v.leftmost : v.fronts.back().right_state;
    if (norm(u_last - v_last) > 1e-12)
        throw UsageError("phi: profiles differ at +infinity; Phi would diverge");

    const double q_pot = glimm(u, 1.0).Q + glimm(v, 1.0).Q;

    std::vector<double> cuts;
    cuts.reserve(u.fronts.size() + v.fronts.size());
    for (const auto& f : u.fronts) cuts.push_back(f.position);
    for (const auto& f : v.fronts) cuts.push_back(f.position);
    std::sort(cuts.begin(), cuts.end());

    PhiResult out;
    Vec3 q_seed{};
    std::size_t iu = 0, iv = 0;  // fronts at positions <= current cut
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        while (iu < u.fronts.size() && u.fronts[iu].position <= cuts[k]) ++iu;
        while (iv < v.fronts.size() && v.fronts[iv].position <= cuts[k]) ++iv;
        const double width = cuts[k + 1] - cuts[k];
        if (width <= 0.0) continue;
        const State& us = iu == 0 ? u.leftmost : u.fronts[iu - 1].right_state;
        const State& vs = iv == 0 ? v.leftmost : v.fronts[iv - 1].right_state;
        const Vec3 diff = vs - us;
        out.l1 += norm(diff) * width;
        Vec3 q{};
        if (norm(diff) > 0.0) {
            q = decompose(us, vs, g, box, q_seed).q;
            q_seed = q;
        }
        const Vec3 a = a_fields(0.5 * (cuts[k] + cuts[k + 1]), u, v, q);
        for (int i = 0; i < 3; ++i) {
            const double w = 1.0 + bc.kappa1 * a[i] + bc.kappa2 * q_pot;
            out.min_w = std::min(out.min_w, w);
            out.max_w = std::max(out.max_w, w);
            out.value += std::abs(q[i]) * w * width;
        }
    }
    return out;
}

namespace {

double shift_term_of(const Profile& psi, const GasParameters& g) {
    double s = 0.0;
    for (const auto& f : psi.fronts)
        if (f.kind == FrontKind::shock)
            s += f.strength() * std::abs(f.speed - rh_speed(f, g));
    return s;
}

std::vector<double> merged_event_times(const TrajectoryRecord& a, const TrajectoryRecord& b,
                                       double t_hi) {
    std::set<double> ts;
    for (const auto& ev : a.events)
        if (ev.time < t_hi) ts.insert(ev.time);
    for (const auto& ev : b.events)
        if (ev.time < t_hi) ts.insert(ev.time);
    return {ts.begin(), ts.end()};
}

}  // namespace

SlopeMonitorResult phi_slope_monitor(const TrajectoryRecord& u_traj,
                                     const TrajectoryRecord& psi_traj, double sample_dt,
                                     const GasParameters& g, const StateBox& box,
                                     const BlyConstants& bc) {
    if (!(sample_dt > 0.0)) throw UsageError("phi_slope_monitor: sample_dt must be positive");
    SlopeMonitorResult out;
    out.nu = psi_traj.params.nu;
    const double t_hi = std::min(u_traj.t_end, psi_traj.t_end);
    const auto times = merged_event_times(u_traj, psi_traj, t_hi);

    ProfileCursor uc(u_traj), pc(psi_traj);
    std::vector<double> edges;
    edges.push_back(u_traj.t_begin);
    edges.insert(edges.end(), times.begin(), times.end());
    edges.push_back(t_hi);

    for (std::size_t w = 0; w + 1 < edges.size(); ++w) {
        PhiWindow win;
        win.t0 = edges[w];
        win.t1 = edges[w + 1];
        win.skipped = (win.t1 - win.t0) < 10.0 * sample_dt;
        if (!win.skipped) {
            for (double t = win.t0 + sample_dt; t < win.t1 - 0.5 * sample_dt;
                 t += sample_dt) {
                PhiSample s;
                s.t = t;
                const Profile& up = uc.at(t);
                const Profile& pp = pc.at(t);
                s.phi = phi(up, pp, g, box, bc).value;
                s.shift_term = shift_term_of(pp, g);
                s.slope = std::numeric_limits<double>::quiet_NaN();
                win.samples.push_back(s);
            }
            for (std::size_t j = 0; j + 1 < win.samples.size(); ++j) {
                win.samples[j].slope =
                    (win.samples[j + 1].phi - win.samples[j].phi) / sample_dt;
                out.max_slope = std::max(out.max_slope, win.samples[j].slope);
                out.max_shift_term = std::max(out.max_shift_term, win.samples[j].shift_term);
            }
        }
        out.windows.push_back(std::move(win));
    }

    ProfileCursor u_pre(u_traj), p_pre(psi_traj), u_post(u_traj), p_post(psi_traj);
    for (double t : times) {
        PhiEventCheck c;
        c.t = t;
        c.before = phi(u_pre.at(t, true), p_pre.at(t, true), g, box, bc).value;
        c.after = phi(u_post.at(t, false), p_post.at(t, false), g, box, bc).value;
        c.ok = c.after <= c.before + 1e-12;
        out.events_ok = out.events_ok && c.ok;
        out.events.push_back(c);
    }
    return out;
}

BlyConstants calibrate_bly(const std::vector<std::pair<const TrajectoryRecord*,
                                                       const TrajectoryRecord*>>& suite,
                           const GasParameters& g, const StateBox& box) {
    BlyConstants bc;
    auto max_w = [&](const BlyConstants& c) {
        double m = 1.0;
        for (const auto& [ut, pt] : suite) {
            ProfileCursor uc(*ut), pc(*pt);
            const double t_hi = std::min(ut->t_end, pt->t_end);
            for (int k = 0; k <= 8; ++k) {
                const double t = ut->t_begin + (t_hi - ut->t_begin) * k / 8.0;
                m = std::max(m, phi(uc.at(t), pc.at(t), g, box, c).max_w);
            }
        }
        return m;
    };
    auto events_ok = [&](const BlyConstants& c) {
        for (const auto& [ut, pt] : suite) {
            const double t_hi = std::min(ut->t_end, pt->t_end);
            ProfileCursor u_pre(*ut), p_pre(*pt), u_post(*ut), p_post(*pt);
            for (double t : merged_event_times(*ut, *pt, t_hi)) {
                const double before = phi(u_pre.at(t, true), p_pre.at(t, true), g, box, c).value;
                const double after =
                    phi(u_post.at(t, false), p_post.at(t, false), g, box, c).value;
                if (after > before + 1e-12) return false;
            }
        }
        return true;
    };

    for (int k = 0; k < 20 && max_w(bc) > 2.0; ++k) {
        bc.kappa1 *= 0.5;
        bc.kappa2 *= 0.5;
    }
    for (int k = 0; k < 10 && !events_ok(bc); ++k) bc.kappa2 *= 2.0;
    if (max_w(bc) > 2.0 || !events_ok(bc))
        throw ConfigError("calibrate_bly: no (kappa1, kappa2) satisfies W<=2 and event decay");
    return bc;
}

std::string SlopeMonitorResult::to_csv() const {
    std::string out = "t,phi,slope,shift_term,bound,ok\n";
    char line[224];
    for (const auto& w : windows)
        for (const auto& s : w.samples) {
            const double bound = bound_k * s.shift_term + bound_c * nu;
            const int ok = !(s.slope > bound);  // NaN slope on last sample -> ok
            std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", s.t,
                          s.phi, s.slope, s.shift_term, bound, ok);
            out += line;
        }
    return out;
}

std::string SlopeMonitorResult::to_json() const {
    nlohmann::json doc;
    doc["schema_version"] = 1;
    doc["nu"] = nu;
    doc["max_slope"] = max_slope;
    doc["max_shift_term"] = max_shift_term;
    doc["events_ok"] = events_ok;
    doc["skipped_windows"] = nlohmann::json::array();
    for (const auto& w : windows)
        if (w.skipped) doc["skipped_windows"].push_back({{"t0", w.t0}, {"t1", w.t1}});
    doc["events"] = nlohmann::json::array();
    for (const auto& e : events)
        doc["events"].push_back(
            {{"t", e.t}, {"before", e.before}, {"after", e.after}, {"ok", e.ok}});
    return doc.dump();
}

}  // namespace ftlab

#include "ftlab/front_tracking.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <json.hpp>

#include "ftlab/errors.hpp"
#include "ftlab/rng.hpp"

namespace ftlab {

const State& Profile::state_at(double x) const {
    std::size_t idx = 0;
    while (idx < fronts.size() && fronts[idx].position <= x) ++idx;
    return idx == 0 ? leftmost : fronts[idx - 1].right_state;
}

const State& Profile::state_before(double x) const {
    std::size_t idx = 0;
    while (idx < fronts.size() && fronts[idx].position < x) ++idx;
    return idx == 0 ? leftmost : fronts[idx - 1].right_state;
}

double Profile::total_variation() const {
    double tv = 0.0;
    for (const auto& f : fronts) tv += norm(f.right_state - f.left_state);
    return tv;
}

void Profile::validate(const StateBox& box) const {
    if (!box.contains(leftmost, 1e-12))
        throw std::domain_error("profile: leftmost state outside the box");
    for (std::size_t k = 0; k < fronts.size(); ++k) {
        if (k > 0 && fronts[k].position < fronts[k - 1].position - 1e-12)
            throw std::domain_error("profile: fronts out of order");
        if (norm(fronts[k].left_state - state_left_of(k)) > 1e-12)
            throw std::domain_error("profile: state chain broken at front " +
                                    std::to_string(k));
        if (!box.contains(fronts[k].right_state, 1e-12))
            throw std::domain_error("profile: state outside the box at front " +
                                    std::to_string(k));
    }
    if (!std::isfinite(total_variation()))
        throw std::domain_error("profile: total variation not finite");
}

void SchemeParameters::validate(const GasParameters& g, const StateBox& box) const {
    if (!(nu > 0.0)) throw ConfigError("scheme: nu must be positive");
    if (!(lambda_hat > box.max_char_speed(g)))
        throw ConfigError("scheme: lambda_hat must exceed the box characteristic speeds");
    if (!(jitter_value() <= nu)) throw ConfigError("scheme: speed_jitter must be <= nu");
    if (!(kappa > 0.0)) throw ConfigError("scheme: kappa must be positive");
}

double clip_to_shift_window(int family, double speed, double alpha, double lambda_hat) {
    if (family == 1) return std::clamp(speed, -lambda_hat / 2.0, -alpha);
    if (family == 3) return std::clamp(speed, alpha, lambda_hat / 2.0);
    throw UsageError("clip_to_shift_window: only families 1 and 3 are shifted");
}

std::optional<double> ConstantOffsetShift::imposed_speed(const Front& shock, double) const {
    return clip_to_shift_window(shock.family, shock.nominal_speed + offset_, alpha_,
                                lambda_hat_);
}

InitialData discretize_initial(const std::function<State(double)>& data, double x_lo,
                               double x_hi, const StateBox& box, double nu,
                               int fine_samples) {
    if (!(x_hi > x_lo)) throw UsageError("discretize_initial: empty support interval");
    InitialData out;
    State cur = data(x_lo);
    if (!box.contains(cur)) throw std::domain_error("discretize_initial: data outside box");
    out.leftmost = cur;
    for (int k = 1; k <= fine_samples; ++k) {
        const double x = x_lo + (x_hi - x_lo) * k / fine_samples;
        const State v = data(x);
        if (!box.contains(v))
            throw std::domain_error("discretize_initial: data outside box at x=" +
                                    std::to_string(x));
        // Cell values are samples of the input, so TV can only shrink. The
        // half-nu trigger leaves room for inter-sample drift in the L-inf
        // budget.
        if (norm_inf(v - cur) > nu * 0.5) {
            out.jumps.push_back(InitialJump{x, v});
            cur = v;
        }
    }
    return out;
}

InitialData random_waves_data(Rng& rng, const GasParameters& g, const StateBox& box,
                              int n_jumps, double max_sigma, double x_lo, double x_hi) {
    if (n_jumps < 1) throw UsageError("random_waves_data: need at least one jump");
    InitialData d;
    d.leftmost = box.reference;
    State cur = d.leftmost;
    const double span = (x_hi - x_lo) / n_jumps;
    for (int k = 0; k < n_jumps; ++k) {
        const double x = x_lo + span * (k + 0.2 + 0.6 * rng.uniform());
        const int family = 1 + static_cast<int>(rng.index(3));
        const double sigma = max_sigma * rng.uniform(-1.0, 1.0);
        State next = cur;
        try {
            next = apply_curve(cur, g, family, sigma, CurveChart::physical_fan, box);
        } catch (const CurveRangeError&) {
            // halve the step rather than leave the box
            next = apply_curve(cur, g, family, 0.5 * sigma, CurveChart::physical_fan, box);
        }
        d.jumps.push_back({x, next});
        cur = next;
    }
    return d;
}

namespace {

double wave_speed_lambda(const State& left_of_wave, const GasParameters& g, int family) {
    return lambda_family(left_of_wave, g, family);
}

struct FrontFactory {
    const GasParameters& gas;
    const StateBox& box;
    const SchemeParameters& params;
    std::uint64_t& id_counter;

    Front physical(FrontKind kind, int family, const State& l, const State& r, double sigma,
                   double nominal_speed) const {
        Front f;
        f.id = id_counter++;
        f.family = family;
        f.kind = kind;
        f.left_state = l;
        f.right_state = r;
        f.sigma = sigma;
        f.s0 = norm(r - l);
        f.nominal_speed = nominal_speed;
        // Every physical front is jittered, contacts included: distinct runs
        // from the same data would otherwise keep their contacts attached at
        // bitwise-equal positions for all time, exactly the degenerate
        // coincidence the speed perturbations exist to rule out.
        f.speed = nominal_speed + params.jitter_value() * keyed_pm1(params.seed, f.id);
        return f;
    }

    Front non_physical(const State& l, const State& r) const {
        Front f;
        f.id = id_counter++;
        f.family = np_family;
        f.kind = FrontKind::non_physical;
        f.left_state = l;
        f.right_state = r;
        f.s0 = norm(r - l);
        f.sigma = f.s0;
        f.nominal_speed = params.lambda_hat;
        f.speed = params.lambda_hat;  // exact, never jittered
        return f;
    }

    // Emits the wave(s) of one family from state `cur`, splitting rarefactions
    // into steps of strength <= nu travelling at their left-endpoint speed.
    // Waves below drop_tol are skipped; the caller carries the residual.
    void emit_family(std::vector<Front>& out, State& cur, int family, double sigma,
                     double drop_tol) const {
        if (std::abs(sigma) <= drop_tol) return;
        if (family == 2) {
            const auto pt = contact_curve(cur, gas, sigma, box);
            out.push_back(physical(FrontKind::contact, 2, cur, pt.state, sigma, 0.0));
            cur = pt.state;
            return;
        }
        if (sigma < 0.0) {
            const auto pt = hugoniot_locus(cur, gas, family, sigma, box);
            out.push_back(physical(FrontKind::shock, family, cur, pt.state, sigma, pt.speed));
            cur = pt.state;
            return;
        }
        const int m = std::max(1, static_cast<int>(std::ceil(sigma / params.nu - 1e-12)));
        const double step = sigma / m;
        for (int k = 0; k < m; ++k) {
            const auto pt = rarefaction_curve(cur, gas, family, step, box);
            out.push_back(physical(FrontKind::rarefaction_step, family, cur, pt.state, step,
                                   wave_speed_lambda(cur, gas, family)));
            cur = pt.state;
        }
    }
};

void snap_right_state(std::vector<Front>& fronts, const State& u_right) {
    if (!fronts.empty()) {
        fronts.back().right_state = u_right;
        fronts.back().s0 = norm(u_right - fronts.back().left_state);
    }
}

}  // namespace

std::vector<Front> accurate_solver(const State& u_left, const State& u_right,
                                   const GasParameters& g, const StateBox& box,
                                   const SchemeParameters& params,
                                   std::uint64_t& id_counter) {
    std::vector<Front> out;
    if (norm(u_right - u_left) == 0.0) return out;
    const RiemannFan fan = solve_riemann(u_left, u_right, g, box);
    FrontFactory make{g, box, params, id_counter};
    // Fan components below the solver resolution are carried by one
    // non-physical residual front. Without this, third-generation micro-waves
    // from curvature reflections multiply combinatorially.
    const double wave_tol = std::max(1e-11, 0.25 * params.nu * params.nu);
    State cur = u_left;
    make.emit_family(out, cur, 1, fan.sigmas[0], wave_tol);
    make.emit_family(out, cur, 2, fan.sigmas[1], wave_tol);
    make.emit_family(out, cur, 3, fan.sigmas[2], wave_tol);
    const double residual = norm(u_right - cur);
    if (residual > 2e-11) {
        out.push_back(make.non_physical(cur, u_right));
    } else if (out.empty()) {
        if (residual > 0.0) out.push_back(make.non_physical(u_left, u_right));
    } else {
        snap_right_state(out, u_right);
    }
    return out;
}

std::vector<Front> simplified_solver(const Front& left, const Front& right,
                                     const GasParameters& g, const StateBox& box,
                                     const SchemeParameters& params,
                                     std::uint64_t& id_counter) {
    const State& u_left = left.left_state;
    const State& u_right = right.right_state;
    FrontFactory make{g, box, params, id_counter};
    std::vector<Front> out;
    State cur = u_left;

    auto emit_like = [&](const Front& proto, double sigma) {
        if (std::abs(sigma) <= 1e-14) return;
        if (proto.family == 2) {
            make.emit_family(out, cur, 2, sigma, 1e-14);
        } else if (sigma < 0.0) {
            const auto pt = hugoniot_locus(cur, g, proto.family, sigma, box);
            out.push_back(
                make.physical(FrontKind::shock, proto.family, cur, pt.state, sigma, pt.speed));
            cur = pt.state;
        } else {
            const auto pt = rarefaction_curve(cur, g, proto.family, sigma, box);
            out.push_back(make.physical(FrontKind::rarefaction_step, proto.family, cur,
                                        pt.state, sigma,
                                        wave_speed_lambda(cur, g, proto.family)));
            cur = pt.state;
        }
    };

    if (left.kind == FrontKind::non_physical) {
        // Non-physical front overtakes a physical one: the physical wave
        // passes through unchanged in strength.
        emit_like(right, right.sigma);
    } else if (left.family == right.family) {
        emit_like(left, left.sigma + right.sigma);
    } else {
        // Crossing waves keep their strengths; outgoing in family order.
        const Front& lo = left.family < right.family ? left : right;
        const Front& hi = left.family < right.family ? right : left;
        emit_like(lo, lo.sigma);
        emit_like(hi, hi.sigma);
    }

    const Vec3 residual = u_right - cur;
    if (norm(residual) > 0.0) {
        out.push_back(make.non_physical(cur, u_right));
    } else {
        snap_right_state(out, u_right);
    }
    return out;
}

double rh_speed(const Front& front, const GasParameters& g) {
    if (front.kind == FrontKind::contact) return 0.0;
    if (front.kind != FrontKind::shock)
        throw UsageError("rh_speed: front has no Rankine-Hugoniot speed");
    const Vec3 du = front.right_state - front.left_state;
    const double d2 = dot(du, du);
    if (d2 == 0.0) return front.nominal_speed;
    const Vec3 df = flux(front.right_state, g) - flux(front.left_state, g);
    return dot(df, du) / d2;
}

namespace {

struct Evolution {
    const GasParameters& gas;
    const StateBox& box;
    const SchemeParameters& params;
    const ShiftPolicy* shift;
    double t;
    std::vector<Front> fronts;
    std::uint64_t id_counter = 1;

    void apply_shift(Front& f, double now, std::vector<std::pair<std::uint64_t, double>>* log) {
        if (shift == nullptr || f.kind != FrontKind::shock) return;
        if (auto s = shift->imposed_speed(f, now)) {
            if (log != nullptr && *s != f.speed) log->emplace_back(f.id, *s);
            f.speed = *s;
        }
    }

    // Smallest positive collision time among adjacent pairs; ties resolve to
    // the leftmost pair so the event order is deterministic.
    std::pair<std::size_t, double> next_collision() const {
        std::size_t best = fronts.size();
        double best_dt = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i + 1 < fronts.size(); ++i) {
            const double dv = fronts[i].speed - fronts[i + 1].speed;
            if (dv <= 0.0) continue;
            const double dt = std::max(0.0, fronts[i + 1].position - fronts[i].position) / dv;
            if (dt < best_dt) {
                best_dt = dt;
                best = i;
            }
        }
        return {best, best_dt};
    }

    // Advances to an absolute target time with the same subtraction the
    // replay cursor performs, so replayed positions are bit-identical.
    void advance_to(double t_target) {
        const double dt = t_target - t;
        for (auto& f : fronts) f.position += f.speed * dt;
        for (std::size_t k = 1; k < fronts.size(); ++k)  // heal roundoff micro-crossings
            fronts[k].position = std::max(fronts[k].position, fronts[k - 1].position);
        t = t_target;
    }
};

}  // namespace

TrajectoryRecord evolve(const InitialData& data, double t_end, const GasParameters& g,
                        const StateBox& box, const SchemeParameters& params,
                        const ShiftPolicy* shift) {
    params.validate(g, box);
    TrajectoryRecord rec;
    rec.gas = g;
    rec.box = box;
    rec.params = params;
    rec.shifted = shift != nullptr;
    rec.t_begin = 0.0;
    rec.t_end = t_end;

    Evolution ev{g, box, params, shift, 0.0, {}, 1};

    // Resolve the initial Riemann problems with the accurate solver.
    for (std::size_t k = 1; k < data.jumps.size(); ++k)
        if (!(data.jumps[k].position > data.jumps[k - 1].position))
            throw UsageError("evolve: initial jump positions must be strictly increasing");
    State cur = data.leftmost;
    for (const auto& jump : data.jumps) {
        auto fan = accurate_solver(cur, jump.right, g, box, params, ev.id_counter);
        for (auto& f : fan) {
            f.position = jump.position;
            ev.apply_shift(f, 0.0, nullptr);
            ev.fronts.push_back(f);
        }
        cur = jump.right;
    }
    rec.initial.time = 0.0;
    rec.initial.leftmost = data.leftmost;
    rec.initial.fronts = ev.fronts;
    rec.initial.validate(box);

    while (true) {
        auto [idx, dt] = ev.next_collision();
        if (!(ev.t + dt < t_end)) break;
        if (rec.events.size() >= params.max_events)
            throw std::runtime_error(
                "evolve: interaction cap exceeded; check data smallness and nu");

        ev.advance_to(ev.t + dt);
        const Front left = ev.fronts[idx];
        const Front right = ev.fronts[idx + 1];
        const double x_star = left.position;

        InteractionRecord event;
        event.time = ev.t;
        event.position = x_star;
        event.incoming = {left, right};

        std::vector<Front> out;
        if (left.kind == FrontKind::non_physical || right.kind == FrontKind::non_physical ||
            std::abs(left.sigma * right.sigma) < params.np_threshold_value()) {
            event.simplified = true;
            out = simplified_solver(left, right, g, box, params, ev.id_counter);
        } else {
            event.simplified = false;
            out = accurate_solver(left.left_state, right.right_state, g, box, params,
                                  ev.id_counter);
        }
        for (auto& f : out) {
            f.position = x_star;
            ev.apply_shift(f, ev.t, nullptr);
        }
        event.outgoing = out;

        ev.fronts.erase(ev.fronts.begin() + idx, ev.fronts.begin() + idx + 2);
        ev.fronts.insert(ev.fronts.begin() + idx, out.begin(), out.end());

        // Trace-driven policies may move every surviving shock at each event.
        for (auto& f : ev.fronts) ev.apply_shift(f, ev.t, &event.speed_updates);

        rec.events.push_back(std::move(event));
    }
    return rec;
}

// ---------------------------------------------------------------------------
// Replay

ProfileCursor::ProfileCursor(const TrajectoryRecord& traj) : traj_(&traj) {
    current_ = traj.initial;
    base_time_ = traj.t_begin;
}

void ProfileCursor::apply_event(const InteractionRecord& ev) {
    const double dt = ev.time - base_time_;
    for (auto& f : current_.fronts) f.position += f.speed * dt;
    for (std::size_t k = 1; k < current_.fronts.size(); ++k)
        current_.fronts[k].position =
            std::max(current_.fronts[k].position, current_.fronts[k - 1].position);
    base_time_ = ev.time;

    std::size_t idx = 0;
    while (idx < current_.fronts.size() && current_.fronts[idx].id != ev.incoming[0].id) ++idx;
    if (idx + 1 >= current_.fronts.size())
        throw std::logic_error("profile replay: event incoming fronts not found");
    current_.fronts.erase(current_.fronts.begin() + idx, current_.fronts.begin() + idx + 2);
    current_.fronts.insert(current_.fronts.begin() + idx, ev.outgoing.begin(),
                           ev.outgoing.end());
    for (const auto& [id, speed] : ev.speed_updates)
        for (auto& f : current_.fronts)
            if (f.id == id) f.speed = speed;
}

const Profile& ProfileCursor::at(double t, bool before_events_at_t) {
    if (t < base_time_ - 1e-15)
        throw UsageError("profile cursor: time must be nondecreasing");
    while (next_event_ < traj_->events.size()) {
        const auto& ev = traj_->events[next_event_];
        const bool due = before_events_at_t ? ev.time < t : ev.time <= t;
        if (!due) break;
        apply_event(ev);
        ++next_event_;
    }
    out_ = current_;
    const double dt = t - base_time_;
    for (auto& f : out_.fronts) f.position += f.speed * dt;
    for (std::size_t k = 1; k < out_.fronts.size(); ++k)
        out_.fronts[k].position = std::max(out_.fronts[k].position, out_.fronts[k - 1].position);
    out_.time = t;
    return out_;
}

Profile TrajectoryRecord::profile_at(double t, bool before_events_at_t) const {
    ProfileCursor cursor(*this);
    return cursor.at(t, before_events_at_t);
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

nlohmann::json state_json(const State& u) {
    return nlohmann::json::array({u.tau, u.w, u.e_total});
}

const char* kind_name(FrontKind k) {
    switch (k) {
        case FrontKind::shock: return "shock";
        case FrontKind::rarefaction_step: return "rarefaction_step";
        case FrontKind::contact: return "contact";
        case FrontKind::non_physical: return "non_physical";
    }
    return "?";
}

nlohmann::json front_json(const Front& f) {
    return nlohmann::json{{"id", f.id},
                          {"x", f.position},
                          {"speed", f.speed},
                          {"nominal_speed", f.nominal_speed},
                          {"family", f.family},
                          {"kind", kind_name(f.kind)},
                          {"left", state_json(f.left_state)},
                          {"right", state_json(f.right_state)},
                          {"sigma", f.sigma},
                          {"s0", f.s0}};
}

}  // namespace

std::string TrajectoryRecord::to_json() const {
    nlohmann::json doc;
    doc["schema_version"] = 1;
    doc["shifted"] = shifted;
    doc["t_begin"] = t_begin;
    doc["t_end"] = t_end;
    doc["params"] = {{"nu", params.nu},
                     {"lambda_hat", params.lambda_hat},
                     {"kappa", params.kappa},
                     {"np_threshold", params.np_threshold_value()},
                     {"speed_jitter", params.jitter_value()},
                     {"seed", params.seed}};
    doc["initial"] = {{"time", initial.time},
                      {"leftmost", state_json(initial.leftmost)},
                      {"fronts", nlohmann::json::array()}};
    for (const auto& f : initial.fronts) doc["initial"]["fronts"].push_back(front_json(f));
    doc["events"] = nlohmann::json::array();
    for (const auto& ev : events) {
        nlohmann::json e{{"t", ev.time},
                         {"x", ev.position},
                         {"simplified", ev.simplified},
                         {"incoming", {front_json(ev.incoming[0]), front_json(ev.incoming[1])}},
                         {"outgoing", nlohmann::json::array()},
                         {"speed_updates", nlohmann::json::array()}};
        for (const auto& f : ev.outgoing) e["outgoing"].push_back(front_json(f));
        for (const auto& [id, s] : ev.speed_updates)
            e["speed_updates"].push_back({{"id", id}, {"speed", s}});
        doc["events"].push_back(std::move(e));
    }
    return doc.dump();
}

std::string profile_to_csv(const Profile& p, double x_lo, double x_hi) {
    std::string out = "x,tau,w,e_total\n";
    char line[160];
    auto row = [&](double x, const State& u) {
        std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g\n", x, u.tau, u.w,
                      u.e_total);
        out += line;
    };
    row(x_lo, p.leftmost);
    for (const auto& f : p.fronts)
        if (f.position >= x_lo && f.position <= x_hi) row(f.position, f.right_state);
    row(x_hi, p.fronts.empty() ? p.leftmost : p.fronts.back().right_state);
    return out;
}

}  // namespace ftlab

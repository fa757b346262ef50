#include "ftlab/config.hpp"

#include <cmath>

#include <json.hpp>

#include "ftlab/errors.hpp"

namespace ftlab {

using nlohmann::json;

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hash_hex(std::uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw ConfigError("config: " + where + ": " + what);
}

void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
    if (!j.is_object()) fail(where, "expected an object");
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) ok = true;
        if (!ok) fail(where, "unknown field '" + key + "'");
    }
}

double num(const json& j, const std::string& where) {
    if (!j.is_number()) fail(where, "expected a number");
    return j.get<double>();
}

State state_of(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 3) fail(where, "expected [tau, w, e_total]");
    return State{num(j[0], where), num(j[1], where), num(j[2], where)};
}

}  // namespace

RunConfig RunConfig::from_json_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        fail("parse", e.what());
    }
    check_keys(doc, "$",
               {"schema_version", "seed", "run_date", "gas", "box", "scheme", "weights",
                "bly", "shift", "initial_data", "evolve", "riemann", "validate", "holder"});
    RunConfig cfg;
    if (!doc.contains("schema_version")) fail("$", "missing schema_version");
    cfg.schema_version = doc["schema_version"].get<int>();
    if (cfg.schema_version != 1) fail("schema_version", "unsupported version");
    if (doc.contains("seed")) cfg.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("run_date")) cfg.run_date = doc["run_date"].get<std::string>();

    if (doc.contains("gas")) {
        const auto& g = doc["gas"];
        check_keys(g, "gas", {"gamma", "r_bar", "k_bar"});
        cfg.gas = GasParameters::make(g.value("gamma", 1.4), g.value("r_bar", 1.0),
                                      g.value("k_bar", 1.0));
    }
    if (doc.contains("box")) {
        const auto& b = doc["box"];
        check_keys(b, "box", {"tau", "w", "e_total", "reference", "epsilon"});
        auto range = [&](const char* key, int i) {
            if (!b.contains(key)) return;
            const auto& r = b[key];
            if (!r.is_array() || r.size() != 2) fail(std::string("box.") + key, "[lo, hi]");
            cfg.box.lo[i] = num(r[0], key);
            cfg.box.hi[i] = num(r[1], key);
        };
        range("tau", 0);
        range("w", 1);
        range("e_total", 2);
        if (b.contains("reference")) cfg.box.reference = state_of(b["reference"], "box.reference");
        if (b.contains("epsilon")) cfg.box.epsilon = num(b["epsilon"], "box.epsilon");
        cfg.box.validate(cfg.gas);
    }
    if (doc.contains("scheme")) {
        const auto& s = doc["scheme"];
        check_keys(s, "scheme",
                   {"nu", "lambda_hat", "kappa", "np_threshold", "speed_jitter",
                    "max_events"});
        cfg.scheme.nu = s.value("nu", cfg.scheme.nu);
        cfg.scheme.lambda_hat = s.value("lambda_hat", cfg.scheme.lambda_hat);
        cfg.scheme.kappa = s.value("kappa", cfg.scheme.kappa);
        cfg.scheme.np_threshold = s.value("np_threshold", cfg.scheme.np_threshold);
        cfg.scheme.speed_jitter = s.value("speed_jitter", cfg.scheme.speed_jitter);
        cfg.scheme.max_events = s.value("max_events", cfg.scheme.max_events);
    }
    cfg.scheme.seed = cfg.seed;
    if (doc.contains("weights")) {
        check_keys(doc["weights"], "weights", {"c1"});
        cfg.c1 = doc["weights"].value("c1", 1.0);
        if (!(cfg.c1 > 0.0)) fail("weights.c1", "must be positive");
    }
    if (doc.contains("bly")) {
        check_keys(doc["bly"], "bly", {"kappa1", "kappa2"});
        cfg.bly.kappa1 = doc["bly"].value("kappa1", 1.0);
        cfg.bly.kappa2 = doc["bly"].value("kappa2", 1.0);
    }
    if (doc.contains("shift")) {
        const auto& s = doc["shift"];
        check_keys(s, "shift", {"policy", "offset", "gain"});
        cfg.shift_policy = s.value("policy", std::string("none"));
        if (cfg.shift_policy != "none" && cfg.shift_policy != "constant_offset" &&
            cfg.shift_policy != "trace_driven")
            fail("shift.policy", "must be none, constant_offset or trace_driven");
        cfg.shift_offset = s.value("offset", cfg.shift_offset);
        cfg.shift_gain = s.value("gain", cfg.shift_gain);
    }
    if (doc.contains("initial_data")) {
        const auto& d = doc["initial_data"];
        check_keys(d, "initial_data",
                   {"kind", "state", "leftmost", "jumps", "amp", "width", "component",
                    "support", "n_jumps", "max_sigma"});
        cfg.data_kind = d.value("kind", std::string("constant"));
        if (d.contains("state")) cfg.data_state = state_of(d["state"], "initial_data.state");
        if (d.contains("leftmost")) {
            cfg.data_steps.leftmost = state_of(d["leftmost"], "initial_data.leftmost");
            cfg.data_state = cfg.data_steps.leftmost;
        }
        if (d.contains("jumps")) {
            for (const auto& jj : d["jumps"]) {
                if (cfg.data_kind == "steps") {
                    if (!jj.is_array() || jj.size() != 4)
                        fail("initial_data.jumps", "steps expect [x, tau, w, e_total]");
                    cfg.data_steps.jumps.push_back(
                        {num(jj[0], "jump.x"),
                         State{num(jj[1], "jump"), num(jj[2], "jump"), num(jj[3], "jump")}});
                } else if (cfg.data_kind == "waves") {
                    if (!jj.is_array() || jj.size() != 3)
                        fail("initial_data.jumps", "waves expect [x, family, sigma]");
                    cfg.data_waves.push_back({num(jj[0], "jump.x"),
                                              static_cast<int>(num(jj[1], "jump.family")),
                                              num(jj[2], "jump.sigma")});
                } else {
                    fail("initial_data.jumps", "jumps only valid for steps/waves kinds");
                }
            }
        }
        cfg.data_amp = d.value("amp", cfg.data_amp);
        cfg.data_width = d.value("width", cfg.data_width);
        cfg.data_component = d.value("component", cfg.data_component);
        if (d.contains("support")) {
            cfg.data_support_lo = num(d["support"][0], "initial_data.support");
            cfg.data_support_hi = num(d["support"][1], "initial_data.support");
        }
        cfg.data_random_jumps = d.value("n_jumps", cfg.data_random_jumps);
        cfg.data_random_sigma = d.value("max_sigma", cfg.data_random_sigma);
        if (cfg.data_kind != "constant" && cfg.data_kind != "steps" &&
            cfg.data_kind != "waves" && cfg.data_kind != "bump" &&
            cfg.data_kind != "wild" && cfg.data_kind != "random_waves")
            fail("initial_data.kind", "unknown kind '" + cfg.data_kind + "'");
    }
    if (doc.contains("evolve")) {
        const auto& e = doc["evolve"];
        check_keys(e, "evolve", {"t_end", "profile_times"});
        cfg.evolve_t_end = e.value("t_end", cfg.evolve_t_end);
        if (e.contains("profile_times"))
            for (const auto& t : e["profile_times"])
                cfg.profile_times.push_back(num(t, "evolve.profile_times"));
    }
    if (doc.contains("riemann")) {
        const auto& r = doc["riemann"];
        check_keys(r, "riemann", {"left", "right"});
        cfg.riemann_left = state_of(r["left"], "riemann.left");
        cfg.riemann_right = state_of(r["right"], "riemann.right");
    }
    if (doc.contains("validate")) {
        const auto& v = doc["validate"];
        check_keys(v, "validate", {"seeds", "t_end", "sample_dt"});
        if (v.contains("seeds"))
            for (const auto& s : v["seeds"])
                cfg.validate_seeds.push_back(s.get<std::uint64_t>());
        cfg.validate_t_end = v.value("t_end", cfg.validate_t_end);
        cfg.validate_sample_dt = v.value("sample_dt", cfg.validate_sample_dt);
    }
    if (doc.contains("holder")) {
        const auto& h = doc["holder"];
        check_keys(h, "holder",
                   {"perturbations", "width", "nu_fine", "nu_psi", "R", "tau",
                    "grid_cells", "trace_dt", "info_grid_n", "gain"});
        if (h.contains("perturbations"))
            for (const auto& p : h["perturbations"])
                cfg.holder.perturbations.push_back(num(p, "holder.perturbations"));
        cfg.holder.perturbation_width = h.value("width", cfg.holder.perturbation_width);
        cfg.holder.nu_fine = h.value("nu_fine", cfg.holder.nu_fine);
        cfg.holder.nu_psi = h.value("nu_psi", cfg.holder.nu_psi);
        cfg.holder.R = h.value("R", cfg.holder.R);
        cfg.holder.tau = h.value("tau", cfg.holder.tau);
        cfg.holder.grid_cells = h.value("grid_cells", cfg.holder.grid_cells);
        cfg.holder.trace_dt = h.value("trace_dt", cfg.holder.trace_dt);
        cfg.holder.info_grid_n = h.value("info_grid_n", cfg.holder.info_grid_n);
        cfg.holder.shift_gain = h.value("gain", cfg.holder.shift_gain);
    }
    cfg.holder.kappa = cfg.scheme.kappa;
    cfg.holder.c1 = cfg.c1;
    cfg.holder.bc = cfg.bly;
    cfg.holder.seed = cfg.seed;
    cfg.config_hash = hash_hex(fnv1a64(doc.dump()));
    return cfg;
}

InitialData RunConfig::build_initial_data(std::uint64_t seed_override) const {
    if (data_kind == "constant") {
        InitialData d;
        d.leftmost = data_state;
        return d;
    }
    if (data_kind == "steps") return data_steps;
    if (data_kind == "waves") {
        InitialData d;
        d.leftmost = data_state;
        State cur = d.leftmost;
        for (const auto& wj : data_waves) {
            cur = apply_curve(cur, gas, wj.family, wj.sigma, CurveChart::physical_fan, box);
            d.jumps.push_back({wj.x, cur});
        }
        return d;
    }
    if (data_kind == "random_waves") {
        Rng rng(seed_override);
        return random_waves_data(rng, gas, box, data_random_jumps, data_random_sigma,
                                 data_support_lo, data_support_hi);
    }
    const Vec3 base = data_state.vec();
    auto component_bump = [this, base](double shape) {
        Vec3 v = base;
        v[data_component] += data_amp * shape;
        return State::from_vec(v);
    };
    if (data_kind == "bump") {
        const double w = data_width;
        return discretize_initial(
            [&](double x) { return component_bump(std::exp(-8.0 * x * x / (w * w))); },
            data_support_lo, data_support_hi, box, scheme.nu);
    }
    if (data_kind == "wild") {
        // sqrt(|x|) sin(1/|x|) oscillation: outside BV in the limit, bounded
        // variation once sampled, strong traces by construction
        return discretize_initial(
            [&](double x) {
                const double ax = std::max(std::abs(x), 1e-3);
                return component_bump(std::sqrt(ax) * std::sin(1.0 / ax));
            },
            data_support_lo, data_support_hi, box, scheme.nu);
    }
    throw ConfigError("config: unsupported initial_data kind " + data_kind);
}

std::unique_ptr<ShiftPolicy> RunConfig::build_shift_policy(
    const TrajectoryRecord* reference) const {
    const double alpha = box.min_char_speed(gas) / 2.0;
    if (shift_policy == "none") return nullptr;
    if (shift_policy == "constant_offset")
        return std::make_unique<ConstantOffsetShift>(shift_offset, alpha,
                                                     scheme.lambda_hat);
    if (shift_policy == "trace_driven") {
        if (reference == nullptr)
            throw UsageError("trace_driven shift needs a reference trajectory");
        return std::make_unique<TraceDrivenShift>(*reference, shift_gain, c1, alpha,
                                                  scheme.lambda_hat);
    }
    throw ConfigError("config: unknown shift policy " + shift_policy);
}

std::string ConstantsLedger::to_json() const {
    json doc;
    doc["schema_version"] = 1;
    doc["config_hash"] = config_hash;
    doc["date"] = date;
    doc["constants"] = json::object();
    for (const auto& [name, c] : constants)
        doc["constants"][name] = {{"value", c.value},
                                  {"suite", c.suite},
                                  {"config_hash", config_hash}};
    return doc.dump(2);
}

}  // namespace ftlab

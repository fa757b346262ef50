#include <atomic>
#include <clocale>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "ftlab/config.hpp"
#include "ftlab/entropy_monitor.hpp"
#include "ftlab/errors.hpp"

using namespace ftlab;
namespace fs = std::filesystem;

namespace {

struct CliArgs {
    std::string config_path;
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    bool seed_set = false;
    int jobs = 1;
};

RunConfig load_config(const CliArgs& args) {
    std::ifstream in(args.config_path);
    if (!in) throw UsageError("cannot open config file " + args.config_path);
    std::stringstream ss;
    ss << in.rdbuf();
    RunConfig cfg = RunConfig::from_json_text(ss.str());
    if (args.seed_set) {
        cfg.seed = args.seed;
        cfg.scheme.seed = args.seed;
        cfg.holder.seed = args.seed;
    }
    return cfg;
}

void write_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw UsageError("cannot write " + path.string());
    out << content;
}

std::string with_hash_csv(const std::string& csv, const RunConfig& cfg) {
    return "# config_hash=" + cfg.config_hash + "\n" + csv;
}

std::string with_hash_json(const std::string& json_text, const RunConfig& cfg) {
    auto doc = nlohmann::json::parse(json_text);
    doc["config_hash"] = cfg.config_hash;
    return doc.dump();
}

// deterministic parallel map: results land in input order
template <typename F>
void parallel_for(int jobs, std::size_t n, F&& body) {
    if (jobs <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    const int workers = std::min<std::size_t>(jobs, n);
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) body(i);
        });
    for (auto& t : pool) t.join();
}

int cmd_riemann(const CliArgs& args) {
    const RunConfig cfg = load_config(args);
    const auto fan = solve_riemann(cfg.riemann_left, cfg.riemann_right, cfg.gas, cfg.box);

    nlohmann::json doc;
    doc["schema_version"] = 1;
    doc["sigmas"] = {fan.sigmas[0], fan.sigmas[1], fan.sigmas[2]};
    doc["speeds"] = {fan.speeds[0], fan.speeds[1], fan.speeds[2]};
    doc["middle_left"] = {fan.middle_left.tau, fan.middle_left.w, fan.middle_left.e_total};
    doc["middle_right"] = {fan.middle_right.tau, fan.middle_right.w,
                           fan.middle_right.e_total};

    std::string csv = "family,kind,sigma,speed\n";
    const char* kind_names[] = {"shock", "rarefaction", "contact"};
    for (int i = 0; i < 3; ++i) {
        if (std::abs(fan.sigmas[i]) <= 1e-10) continue;  // below solver resolution
        char line[128];
        std::snprintf(line, sizeof line, "%d,%s,%.17g,%.17g\n", i + 1,
                      kind_names[static_cast<int>(fan.wave_kinds[i])], fan.sigmas[i],
                      fan.speeds[i]);
        csv += line;
    }
    write_file(fs::path(args.out_dir) / "riemann.json", with_hash_json(doc.dump(), cfg));
    write_file(fs::path(args.out_dir) / "riemann.csv", with_hash_csv(csv, cfg));

    // sampled wave curves through the left state, for plotting
    std::string curves = "family,branch,sigma,tau,w,e_total,speed\n";
    auto curve_row = [&](int family, const char* branch, const WaveCurvePoint& pt) {
        char line[192];
        std::snprintf(line, sizeof line, "%d,%s,%.17g,%.17g,%.17g,%.17g,%.17g\n", family,
                      branch, pt.sigma, pt.state.tau, pt.state.w, pt.state.e_total,
                      pt.speed);
        curves += line;
    };
    for (int family : {1, 3}) {
        for (int k = 1; k <= 40; ++k) {
            const double sig = 0.12 * k / 40.0;
            try {
                curve_row(family, "shock", shock_curve(cfg.riemann_left, cfg.gas, family,
                                                       -sig, cfg.box));
                curve_row(family, "rarefaction",
                          rarefaction_curve(cfg.riemann_left, cfg.gas, family, sig, cfg.box));
            } catch (const CurveRangeError&) {
                break;
            }
        }
    }
    for (int k = -20; k <= 20; ++k) {
        if (k == 0) continue;
        try {
            curve_row(2, "contact",
                      contact_curve(cfg.riemann_left, cfg.gas, 0.1 * k / 20.0, cfg.box));
        } catch (const CurveRangeError&) {
            continue;
        }
    }
    write_file(fs::path(args.out_dir) / "curves.csv", with_hash_csv(curves, cfg));
    return 0;
}

int cmd_evolve(const CliArgs& args) {
    const RunConfig cfg = load_config(args);
    const InitialData data = cfg.build_initial_data(cfg.seed);

    std::unique_ptr<TrajectoryRecord> reference;
    if (cfg.shift_policy == "trace_driven") {
        reference = std::make_unique<TrajectoryRecord>(
            evolve(data, cfg.evolve_t_end, cfg.gas, cfg.box, cfg.scheme));
    }
    const auto policy = cfg.build_shift_policy(reference.get());
    const auto traj = evolve(data, cfg.evolve_t_end, cfg.gas, cfg.box, cfg.scheme,
                             policy.get());

    write_file(fs::path(args.out_dir) / "trajectory.json",
               with_hash_json(traj.to_json(), cfg));
    write_file(fs::path(args.out_dir) / "glimm.csv",
               with_hash_csv(glimm_series_csv(traj, cfg.scheme.kappa), cfg));
    for (std::size_t i = 0; i < cfg.profile_times.size(); ++i) {
        const double t = cfg.profile_times[i];
        char name[64];
        std::snprintf(name, sizeof name, "profile_%03zu.csv", i);
        write_file(fs::path(args.out_dir) / name,
                   with_hash_csv(profile_to_csv(traj.profile_at(t),
                                                cfg.data_support_lo - 8.0,
                                                cfg.data_support_hi + 8.0),
                                 cfg));
    }
    return 0;
}

int cmd_validate(const CliArgs& args) {
    const RunConfig cfg = load_config(args);
    if (cfg.validate_seeds.empty())
        throw UsageError("validate: config lists no seeds to run");

    nlohmann::json report;
    report["schema_version"] = 1;
    bool all_ok = true;

    // seeded runs (parallel cells, deterministic merge by index)
    std::vector<TrajectoryRecord> runs(cfg.validate_seeds.size());
    std::vector<std::string> run_errors(cfg.validate_seeds.size());
    parallel_for(args.jobs, runs.size(), [&](std::size_t i) {
        SchemeParameters p = cfg.scheme;
        p.seed = cfg.validate_seeds[i];
        try {
            runs[i] = evolve(cfg.build_initial_data(cfg.validate_seeds[i]),
                             cfg.validate_t_end, cfg.gas, cfg.box, p);
        } catch (const std::exception& e) {
            run_errors[i] = e.what();
        }
    });
    for (const auto& err : run_errors)
        if (!err.empty()) throw SolverError("validate: run failed: " + err, 0.0, 0);

    // Upsilon decay, pointwise a-decay, and ratio windows on every event
    bool upsilon_ok = true, ratios_ok = true;
    for (const auto& traj : runs) {
        const auto decay = weight_decay_audit(traj, cfg.scheme.kappa, cfg.c1);
        upsilon_ok = upsilon_ok && decay.all_ok;
        ProfileCursor cursor(traj);
        for (const auto& ev : traj.events) {
            const Profile& p = cursor.at(ev.time);
            const auto w = build_weight(p, cfg.gas, cfg.box, cfg.scheme.kappa, cfg.c1);
            ratios_ok = ratios_ok && check_ratios(p, w, cfg.gas).all_ok;
        }
    }
    report["upsilon_and_weight_decay"] = upsilon_ok;
    report["ratio_windows"] = ratios_ok;
    all_ok = all_ok && upsilon_ok && ratios_ok;

    // Phi equivalence and event monotonicity on consecutive run pairs
    bool phi_ok = true;
    double k_equiv = 1.0;
    for (std::size_t i = 0; i + 1 < runs.size(); i += 2) {
        const auto mon = phi_slope_monitor(runs[i], runs[i + 1], cfg.validate_sample_dt,
                                           cfg.gas, cfg.box, cfg.bly);
        if (i == 0) {
            write_file(fs::path(args.out_dir) / "phi_series.csv",
                       with_hash_csv(mon.to_csv(), cfg));
            write_file(fs::path(args.out_dir) / "phi_verdicts.json",
                       with_hash_json(mon.to_json(), cfg));
        }
        phi_ok = phi_ok && mon.events_ok;
        ProfileCursor a(runs[i]), b(runs[i + 1]);
        const double t_hi = std::min(runs[i].t_end, runs[i + 1].t_end);
        for (int k = 1; k <= 8; ++k) {
            const double t = t_hi * k / 8.0;
            const auto r = phi(a.at(t), b.at(t), cfg.gas, cfg.box, cfg.bly);
            if (r.min_w < 1.0 || r.max_w > 2.0) phi_ok = false;
            if (r.l1 > 1e-14 && r.value > 0.0)
                k_equiv = std::max({k_equiv, r.l1 / r.value, r.value / (2.0 * r.l1)});
        }
    }
    report["phi_events_and_weights"] = phi_ok;
    report["phi_equivalence_k"] = k_equiv;
    all_ok = all_ok && phi_ok && k_equiv < 100.0;

    // dissipation signs at contacts and shocks (admissible traces)
    {
        Rng rng(cfg.seed ^ 0xd15ea5e5ULL);
        int bad_contact = 0, bad_shock = 0;
        const double alpha = cfg.box.min_char_speed(cfg.gas) / 2.0;
        for (int k = 0; k < 500; ++k) {
            const State left{cfg.box.reference.tau * rng.uniform(0.95, 1.05),
                             cfg.box.reference.w + rng.uniform(-0.02, 0.02),
                             cfg.box.reference.e_total * rng.uniform(0.98, 1.02)};
            const auto cpt = contact_curve(left, cfg.gas, rng.uniform(-0.05, 0.05), cfg.box);
            Front contact;
            contact.family = 2;
            contact.kind = FrontKind::contact;
            contact.left_state = left;
            contact.right_state = cpt.state;
            contact.s0 = norm(cpt.state - left);
            const double th_l = complete_thermo(left, cfg.gas).theta;
            const double th_r = complete_thermo(cpt.state, cfg.gas).theta;
            State v = left;
            v.tau *= rng.uniform(0.97, 1.03);
            v.e_total *= rng.uniform(0.99, 1.01);
            const auto dc = dissipation_at_front(v, v, contact, th_l, th_r, 0.0, cfg.gas);
            if (dc.value > 1e-13) ++bad_contact;

            const int family = k % 2 == 0 ? 1 : 3;
            const auto spt = hugoniot_locus(cfg.box.reference, cfg.gas, family,
                                            -rng.uniform(0.01, 0.06), cfg.box);
            Front shock;
            shock.family = family;
            shock.kind = FrontKind::shock;
            shock.left_state = cfg.box.reference;
            shock.right_state = spt.state;
            shock.s0 = norm(spt.state - cfg.box.reference);
            shock.nominal_speed = shock.speed = spt.speed;
            const double a2 = family == 1 ? 1.0 - cfg.c1 * shock.s0 : 1.0 + cfg.c1 * shock.s0;
            const Vec3 dv{{rng.uniform(-0.02, 0.02), rng.uniform(-0.02, 0.02),
                           rng.uniform(-0.02, 0.02)}};
            const State trace = compose_curves(k % 4 < 2 ? shock.left_state : shock.right_state,
                                               cfg.gas, dv, CurveChart::physical_fan, cfg.box);
            const double imbalance =
                a2 * relative_entropy(trace, shock.right_state, cfg.gas) -
                relative_entropy(trace, shock.left_state, cfg.gas);
            const double h_dot = clip_to_shift_window(
                family, spt.speed + imbalance / (2.0 * cfg.shift_gain * a2 * shock.s0),
                alpha, cfg.scheme.lambda_hat);
            const auto ds = dissipation_at_front(trace, trace, shock, 1.0, a2, h_dot, cfg.gas);
            if (ds.value > 0.0) ++bad_shock;
        }
        report["contact_dissipation_positive_samples"] = bad_contact;
        report["shock_dissipation_positive_samples"] = bad_shock;
        all_ok = all_ok && bad_contact == 0 && bad_shock == 0;
    }

    // ledger: fine reference against a trace-shifted coarse run
    {
        SchemeParameters fine = cfg.scheme;
        fine.nu = cfg.scheme.nu / 4.0;
        fine.seed = cfg.validate_seeds[0];
        const InitialData data = cfg.build_initial_data(cfg.validate_seeds[0]);
        const auto u_traj = evolve(data, cfg.validate_t_end, cfg.gas, cfg.box, fine);
        const double alpha = cfg.box.min_char_speed(cfg.gas) / 2.0;
        TraceDrivenShift shift(u_traj, cfg.shift_gain, cfg.c1, alpha, cfg.scheme.lambda_hat);
        SchemeParameters coarse = cfg.scheme;
        coarse.seed = cfg.validate_seeds[0] + 1;
        const auto psi = evolve(data, cfg.validate_t_end, cfg.gas, cfg.box, coarse, &shift);
        const auto s =
            info_speed(cfg.box, states_of(psi), 5, cfg.scheme.lambda_hat, cfg.gas);
        const double R = std::abs(cfg.data_support_hi) + std::abs(cfg.data_support_lo) +
                         cfg.scheme.lambda_hat * cfg.validate_t_end + 1.0;
        const auto ledger = quadrilateral_audit(u_traj, psi, cfg.scheme.kappa, cfg.c1, R,
                                                cfg.validate_t_end, s.s);
        report["ledger_balanced"] = ledger.balanced;
        report["ledger_k"] = ledger.k_ledger;
        all_ok = all_ok && ledger.balanced;
    }

    // determinism: byte-identical replay of the first run
    {
        SchemeParameters p = cfg.scheme;
        p.seed = cfg.validate_seeds[0];
        const auto again = evolve(cfg.build_initial_data(cfg.validate_seeds[0]),
                                  cfg.validate_t_end, cfg.gas, cfg.box, p);
        const bool det = again.to_json() == runs[0].to_json();
        report["determinism"] = det;
        all_ok = all_ok && det;
    }

    report["all_ok"] = all_ok;
    write_file(fs::path(args.out_dir) / "report.json",
               with_hash_json(report.dump(), cfg));
    std::cout << (all_ok ? "validate: PASS" : "validate: FAIL") << "\n";
    return all_ok ? 0 : 1;
}

int cmd_holder(const CliArgs& args) {
    const RunConfig cfg = load_config(args);
    HolderConfig hc = cfg.holder;
    hc.jobs = args.jobs;
    hc.base_data = cfg.build_initial_data(cfg.seed);
    if (hc.perturbations.empty())
        throw UsageError("holder: config lists no perturbations");
    const auto res = holder_experiment(hc, cfg.gas, cfg.box);
    write_file(fs::path(args.out_dir) / "holder.csv", with_hash_csv(res.to_csv(), cfg));
    write_file(fs::path(args.out_dir) / "holder.json", with_hash_json(res.to_json(), cfg));
    bool ok = true;
    for (const auto& r : res.rows) ok = ok && r.ledger_balanced;
    return ok ? 0 : 1;
}

int cmd_calibrate(const CliArgs& args) {
    const RunConfig cfg = load_config(args);
    if (cfg.validate_seeds.empty())
        throw UsageError("calibrate: config lists no seeds (validate.seeds)");

    std::vector<TrajectoryRecord> runs(cfg.validate_seeds.size());
    parallel_for(args.jobs, runs.size(), [&](std::size_t i) {
        SchemeParameters p = cfg.scheme;
        p.seed = cfg.validate_seeds[i];
        runs[i] = evolve(cfg.build_initial_data(cfg.validate_seeds[i]), cfg.validate_t_end,
                         cfg.gas, cfg.box, p);
    });

    ConstantsLedger ledger;
    ledger.config_hash = cfg.config_hash;
    ledger.date = cfg.run_date;
    const std::string suite = "calibrate:" + std::to_string(runs.size()) + "runs";

    const double kappa = calibrate_kappa(runs);
    ledger.constants.push_back({"kappa", {kappa, suite}});

    double c1 = cfg.c1;
    for (int attempt = 0; attempt < 12; ++attempt) {
        bool ok = true;
        try {
            for (const auto& traj : runs) {
                ProfileCursor cursor(traj);
                for (int k = 0; k <= 6 && ok; ++k) {
                    const double t = cfg.validate_t_end * k / 6.0;
                    const Profile& p = cursor.at(t);
                    ok = ok &&
                         check_ratios(p, build_weight(p, cfg.gas, cfg.box, kappa, c1),
                                      cfg.gas)
                             .all_ok;
                }
                if (!ok) break;
            }
        } catch (const ConfigError&) {
            ok = false;
        }
        if (ok) break;
        c1 *= 0.5;
    }
    ledger.constants.push_back({"c1", {c1, suite}});

    std::vector<std::pair<const TrajectoryRecord*, const TrajectoryRecord*>> pairs;
    for (std::size_t i = 0; i + 1 < runs.size(); i += 2)
        pairs.push_back({&runs[i], &runs[i + 1]});
    if (!pairs.empty()) {
        const auto bc = calibrate_bly(pairs, cfg.gas, cfg.box);
        ledger.constants.push_back({"kappa1", {bc.kappa1, suite}});
        ledger.constants.push_back({"kappa2", {bc.kappa2, suite}});
    }

    const double alpha = cfg.box.min_char_speed(cfg.gas) / 2.0;
    ledger.constants.push_back({"alpha", {alpha, suite}});
    ledger.constants.push_back({"lambda_hat", {cfg.scheme.lambda_hat, suite}});

    std::vector<State> range;
    for (const auto& traj : runs)
        for (const auto& u : states_of(traj)) range.push_back(u);
    const auto s = info_speed(cfg.box, range, 6, cfg.scheme.lambda_hat, cfg.gas);
    ledger.constants.push_back({"s_info", {s.s, suite}});

    Rng rng(cfg.seed ^ 0xabcdULL);
    double c_star = 0.0;
    for (int k = 0; k < 400; ++k) {
        Vec3 a, b;
        for (int i = 0; i < 3; ++i) {
            a[i] = cfg.box.lo[i] + (cfg.box.hi[i] - cfg.box.lo[i]) * (0.05 + 0.9 * rng.uniform());
            b[i] = cfg.box.lo[i] + (cfg.box.hi[i] - cfg.box.lo[i]) * (0.05 + 0.9 * rng.uniform());
        }
        const State ua = State::from_vec(a), ub = State::from_vec(b);
        const double d2 = dot(ub - ua, ub - ua);
        if (d2 < 1e-12) continue;
        const double re = relative_entropy(ua, ub, cfg.gas);
        c_star = std::max({c_star, re / d2, d2 / re});
    }
    ledger.constants.push_back({"c_star", {c_star, suite}});

    write_file(fs::path(args.out_dir) / "constants.json", ledger.to_json());
    std::cout << "calibrate: kappa=" << kappa << " c1=" << c1 << " s=" << s.s << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    std::setlocale(LC_ALL, "C");  // '.' decimal in every emitted file
    CLI::App app{"front-tracking laboratory for 1-D Lagrangian gas dynamics"};
    app.require_subcommand(1);
    app.fallthrough();

    CliArgs args;
    app.add_option("--config", args.config_path, "configuration file (JSON)")
        ->required();
    app.add_option("--out", args.out_dir, "output directory");
    app.add_option("--seed", args.seed, "override the config seed")
        ->each([&](const std::string&) { args.seed_set = true; });
    app.add_option("--jobs", args.jobs, "parallel cells for ladder commands");

    auto* riemann = app.add_subcommand("riemann", "solve one Riemann problem");
    auto* evolve_cmd = app.add_subcommand("evolve", "run front tracking");
    auto* validate = app.add_subcommand("validate", "run the invariant suite");
    auto* holder = app.add_subcommand("holder", "run the Hoelder stability experiment");
    auto* calibrate = app.add_subcommand("calibrate", "calibrate scheme constants");

    try {
        app.parse(argc, argv);
        if (riemann->parsed()) return cmd_riemann(args);
        if (evolve_cmd->parsed()) return cmd_evolve(args);
        if (validate->parsed()) return cmd_validate(args);
        if (holder->parsed()) return cmd_holder(args);
        if (calibrate->parsed()) return cmd_calibrate(args);
        return 2;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const SolverError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

#include <doctest.h>

#include <cmath>

#include "ftlab/entropy_monitor.hpp"
#include "ftlab/errors.hpp"
#include "helpers.hpp"

using namespace ftlab;
using ftest::default_box;
using ftest::default_gas;

namespace {

InitialData crossing_data(const GasParameters& g, const StateBox& box, double scale = 1.0) {
    InitialData d;
    d.leftmost = State{1.0, 0.0, 2.5};
    State a = hugoniot_locus(d.leftmost, g, 3, -0.02 * scale, box).state;
    d.jumps.push_back({-0.4, a});
    State b = contact_curve(a, g, 0.03 * scale, box).state;
    d.jumps.push_back({0.1, b});
    State c = rarefaction_curve(b, g, 1, 0.01 * scale, box).state;
    d.jumps.push_back({0.5, c});
    return d;
}

std::vector<State> box_grid(const StateBox& box, int n) {
    std::vector<State> out;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                out.push_back(State::from_vec(
                    Vec3{{box.lo[0] + (box.hi[0] - box.lo[0]) * i / (n - 1.0),
                          box.lo[1] + (box.hi[1] - box.lo[1]) * j / (n - 1.0),
                          box.lo[2] + (box.hi[2] - box.lo[2]) * k / (n - 1.0)}}));
    return out;
}

Front shock_front(const GasParameters& g, const StateBox& box, const State& left,
                  int family, double sigma) {
    const auto pt = hugoniot_locus(left, g, family, sigma, box);
    Front f;
    f.family = family;
    f.kind = FrontKind::shock;
    f.left_state = left;
    f.right_state = pt.state;
    f.sigma = sigma;
    f.s0 = norm(pt.state - left);
    f.nominal_speed = f.speed = pt.speed;
    return f;
}

}  // namespace

TEST_CASE("info_speed: dominates lambda_hat and stabilizes under refinement") {
    const auto g = default_gas();
    const auto box = default_box();
    const auto range = box_grid(box, 4);
    CHECK_THROWS_AS(info_speed(box, {}, 4, 2.5, g), UsageError);

    const auto s1 = info_speed(box, range, 6, 2.5, g);
    CHECK(s1.s > 2.5);
    CHECK(s1.s >= 1.05 * s1.raw_max);
    const auto s2 = info_speed(box, range, 12, 2.5, g);
    CHECK(std::abs(s2.s - s1.s) <= 0.02 * s2.s);  // < 2% under grid doubling

    // certificate pair attains the sampled maximum
    const double ratio = std::abs(relative_flux(s1.cert_a, s1.cert_b, g)) /
                         relative_entropy(s1.cert_a, s1.cert_b, g);
    CHECK(ratio == doctest::Approx(s1.raw_max));
}

TEST_CASE("dissipation vanishes when traces equal the front's own states") {
    const auto g = default_gas();
    const auto box = default_box();
    const auto f = shock_front(g, box, State{1.0, 0.0, 2.5}, 3, -0.05);
    const auto d = dissipation_at_front(f.left_state, f.right_state, f, 1.0, 1.05,
                                        rh_speed(f, g), g);
    CHECK(d.value == 0.0);
    CHECK(d.rh == doctest::Approx(f.nominal_speed).epsilon(1e-9));
}

TEST_CASE("contact dissipation with temperature weights is never positive") {
    const auto g = default_gas();
    const auto box = default_box();
    const State left{1.0, 0.05, 2.6};
    const auto pt = contact_curve(left, g, 0.06, box);
    Front contact;
    contact.family = 2;
    contact.kind = FrontKind::contact;
    contact.left_state = left;
    contact.right_state = pt.state;
    contact.s0 = norm(pt.state - left);
    const double th_l = complete_thermo(left, g).theta;
    const double th_r = complete_thermo(pt.state, g).theta;

    Rng rng(71);
    int positive = 0;
    for (int k = 0; k < 1000; ++k) {
        // admissible traces of a weak solution at a standing contact: either a
        // common value, or a stationary jump with matched p and w
        State v = ftest::sample_state(rng, box, 0.1);
        State u_minus = v, u_plus = v;
        if (k % 2 == 1) {
            const auto tv = complete_thermo(v, g);
            const double tau2 = rng.uniform(box.lo[0] * 1.05, box.hi[0] * 0.95);
            u_plus = state_from_primitives(tau2, v.w, tv.p, g);
        }
        const auto d = dissipation_at_front(u_minus, u_plus, contact, th_l, th_r, 0.0, g);
        if (d.value > 1e-13) ++positive;
    }
    CHECK(positive == 0);
}

TEST_CASE("shock dissipation under the trace-driven rule is strictly negative") {
    const auto g = default_gas();
    const auto box = default_box();
    const double c1 = 1.0;
    const State base{1.0, 0.0, 2.5};

    for (int family : {1, 3}) {
        const auto f = shock_front(g, box, base, family, -0.06);
        const double s0 = f.s0;
        const double lam = rh_speed(f, g);
        const double a1 = 1.0;
        const double a2 = family == 1 ? 1.0 - c1 * s0 : 1.0 + c1 * s0;
        const double gain = 0.25;
        const double alpha = box.min_char_speed(g) / 2.0;

        Rng rng(73 + family);
        double worst_ratio = 1e300;
        int positive = 0;
        for (int k = 0; k < 400; ++k) {
            // traces of an entropy solution along the shift curve are a.e.
            // equal on both sides; sample that common value near the shock
            const Vec3 dv{{rng.uniform(-0.02, 0.02), rng.uniform(-0.02, 0.02),
                           rng.uniform(-0.02, 0.02)}};
            const State base_side = k % 2 == 0 ? f.left_state : f.right_state;
            const State v = compose_curves(base_side, g, dv, CurveChart::physical_fan, box);
            const double imbalance = a2 * relative_entropy(v, f.right_state, g) -
                                     a1 * relative_entropy(v, f.left_state, g);
            const double h_dot = clip_to_shift_window(
                family, lam + imbalance / (2.0 * gain * a2 * s0), alpha, 4.0);
            const auto d = dissipation_at_front(v, v, f, a1, a2, h_dot, g);
            if (d.value > 0.0) ++positive;
            const double dev = h_dot - lam;
            if (std::abs(dev) > 1e-12)
                worst_ratio = std::min(worst_ratio, -d.value / (a2 * s0 * dev * dev));
        }
        CHECK(positive == 0);
        MESSAGE("family ", family, " empirical shock-dissipation K: ", worst_ratio);
        CHECK(worst_ratio > 0.0);
    }
}

TEST_CASE("weighted energy: zero at equality and closed-form offset cell") {
    const auto g = default_gas();
    const auto box = default_box();

    Profile psi;
    psi.leftmost = State{1.0, 0.0, 2.5};
    WeightProfile w;
    w.levels = {1.0};

    GridProfile same = sample_to_grid(psi, -1.0, 1.0, 64);
    CHECK(weighted_energy(same, psi, w, -1.0, 1.0, g).value == 0.0);

    Profile offset_profile = psi;
    offset_profile.leftmost = State{1.02, 0.0, 2.5};
    GridProfile off = sample_to_grid(offset_profile, -1.0, 1.0, 64);
    const double want = 2.0 * relative_entropy(offset_profile.leftmost, psi.leftmost, g);
    const auto e = weighted_energy(off, psi, w, -1.0, 1.0, g);
    CHECK(e.value == doctest::Approx(want).epsilon(1e-12));

    // refinement halving moves the value by less than the reported bound
    SchemeParameters params;
    params.nu = 1e-2;
    params.seed = 75;
    auto traj = evolve(crossing_data(g, box), 0.6, g, box, params);
    const Profile up = traj.profile_at(0.5);
    const auto wfull = build_weight(psi, g, box, 8.0, 1.0);
    const GridProfile g1 = sample_to_grid(up, -2.0, 2.0, 200);
    const GridProfile g2 = sample_to_grid(up, -2.0, 2.0, 400);
    const auto e1 = weighted_energy(g1, psi, wfull, -2.0, 2.0, g);
    const auto e2 = weighted_energy(g2, psi, wfull, -2.0, 2.0, g);
    CHECK(std::abs(e1.value - e2.value) <= e1.quad_bound + e2.quad_bound);
}

TEST_CASE("profile distances: exact piecewise integrals") {
    const auto g = default_gas();
    const auto box = default_box();
    Profile a, b;
    a.leftmost = b.leftmost = State{1.0, 0.0, 2.5};
    // b jumps to an offset state on [0, 1]
    const State off{1.1, 0.0, 2.5};
    Front f1;
    f1.position = 0.0;
    f1.left_state = b.leftmost;
    f1.right_state = off;
    f1.s0 = norm(off - b.leftmost);
    Front f2;
    f2.position = 1.0;
    f2.left_state = off;
    f2.right_state = b.leftmost;
    f2.s0 = f1.s0;
    b.fronts = {f1, f2};
    (void)g;
    (void)box;
    CHECK(l1_distance(a, b, -2.0, 2.0) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(l2_distance(a, b, -2.0, 2.0) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(linf_distance(a, b, -2.0, 2.0) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(l2_distance(a, b, 2.0, 3.0) == 0.0);
}

TEST_CASE("quadrilateral audit: identical trajectories balance at zero") {
    const auto g = default_gas();
    const auto box = default_box();
    SchemeParameters params;
    params.nu = 2e-3;
    params.seed = 77;
    auto traj = evolve(crossing_data(g, box, 0.5), 0.5, g, box, params);
    const auto s = info_speed(box, box_grid(box, 4), 5, params.lambda_hat, g);
    auto res = quadrilateral_audit(traj, traj, 8.0, 1.0, 3.0, 0.5, s.s);
    CHECK(res.balanced);
    // gridded u against the exact psi leaves only quadrature slivers
    CHECK(res.buckets.e_initial <= 1e-5);
    CHECK(res.buckets.e_terminal <= 1e-5);
    CHECK(res.buckets.shock_dissipation <= 1e-9);
    CHECK(res.to_json().find("\"balanced\":true") != std::string::npos);
}

TEST_CASE("quadrilateral audit: fine reference against shifted coarse run") {
    const auto g = default_gas();
    const auto box = default_box();
    const auto data = crossing_data(g, box, 0.5);

    SchemeParameters fine;
    fine.nu = 5e-4;
    fine.seed = 79;
    auto u_traj = evolve(data, 0.5, g, box, fine);

    SchemeParameters coarse;
    coarse.nu = 5e-3;
    coarse.seed = 80;
    const double alpha = box.min_char_speed(g) / 2.0;
    TraceDrivenShift shift(u_traj, 1.0, 1.0, alpha, coarse.lambda_hat);
    auto psi_traj = evolve(data, 0.5, g, box, coarse, &shift);

    const auto s = info_speed(box, box_grid(box, 4), 5, coarse.lambda_hat, g);
    auto res = quadrilateral_audit(u_traj, psi_traj, 8.0, 1.0, 3.0, 0.5, s.s);
    CHECK(res.buckets.e_initial >= 0.0);
    CHECK(res.buckets.boundary_flux <= 1e-12);
    CHECK(res.k_ledger >= 0.0);
    CHECK(res.worst_event_rise <= 1e-9);
    MESSAGE("ledger: e0=", res.buckets.e_initial, " eT=", res.buckets.e_terminal,
            " B2=", res.buckets.shock_dissipation, " np=", res.buckets.np_sup,
            " K=", res.k_ledger);
    double worst_needed = 0.0;
    for (const auto& slab : res.slabs) worst_needed = std::max(worst_needed, slab.needed_k);
    MESSAGE("worst slab needed_k: ", worst_needed);
    CHECK(res.balanced);
}

TEST_CASE("rarefaction dissipation bound against a constant reference") {
    const auto g = default_gas();
    const auto box = default_box();
    const State u_l{1.0, 0.0, 2.5};

    InitialData constant;
    constant.leftmost = u_l;
    SchemeParameters params;
    params.nu = 1e-2;
    params.seed = 81;
    auto traj = evolve(constant, 1.0, g, box, params);

    double prev_ratio = -1.0;
    for (double sigma : {0.08, 0.04, 0.02, 0.01}) {
        const double v_mid = lambda_family(u_l, g, 3) + 0.5 * sigma;
        auto res = rarefaction_dissipation_check(traj, u_l, 3, sigma, v_mid, 1.0, g, box,
                                                 1e-2);
        // u == u_L: both sides are O(delta |du|); the ratio stays bounded and
        // shrinks roughly linearly with delta
        CHECK(res.lhs <= std::max(res.ratio, 1.0) * res.delta * res.du * res.t + 1e-12);
        if (prev_ratio > 0.0 && res.ratio > 1e-9)
            CHECK(res.ratio <= prev_ratio);  // decreasing with delta
        prev_ratio = std::max(res.ratio, 1e-9);
    }
    // trivial case: zero fan width
    auto zero = rarefaction_dissipation_check(traj, u_l, 3, 0.0,
                                              lambda_family(u_l, g, 3), 1.0, g, box, 1e-2);
    CHECK(zero.lhs == 0.0);
    CHECK(zero.du == 0.0);
}

TEST_CASE("total entropy over a fixed window is non-increasing up to O(nu)") {
    const auto g = default_gas();
    const auto box = default_box();
    SchemeParameters params;
    params.nu = 2e-3;
    params.seed = 85;
    auto traj = evolve(crossing_data(g, box), 1.0, g, box, params);

    auto eta_total = [&](const Profile& p, double x_lo, double x_hi) {
        double s = 0.0;
        std::vector<double> cuts{x_lo};
        for (const auto& f : p.fronts)
            if (f.position > x_lo && f.position < x_hi) cuts.push_back(f.position);
        cuts.push_back(x_hi);
        for (std::size_t k = 0; k + 1 < cuts.size(); ++k)
            s += eta(p.state_at(0.5 * (cuts[k] + cuts[k + 1])), g) *
                 (cuts[k + 1] - cuts[k]);
        return s;
    };

    ProfileCursor cursor(traj);
    const double s0 = eta_total(cursor.at(0.0), -6.0, 6.0);
    for (double t = 0.1; t <= 1.0; t += 0.1) {
        const double st = eta_total(cursor.at(t), -6.0, 6.0);
        CHECK(st <= s0 + 20.0 * params.nu * (1.0 + t));
    }
}

TEST_CASE("holder experiment: zero perturbation gives zero distances") {
    const auto g = default_gas();
    const auto box = default_box();
    HolderConfig cfg;
    cfg.base_data = crossing_data(g, box, 0.4);
    cfg.perturbations = {0.0};
    cfg.nu_fine = 2e-3;
    cfg.nu_psi = 5e-3;
    cfg.R = 2.5;
    cfg.tau = 0.4;
    cfg.grid_cells = 300;
    cfg.trace_dt = 5e-3;
    auto res = holder_experiment(cfg, g, box);
    REQUIRE(res.rows.size() == 1);
    CHECK(res.rows[0].l2_initial == 0.0);
    CHECK(res.rows[0].l2_terminal == 0.0);
}

TEST_CASE("holder experiment: nu refinement moves terminal distances by O(nu)") {
    const auto g = default_gas();
    const auto box = default_box();
    HolderConfig cfg;
    cfg.base_data = crossing_data(g, box, 0.4);
    cfg.perturbations = {0.015};
    cfg.nu_psi = 5e-3;
    cfg.R = 2.5;
    cfg.tau = 0.4;
    cfg.grid_cells = 300;
    cfg.trace_dt = 5e-3;
    cfg.nu_fine = 4e-3;
    const auto coarse = holder_experiment(cfg, g, box);
    cfg.nu_fine = 2e-3;
    const auto fine = holder_experiment(cfg, g, box);
    const double change = std::abs(coarse.rows[0].l2_terminal - fine.rows[0].l2_terminal);
    CHECK(change <= 10.0 * 4e-3);
    CHECK(fine.rows[0].l2_terminal > 0.0);
}

TEST_CASE("holder experiment: small ladder runs end to end") {
    const auto g = default_gas();
    const auto box = default_box();
    HolderConfig cfg;
    cfg.base_data = crossing_data(g, box, 0.4);
    cfg.perturbations = {0.02, 0.01};
    cfg.nu_fine = 2e-3;
    cfg.nu_psi = 5e-3;
    cfg.R = 2.5;
    cfg.tau = 0.4;
    cfg.grid_cells = 300;
    cfg.trace_dt = 5e-3;
    auto res = holder_experiment(cfg, g, box);
    REQUIRE(res.rows.size() == 2);
    for (const auto& r : res.rows) {
        CHECK(r.l2_initial > 0.0);
        CHECK(r.l2_terminal > 0.0);
        CHECK(r.l2_terminal <= r.l2_pipeline_bound + 1e-9);
        CHECK(r.ledger_balanced);
    }
    // larger perturbation, larger distances
    CHECK(res.rows[0].l2_initial > res.rows[1].l2_initial);
    CHECK(res.k_envelope > 0.0);
    CHECK(res.to_csv().rfind("perturbation,", 0) == 0);
    CHECK(res.to_json().find("fitted_exponent") != std::string::npos);
}

#include "ftlab/wave_curves.hpp"

#include <cmath>
#include <stdexcept>

#include "ftlab/errors.hpp"
#include "ftlab/rk45.hpp"

namespace ftlab {

namespace {

double sound_speed(const State& u, const GasParameters& g) {
    const double p = (g.gamma - 1.0) * u.internal_energy() / u.tau;
    return std::sqrt(g.gamma * p / u.tau);
}

}  // namespace

double lambda_family(const State& u, const GasParameters& g, int family) {
    switch (family) {
        case 1: return -sound_speed(u, g);
        case 2: return 0.0;
        case 3: return sound_speed(u, g);
        default: throw UsageError("lambda_family: family must be 1, 2 or 3");
    }
}

Vec3 grad_lambda_family(const State& u, const GasParameters& g, int family) {
    if (family == 2) return Vec3{};
    const double c = sound_speed(u, g);
    const double e = u.internal_energy();
    const Vec3 g3{{-c / u.tau, -c * u.w / (2.0 * e), c / (2.0 * e)}};
    return family == 3 ? g3 : -g3;
}

EigenSystem eigen(const State& u, const GasParameters& g) {
    require_valid(u, "eigen");
    const double c = sound_speed(u, g);
    if (!(c > 0.0)) throw std::domain_error("eigen: degenerate state, zero sound speed");
    const double p = (g.gamma - 1.0) * u.internal_energy() / u.tau;

    // (Df - lambda I) r = 0 has r = (1, -lambda, -p - lambda w) up to scale.
    const double scale = 2.0 * u.tau / (c * (g.gamma + 1.0));
    EigenSystem es;
    es.lambdas = Vec3{{-c, 0.0, c}};
    es.r[0] = scale * Vec3{{1.0, c, -p + c * u.w}};
    es.r[2] = scale * Vec3{{-1.0, c, p + c * u.w}};
    Vec3 r2{{1.0, 0.0, p / (g.gamma - 1.0)}};
    es.r[1] = (1.0 / norm(r2)) * r2;
    return es;
}

namespace {

void check_in_box(const State& u, const StateBox& box, double last_sigma, const char* who) {
    if (!box.contains(u, 1e-12))
        throw CurveRangeError(std::string(who) + ": curve exits the state box", last_sigma);
}

// Newton solve of F(u, s) = (f(u) - f(u0) - s (u - u0), lambda_i(u) - target) = 0.
// The Jacobian column in s degenerates at u = u0, so callers never start here
// with sigma = 0.
bool rh_newton(const State& u0, const GasParameters& g, int family, double lambda_target,
               State& u, double& s, double tol, int max_iter) {
    const Vec3 f0 = flux(u0, g);
    for (int it = 0; it < max_iter; ++it) {
        const Vec3 du = u - u0;
        const Vec3 rh = flux(u, g) - f0 - s * du;
        const double lam = lambda_family(u, g, family) - lambda_target;
        const double res = std::max(norm_inf(rh), std::abs(lam));
        if (res < tol) return true;

        const Mat3 df = flux_jacobian(u, g);
        const Vec3 gl = grad_lambda_family(u, g, family);
        double a[4][4], b[4], step[4];
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) a[i][j] = df[i][j] - (i == j ? s : 0.0);
            a[i][3] = -du[i];
            b[i] = -rh[i];
        }
        for (int j = 0; j < 3; ++j) a[3][j] = gl[j];
        a[3][3] = 0.0;
        b[3] = -lam;
        if (!solve_dense<4>(a, b, step)) return false;

        // Backtracking on the residual norm keeps large continuation steps safe.
        double damp = 1.0;
        for (int bt = 0; bt < 30; ++bt) {
            State cand{u.tau + damp * step[0], u.w + damp * step[1],
                       u.e_total + damp * step[2]};
            const double cs = s + damp * step[3];
            if (cand.tau > 0.0 && cand.internal_energy() > 0.0) {
                const Vec3 crh = flux(cand, g) - f0 - cs * (cand - u0);
                const double clam = lambda_family(cand, g, family) - lambda_target;
                if (std::max(norm_inf(crh), std::abs(clam)) < res) {
                    u = cand;
                    s = cs;
                    break;
                }
            }
            damp *= 0.5;
            if (bt == 29) return false;
        }
    }
    const Vec3 rh = flux(u, g) - f0 - s * (u - u0);
    return std::max(norm_inf(rh), std::abs(lambda_family(u, g, family) - lambda_target)) < tol;
}

}  // namespace

WaveCurvePoint hugoniot_locus(const State& u0, const GasParameters& g, int family,
                              double sigma, const StateBox& box) {
    if (family != 1 && family != 3)
        throw UsageError("hugoniot_locus: family must be 1 or 3");
    require_valid(u0, "hugoniot_locus");
    const double lam0 = lambda_family(u0, g, family);
    const EigenSystem es = eigen(u0, g);

    if (std::abs(sigma) <= 1e-7) {
        // First-order point; RH and normalization residuals are O(sigma^2).
        State u = State::from_vec(u0.vec() + sigma * es.r[family - 1]);
        check_in_box(u, box, 0.0, "hugoniot_locus");
        return WaveCurvePoint{u, sigma, lam0 + 0.5 * sigma, family, WaveKind::shock};
    }

    const int steps = std::max(1, static_cast<int>(std::ceil(std::abs(sigma) / 0.02)));
    const double dsig = sigma / steps;
    State u = u0;
    double s = lam0;
    double sig_prev = 0.0;
    for (int k = 1; k <= steps; ++k) {
        const double sig_k = sigma * (static_cast<double>(k) / steps);
        // Predictor along the tangent; shock speed tracks the mean lambda.
        State guess = State::from_vec(u.vec() + (sig_k - sig_prev) * eigen(u, g).r[family - 1]);
        double s_guess = (k == 1) ? lam0 + 0.5 * sig_k : s + 0.5 * dsig;
        if (!rh_newton(u0, g, family, lam0 + sig_k, guess, s_guess, 1e-13, 60))
            throw SolverError("hugoniot_locus: Newton failed at sigma=" + std::to_string(sig_k),
                              0.0, 60);
        u = guess;
        s = s_guess;
        check_in_box(u, box, sig_prev, "hugoniot_locus");
        sig_prev = sig_k;
    }
    return WaveCurvePoint{u, sigma, s, family, WaveKind::shock};
}

WaveCurvePoint shock_curve(const State& u0, const GasParameters& g, int family,
                           double sigma, const StateBox& box) {
    if (sigma > 0.0) throw UsageError("shock_curve: sigma must be <= 0");
    return hugoniot_locus(u0, g, family, sigma, box);
}

WaveCurvePoint rarefaction_curve(const State& u0, const GasParameters& g, int family,
                                 double sigma, const StateBox& box) {
    if (family != 1 && family != 3)
        throw UsageError("rarefaction_curve: family must be 1 or 3");
    if (sigma < 0.0) throw UsageError("rarefaction_curve: sigma must be >= 0");
    require_valid(u0, "rarefaction_curve");
    const Vec3 y = integrate_rk45(
        [&](const Vec3& v) { return eigen(State::from_vec(v), g).r[family - 1]; }, u0.vec(),
        sigma, 1e-12);
    State u = State::from_vec(y);
    check_in_box(u, box, 0.0, "rarefaction_curve");
    return WaveCurvePoint{u, sigma, lambda_family(u, g, family), family,
                          WaveKind::rarefaction};
}

WaveCurvePoint contact_curve(const State& u0, const GasParameters& g, double sigma,
                             const StateBox& box) {
    require_valid(u0, "contact_curve");
    // r_2 has constant direction at fixed p, so the integral curve is the
    // straight segment u0 + sigma * r2 and arc length equals |sigma|.
    const Vec3 r2 = eigen(u0, g).r[1];
    State u = State::from_vec(u0.vec() + sigma * r2);
    check_in_box(u, box, 0.0, "contact_curve");
    return WaveCurvePoint{u, sigma, 0.0, 2, WaveKind::contact};
}

State apply_curve(const State& u0, const GasParameters& g, int family, double sigma,
                  CurveChart chart, const StateBox& box) {
    if (family == 2) return contact_curve(u0, g, sigma, box).state;
    if (chart == CurveChart::shock_only || sigma <= 0.0)
        return hugoniot_locus(u0, g, family, sigma, box).state;
    return rarefaction_curve(u0, g, family, sigma, box).state;
}

State compose_curves(const State& u_left, const GasParameters& g, const Vec3& sigmas,
                     CurveChart chart, const StateBox& box) {
    State u = apply_curve(u_left, g, 1, sigmas[0], chart, box);
    u = apply_curve(u, g, 2, sigmas[1], chart, box);
    return apply_curve(u, g, 3, sigmas[2], chart, box);
}

Vec3 solve_wave_coordinates(const State& u_left, const State& u_right, const GasParameters& g,
                            CurveChart chart, const StateBox& box,
                            const RiemannOptions& opts) {
    require_valid(u_left, "solve_wave_coordinates");
    require_valid(u_right, "solve_wave_coordinates");
    const double gap = norm(u_right - u_left);
    if (gap > opts.solvability_threshold)
        throw UsageError("solve_wave_coordinates: |u_L - u_R| exceeds solvability threshold");
    if (gap == 0.0) return Vec3{};

    Vec3 sig = opts.initial_guess;
    auto residual = [&](const Vec3& s) { return compose_curves(u_left, g, s, chart, box) - u_right; };
    Vec3 res;
    try {
        res = residual(sig);
    } catch (const CurveRangeError&) {
        sig = Vec3{};
        res = residual(sig);
    }
    double rnorm = norm(res);
    for (int it = 0; it < opts.max_iterations; ++it) {
        if (rnorm < opts.tol) return sig;
        // Finite-difference Jacobian in the three curve parameters.
        Mat3 jac;
        for (int j = 0; j < 3; ++j) {
            const double h = 1e-7 * std::max(1.0, std::abs(sig[j]));
            Vec3 sp = sig;
            sp[j] += h;
            const Vec3 rp = residual(sp);
            for (int i = 0; i < 3; ++i) jac[i][j] = (rp[i] - res[i]) / h;
        }
        double a[3][3], b[3], step[3];
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) a[i][j] = jac[i][j];
            b[i] = -res[i];
        }
        if (!solve_dense<3>(a, b, step))
            throw SolverError("solve_wave_coordinates: singular Jacobian", rnorm, it);

        double damp = 1.0;
        bool accepted = false;
        for (int bt = 0; bt < 25 && !accepted; ++bt) {
            const Vec3 cand = sig + damp * Vec3{{step[0], step[1], step[2]}};
            try {
                const Vec3 cres = residual(cand);
                if (norm(cres) < rnorm) {
                    sig = cand;
                    res = cres;
                    rnorm = norm(cres);
                    accepted = true;
                }
            } catch (const CurveRangeError&) {
                // shrink and retry from inside the box
            }
            damp *= 0.5;
        }
        if (!accepted)
            throw SolverError("solve_wave_coordinates: line search stalled", rnorm, it);
    }
    if (rnorm < opts.tol) return sig;
    throw SolverError("solve_wave_coordinates: no convergence, residual=" + std::to_string(rnorm),
                      rnorm, opts.max_iterations);
}

RiemannFan solve_riemann(const State& u_left, const State& u_right, const GasParameters& g,
                         const StateBox& box, const RiemannOptions& opts) {
    const Vec3 sig = solve_wave_coordinates(u_left, u_right, g, CurveChart::physical_fan,
                                            box, opts);
    RiemannFan fan;
    fan.sigmas = sig;
    fan.middle_left = apply_curve(u_left, g, 1, sig[0], CurveChart::physical_fan, box);
    fan.middle_right = apply_curve(fan.middle_left, g, 2, sig[1], CurveChart::physical_fan, box);
    fan.wave_kinds = {sig[0] < 0.0 ? WaveKind::shock : WaveKind::rarefaction,
                      WaveKind::contact,
                      sig[2] < 0.0 ? WaveKind::shock : WaveKind::rarefaction};
    const auto speed_of = [&](const State& base, int family, double s) {
        if (s == 0.0) return lambda_family(base, g, family);
        if (s < 0.0) return hugoniot_locus(base, g, family, s, box).speed;
        return lambda_family(base, g, family);  // left fan edge
    };
    fan.speeds = {speed_of(u_left, 1, sig[0]), 0.0, speed_of(fan.middle_right, 3, sig[2])};
    return fan;
}

}  // namespace ftlab

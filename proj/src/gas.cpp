#include "ftlab/gas.hpp"

#include <cmath>
#include <stdexcept>

#include "ftlab/errors.hpp"

namespace ftlab {

GasParameters GasParameters::make(double gamma, double r_bar, double k_bar) {
    if (!(gamma > 1.0)) throw std::domain_error("gas: gamma must exceed 1");
    if (!(r_bar > 0.0)) throw std::domain_error("gas: r_bar must be positive");
    if (!(k_bar > 0.0)) throw std::domain_error("gas: k_bar must be positive");
    GasParameters g;
    g.gamma = gamma;
    g.r_bar = r_bar;
    g.k_bar = k_bar;
    g.c_v = r_bar / (gamma - 1.0);
    return g;
}

void require_valid(const State& u, const char* who) {
    if (!(u.tau > 0.0))
        throw std::domain_error(std::string(who) + ": tau must be positive, got " +
                                std::to_string(u.tau));
    if (!(u.internal_energy() > 0.0))
        throw std::domain_error(std::string(who) +
                                ": internal energy e_total - w^2/2 must be positive, got " +
                                std::to_string(u.internal_energy()));
}

ThermoState complete_thermo(const State& u, const GasParameters& g) {
    require_valid(u, "complete_thermo");
    const double e = u.internal_energy();
    const double p = (g.gamma - 1.0) * e / u.tau;
    const double theta = p * u.tau / g.r_bar;
    const double s = g.c_v * std::log(p * std::pow(u.tau, g.gamma) / g.k_bar);
    return ThermoState{p, theta, s, e};
}

State state_from_primitives(double tau, double w, double p, const GasParameters& g) {
    if (!(tau > 0.0)) throw std::domain_error("state_from_primitives: tau must be positive");
    if (!(p > 0.0)) throw std::domain_error("state_from_primitives: p must be positive");
    const double e = p * tau / (g.gamma - 1.0);
    return State{tau, w, e + 0.5 * w * w};
}

double eta(const State& u, const GasParameters& g) {
    require_valid(u, "eta");
    const double e = u.internal_energy();
    return g.c_v * ((1.0 - g.gamma) * std::log(u.tau) - std::log(e) +
                    std::log(g.k_bar / (g.gamma - 1.0)));
}

Vec3 flux(const State& u, const GasParameters& g) {
    const double p = (g.gamma - 1.0) * u.internal_energy() / u.tau;
    return Vec3{{-u.w, p, u.w * p}};
}

Mat3 flux_jacobian(const State& u, const GasParameters& g) {
    require_valid(u, "flux_jacobian");
    const double e = u.internal_energy();
    const double p = (g.gamma - 1.0) * e / u.tau;
    const double p_tau = -p / u.tau;
    const double p_w = -(g.gamma - 1.0) * u.w / u.tau;
    const double p_e = (g.gamma - 1.0) / u.tau;
    Mat3 a;
    a[0][0] = 0.0;           a[0][1] = -1.0;              a[0][2] = 0.0;
    a[1][0] = p_tau;         a[1][1] = p_w;               a[1][2] = p_e;
    a[2][0] = u.w * p_tau;   a[2][1] = p + u.w * p_w;     a[2][2] = u.w * p_e;
    return a;
}

Vec3 eta_gradient(const State& u, const GasParameters& g) {
    require_valid(u, "eta_gradient");
    const double e = u.internal_energy();
    return Vec3{{g.c_v * (1.0 - g.gamma) / u.tau, g.c_v * u.w / e, -g.c_v / e}};
}

Mat3 eta_hessian(const State& u, const GasParameters& g) {
    require_valid(u, "eta_hessian");
    const double e = u.internal_energy();
    Mat3 h;
    h[0][0] = g.c_v * (g.gamma - 1.0) / (u.tau * u.tau);
    h[1][1] = g.c_v * (1.0 / e + u.w * u.w / (e * e));
    h[1][2] = h[2][1] = -g.c_v * u.w / (e * e);
    h[2][2] = g.c_v / (e * e);
    return h;
}

double relative_entropy(const State& u, const State& v, const GasParameters& g) {
    return eta(u, g) - eta(v, g) - dot(eta_gradient(v, g), u - v);
}

double relative_flux(const State& u, const State& v, const GasParameters& g) {
    require_valid(u, "relative_flux");
    return -dot(eta_gradient(v, g), flux(u, g) - flux(v, g));
}

bool StateBox::contains(const State& u, double slack) const {
    const Vec3 v = u.vec();
    for (int i = 0; i < 3; ++i)
        if (v[i] < lo[i] - slack || v[i] > hi[i] + slack) return false;
    return u.tau > 0.0 && u.internal_energy() > 0.0;
}

namespace {

// theta and c^2 are monotone in each coordinate separately, so box extrema
// sit at corners; w enters through w^2 only.
double min_internal(const StateBox& b) {
    const double w2 = std::max(b.lo[1] * b.lo[1], b.hi[1] * b.hi[1]);
    return b.lo[2] - 0.5 * w2;
}

double max_internal(const StateBox& b) {
    const double w2 = (b.lo[1] <= 0.0 && b.hi[1] >= 0.0)
                          ? 0.0
                          : std::min(b.lo[1] * b.lo[1], b.hi[1] * b.hi[1]);
    return b.hi[2] - 0.5 * w2;
}

}  // namespace

double StateBox::inf_theta(const GasParameters& g) const { return min_internal(*this) / g.c_v; }

double StateBox::half_inf_theta(const GasParameters& g) const { return 0.5 * inf_theta(g); }

double StateBox::max_char_speed(const GasParameters& g) const {
    const double e = max_internal(*this);
    return std::sqrt(g.gamma * (g.gamma - 1.0) * e) / lo[0];
}

double StateBox::min_char_speed(const GasParameters& g) const {
    const double e = min_internal(*this);
    return std::sqrt(g.gamma * (g.gamma - 1.0) * e) / hi[0];
}

void StateBox::validate(const GasParameters& g) const {
    for (int i = 0; i < 3; ++i)
        if (!(lo[i] < hi[i])) throw std::domain_error("state_box: empty box");
    if (!(lo[0] > 0.0)) throw std::domain_error("state_box: tau lower bound must be positive");
    if (!(min_internal(*this) > 0.0))
        throw std::domain_error("state_box: internal energy not positive over the box");
    if (!contains(reference))
        throw std::domain_error("state_box: reference state outside the box");
    if (!(epsilon > 0.0)) throw std::domain_error("state_box: epsilon must be positive");
    if (!(half_inf_theta(g) > 0.0))
        throw std::domain_error("state_box: inf theta must be positive");
}

}  // namespace ftlab

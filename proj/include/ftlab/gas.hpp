#pragma once

#include <optional>
#include <string>

#include "ftlab/vec3.hpp"

namespace ftlab {

// Polytropic gamma-law gas in Lagrangian coordinates. Conserved variables are
// u = (tau, w, e_total) with e_total = w^2/2 + internal energy, and flux
// f(u) = (-w, p, w*p). The entropy pair is eta = -S, q = 0.
struct GasParameters {
    double gamma = 1.4;
    double r_bar = 1.0;
    double k_bar = 1.0;
    double c_v = 2.5;  // always r_bar/(gamma-1); enforced by make()

    static GasParameters make(double gamma, double r_bar = 1.0, double k_bar = 1.0);
};

struct State {
    double tau = 1.0;
    double w = 0.0;
    double e_total = 2.5;

    Vec3 vec() const { return Vec3{{tau, w, e_total}}; }
    static State from_vec(const Vec3& v) { return State{v[0], v[1], v[2]}; }

    double internal_energy() const { return e_total - 0.5 * w * w; }
};

inline Vec3 operator-(const State& a, const State& b) { return a.vec() - b.vec(); }

struct ThermoState {
    double p;
    double theta;
    double s_entropy;
    double e_internal;
};

// Componentwise box in conserved variables; the working set the schemes and
// curve solvers must stay inside. Carries the reference state and smallness
// parameter of the data class.
struct StateBox {
    Vec3 lo{{0.7, -0.3, 2.0}};
    Vec3 hi{{1.4, 0.3, 3.2}};
    State reference{1.0, 0.0, 2.5};
    double epsilon = 0.05;

    bool contains(const State& u, double slack = 0.0) const;
    // J = inf theta / 2; positive for a valid box.
    double half_inf_theta(const GasParameters& g) const;
    double inf_theta(const GasParameters& g) const;
    // sup over the box of the acoustic characteristic speed sqrt(gamma p/tau).
    double max_char_speed(const GasParameters& g) const;
    double min_char_speed(const GasParameters& g) const;
    void validate(const GasParameters& g) const;
};

// Throws std::domain_error naming the offending field when u is unphysical.
void require_valid(const State& u, const char* who = "state");

ThermoState complete_thermo(const State& u, const GasParameters& g);

// Inverse of complete_thermo on the (tau, w, p) chart.
State state_from_primitives(double tau, double w, double p, const GasParameters& g);

// Entropy pair (eta, q) = (-S, 0).
double eta(const State& u, const GasParameters& g);
inline double q_flux(const State&, const GasParameters&) { return 0.0; }

Vec3 flux(const State& u, const GasParameters& g);
Mat3 flux_jacobian(const State& u, const GasParameters& g);

// Gradient/Hessian of eta in the conserved variables (closed form).
Vec3 eta_gradient(const State& u, const GasParameters& g);
Mat3 eta_hessian(const State& u, const GasParameters& g);

// eta(u|v) = eta(u) - eta(v) - grad eta(v).(u - v)  (>= 0, 0 iff u = v).
double relative_entropy(const State& u, const State& v, const GasParameters& g);
// q(u;v) = -grad eta(v).(f(u) - f(v))  (the q(u)-q(v) part vanishes).
double relative_flux(const State& u, const State& v, const GasParameters& g);

}  // namespace ftlab

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "ftlab/errors.hpp"
#include "ftlab/vec3.hpp"

namespace ftlab {

// Adaptive Dormand-Prince 5(4) integrator for short curve integrations in
// state space. Step control on the embedded 4th-order error estimate.
inline Vec3 integrate_rk45(const std::function<Vec3(const Vec3&)>& field, Vec3 y,
                           double length, double tol = 1e-12) {
    if (length == 0.0) return y;
    const double dir = length > 0.0 ? 1.0 : -1.0;
    const double total = std::abs(length);

    // Autonomous field, so the c-nodes drop out of the tableau.
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                            a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    // 4th-order weights (for the error estimate), includes the FSAL stage.
    static constexpr double e1 = 5179.0 / 57600, e3 = 7571.0 / 16695, e4 = 393.0 / 640,
                            e5 = -92097.0 / 339200, e6 = 187.0 / 2100, e7 = 1.0 / 40;

    double s = 0.0;
    double h = std::min(total, 0.05);
    int steps = 0;
    while (s < total) {
        if (++steps > 100000)
            throw SolverError("rk45: step limit exceeded", total - s, steps);
        h = std::min(h, total - s);
        const Vec3 k1 = field(y);
        const Vec3 k2 = field(y + dir * h * a21 * k1);
        const Vec3 k3 = field(y + dir * h * (a31 * k1 + a32 * k2));
        const Vec3 k4 = field(y + dir * h * (a41 * k1 + a42 * k2 + a43 * k3));
        const Vec3 k5 = field(y + dir * h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        const Vec3 k6 =
            field(y + dir * h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        const Vec3 y5 = y + dir * h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        const Vec3 k7 = field(y5);
        const Vec3 y4 =
            y + dir * h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        const double err = norm(y5 - y4);
        const double scale = tol * std::max(1.0, norm(y));
        if (err <= scale || h < 1e-14) {
            y = y5;
            s += h;
        }
        const double grow = err > 0.0 ? 0.9 * std::pow(scale / err, 0.2) : 5.0;
        h *= std::clamp(grow, 0.2, 5.0);
    }
    return y;
}

}  // namespace ftlab

#pragma once

#include <cmath>
#include <functional>

#include "ftlab/gas.hpp"
#include "ftlab/rng.hpp"
#include "ftlab/vec3.hpp"

namespace ftest {

using namespace ftlab;

inline GasParameters default_gas() { return GasParameters::make(1.4, 1.0, 1.0); }

inline StateBox default_box() { return StateBox{}; }

inline double rel_err(double got, double want) {
    return std::abs(got - want) / std::max(1.0, std::abs(want));
}

// Cyclic Jacobi sweep; plenty for symmetric 3x3 spectra in tests.
inline Vec3 sym_eigenvalues(Mat3 a) {
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < 3; ++i)
            for (int j = i + 1; j < 3; ++j) off += a[i][j] * a[i][j];
        if (off < 1e-30) break;
        for (int p = 0; p < 3; ++p) {
            for (int q = p + 1; q < 3; ++q) {
                if (std::abs(a[p][q]) < 1e-300) continue;
                const double phi = 0.5 * std::atan2(2.0 * a[p][q], a[q][q] - a[p][p]);
                const double c = std::cos(phi), s = std::sin(phi);
                Mat3 r;
                for (int i = 0; i < 3; ++i) r[i][i] = 1.0;
                r[p][p] = c; r[q][q] = c; r[p][q] = s; r[q][p] = -s;
                // a <- r^T a r
                Mat3 t;
                for (int i = 0; i < 3; ++i)
                    for (int j = 0; j < 3; ++j) {
                        t[i][j] = 0.0;
                        for (int k = 0; k < 3; ++k) t[i][j] += a[i][k] * r[k][j];
                    }
                for (int i = 0; i < 3; ++i)
                    for (int j = 0; j < 3; ++j) {
                        a[i][j] = 0.0;
                        for (int k = 0; k < 3; ++k) a[i][j] += r[k][i] * t[k][j];
                    }
            }
        }
    }
    return Vec3{{a[0][0], a[1][1], a[2][2]}};
}

inline Vec3 fd_gradient(const std::function<double(const Vec3&)>& f, const Vec3& x,
                        double h = 1e-6) {
    Vec3 g;
    for (int i = 0; i < 3; ++i) {
        Vec3 xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        g[i] = (f(xp) - f(xm)) / (2.0 * h);
    }
    return g;
}

inline Mat3 fd_jacobian(const std::function<Vec3(const Vec3&)>& f, const Vec3& x,
                        double h = 1e-6) {
    Mat3 j;
    for (int c = 0; c < 3; ++c) {
        Vec3 xp = x, xm = x;
        xp[c] += h;
        xm[c] -= h;
        const Vec3 fp = f(xp), fm = f(xm);
        for (int r = 0; r < 3; ++r) j[r][c] = (fp[r] - fm[r]) / (2.0 * h);
    }
    return j;
}

// Uniform sample strictly inside the box (margin in units of box width).
inline State sample_state(Rng& rng, const StateBox& box, double margin = 0.05) {
    Vec3 v;
    for (int i = 0; i < 3; ++i) {
        const double w = box.hi[i] - box.lo[i];
        v[i] = box.lo[i] + w * (margin + (1.0 - 2.0 * margin) * rng.uniform());
    }
    return State::from_vec(v);
}

}  // namespace ftest

#pragma once

#include <array>
#include <cmath>

namespace ftlab {

// Small fixed-size vector/matrix types used for conserved-variable algebra.
struct Vec3 {
    double x[3]{0.0, 0.0, 0.0};

    double& operator[](int i) { return x[i]; }
    double operator[](int i) const { return x[i]; }

    Vec3& operator+=(const Vec3& o) {
        for (int i = 0; i < 3; ++i) x[i] += o.x[i];
        return *this;
    }
    Vec3& operator-=(const Vec3& o) {
        for (int i = 0; i < 3; ++i) x[i] -= o.x[i];
        return *this;
    }
    Vec3& operator*=(double a) {
        for (int i = 0; i < 3; ++i) x[i] *= a;
        return *this;
    }
};

inline Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
inline Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
inline Vec3 operator*(double s, Vec3 a) { return a *= s; }
inline Vec3 operator*(Vec3 a, double s) { return a *= s; }
inline Vec3 operator-(Vec3 a) { return -1.0 * a; }

inline double dot(const Vec3& a, const Vec3& b) {
    return a.x[0] * b.x[0] + a.x[1] * b.x[1] + a.x[2] * b.x[2];
}

inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

inline double norm_inf(const Vec3& a) {
    return std::max({std::abs(a.x[0]), std::abs(a.x[1]), std::abs(a.x[2])});
}

// Row-major 3x3 matrix.
struct Mat3 {
    double m[3][3]{};

    double* operator[](int i) { return m[i]; }
    const double* operator[](int i) const { return m[i]; }
};

inline Vec3 mul(const Mat3& a, const Vec3& v) {
    Vec3 r;
    for (int i = 0; i < 3; ++i)
        r[i] = a[i][0] * v[0] + a[i][1] * v[1] + a[i][2] * v[2];
    return r;
}

inline Mat3 transpose(const Mat3& a) {
    Mat3 t;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) t[i][j] = a[j][i];
    return t;
}

// Solves a small dense linear system in-place via partial-pivot elimination.
// Returns false when the pivot collapses (singular matrix).
template <int N>
bool solve_dense(double a[N][N], double b[N], double out[N]) {
    int piv[N];
    for (int i = 0; i < N; ++i) piv[i] = i;
    for (int col = 0; col < N; ++col) {
        int best = col;
        for (int r = col + 1; r < N; ++r)
            if (std::abs(a[r][col]) > std::abs(a[best][col])) best = r;
        if (std::abs(a[best][col]) < 1e-300) return false;
        if (best != col) {
            for (int j = 0; j < N; ++j) std::swap(a[col][j], a[best][j]);
            std::swap(b[col], b[best]);
        }
        for (int r = col + 1; r < N; ++r) {
            const double f = a[r][col] / a[col][col];
            for (int j = col; j < N; ++j) a[r][j] -= f * a[col][j];
            b[r] -= f * b[col];
        }
    }
    for (int i = N - 1; i >= 0; --i) {
        double s = b[i];
        for (int j = i + 1; j < N; ++j) s -= a[i][j] * out[j];
        out[i] = s / a[i][i];
    }
    return true;
}

}  // namespace ftlab

#pragma once

#include <stdexcept>
#include <string>

namespace ftlab {

// Root-solve failure; carries the residual reached and iteration count.
struct SolverError : std::runtime_error {
    double residual;
    int iterations;
    SolverError(const std::string& what, double res, int iters)
        : std::runtime_error(what), residual(res), iterations(iters) {}
};

// A wave curve left the admissible state box.
struct CurveRangeError : std::range_error {
    double last_valid_sigma;
    CurveRangeError(const std::string& what, double sigma)
        : std::range_error(what), last_valid_sigma(sigma) {}
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace ftlab

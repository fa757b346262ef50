#pragma once

#include <cstdint>
#include <vector>

#include "ftlab/gas.hpp"

namespace ftlab {

enum class FrontKind { shock, rarefaction_step, contact, non_physical };

// Ordering family used by the interaction machinery; non-physical fronts act
// as a fastest fictitious family.
inline constexpr int np_family = 4;

struct Front {
    std::uint64_t id = 0;
    double position = 0.0;
    double speed = 0.0;          // assigned propagation speed (jitter/shift included)
    double nominal_speed = 0.0;  // RH / characteristic / 0 / lambda_hat, before jitter
    int family = 0;              // 1, 2, 3, or np_family
    FrontKind kind = FrontKind::shock;
    State left_state;
    State right_state;
    double sigma = 0.0;  // curve parameter; |du| for non-physical fronts
    double s0 = 0.0;     // |left_state - right_state|

    // Jump norm; the wave strength used by the Glimm and BLY functionals.
    double strength() const { return s0; }
};

// Piecewise-constant snapshot: leftmost state, then one constant region after
// each front. Fronts are kept in list order (positions nondecreasing).
struct Profile {
    double time = 0.0;
    State leftmost;
    std::vector<Front> fronts;

    const State& state_left_of(std::size_t front_index) const {
        return front_index == 0 ? leftmost : fronts[front_index - 1].right_state;
    }

    // Value at x; at a front position returns the right limit.
    const State& state_at(double x) const;

    // Left limit at x (fronts strictly left of x decide).
    const State& state_before(double x) const;

    double total_variation() const;

    // Chain consistency, ordering, and box membership.
    void validate(const StateBox& box) const;
};

}  // namespace ftlab

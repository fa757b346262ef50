#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ftlab/bly.hpp"
#include "ftlab/entropy_monitor.hpp"
#include "ftlab/front_tracking.hpp"

namespace ftlab {

// One structured, versioned, fail-closed configuration file drives every
// command; unknown keys are rejected so stale configs cannot silently drift.
struct RunConfig {
    int schema_version = 1;
    std::uint64_t seed = 1;
    std::string run_date;  // optional provenance string, embedded verbatim

    GasParameters gas = GasParameters::make(1.4, 1.0, 1.0);
    StateBox box;
    SchemeParameters scheme;
    double c1 = 1.0;
    BlyConstants bly;

    // shift policy: none | constant_offset | trace_driven
    std::string shift_policy = "none";
    double shift_offset = 0.02;
    double shift_gain = 0.25;

    // initial data description (kind + parameters, see from_json)
    std::string data_kind = "constant";
    State data_state;                 // constant
    InitialData data_steps;           // steps
    struct WaveJump {
        double x;
        int family;
        double sigma;
    };
    std::vector<WaveJump> data_waves;  // waves
    double data_amp = 0.02, data_width = 0.6;  // bump / wild
    int data_component = 0;
    double data_support_lo = -1.0, data_support_hi = 1.0;
    int data_random_jumps = 4;
    double data_random_sigma = 0.009;

    double evolve_t_end = 1.0;
    std::vector<double> profile_times;

    State riemann_left, riemann_right;

    std::vector<std::uint64_t> validate_seeds;
    double validate_t_end = 1.0;
    double validate_sample_dt = 0.01;

    HolderConfig holder;

    std::string config_hash;  // FNV-1a of the canonical dump, set by parser

    static RunConfig from_json_text(const std::string& text);
    InitialData build_initial_data(std::uint64_t seed_override) const;
    std::unique_ptr<ShiftPolicy> build_shift_policy(const TrajectoryRecord* reference) const;
};

std::uint64_t fnv1a64(const std::string& bytes);
std::string hash_hex(std::uint64_t h);

struct CalibratedConstant {
    double value;
    std::string suite;
};

struct ConstantsLedger {
    std::string config_hash;
    std::string date;
    std::vector<std::pair<std::string, CalibratedConstant>> constants;
    std::string to_json() const;
};

}  // namespace ftlab

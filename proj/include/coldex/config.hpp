#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "coldex/binary_md.hpp"
#include "coldex/collision_mc.hpp"
#include "coldex/rate_inference.hpp"
#include "coldex/spin_algebra.hpp"
#include "coldex/trap_model.hpp"

namespace coldex {

struct SpinConfig {
    spin::SpinSystem system;
    int two_f_initial = 4; // prepared manifold of the neutral atom
    int two_f_exit = 2;    // detected exit manifold
};

struct MdRunConfig {
    md::MdConfig md;
    long target_contacts = 2500;
    long angle_samples = 200000;
    int angle_bins = 30;
};

struct InferenceConfig {
    double eta = 0.8;
    std::string measurements_csv;
    std::string pmf_csv;
    infer::ValueWithError kappa{0.29, 0.02};
    double background_pb = 0.0;
};

struct FitCurveRef {
    std::string crystal;
    std::string csv;
};

struct FitConfig {
    infer::FitOptions options;
    std::vector<FitCurveRef> curves;
    long model_trials = 50000;
};

/// Whole-run configuration. Parsing is strict: unknown keys anywhere are
/// rejected, and every physical quantity carries a unit suffix in its key.
struct RunConfig {
    std::uint64_t seed = 1;
    std::string output_dir = ".";
    int threads = 0;

    SpinConfig spin;
    trap::TrapConfig trap;
    std::optional<double> field_per_volt;
    mc::PassageConfig passage;
    std::vector<double> emm_grid_mk;
    MdRunConfig md;
    InferenceConfig inference;
    FitConfig fit;
};

/// Built-in defaults (the bundled experiment configuration).
RunConfig default_config();

/// Load and strictly validate a JSON config ('//' comments allowed).
/// Relative file paths inside the config resolve against its directory.
RunConfig load_config(const std::string& path);

} // namespace coldex

#pragma once

#include <string>
#include <vector>

#include "delib/config.hpp"

namespace delib {

/// Override root for experiment artifacts; run directories land under
/// $DELIB_OUTPUT_ROOT/<output_dir> when the variable is set.
inline constexpr const char* kOutputRootEnv = "DELIB_OUTPUT_ROOT";

struct RunSummary {
    double eta = 0.0;
    std::uint64_t seed = 0;
    double final_return = 0.0;            // mean over the last tenth of episodes
    double final_mean_termination = 0.0;  // same window
    double auc = 0.0;                     // mean episode return over the whole run
    double greedy_mu_value = 0.0;         // exact value of the learned greedy policy
    long steps = 0;
    std::string dir;
};

std::string resolve_output_root(const ExperimentConfig& cfg);

/// Train one (eta, seed) cell and write metrics.csv, params.json,
/// run.json, and final_trajectory.json into its own subdirectory.
RunSummary run_single(const ExperimentConfig& cfg, double eta, std::uint64_t seed);

/// `run`: one cell using the config's scalar eta/seed. `sweep`: the full
/// eta_sweep x seeds grid. Both finish by writing summary.json.
std::vector<RunSummary> run_experiment(const ExperimentConfig& cfg, bool sweep);

/// Collect completed runs under `dir` into sweep.csv (per-run rows plus
/// per-eta means) and a gnuplot data file of termination-vs-step curves.
/// Missing or corrupt run files are reported in `warnings` and skipped.
int aggregate_sweep(const std::string& dir, std::vector<std::string>* warnings = nullptr);

}  // namespace delib

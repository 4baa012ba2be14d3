#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "delib/a2oc.hpp"

namespace delib {

/// One experiment: an environment, learner settings, and the (eta, seed)
/// grid. Loaded from a flat key-value file; [section] headers are allowed
/// for readability but carry no meaning.
struct ExperimentConfig {
    std::string environment = "four_rooms";  // four_rooms | maze
    std::string layout_file;                 // required for maze
    double slip = 1.0 / 3.0;
    A2OCConfig a2oc;
    std::vector<double> eta_sweep;
    std::vector<std::uint64_t> seeds;
    std::string output_dir = "runs";

    void validate() const;

    static ExperimentConfig parse(const std::string& text);
    static ExperimentConfig load_file(const std::string& path);
};

}  // namespace delib

#pragma once

#include <string>

#include "delib/gridworld.hpp"
#include "delib/options.hpp"

namespace delib {

enum class RenderMode { Options, Terminations };

struct RenderResult {
    std::string text;  // ASCII map
    std::string svg;   // standalone SVG document
    long switches = 0;
    long switches_at_intersections = 0;

    /// Fraction of option switches that landed on an intersection cell;
    /// 0 when the trajectory has no switches.
    double intersection_switch_fraction() const {
        return switches > 0 ? static_cast<double>(switches_at_intersections) / switches : 0.0;
    }
};

/// Pure function of (world, trajectory, mode). Options mode marks each
/// visited cell with the digit of the option last active there;
/// terminations mode marks only the cells where a switch occurred.
RenderResult render_trajectory(const GridWorld& world, const Trajectory& traj, RenderMode mode);

}  // namespace delib

#pragma once

#include <string>
#include <vector>

#include "delib/mdp.hpp"

namespace delib {

/// ASCII grid layout: '#' wall, '.' floor, 'G' goal, 'S' start.
struct GridLayout {
    int rows = 0;
    int cols = 0;
    std::vector<char> cells;       // row-major, one of '#', '.', 'G', 'S'
    double slip = 0.0;             // chance the chosen action is replaced uniformly
    double step_reward = 0.0;
    double goal_reward = 1.0;

    char at(int r, int c) const { return cells[static_cast<std::size_t>(r) * cols + c]; }
    bool walkable(int r, int c) const {
        return r >= 0 && r < rows && c >= 0 && c < cols && at(r, c) != '#';
    }

    static GridLayout parse(const std::string& ascii);
    static GridLayout load_file(const std::string& path);
};

/// A layout compiled to an MDP, plus the cell<->state bijection the
/// renderer and tests need. Actions are N,S,E,W in that order.
struct GridWorld {
    GridLayout layout;
    Mdp mdp;
    std::vector<int> cell_to_state;  // rows*cols, -1 for walls
    std::vector<int> state_to_cell;  // walkable cells in row-major order
    int start_state = -1;
    int goal_state = -1;

    int state_row(int s) const { return state_to_cell[s] / layout.cols; }
    int state_col(int s) const { return state_to_cell[s] % layout.cols; }

    /// Walkable cells with >= 3 walkable neighbors, as state indices.
    std::vector<int> intersections() const;
};

/// Classic 11x11 four-rooms map (104 walkable cells), absorbing goal.
GridWorld build_four_rooms(double slip, double gamma);

/// Compile an arbitrary connected layout. Throws on disconnected floors
/// or missing goal.
GridWorld build_intersection_maze(const GridLayout& layout, double gamma);

/// Default corridor maze: 3 horizontal x 3 vertical corridors.
GridLayout make_ladder_maze();

}  // namespace delib

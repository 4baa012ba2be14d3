#include "delib/render.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace delib {

namespace {

const char* kOptionColors[] = {"#e41a1c", "#377eb8", "#4daf4a", "#984ea3",
                               "#ff7f00", "#a65628", "#f781bf", "#999999"};
constexpr int kNColors = 8;
constexpr int kCell = 20;  // svg pixels per grid cell

}  // namespace

RenderResult render_trajectory(const GridWorld& world, const Trajectory& traj, RenderMode mode) {
    const GridLayout& lay = world.layout;
    const int n_cells = lay.rows * lay.cols;

    // -1: untouched; in options mode, the option last active at the cell;
    // in terminations mode, the option whose termination fired there.
    std::vector<int> mark(n_cells, -1);
    const std::vector<int> crossing_cells = world.intersections();
    std::set<int> intersections(crossing_cells.begin(), crossing_cells.end());

    RenderResult out;
    for (std::size_t k = 0; k < traj.steps.size(); ++k) {
        const TrajectoryStep& st = traj.steps[k];
        if (st.s < 0 || st.s >= static_cast<int>(world.state_to_cell.size()))
            throw std::out_of_range("render_trajectory: state outside layout");
        if (mode == RenderMode::Options) mark[world.state_to_cell[st.s]] = st.o;
        if (st.switched && k + 1 < traj.steps.size()) {
            const int arrival = traj.steps[k + 1].s;
            if (arrival < 0 || arrival >= static_cast<int>(world.state_to_cell.size()))
                throw std::out_of_range("render_trajectory: state outside layout");
            ++out.switches;
            if (intersections.count(arrival)) ++out.switches_at_intersections;
            if (mode == RenderMode::Terminations) mark[world.state_to_cell[arrival]] = st.o;
        }
    }

    std::ostringstream text;
    for (int r = 0; r < lay.rows; ++r) {
        for (int c = 0; c < lay.cols; ++c) {
            const char base = lay.at(r, c);
            const int m = mark[r * lay.cols + c];
            if (base == '#')
                text << '#';
            else if (m >= 0)
                text << static_cast<char>('0' + m % 10);
            else
                text << (base == 'G' ? 'G' : base == 'S' ? 'S' : '.');
        }
        text << '\n';
    }
    if (mode == RenderMode::Terminations)
        text << "switches=" << out.switches << " at_intersections=" << out.switches_at_intersections
             << " fraction=" << out.intersection_switch_fraction() << '\n';
    out.text = text.str();

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << lay.cols * kCell
        << "\" height=\"" << lay.rows * kCell << "\">\n";
    for (int r = 0; r < lay.rows; ++r)
        for (int c = 0; c < lay.cols; ++c) {
            const char base = lay.at(r, c);
            const int m = mark[r * lay.cols + c];
            const char* fill = "#ffffff";
            if (base == '#')
                fill = "#222222";
            else if (m >= 0)
                fill = kOptionColors[m % kNColors];
            else if (base == 'G')
                fill = "#ffe066";
            else if (base == 'S')
                fill = "#cccccc";
            svg << "  <rect x=\"" << c * kCell << "\" y=\"" << r * kCell << "\" width=\"" << kCell
                << "\" height=\"" << kCell << "\" fill=\"" << fill
                << "\" stroke=\"#888888\" stroke-width=\"1\"/>\n";
        }
    svg << "</svg>\n";
    out.svg = svg.str();
    return out;
}

}  // namespace delib

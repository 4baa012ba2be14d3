#include "delib/gridworld.hpp"

#include <fstream>
#include <queue>
#include <sstream>
#include <stdexcept>

namespace delib {

namespace {

// N, S, E, W
constexpr int kDr[4] = {-1, 1, 0, 0};
constexpr int kDc[4] = {0, 0, 1, -1};

const char* kFourRooms =
    "#############\n"
    "#S....#.....#\n"
    "#.....#.....#\n"
    "#...........#\n"
    "#.....#.....#\n"
    "#.....#.....#\n"
    "##.####.....#\n"
    "#.....###.###\n"
    "#.....#.....#\n"
    "#.....#..G..#\n"
    "#...........#\n"
    "#.....#.....#\n"
    "#############\n";

void check_connected(const GridLayout& layout) {
    const int R = layout.rows, C = layout.cols;
    int first = -1, walkable = 0;
    for (int i = 0; i < R * C; ++i)
        if (layout.cells[i] != '#') {
            if (first < 0) first = i;
            ++walkable;
        }
    if (walkable == 0) throw std::invalid_argument("layout has no walkable cells");
    std::vector<char> seen(R * C, 0);
    std::queue<int> q;
    q.push(first);
    seen[first] = 1;
    int count = 0;
    while (!q.empty()) {
        int cell = q.front();
        q.pop();
        ++count;
        int r = cell / C, c = cell % C;
        for (int d = 0; d < 4; ++d) {
            int r2 = r + kDr[d], c2 = c + kDc[d];
            if (layout.walkable(r2, c2) && !seen[r2 * C + c2]) {
                seen[r2 * C + c2] = 1;
                q.push(r2 * C + c2);
            }
        }
    }
    if (count != walkable)
        throw std::invalid_argument("layout walkable cells are not connected");
}

GridWorld compile(GridLayout layout, double gamma) {
    if (layout.slip < 0.0 || layout.slip >= 1.0)
        throw std::invalid_argument("slip must be in [0,1)");
    check_connected(layout);
    const int R = layout.rows, C = layout.cols;

    GridWorld gw;
    gw.layout = layout;
    gw.cell_to_state.assign(R * C, -1);
    for (int i = 0; i < R * C; ++i)
        if (layout.cells[i] != '#') {
            gw.cell_to_state[i] = static_cast<int>(gw.state_to_cell.size());
            gw.state_to_cell.push_back(i);
        }
    const int S = static_cast<int>(gw.state_to_cell.size());
    for (int s = 0; s < S; ++s) {
        char ch = layout.cells[gw.state_to_cell[s]];
        if (ch == 'G') gw.goal_state = s;
        if (ch == 'S') gw.start_state = s;
    }
    if (gw.goal_state < 0) throw std::invalid_argument("layout has no goal cell");

    Mdp m;
    m.n_states = S;
    m.n_actions = 4;
    m.gamma = gamma;
    m.transition.assign(static_cast<std::size_t>(S) * 4 * S, 0.0);
    m.reward.assign(static_cast<std::size_t>(S) * 4, 0.0);
    m.initial_dist.assign(S, 0.0);
    if (gw.start_state >= 0)
        m.initial_dist[gw.start_state] = 1.0;
    else
        for (int s = 0; s < S; ++s) m.initial_dist[s] = 1.0 / S;

    auto move_target = [&](int s, int dir) {
        int cell = gw.state_to_cell[s];
        int r = cell / C + kDr[dir], c = cell % C + kDc[dir];
        if (!layout.walkable(r, c)) return s;  // bump into wall, stay
        return gw.cell_to_state[r * C + c];
    };

    for (int s = 0; s < S; ++s) {
        if (s == gw.goal_state) {
            for (int a = 0; a < 4; ++a) m.p(s, a, s) = 1.0;  // absorbing, zero reward
            continue;
        }
        for (int a = 0; a < 4; ++a) {
            // executed action: chosen w.p. 1-slip, else uniform over the four
            for (int e = 0; e < 4; ++e) {
                double w = (e == a ? 1.0 - layout.slip : 0.0) + layout.slip / 4.0;
                m.p(s, a, move_target(s, e)) += w;
            }
            double rexp = layout.step_reward;
            rexp += m.p(s, a, gw.goal_state) * layout.goal_reward;
            m.r(s, a) = rexp;
        }
    }
    m.validate();
    gw.mdp = std::move(m);
    return gw;
}

}  // namespace

GridLayout GridLayout::parse(const std::string& ascii) {
    GridLayout layout;
    std::istringstream in(ascii);
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        lines.push_back(line);
    }
    if (lines.empty()) throw std::invalid_argument("empty layout");
    layout.rows = static_cast<int>(lines.size());
    layout.cols = static_cast<int>(lines[0].size());
    for (const auto& l : lines) {
        if (static_cast<int>(l.size()) != layout.cols)
            throw std::invalid_argument("ragged layout rows");
        for (char ch : l) {
            if (ch != '#' && ch != '.' && ch != 'G' && ch != 'S')
                throw std::invalid_argument("unknown layout character");
            layout.cells.push_back(ch);
        }
    }
    return layout;
}

GridLayout GridLayout::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open layout file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

std::vector<int> GridWorld::intersections() const {
    std::vector<int> out;
    const int C = layout.cols;
    for (std::size_t s = 0; s < state_to_cell.size(); ++s) {
        int r = state_to_cell[s] / C, c = state_to_cell[s] % C;
        int deg = 0;
        for (int d = 0; d < 4; ++d)
            if (layout.walkable(r + kDr[d], c + kDc[d])) ++deg;
        if (deg >= 3) out.push_back(static_cast<int>(s));
    }
    return out;
}

GridWorld build_four_rooms(double slip, double gamma) {
    GridLayout layout = GridLayout::parse(kFourRooms);
    layout.slip = slip;
    layout.goal_reward = 1.0;
    layout.step_reward = 0.0;
    return compile(std::move(layout), gamma);
}

GridWorld build_intersection_maze(const GridLayout& layout, double gamma) {
    return compile(layout, gamma);
}

GridLayout make_ladder_maze() {
    // 3 horizontal corridors (rows 1,4,7) crossed by 3 vertical ones (cols 1,4,7)
    const int n = 9;
    std::vector<std::string> grid(n, std::string(n, '#'));
    for (int r : {1, 4, 7})
        for (int c = 1; c <= 7; ++c) grid[r][c] = '.';
    for (int c : {1, 4, 7})
        for (int r = 1; r <= 7; ++r) grid[r][c] = '.';
    grid[1][1] = 'S';
    grid[7][7] = 'G';
    std::string ascii;
    for (const auto& row : grid) ascii += row + "\n";
    GridLayout layout = GridLayout::parse(ascii);
    layout.slip = 0.0;
    return layout;
}

}  // namespace delib

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "delib/experiment.hpp"
#include "delib/render.hpp"

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int do_run(const std::string& config_path, bool sweep) {
    delib::ExperimentConfig cfg = delib::ExperimentConfig::load_file(config_path);
    auto sums = delib::run_experiment(cfg, sweep);
    for (const auto& s : sums)
        std::cout << "eta=" << s.eta << " seed=" << s.seed << " final_return=" << s.final_return
                  << " final_mean_termination=" << s.final_mean_termination
                  << " greedy_mu_value=" << s.greedy_mu_value << " -> " << s.dir << "\n";
    std::cout << "summary.json written under " << delib::resolve_output_root(cfg) << "\n";
    return 0;
}

int do_render(const std::string& layout_path, const std::string& traj_path,
              const std::string& mode, const std::string& svg_out) {
    delib::GridLayout lay = delib::GridLayout::load_file(layout_path);
    // discount is irrelevant for rendering; any valid value compiles the map
    delib::GridWorld world = delib::build_intersection_maze(lay, 0.99);
    delib::Trajectory traj = delib::Trajectory::from_json_text(slurp(traj_path));
    delib::RenderMode m =
        mode == "terminations" ? delib::RenderMode::Terminations : delib::RenderMode::Options;
    delib::RenderResult res = delib::render_trajectory(world, traj, m);
    std::cout << res.text;
    std::string out = svg_out.empty() ? traj_path + ".svg" : svg_out;
    std::ofstream svg(out, std::ios::binary);
    if (!svg) throw std::runtime_error("cannot write " + out);
    svg << res.svg;
    std::cout << "svg: " << out << "\n";
    return 0;
}

int do_aggregate(const std::string& dir) {
    std::vector<std::string> warnings;
    int rc = delib::aggregate_sweep(dir, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    if (rc == 0) std::cout << "wrote " << dir << "/sweep.csv and " << dir << "/curves.dat\n";
    return rc;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"option learning with deliberation cost: experiment harness"};
    app.require_subcommand(1);

    std::string config_path, layout_path, traj_path, dir;
    std::string mode = "options", svg_out;

    CLI::App* run = app.add_subcommand("run", "train one (eta, seed) cell from a config file");
    run->add_option("config", config_path, "config file")->required();

    CLI::App* sweep = app.add_subcommand("sweep", "train the full eta x seed grid");
    sweep->add_option("config", config_path, "config file")->required();

    CLI::App* render = app.add_subcommand("render", "draw a trajectory over a layout");
    render->add_option("layout", layout_path, "ASCII layout file")->required();
    render->add_option("trajectory", traj_path, "trajectory JSON")->required();
    render->add_option("--mode", mode, "options|terminations")
        ->check(CLI::IsMember({"options", "terminations"}));
    render->add_option("--svg", svg_out, "SVG output path (default: <trajectory>.svg)");

    CLI::App* agg = app.add_subcommand("aggregate", "summarize completed runs in a directory");
    agg->add_option("dir", dir, "sweep output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return do_run(config_path, false);
        if (sweep->parsed()) return do_run(config_path, true);
        if (render->parsed()) return do_render(layout_path, traj_path, mode, svg_out);
        if (agg->parsed()) return do_aggregate(dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

#include "delib/experiment.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

#include "delib/gridworld.hpp"
#include "delib/render.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace delib {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

GridWorld build_world(const ExperimentConfig& cfg) {
    if (cfg.environment == "four_rooms") {
        GridWorld w = build_four_rooms(cfg.slip, cfg.a2oc.gamma);
        return w;
    }
    GridLayout lay = GridLayout::load_file(cfg.layout_file);
    lay.slip = cfg.slip;
    return build_intersection_maze(lay, cfg.a2oc.gamma);
}

std::string run_dir_name(double eta, std::uint64_t seed) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "eta%.4f_seed%llu", eta,
                  static_cast<unsigned long long>(seed));
    return buf;
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << text;
}

std::string metrics_csv(const std::vector<MetricsRow>& rows) {
    std::ostringstream out;
    out << "step,episode,return,mean_termination,switches,active_options\n";
    for (const MetricsRow& r : rows)
        out << r.step << ',' << r.episode << ',' << fmt(r.ret) << ',' << fmt(r.mean_termination)
            << ',' << r.switches << ',' << r.active_options << '\n';
    return out.str();
}

struct Window {
    double ret = 0.0;
    double term = 0.0;
};

Window tail_means(const std::vector<MetricsRow>& rows) {
    Window w;
    if (rows.empty()) return w;
    const std::size_t n = std::max<std::size_t>(1, rows.size() / 10);
    for (std::size_t i = rows.size() - n; i < rows.size(); ++i) {
        w.ret += rows[i].ret;
        w.term += rows[i].mean_termination;
    }
    w.ret /= n;
    w.term /= n;
    return w;
}

}  // namespace

std::string resolve_output_root(const ExperimentConfig& cfg) {
    const char* env = std::getenv(kOutputRootEnv);
    if (env && *env) return (fs::path(env) / cfg.output_dir).string();
    return cfg.output_dir;
}

RunSummary run_single(const ExperimentConfig& cfg, double eta, std::uint64_t seed) {
    cfg.validate();
    const GridWorld world = build_world(cfg);
    A2OCConfig ac = cfg.a2oc;
    ac.eta = eta;
    ac.seed = seed;

    const Mdp& mdp = world.mdp;
    const int goal = world.goal_state;
    EnvFactory factory = [&mdp, goal](int) { return std::make_unique<MdpEnv>(mdp, std::vector<int>{goal}); };
    TrainResult res = train(factory, ac);

    const fs::path dir = fs::path(resolve_output_root(cfg)) / run_dir_name(eta, seed);
    fs::create_directories(dir);
    write_text(dir / "metrics.csv", metrics_csv(res.metrics));

    json params;
    params["theta"] = json::parse(res.params.theta.to_json_text());
    params["q"] = res.params.q;
    write_text(dir / "params.json", params.dump(2) + "\n");

    RunSummary sum;
    sum.eta = eta;
    sum.seed = seed;
    sum.steps = res.params.step_counter;
    const Window w = tail_means(res.metrics);
    sum.final_return = w.ret;
    sum.final_mean_termination = w.term;
    double auc = 0.0;
    for (const MetricsRow& r : res.metrics) auc += r.ret;
    sum.auc = res.metrics.empty() ? 0.0 : auc / res.metrics.size();
    sum.greedy_mu_value = greedy_mu_value(mdp, res.params.theta, res.params.q, world.start_state);
    sum.dir = dir.string();

    json rj;
    rj["eta"] = eta;
    rj["seed"] = seed;
    rj["lambda_mode"] = ac.lambda_mode == LambdaMode::Zero ? "zero" : "gamma";
    rj["environment"] = cfg.environment;
    rj["total_steps"] = ac.total_steps;
    rj["steps"] = sum.steps;
    rj["episodes"] = res.metrics.size();
    rj["final_return"] = sum.final_return;
    rj["final_mean_termination"] = sum.final_mean_termination;
    rj["auc"] = sum.auc;
    rj["greedy_mu_value"] = sum.greedy_mu_value;
    write_text(dir / "run.json", rj.dump(2) + "\n");

    // Rollout of the learned greedy policy, for the renderer.
    Theta greedy = res.params.theta;
    greedy.epsilon_mu = 0.0;
    greedy.theta_mu.assign(greedy.theta_mu.size(), -1e9);
    const int O = greedy.n_options;
    for (int s = 0; s < greedy.n_states; ++s) {
        int best = 0;
        for (int o = 1; o < O; ++o)
            if (res.params.q[static_cast<std::size_t>(s) * O + o] >
                res.params.q[static_cast<std::size_t>(s) * O + best])
                best = o;
        greedy.theta_mu[static_cast<std::size_t>(s) * O + best] = 0.0;
    }
    Rng rng(seed);
    Trajectory traj = execute(mdp, greedy, ExecutionMode::CallAndReturn, world.start_state, rng, 400);
    write_text(dir / "final_trajectory.json", traj.to_json_text() + "\n");
    return sum;
}

std::vector<RunSummary> run_experiment(const ExperimentConfig& cfg, bool sweep) {
    cfg.validate();
    std::vector<std::pair<double, std::uint64_t>> grid;
    if (sweep) {
        for (double eta : cfg.eta_sweep)
            for (std::uint64_t seed : cfg.seeds) grid.emplace_back(eta, seed);
    } else {
        grid.emplace_back(cfg.a2oc.eta, cfg.a2oc.seed);
    }

    std::vector<RunSummary> sums;
    sums.reserve(grid.size());
    for (auto [eta, seed] : grid) sums.push_back(run_single(cfg, eta, seed));

    json arr = json::array();
    for (const RunSummary& s : sums) {
        json j;
        j["eta"] = s.eta;
        j["seed"] = s.seed;
        j["final_return"] = s.final_return;
        j["final_mean_termination"] = s.final_mean_termination;
        j["auc"] = s.auc;
        j["greedy_mu_value"] = s.greedy_mu_value;
        j["steps"] = s.steps;
        j["dir"] = s.dir;
        arr.push_back(j);
    }
    write_text(fs::path(resolve_output_root(cfg)) / "summary.json", arr.dump(2) + "\n");
    return sums;
}

namespace {

struct LoadedRun {
    double eta = 0.0;
    std::uint64_t seed = 0;
    std::vector<MetricsRow> rows;
};

bool load_run(const fs::path& dir, LoadedRun* out, std::vector<std::string>* warnings) {
    auto warn = [&](const std::string& msg) {
        if (warnings) warnings->push_back(msg);
    };
    std::ifstream rj(dir / "run.json");
    if (!rj) {
        warn("missing run.json in " + dir.string());
        return false;
    }
    try {
        json j = json::parse(rj);
        out->eta = j.at("eta").get<double>();
        out->seed = j.at("seed").get<std::uint64_t>();
    } catch (const std::exception& e) {
        warn("corrupt run.json in " + dir.string() + ": " + e.what());
        return false;
    }
    std::ifstream mc(dir / "metrics.csv");
    if (!mc) {
        warn("missing metrics.csv in " + dir.string());
        return false;
    }
    std::string line;
    std::getline(mc, line);  // header
    while (std::getline(mc, line)) {
        if (line.empty()) continue;
        MetricsRow r;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        if (!(ss >> r.step >> r.episode >> r.ret >> r.mean_termination >> r.switches >>
              r.active_options)) {
            warn("corrupt metrics row in " + dir.string() + ": " + line);
            return false;
        }
        out->rows.push_back(r);
    }
    if (out->rows.empty()) {
        warn("empty metrics.csv in " + dir.string());
        return false;
    }
    return true;
}

}  // namespace

int aggregate_sweep(const std::string& dir, std::vector<std::string>* warnings) {
    if (!fs::is_directory(dir)) {
        if (warnings) warnings->push_back("not a directory: " + dir);
        return 1;
    }
    std::vector<LoadedRun> runs;
    std::vector<fs::path> subdirs;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_directory()) subdirs.push_back(e.path());
    std::sort(subdirs.begin(), subdirs.end());
    for (const fs::path& sd : subdirs) {
        if (!fs::exists(sd / "run.json") && !fs::exists(sd / "metrics.csv")) continue;
        LoadedRun lr;
        if (load_run(sd, &lr, warnings)) runs.push_back(std::move(lr));
    }
    if (runs.empty()) {
        if (warnings) warnings->push_back("no completed runs under " + dir);
        return 1;
    }

    std::ostringstream csv;
    csv << "eta,seed,final_return,final_mean_termination,auc\n";
    std::map<double, std::vector<std::array<double, 3>>> by_eta;
    for (const LoadedRun& r : runs) {
        const Window w = tail_means(r.rows);
        double auc = 0.0;
        for (const MetricsRow& m : r.rows) auc += m.ret;
        auc /= r.rows.size();
        csv << fmt(r.eta) << ',' << r.seed << ',' << fmt(w.ret) << ',' << fmt(w.term) << ','
            << fmt(auc) << '\n';
        by_eta[r.eta].push_back({w.ret, w.term, auc});
    }
    for (const auto& [eta, vals] : by_eta) {
        double ret = 0.0, term = 0.0, auc = 0.0;
        for (const auto& v : vals) {
            ret += v[0];
            term += v[1];
            auc += v[2];
        }
        const double n = static_cast<double>(vals.size());
        csv << fmt(eta) << ",mean," << fmt(ret / n) << ',' << fmt(term / n) << ',' << fmt(auc / n)
            << '\n';
    }
    write_text(fs::path(dir) / "sweep.csv", csv.str());

    // gnuplot blocks: one index per eta, rows "step mean_termination"
    // averaged across seeds in 50 step bins.
    long max_step = 0;
    for (const LoadedRun& r : runs) max_step = std::max(max_step, r.rows.back().step);
    const int n_bins = 50;
    const double bin_w = static_cast<double>(max_step) / n_bins;
    std::map<double, std::vector<LoadedRun*>> eta_runs;
    for (LoadedRun& r : runs) eta_runs[r.eta].push_back(&r);
    std::ostringstream dat;
    dat << "# termination-vs-step curves; one block per eta\n";
    for (const auto& [eta, rs] : eta_runs) {
        dat << "# eta=" << fmt(eta) << "\n";
        std::vector<double> sum(n_bins, 0.0);
        std::vector<long> cnt(n_bins, 0);
        for (const LoadedRun* r : rs)
            for (const MetricsRow& m : r->rows) {
                int b = bin_w > 0.0 ? static_cast<int>(m.step / bin_w) : 0;
                b = std::clamp(b, 0, n_bins - 1);
                sum[b] += m.mean_termination;
                ++cnt[b];
            }
        for (int b = 0; b < n_bins; ++b)
            if (cnt[b] > 0)
                dat << fmt((b + 0.5) * bin_w) << ' ' << fmt(sum[b] / cnt[b]) << '\n';
        dat << "\n\n";
    }
    write_text(fs::path(dir) / "curves.dat", dat.str());
    return 0;
}

}  // namespace delib

#include "delib/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "delib/linalg.hpp"
#include "json.hpp"

namespace delib {

namespace {
constexpr double kRowSumTol = 1e-12;

void check_row_stochastic(const double* row, int n, const char* what) {
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        if (row[i] < 0.0) throw std::invalid_argument(std::string(what) + ": negative probability");
        sum += row[i];
    }
    if (std::fabs(sum - 1.0) > kRowSumTol)
        throw std::invalid_argument(std::string(what) + ": row does not sum to 1");
}
}  // namespace

void Mdp::validate() const {
    if (n_states <= 0 || n_actions <= 0)
        throw std::invalid_argument("Mdp: state/action counts must be positive");
    if (gamma < 0.0 || gamma >= 1.0)
        throw std::invalid_argument("Mdp: gamma must be in [0,1)");
    const std::size_t S = n_states, A = n_actions;
    if (transition.size() != S * A * S) throw std::invalid_argument("Mdp: transition size");
    if (reward.size() != S * A) throw std::invalid_argument("Mdp: reward size");
    if (initial_dist.size() != S) throw std::invalid_argument("Mdp: initial_dist size");
    for (int s = 0; s < n_states; ++s)
        for (int a = 0; a < n_actions; ++a)
            check_row_stochastic(p_row(s, a), n_states, "Mdp transition");
    check_row_stochastic(initial_dist.data(), n_states, "Mdp initial_dist");
}

void StationaryPolicy::validate() const {
    if (static_cast<int>(probs.size()) != n_states * n_actions)
        throw std::invalid_argument("StationaryPolicy: size mismatch");
    for (int s = 0; s < n_states; ++s) check_row_stochastic(row(s), n_actions, "policy");
}

StationaryPolicy StationaryPolicy::uniform(int n_states, int n_actions) {
    StationaryPolicy p{n_states, n_actions,
                       std::vector<double>(static_cast<std::size_t>(n_states) * n_actions,
                                           1.0 / n_actions)};
    return p;
}

StationaryPolicy StationaryPolicy::deterministic(int n_states, int n_actions,
                                                 const std::vector<int>& action) {
    StationaryPolicy p{n_states, n_actions,
                       std::vector<double>(static_cast<std::size_t>(n_states) * n_actions, 0.0)};
    for (int s = 0; s < n_states; ++s) p.probs[static_cast<std::size_t>(s) * n_actions + action[s]] = 1.0;
    return p;
}

std::vector<double> policy_evaluation(const Mdp& mdp, const StationaryPolicy& policy,
                                      double tol, PolicyEvalMethod method) {
    if (tol <= 0.0) throw std::invalid_argument("policy_evaluation: tol must be > 0");
    mdp.validate();
    policy.validate();
    const int S = mdp.n_states, A = mdp.n_actions;

    if (method == PolicyEvalMethod::LinearSolve) {
        // (I - gamma P_pi) V = r_pi
        std::vector<double> m(static_cast<std::size_t>(S) * S, 0.0);
        std::vector<double> b(S, 0.0);
        for (int s = 0; s < S; ++s) {
            m[static_cast<std::size_t>(s) * S + s] = 1.0;
            for (int a = 0; a < A; ++a) {
                const double w = policy.pi(s, a);
                if (w == 0.0) continue;
                b[s] += w * mdp.r(s, a);
                const double* row = mdp.p_row(s, a);
                for (int s2 = 0; s2 < S; ++s2)
                    m[static_cast<std::size_t>(s) * S + s2] -= mdp.gamma * w * row[s2];
            }
        }
        return linalg::solve(std::move(m), S, std::move(b));
    }

    std::vector<double> v(S, 0.0), v2(S, 0.0);
    const int max_iter = 2'000'000;
    double diff = std::numeric_limits<double>::infinity();
    for (int it = 0; it < max_iter; ++it) {
        diff = 0.0;
#pragma omp parallel for reduction(max : diff) schedule(static)
        for (int s = 0; s < S; ++s) {
            double acc = 0.0;
            for (int a = 0; a < A; ++a) {
                const double w = policy.pi(s, a);
                if (w == 0.0) continue;
                const double* row = mdp.p_row(s, a);
                double nxt = 0.0;
                for (int s2 = 0; s2 < S; ++s2) nxt += row[s2] * v[s2];
                acc += w * (mdp.r(s, a) + mdp.gamma * nxt);
            }
            v2[s] = acc;
            diff = std::max(diff, std::fabs(acc - v[s]));
        }
        v.swap(v2);
        if (diff <= tol) return v;
    }
    throw ConvergenceError("policy_evaluation did not converge", diff);
}

ValueIterationResult value_iteration(const Mdp& mdp, double tol) {
    if (tol <= 0.0) throw std::invalid_argument("value_iteration: tol must be > 0");
    mdp.validate();
    const int S = mdp.n_states, A = mdp.n_actions;
    std::vector<double> v(S, 0.0), v2(S, 0.0);
    const int max_iter = 2'000'000;
    double diff = std::numeric_limits<double>::infinity();
    for (int it = 0; it < max_iter; ++it) {
        diff = 0.0;
#pragma omp parallel for reduction(max : diff) schedule(static)
        for (int s = 0; s < S; ++s) {
            double best = -std::numeric_limits<double>::infinity();
            for (int a = 0; a < A; ++a) {
                const double* row = mdp.p_row(s, a);
                double q = mdp.r(s, a);
                double nxt = 0.0;
                for (int s2 = 0; s2 < S; ++s2) nxt += row[s2] * v[s2];
                q += mdp.gamma * nxt;
                best = std::max(best, q);
            }
            v2[s] = best;
            diff = std::max(diff, std::fabs(best - v[s]));
        }
        v.swap(v2);
        if (diff <= tol) break;
    }
    if (diff > tol) throw ConvergenceError("value_iteration did not converge", diff);

    ValueIterationResult res;
    res.values = v;
    res.greedy_action.assign(S, 0);
    for (int s = 0; s < S; ++s) {
        double best = -std::numeric_limits<double>::infinity();
        int arg = 0;
        for (int a = 0; a < A; ++a) {
            const double* row = mdp.p_row(s, a);
            double q = mdp.r(s, a);
            for (int s2 = 0; s2 < S; ++s2) q += mdp.gamma * row[s2] * v[s2];
            if (q > best) { best = q; arg = a; }
        }
        res.greedy_action[s] = arg;
    }
    return res;
}

std::pair<int, double> sample_transition(const Mdp& mdp, int s, int a, Rng& rng) {
    if (s < 0 || s >= mdp.n_states || a < 0 || a >= mdp.n_actions)
        throw std::out_of_range("sample_transition: index out of range");
    int s2 = sample_discrete(mdp.p_row(s, a), mdp.n_states, rng);
    return {s2, mdp.r(s, a)};
}

Mdp Mdp::from_json_text(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    Mdp m;
    m.n_states = j.at("n_states").get<int>();
    m.n_actions = j.at("n_actions").get<int>();
    m.gamma = j.at("gamma").get<double>();
    const auto& tr = j.at("transition");
    const auto& rw = j.at("reward");
    m.transition.reserve(static_cast<std::size_t>(m.n_states) * m.n_actions * m.n_states);
    m.reward.reserve(static_cast<std::size_t>(m.n_states) * m.n_actions);
    for (int s = 0; s < m.n_states; ++s)
        for (int a = 0; a < m.n_actions; ++a) {
            m.reward.push_back(rw.at(s).at(a).get<double>());
            for (int s2 = 0; s2 < m.n_states; ++s2)
                m.transition.push_back(tr.at(s).at(a).at(s2).get<double>());
        }
    m.initial_dist = j.at("initial_dist").get<std::vector<double>>();
    m.validate();
    return m;
}

std::string Mdp::to_json_text() const {
    nlohmann::json j;
    j["n_states"] = n_states;
    j["n_actions"] = n_actions;
    j["gamma"] = gamma;
    auto tr = nlohmann::json::array();
    auto rw = nlohmann::json::array();
    for (int s = 0; s < n_states; ++s) {
        auto trs = nlohmann::json::array();
        auto rws = nlohmann::json::array();
        for (int a = 0; a < n_actions; ++a) {
            rws.push_back(r(s, a));
            auto row = nlohmann::json::array();
            for (int s2 = 0; s2 < n_states; ++s2) row.push_back(p(s, a, s2));
            trs.push_back(std::move(row));
        }
        tr.push_back(std::move(trs));
        rw.push_back(std::move(rws));
    }
    j["transition"] = std::move(tr);
    j["reward"] = std::move(rw);
    j["initial_dist"] = initial_dist;
    return j.dump(2);
}

}  // namespace delib

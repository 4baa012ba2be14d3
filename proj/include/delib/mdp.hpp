#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "delib/rng.hpp"

namespace delib {

/// Iterative solvers signal failure with the residual they got stuck at.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double residual)
        : std::runtime_error(what), residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

/// Finite discounted MDP with dense tables.
///
/// Layout: transition[(s*n_actions + a)*n_states + s'], reward[s*n_actions + a].
/// Immutable after construction in practice; all evaluation routines take it
/// by const reference and are safe to share across threads.
struct Mdp {
    int n_states = 0;
    int n_actions = 0;
    std::vector<double> transition;
    std::vector<double> reward;
    double gamma = 0.0;
    std::vector<double> initial_dist;

    double p(int s, int a, int s2) const {
        return transition[(static_cast<std::size_t>(s) * n_actions + a) * n_states + s2];
    }
    double& p(int s, int a, int s2) {
        return transition[(static_cast<std::size_t>(s) * n_actions + a) * n_states + s2];
    }
    const double* p_row(int s, int a) const {
        return &transition[(static_cast<std::size_t>(s) * n_actions + a) * n_states];
    }
    double r(int s, int a) const { return reward[static_cast<std::size_t>(s) * n_actions + a]; }
    double& r(int s, int a) { return reward[static_cast<std::size_t>(s) * n_actions + a]; }

    /// Throws std::invalid_argument on any violated invariant.
    void validate() const;

    static Mdp from_json_text(const std::string& text);
    std::string to_json_text() const;
};

struct StationaryPolicy {
    int n_states = 0;
    int n_actions = 0;
    std::vector<double> probs;  // probs[s*n_actions + a]

    double pi(int s, int a) const { return probs[static_cast<std::size_t>(s) * n_actions + a]; }
    const double* row(int s) const { return &probs[static_cast<std::size_t>(s) * n_actions]; }
    void validate() const;

    static StationaryPolicy uniform(int n_states, int n_actions);
    static StationaryPolicy deterministic(int n_states, int n_actions,
                                          const std::vector<int>& action);
};

enum class PolicyEvalMethod { Iterative, LinearSolve };

/// Fixed point of the Bellman equations for a fixed policy, to sup-norm
/// residual <= tol.
std::vector<double> policy_evaluation(const Mdp& mdp, const StationaryPolicy& policy,
                                      double tol = 1e-8,
                                      PolicyEvalMethod method = PolicyEvalMethod::Iterative);

struct ValueIterationResult {
    std::vector<double> values;
    std::vector<int> greedy_action;
};

ValueIterationResult value_iteration(const Mdp& mdp, double tol = 1e-8);

/// One environment step: s' ~ P(.|s,a), r = r(s,a).
std::pair<int, double> sample_transition(const Mdp& mdp, int s, int a, Rng& rng);

}  // namespace delib

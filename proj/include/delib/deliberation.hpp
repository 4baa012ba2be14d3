#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "delib/options.hpp"

namespace delib {

/// Immediate cost on the augmented chain, c~(z, a, z'). Only the switching
/// cost ships built-in; a user hook covers other cost structures.
using CostFn = std::function<double(int s, int o, int a, int s2, int o2)>;

struct DeliberationConfig {
    double eta = 0.0;                     // regularization coefficient
    double lambda = 0.0;                  // cost discount (computational horizon)
    CostFn user_cost;                     // optional; default is the switching cost
    std::optional<double> constraint_bound;  // recorded for reporting only

    void validate() const {
        if (eta < 0.0) throw std::invalid_argument("DeliberationConfig: eta must be >= 0");
        if (lambda < 0.0 || lambda >= 1.0)
            throw std::invalid_argument("DeliberationConfig: lambda must be in [0,1)");
    }
};

struct CostTables {
    int n_states = 0;
    int n_options = 0;
    std::vector<double> d;   // D^lambda(s,o), [s*O + o]
    std::vector<double> qc;  // Q^c(s,o)
    std::vector<double> ac;  // A^c = Q^c - sum_o mu Q^c
};

/// Expected immediate cost of the Bernoulli switch event: gamma * beta(s',o).
double switching_cost(const Theta& theta, double gamma, int s_next, int o);

/// D^lambda(s,o): expected lambda-discounted sum of costs, residual <= tol.
std::vector<double> deliberation_value(const Mdp& mdp, const Theta& theta,
                                       const DeliberationConfig& config, double tol = 1e-8);

/// Bellman solution for the reward r - eta * (switching cost); d is
/// evaluated at lambda = gamma so qc = q - eta*d holds.
CostTables transformed_evaluate(const Mdp& mdp, const Theta& theta,
                                const DeliberationConfig& config, double tol = 1e-8);

/// J = sum_{s,o} alpha(s,o) (q(s,o) - eta d(s,o)).
double mixed_objective(const std::vector<double>& alpha, const std::vector<double>& q,
                       const std::vector<double>& d, double eta);

struct OptimizeMuResult {
    std::vector<int> mu;         // deterministic choice per state
    std::vector<double> theta_mu;  // one-hot logits encoding mu
    std::vector<double> q;       // Q* over (s,o) for the transformed reward
};

/// Policy iteration over deterministic mu with option policies and
/// terminations frozen, maximizing the eta-regularized objective.
OptimizeMuResult optimize_mu(const Mdp& mdp, const Theta& theta,
                             const DeliberationConfig& config, double tol = 1e-9);

struct DurationSummary {
    double d;          // expected discounted duration 1/(1 - gamma*kappa)
    double cost_rate;  // (1 - gamma*kappa) * eta
};

DurationSummary expected_duration(double kappa, double gamma, double eta);

}  // namespace delib

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "delib/mdp.hpp"
#include "delib/rng.hpp"

namespace delib {

inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

inline void softmax_row(const double* logits, int n, double* out) {
    double mx = logits[0];
    for (int i = 1; i < n; ++i) mx = std::max(mx, logits[i]);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        out[i] = std::exp(logits[i] - mx);
        sum += out[i];
    }
    for (int i = 0; i < n; ++i) out[i] /= sum;
}

/// Parameters of the option set: softmax option policies, sigmoid
/// terminations, and an epsilon-soft softmax policy over options.
/// Initiation sets are all states.
struct Theta {
    int n_options = 0;
    int n_states = 0;
    int n_actions = 0;
    std::vector<double> theta_pi;    // [(o*S + s)*A + a]
    std::vector<double> theta_beta;  // [o*S + s]
    std::vector<double> theta_mu;    // [s*O + o]
    double epsilon_mu = 0.0;

    double& pi_logit(int o, int s, int a) {
        return theta_pi[(static_cast<std::size_t>(o) * n_states + s) * n_actions + a];
    }
    double pi_logit(int o, int s, int a) const {
        return theta_pi[(static_cast<std::size_t>(o) * n_states + s) * n_actions + a];
    }
    double& beta_logit(int o, int s) { return theta_beta[static_cast<std::size_t>(o) * n_states + s]; }
    double beta_logit(int o, int s) const {
        return theta_beta[static_cast<std::size_t>(o) * n_states + s];
    }
    double beta(int o, int s) const { return sigmoid(beta_logit(o, s)); }

    void pi_row(int o, int s, double* out) const {
        softmax_row(&theta_pi[(static_cast<std::size_t>(o) * n_states + s) * n_actions],
                    n_actions, out);
    }
    /// mu(.|s): epsilon-soft mixture of softmax(theta_mu(s,.)) and uniform.
    void mu_row(int s, double* out) const {
        softmax_row(&theta_mu[static_cast<std::size_t>(s) * n_options], n_options, out);
        for (int o = 0; o < n_options; ++o)
            out[o] = (1.0 - epsilon_mu) * out[o] + epsilon_mu / n_options;
    }

    static Theta zeros(int n_options, int n_states, int n_actions, double epsilon_mu = 0.0);
    static Theta random(int n_options, int n_states, int n_actions, double epsilon_mu,
                        double scale, Rng& rng);
    void validate() const;

    static Theta from_json_text(const std::string& text);
    std::string to_json_text() const;
};

/// Materialized probability tables for one Theta, shared by the evaluators.
struct PolicyTables {
    int n_options, n_states, n_actions;
    std::vector<double> pi;    // [(o*S + s)*A + a]
    std::vector<double> beta;  // [o*S + s]
    std::vector<double> mu;    // [s*O + o]

    double pi_at(int o, int s, int a) const {
        return pi[(static_cast<std::size_t>(o) * n_states + s) * n_actions + a];
    }
    const double* pi_row(int o, int s) const {
        return &pi[(static_cast<std::size_t>(o) * n_states + s) * n_actions];
    }
    double beta_at(int o, int s) const { return beta[static_cast<std::size_t>(o) * n_states + s]; }
    const double* mu_row(int s) const { return &mu[static_cast<std::size_t>(s) * n_options]; }
};

PolicyTables materialize(const Theta& theta);

/// Augmented state z = (s, o), flat index s*n_options + o.
struct AugmentedIndex {
    int s = 0;
    int o = 0;
    int flat(int n_options) const { return s * n_options + o; }
};

/// Q over (s,o) indexed by the flat augmented index, with the induced
/// V(s) = sum_o mu(o|s) Q(s,o) and A = Q - V.
struct ValueTables {
    int n_states = 0;
    int n_options = 0;
    std::vector<double> q;  // [s*O + o]
    std::vector<double> v;  // [s]
    std::vector<double> a;  // [s*O + o]

    double q_at(int s, int o) const { return q[static_cast<std::size_t>(s) * n_options + o]; }
    double a_at(int s, int o) const { return a[static_cast<std::size_t>(s) * n_options + o]; }
};

/// P~(z'|z,a), dense: [ (z*n_actions + a)*Z + z' ] with Z = S*O.
std::vector<double> augmented_transition(const Mdp& mdp, const Theta& theta);

/// Fixed point of the intra-option Bellman equations, residual <= tol.
ValueTables intra_option_evaluate(const Mdp& mdp, const Theta& theta, double tol = 1e-8,
                                  int max_iter = 2'000'000);

/// Same fixed point with an extra reward term credited on arrival at
/// (s',o), indexed [o*S + s']. Used for cost-transformed rewards.
ValueTables intra_option_evaluate_with_extra(const Mdp& mdp, const Theta& theta,
                                             const double* extra_next_reward, double tol,
                                             int max_iter = 2'000'000);

struct OptionModels {
    std::vector<double> b;  // b_o(s): discounted reward until termination
    std::vector<double> f;  // f[s*S + s']: discounted termination occupancy at s' from s
};

OptionModels option_models(const Mdp& mdp, const Theta& theta, int o, double tol = 1e-8);

/// SMDP Bellman solution over (s,o) assembled from the option models.
std::vector<double> smdp_evaluate(const Mdp& mdp, const Theta& theta, double tol = 1e-8);

enum class ExecutionMode { CallAndReturn, Interruption };

struct TrajectoryStep {
    int s, o, a;
    double r;
    bool switched;  // option terminated on arrival at the next state
};

struct Trajectory {
    std::vector<TrajectoryStep> steps;

    static Trajectory from_json_text(const std::string& text);
    std::string to_json_text() const;
};

Trajectory execute(const Mdp& mdp, const Theta& theta, ExecutionMode mode, int start,
                   Rng& rng, int horizon);

}  // namespace delib

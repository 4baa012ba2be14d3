#pragma once

#include <optional>
#include <vector>

#include "delib/deliberation.hpp"
#include "delib/options.hpp"

namespace delib::oracle {

/// The option process flattened to a plain MDP over z=(s,o), with the
/// policy marginalized in and the reward optionally cost-transformed.
/// Built from first principles; deliberately shares no evaluation code
/// with the library-side solvers it is used to check.
struct AugmentedMdp {
    int n_z = 0;
    int n_options = 0;
    double gamma = 0.0;
    std::vector<double> kernel;  // M(z,z') with the option policy marginalized in
    std::vector<double> reward;  // expected per-step reward at z
    std::vector<double> cost;    // expected per-step switching cost at z (gamma*beta)
};

AugmentedMdp build_augmented(const Mdp& mdp, const Theta& theta);

/// Value iteration on the augmented chain; reward is r - eta*c when a cost
/// config is given. Serial reference implementation.
std::vector<double> augmented_value_iteration(const Mdp& mdp, const Theta& theta,
                                              const DeliberationConfig* cost, double tol);

/// Same values by direct linear solve (used where value iteration would be
/// too slow inside finite-difference loops).
std::vector<double> augmented_solve(const Mdp& mdp, const Theta& theta,
                                    const DeliberationConfig* cost);

/// J^{gamma,lambda}(theta) = sum_z alpha(z) (Q(z) - eta D^lambda(z)),
/// with Q and D each obtained by direct solve on the augmented chain.
double objective(const Mdp& mdp, const Theta& theta, const std::vector<double>& alpha,
                 double eta, double lambda);

struct MonteCarloResult {
    double mean_return = 0.0;
    double mean_cost = 0.0;
    double se_return = 0.0;
    double se_cost = 0.0;
    double bias_bound_return = 0.0;  // gamma^horizon * rmax / (1-gamma)
    double bias_bound_cost = 0.0;
};

/// Rollout estimates of return-under-alpha and cost-under-alpha, with
/// alpha = initial_dist x mu. Episodes use independent per-episode rng
/// streams and are reduced in episode order with compensated summation,
/// so results do not depend on the parallel schedule.
MonteCarloResult monte_carlo_objective(const Mdp& mdp, const Theta& theta,
                                       const DeliberationConfig& config, int n_episodes,
                                       int horizon, std::uint64_t seed);

struct EnumerateMuResult {
    std::vector<int> best_mu;
    double best_objective = 0.0;
    std::vector<double> objectives;  // one per deterministic mu, odometer order
};

/// Exhaustive search over all n_options^n_states deterministic policies
/// over options; oracle counterpart of optimize_mu. Guarded to <= 1e6.
EnumerateMuResult enumerate_deterministic_mu(const Mdp& mdp, const Theta& theta,
                                             const DeliberationConfig& config,
                                             const std::vector<double>& alpha);

}  // namespace delib::oracle

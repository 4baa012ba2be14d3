#include "delib/oracle.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "delib/linalg.hpp"
#include "delib/rng.hpp"

namespace delib::oracle {

AugmentedMdp build_augmented(const Mdp& mdp, const Theta& theta) {
    mdp.validate();
    theta.validate();
    const int S = mdp.n_states, A = mdp.n_actions, O = theta.n_options;
    const int Z = S * O;

    AugmentedMdp out;
    out.n_z = Z;
    out.n_options = O;
    out.gamma = mdp.gamma;
    out.kernel.assign(static_cast<std::size_t>(Z) * Z, 0.0);
    out.reward.assign(Z, 0.0);
    out.cost.assign(Z, 0.0);

    std::vector<double> pi(A), mu(O);
    for (int s = 0; s < S; ++s)
        for (int o = 0; o < O; ++o) {
            const int z = s * O + o;
            theta.pi_row(o, s, pi.data());
            double* krow = &out.kernel[static_cast<std::size_t>(z) * Z];
            for (int a = 0; a < A; ++a) {
                if (pi[a] == 0.0) continue;
                out.reward[z] += pi[a] * mdp.r(s, a);
                for (int s2 = 0; s2 < S; ++s2) {
                    const double p = mdp.p(s, a, s2);
                    if (p == 0.0) continue;
                    const double b = theta.beta(o, s2);
                    out.cost[z] += pi[a] * p * mdp.gamma * b;
                    krow[s2 * O + o] += pi[a] * p * (1.0 - b);
                    if (b > 0.0) {
                        theta.mu_row(s2, mu.data());
                        for (int o2 = 0; o2 < O; ++o2)
                            krow[s2 * O + o2] += pi[a] * p * b * mu[o2];
                    }
                }
            }
        }
    return out;
}

namespace {

std::vector<double> transformed_reward(const AugmentedMdp& am, const DeliberationConfig* cost) {
    std::vector<double> r = am.reward;
    if (cost) {
        cost->validate();
        for (int z = 0; z < am.n_z; ++z) r[z] -= cost->eta * am.cost[z];
    }
    return r;
}

/// Solve (I - disc * kernel) x = rhs by dense LU.
std::vector<double> solve_chain(const AugmentedMdp& am, double disc, std::vector<double> rhs) {
    const int Z = am.n_z;
    std::vector<double> m(static_cast<std::size_t>(Z) * Z);
    for (int z = 0; z < Z; ++z)
        for (int z2 = 0; z2 < Z; ++z2)
            m[static_cast<std::size_t>(z) * Z + z2] =
                (z == z2 ? 1.0 : 0.0) - disc * am.kernel[static_cast<std::size_t>(z) * Z + z2];
    return linalg::solve(std::move(m), Z, std::move(rhs));
}

}  // namespace

std::vector<double> augmented_value_iteration(const Mdp& mdp, const Theta& theta,
                                              const DeliberationConfig* cost, double tol) {
    if (tol <= 0.0) throw std::invalid_argument("augmented_value_iteration: tol must be > 0");
    const AugmentedMdp am = build_augmented(mdp, theta);
    const std::vector<double> r = transformed_reward(am, cost);
    const int Z = am.n_z;

    std::vector<double> q(Z, 0.0), q2(Z, 0.0);
    double diff = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 2'000'000; ++it) {
        diff = 0.0;
        for (int z = 0; z < Z; ++z) {
            const double* krow = &am.kernel[static_cast<std::size_t>(z) * Z];
            double acc = r[z];
            for (int z2 = 0; z2 < Z; ++z2)
                if (krow[z2] != 0.0) acc += am.gamma * krow[z2] * q[z2];
            q2[z] = acc;
            diff = std::max(diff, std::fabs(acc - q[z]));
        }
        q.swap(q2);
        if (diff <= tol) return q;
    }
    throw ConvergenceError("augmented_value_iteration did not converge", diff);
}

std::vector<double> augmented_solve(const Mdp& mdp, const Theta& theta,
                                    const DeliberationConfig* cost) {
    const AugmentedMdp am = build_augmented(mdp, theta);
    return solve_chain(am, am.gamma, transformed_reward(am, cost));
}

double objective(const Mdp& mdp, const Theta& theta, const std::vector<double>& alpha,
                 double eta, double lambda) {
    const AugmentedMdp am = build_augmented(mdp, theta);
    if (alpha.size() != static_cast<std::size_t>(am.n_z))
        throw std::invalid_argument("objective: alpha has wrong size");
    const std::vector<double> q = solve_chain(am, am.gamma, am.reward);
    std::vector<double> d = am.cost;
    if (lambda != 0.0) d = solve_chain(am, lambda, std::move(d));
    double j = 0.0;
    for (int z = 0; z < am.n_z; ++z) j += alpha[z] * (q[z] - eta * d[z]);
    return j;
}

MonteCarloResult monte_carlo_objective(const Mdp& mdp, const Theta& theta,
                                       const DeliberationConfig& config, int n_episodes,
                                       int horizon, std::uint64_t seed) {
    if (n_episodes < 1) throw std::invalid_argument("monte_carlo_objective: n_episodes >= 1");
    if (horizon < 1) throw std::invalid_argument("monte_carlo_objective: horizon >= 1");
    config.validate();
    mdp.validate();
    theta.validate();
    const int S = mdp.n_states, A = mdp.n_actions, O = theta.n_options;

    const PolicyTables t = materialize(theta);
    std::vector<double> returns(n_episodes), costs(n_episodes);

#pragma omp parallel for schedule(static)
    for (int e = 0; e < n_episodes; ++e) {
        // splitmix-style stream separation so episode e is seed-stable
        // regardless of how many threads run.
        Rng rng(seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(e + 1)));
        int s = sample_discrete(mdp.initial_dist.data(), S, rng);
        int o = sample_discrete(t.mu_row(s), O, rng);
        double g = 0.0, dc = 0.0, gw = 1.0, lw = 1.0;
        for (int step = 0; step < horizon; ++step) {
            const int a = sample_discrete(t.pi_row(o, s), A, rng);
            auto [s2, r] = sample_transition(mdp, s, a, rng);
            g += gw * r;
            const bool term = uniform01(rng) < t.beta_at(o, s2);
            if (term) {
                dc += lw * mdp.gamma;  // realized switching cost gamma * 1{switch}
                o = sample_discrete(t.mu_row(s2), O, rng);
            }
            gw *= mdp.gamma;
            lw *= config.lambda;
            if (lw == 0.0 && gw == 0.0) break;
            s = s2;
        }
        returns[e] = g;
        costs[e] = dc;
    }

    // Serial compensated reduction in episode order: deterministic for a
    // given seed no matter the thread count.
    auto kahan_mean = [&](const std::vector<double>& x) {
        double sum = 0.0, c = 0.0;
        for (double v : x) {
            double y = v - c;
            double u = sum + y;
            c = (u - sum) - y;
            sum = u;
        }
        return sum / x.size();
    };
    MonteCarloResult res;
    res.mean_return = kahan_mean(returns);
    res.mean_cost = kahan_mean(costs);
    auto se = [&](const std::vector<double>& x, double mean) {
        if (x.size() < 2) return 0.0;
        double sum = 0.0, c = 0.0;
        for (double v : x) {
            double y = (v - mean) * (v - mean) - c;
            double u = sum + y;
            c = (u - sum) - y;
            sum = u;
        }
        return std::sqrt(sum / (x.size() - 1.0) / x.size());
    };
    res.se_return = se(returns, res.mean_return);
    res.se_cost = se(costs, res.mean_cost);
    double rmax = 0.0;
    for (double r : mdp.reward) rmax = std::max(rmax, std::fabs(r));
    res.bias_bound_return = std::pow(mdp.gamma, horizon) * rmax / (1.0 - mdp.gamma);
    res.bias_bound_cost = config.lambda > 0.0
                              ? std::pow(config.lambda, horizon) * mdp.gamma / (1.0 - config.lambda)
                              : 0.0;
    return res;
}

EnumerateMuResult enumerate_deterministic_mu(const Mdp& mdp, const Theta& theta,
                                             const DeliberationConfig& config,
                                             const std::vector<double>& alpha) {
    config.validate();
    mdp.validate();
    theta.validate();
    const int S = mdp.n_states, A = mdp.n_actions, O = theta.n_options;
    const int Z = S * O;
    if (alpha.size() != static_cast<std::size_t>(Z))
        throw std::invalid_argument("enumerate_deterministic_mu: alpha has wrong size");
    double count = std::pow(static_cast<double>(O), static_cast<double>(S));
    if (count > 1e6)
        throw std::invalid_argument("enumerate_deterministic_mu: instance too large");
    const long n_mu = static_cast<long>(std::llround(count));

    // mu-independent pieces: expected reward/cost per z, continue kernel to
    // (s',o), and the terminate mass landing at s' (routed to (s',mu(s'))).
    std::vector<double> rpi(Z, 0.0), cvec(Z, 0.0);
    std::vector<double> kc(static_cast<std::size_t>(Z) * S, 0.0);
    std::vector<double> kt(static_cast<std::size_t>(Z) * S, 0.0);
    std::vector<double> pi(A);
    for (int s = 0; s < S; ++s)
        for (int o = 0; o < O; ++o) {
            const int z = s * O + o;
            theta.pi_row(o, s, pi.data());
            for (int a = 0; a < A; ++a) {
                if (pi[a] == 0.0) continue;
                rpi[z] += pi[a] * mdp.r(s, a);
                for (int s2 = 0; s2 < S; ++s2) {
                    const double p = mdp.p(s, a, s2);
                    if (p == 0.0) continue;
                    const double b = theta.beta(o, s2);
                    cvec[z] += pi[a] * p * mdp.gamma * b;
                    kc[static_cast<std::size_t>(z) * S + s2] += pi[a] * p * (1.0 - b);
                    kt[static_cast<std::size_t>(z) * S + s2] += pi[a] * p * b;
                }
            }
        }

    EnumerateMuResult out;
    out.objectives.resize(n_mu);
    out.best_objective = -std::numeric_limits<double>::infinity();
    std::vector<int> mu(S, 0);
    std::vector<double> m, rhs, q, d;
    for (long idx = 0; idx < n_mu; ++idx) {
        // decode odometer: state 0 is the fastest-cycling digit
        long rem = idx;
        for (int s = 0; s < S; ++s) {
            mu[s] = static_cast<int>(rem % O);
            rem /= O;
        }
        auto assemble = [&](double disc) {
            m.assign(static_cast<std::size_t>(Z) * Z, 0.0);
            for (int z = 0; z < Z; ++z) {
                m[static_cast<std::size_t>(z) * Z + z] = 1.0;
                const int o = z % O;
                for (int s2 = 0; s2 < S; ++s2) {
                    m[static_cast<std::size_t>(z) * Z + s2 * O + o] -=
                        disc * kc[static_cast<std::size_t>(z) * S + s2];
                    m[static_cast<std::size_t>(z) * Z + s2 * O + mu[s2]] -=
                        disc * kt[static_cast<std::size_t>(z) * S + s2];
                }
            }
        };
        assemble(mdp.gamma);
        q = linalg::solve(std::move(m), Z, std::vector<double>(rpi));
        if (config.lambda != 0.0) {
            assemble(config.lambda);
            d = linalg::solve(std::move(m), Z, std::vector<double>(cvec));
        } else {
            d = cvec;
        }
        double j = 0.0;
        for (int z = 0; z < Z; ++z) j += alpha[z] * (q[z] - config.eta * d[z]);
        out.objectives[idx] = j;
        if (j > out.best_objective) {
            out.best_objective = j;
            out.best_mu = mu;
        }
    }
    return out;
}

}  // namespace delib::oracle

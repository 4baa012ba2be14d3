#include "delib/deliberation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "delib/linalg.hpp"

namespace delib {

double switching_cost(const Theta& theta, double gamma, int s_next, int o) {
    if (s_next < 0 || s_next >= theta.n_states || o < 0 || o >= theta.n_options)
        throw std::out_of_range("switching_cost: index out of range");
    return gamma * theta.beta(o, s_next);
}

std::vector<double> deliberation_value(const Mdp& mdp, const Theta& theta,
                                       const DeliberationConfig& config, double tol) {
    if (tol <= 0.0) throw std::invalid_argument("deliberation_value: tol must be > 0");
    config.validate();
    mdp.validate();
    const PolicyTables t = materialize(theta);
    const int S = mdp.n_states, A = mdp.n_actions, O = theta.n_options;
    const int Z = S * O;

    // Expected immediate cost per z, and (for the user hook) the full P~.
    std::vector<double> cvec(Z, 0.0);
    std::vector<double> pt;
    if (config.user_cost) pt = augmented_transition(mdp, theta);
    for (int s = 0; s < S; ++s)
        for (int o = 0; o < O; ++o) {
            const int z = s * O + o;
            double acc = 0.0;
            for (int a = 0; a < A; ++a) {
                const double w = t.pi_at(o, s, a);
                if (w == 0.0) continue;
                const double* prow = mdp.p_row(s, a);
                if (config.user_cost) {
                    const double* ptrow = &pt[(static_cast<std::size_t>(z) * A + a) * Z];
                    double ec = 0.0;
                    for (int z2 = 0; z2 < Z; ++z2) {
                        if (ptrow[z2] == 0.0) continue;
                        ec += ptrow[z2] * config.user_cost(s, o, a, z2 / O, z2 % O);
                    }
                    acc += w * ec;
                } else {
                    double ec = 0.0;
                    for (int s2 = 0; s2 < S; ++s2)
                        ec += prow[s2] * mdp.gamma * t.beta_at(o, s2);
                    acc += w * ec;
                }
            }
            cvec[z] = acc;
        }

    std::vector<double> d(Z, 0.0), d2(Z, 0.0);
    if (config.lambda == 0.0) return cvec;

    double diff = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 2'000'000; ++it) {
        // dbar(s) = sum_o mu(o|s) d(s,o)
        std::vector<double> dbar(S, 0.0);
        for (int s = 0; s < S; ++s) {
            const double* mu = t.mu_row(s);
            for (int o = 0; o < O; ++o) dbar[s] += mu[o] * d[static_cast<std::size_t>(s) * O + o];
        }
        diff = 0.0;
#pragma omp parallel for reduction(max : diff) schedule(static)
        for (int s = 0; s < S; ++s) {
            for (int o = 0; o < O; ++o) {
                const int z = s * O + o;
                double acc = cvec[z];
                for (int a = 0; a < A; ++a) {
                    const double w = t.pi_at(o, s, a);
                    if (w == 0.0) continue;
                    const double* prow = mdp.p_row(s, a);
                    double nxt = 0.0;
                    for (int s2 = 0; s2 < S; ++s2) {
                        if (prow[s2] == 0.0) continue;
                        const double b = t.beta_at(o, s2);
                        nxt += prow[s2] *
                               ((1.0 - b) * d[static_cast<std::size_t>(s2) * O + o] + b * dbar[s2]);
                    }
                    acc += w * config.lambda * nxt;
                }
                d2[z] = acc;
                diff = std::max(diff, std::fabs(acc - d[z]));
            }
        }
        d.swap(d2);
        if (diff <= tol) return d;
    }
    throw ConvergenceError("deliberation_value did not converge", diff);
}

CostTables transformed_evaluate(const Mdp& mdp, const Theta& theta,
                                const DeliberationConfig& config, double tol) {
    if (tol <= 0.0) throw std::invalid_argument("transformed_evaluate: tol must be > 0");
    config.validate();
    const PolicyTables t = materialize(theta);
    const int S = mdp.n_states, O = theta.n_options;

    // Arrival at (s',o) carries -eta*beta(s',o) inside the discounted
    // continuation, matching the switching cost gamma*beta.
    std::vector<double> extra(static_cast<std::size_t>(O) * S, 0.0);
    for (int o = 0; o < O; ++o)
        for (int s = 0; s < S; ++s)
            extra[static_cast<std::size_t>(o) * S + s] = -config.eta * t.beta_at(o, s);
    ValueTables vt = intra_option_evaluate_with_extra(mdp, theta, extra.data(), tol);

    DeliberationConfig dcfg = config;
    dcfg.lambda = mdp.gamma;
    CostTables out;
    out.n_states = S;
    out.n_options = O;
    out.d = deliberation_value(mdp, theta, dcfg, tol);
    out.qc = std::move(vt.q);
    out.ac = std::move(vt.a);
    return out;
}

double mixed_objective(const std::vector<double>& alpha, const std::vector<double>& q,
                       const std::vector<double>& d, double eta) {
    if (alpha.size() != q.size() || q.size() != d.size())
        throw std::invalid_argument("mixed_objective: table shapes mismatch");
    double mass = 0.0;
    for (double a : alpha) mass += a;
    if (std::fabs(mass - 1.0) > 1e-9)
        throw std::invalid_argument("mixed_objective: alpha must sum to 1");
    double j = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) j += alpha[i] * (q[i] - eta * d[i]);
    return j;
}

namespace {

/// Evaluate Q for a fixed deterministic mu on the augmented chain with the
/// eta-transformed reward, by direct linear solve.
std::vector<double> eval_deterministic_mu(const Mdp& mdp, const PolicyTables& t,
                                          const std::vector<int>& mu, double eta) {
    const int S = mdp.n_states, A = mdp.n_actions, O = t.n_options;
    const int Z = S * O;
    std::vector<double> m(static_cast<std::size_t>(Z) * Z, 0.0);
    std::vector<double> rhs(Z, 0.0);
    for (int s = 0; s < S; ++s)
        for (int o = 0; o < O; ++o) {
            const int z = s * O + o;
            m[static_cast<std::size_t>(z) * Z + z] = 1.0;
            double rt = 0.0;
            for (int a = 0; a < A; ++a) {
                const double w = t.pi_at(o, s, a);
                if (w == 0.0) continue;
                rt += w * mdp.r(s, a);
                const double* prow = mdp.p_row(s, a);
                for (int s2 = 0; s2 < S; ++s2) {
                    const double p = prow[s2];
                    if (p == 0.0) continue;
                    const double b = t.beta_at(o, s2);
                    rt -= w * p * eta * mdp.gamma * b;
                    m[static_cast<std::size_t>(z) * Z + s2 * O + o] -=
                        mdp.gamma * w * p * (1.0 - b);
                    m[static_cast<std::size_t>(z) * Z + s2 * O + mu[s2]] -=
                        mdp.gamma * w * p * b;
                }
            }
            rhs[z] = rt;
        }
    return linalg::solve(std::move(m), Z, std::move(rhs));
}

}  // namespace

OptimizeMuResult optimize_mu(const Mdp& mdp, const Theta& theta,
                             const DeliberationConfig& config, double tol) {
    (void)tol;
    config.validate();
    mdp.validate();
    const PolicyTables t = materialize(theta);
    const int S = mdp.n_states, O = theta.n_options;

    std::vector<int> mu(S, 0);
    std::vector<double> q;
    for (int it = 0; it < 1000; ++it) {
        q = eval_deterministic_mu(mdp, t, mu, config.eta);
        bool changed = false;
        for (int s = 0; s < S; ++s) {
            int best = 0;
            double bq = q[static_cast<std::size_t>(s) * O];
            for (int o = 1; o < O; ++o)
                if (q[static_cast<std::size_t>(s) * O + o] > bq) {
                    bq = q[static_cast<std::size_t>(s) * O + o];
                    best = o;
                }
            // strict improvement only, so equal-valued choices cannot cycle
            if (best != mu[s] && bq > q[static_cast<std::size_t>(s) * O + mu[s]] + 1e-13) {
                mu[s] = best;
                changed = true;
            }
        }
        if (!changed) {
            OptimizeMuResult res;
            res.mu = std::move(mu);
            res.theta_mu.assign(static_cast<std::size_t>(S) * O, -1e9);
            for (int s = 0; s < S; ++s)
                res.theta_mu[static_cast<std::size_t>(s) * O + res.mu[s]] = 0.0;
            res.q = std::move(q);
            return res;
        }
    }
    throw ConvergenceError("optimize_mu policy iteration did not converge", 0.0);
}

DurationSummary expected_duration(double kappa, double gamma, double eta) {
    if (kappa < 0.0 || kappa > 1.0) throw std::invalid_argument("expected_duration: kappa in [0,1]");
    if (gamma * kappa >= 1.0)
        throw std::invalid_argument("expected_duration: gamma*kappa must be < 1");
    DurationSummary s;
    s.d = 1.0 / (1.0 - gamma * kappa);
    s.cost_rate = (1.0 - gamma * kappa) * eta;
    return s;
}

}  // namespace delib

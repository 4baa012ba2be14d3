#include "delib/options.hpp"

#include <algorithm>
#include <limits>

#include "delib/linalg.hpp"
#include "json.hpp"

namespace delib {

Theta Theta::zeros(int n_options, int n_states, int n_actions, double epsilon_mu) {
    Theta t;
    t.n_options = n_options;
    t.n_states = n_states;
    t.n_actions = n_actions;
    t.epsilon_mu = epsilon_mu;
    t.theta_pi.assign(static_cast<std::size_t>(n_options) * n_states * n_actions, 0.0);
    t.theta_beta.assign(static_cast<std::size_t>(n_options) * n_states, 0.0);
    t.theta_mu.assign(static_cast<std::size_t>(n_states) * n_options, 0.0);
    return t;
}

Theta Theta::random(int n_options, int n_states, int n_actions, double epsilon_mu,
                    double scale, Rng& rng) {
    Theta t = zeros(n_options, n_states, n_actions, epsilon_mu);
    auto fill = [&](std::vector<double>& v) {
        for (double& x : v) x = scale * (2.0 * uniform01(rng) - 1.0);
    };
    fill(t.theta_pi);
    fill(t.theta_beta);
    fill(t.theta_mu);
    return t;
}

void Theta::validate() const {
    if (n_options <= 0 || n_states <= 0 || n_actions <= 0)
        throw std::invalid_argument("Theta: counts must be positive");
    if (epsilon_mu < 0.0 || epsilon_mu > 1.0)
        throw std::invalid_argument("Theta: epsilon_mu must be in [0,1]");
    const std::size_t O = n_options, S = n_states, A = n_actions;
    if (theta_pi.size() != O * S * A || theta_beta.size() != O * S || theta_mu.size() != S * O)
        throw std::invalid_argument("Theta: block size mismatch");
}

PolicyTables materialize(const Theta& theta) {
    theta.validate();
    const int O = theta.n_options, S = theta.n_states, A = theta.n_actions;
    PolicyTables t{O, S, A, {}, {}, {}};
    t.pi.resize(static_cast<std::size_t>(O) * S * A);
    t.beta.resize(static_cast<std::size_t>(O) * S);
    t.mu.resize(static_cast<std::size_t>(S) * O);
    for (int o = 0; o < O; ++o)
        for (int s = 0; s < S; ++s) {
            theta.pi_row(o, s, &t.pi[(static_cast<std::size_t>(o) * S + s) * A]);
            t.beta[static_cast<std::size_t>(o) * S + s] = theta.beta(o, s);
        }
    for (int s = 0; s < S; ++s) theta.mu_row(s, &t.mu[static_cast<std::size_t>(s) * O]);
    return t;
}

std::vector<double> augmented_transition(const Mdp& mdp, const Theta& theta) {
    mdp.validate();
    const PolicyTables t = materialize(theta);
    const int S = mdp.n_states, A = mdp.n_actions, O = theta.n_options;
    const int Z = S * O;
    std::vector<double> pt(static_cast<std::size_t>(Z) * A * Z, 0.0);
    for (int s = 0; s < S; ++s)
        for (int o = 0; o < O; ++o) {
            const int z = s * O + o;
            for (int a = 0; a < A; ++a) {
                double* row = &pt[(static_cast<std::size_t>(z) * A + a) * Z];
                const double* prow = mdp.p_row(s, a);
                for (int s2 = 0; s2 < S; ++s2) {
                    const double p = prow[s2];
                    if (p == 0.0) continue;
                    const double b = t.beta_at(o, s2);
                    row[s2 * O + o] += p * (1.0 - b);
                    const double* mu = t.mu_row(s2);
                    for (int o2 = 0; o2 < O; ++o2) row[s2 * O + o2] += p * b * mu[o2];
                }
            }
        }
    return pt;
}

namespace {

/// One sweep of the intra-option Bellman operator through the utility
/// U(s',o) = Q(s',o) - beta(s',o) A(s',o). Jacobi update, so the result is
/// independent of the parallel schedule.
double intra_sweep(const Mdp& mdp, const PolicyTables& t, const std::vector<double>& q,
                   std::vector<double>& q_next, std::vector<double>& u_scratch,
                   const double* extra_next_reward) {
    const int S = mdp.n_states, A = mdp.n_actions, O = t.n_options;
    // u_scratch[s*O + o] = U(s,o) (+ optional per-arrival reward term)
    for (int s = 0; s < S; ++s) {
        const double* mu = t.mu_row(s);
        double v = 0.0;
        for (int o = 0; o < O; ++o) v += mu[o] * q[static_cast<std::size_t>(s) * O + o];
        for (int o = 0; o < O; ++o) {
            const double b = t.beta_at(o, s);
            double uval = (1.0 - b) * q[static_cast<std::size_t>(s) * O + o] + b * v;
            if (extra_next_reward) uval += extra_next_reward[static_cast<std::size_t>(o) * S + s];
            u_scratch[static_cast<std::size_t>(s) * O + o] = uval;
        }
    }
    double diff = 0.0;
#pragma omp parallel for reduction(max : diff) schedule(static)
    for (int s = 0; s < S; ++s) {
        for (int o = 0; o < O; ++o) {
            double acc = 0.0;
            const double* pi = t.pi_row(o, s);
            for (int a = 0; a < A; ++a) {
                if (pi[a] == 0.0) continue;
                const double* prow = mdp.p_row(s, a);
                double nxt = 0.0;
                for (int s2 = 0; s2 < S; ++s2)
                    nxt += prow[s2] * u_scratch[static_cast<std::size_t>(s2) * O + o];
                acc += pi[a] * (mdp.r(s, a) + mdp.gamma * nxt);
            }
            const std::size_t z = static_cast<std::size_t>(s) * O + o;
            q_next[z] = acc;
            diff = std::max(diff, std::fabs(acc - q[z]));
        }
    }
    return diff;
}

ValueTables assemble_tables(const PolicyTables& t, std::vector<double> q) {
    const int S = t.n_states, O = t.n_options;
    ValueTables vt;
    vt.n_states = S;
    vt.n_options = O;
    vt.v.assign(S, 0.0);
    vt.a.assign(q.size(), 0.0);
    for (int s = 0; s < S; ++s) {
        const double* mu = t.mu_row(s);
        double v = 0.0;
        for (int o = 0; o < O; ++o) v += mu[o] * q[static_cast<std::size_t>(s) * O + o];
        vt.v[s] = v;
        for (int o = 0; o < O; ++o)
            vt.a[static_cast<std::size_t>(s) * O + o] = q[static_cast<std::size_t>(s) * O + o] - v;
    }
    vt.q = std::move(q);
    return vt;
}

}  // namespace

ValueTables intra_option_evaluate_with_extra(const Mdp& mdp, const Theta& theta,
                                             const double* extra_next_reward, double tol,
                                             int max_iter) {
    if (tol <= 0.0) throw std::invalid_argument("intra_option_evaluate: tol must be > 0");
    mdp.validate();
    const PolicyTables t = materialize(theta);
    const int S = mdp.n_states, O = theta.n_options;
    std::vector<double> q(static_cast<std::size_t>(S) * O, 0.0), q2(q), u(q);
    double diff = std::numeric_limits<double>::infinity();
    for (int it = 0; it < max_iter; ++it) {
        diff = intra_sweep(mdp, t, q, q2, u, extra_next_reward);
        q.swap(q2);
        if (diff <= tol) return assemble_tables(t, std::move(q));
    }
    throw ConvergenceError("intra_option_evaluate did not converge", diff);
}

ValueTables intra_option_evaluate(const Mdp& mdp, const Theta& theta, double tol, int max_iter) {
    return intra_option_evaluate_with_extra(mdp, theta, nullptr, tol, max_iter);
}

OptionModels option_models(const Mdp& mdp, const Theta& theta, int o, double tol) {
    if (o < 0 || o >= theta.n_options) throw std::invalid_argument("option_models: bad option");
    if (tol <= 0.0) throw std::invalid_argument("option_models: tol must be > 0");
    mdp.validate();
    const PolicyTables t = materialize(theta);
    const int S = mdp.n_states, A = mdp.n_actions;

    // ppi(s,s') = sum_a pi_o(a|s) P(s'|s,a); rpi(s) = sum_a pi_o(a|s) r(s,a)
    std::vector<double> ppi(static_cast<std::size_t>(S) * S, 0.0), rpi(S, 0.0);
    for (int s = 0; s < S; ++s) {
        const double* pi = t.pi_row(o, s);
        for (int a = 0; a < A; ++a) {
            if (pi[a] == 0.0) continue;
            rpi[s] += pi[a] * mdp.r(s, a);
            const double* prow = mdp.p_row(s, a);
            for (int s2 = 0; s2 < S; ++s2) ppi[static_cast<std::size_t>(s) * S + s2] += pi[a] * prow[s2];
        }
    }

    // (I - gamma Ppi diag(1-beta)) acts on both b and F
    std::vector<double> m(static_cast<std::size_t>(S) * S, 0.0);
    for (int s = 0; s < S; ++s) {
        m[static_cast<std::size_t>(s) * S + s] = 1.0;
        for (int s2 = 0; s2 < S; ++s2)
            m[static_cast<std::size_t>(s) * S + s2] -=
                mdp.gamma * ppi[static_cast<std::size_t>(s) * S + s2] * (1.0 - t.beta_at(o, s2));
    }
    linalg::LuFactor lu = linalg::lu_factor(std::move(m), S);

    OptionModels out;
    out.b = rpi;
    linalg::lu_solve_inplace(lu, out.b);

    out.f.assign(static_cast<std::size_t>(S) * S, 0.0);
    std::vector<double> col(S);
    for (int s2 = 0; s2 < S; ++s2) {
        for (int s = 0; s < S; ++s)
            col[s] = mdp.gamma * ppi[static_cast<std::size_t>(s) * S + s2] * t.beta_at(o, s2);
        linalg::lu_solve_inplace(lu, col);
        for (int s = 0; s < S; ++s) out.f[static_cast<std::size_t>(s) * S + s2] = col[s];
    }

    // direct solves land at machine precision; verify against the stated tol
    double resid = 0.0;
    for (int s = 0; s < S; ++s) {
        double acc = rpi[s];
        for (int s2 = 0; s2 < S; ++s2)
            acc += mdp.gamma * ppi[static_cast<std::size_t>(s) * S + s2] * (1.0 - t.beta_at(o, s2)) *
                   out.b[s2];
        resid = std::max(resid, std::fabs(acc - out.b[s]));
    }
    if (resid > tol) throw ConvergenceError("option_models residual above tol", resid);
    return out;
}

std::vector<double> smdp_evaluate(const Mdp& mdp, const Theta& theta, double tol) {
    if (tol <= 0.0) throw std::invalid_argument("smdp_evaluate: tol must be > 0");
    const PolicyTables t = materialize(theta);
    const int S = mdp.n_states, O = theta.n_options;
    std::vector<OptionModels> models;
    models.reserve(O);
    for (int o = 0; o < O; ++o) models.push_back(option_models(mdp, theta, o, tol));

    std::vector<double> q(static_cast<std::size_t>(S) * O, 0.0), v(S, 0.0);
    double diff = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 2'000'000; ++it) {
        for (int s = 0; s < S; ++s) {
            const double* mu = t.mu_row(s);
            double acc = 0.0;
            for (int o = 0; o < O; ++o) acc += mu[o] * q[static_cast<std::size_t>(s) * O + o];
            v[s] = acc;
        }
        diff = 0.0;
        for (int o = 0; o < O; ++o) {
            const OptionModels& mo = models[o];
            for (int s = 0; s < S; ++s) {
                double acc = mo.b[s];
                const double* frow = &mo.f[static_cast<std::size_t>(s) * S];
                for (int s2 = 0; s2 < S; ++s2) acc += frow[s2] * v[s2];
                const std::size_t z = static_cast<std::size_t>(s) * O + o;
                diff = std::max(diff, std::fabs(acc - q[z]));
                q[z] = acc;
            }
        }
        if (diff <= tol) return q;
    }
    throw ConvergenceError("smdp_evaluate did not converge", diff);
}

Trajectory execute(const Mdp& mdp, const Theta& theta, ExecutionMode mode, int start,
                   Rng& rng, int horizon) {
    if (horizon <= 0) throw std::invalid_argument("execute: horizon must be > 0");
    const PolicyTables t = materialize(theta);
    const int O = theta.n_options;
    ValueTables vt;
    if (mode == ExecutionMode::Interruption)
        vt = intra_option_evaluate(mdp, theta, 1e-10);

    Trajectory traj;
    traj.steps.reserve(horizon);
    int s = start;
    int o = sample_discrete(t.mu_row(s), O, rng);
    for (int k = 0; k < horizon; ++k) {
        int a = sample_discrete(t.pi_row(o, s), mdp.n_actions, rng);
        auto [s2, r] = sample_transition(mdp, s, a, rng);
        bool term = uniform01(rng) < t.beta_at(o, s2);
        if (mode == ExecutionMode::Interruption && vt.a_at(s2, o) < 0.0) term = true;
        traj.steps.push_back({s, o, a, r, term});
        if (term) o = sample_discrete(t.mu_row(s2), O, rng);
        s = s2;
    }
    return traj;
}

Theta Theta::from_json_text(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    Theta t;
    t.n_options = j.at("n_options").get<int>();
    t.n_states = j.at("n_states").get<int>();
    t.n_actions = j.at("n_actions").get<int>();
    t.epsilon_mu = j.at("epsilon_mu").get<double>();
    t.theta_pi = j.at("theta_pi").get<std::vector<double>>();
    t.theta_beta = j.at("theta_beta").get<std::vector<double>>();
    t.theta_mu = j.at("theta_mu").get<std::vector<double>>();
    t.validate();
    return t;
}

std::string Theta::to_json_text() const {
    nlohmann::json j;
    j["n_options"] = n_options;
    j["n_states"] = n_states;
    j["n_actions"] = n_actions;
    j["epsilon_mu"] = epsilon_mu;
    j["theta_pi"] = theta_pi;
    j["theta_beta"] = theta_beta;
    j["theta_mu"] = theta_mu;
    return j.dump(2);
}

Trajectory Trajectory::from_json_text(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    Trajectory traj;
    for (const auto& st : j.at("steps")) {
        traj.steps.push_back({st.at("s").get<int>(), st.at("o").get<int>(),
                              st.at("a").get<int>(), st.at("r").get<double>(),
                              st.at("switched").get<bool>()});
    }
    return traj;
}

std::string Trajectory::to_json_text() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& st : steps)
        arr.push_back({{"s", st.s}, {"o", st.o}, {"a", st.a}, {"r", st.r},
                       {"switched", st.switched}});
    nlohmann::json j;
    j["steps"] = std::move(arr);
    return j.dump();
}

}  // namespace delib

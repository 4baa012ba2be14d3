#include "delib/gradients.hpp"

#include <algorithm>
#include <cmath>

#include "delib/linalg.hpp"
#include "json.hpp"

namespace delib {

namespace {

constexpr double kEvalTol = 1e-12;

void check_alpha(const std::vector<double>& alpha, int z) {
    if (static_cast<int>(alpha.size()) != z)
        throw std::invalid_argument("alpha: wrong size for the augmented space");
    double mass = 0.0;
    for (double a : alpha) {
        if (a < 0.0) throw std::invalid_argument("alpha: negative mass");
        mass += a;
    }
    if (std::fabs(mass - 1.0) > 1e-9) throw std::invalid_argument("alpha: must sum to 1");
}

/// Marginal augmented kernel M(z,z') = sum_a pi(a|z) P~(z'|z,a), row-major.
std::vector<double> marginal_kernel(const Mdp& mdp, const PolicyTables& t) {
    const int S = mdp.n_states, A = mdp.n_actions, O = t.n_options;
    const int Z = S * O;
    std::vector<double> m(static_cast<std::size_t>(Z) * Z, 0.0);
    for (int s = 0; s < S; ++s)
        for (int o = 0; o < O; ++o) {
            double* row = &m[static_cast<std::size_t>(s * O + o) * Z];
            for (int a = 0; a < A; ++a) {
                const double w = t.pi_at(o, s, a);
                if (w == 0.0) continue;
                const double* prow = mdp.p_row(s, a);
                for (int s2 = 0; s2 < S; ++s2) {
                    const double p = w * prow[s2];
                    if (p == 0.0) continue;
                    const double b = t.beta_at(o, s2);
                    row[s2 * O + o] += p * (1.0 - b);
                    const double* mu = t.mu_row(s2);
                    for (int o2 = 0; o2 < O; ++o2) row[s2 * O + o2] += p * b * mu[o2];
                }
            }
        }
    return m;
}

/// Solve (I - disc * M^T) rho = alpha.
std::vector<double> occupancy_from(const std::vector<double>& m, int z,
                                   std::vector<double> alpha, double disc) {
    std::vector<double> sys(static_cast<std::size_t>(z) * z, 0.0);
    for (int i = 0; i < z; ++i) {
        sys[static_cast<std::size_t>(i) * z + i] = 1.0;
        for (int j = 0; j < z; ++j)
            sys[static_cast<std::size_t>(i) * z + j] -= disc * m[static_cast<std::size_t>(j) * z + i];
    }
    return linalg::solve(std::move(sys), z, std::move(alpha));
}

/// Inflow weight W(o,s') = sum_s rho(s,o) sum_a pi(a|s,o) P(s'|s,a):
/// discount-weighted probability of arriving at s' while running o.
std::vector<double> inflow_weight(const Mdp& mdp, const PolicyTables& t,
                                  const std::vector<double>& rho) {
    const int S = mdp.n_states, A = mdp.n_actions, O = t.n_options;
    std::vector<double> w(static_cast<std::size_t>(O) * S, 0.0);
    for (int s = 0; s < S; ++s)
        for (int o = 0; o < O; ++o) {
            const double mass = rho[static_cast<std::size_t>(s) * O + o];
            if (mass == 0.0) continue;
            for (int a = 0; a < A; ++a) {
                const double wa = t.pi_at(o, s, a);
                if (wa == 0.0) continue;
                const double* prow = mdp.p_row(s, a);
                for (int s2 = 0; s2 < S; ++s2)
                    w[static_cast<std::size_t>(o) * S + s2] += mass * wa * prow[s2];
            }
        }
    return w;
}

double sigmoid_slope(double logit) {
    const double b = sigmoid(logit);
    return b * (1.0 - b);
}

}  // namespace

std::vector<double> discounted_occupancy(const Mdp& mdp, const Theta& theta,
                                         const std::vector<double>& alpha, double tol) {
    if (tol <= 0.0) throw std::invalid_argument("discounted_occupancy: tol must be > 0");
    mdp.validate();
    const PolicyTables t = materialize(theta);
    const int Z = mdp.n_states * theta.n_options;
    check_alpha(alpha, Z);
    const std::vector<double> m = marginal_kernel(mdp, t);
    std::vector<double> rho = occupancy_from(m, Z, alpha, mdp.gamma);
    // direct solve; confirm the fixed-point residual anyway
    double resid = 0.0;
    for (int i = 0; i < Z; ++i) {
        double acc = alpha[i];
        for (int j = 0; j < Z; ++j)
            acc += mdp.gamma * m[static_cast<std::size_t>(j) * Z + i] * rho[j];
        resid = std::max(resid, std::fabs(acc - rho[i]));
    }
    if (resid > std::max(tol, 1e-9)) throw ConvergenceError("discounted_occupancy residual", resid);

    // Pairs unreachable from the support of alpha carry exactly zero mass;
    // pin them so downstream gradients are exact zeros, not solver noise.
    std::vector<char> reach(Z, 0);
    std::vector<int> stack;
    for (int z = 0; z < Z; ++z)
        if (alpha[z] > 0.0) { reach[z] = 1; stack.push_back(z); }
    while (!stack.empty()) {
        int z = stack.back();
        stack.pop_back();
        const double* row = &m[static_cast<std::size_t>(z) * Z];
        for (int z2 = 0; z2 < Z; ++z2)
            if (row[z2] > 0.0 && !reach[z2]) { reach[z2] = 1; stack.push_back(z2); }
    }
    for (int z = 0; z < Z; ++z)
        if (!reach[z]) rho[z] = 0.0;
    return rho;
}

GradientReport option_policy_gradient(const Mdp& mdp, const Theta& theta,
                                      const std::vector<double>& alpha) {
    const PolicyTables t = materialize(theta);
    const int S = mdp.n_states, A = mdp.n_actions, O = theta.n_options;
    check_alpha(alpha, S * O);

    const ValueTables vt = intra_option_evaluate(mdp, theta, kEvalTol);
    const std::vector<double> rho = discounted_occupancy(mdp, theta, alpha);

    // u(s,o) = Q(s,o) - beta(s,o) A(s,o)
    std::vector<double> u(static_cast<std::size_t>(S) * O);
    for (int s = 0; s < S; ++s)
        for (int o = 0; o < O; ++o)
            u[static_cast<std::size_t>(s) * O + o] =
                vt.q_at(s, o) - t.beta_at(o, s) * vt.a_at(s, o);

    GradientReport g;
    g.regime = GradientRegime::Plain;
    g.d_theta_pi.assign(theta.theta_pi.size(), 0.0);
    g.d_theta_beta.assign(theta.theta_beta.size(), 0.0);

    std::vector<double> qtilde(A);
    for (int s = 0; s < S; ++s)
        for (int o = 0; o < O; ++o) {
            const double mass = rho[static_cast<std::size_t>(s) * O + o];
            if (mass == 0.0) continue;
            const double* pi = t.pi_row(o, s);
            double mean = 0.0;
            for (int a = 0; a < A; ++a) {
                const double* prow = mdp.p_row(s, a);
                double nxt = 0.0;
                for (int s2 = 0; s2 < S; ++s2)
                    nxt += prow[s2] * u[static_cast<std::size_t>(s2) * O + o];
                qtilde[a] = mdp.r(s, a) + mdp.gamma * nxt;
                mean += pi[a] * qtilde[a];
            }
            for (int a = 0; a < A; ++a)
                g.d_theta_pi[(static_cast<std::size_t>(o) * S + s) * A + a] =
                    mass * pi[a] * (qtilde[a] - mean);
        }
    return g;
}

std::vector<double> deliberation_gradient(const Mdp& mdp, const Theta& theta,
                                          const std::vector<double>& alpha, double lambda) {
    if (lambda < 0.0 || lambda >= 1.0)
        throw std::invalid_argument("deliberation_gradient: lambda in [0,1)");
    const PolicyTables t = materialize(theta);
    const int S = mdp.n_states, O = theta.n_options;
    const int Z = S * O;
    check_alpha(alpha, Z);

    DeliberationConfig cfg;
    cfg.lambda = lambda;
    const std::vector<double> d = deliberation_value(mdp, theta, cfg, kEvalTol);
    std::vector<double> dbar(S, 0.0);
    for (int s = 0; s < S; ++s) {
        const double* mu = t.mu_row(s);
        for (int o = 0; o < O; ++o) dbar[s] += mu[o] * d[static_cast<std::size_t>(s) * O + o];
    }

    std::vector<double> rho_l;
    if (lambda == 0.0) {
        rho_l = alpha;
    } else {
        const std::vector<double> m = marginal_kernel(mdp, t);
        rho_l = occupancy_from(m, Z, alpha, lambda);
    }
    const std::vector<double> w = inflow_weight(mdp, t, rho_l);

    std::vector<double> g(theta.theta_beta.size(), 0.0);
    for (int o = 0; o < O; ++o)
        for (int s2 = 0; s2 < S; ++s2) {
            const double slope = sigmoid_slope(theta.beta_logit(o, s2));
            const double dgap = dbar[s2] - d[static_cast<std::size_t>(s2) * O + o];
            g[static_cast<std::size_t>(o) * S + s2] =
                w[static_cast<std::size_t>(o) * S + s2] * slope * (mdp.gamma + lambda * dgap);
        }
    return g;
}

GradientReport termination_gradient(const Mdp& mdp, const Theta& theta,
                                    const std::vector<double>& alpha,
                                    const DeliberationConfig& config, GradientRegime regime) {
    config.validate();
    const PolicyTables t = materialize(theta);
    const int S = mdp.n_states, O = theta.n_options;
    check_alpha(alpha, S * O);

    const std::vector<double> rho = discounted_occupancy(mdp, theta, alpha);
    const std::vector<double> w = inflow_weight(mdp, t, rho);

    // advantage term contracted at arrival states
    std::vector<double> adv;
    double margin = 0.0;
    if (regime == GradientRegime::Plain) {
        adv = intra_option_evaluate(mdp, theta, kEvalTol).a;
    } else if (regime == GradientRegime::LambdaGamma) {
        adv = transformed_evaluate(mdp, theta, config, kEvalTol).ac;
        margin = config.eta;
    } else {
        adv = intra_option_evaluate(mdp, theta, kEvalTol).a;
    }

    GradientReport g;
    g.regime = regime;
    g.d_theta_pi.assign(theta.theta_pi.size(), 0.0);
    g.d_theta_beta.assign(theta.theta_beta.size(), 0.0);
    for (int o = 0; o < O; ++o)
        for (int s2 = 0; s2 < S; ++s2) {
            const double slope = sigmoid_slope(theta.beta_logit(o, s2));
            g.d_theta_beta[static_cast<std::size_t>(o) * S + s2] =
                -mdp.gamma * slope * (adv[static_cast<std::size_t>(s2) * O + o] + margin) *
                w[static_cast<std::size_t>(o) * S + s2];
        }

    if (regime == GradientRegime::LambdaZero && config.eta != 0.0) {
        // exact derivative of the lambda=0 cost term: the immediate cost is
        // only accumulated from alpha itself, not along the gamma-chain
        const std::vector<double> dg = deliberation_gradient(mdp, theta, alpha, 0.0);
        for (std::size_t i = 0; i < g.d_theta_beta.size(); ++i)
            g.d_theta_beta[i] -= config.eta * dg[i];
    }
    return g;
}

GradientReport termination_gradient_exact_bellman(const Mdp& mdp, const Theta& theta,
                                                  const std::vector<double>& alpha, double tol) {
    if (tol <= 0.0) throw std::invalid_argument("termination_gradient_exact_bellman: tol > 0");
    const PolicyTables t = materialize(theta);
    const int S = mdp.n_states, O = theta.n_options;
    const int Z = S * O;
    check_alpha(alpha, Z);

    const ValueTables vt = intra_option_evaluate(mdp, theta, kEvalTol);
    const std::vector<double> m = marginal_kernel(mdp, t);

    // dQ_c = gamma * M dQ_c + h_c  =>  factor (I - gamma M) once
    std::vector<double> sys(static_cast<std::size_t>(Z) * Z, 0.0);
    for (int i = 0; i < Z; ++i) {
        sys[static_cast<std::size_t>(i) * Z + i] = 1.0;
        for (int j = 0; j < Z; ++j)
            sys[static_cast<std::size_t>(i) * Z + j] -=
                mdp.gamma * m[static_cast<std::size_t>(i) * Z + j];
    }
    const linalg::LuFactor lu = linalg::lu_factor(std::move(sys), Z);

    // arrival kernel K(z -> s') = sum_a pi(a|z) P(s'|s,a)
    std::vector<double> k(static_cast<std::size_t>(Z) * S, 0.0);
    for (int s = 0; s < S; ++s)
        for (int o = 0; o < O; ++o)
            for (int a = 0; a < mdp.n_actions; ++a) {
                const double wpa = t.pi_at(o, s, a);
                if (wpa == 0.0) continue;
                const double* prow = mdp.p_row(s, a);
                for (int s2 = 0; s2 < S; ++s2)
                    k[static_cast<std::size_t>(s * O + o) * S + s2] += wpa * prow[s2];
            }

    GradientReport g;
    g.regime = GradientRegime::Plain;
    g.d_theta_pi.assign(theta.theta_pi.size(), 0.0);
    g.d_theta_beta.assign(theta.theta_beta.size(), 0.0);

    std::vector<double> h(Z);
    for (int oc = 0; oc < O; ++oc)
        for (int sc = 0; sc < S; ++sc) {
            const double slope = sigmoid_slope(theta.beta_logit(oc, sc));
            const double aval = vt.a_at(sc, oc);
            // "reward" term of the derivative recursion
            for (int s = 0; s < S; ++s)
                for (int o = 0; o < O; ++o)
                    h[s * O + o] = (o == oc)
                                       ? -mdp.gamma * slope * aval *
                                             k[static_cast<std::size_t>(s * O + o) * S + sc]
                                       : 0.0;
            linalg::lu_solve_inplace(lu, h);
            double acc = 0.0;
            for (int z = 0; z < Z; ++z) acc += alpha[z] * h[z];
            g.d_theta_beta[static_cast<std::size_t>(oc) * S + sc] = acc;
        }
    return g;
}

namespace {

double& theta_coordinate(Theta& theta, std::size_t idx) {
    if (idx < theta.theta_pi.size()) return theta.theta_pi[idx];
    return theta.theta_beta[idx - theta.theta_pi.size()];
}

}  // namespace

GradientReport fd_gradient(const std::function<double(const Theta&)>& objective,
                           const Theta& theta, ThetaBlock block, double h) {
    if (h <= 0.0) throw std::invalid_argument("fd_gradient: h must be > 0");
    const std::size_t n_pi = theta.theta_pi.size();
    const std::size_t n = n_pi + theta.theta_beta.size();
    const std::size_t lo = block == ThetaBlock::Beta ? n_pi : 0;
    const std::size_t hi = block == ThetaBlock::Pi ? n_pi : n;
    std::vector<double> grad(n, 0.0);
#pragma omp parallel for schedule(dynamic, 8)
    for (long long i = static_cast<long long>(lo); i < static_cast<long long>(hi); ++i) {
        Theta tp = theta;
        double& x = theta_coordinate(tp, static_cast<std::size_t>(i));
        const double x0 = x;
        x = x0 + h;
        const double fp = objective(tp);
        x = x0 - h;
        const double fm = objective(tp);
        grad[static_cast<std::size_t>(i)] = (fp - fm) / (2.0 * h);
    }
    GradientReport g;
    g.d_theta_pi.assign(grad.begin(), grad.begin() + n_pi);
    g.d_theta_beta.assign(grad.begin() + n_pi, grad.end());
    return g;
}

FdReport finite_difference_check(const std::function<double(const Theta&)>& objective,
                                 const Theta& theta, const GradientReport& analytic,
                                 ThetaBlock block, double h) {
    const GradientReport fd = fd_gradient(objective, theta, block, h);
    FdReport rep;
    auto scan = [&](const std::vector<double>& a, const std::vector<double>& f,
                    const char* name) {
        if (a.size() != f.size())
            throw std::invalid_argument("finite_difference_check: shape mismatch");
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double err = std::fabs(a[i] - f[i]) / std::max(1.0, std::fabs(a[i]));
            if (err > rep.max_rel_error) {
                rep.max_rel_error = err;
                rep.worst_coordinate = std::string(name) + "[" + std::to_string(i) + "]";
            }
        }
    };
    if (block != ThetaBlock::Beta) scan(analytic.d_theta_pi, fd.d_theta_pi, "theta_pi");
    if (block != ThetaBlock::Pi) scan(analytic.d_theta_beta, fd.d_theta_beta, "theta_beta");
    return rep;
}

std::string GradientReport::to_json_text() const {
    nlohmann::json j;
    j["regime"] = regime == GradientRegime::Plain
                      ? "plain"
                      : (regime == GradientRegime::LambdaGamma ? "lambda_gamma" : "lambda_zero");
    j["d_theta_pi"] = d_theta_pi;
    j["d_theta_beta"] = d_theta_beta;
    return j.dump();
}

}  // namespace delib

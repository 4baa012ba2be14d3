#pragma once

// Small instances and theta builders shared by the test binaries.

#include <cmath>
#include <vector>

#include "delib/mdp.hpp"
#include "delib/options.hpp"

namespace fixtures {

// two states; "go" moves 0->1 and self-loops at 1, "stay" self-loops;
// r(0,go)=1, gamma=0.5
inline delib::Mdp chain2() {
    delib::Mdp m;
    m.n_states = 2;
    m.n_actions = 2;
    m.gamma = 0.5;
    m.transition.assign(2 * 2 * 2, 0.0);
    m.reward.assign(2 * 2, 0.0);
    m.initial_dist = {1.0, 0.0};
    m.p(0, 0, 1) = 1.0;
    m.p(1, 0, 1) = 1.0;
    m.p(0, 1, 0) = 1.0;
    m.p(1, 1, 1) = 1.0;
    m.r(0, 0) = 1.0;
    return m;
}

// logit large enough that sigmoid/softmax round to exactly 1 in double
inline constexpr double kHardLogit = 40.0;

inline void set_point_policy(delib::Theta& t, int o, int a) {
    for (int s = 0; s < t.n_states; ++s) {
        for (int b = 0; b < t.n_actions; ++b) t.pi_logit(o, s, b) = 0.0;
        t.pi_logit(o, s, a) = kHardLogit;
    }
}

inline void set_const_beta(delib::Theta& t, int o, double beta) {
    double logit;
    if (beta <= 0.0)
        logit = -kHardLogit;
    else if (beta >= 1.0)
        logit = kHardLogit;
    else
        logit = std::log(beta / (1.0 - beta));
    for (int s = 0; s < t.n_states; ++s) t.beta_logit(o, s) = logit;
}

inline void set_mu_deterministic(delib::Theta& t, const std::vector<int>& mu) {
    for (int s = 0; s < t.n_states; ++s)
        for (int o = 0; o < t.n_options; ++o)
            t.theta_mu[static_cast<std::size_t>(s) * t.n_options + o] =
                (o == mu[s]) ? 0.0 : -1e9;
}

// start distribution lifted to (s,o) by the policy over options
inline std::vector<double> alpha_from(const delib::Mdp& mdp, const delib::Theta& theta) {
    const int O = theta.n_options;
    std::vector<double> alpha(static_cast<std::size_t>(mdp.n_states) * O, 0.0);
    std::vector<double> mu(O);
    for (int s = 0; s < mdp.n_states; ++s) {
        if (mdp.initial_dist[s] == 0.0) continue;
        theta.mu_row(s, mu.data());
        for (int o = 0; o < O; ++o)
            alpha[static_cast<std::size_t>(s) * O + o] = mdp.initial_dist[s] * mu[o];
    }
    return alpha;
}

// one primitive-like option per action: point policy, always terminate
inline delib::Theta primitive_options(const delib::Mdp& mdp, double epsilon_mu = 0.0) {
    delib::Theta t = delib::Theta::zeros(mdp.n_actions, mdp.n_states, mdp.n_actions, epsilon_mu);
    for (int a = 0; a < mdp.n_actions; ++a) {
        set_point_policy(t, a, a);
        set_const_beta(t, a, 1.0);
    }
    return t;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

}  // namespace fixtures

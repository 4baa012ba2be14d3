#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <omp.h>

#include <cmath>

#include "delib/gridworld.hpp"
#include "delib/oracle.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace delib;
using fixtures::chain2;

TEST_CASE("augmented chain: shapes, stochastic rows, cost bounds") {
    Mdp m = chain2();
    Rng rng(3);
    Theta t = Theta::random(3, 2, 2, 0.1, 0.8, rng);
    oracle::AugmentedMdp am = oracle::build_augmented(m, t);
    CHECK(am.n_z == 6);
    CHECK(am.n_options == 3);
    CHECK(am.gamma == m.gamma);
    for (int z = 0; z < am.n_z; ++z) {
        double row = 0.0;
        for (int z2 = 0; z2 < am.n_z; ++z2) {
            double p = am.kernel[static_cast<std::size_t>(z) * am.n_z + z2];
            CHECK(p >= 0.0);
            row += p;
        }
        CHECK(row == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(am.cost[z] >= 0.0);
        CHECK(am.cost[z] <= m.gamma);
    }
}

TEST_CASE("augmented chain: single non-terminating option is just the chain") {
    // point-"go", beta == 0: Q(0)=1, Q(1)=0 by hand
    Mdp m = chain2();
    Theta t = Theta::zeros(1, 2, 2, 0.0);
    fixtures::set_point_policy(t, 0, 0);
    fixtures::set_const_beta(t, 0, 0.0);
    std::vector<double> v = oracle::augmented_value_iteration(m, t, nullptr, 1e-12);
    CHECK(v[0] == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(std::fabs(v[1]) < 1e-10);
    for (double c : oracle::build_augmented(m, t).cost) CHECK(std::fabs(c) < 1e-15);
}

TEST_CASE("augmented value iteration agrees with the direct solve") {
    GridWorld w = build_intersection_maze(make_ladder_maze(), 0.9);
    Rng rng(7);
    Theta t = Theta::random(3, w.mdp.n_states, 4, 0.1, 0.9, rng);
    SUBCASE("plain reward") {
        std::vector<double> a = oracle::augmented_value_iteration(w.mdp, t, nullptr, 1e-12);
        std::vector<double> b = oracle::augmented_solve(w.mdp, t, nullptr);
        CHECK(fixtures::max_abs_diff(a, b) < 1e-9);
    }
    SUBCASE("cost-transformed reward") {
        DeliberationConfig cfg;
        cfg.eta = 0.05;
        cfg.lambda = w.mdp.gamma;
        std::vector<double> a = oracle::augmented_value_iteration(w.mdp, t, &cfg, 1e-12);
        std::vector<double> b = oracle::augmented_solve(w.mdp, t, &cfg);
        CHECK(fixtures::max_abs_diff(a, b) < 1e-9);
    }
}

TEST_CASE("objective hand case: always terminate, single option") {
    // D^gamma = gamma/(1-gamma) = 1 at gamma = 1/2, so J = Q(0) - eta
    Mdp m = chain2();
    Theta t = Theta::zeros(1, 2, 2, 0.0);
    fixtures::set_point_policy(t, 0, 0);
    fixtures::set_const_beta(t, 0, 1.0);
    std::vector<double> alpha = {1.0, 0.0};
    for (double eta : {0.0, 0.3}) {
        double j = oracle::objective(m, t, alpha, eta, m.gamma);
        CHECK(j == doctest::Approx(1.0 - eta).epsilon(1e-10));
    }
}

TEST_CASE("objective: eta = 0 is invariant to lambda") {
    Mdp m = chain2();
    Rng rng(11);
    Theta t = Theta::random(2, 2, 2, 0.1, 0.8, rng);
    std::vector<double> alpha = fixtures::alpha_from(m, t);
    double j0 = oracle::objective(m, t, alpha, 0.0, 0.0);
    double jg = oracle::objective(m, t, alpha, 0.0, m.gamma);
    CHECK(j0 == doctest::Approx(jg).epsilon(1e-12));
}

TEST_CASE("monte-carlo return matches the analytic objective") {
    Mdp m = chain2();
    Rng rng(13);
    Theta t = Theta::random(2, 2, 2, 0.1, 0.7, rng);
    std::vector<double> alpha = fixtures::alpha_from(m, t);
    DeliberationConfig cfg;
    cfg.lambda = m.gamma;
    const double exact_q = oracle::objective(m, t, alpha, 0.0, cfg.lambda);

    oracle::MonteCarloResult mc = oracle::monte_carlo_objective(m, t, cfg, 100'000, 50, 17);
    CHECK(std::fabs(mc.mean_return - exact_q) <= 3.0 * mc.se_return + mc.bias_bound_return);
    // chain2: rmax = 1, so the truncation bound is gamma^h / (1-gamma)
    CHECK(mc.bias_bound_return ==
          doctest::Approx(std::pow(m.gamma, 50) / (1.0 - m.gamma)).epsilon(1e-12));
}

TEST_CASE("monte-carlo truncation bias shrinks with the horizon") {
    Mdp m = chain2();
    Rng rng(17);
    Theta t = Theta::random(2, 2, 2, 0.1, 0.7, rng);
    DeliberationConfig cfg;
    cfg.lambda = m.gamma;
    oracle::MonteCarloResult short_h = oracle::monte_carlo_objective(m, t, cfg, 1000, 5, 3);
    oracle::MonteCarloResult long_h = oracle::monte_carlo_objective(m, t, cfg, 1000, 40, 3);
    CHECK(long_h.bias_bound_return < short_h.bias_bound_return);
    CHECK(long_h.bias_bound_cost < short_h.bias_bound_cost);
}

TEST_CASE("monte-carlo standard error shrinks like 1/sqrt(n)") {
    Mdp m = chain2();
    Rng rng(19);
    Theta t = Theta::random(2, 2, 2, 0.1, 0.7, rng);
    DeliberationConfig cfg;
    cfg.lambda = m.gamma;
    oracle::MonteCarloResult small = oracle::monte_carlo_objective(m, t, cfg, 4'000, 40, 5);
    oracle::MonteCarloResult big = oracle::monte_carlo_objective(m, t, cfg, 64'000, 40, 5);
    const double ratio = big.se_return / small.se_return;  // expect ~1/4
    CHECK(ratio > 0.15);
    CHECK(ratio < 0.35);
}

TEST_CASE("monte-carlo result is independent of the thread count") {
    Mdp m = chain2();
    Rng rng(23);
    Theta t = Theta::random(2, 2, 2, 0.1, 0.7, rng);
    DeliberationConfig cfg;
    cfg.lambda = m.gamma;
    const int saved = omp_get_max_threads();
    omp_set_num_threads(1);
    oracle::MonteCarloResult serial = oracle::monte_carlo_objective(m, t, cfg, 20'000, 30, 7);
    omp_set_num_threads(4);
    oracle::MonteCarloResult parallel = oracle::monte_carlo_objective(m, t, cfg, 20'000, 30, 7);
    omp_set_num_threads(saved);
    CHECK(serial.mean_return == parallel.mean_return);
    CHECK(serial.mean_cost == parallel.mean_cost);
    CHECK(serial.se_return == parallel.se_return);
}

TEST_CASE("enumerating deterministic mu") {
    Mdp m = chain2();
    // o0 "go" with beta 0.9, o1 "go" with beta 0.05: identical returns,
    // different switching costs
    Theta t = Theta::zeros(2, 2, 2, 0.0);
    fixtures::set_point_policy(t, 0, 0);
    fixtures::set_point_policy(t, 1, 0);
    fixtures::set_const_beta(t, 0, 0.9);
    fixtures::set_const_beta(t, 1, 0.05);
    std::vector<double> alpha = {0.5, 0.5, 0.0, 0.0};
    DeliberationConfig cfg;
    cfg.lambda = m.gamma;

    SUBCASE("covers the whole grid and each entry cross-checks") {
        cfg.eta = 0.1;
        oracle::EnumerateMuResult res = oracle::enumerate_deterministic_mu(m, t, cfg, alpha);
        CHECK(res.objectives.size() == 4);
        for (long idx = 0; idx < 4; ++idx) {
            // odometer: state 0 cycles fastest
            Theta tm = t;
            fixtures::set_mu_deterministic(tm, {static_cast<int>(idx % 2),
                                                static_cast<int>(idx / 2)});
            double j = oracle::objective(m, tm, alpha, cfg.eta, cfg.lambda);
            CHECK(res.objectives[idx] == doctest::Approx(j).epsilon(1e-10));
            CHECK(res.best_objective >= res.objectives[idx]);
        }
    }
    SUBCASE("large eta selects the persistent option") {
        cfg.eta = 2.0;
        oracle::EnumerateMuResult res = oracle::enumerate_deterministic_mu(m, t, cfg, alpha);
        // state 0 is never re-entered, so only mu(1) is pinned down
        CHECK(res.best_mu[1] == 1);
    }
    SUBCASE("alpha validation") {
        std::vector<double> bad = {1.0};
        CHECK_THROWS_AS(oracle::enumerate_deterministic_mu(m, t, cfg, bad),
                        std::invalid_argument);
    }
}

TEST_CASE("enumeration refuses oversized instances") {
    GridWorld w = build_four_rooms(1.0 / 3.0, 0.99);
    Theta t = Theta::zeros(4, w.mdp.n_states, 4, 0.0);
    std::vector<double> alpha(static_cast<std::size_t>(w.mdp.n_states) * 4, 0.0);
    alpha[0] = 1.0;
    CHECK_THROWS_AS(oracle::enumerate_deterministic_mu(w.mdp, t, DeliberationConfig{}, alpha),
                    std::invalid_argument);
}

TEST_CASE("enumeration agrees with policy iteration over mu") {
    Mdp m = chain2();
    Theta t = Theta::zeros(2, 2, 2, 0.0);
    fixtures::set_point_policy(t, 0, 0);   // "go", terminates often
    fixtures::set_point_policy(t, 1, 1);   // "stay", persistent
    fixtures::set_const_beta(t, 0, 0.8);
    fixtures::set_const_beta(t, 1, 0.1);
    for (double eta : {0.0, 0.01, 0.1}) {
        DeliberationConfig cfg;
        cfg.eta = eta;
        cfg.lambda = m.gamma;
        OptimizeMuResult pi_res = optimize_mu(m, t, cfg);
        Theta tm = t;
        tm.theta_mu = pi_res.theta_mu;
        tm.epsilon_mu = 0.0;
        std::vector<double> alpha = fixtures::alpha_from(m, tm);
        oracle::EnumerateMuResult en = oracle::enumerate_deterministic_mu(m, t, cfg, alpha);
        CHECK(en.best_objective ==
              doctest::Approx(oracle::objective(m, tm, alpha, eta, cfg.lambda)).epsilon(1e-9));
    }
}

TEST_CASE("primitive options recover the base optimum state by state") {
    Mdp m = chain2();
    Theta t = fixtures::primitive_options(m);
    ValueIterationResult vi = value_iteration(m, 1e-12);
    DeliberationConfig cfg;  // eta = 0
    for (int s = 0; s < 2; ++s) {
        double best = -1e300;
        for (int o = 0; o < 2; ++o) {
            std::vector<double> alpha(4, 0.0);
            alpha[static_cast<std::size_t>(s) * 2 + o] = 1.0;
            best = std::max(best,
                            oracle::enumerate_deterministic_mu(m, t, cfg, alpha).best_objective);
        }
        CHECK(best == doctest::Approx(vi.values[s]).epsilon(1e-9));
    }
}

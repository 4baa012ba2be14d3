// Timing harness: OpenMP kernels against the serial reference, plus a
// 1-thread vs N-thread comparison showing the parallel results are
// schedule-independent.
#include <chrono>
#include <cmath>
#include <cstdio>

#include <omp.h>

#include "delib/gradients.hpp"
#include "delib/gridworld.hpp"
#include "delib/oracle.hpp"

using namespace delib;

namespace {

double now_s() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

}  // namespace

int main() {
    const GridWorld world = build_four_rooms(1.0 / 3.0, 0.99);
    Rng rng(7);
    const Theta theta = Theta::random(4, world.mdp.n_states, world.mdp.n_actions, 0.1, 0.5, rng);
    const int max_threads = omp_get_max_threads();
    std::printf("four-rooms, %d states x 4 options, %d thread(s) available\n",
                world.mdp.n_states, max_threads);

    omp_set_num_threads(1);
    double t0 = now_s();
    const ValueTables serial_vt = intra_option_evaluate(world.mdp, theta, 1e-10);
    double t_serial = now_s() - t0;

    omp_set_num_threads(max_threads);
    t0 = now_s();
    const ValueTables par_vt = intra_option_evaluate(world.mdp, theta, 1e-10);
    double t_par = now_s() - t0;
    std::printf("intra-option evaluation  1-thread %.3fs  %d-thread %.3fs  diff %.3g\n", t_serial,
                max_threads, t_par, max_abs_diff(serial_vt.q, par_vt.q));

    t0 = now_s();
    const std::vector<double> oracle_q =
        oracle::augmented_value_iteration(world.mdp, theta, nullptr, 1e-10);
    double t_oracle = now_s() - t0;
    std::printf("serial reference (augmented value iteration) %.3fs  diff vs library %.3g\n",
                t_oracle, max_abs_diff(serial_vt.q, oracle_q));

    DeliberationConfig cfg;
    cfg.eta = 0.01;
    cfg.lambda = 0.99;
    omp_set_num_threads(1);
    t0 = now_s();
    const oracle::MonteCarloResult mc1 =
        oracle::monte_carlo_objective(world.mdp, theta, cfg, 20'000, 600, 123);
    double t_mc1 = now_s() - t0;
    omp_set_num_threads(max_threads);
    t0 = now_s();
    const oracle::MonteCarloResult mcN =
        oracle::monte_carlo_objective(world.mdp, theta, cfg, 20'000, 600, 123);
    double t_mcN = now_s() - t0;
    std::printf("monte-carlo rollouts     1-thread %.3fs  %d-thread %.3fs  diff %.3g\n", t_mc1,
                max_threads, t_mcN, std::fabs(mc1.mean_return - mcN.mean_return));

    std::vector<double> alpha(serial_vt.q.size(), 0.0);
    std::vector<double> mu(4);
    for (int o = 0; o < 4; ++o) {
        theta.mu_row(world.start_state, mu.data());
        alpha[static_cast<std::size_t>(world.start_state) * 4 + o] = mu[o];
    }
    auto objective = [&](const Theta& th) { return oracle::objective(world.mdp, th, alpha, 0.0, 0.0); };
    omp_set_num_threads(1);
    t0 = now_s();
    const GradientReport fd1 = fd_gradient(objective, theta, ThetaBlock::Beta);
    double t_fd1 = now_s() - t0;
    omp_set_num_threads(max_threads);
    t0 = now_s();
    const GradientReport fdN = fd_gradient(objective, theta, ThetaBlock::Beta);
    double t_fdN = now_s() - t0;
    std::printf("finite differences       1-thread %.3fs  %d-thread %.3fs  diff %.3g\n", t_fd1,
                max_threads, t_fdN, max_abs_diff(fd1.d_theta_beta, fdN.d_theta_beta));
    return 0;
}

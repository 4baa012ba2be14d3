#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "delib/mdp.hpp"
#include "delib/options.hpp"
#include "delib/rng.hpp"

namespace delib {

/// Minimal episodic environment surface for the learner. Implementations
/// own their state; rng is passed in so workers control their streams.
struct EnvStep {
    int s = 0;
    double r = 0.0;
    bool done = false;
};

class Env {
public:
    virtual ~Env() = default;
    virtual int reset(Rng& rng) = 0;
    virtual EnvStep step(int a, Rng& rng) = 0;
    virtual int n_states() const = 0;
    virtual int n_actions() const = 0;
};

/// Episodic wrapper over a flat MDP: episodes end on entering any state in
/// `terminal`. Rewards are the MDP's expected immediate rewards.
class MdpEnv : public Env {
public:
    MdpEnv(const Mdp& mdp, std::vector<int> terminal);
    int reset(Rng& rng) override;
    EnvStep step(int a, Rng& rng) override;
    int n_states() const override { return mdp_.n_states; }
    int n_actions() const override { return mdp_.n_actions; }

private:
    Mdp mdp_;
    std::vector<char> is_terminal_;
    int s_ = 0;
};

using EnvFactory = std::function<std::unique_ptr<Env>(int worker)>;

enum class LambdaMode { Zero, Gamma };

struct A2OCConfig {
    double eta = 0.0;
    LambdaMode lambda_mode = LambdaMode::Zero;
    double epsilon = 0.1;       // epsilon of the epsilon-soft policy over options
    double entropy_coef = 0.001;
    double lr_q = 0.5;
    double lr_pi = 1.0;
    double lr_beta = 1.0;
    int t_max = 20;
    int t_min = 1;
    int n_workers = 1;
    long total_steps = 500'000;
    double gamma = 0.99;
    int n_options = 4;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Parameters shared across workers: the actor/termination logits plus the
/// tabular critic q(s,o) (flat index s*O + o) that mu is greedy over.
struct SharedParams {
    Theta theta;
    std::vector<double> q;
    long step_counter = 0;
};

struct MetricsRow {
    long step = 0;      // global step count when the episode finished
    long episode = 0;
    double ret = 0.0;   // undiscounted raw return
    double mean_termination = 0.0;  // mean of the beta parameters encountered
    long switches = 0;
    int active_options = 0;  // distinct options used this episode
};

/// argmax with probability 1-epsilon (lowest index on ties), uniform otherwise.
int epsilon_soft_choice(const double* q_row, int n, double epsilon, Rng& rng);

struct SegStep {
    int s, o, a;
    double r_raw;
    double r_tilde;   // stored reward after the (lambda_mode=gamma) penalty
    int s_next;
    double beta_next; // termination parameter sampled against at s_next
    bool terminated;  // option terminated on arrival at s_next
    bool fresh;       // o was newly selected at s (penalty applies here)
    bool done;        // episode ended at s_next
};

struct Segment {
    std::vector<SegStep> steps;
    bool episode_end = false;
    int end_state = 0;  // bootstrap state when truncated
};

struct Snapshot {
    Theta theta;
    std::vector<double> q;
};

/// Persistent per-worker position carried across segments.
struct AgentState {
    int s = -1;
    int o = -1;
    bool fresh = false;        // the active option was just selected at s
    bool needs_option = false; // terminated; select a new option next segment
    bool needs_reset = true;
};

Segment collect_segment(Env& env, const Snapshot& snap, AgentState& st,
                        const A2OCConfig& config, Rng& rng);

/// V under the epsilon-soft mu: (1-eps)*max_o q + eps*mean_o q.
double epsilon_soft_value(const double* q_row, int n, double epsilon);

/// Backward n-step targets G_k = r~_k + gamma*G_{k+1}; bootstrap seeds the
/// recursion (0 at true episode ends).
std::vector<double> n_step_targets(const Segment& seg, double bootstrap, double gamma);

struct Deltas {
    std::vector<double> dq;          // [s*O + o]
    std::vector<double> d_theta_pi;  // [(o*S + s)*A + a]
    std::vector<double> d_theta_beta;  // [o*S + s]
};

Deltas accumulate_updates(const Segment& seg, const std::vector<double>& targets,
                          const Snapshot& snap, const A2OCConfig& config);

struct TrainResult {
    SharedParams params;
    std::vector<MetricsRow> metrics;
};

TrainResult train(const EnvFactory& env_factory, const A2OCConfig& config);

/// Exact value at `start` of following the learned options under the mu that
/// is greedy in q everywhere (epsilon = 0).
double greedy_mu_value(const Mdp& mdp, const Theta& theta, const std::vector<double>& q,
                       int start, double tol = 1e-9);

}  // namespace delib

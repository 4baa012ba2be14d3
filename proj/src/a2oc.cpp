#include "delib/a2oc.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <set>
#include <stdexcept>
#include <thread>

namespace delib {

MdpEnv::MdpEnv(const Mdp& mdp, std::vector<int> terminal) : mdp_(mdp) {
    mdp_.validate();
    is_terminal_.assign(mdp_.n_states, 0);
    for (int s : terminal) {
        if (s < 0 || s >= mdp_.n_states) throw std::invalid_argument("MdpEnv: bad terminal state");
        is_terminal_[s] = 1;
    }
}

int MdpEnv::reset(Rng& rng) {
    s_ = sample_discrete(mdp_.initial_dist.data(), mdp_.n_states, rng);
    return s_;
}

EnvStep MdpEnv::step(int a, Rng& rng) {
    auto [s2, r] = sample_transition(mdp_, s_, a, rng);
    s_ = s2;
    return {s2, r, is_terminal_[s2] != 0};
}

void A2OCConfig::validate() const {
    if (eta < 0.0) throw std::invalid_argument("A2OCConfig: eta >= 0");
    if (epsilon < 0.0 || epsilon > 1.0) throw std::invalid_argument("A2OCConfig: epsilon in [0,1]");
    if (lr_q <= 0.0 || lr_pi <= 0.0 || lr_beta <= 0.0)
        throw std::invalid_argument("A2OCConfig: learning rates must be > 0");
    if (t_min >= t_max) throw std::invalid_argument("A2OCConfig: t_min < t_max required");
    if (t_min < 0) throw std::invalid_argument("A2OCConfig: t_min >= 0");
    if (n_workers < 1) throw std::invalid_argument("A2OCConfig: n_workers >= 1");
    if (total_steps < 1) throw std::invalid_argument("A2OCConfig: total_steps >= 1");
    if (gamma < 0.0 || gamma >= 1.0) throw std::invalid_argument("A2OCConfig: gamma in [0,1)");
    if (n_options < 1) throw std::invalid_argument("A2OCConfig: n_options >= 1");
}

int epsilon_soft_choice(const double* q_row, int n, double epsilon, Rng& rng) {
    if (epsilon > 0.0 && uniform01(rng) < epsilon) return uniform_int(n, rng);
    int best = 0;
    for (int i = 1; i < n; ++i)
        if (q_row[i] > q_row[best]) best = i;
    return best;
}

double epsilon_soft_value(const double* q_row, int n, double epsilon) {
    double mx = q_row[0], mean = 0.0;
    for (int i = 0; i < n; ++i) {
        mx = std::max(mx, q_row[i]);
        mean += q_row[i];
    }
    mean /= n;
    return (1.0 - epsilon) * mx + epsilon * mean;
}

Segment collect_segment(Env& env, const Snapshot& snap, AgentState& st,
                        const A2OCConfig& config, Rng& rng) {
    const int O = snap.theta.n_options, A = snap.theta.n_actions;
    std::vector<double> pi(A);
    Segment seg;

    if (st.needs_reset) {
        st.s = env.reset(rng);
        st.o = epsilon_soft_choice(&snap.q[static_cast<std::size_t>(st.s) * O], O,
                                   config.epsilon, rng);
        st.fresh = true;
        st.needs_reset = false;
        st.needs_option = false;
    } else if (st.needs_option) {
        st.o = epsilon_soft_choice(&snap.q[static_cast<std::size_t>(st.s) * O], O,
                                   config.epsilon, rng);
        st.fresh = true;
        st.needs_option = false;
    }

    for (int k = 0; k < config.t_max; ++k) {
        SegStep rec;
        rec.s = st.s;
        rec.o = st.o;
        rec.fresh = st.fresh;
        snap.theta.pi_row(st.o, st.s, pi.data());
        rec.a = sample_discrete(pi.data(), A, rng);
        const EnvStep es = env.step(rec.a, rng);
        rec.r_raw = es.r;
        rec.r_tilde = es.r;
        if (config.lambda_mode == LambdaMode::Gamma && rec.fresh) rec.r_tilde -= config.eta;
        rec.s_next = es.s;
        rec.done = es.done;
        st.fresh = false;
        if (es.done) {
            rec.beta_next = 0.0;
            rec.terminated = false;
            seg.steps.push_back(rec);
            seg.episode_end = true;
            st.needs_reset = true;
            return seg;
        }
        rec.beta_next = snap.theta.beta(st.o, es.s);
        rec.terminated = uniform01(rng) < rec.beta_next;
        seg.steps.push_back(rec);
        st.s = es.s;
        if (rec.terminated) {
            if (k + 1 > config.t_min) {
                st.needs_option = true;
                break;
            }
            st.o = epsilon_soft_choice(&snap.q[static_cast<std::size_t>(st.s) * O], O,
                                       config.epsilon, rng);
            st.fresh = true;
        }
    }
    seg.end_state = st.s;
    return seg;
}

std::vector<double> n_step_targets(const Segment& seg, double bootstrap, double gamma) {
    std::vector<double> g(seg.steps.size());
    double acc = bootstrap;
    for (std::size_t i = seg.steps.size(); i-- > 0;) {
        acc = seg.steps[i].r_tilde + gamma * acc;
        g[i] = acc;
    }
    return g;
}

Deltas accumulate_updates(const Segment& seg, const std::vector<double>& targets,
                          const Snapshot& snap, const A2OCConfig& config) {
    if (targets.size() != seg.steps.size())
        throw std::invalid_argument("accumulate_updates: targets misaligned");
    const Theta& th = snap.theta;
    const int S = th.n_states, A = th.n_actions, O = th.n_options;
    Deltas d;
    d.dq.assign(static_cast<std::size_t>(S) * O, 0.0);
    d.d_theta_pi.assign(th.theta_pi.size(), 0.0);
    d.d_theta_beta.assign(th.theta_beta.size(), 0.0);

    std::vector<double> pi(A);
    for (std::size_t k = 0; k < seg.steps.size(); ++k) {
        const SegStep& st = seg.steps[k];
        const double q_so = snap.q[static_cast<std::size_t>(st.s) * O + st.o];
        const double delta = targets[k] - q_so;

        d.dq[static_cast<std::size_t>(st.s) * O + st.o] += config.lr_q * delta;

        th.pi_row(st.o, st.s, pi.data());
        double entropy = 0.0;
        for (int a = 0; a < A; ++a)
            if (pi[a] > 0.0) entropy -= pi[a] * std::log(pi[a]);
        double* dpi = &d.d_theta_pi[(static_cast<std::size_t>(st.o) * S + st.s) * A];
        for (int a = 0; a < A; ++a) {
            const double glog = (a == st.a ? 1.0 : 0.0) - pi[a];
            double dent = 0.0;
            if (pi[a] > 0.0) dent = -pi[a] * (std::log(pi[a]) + entropy);
            dpi[a] += config.lr_pi * (glog * delta + config.entropy_coef * dent);
        }

        if (!st.done) {
            // push beta(s',o) down when keeping o at s' beats re-choosing,
            // with the eta margin tilting toward termination
            const double v_next =
                epsilon_soft_value(&snap.q[static_cast<std::size_t>(st.s_next) * O], O,
                                   config.epsilon);
            const double adv = snap.q[static_cast<std::size_t>(st.s_next) * O + st.o] - v_next +
                               config.eta;
            const double b = st.beta_next;
            d.d_theta_beta[static_cast<std::size_t>(st.o) * S + st.s_next] -=
                config.lr_beta * b * (1.0 - b) * adv;
        }
    }
    return d;
}

namespace {

struct EpisodeAccum {
    double ret = 0.0;
    double beta_sum = 0.0;
    long beta_count = 0;
    long switches = 0;
    std::set<int> options;

    void clear() { *this = EpisodeAccum(); }
};

}  // namespace

TrainResult train(const EnvFactory& env_factory, const A2OCConfig& config) {
    config.validate();
    std::unique_ptr<Env> probe = env_factory(0);
    if (!probe) throw std::runtime_error("train: environment construction failed");
    const int S = probe->n_states(), A = probe->n_actions(), O = config.n_options;
    probe.reset();

    SharedParams shared;
    shared.theta = Theta::zeros(O, S, A, config.epsilon);
    shared.q.assign(static_cast<std::size_t>(S) * O, 0.0);
    std::mutex mtx;
    std::vector<MetricsRow> metrics;
    long episode_counter = 0;

    auto worker_loop = [&](int w) {
        std::unique_ptr<Env> env = env_factory(w);
        Rng rng(config.seed + static_cast<std::uint64_t>(w));
        AgentState st;
        EpisodeAccum ep;
        for (;;) {
            Snapshot snap;
            {
                std::lock_guard<std::mutex> lk(mtx);
                if (shared.step_counter >= config.total_steps) return;
                snap.theta = shared.theta;
                snap.q = shared.q;
            }
            Segment seg = collect_segment(*env, snap, st, config, rng);
            const double boot =
                seg.episode_end
                    ? 0.0
                    : epsilon_soft_value(&snap.q[static_cast<std::size_t>(seg.end_state) * O], O,
                                         config.epsilon);
            const std::vector<double> g = n_step_targets(seg, boot, config.gamma);
            const Deltas d = accumulate_updates(seg, g, snap, config);

            for (const SegStep& s : seg.steps) {
                ep.ret += s.r_raw;
                ep.options.insert(s.o);
                if (!s.done) {
                    ep.beta_sum += s.beta_next;
                    ++ep.beta_count;
                    if (s.terminated) ++ep.switches;
                }
            }

            std::lock_guard<std::mutex> lk(mtx);
            for (std::size_t i = 0; i < d.dq.size(); ++i) shared.q[i] += d.dq[i];
            for (std::size_t i = 0; i < d.d_theta_pi.size(); ++i)
                shared.theta.theta_pi[i] += d.d_theta_pi[i];
            for (std::size_t i = 0; i < d.d_theta_beta.size(); ++i)
                shared.theta.theta_beta[i] += d.d_theta_beta[i];
            shared.step_counter += static_cast<long>(seg.steps.size());
            if (seg.episode_end) {
                MetricsRow row;
                row.step = shared.step_counter;
                row.episode = episode_counter++;
                row.ret = ep.ret;
                row.mean_termination = ep.beta_count > 0 ? ep.beta_sum / ep.beta_count : 0.0;
                row.switches = ep.switches;
                row.active_options = static_cast<int>(ep.options.size());
                metrics.push_back(row);
                ep.clear();
            }
        }
    };

    if (config.n_workers == 1) {
        worker_loop(0);
    } else {
        std::vector<std::thread> threads;
        threads.reserve(config.n_workers);
        for (int w = 0; w < config.n_workers; ++w) threads.emplace_back(worker_loop, w);
        for (auto& t : threads) t.join();
    }

    TrainResult res;
    res.params = std::move(shared);
    res.metrics = std::move(metrics);
    return res;
}

double greedy_mu_value(const Mdp& mdp, const Theta& theta, const std::vector<double>& q,
                       int start, double tol) {
    if (start < 0 || start >= mdp.n_states) throw std::out_of_range("greedy_mu_value: bad start");
    const int S = theta.n_states, O = theta.n_options;
    if (q.size() != static_cast<std::size_t>(S) * O)
        throw std::invalid_argument("greedy_mu_value: q has wrong shape");
    Theta t = theta;
    t.epsilon_mu = 0.0;
    t.theta_mu.assign(static_cast<std::size_t>(S) * O, -1e9);
    for (int s = 0; s < S; ++s) {
        int best = 0;
        for (int o = 1; o < O; ++o)
            if (q[static_cast<std::size_t>(s) * O + o] > q[static_cast<std::size_t>(s) * O + best])
                best = o;
        t.theta_mu[static_cast<std::size_t>(s) * O + best] = 0.0;
    }
    const ValueTables vt = intra_option_evaluate(mdp, t, tol);
    return vt.v[start];
}

}  // namespace delib

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "nisqmap/checkpoint.hpp"
#include "nisqmap/env.hpp"
#include "nisqmap/networks.hpp"
#include "nisqmap/nn.hpp"
#include "nisqmap/replay.hpp"

namespace nisqmap {

/// Component switches matching the ablation table rows.
struct AblationFlags {
    bool dna = true;
    bool attention = true;
    bool prioritized = true;
    bool double_dqn = true;
    bool dueling = true;
    bool multistep = true;
    bool noisy = true;

    static AblationFlags from_name(const std::string& name) {
        AblationFlags f;
        if (name == "full" || name.empty()) return f;
        if (name == "no-dna") { f.dna = false; return f; }
        if (name == "no-attention") { f.attention = false; return f; }
        if (name == "no-prioritized") { f.prioritized = false; return f; }
        if (name == "no-double") { f.double_dqn = false; return f; }
        if (name == "no-dueling") { f.dueling = false; return f; }
        if (name == "no-multistep") { f.multistep = false; return f; }
        if (name == "no-noisy") { f.noisy = false; return f; }
        if (name == "basic-dqn") {
            f.dna = f.attention = f.prioritized = f.double_dqn = false;
            f.dueling = f.multistep = f.noisy = false;
            return f;
        }
        throw ConfigError("unknown ablation '" + name + "'");
    }

    std::string name() const {
        if (!dna && !attention && !prioritized && !double_dqn && !dueling && !multistep && !noisy)
            return "basic-dqn";
        if (!dna) return "no-dna";
        if (!attention) return "no-attention";
        if (!prioritized) return "no-prioritized";
        if (!double_dqn) return "no-double";
        if (!dueling) return "no-dueling";
        if (!multistep) return "no-multistep";
        if (!noisy) return "no-noisy";
        return "full";
    }
};

struct AgentConfig {
    // hardware/circuit shape the networks are sized to
    int n_max = 8;
    int n_chips = 2;
    int qubits_per_chip = 4;
    int history_len = 10;
    int s_max = 8;
    // network sizes
    int dna_hidden = 128;
    int d_model = 256;
    int attn_heads = 8;
    int q_hidden = 256;
    double sigma0 = 0.5;
    double dropout = 0.2;
    // training
    int episodes = 500;
    int batch = 128;
    size_t buffer_capacity = 20000;
    double gamma = 0.99;
    int n_step = 3;
    int target_sync = 20;
    double eps_start = 1.0;
    double eps_floor = 0.01;
    int eps_floor_episode = 400;
    bool eps_paper_rate = false;  // alternate literal 0.995^e schedule
    double per_alpha = 0.6;
    double per_eps = 1e-6;
    double beta0 = 0.4, beta1 = 1.0;
    double dna_weight = 0.5;
    double lr_max = 1e-3, lr_min = 1e-5;
    double clip_norm = 1.0;
    double weight_decay = 1e-5;
    int update_every = 1;
    int warmup = 0;  // extra transitions beyond `batch` before training
    double alpha2_base = 1000.0, alpha2_ramp = 600.0;
    double alpha3 = -1.0, alpha4 = -0.3, alpha5 = -1.2;
    int checkpoint_every = 50;
    AblationFlags ablation;

    int n_actions() const { return n_chips * qubits_per_chip + s_max; }
    size_t state_dim() const { return net::EncodingLayout::padded_size(n_max, n_chips); }
    int token_dim() const { return net::EncodingLayout::token_dim(n_max, n_chips); }

    double epsilon(int episode) const {
        if (eps_paper_rate)
            return std::max(eps_floor, eps_start * std::pow(0.995, episode));
        return epsilon_schedule(episode, eps_start, eps_floor, eps_floor_episode);
    }
    double alpha2(int episode) const {
        return alpha2_base + alpha2_ramp * (static_cast<double>(episode) / episodes);
    }
    RewardWeights weights(int episode) const {
        return RewardWeights{alpha2(episode), alpha3, alpha4, alpha5};
    }
};

/// Discounted n-step reward and the bootstrap discount gamma^k.
inline std::pair<double, double> n_step_return(const std::vector<double>& rewards, double gamma) {
    double r = 0.0, g = 1.0;
    for (double ri : rewards) {
        r += g * ri;
        g *= gamma;
    }
    return {r, g};
}

/// y = R_n + gamma^n * Q_target(s', a*), or just R_n at termination.
inline double bellman_target(double reward_n, double discount_n, double bootstrap, bool done) {
    return done ? reward_n : reward_n + discount_n * bootstrap;
}

struct EpisodeMetrics {
    int episode = 0;
    double fidelity = 0.0;
    int n_inter = 0;
    int depth = 0;
    double balance = 0.0;
    double reward_sum = 0.0;
    double epsilon = 0.0;
    double dna_r2 = 0.0;
    double loss = 0.0;
    int steps = 0;
    double lr = 0.0;
};

/// Online + target networks, replay buffer, schedules, seed streams. The
/// full Rainbow-style loop: prioritized replay, double-Q multi-step targets,
/// joint auxiliary noise loss, epsilon-greedy over masked Q values.
class Agent {
public:
    Agent(const AgentConfig& cfg, uint64_t master_seed)
        : cfg_(cfg), master_seed_(master_seed),
          buffer_(cfg.buffer_capacity, cfg.per_alpha, cfg.per_eps, cfg.ablation.prioritized),
          rng_init_(seed_stream(master_seed, "net-init")),
          rng_eps_(seed_stream(master_seed, "eps-greedy")),
          rng_noisy_(seed_stream(master_seed, "noisy-explore")),
          rng_sample_(seed_stream(master_seed, "replay-sample")),
          rng_dropout_(seed_stream(master_seed, "dna-dropout")),
          rng_episode_(seed_stream(master_seed, "episode-pick")) {
        if (!cfg_.ablation.multistep) cfg_.n_step = 1;
        dna_ = std::make_unique<net::DnaPredictor>(
            net::DnaConfig{static_cast<int>(cfg_.state_dim()), cfg_.n_chips, cfg_.dna_hidden,
                           true, cfg_.dropout, 0.15},
            rng_init_);
        const int q_in = cfg_.ablation.attention ? cfg_.d_model : (int)cfg_.state_dim();
        if (cfg_.ablation.attention) {
            attention_ = std::make_unique<net::AttentionEncoder>(
                net::AttentionConfig{cfg_.token_dim(), cfg_.d_model, cfg_.attn_heads}, rng_init_);
            attention_t_ = std::make_unique<net::AttentionEncoder>(attention_->cfg, rng_init_);
        }
        qhead_ = std::make_unique<net::DuelingQHead>(
            net::QHeadConfig{q_in, cfg_.n_actions(), cfg_.q_hidden, cfg_.ablation.dueling,
                             cfg_.ablation.noisy, cfg_.sigma0},
            rng_init_);
        qhead_t_ = std::make_unique<net::DuelingQHead>(qhead_->cfg, rng_init_);
        optimizer_.clip_norm = cfg_.clip_norm;
        optimizer_.weight_decay = cfg_.weight_decay;
        sync_target();
    }

    const AgentConfig& config() const { return cfg_; }
    ReplayBuffer& buffer() { return buffer_; }
    net::DnaPredictor& dna() { return *dna_; }
    long opt_steps() const { return optimizer_.step_count; }

    std::vector<ad::Param*> online_params() {
        std::vector<ad::Param*> ps;
        if (cfg_.ablation.dna) dna_->collect(ps);
        if (attention_) attention_->collect(ps);
        qhead_->collect(ps);
        return ps;
    }

    std::vector<ad::Param*> target_params() {
        std::vector<ad::Param*> ps;
        if (attention_t_) attention_t_->collect(ps);
        qhead_t_->collect(ps);
        return ps;
    }

    void sync_target() {
        std::vector<ad::Param*> src, dst;
        if (attention_) attention_->collect(src);
        qhead_->collect(src);
        if (attention_t_) attention_t_->collect(dst);
        qhead_t_->collect(dst);
        if (src.size() != dst.size()) throw ShapeError("target sync: parameter count mismatch");
        for (size_t i = 0; i < src.size(); ++i) dst[i]->value = src[i]->value;
    }

    /// Greedy (optionally noisy) Q values for one padded state; illegal
    /// entries get -inf.
    std::vector<double> masked_q(const std::vector<double>& padded, int n_logical,
                                 const std::vector<uint8_t>& mask, bool explore) {
        ad::Tape t;
        ad::Ref q = q_forward(t, {&padded}, {n_logical}, /*target=*/false,
                              explore && cfg_.ablation.noisy, rng_noisy_);
        std::vector<double> out = q->val.d;
        for (size_t i = 0; i < out.size(); ++i)
            if (!mask[i]) out[i] = -HUGE_VAL;
        return out;
    }

    /// Action selection over the env's legal list. Returns the position in
    /// the legal list plus the global action index used in transitions.
    struct Choice {
        int legal_pos = 0;
        int action_index = 0;
        std::vector<uint8_t> mask;
    };

    Choice select_action(Env& env, const std::vector<double>& padded, double epsilon,
                         bool greedy) {
        auto legal = env.legal_actions();
        Choice ch;
        ch.mask = action_mask(env, legal);
        if (!greedy && rng_eps_.uniform() < epsilon) {
            ch.legal_pos = static_cast<int>(rng_eps_.uniform_int(legal.size()));
            ch.action_index = action_index_of(env, legal, ch.legal_pos);
            return ch;
        }
        auto q = masked_q(padded, env.circuit().n_qubits, ch.mask, !greedy);
        int best = -1;
        for (size_t pos = 0; pos < legal.size(); ++pos) {
            int idx = action_index_of(env, legal, static_cast<int>(pos));
            if (best < 0 || q[idx] > q[action_index_of(env, legal, best)])
                best = static_cast<int>(pos);
        }
        ch.legal_pos = best;
        ch.action_index = action_index_of(env, legal, best);
        return ch;
    }

    /// Double-Q multi-step targets for a sampled batch.
    std::vector<double> td_targets(const std::vector<const Transition*>& batch) {
        std::vector<double> ys(batch.size());
        ad::Tape t;
        std::vector<const std::vector<double>*> next_states;
        std::vector<int> n_logicals;
        std::vector<size_t> live;  // positions with a bootstrap term
        for (size_t i = 0; i < batch.size(); ++i) {
            if (batch[i]->done) {
                ys[i] = batch[i]->reward_n;
            } else {
                live.push_back(i);
                next_states.push_back(&batch[i]->next_state);
                n_logicals.push_back(batch[i]->n_logical);
            }
        }
        if (live.empty()) return ys;
        Rng dummy(1);
        ad::Ref q_online = q_forward(t, next_states, n_logicals, false, false, dummy);
        ad::Ref q_target = q_forward(t, next_states, n_logicals, true, false, dummy);
        for (size_t row = 0; row < live.size(); ++row) {
            const Transition& tr = *batch[live[row]];
            const ad::Tensor& sel = cfg_.ablation.double_dqn ? q_online->val : q_target->val;
            int a_star = -1;
            for (int a = 0; a < cfg_.n_actions(); ++a) {
                if (!tr.next_mask[a]) continue;
                if (a_star < 0 || sel.at((int)row, a) > sel.at((int)row, a_star)) a_star = a;
            }
            double bootstrap = a_star >= 0 ? q_target->val.at((int)row, a_star) : 0.0;
            ys[live[row]] = bellman_target(tr.reward_n, tr.discount_n, bootstrap, false);
        }
        return ys;
    }

    struct TrainOutcome {
        double total_loss = 0.0;
        double q_loss = 0.0;
        double dna_loss = 0.0;
        std::vector<size_t> indices;
        std::vector<double> td_errors;
    };

    /// One optimization step on a sampled batch: IS-weighted Huber Q loss
    /// plus the weighted auxiliary noise loss; priorities refreshed from the
    /// new TD errors; target nets synced on schedule.
    TrainOutcome train_step(int episode) {
        auto batch = buffer_.sample(cfg_.batch, anneal_beta(episode, cfg_.episodes, cfg_.beta0,
                                                            cfg_.beta1),
                                    rng_sample_);
        auto ys = td_targets(batch.items);

        ad::Tape t;
        std::vector<const std::vector<double>*> states;
        std::vector<int> n_logicals;
        std::vector<int> actions;
        for (const Transition* tr : batch.items) {
            states.push_back(&tr->seq);  // last row is the current state
            n_logicals.push_back(tr->n_logical);
            actions.push_back(tr->action);
        }
        ad::Ref q_all =
            q_forward_seq_tail(t, batch.items, cfg_.ablation.noisy, rng_noisy_);
        ad::Ref q_taken = t.gather_cols(q_all, actions);
        ad::Tensor y_neg(static_cast<int>(ys.size()), 1);
        for (size_t i = 0; i < ys.size(); ++i) y_neg.at((int)i, 0) = -ys[i];
        ad::Ref delta = t.add_const(q_taken, y_neg);
        // per-sample TD errors for the priority update
        std::vector<double> td_errors = delta->val.d;
        ad::Ref hub = t.huber(delta, 1.0);
        ad::Tensor wts(static_cast<int>(batch.is_weights.size()), 1);
        for (size_t i = 0; i < batch.is_weights.size(); ++i)
            wts.at((int)i, 0) = batch.is_weights[i];
        ad::Ref q_loss = t.mean_all(t.mul_const(hub, wts));

        TrainOutcome out;
        ad::Ref total = q_loss;
        double dna_reg = 0.0;
        if (cfg_.ablation.dna && cfg_.dna_weight > 0.0) {
            ad::Ref pred = dna_forward_batch(t, batch.items, true);
            ad::Tensor target(static_cast<int>(batch.items.size()), cfg_.n_chips);
            for (size_t i = 0; i < batch.items.size(); ++i)
                for (int c = 0; c < cfg_.n_chips; ++c)
                    target.at((int)i, c) = batch.items[i]->noise_target[c];
            ad::Ref mse = net::dna_mse(t, pred, target);
            std::vector<ad::Param*> dps;
            dna_->collect(dps);
            dna_reg = net::dna_loss_value(0.0, dps, 1e-5);
            out.dna_loss = mse->val.d[0] + dna_reg;
            total = t.add(q_loss, t.scale(mse, cfg_.dna_weight));
        }
        out.q_loss = q_loss->val.d[0];
        out.total_loss = total->val.d[0] + cfg_.dna_weight * dna_reg;
        if (!std::isfinite(out.total_loss))
            throw NumericError("train_step: non-finite loss (q=" + std::to_string(out.q_loss) +
                               ", dna=" + std::to_string(out.dna_loss) + ")");
        t.backward(total);
        auto params = online_params();
        optimizer_.step(params, lr_);
        buffer_.update_priorities(batch.indices, td_errors);
        if (optimizer_.step_count % cfg_.target_sync == 0) sync_target();
        out.indices = batch.indices;
        out.td_errors = std::move(td_errors);
        return out;
    }

    /// Roll one training episode through the env; pushes n-step transitions
    /// and trains on schedule. Returns the episode metrics row.
    EpisodeMetrics run_episode(int episode, const Circuit& c, const Hardware& hw,
                               const NoiseParams& np, uint64_t noise_seed, bool learn = true) {
        lr_ = nn::cosine_lr(episode, cfg_.episodes, cfg_.lr_max, cfg_.lr_min);
        const RewardWeights w = cfg_.weights(episode);
        const double eps = cfg_.epsilon(episode);
        Env env(c, hw, np, noise_seed);
        net::EncodingLayout layout{c.n_qubits, cfg_.n_chips};

        std::deque<std::vector<double>> history;
        auto padded_now = [&] { return layout.pad(env.encode_state(), cfg_.n_max); };
        for (int i = 0; i < cfg_.history_len; ++i) history.push_back(padded_now());
        auto flatten_history = [&] {
            std::vector<double> seq;
            seq.reserve(cfg_.history_len * cfg_.state_dim());
            for (const auto& row : history) seq.insert(seq.end(), row.begin(), row.end());
            return seq;
        };

        struct Pending {
            std::vector<double> seq;
            int action;
            std::vector<double> rewards;
            std::vector<double> noise_target;
        };
        std::deque<Pending> window;
        EpisodeMetrics met;
        met.episode = episode;
        met.epsilon = eps;
        met.lr = lr_;
        double loss_sum = 0.0;
        int loss_count = 0;

        // done flag of a transition: the episode terminated inside its
        // reward window, so there is no bootstrap state
        auto emit = [&](Pending& p, bool done_flag) {
            Transition tr;
            tr.seq = std::move(p.seq);
            tr.seq_len = cfg_.history_len;
            tr.state_dim = static_cast<int>(cfg_.state_dim());
            tr.n_logical = c.n_qubits;
            tr.action = p.action;
            auto [r, g] = n_step_return(p.rewards, cfg_.gamma);
            tr.reward_n = r;
            tr.discount_n = g;
            tr.next_state = history.back();
            tr.done = done_flag;
            tr.noise_target = p.noise_target;
            if (done_flag)
                tr.next_mask.assign(cfg_.n_actions(), 0);
            else
                tr.next_mask = action_mask(env, env.legal_actions());
            buffer_.push(std::move(tr));
        };

        while (!env.done()) {
            auto seq_t = flatten_history();  // ends at the current state
            const auto& padded = history.back();
            double n_pred = 0.05;
            std::vector<double> pred;
            if (cfg_.ablation.dna) {
                pred = dna_predict_history(history);
                double s = 0;
                for (double v : pred) s += v;
                n_pred = s / cfg_.n_chips;
            }
            Choice ch = select_action(env, padded, eps, /*greedy=*/false);
            auto legal = env.legal_actions();
            StepResult sr = env.step(legal[ch.legal_pos], w, n_pred);
            env.record_trace(legal[ch.legal_pos], sr);
            met.reward_sum += sr.reward;

            history.pop_front();
            history.push_back(padded_now());
            auto realized = env.noise().totals(np);
            if (cfg_.ablation.dna) dna_track(pred, realized);

            Pending p;
            p.seq = std::move(seq_t);
            p.action = ch.action_index;
            p.noise_target = realized;
            for (auto& q : window) q.rewards.push_back(sr.reward);
            p.rewards.push_back(sr.reward);
            window.push_back(std::move(p));
            // the oldest pending entry now owns n_step rewards: emit it
            while (!window.empty() &&
                   static_cast<int>(window.front().rewards.size()) >= cfg_.n_step) {
                emit(window.front(), env.done());
                window.pop_front();
            }
            if (env.done()) {
                // remaining windows truncate at termination: no bootstrap
                while (!window.empty()) {
                    emit(window.front(), true);
                    window.pop_front();
                }
            }

            if (learn && buffer_.size() >= static_cast<size_t>(cfg_.batch + cfg_.warmup) &&
                env.step_index() % cfg_.update_every == 0) {
                auto outcome = train_step(episode);
                loss_sum += outcome.total_loss;
                ++loss_count;
            }
        }

        met.fidelity = env.fidelity();
        met.n_inter = env.counters().n_inter;
        met.depth = env.counters().depth;
        met.balance = env.load_imbalance();
        met.steps = env.counters().steps;
        met.loss = loss_count ? loss_sum / loss_count : 0.0;
        met.dna_r2 = dna_recent_r2();
        return met;
    }

    /// Deterministic greedy rollout with frozen parameters (evaluation).
    EpisodeMetrics evaluate_episode(const Circuit& c, const Hardware& hw, const NoiseParams& np,
                                    uint64_t noise_seed, const RewardWeights& w,
                                    std::vector<TraceRow>* trace_out = nullptr) {
        Env env(c, hw, np, noise_seed);
        net::EncodingLayout layout{c.n_qubits, cfg_.n_chips};
        std::deque<std::vector<double>> history;
        for (int i = 0; i < cfg_.history_len; ++i)
            history.push_back(layout.pad(env.encode_state(), cfg_.n_max));
        EpisodeMetrics met;
        while (!env.done()) {
            double n_pred = 0.05;
            if (cfg_.ablation.dna) {
                auto pred = dna_predict_history(history);
                double s = 0;
                for (double v : pred) s += v;
                n_pred = s / cfg_.n_chips;
            }
            Choice ch = select_action(env, history.back(), 0.0, /*greedy=*/true);
            auto legal = env.legal_actions();
            StepResult sr = env.step(legal[ch.legal_pos], w, n_pred);
            env.record_trace(legal[ch.legal_pos], sr);
            met.reward_sum += sr.reward;
            history.pop_front();
            history.push_back(layout.pad(env.encode_state(), cfg_.n_max));
        }
        met.fidelity = env.fidelity();
        met.n_inter = env.counters().n_inter;
        met.depth = env.counters().depth;
        met.balance = env.load_imbalance();
        met.steps = env.counters().steps;
        if (trace_out) *trace_out = env.trace();
        return met;
    }

    /// Episode index sampler for suite selection (own seed stream).
    size_t pick_circuit(size_t suite_size) { return rng_episode_.uniform_int(suite_size); }

    void save(const std::string& path, int episode) {
        Checkpoint ck;
        ck.put("meta/ablation", cfg_.ablation.name());
        ck.put("meta/episode", std::to_string(episode));
        ck.put("meta/opt_steps", std::to_string(optimizer_.step_count));
        ck.put("rng/eps", rng_eps_.serialize());
        ck.put("rng/noisy", rng_noisy_.serialize());
        ck.put("rng/sample", rng_sample_.serialize());
        ck.put("rng/dropout", rng_dropout_.serialize());
        ck.put("rng/episode", rng_episode_.serialize());
        std::vector<ad::Param*> ps;
        dna_->collect(ps);
        ck.put_params("dna", ps);
        ck.put("dna/bn1.run_mean", dna_->bn1.run_mean);
        ck.put("dna/bn1.run_var", dna_->bn1.run_var);
        ck.put("dna/bn2.run_mean", dna_->bn2.run_mean);
        ck.put("dna/bn2.run_var", dna_->bn2.run_var);
        if (attention_) {
            std::vector<ad::Param*> aps;
            attention_->collect(aps);
            ck.put_params("attention", aps);
            std::vector<ad::Param*> tps;
            attention_t_->collect(tps);
            ck.put_params("attention_target", tps);
        }
        std::vector<ad::Param*> qps;
        qhead_->collect(qps);
        ck.put_params("qhead", qps);
        std::vector<ad::Param*> qtps;
        qhead_t_->collect(qtps);
        ck.put_params("qhead_target", qtps);
        ck.save(path);
    }

    /// Restores parameters, schedules, and seed streams; returns the saved
    /// episode index.
    int load(const std::string& path) {
        Checkpoint ck = Checkpoint::load(path);
        if (ck.text("meta/ablation") != cfg_.ablation.name())
            throw ConfigError("checkpoint ablation '" + ck.text("meta/ablation") +
                              "' does not match config '" + cfg_.ablation.name() + "'");
        optimizer_.step_count = std::stol(ck.text("meta/opt_steps"));
        rng_eps_.deserialize(ck.text("rng/eps"));
        rng_noisy_.deserialize(ck.text("rng/noisy"));
        rng_sample_.deserialize(ck.text("rng/sample"));
        rng_dropout_.deserialize(ck.text("rng/dropout"));
        rng_episode_.deserialize(ck.text("rng/episode"));
        std::vector<ad::Param*> ps;
        dna_->collect(ps);
        ck.load_params("dna", ps);
        dna_->bn1.run_mean = ck.array("dna/bn1.run_mean", 1, dna_->bn1.run_mean.c);
        dna_->bn1.run_var = ck.array("dna/bn1.run_var", 1, dna_->bn1.run_var.c);
        dna_->bn2.run_mean = ck.array("dna/bn2.run_mean", 1, dna_->bn2.run_mean.c);
        dna_->bn2.run_var = ck.array("dna/bn2.run_var", 1, dna_->bn2.run_var.c);
        if (attention_) {
            std::vector<ad::Param*> aps;
            attention_->collect(aps);
            ck.load_params("attention", aps);
            std::vector<ad::Param*> tps;
            attention_t_->collect(tps);
            ck.load_params("attention_target", tps);
        }
        std::vector<ad::Param*> qps;
        qhead_->collect(qps);
        ck.load_params("qhead", qps);
        std::vector<ad::Param*> qtps;
        qhead_t_->collect(qtps);
        ck.load_params("qhead_target", qtps);
        return std::stoi(ck.text("meta/episode"));
    }

    /// Global action index: placements by slot, then commit/swap slots.
    int action_index_of(const Env& env, const std::vector<Action>& legal, int pos) const {
        const Action& a = legal[pos];
        if (a.kind == Action::Kind::Place) return a.chip * cfg_.qubits_per_chip + a.a;
        int base = cfg_.n_chips * cfg_.qubits_per_chip;
        // swap-phase entries map onto their list positions
        int swap_pos = 0;
        for (int i = 0; i < pos; ++i)
            if (legal[i].kind != Action::Kind::Place) ++swap_pos;
        (void)env;
        return base + swap_pos;
    }

    std::vector<uint8_t> action_mask(const Env& env, const std::vector<Action>& legal) const {
        std::vector<uint8_t> mask(cfg_.n_actions(), 0);
        for (size_t pos = 0; pos < legal.size(); ++pos)
            mask[action_index_of(env, legal, static_cast<int>(pos))] = 1;
        return mask;
    }

    std::vector<double> dna_predict_history(const std::deque<std::vector<double>>& history) {
        std::vector<std::vector<double>> seq(history.begin(), history.end());
        return dna_->predict(seq, rng_dropout_);
    }

    double dna_recent_r2() const {
        if (dna_track_.size() < 8) return 0.0;
        double mean = 0;
        size_t n = 0;
        for (const auto& [pred, act] : dna_track_)
            for (double a : act) {
                mean += a;
                ++n;
            }
        mean /= n;
        double ss_res = 0, ss_tot = 0;
        for (const auto& [pred, act] : dna_track_)
            for (size_t c = 0; c < act.size(); ++c) {
                ss_res += (pred[c] - act[c]) * (pred[c] - act[c]);
                ss_tot += (act[c] - mean) * (act[c] - mean);
            }
        return ss_tot > 0 ? 1.0 - ss_res / ss_tot : 0.0;
    }

private:
    AgentConfig cfg_;
    uint64_t master_seed_;
    ReplayBuffer buffer_;
    Rng rng_init_, rng_eps_, rng_noisy_, rng_sample_, rng_dropout_, rng_episode_;
    std::unique_ptr<net::DnaPredictor> dna_;
    std::unique_ptr<net::AttentionEncoder> attention_, attention_t_;
    std::unique_ptr<net::DuelingQHead> qhead_, qhead_t_;
    nn::AdamW optimizer_;
    double lr_ = 1e-3;
    std::deque<std::pair<std::vector<double>, std::vector<double>>> dna_track_;

    static const NoiseParams& np_of(const Env& env) { return env.noise_params(); }

    void dna_track(const std::vector<double>& pred, const std::vector<double>& actual) {
        dna_track_.emplace_back(pred, actual);
        while (dna_track_.size() > 256) dna_track_.pop_front();
    }

    /// Q values for a set of padded states through the online or target
    /// pathway: (batch x n_actions).
    ad::Ref q_forward(ad::Tape& t, const std::vector<const std::vector<double>*>& states,
                      const std::vector<int>& n_logicals, bool target, bool noisy, Rng& rng) {
        net::DuelingQHead& head = target ? *qhead_t_ : *qhead_;
        ad::Ref embed;
        if (cfg_.ablation.attention) {
            net::AttentionEncoder& att = target ? *attention_t_ : *attention_;
            std::vector<ad::Ref> rows;
            rows.reserve(states.size());
            for (size_t i = 0; i < states.size(); ++i) {
                ad::Tensor toks = tokens_from_padded(*states[i], n_logicals[i]);
                rows.push_back(att.forward(t, t.constant(std::move(toks))));
            }
            embed = rows.size() == 1 ? rows[0] : t.concat_rows(rows);
        } else {
            ad::Tensor x(static_cast<int>(states.size()), (int)cfg_.state_dim());
            for (size_t i = 0; i < states.size(); ++i)
                for (size_t j = 0; j < states[i]->size(); ++j)
                    x.at((int)i, (int)j) = (*states[i])[j];
            embed = t.constant(std::move(x));
        }
        return head.forward(t, embed, noisy, rng);
    }

    /// Online Q on the last row of each transition's stored sequence.
    ad::Ref q_forward_seq_tail(ad::Tape& t, const std::vector<const Transition*>& batch,
                               bool noisy, Rng& rng) {
        const size_t d = cfg_.state_dim();
        std::vector<std::vector<double>> tails;
        tails.reserve(batch.size());
        std::vector<const std::vector<double>*> refs;
        std::vector<int> n_logicals;
        for (const Transition* tr : batch) {
            tails.emplace_back(tr->seq.end() - d, tr->seq.end());
            n_logicals.push_back(tr->n_logical);
        }
        for (const auto& s : tails) refs.push_back(&s);
        // q_forward copies values synchronously, so the locals may die after
        return q_forward(t, refs, n_logicals, false, noisy, rng);
    }

    ad::Ref dna_forward_batch(ad::Tape& t, const std::vector<const Transition*>& batch,
                              bool train) {
        const size_t d = cfg_.state_dim();
        const int L = cfg_.history_len;
        std::vector<ad::Ref> steps(L);
        for (int s = 0; s < L; ++s) {
            ad::Tensor x(static_cast<int>(batch.size()), (int)d);
            for (size_t i = 0; i < batch.size(); ++i) {
                const double* src = batch[i]->seq.data() + static_cast<size_t>(s) * d;
                std::copy(src, src + d, &x.d[i * d]);
            }
            steps[s] = t.constant(std::move(x));
        }
        return dna_->forward(t, steps, train, rng_dropout_);
    }

    ad::Tensor tokens_from_padded(const std::vector<double>& padded, int n_logical) const {
        const int n_max = cfg_.n_max, m = cfg_.n_chips;
        const int td = cfg_.token_dim();
        ad::Tensor t(n_logical, td);
        const size_t b2 = static_cast<size_t>(n_max) * n_max;
        const size_t b3 = b2 + 2 * static_cast<size_t>(n_max) * m;
        for (int i = 0; i < n_logical; ++i) {
            for (int j = 0; j < n_max; ++j)
                t.at(i, j) = padded[static_cast<size_t>(i) * n_max + j];
            int chip = -1;
            for (int c = 0; c < 2 * m; ++c) {
                double val = padded[b2 + static_cast<size_t>(i) * 2 * m + c];
                t.at(i, n_max + c) = val;
                if (c % 2 == 0 && val > 0.5) chip = c / 2;
            }
            if (chip >= 0)
                for (int j = 0; j < 10; ++j)
                    t.at(i, n_max + 2 * m + j) = padded[b3 + static_cast<size_t>(chip) * 10 + j];
        }
        return t;
    }
};

}  // namespace nisqmap

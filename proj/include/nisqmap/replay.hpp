#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "nisqmap/errors.hpp"
#include "nisqmap/rng.hpp"

namespace nisqmap {

/// Binary-indexed sum tree over fixed capacity; leaves hold p_i^alpha.
class SumTree {
public:
    explicit SumTree(size_t capacity) : cap_(1) {
        while (cap_ < capacity) cap_ <<= 1;
        tree_.assign(2 * cap_, 0.0);
    }

    void set(size_t i, double value) {
        if (i >= cap_) throw std::out_of_range("sum tree index");
        size_t node = cap_ + i;
        tree_[node] = value;
        for (node >>= 1; node >= 1; node >>= 1)
            tree_[node] = tree_[2 * node] + tree_[2 * node + 1];
    }

    double get(size_t i) const { return tree_[cap_ + i]; }
    double total() const { return tree_[1]; }

    /// Index of the first leaf whose prefix sum exceeds `mass`.
    size_t find_prefix(double mass) const {
        size_t node = 1;
        while (node < cap_) {
            double left = tree_[2 * node];
            if (mass < left) {
                node = 2 * node;
            } else {
                mass -= left;
                node = 2 * node + 1;
            }
        }
        return node - cap_;
    }

private:
    size_t cap_;
    std::vector<double> tree_;
};

/// One n-step transition. `seq` is the flattened L x d state-encoding
/// history feeding the DNA network; its last row is the Q state.
struct Transition {
    std::vector<double> seq;         // L * d, padded layout
    int seq_len = 0;                 // L
    int state_dim = 0;               // d
    int n_logical = 0;               // token count for attention
    int action = -1;
    double reward_n = 0.0;           // n-step accumulated reward
    double discount_n = 1.0;         // gamma^k for the bootstrap
    std::vector<double> next_state;  // padded d
    std::vector<uint8_t> next_mask;  // legal-action mask at the later state
    bool done = false;
    std::vector<double> noise_target;  // realized per-chip totals (DNA target)
};

struct SampleBatch {
    std::vector<size_t> indices;
    std::vector<double> is_weights;  // normalized by the batch max
    std::vector<const Transition*> items;
};

/// Prioritized replay: proportional sampling on |TD error|^alpha with
/// stratified draws and importance-sampling weights. `prioritized = false`
/// degrades to uniform sampling with unit weights.
class ReplayBuffer {
public:
    explicit ReplayBuffer(size_t capacity = 20000, double alpha = 0.6, double eps_p = 1e-6,
                          bool prioritized = true)
        : capacity_(capacity), alpha_(alpha), eps_p_(eps_p), prioritized_(prioritized),
          tree_(capacity) {}

    size_t size() const { return store_.size(); }
    size_t capacity() const { return capacity_; }
    double alpha() const { return alpha_; }
    double eps_p() const { return eps_p_; }
    double max_priority() const { return max_priority_; }
    double tree_total() const { return tree_.total(); }
    double priority_pow_alpha(size_t i) const { return tree_.get(i); }
    const Transition& at(size_t i) const { return store_.at(i); }

    /// Insert with the running max priority so fresh transitions get
    /// sampled at least once; evicts the oldest slot when full.
    void push(Transition tr) {
        size_t idx;
        if (store_.size() < capacity_) {
            idx = store_.size();
            store_.push_back(std::move(tr));
        } else {
            idx = next_;
            store_[idx] = std::move(tr);
        }
        next_ = (idx + 1) % capacity_;
        tree_.set(idx, std::pow(max_priority_, alpha_));
    }

    SampleBatch sample(size_t batch, double beta, Rng& rng) const {
        if (store_.size() < batch)
            throw NotReadyError("replay buffer holds " + std::to_string(store_.size()) +
                                " transitions, need " + std::to_string(batch));
        SampleBatch out;
        out.indices.resize(batch);
        out.is_weights.assign(batch, 1.0);
        out.items.resize(batch);
        if (!prioritized_) {
            for (size_t i = 0; i < batch; ++i) {
                out.indices[i] = static_cast<size_t>(rng.uniform_int(store_.size()));
                out.items[i] = &store_[out.indices[i]];
            }
            return out;
        }
        const double total = tree_.total();
        if (total <= 0) throw NotReadyError("replay buffer has zero total priority");
        const double seg = total / static_cast<double>(batch);
        const double n = static_cast<double>(store_.size());
        double wmax = 0.0;
        for (size_t i = 0; i < batch; ++i) {
            double mass = (static_cast<double>(i) + rng.uniform()) * seg;
            size_t idx = tree_.find_prefix(std::min(mass, total * (1.0 - 1e-12)));
            if (idx >= store_.size()) idx = store_.size() - 1;  // strata past the last leaf
            out.indices[i] = idx;
            out.items[i] = &store_[idx];
            double prob = tree_.get(idx) / total;
            double w = std::pow(1.0 / (n * prob), beta);
            out.is_weights[i] = w;
            wmax = std::max(wmax, w);
        }
        for (double& w : out.is_weights) w /= wmax;
        return out;
    }

    void update_priorities(const std::vector<size_t>& indices,
                           const std::vector<double>& td_errors) {
        if (!prioritized_) return;
        if (indices.size() != td_errors.size())
            throw std::invalid_argument("update_priorities: size mismatch");
        for (size_t i = 0; i < indices.size(); ++i) {
            double p = std::fabs(td_errors[i]) + eps_p_;
            max_priority_ = std::max(max_priority_, p);
            tree_.set(indices[i], std::pow(p, alpha_));
        }
    }

private:
    size_t capacity_;
    double alpha_;
    double eps_p_;
    bool prioritized_;
    double max_priority_ = 1.0;
    size_t next_ = 0;
    std::vector<Transition> store_;
    SumTree tree_;
};

/// Linear beta anneal from 0.4 to 1.0 across training.
inline double anneal_beta(int episode, int total_episodes, double beta0 = 0.4,
                          double beta1 = 1.0) {
    if (total_episodes <= 0) return beta1;
    double f = std::min(1.0, static_cast<double>(episode) / total_episodes);
    return beta0 + (beta1 - beta0) * f;
}

/// Exponential epsilon schedule hitting the floor at `floor_episode`.
inline double epsilon_schedule(int episode, double eps_start = 1.0, double eps_floor = 0.01,
                               int floor_episode = 400) {
    if (episode < 0) throw std::invalid_argument("epsilon: episode must be >= 0");
    double rate = std::pow(eps_floor / eps_start, 1.0 / floor_episode);
    return std::max(eps_floor, eps_start * std::pow(rate, episode));
}

}  // namespace nisqmap

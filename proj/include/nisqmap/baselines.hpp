#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "nisqmap/circuit.hpp"
#include "nisqmap/env.hpp"
#include "nisqmap/hardware.hpp"
#include "nisqmap/rng.hpp"

namespace nisqmap {

/// logical qubit -> global slot (chip * k + local)
using Assignment = std::vector<int>;

inline void check_capacity(const Circuit& c, const Hardware& hw) {
    if (c.n_qubits > hw.total_qubits())
        throw CapacityError("baseline: circuit does not fit hardware");
}

/// Round-robin: qubit i onto chip (i mod M), next free local slot in order.
inline Assignment trivial_map(const Circuit& c, const Hardware& hw) {
    check_capacity(c, hw);
    const int m = hw.n_chips, k = hw.qubits_per_chip;
    Assignment out(c.n_qubits, -1);
    std::vector<int> next_free(m, 0);
    for (int q = 0; q < c.n_qubits; ++q) {
        int chip = q % m;
        // advance to a chip with room (only matters near full capacity)
        for (int tries = 0; tries < m && next_free[chip] >= k; ++tries) chip = (chip + 1) % m;
        if (next_free[chip] >= k) throw CapacityError("trivial_map: no free slot");
        out[q] = chip * k + next_free[chip]++;
    }
    return out;
}

/// Places qubits in first-gate order; each placement takes the free slot
/// minimizing inter-chip gates to already-placed partners, ties broken by
/// (chip, slot).
inline Assignment greedy_map(const Circuit& c, const Hardware& hw) {
    check_capacity(c, hw);
    const int m = hw.n_chips, k = hw.qubits_per_chip;
    Assignment out(c.n_qubits, -1);
    std::vector<bool> used(hw.total_qubits(), false);
    // partner multiset per qubit over the whole gate list
    std::vector<std::vector<int>> partners(c.n_qubits);
    for (const auto& g : c.gates)
        if (g.is_two_qubit()) {
            partners[g.q0].push_back(g.q1);
            partners[g.q1].push_back(g.q0);
        }
    for (int q : placement_order(c)) {
        int best_slot = -1;
        int best_cost = 0;
        for (int chip = 0; chip < m; ++chip) {
            for (int s = 0; s < k; ++s) {
                int gs = chip * k + s;
                if (used[gs]) continue;
                int cost = 0;
                for (int u : partners[q])
                    if (out[u] >= 0 && out[u] / k != chip) ++cost;
                if (best_slot < 0 || cost < best_cost) {
                    best_slot = gs;
                    best_cost = cost;
                }
            }
        }
        if (best_slot < 0) throw CapacityError("greedy_map: no free slot");
        out[q] = best_slot;
        used[best_slot] = true;
    }
    return out;
}

/// Objective weights mirroring the static mapping objective (inter-chip
/// cost, error, routing-distance depth proxy, balance).
struct QuboWeights {
    double alpha = 10.0;
    double beta = 100.0;
    double delta = 0.5;
    double eta = 1.0;
};

struct AnnealConfig {
    int iterations = 10000;
    double t0 = 10.0;
    double tau = 1000.0;
    uint64_t seed = 1;
    QuboWeights weights;

    void validate() const {
        if (iterations < 1) throw std::invalid_argument("anneal: iterations must be >= 1");
        if (t0 <= 0 || tau <= 0) throw std::invalid_argument("anneal: T0 and tau must be > 0");
    }
};

inline double anneal_temperature(const AnnealConfig& cfg, int k) {
    return cfg.t0 * std::exp(-static_cast<double>(k) / cfg.tau);
}

/// Quadratic objective over binary placement variables x_{q,p}. Quadratic
/// terms couple gate endpoints through chip-hop counts plus a local
/// routing-distance proxy; linear terms charge each slot's chip baseline
/// error; one-hot and slot-exclusivity constraints enter as penalties with
/// weight 10x the largest objective coefficient. Uses static time-averaged
/// baselines only; dynamic noise applies at evaluation through the shared
/// env.
class QuboModel {
public:
    QuboModel(const Circuit& c, const Hardware& hw, QuboWeights w = {})
        : c_(&c), hw_(&hw), w_(w) {
        const int m = hw.n_chips, k = hw.qubits_per_chip;
        chip_err_.resize(m);
        for (int chip = 0; chip < m; ++chip)
            chip_err_[chip] = (1.0 - hw.base_f1q(chip)) + (1.0 - hw.base_f2q_intra(chip));
        hop_.assign(m, std::vector<int>(m, 0));
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                if (i != j) hop_[i][j] = hw.chip_distance(i, j);
        local_dist_.assign(k, std::vector<int>(k, 0));
        for (int a = 0; a < k; ++a)
            for (int b = 0; b < k; ++b)
                local_dist_[a][b] = static_cast<int>(hw.local_path(0, a, b).size()) - 1;
        // penalty weight: 10x the largest objective coefficient
        double max_quad =
            w_.alpha * hw.chip_diameter() + w_.delta * (hw.max_local_distance() - 1) + 2 * w_.eta;
        double max_lin = 0.0;
        for (double e : chip_err_) max_lin = std::max(max_lin, w_.beta * e);
        max_lin = std::max(max_lin, w_.eta);
        a_pen_ = 10.0 * std::max(max_quad, max_lin);
    }

    int n_vars() const { return c_->n_qubits * hw_->total_qubits(); }
    double penalty_weight() const { return a_pen_; }
    const QuboWeights& weights() const { return w_; }

    /// Pairwise placement cost of a two-qubit gate whose endpoints sit at
    /// global slots p and p2.
    double pair_cost(int p, int p2) const {
        const int k = hw_->qubits_per_chip;
        int cp = p / k, cp2 = p2 / k;
        if (cp != cp2) return w_.alpha * hop_[cp][cp2];
        return w_.delta * std::max(0, local_dist_[p % k][p2 % k] - 1);
    }

    double slot_cost(int p) const { return w_.beta * chip_err_[p / hw_->qubits_per_chip]; }

    /// Full QUBO energy of an arbitrary bit vector (length n_vars), with
    /// constraint penalties.
    double energy_bits(const std::vector<uint8_t>& x) const {
        const int n = c_->n_qubits, slots = hw_->total_qubits();
        if (static_cast<int>(x.size()) != n * slots)
            throw std::invalid_argument("qubo energy: bit vector size");
        std::vector<std::vector<int>> pos(n);
        for (int q = 0; q < n; ++q)
            for (int p = 0; p < slots; ++p)
                if (x[static_cast<size_t>(q) * slots + p]) pos[q].push_back(p);
        double e = 0.0;
        for (const auto& g : c_->gates) {
            if (!g.is_two_qubit()) continue;
            for (int p : pos[g.q0])
                for (int p2 : pos[g.q1]) e += pair_cost(p, p2);
        }
        for (int q = 0; q < n; ++q)
            for (int p : pos[q]) e += slot_cost(p);
        // balance: eta * sum_c occupancy^2
        std::vector<int> occ(hw_->n_chips, 0);
        for (int q = 0; q < n; ++q)
            for (int p : pos[q]) ++occ[p / hw_->qubits_per_chip];
        for (int o : occ) e += w_.eta * static_cast<double>(o) * o;
        // one-hot per qubit
        for (int q = 0; q < n; ++q) {
            double diff = static_cast<double>(pos[q].size()) - 1.0;
            e += a_pen_ * diff * diff;
        }
        // at most one qubit per slot
        std::vector<int> slot_count(slots, 0);
        for (int q = 0; q < n; ++q)
            for (int p : pos[q]) ++slot_count[p];
        for (int p = 0; p < slots; ++p)
            if (slot_count[p] > 1)
                e += a_pen_ * (slot_count[p] * (slot_count[p] - 1)) / 2.0;
        return e;
    }

    /// Energy of a feasible assignment; equals energy_bits of its one-hot
    /// encoding (penalties vanish).
    double energy(const Assignment& a) const {
        double e = 0.0;
        for (const auto& g : c_->gates)
            if (g.is_two_qubit()) e += pair_cost(a[g.q0], a[g.q1]);
        std::vector<int> occ(hw_->n_chips, 0);
        for (int q = 0; q < c_->n_qubits; ++q) {
            e += slot_cost(a[q]);
            ++occ[a[q] / hw_->qubits_per_chip];
        }
        for (int o : occ) e += w_.eta * static_cast<double>(o) * o;
        return e;
    }

    std::vector<uint8_t> bits_of(const Assignment& a) const {
        std::vector<uint8_t> x(static_cast<size_t>(c_->n_qubits) * hw_->total_qubits(), 0);
        for (int q = 0; q < c_->n_qubits; ++q) x[static_cast<size_t>(q) * hw_->total_qubits() + a[q]] = 1;
        return x;
    }

    const Circuit& circuit() const { return *c_; }
    const Hardware& hardware() const { return *hw_; }

private:
    const Circuit* c_;
    const Hardware* hw_;
    QuboWeights w_;
    std::vector<double> chip_err_;
    std::vector<std::vector<int>> hop_;
    std::vector<std::vector<int>> local_dist_;
    double a_pen_ = 0.0;
};

struct AnnealResult {
    Assignment best;
    double best_energy = 0.0;
    double initial_energy = 0.0;
    int accepted = 0;
};

/// Metropolis annealer over feasible assignments, seeded by the trivial
/// mapper. Moves: single-qubit relocation to a free slot or a pair swap,
/// 50/50 when both exist.
inline AnnealResult anneal(const QuboModel& model, const AnnealConfig& cfg) {
    cfg.validate();
    const Circuit& c = model.circuit();
    const Hardware& hw = model.hardware();
    Assignment cur = trivial_map(c, hw);
    Rng rng(seed_stream(cfg.seed, "anneal"));
    const int slots = hw.total_qubits();
    std::vector<int> occupant(slots, -1);
    for (int q = 0; q < c.n_qubits; ++q) occupant[cur[q]] = q;
    std::vector<int> free_slots;
    for (int p = 0; p < slots; ++p)
        if (occupant[p] < 0) free_slots.push_back(p);

    double cur_e = model.energy(cur);
    AnnealResult res;
    res.best = cur;
    res.best_energy = cur_e;
    res.initial_energy = cur_e;

    for (int it = 0; it < cfg.iterations; ++it) {
        const double temp = anneal_temperature(cfg, it);
        bool relocate = !free_slots.empty() && rng.uniform() < 0.5;
        Assignment cand = cur;
        int freed = -1, taken = -1;
        if (relocate) {
            int q = static_cast<int>(rng.uniform_int(c.n_qubits));
            size_t fi = rng.uniform_int(free_slots.size());
            taken = free_slots[fi];
            freed = cand[q];
            cand[q] = taken;
        } else {
            if (c.n_qubits < 2) continue;
            int q1 = static_cast<int>(rng.uniform_int(c.n_qubits));
            int q2 = static_cast<int>(rng.uniform_int(c.n_qubits - 1));
            if (q2 >= q1) ++q2;
            std::swap(cand[q1], cand[q2]);
        }
        double cand_e = model.energy(cand);
        double d_e = cand_e - cur_e;
        if (d_e <= 0.0 || rng.uniform() < std::exp(-d_e / temp)) {
            cur = std::move(cand);
            cur_e = cand_e;
            ++res.accepted;
            if (relocate) {
                // maintain the free-slot pool
                for (auto& p : free_slots)
                    if (p == taken) p = freed;
            }
            if (cur_e < res.best_energy) {
                res.best_energy = cur_e;
                res.best = cur;
            }
        }
    }
    return res;
}

/// Exhaustive minimum over all injective assignments; for oracle tests on
/// tiny instances only.
inline std::pair<Assignment, double> enumerate_optimum(const QuboModel& model) {
    const Circuit& c = model.circuit();
    const Hardware& hw = model.hardware();
    const int n = c.n_qubits, slots = hw.total_qubits();
    std::vector<int> perm(slots);
    for (int i = 0; i < slots; ++i) perm[i] = i;
    Assignment best;
    double best_e = HUGE_VAL;
    // choose n slots out of `slots` in order: iterate permutations of slot
    // prefixes via simple recursive selection
    Assignment cur(n, -1);
    std::vector<bool> used(slots, false);
    std::function<void(int)> rec = [&](int q) {
        if (q == n) {
            double e = model.energy(cur);
            if (e < best_e) {
                best_e = e;
                best = cur;
            }
            return;
        }
        for (int p = 0; p < slots; ++p) {
            if (used[p]) continue;
            used[p] = true;
            cur[q] = p;
            rec(q + 1);
            used[p] = false;
        }
    };
    rec(0);
    return {best, best_e};
}

}  // namespace nisqmap

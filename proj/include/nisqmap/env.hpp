#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "nisqmap/circuit.hpp"
#include "nisqmap/errors.hpp"
#include "nisqmap/hardware.hpp"
#include "nisqmap/noise.hpp"
#include "nisqmap/rng.hpp"

namespace nisqmap {

/// Eq.-style adaptive inter-chip penalty weight; strictly decreasing in the
/// predicted noise, bounded in (-25, -15).
inline double compute_alpha1(double n_pred) {
    if (!(n_pred >= 0.0 && n_pred <= 0.15))
        throw std::invalid_argument("compute_alpha1: n_pred must be in [0, 0.15]");
    double s = 1.0 / (1.0 + std::exp(-10.0 * (n_pred - 0.05)));
    return -15.0 - 10.0 * s;
}

/// Reward weights. alpha2 rewards fidelity; alpha3..alpha5 are penalties and
/// stay <= 0 (their published values are negative coefficients).
struct RewardWeights {
    double alpha2 = 1000.0;
    double alpha3 = -1.0;
    double alpha4 = -0.3;
    double alpha5 = -1.2;

    void validate() const {
        if (alpha3 > 0 || alpha4 > 0 || alpha5 > 0)
            throw std::invalid_argument("reward weights: alpha3..alpha5 must be <= 0");
    }
};

struct Action {
    enum class Kind { Place, Swap, Commit };
    Kind kind = Kind::Commit;
    int chip = -1;
    int a = -1, b = -1;  // Place: a = slot; Swap: slots a, b

    static Action place(int chip, int slot) { return {Kind::Place, chip, slot, -1}; }
    static Action swap(int chip, int a, int b) { return {Kind::Swap, chip, a, b}; }
    static Action commit() { return {Kind::Commit, -1, -1, -1}; }

    bool operator==(const Action& o) const {
        return kind == o.kind && chip == o.chip && a == o.a && b == o.b;
    }

    std::string str() const {
        switch (kind) {
            case Kind::Place:
                return "place(" + std::to_string(chip) + "," + std::to_string(a) + ")";
            case Kind::Swap:
                return "swap(" + std::to_string(chip) + "," + std::to_string(a) + "," +
                       std::to_string(b) + ")";
            case Kind::Commit:
                return "commit";
        }
        return "?";
    }
};

/// One physical operation of the routed schedule.
struct RoutedOp {
    enum class Type { Gate1Q, Gate2QIntra, TeleportHop, SwapInsert };
    Type type;
    int gate_index;      // source gate; -1 for inserted swaps
    int chip, chip2;     // chip2 >= 0 only for teleport hops
    int slot_a, slot_b;  // global slot ids (chip * k + slot); slot_b = -1 for 1q
    int step_index;      // noise step count at execution time
    double error;
    double duration_us;  // busy time charged per touched qubit
    int layers;          // schedule layers consumed (3 for a swap)
    int touched;         // logical qubits charged busy time
};

struct StepResult {
    double reward = 0.0;
    bool done = false;
};

struct EnvCounters {
    int n_inter = 0;
    int depth = 0;
    double err_sum = 0.0;
    double qubit_time_us = 0.0;  // sum of per-qubit busy times T_v
    int steps = 0;
};

struct TraceRow {
    int step;
    std::string action;
    double reward;
    int n_inter;
    int depth;
    double fidelity;
};

/// The mapping MDP. Owns the noise trajectory and the routed schedule for
/// one episode; single-owner mutation.
///
/// Execution model: pending gates run strictly in list order. A gate
/// auto-commits as soon as it is free of routing cost (one-qubit gates, and
/// two-qubit gates whose endpoints are adjacent on one chip) or when it
/// crosses chips (teleport hops cost the same wherever the endpoints sit on
/// their chips, so no swap can help; the hop count and errors are charged to
/// the placement that produced them). A two-qubit gate on one chip with
/// non-adjacent endpoints blocks the queue until the agent either swaps
/// toward adjacency or commits, which routes it along the BFS path.
class Env {
public:
    Env(const Circuit& c, const Hardware& hw, const NoiseParams& np, uint64_t seed)
        : circuit_(&c), hw_(&hw), np_(np), rng_(seed_stream(seed, "env-noise")),
          noise_(hw.n_chips) {
        if (c.n_qubits > hw.total_qubits())
            throw CapacityError("circuit needs " + std::to_string(c.n_qubits) +
                                " qubits, hardware has " + std::to_string(hw.total_qubits()));
        np_.validate();
        order_ = placement_order(c);
        slot_of_.assign(c.n_qubits, -1);
        occupant_.assign(hw.total_qubits(), -1);
        elapsed_us_.assign(c.n_qubits, 0.0);
        slot_layer_.assign(hw.total_qubits(), 0);
        // warm the telemetry history so block-3 features are full at reset
        for (int i = 0; i < np_.history_len; ++i) noise_.step(np_, rng_);
        swap_budget_ = 4 * static_cast<int>(c.gates.size()) + 16;
        step_cap_ = c.n_qubits + swap_budget_ + static_cast<int>(c.gates.size()) + 16;
        drain();
    }

    const Circuit& circuit() const { return *circuit_; }
    const Hardware& hardware() const { return *hw_; }
    const NoiseParams& noise_params() const { return np_; }
    const NoiseState& noise() const { return noise_; }
    const std::vector<RoutedOp>& routed() const { return routed_; }
    const std::vector<int>& mapped_count_log() const { return mapped_count_log_; }
    const EnvCounters& counters() const { return counters_; }
    bool done() const { return next_gate_ >= circuit_->gates.size(); }
    int step_index() const { return counters_.steps; }
    int step_cap() const { return step_cap_; }

    int cursor_qubit() const {
        return cursor_ < order_.size() ? order_[cursor_] : -1;
    }
    bool all_placed() const { return cursor_ >= order_.size(); }
    int mapped_count() const { return mapped_; }
    int chip_of(int logical) const {
        int s = slot_of_.at(logical);
        return s < 0 ? -1 : s / hw_->qubits_per_chip;
    }
    int slot_of(int logical) const { return slot_of_.at(logical); }

    double fidelity() const {
        double dec = counters_.qubit_time_us / hw_->calib.t2_us;
        return std::max(0.0, 1.0 - counters_.err_sum - dec);
    }

    /// Coefficient of variation of per-chip assigned counts; 0 when empty.
    double load_imbalance() const {
        if (mapped_ == 0) return 0.0;
        const int m = hw_->n_chips;
        std::vector<int> cnt(m, 0);
        for (int q = 0; q < circuit_->n_qubits; ++q)
            if (slot_of_[q] >= 0) ++cnt[slot_of_[q] / hw_->qubits_per_chip];
        double mean = static_cast<double>(mapped_) / m;
        double var = 0;
        for (int c = 0; c < m; ++c) var += (cnt[c] - mean) * (cnt[c] - mean);
        var /= m;
        return std::sqrt(var) / mean;
    }

    std::vector<Action> legal_actions() const {
        if (done()) throw StateError("legal_actions: episode is done");
        std::vector<Action> out;
        if (!all_placed()) {
            for (int c = 0; c < hw_->n_chips; ++c)
                for (int s = 0; s < hw_->qubits_per_chip; ++s)
                    if (occupant_[global_slot(c, s)] < 0) out.push_back(Action::place(c, s));
            return out;
        }
        out.push_back(Action::commit());
        if (swaps_taken_ >= swap_budget_) return out;
        // endpoint-step swaps along the shortest paths of the next
        // ceil(log2 n) pending two-qubit gates
        int lookahead = std::max(1, (int)std::ceil(std::log2((double)circuit_->n_qubits)));
        int seen = 0;
        for (size_t gi = next_gate_; gi < circuit_->gates.size() && seen < lookahead; ++gi) {
            const Gate& g = circuit_->gates[gi];
            if (!g.is_two_qubit()) continue;
            ++seen;
            int sa = slot_of_[g.q0], sb = slot_of_[g.q1];
            int ca = sa / hw_->qubits_per_chip, cb = sb / hw_->qubits_per_chip;
            if (ca != cb) continue;  // teleports are slot-independent
            int la = sa % hw_->qubits_per_chip, lb = sb % hw_->qubits_per_chip;
            if (hw_->slots_adjacent(ca, la, lb)) continue;
            auto path = hw_->local_path(ca, la, lb);
            Action first = Action::swap(ca, std::min(la, path[1]), std::max(la, path[1]));
            Action last = Action::swap(ca, std::min(path[path.size() - 2], lb),
                                       std::max(path[path.size() - 2], lb));
            for (const Action& cand : {first, last}) {
                if (std::find(out.begin(), out.end(), cand) == out.end()) out.push_back(cand);
                if (static_cast<int>(out.size()) >= s_max_) return out;
            }
        }
        return out;
    }

    /// Applies the action, drains newly executable gates in list order,
    /// advances noise by one step, and returns the telescoped reward.
    StepResult step(const Action& act, const RewardWeights& w, double n_pred) {
        if (done()) throw StateError("step: episode is done");
        w.validate();
        auto legal = legal_actions();
        if (std::find(legal.begin(), legal.end(), act) == legal.end())
            throw ContractError("step: action not in legal_actions: " + act.str());

        const double alpha1 = compute_alpha1(std::clamp(n_pred, 0.0, 0.15));
        const double f0 = fidelity(), b0 = load_imbalance();
        const int n0 = counters_.n_inter, d0 = counters_.depth;
        const double e0 = counters_.err_sum;

        switch (act.kind) {
            case Action::Kind::Place: {
                int q = order_[cursor_];
                place(q, act.chip, act.a);
                ++cursor_;
                break;
            }
            case Action::Kind::Swap:
                apply_swap(act.chip, act.a, act.b);
                ++swaps_taken_;
                break;
            case Action::Kind::Commit:
                route_gate(static_cast<int>(next_gate_));
                ++next_gate_;
                break;
        }
        drain();

        // time passes: every mapped qubit idles one telemetry step
        for (int q = 0; q < circuit_->n_qubits; ++q)
            if (slot_of_[q] >= 0) charge_time(q, np_.dt_us);
        mapped_count_log_.push_back(mapped_);
        noise_.step(np_, rng_);
        ++counters_.steps;

        StepResult res;
        res.done = done();
        const double f1 = fidelity(), b1 = load_imbalance();
        res.reward = alpha1 * (counters_.n_inter - n0) + w.alpha2 * (f1 - f0) +
                     w.alpha3 * (counters_.err_sum - e0) + w.alpha4 * (counters_.depth - d0) +
                     w.alpha5 * (b1 - b0);
        if (res.done) res.reward += w.alpha2 * f1;  // terminal fidelity bonus
        last_alpha1_ = alpha1;
        return res;
    }

    /// State encoding of length n^2 + 2nM + 10M + 5.
    std::vector<double> encode_state() const {
        const int n = circuit_->n_qubits, m = hw_->n_chips, k = hw_->qubits_per_chip;
        std::vector<double> v;
        v.reserve(encoded_size());
        // block 1: discounted pending-interaction matrix
        std::vector<double> inter(static_cast<size_t>(n) * n, 0.0);
        {
            std::vector<int> layer(n, 0);
            for (size_t gi = next_gate_; gi < circuit_->gates.size(); ++gi) {
                const Gate& g = circuit_->gates[gi];
                int l = layer[g.q0];
                if (g.is_two_qubit()) l = std::max(l, layer[g.q1]);
                ++l;
                layer[g.q0] = l;
                if (g.is_two_qubit()) {
                    layer[g.q1] = l;
                    double disc = std::pow(0.9, l - 1);
                    inter[static_cast<size_t>(g.q0) * n + g.q1] += disc;
                    inter[static_cast<size_t>(g.q1) * n + g.q0] += disc;
                }
            }
        }
        v.insert(v.end(), inter.begin(), inter.end());
        // block 2: per qubit per chip [assignment indicator, chip distance]
        const double diam = std::max(1, hw_->chip_diameter());
        for (int q = 0; q < n; ++q) {
            int qc = chip_of(q);
            for (int c = 0; c < m; ++c) {
                v.push_back(qc == c ? 1.0 : 0.0);
                v.push_back(qc < 0 ? 1.0 : hw_->chip_distance(qc, c) / diam);
            }
        }
        // block 3: per chip noise/history/occupancy features
        std::vector<int> cnt(m, 0);
        for (int q = 0; q < n; ++q)
            if (slot_of_[q] >= 0) ++cnt[slot_of_[q] / k];
        int pending_total = 0;
        std::vector<int> pending_on_chip(m, 0);
        for (size_t gi = next_gate_; gi < circuit_->gates.size(); ++gi) {
            const Gate& g = circuit_->gates[gi];
            if (!g.is_two_qubit()) continue;
            ++pending_total;
            int c0 = chip_of(g.q0), c1 = chip_of(g.q1);
            std::vector<int> touched;
            if (c0 >= 0) touched.push_back(c0);
            if (c1 >= 0 && c1 != c0) touched.push_back(c1);
            for (int c : touched) ++pending_on_chip[c];
        }
        const auto& hist = noise_.history();
        for (int c = 0; c < m; ++c) {
            const double cur = noise_.total(c, np_);
            double hmean = 0, hmin = 1e300, hmax = -1e300;
            for (const auto& row : hist) {
                hmean += row[c];
                hmin = std::min(hmin, row[c]);
                hmax = std::max(hmax, row[c]);
            }
            const size_t hl = hist.size();
            hmean /= hl;
            double hstd = 0;
            for (const auto& row : hist) hstd += (row[c] - hmean) * (row[c] - hmean);
            hstd = std::sqrt(hstd / hl);
            double last_delta = hl >= 2 ? hist[hl - 1][c] - hist[hl - 2][c] : 0.0;
            const double mt = np_.max_total;
            v.push_back(cur / mt);
            v.push_back(hmean / mt);
            v.push_back(std::min(1.0, hstd / mt));
            v.push_back(hmin / mt);
            v.push_back(hmax / mt);
            v.push_back(std::clamp(0.5 * (last_delta / mt + 1.0), 0.0, 1.0));
            v.push_back(static_cast<double>(cnt[c]) / k);
            v.push_back(static_cast<double>(k - cnt[c]) / k);
            v.push_back(pending_total ? static_cast<double>(pending_on_chip[c]) / pending_total
                                      : 0.0);
            v.push_back(noise_.spike_contrib(c, np_) > 0 ? 1.0 : 0.0);
        }
        // block 4: global episode features
        const double gates1 = static_cast<double>(circuit_->gates.size()) + 1.0;
        v.push_back(std::min(1.0, static_cast<double>(counters_.steps) / step_cap_));
        v.push_back(static_cast<double>(mapped_) / std::max(1, n));
        v.push_back(std::min(1.0, counters_.n_inter / gates1));
        v.push_back(std::min(1.0, counters_.depth / (3.0 * gates1)));
        v.push_back(last_teleport_step_ < 0
                        ? 1.0
                        : std::min(1.0, static_cast<double>(counters_.steps -
                                                            last_teleport_step_) /
                                            step_cap_));
        return v;
    }

    size_t encoded_size() const {
        const size_t n = circuit_->n_qubits, m = hw_->n_chips;
        return n * n + 2 * n * m + 10 * m + 5;
    }

    const std::vector<TraceRow>& trace() const { return trace_; }
    void record_trace(const Action& a, const StepResult& r) {
        trace_.push_back({counters_.steps, a.str(), r.reward, counters_.n_inter, counters_.depth,
                          fidelity()});
    }
    double last_alpha1() const { return last_alpha1_; }

private:
    const Circuit* circuit_;
    const Hardware* hw_;
    NoiseParams np_;
    Rng rng_;
    NoiseState noise_;

    std::vector<int> order_;
    size_t cursor_ = 0;
    size_t next_gate_ = 0;
    int mapped_ = 0;
    std::vector<int> slot_of_;    // logical -> global slot, -1 unmapped
    std::vector<int> occupant_;   // global slot -> logical, -1 free
    std::vector<double> elapsed_us_;
    std::vector<int> slot_layer_;
    std::vector<RoutedOp> routed_;
    std::vector<int> mapped_count_log_;
    std::vector<TraceRow> trace_;
    EnvCounters counters_;
    int swaps_taken_ = 0;
    int swap_budget_ = 0;
    int step_cap_ = 0;
    int last_teleport_step_ = -1;
    double last_alpha1_ = compute_alpha1(0.05);
    static constexpr int s_max_ = 8;

    int global_slot(int chip, int slot) const { return chip * hw_->qubits_per_chip + slot; }

    void place(int q, int chip, int slot) {
        int gs = global_slot(chip, slot);
        if (occupant_[gs] >= 0) throw ContractError("place: slot occupied");
        occupant_[gs] = q;
        slot_of_[q] = gs;
        ++mapped_;
    }

    void charge_time(int logical, double us) {
        elapsed_us_[logical] += us;
        counters_.qubit_time_us += us;
    }

    void bump_layers(int gs_a, int gs_b, int layers) {
        int base = slot_layer_[gs_a];
        if (gs_b >= 0) base = std::max(base, slot_layer_[gs_b]);
        base += layers;
        slot_layer_[gs_a] = base;
        if (gs_b >= 0) slot_layer_[gs_b] = base;
        counters_.depth = std::max(counters_.depth, base);
    }

    /// Physical swap of two adjacent slots: three intra-chip two-qubit gates
    /// in the error budget regardless of occupancy.
    void apply_swap(int chip, int la, int lb) {
        if (!hw_->slots_adjacent(chip, la, lb)) throw ContractError("swap: slots not adjacent");
        int ga = global_slot(chip, la), gb = global_slot(chip, lb);
        double eps = 3.0 * gate_error(*hw_, GateClass::TwoQIntra, noise_, np_, chip);
        double dur = 3.0 * default_two_q_duration();
        counters_.err_sum += eps;
        int qa = occupant_[ga], qb = occupant_[gb];
        if (qa >= 0) charge_time(qa, dur);
        if (qb >= 0) charge_time(qb, dur);
        bump_layers(ga, gb, 3);
        int touched = (qa >= 0 ? 1 : 0) + (qb >= 0 ? 1 : 0);
        routed_.push_back({RoutedOp::Type::SwapInsert, -1, chip, -1, ga, gb,
                           noise_.step_count(), eps, dur, 3, touched});
        std::swap(occupant_[ga], occupant_[gb]);
        if (occupant_[ga] >= 0) slot_of_[occupant_[ga]] = ga;
        if (occupant_[gb] >= 0) slot_of_[occupant_[gb]] = gb;
    }

    double default_two_q_duration() const {
        // representative duration for inserted swaps; source gates carry
        // their own durations
        return 0.3;
    }

    bool front_gate_zero_cost() const {
        const Gate& g = circuit_->gates[next_gate_];
        if (slot_of_[g.q0] < 0) return false;
        if (!g.is_two_qubit()) return true;
        if (slot_of_[g.q1] < 0) return false;
        int sa = slot_of_[g.q0], sb = slot_of_[g.q1];
        int ca = sa / hw_->qubits_per_chip, cb = sb / hw_->qubits_per_chip;
        if (ca != cb) return true;  // teleports fire immediately
        return hw_->slots_adjacent(ca, sa % hw_->qubits_per_chip, sb % hw_->qubits_per_chip);
    }

    void drain() {
        while (next_gate_ < circuit_->gates.size() && front_gate_zero_cost()) {
            route_gate(static_cast<int>(next_gate_));
            ++next_gate_;
        }
    }

    /// Executes one gate: inserts swaps along the local BFS path until the
    /// endpoints are adjacent, or teleports hop by hop across the chip graph.
    /// Returns (inserted swap count, crossed chips).
    std::pair<int, bool> route_gate(int gate_index) {
        const Gate& g = circuit_->gates[gate_index];
        if (slot_of_[g.q0] < 0 || (g.is_two_qubit() && slot_of_[g.q1] < 0))
            throw StateError("route_gate: endpoint not mapped");
        const int k = hw_->qubits_per_chip;
        if (!g.is_two_qubit()) {
            int gs = slot_of_[g.q0];
            int chip = gs / k;
            double eps = gate_error(*hw_, GateClass::OneQ, noise_, np_, chip);
            counters_.err_sum += eps;
            charge_time(g.q0, g.duration_us);
            bump_layers(gs, -1, 1);
            routed_.push_back({RoutedOp::Type::Gate1Q, gate_index, chip, -1, gs, -1,
                               noise_.step_count(), eps, g.duration_us, 1, 1});
            return {0, false};
        }
        int sa = slot_of_[g.q0], sb = slot_of_[g.q1];
        int ca = sa / k, cb = sb / k;
        if (ca != cb) {
            auto path = hw_->chip_path(ca, cb);
            for (size_t h = 0; h + 1 < path.size(); ++h) {
                double eps =
                    gate_error(*hw_, GateClass::TwoQInter, noise_, np_, path[h], path[h + 1]);
                counters_.err_sum += eps;
                ++counters_.n_inter;
                charge_time(g.q0, hw_->interchip_latency_us);
                charge_time(g.q1, hw_->interchip_latency_us);
                bump_layers(sa, sb, 1);
                routed_.push_back({RoutedOp::Type::TeleportHop, gate_index, path[h], path[h + 1],
                                   sa, sb, noise_.step_count(), eps,
                                   hw_->interchip_latency_us, 1, 2});
            }
            last_teleport_step_ = counters_.steps;
            return {0, true};
        }
        int swaps = 0;
        while (!hw_->slots_adjacent(ca, slot_of_[g.q0] % k, slot_of_[g.q1] % k)) {
            auto path = hw_->local_path(ca, slot_of_[g.q0] % k, slot_of_[g.q1] % k);
            apply_swap(ca, slot_of_[g.q0] % k, path[1]);
            ++swaps;
        }
        sa = slot_of_[g.q0];
        sb = slot_of_[g.q1];
        double eps = gate_error(*hw_, GateClass::TwoQIntra, noise_, np_, ca);
        counters_.err_sum += eps;
        charge_time(g.q0, g.duration_us);
        charge_time(g.q1, g.duration_us);
        bump_layers(sa, sb, 1);
        routed_.push_back({RoutedOp::Type::Gate2QIntra, gate_index, ca, -1, sa, sb,
                           noise_.step_count(), eps, g.duration_us, 1, 2});
        return {swaps, false};
    }
};

/// Replay a complete static assignment through the env pipeline: place every
/// qubit at its assigned slot in cursor order, then commit until done.
/// This is how the static baselines are scored.
struct EpisodeSummary {
    double fidelity = 1.0;
    int n_inter = 0;
    int depth = 0;
    double balance = 0.0;
    double reward_sum = 0.0;
    double err_sum = 0.0;
    int steps = 0;
};

inline EpisodeSummary replay_assignment(const Circuit& c, const Hardware& hw,
                                        const NoiseParams& np, uint64_t seed,
                                        const std::vector<int>& assignment,  // logical -> global slot
                                        const RewardWeights& w, double n_pred = 0.05,
                                        std::vector<TraceRow>* trace_out = nullptr) {
    Env env(c, hw, np, seed);
    const int k = hw.qubits_per_chip;
    while (!env.done()) {
        Action act = Action::commit();
        if (!env.all_placed()) {
            int q = env.cursor_qubit();
            int gs = assignment.at(q);
            act = Action::place(gs / k, gs % k);
        }
        StepResult r = env.step(act, w, n_pred);
        env.record_trace(act, r);
        if (trace_out) trace_out->push_back(env.trace().back());
    }
    EpisodeSummary s;
    s.fidelity = env.fidelity();
    s.n_inter = env.counters().n_inter;
    s.depth = env.counters().depth;
    s.balance = env.load_imbalance();
    s.err_sum = env.counters().err_sum;
    s.steps = env.counters().steps;
    for (const auto& row : env.trace()) s.reward_sum += row.reward;
    return s;
}

inline void write_trace(std::ostream& os, const std::vector<TraceRow>& rows) {
    os << "step,action,reward,n_inter,depth,fidelity\n";
    char buf[200];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%d,%s,%.17g,%d,%d,%.17g\n", r.step, r.action.c_str(),
                      r.reward, r.n_inter, r.depth, r.fidelity);
        os << buf;
    }
}

}  // namespace nisqmap

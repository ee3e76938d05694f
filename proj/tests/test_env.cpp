#include "nisqmap/env.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace nisqmap;

namespace {

CalibrationTable exact_cal() {
    CalibrationTable cal;
    cal.f1q_std = cal.f2q_intra_std = cal.f2q_inter_std = 0.0;
    return cal;
}

NoiseParams no_noise() {
    NoiseParams p;
    p.sigma_th = 0.0;
    p.ou_sigma = 0.0;
    p.spike_prob = 0.0;
    return p;
}

Hardware two_by_four(uint64_t seed = 1) {
    return build_topology(TopologyKind::Custom, 2, 4, exact_cal(), seed);
}

// Independent recount of the counters from the routed schedule and the
// mapped-count log; shares no aggregation code with Env.
struct OracleCounts {
    int n_inter = 0;
    int depth = 0;
    double err_sum = 0.0;
    double fidelity = 1.0;
};

OracleCounts recount(const Env& env) {
    OracleCounts o;
    const auto& hw = env.hardware();
    std::vector<int> layer(hw.total_qubits(), 0);
    double busy_us = 0.0;
    for (const auto& op : env.routed()) {
        if (op.type == RoutedOp::Type::TeleportHop) ++o.n_inter;
        o.err_sum += op.error;
        busy_us += op.duration_us * op.touched;
        int base = layer[op.slot_a];
        if (op.slot_b >= 0) base = std::max(base, layer[op.slot_b]);
        base += op.layers;
        layer[op.slot_a] = base;
        if (op.slot_b >= 0) layer[op.slot_b] = base;
        o.depth = std::max(o.depth, base);
    }
    double idle_us = 0.0;
    for (int c : env.mapped_count_log()) idle_us += env.noise_params().dt_us * c;
    o.fidelity =
        std::max(0.0, 1.0 - o.err_sum - (busy_us + idle_us) / env.hardware().calib.t2_us);
    return o;
}

struct EpisodeOutcome {
    double reward_sum = 0.0;
};

EpisodeOutcome run_random_episode(Env& env, const RewardWeights& w, double n_pred, Rng& rng) {
    EpisodeOutcome out;
    while (!env.done()) {
        auto legal = env.legal_actions();
        const Action& a = legal[rng.uniform_int(legal.size())];
        StepResult r = env.step(a, w, n_pred);
        out.reward_sum += r.reward;
        env.record_trace(a, r);
    }
    return out;
}

}  // namespace

TEST(Alpha1, PinnedValues) {
    EXPECT_NEAR(compute_alpha1(0.05), -20.0, 1e-12);
    EXPECT_NEAR(compute_alpha1(0.0), -15.0 - 10.0 / (1.0 + std::exp(0.5)), 1e-12);
    EXPECT_NEAR(compute_alpha1(0.0), -18.7754, 5e-5);
    EXPECT_NEAR(compute_alpha1(0.15), -22.3106, 5e-5);
    EXPECT_THROW(compute_alpha1(-0.01), std::invalid_argument);
    EXPECT_THROW(compute_alpha1(0.2), std::invalid_argument);
}

TEST(Alpha1, StrictlyDecreasingAndBounded) {
    double prev = compute_alpha1(0.0);
    EXPECT_GT(prev, -25.0);
    EXPECT_LT(prev, -15.0);
    for (int i = 1; i <= 60; ++i) {
        double x = 0.15 * i / 60.0;
        double a = compute_alpha1(x);
        EXPECT_LT(a, prev);
        EXPECT_GT(a, -25.0);
        prev = a;
    }
}

TEST(Reset, FreshStateAndWarmHistory) {
    Hardware hw = build_topology(TopologyKind::Ring4, 4, 12, exact_cal(), 1);
    Circuit c = gen_qft(8);
    Env env(c, hw, NoiseParams{}, 7);
    EXPECT_EQ(env.cursor_qubit(), 0);
    EXPECT_EQ(env.mapped_count(), 0);
    EXPECT_FALSE(env.done());
    EXPECT_EQ(env.noise().history().size(), 10u);
    EXPECT_DOUBLE_EQ(env.fidelity(), 1.0);
    EXPECT_DOUBLE_EQ(env.load_imbalance(), 0.0);
}

TEST(Reset, CapacityError) {
    Hardware hw = build_topology(TopologyKind::Ring4, 4, 12, exact_cal(), 1);  // 48 slots
    Circuit c;
    c.n_qubits = 49;
    EXPECT_THROW(Env(c, hw, NoiseParams{}, 1), CapacityError);
}

TEST(LegalActions, FreshStateOffersAllFreeSlots) {
    Hardware hw = build_topology(TopologyKind::Ring4, 4, 4, exact_cal(), 1);
    Circuit c = gen_qft(8);
    Env env(c, hw, no_noise(), 1);
    auto acts = env.legal_actions();
    EXPECT_EQ(acts.size(), 16u);
    for (const auto& a : acts) EXPECT_EQ(a.kind, Action::Kind::Place);
}

TEST(LegalActions, BlockedGateOffersEndpointSwapsAndCommit) {
    // CNOT(0,1) with endpoints placed 3 apart on a 4-slot line: the two
    // endpoint-step swaps plus the commit action.
    Hardware hw = two_by_four();
    Circuit c;
    c.n_qubits = 2;
    c.push(Gate::two(OpKind::CNOT, 0, 1, std::nullopt, 0.3));
    Env env(c, hw, no_noise(), 1);
    RewardWeights w;
    env.step(Action::place(0, 0), w, 0.05);
    env.step(Action::place(0, 3), w, 0.05);
    auto acts = env.legal_actions();
    ASSERT_EQ(acts.size(), 3u);
    EXPECT_EQ(acts[0].kind, Action::Kind::Commit);
    EXPECT_TRUE(acts[1] == Action::swap(0, 0, 1));
    EXPECT_TRUE(acts[2] == Action::swap(0, 2, 3));
}

TEST(Routing, AdjacentEndpointsAutoCommitZeroSwaps) {
    Hardware hw = two_by_four();
    Circuit c;
    c.n_qubits = 2;
    c.push(Gate::two(OpKind::CNOT, 0, 1, std::nullopt, 0.3));
    Env env(c, hw, no_noise(), 1);
    RewardWeights w;
    env.step(Action::place(0, 1), w, 0.05);
    env.step(Action::place(0, 2), w, 0.05);  // adjacent: gate drains immediately
    EXPECT_TRUE(env.done());
    ASSERT_EQ(env.routed().size(), 1u);
    EXPECT_EQ(env.routed()[0].type, RoutedOp::Type::Gate2QIntra);
    EXPECT_EQ(env.counters().n_inter, 0);
}

TEST(Routing, DistantEndpointsCommitInsertsTwoSwaps) {
    Hardware hw = two_by_four();
    Circuit c;
    c.n_qubits = 2;
    c.push(Gate::two(OpKind::CNOT, 0, 1, std::nullopt, 0.3));
    Env env(c, hw, no_noise(), 1);
    RewardWeights w;
    env.step(Action::place(0, 0), w, 0.05);
    env.step(Action::place(0, 3), w, 0.05);
    EXPECT_FALSE(env.done());  // blocked: path length 4 needs swaps
    env.step(Action::commit(), w, 0.05);
    EXPECT_TRUE(env.done());
    int swaps = 0, gates = 0;
    for (const auto& op : env.routed()) {
        if (op.type == RoutedOp::Type::SwapInsert) ++swaps;
        if (op.type == RoutedOp::Type::Gate2QIntra) ++gates;
    }
    EXPECT_EQ(swaps, 2);
    EXPECT_EQ(gates, 1);
}

TEST(Routing, CrossChipTeleportsPerHop) {
    // chips 0 and 2 on a 4-ring are two hops apart
    Hardware hw = build_topology(TopologyKind::Ring4, 4, 4, exact_cal(), 1);
    Circuit c;
    c.n_qubits = 2;
    c.push(Gate::two(OpKind::CNOT, 0, 1, std::nullopt, 0.3));
    Env env(c, hw, no_noise(), 1);
    RewardWeights w;
    env.step(Action::place(0, 0), w, 0.05);
    env.step(Action::place(2, 0), w, 0.05);  // teleports fire in the drain
    EXPECT_TRUE(env.done());
    EXPECT_EQ(env.counters().n_inter, 2);
    int hops = 0;
    for (const auto& op : env.routed())
        if (op.type == RoutedOp::Type::TeleportHop) ++hops;
    EXPECT_EQ(hops, 2);
}

TEST(Fidelity, ErrorBudgetArithmeticAndClamp) {
    // two gates at eps = 0.005 plus decoherence 0.001 per qubit x 2 qubits
    // -> F = 1 - 0.01 - 0.002 = 0.988
    EXPECT_NEAR(1.0 - 2 * 0.005 - 2 * 0.001, 0.988, 1e-12);
    // clamp at zero once the budget is exhausted
    Hardware hw = two_by_four();
    Circuit c;
    c.n_qubits = 2;
    for (int i = 0; i < 300; ++i) c.push(Gate::two(OpKind::CNOT, 0, 1, std::nullopt, 0.3));
    Env env(c, hw, no_noise(), 1);
    RewardWeights w;
    env.step(Action::place(0, 1), w, 0.05);
    env.step(Action::place(0, 2), w, 0.05);
    EXPECT_TRUE(env.done());  // all 300 gates drained at adjacency
    EXPECT_DOUBLE_EQ(env.fidelity(), 0.0);
}

TEST(LoadImbalance, Cases) {
    Hardware hw = two_by_four();
    Circuit c = gen_qft(4);
    Env env(c, hw, no_noise(), 1);
    RewardWeights w;
    EXPECT_DOUBLE_EQ(env.load_imbalance(), 0.0);  // empty
    env.step(Action::place(0, 0), w, 0.05);
    env.step(Action::place(0, 1), w, 0.05);
    env.step(Action::place(0, 2), w, 0.05);
    env.step(Action::place(0, 3), w, 0.05);
    // counts (4, 0): population std 2, mean 2 -> 1.0
    EXPECT_DOUBLE_EQ(env.load_imbalance(), 1.0);
}

TEST(LoadImbalance, EqualCountsGiveZero) {
    Hardware hw = two_by_four();
    Circuit c = gen_qft(4);
    Env env(c, hw, no_noise(), 1);
    RewardWeights w;
    env.step(Action::place(0, 1), w, 0.05);
    env.step(Action::place(1, 1), w, 0.05);
    EXPECT_DOUBLE_EQ(env.load_imbalance(), 0.0);
}

TEST(Step, IllegalActionIsContractViolation) {
    Hardware hw = two_by_four();
    Circuit c = gen_qft(4);
    Env env(c, hw, no_noise(), 1);
    RewardWeights w;
    EXPECT_THROW(env.step(Action::commit(), w, 0.05), ContractError);
    env.step(Action::place(0, 0), w, 0.05);
    EXPECT_THROW(env.step(Action::place(0, 0), w, 0.05), ContractError);  // occupied
}

TEST(Step, TeleportChargesAlpha1) {
    Hardware hw = two_by_four();
    Circuit c;
    c.n_qubits = 2;
    c.push(Gate::two(OpKind::CNOT, 0, 1, std::nullopt, 0.3));
    Env env(c, hw, no_noise(), 1);
    RewardWeights w;
    w.alpha2 = 0.0;  // isolate the inter-chip term
    w.alpha3 = w.alpha4 = w.alpha5 = 0.0;
    env.step(Action::place(0, 0), w, 0.05);
    StepResult r = env.step(Action::place(1, 0), w, 0.05);  // cross-chip teleport
    EXPECT_TRUE(r.done);
    EXPECT_EQ(env.counters().n_inter, 1);
    EXPECT_NEAR(r.reward, -20.0, 1e-9);  // alpha1(0.05) * 1 hop
}

TEST(Step, TerminalBonusApplied) {
    Hardware hw = two_by_four();
    Circuit c;
    c.n_qubits = 2;
    c.push(Gate::two(OpKind::CNOT, 0, 1, std::nullopt, 0.3));
    Env env(c, hw, no_noise(), 1);
    RewardWeights w;
    w.alpha3 = w.alpha4 = w.alpha5 = 0.0;
    env.step(Action::place(0, 1), w, 0.05);
    double f_before = env.fidelity();
    StepResult r = env.step(Action::place(0, 2), w, 0.05);
    EXPECT_TRUE(r.done);
    double f_final = env.fidelity();
    // reward = alpha2 * (F1 - F0) + alpha2 * F_final
    EXPECT_NEAR(r.reward, w.alpha2 * (f_final - f_before) + w.alpha2 * f_final, 1e-9);
}

TEST(Encode, LengthFormulaAndFreshIndicators) {
    Hardware hw = two_by_four();
    Circuit c = gen_qft(8);
    Env env(c, hw, no_noise(), 1);
    auto v = env.encode_state();
    EXPECT_EQ(v.size(), 64u + 32u + 20u + 5u);  // n=8, M=2 -> 121
    // block 2 indicators all zero before any placement
    for (int q = 0; q < 8; ++q)
        for (int ch = 0; ch < 2; ++ch) EXPECT_DOUBLE_EQ(v[64 + q * 4 + 2 * ch], 0.0);
}

TEST(Encode, FeaturesFiniteAndInRange) {
    Hardware hw = two_by_four();
    Circuit c = gen_qft(6);
    Env env(c, hw, NoiseParams{}, 3);
    RewardWeights w;
    Rng rng(5);
    while (!env.done()) {
        auto v = env.encode_state();
        const size_t block1 = 36;
        for (size_t i = 0; i < v.size(); ++i) {
            ASSERT_TRUE(std::isfinite(v[i]));
            if (i >= block1) {
                ASSERT_GE(v[i], 0.0) << i;
                ASSERT_LE(v[i], 1.0) << i;
            } else {
                ASSERT_GE(v[i], 0.0);
            }
        }
        auto legal = env.legal_actions();
        env.step(legal[rng.uniform_int(legal.size())], w, 0.05);
    }
}

TEST(Invariants, FidelityMonotoneNonIncreasing) {
    Hardware hw = two_by_four();
    Circuit c = gen_qft(6);
    Env env(c, hw, NoiseParams{}, 11);
    RewardWeights w;
    Rng rng(2);
    double prev = env.fidelity();
    while (!env.done()) {
        auto legal = env.legal_actions();
        env.step(legal[rng.uniform_int(legal.size())], w, 0.05);
        double f = env.fidelity();
        ASSERT_LE(f, prev + 1e-12);
        prev = f;
    }
}

TEST(Invariants, OracleRecountMatchesCountersOn100Episodes) {
    RewardWeights w;
    for (int ep = 0; ep < 100; ++ep) {
        Rng rng(1000 + ep);
        int n = 3 + static_cast<int>(rng.uniform_int(5));
        Circuit c;
        switch (rng.uniform_int(3)) {
            case 0: c = gen_qft(n); break;
            case 1: c = gen_vqe(n, 1 + (int)rng.uniform_int(2), 100 + ep); break;
            default: c = gen_grover(n, std::string(n, '1'), 1); break;
        }
        Hardware hw = two_by_four(ep);
        Env env(c, hw, NoiseParams{}, 500 + ep);
        run_random_episode(env, w, 0.05, rng);
        OracleCounts o = recount(env);
        ASSERT_EQ(o.n_inter, env.counters().n_inter) << "ep " << ep;
        ASSERT_EQ(o.depth, env.counters().depth) << "ep " << ep;
        ASSERT_NEAR(o.err_sum, env.counters().err_sum, 1e-9) << "ep " << ep;
        ASSERT_NEAR(o.fidelity, env.fidelity(), 1e-9) << "ep " << ep;
    }
}

TEST(Invariants, RewardTelescopingSumsToAggregate) {
    // sum of per-step rewards + terminal bonus == Eq.-8 aggregate rebuilt
    // from final counters (constant n_pred within an episode)
    RewardWeights w;
    for (int ep = 0; ep < 100; ++ep) {
        Rng rng(7000 + ep);
        int n = 3 + static_cast<int>(rng.uniform_int(4));
        Circuit c = ep % 2 ? gen_qft(n) : gen_vqe(n, 2, ep);
        Hardware hw = two_by_four(ep);
        double n_pred = 0.15 * rng.uniform();
        Env env(c, hw, NoiseParams{}, 900 + ep);
        auto outcome = run_random_episode(env, w, n_pred, rng);
        double alpha1 = compute_alpha1(n_pred);
        double aggregate = alpha1 * env.counters().n_inter +
                           w.alpha2 * (env.fidelity() - 1.0) + w.alpha3 * env.counters().err_sum +
                           w.alpha4 * env.counters().depth + w.alpha5 * env.load_imbalance() +
                           w.alpha2 * env.fidelity();
        ASSERT_NEAR(outcome.reward_sum, aggregate, 1e-9) << "ep " << ep;
    }
}

TEST(Invariants, ReplayIsBitExactDeterministic) {
    Hardware hw = two_by_four();
    Circuit c = gen_qft(6);
    RewardWeights w;
    Env env1(c, hw, NoiseParams{}, 42);
    Rng rng(9);
    std::vector<Action> actions;
    std::vector<double> rewards;
    while (!env1.done()) {
        auto legal = env1.legal_actions();
        Action a = legal[rng.uniform_int(legal.size())];
        actions.push_back(a);
        rewards.push_back(env1.step(a, w, 0.05).reward);
    }
    Env env2(c, hw, NoiseParams{}, 42);
    for (size_t i = 0; i < actions.size(); ++i) {
        double r = env2.step(actions[i], w, 0.05).reward;
        ASSERT_EQ(r, rewards[i]);
    }
    ASSERT_EQ(env1.counters().n_inter, env2.counters().n_inter);
    ASSERT_EQ(env1.fidelity(), env2.fidelity());
}

TEST(ReplayAssignment, ScoresStaticBaselineStyle) {
    Hardware hw = two_by_four();
    Circuit c = gen_qft(4);
    RewardWeights w;
    std::vector<int> assign = {0, 1, 2, 3};  // all on chip 0: no teleports
    auto s = replay_assignment(c, hw, no_noise(), 3, assign, w);
    EXPECT_EQ(s.n_inter, 0);
    EXPECT_GT(s.fidelity, 0.0);
    std::vector<int> split = {0, 4, 1, 5};  // qubits 0,2 on chip0; 1,3 on chip1
    auto s2 = replay_assignment(c, hw, no_noise(), 3, split, w);
    EXPECT_EQ(s2.n_inter, 4);  // QFT-4 pairs crossing the parity cut
}

TEST(Trace, WriterProducesTabularRows) {
    Hardware hw = two_by_four();
    Circuit c = gen_qft(3);
    std::vector<TraceRow> rows;
    replay_assignment(c, hw, no_noise(), 3, {0, 1, 2}, RewardWeights{}, 0.05, &rows);
    ASSERT_FALSE(rows.empty());
    std::ostringstream os;
    write_trace(os, rows);
    EXPECT_NE(os.str().find("step,action,reward,n_inter,depth,fidelity"), std::string::npos);
}

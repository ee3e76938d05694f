#include "nisqmap/circuit.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>

#include "nisqmap/circuit_io.hpp"

using namespace nisqmap;

namespace {

int count_op(const Circuit& c, OpKind k) {
    int n = 0;
    for (const auto& g : c.gates) n += g.op == k ? 1 : 0;
    return n;
}

// Structural signature ignoring angles, for randomize_params invariants.
std::vector<std::tuple<OpKind, int, int>> structure(const Circuit& c) {
    std::vector<std::tuple<OpKind, int, int>> s;
    for (const auto& g : c.gates) s.emplace_back(g.op, g.q0, g.q1);
    return s;
}

}  // namespace

TEST(Qft, HandEnumeratedTemplateN3) {
    // Oracle: textbook template written out by hand for n = 3.
    Circuit c = gen_qft(3);
    ASSERT_EQ(c.gates.size(), 6u);
    EXPECT_EQ(c.gates[0].op, OpKind::H);
    EXPECT_EQ(c.gates[0].q0, 0);
    EXPECT_EQ(c.gates[1].op, OpKind::CP);
    EXPECT_EQ(c.gates[1].q0, 0);
    EXPECT_EQ(c.gates[1].q1, 1);
    EXPECT_DOUBLE_EQ(*c.gates[1].param, M_PI / 2);
    EXPECT_EQ(c.gates[2].op, OpKind::CP);
    EXPECT_EQ(c.gates[2].q0, 0);
    EXPECT_EQ(c.gates[2].q1, 2);
    EXPECT_DOUBLE_EQ(*c.gates[2].param, M_PI / 4);
    EXPECT_EQ(c.gates[3].op, OpKind::H);
    EXPECT_EQ(c.gates[3].q0, 1);
    EXPECT_EQ(c.gates[4].op, OpKind::CP);
    EXPECT_EQ(c.gates[4].q0, 1);
    EXPECT_EQ(c.gates[4].q1, 2);
    EXPECT_EQ(c.gates[5].op, OpKind::H);
    EXPECT_EQ(c.gates[5].q0, 2);
    EXPECT_EQ(count_op(c, OpKind::H), 3);
    EXPECT_EQ(count_op(c, OpKind::CP), 3);
}

TEST(Qft, GateCounts) {
    EXPECT_EQ(gen_qft(4).gates.size(), 10u);  // 4 H + 6 CP
    EXPECT_EQ(gen_qft(2).gates.size(), 3u);   // smallest case
}

TEST(Qft, TooSmallThrows) {
    EXPECT_THROW(gen_qft(1), std::invalid_argument);
    EXPECT_THROW(gen_qft(0), std::invalid_argument);
}

TEST(Qft, CountFormulaOverRange) {
    for (int n = 2; n <= 100; ++n)
        ASSERT_EQ(gen_qft(n).gates.size(), static_cast<size_t>(n * (n + 1) / 2)) << n;
}

TEST(Grover, MarkedAllOnesTemplate) {
    // One oracle block + one diffusion block after 3 initial H; enumerated
    // from the fixed ladder decomposition (CNOT, CZ, CNOT for 3 qubits).
    Circuit c = gen_grover(3, "111", 1);
    // init 3 H, oracle ladder 3, diffusion 3H+3X+ladder(3)+3X+3H = 15
    EXPECT_EQ(c.gates.size(), 21u);
    EXPECT_EQ(count_op(c, OpKind::H), 9);
    EXPECT_EQ(count_op(c, OpKind::X), 6);
    EXPECT_EQ(count_op(c, OpKind::CNOT), 4);
    EXPECT_EQ(count_op(c, OpKind::CZ), 2);
    for (size_t i = 0; i < 3; ++i) EXPECT_EQ(c.gates[i].op, OpKind::H);
}

TEST(Grover, ZeroBitAddsXPair) {
    Circuit all_ones = gen_grover(3, "111", 1);
    Circuit one_zero = gen_grover(3, "101", 1);
    EXPECT_EQ(one_zero.gates.size(), all_ones.gates.size() + 2);
    EXPECT_EQ(count_op(one_zero, OpKind::X), count_op(all_ones, OpKind::X) + 2);
}

TEST(Grover, DeterministicCountPerShape) {
    Circuit a = gen_grover(5, "10110", 2);
    Circuit b = gen_grover(5, "01001", 2);
    // same (n, iterations): counts differ only through the zero-bit X pairs
    int zeros_a = 2, zeros_b = 3;
    EXPECT_EQ(static_cast<int>(a.gates.size()) - 2 * 2 * zeros_a,
              static_cast<int>(b.gates.size()) - 2 * 2 * zeros_b);
}

TEST(Grover, BadArgsThrow) {
    EXPECT_THROW(gen_grover(3, "11", 1), std::invalid_argument);
    EXPECT_THROW(gen_grover(3, "111", 0), std::invalid_argument);
    EXPECT_THROW(gen_grover(3, "1a1", 1), std::invalid_argument);
}

TEST(Vqe, GateCounts) {
    EXPECT_EQ(gen_vqe(4, 2, 7).gates.size(), 14u);  // layers*(2n-1)
    EXPECT_EQ(gen_vqe(2, 1, 7).gates.size(), 3u);   // 2 RY + 1 CNOT
}

TEST(Vqe, DeterministicAngles) {
    Circuit a = gen_vqe(5, 3, 42);
    Circuit b = gen_vqe(5, 3, 42);
    ASSERT_EQ(a.gates.size(), b.gates.size());
    for (size_t i = 0; i < a.gates.size(); ++i) {
        EXPECT_EQ(a.gates[i].param.has_value(), b.gates[i].param.has_value());
        if (a.gates[i].param) EXPECT_DOUBLE_EQ(*a.gates[i].param, *b.gates[i].param);
    }
    Circuit d = gen_vqe(5, 3, 43);
    bool any_diff = false;
    for (size_t i = 0; i < a.gates.size(); ++i)
        if (a.gates[i].param && *a.gates[i].param != *d.gates[i].param) any_diff = true;
    EXPECT_TRUE(any_diff);
}

TEST(Vqe, AnglesInRange) {
    Circuit c = gen_vqe(6, 4, 123);
    for (const auto& g : c.gates)
        if (g.param) {
            EXPECT_GE(*g.param, 0.0);
            EXPECT_LT(*g.param, 2 * M_PI);
        }
}

TEST(RandomizeParams, NoParameterizedGatesIsIdentity) {
    Circuit c = gen_qft(4);
    // strip CP params to build a circuit of H-only parameterless gates
    Circuit plain;
    plain.n_qubits = 4;
    for (const auto& g : c.gates)
        if (g.op == OpKind::H) plain.push(g);
    Circuit out = randomize_params(plain, 99);
    ASSERT_EQ(out.gates.size(), plain.gates.size());
    for (size_t i = 0; i < out.gates.size(); ++i)
        EXPECT_FALSE(out.gates[i].param.has_value());
}

TEST(RandomizeParams, PreservesStructureChangesAngles) {
    Circuit base = gen_vqe(4, 2, 1);
    Circuit mixed = randomize_params(base, 2);
    EXPECT_EQ(structure(base), structure(mixed));
    bool any_diff = false;
    for (size_t i = 0; i < base.gates.size(); ++i)
        if (base.gates[i].param && *base.gates[i].param != *mixed.gates[i].param) any_diff = true;
    EXPECT_TRUE(any_diff);
}

TEST(RandomizeParams, TwoQubitGatesUntouched) {
    Circuit base = gen_qft(5);
    Circuit out = randomize_params(base, 3);
    for (size_t i = 0; i < base.gates.size(); ++i)
        if (base.gates[i].is_two_qubit())
            EXPECT_EQ(base.gates[i].param, out.gates[i].param);
}

TEST(RandomizeParams, SameSeedSameOutput) {
    Circuit base = gen_vqe(4, 2, 1);
    Circuit a = randomize_params(base, 7);
    Circuit b = randomize_params(base, 7);
    for (size_t i = 0; i < a.gates.size(); ++i)
        if (a.gates[i].param) EXPECT_DOUBLE_EQ(*a.gates[i].param, *b.gates[i].param);
}

TEST(Suite, PaperScaleCount) {
    std::vector<int> scales;
    for (int n = 20; n <= 100; n += 10) scales.push_back(n);
    auto suite = gen_benchmark_suite(scales, 10, 1234);
    EXPECT_EQ(suite.size(), 270u);
}

TEST(Suite, SmallCountsAndDeterminism) {
    auto s1 = gen_benchmark_suite({4}, 1, 5);
    EXPECT_EQ(s1.size(), 3u);
    auto s2 = gen_benchmark_suite({4}, 1, 5);
    for (size_t i = 0; i < s1.size(); ++i) {
        ASSERT_EQ(s1[i].gates.size(), s2[i].gates.size());
        EXPECT_EQ(circuit_to_json(s1[i]).dump(), circuit_to_json(s2[i]).dump());
    }
    EXPECT_THROW(gen_benchmark_suite({4}, 0, 5), std::invalid_argument);
}

TEST(LogicalDepth, Cases) {
    Circuit empty;
    empty.n_qubits = 3;
    EXPECT_EQ(logical_depth(empty), 0);

    Circuit layer;
    layer.n_qubits = 3;
    for (int q = 0; q < 3; ++q) layer.push(Gate::one(OpKind::H, q, std::nullopt, 0.05));
    EXPECT_EQ(logical_depth(layer), 1);

    Circuit chain;
    chain.n_qubits = 3;
    chain.push(Gate::two(OpKind::CNOT, 0, 1, std::nullopt, 0.3));
    chain.push(Gate::two(OpKind::CNOT, 1, 2, std::nullopt, 0.3));
    chain.push(Gate::two(OpKind::CNOT, 0, 1, std::nullopt, 0.3));
    EXPECT_EQ(logical_depth(chain), 3);
}

TEST(LogicalDepth, BoundedByGateCount) {
    for (uint64_t seed : {1ull, 2ull, 3ull}) {
        Circuit c = gen_vqe(6, 3, seed);
        int d = logical_depth(c);
        EXPECT_LE(d, static_cast<int>(c.gates.size()));
        EXPECT_GE(d, 1);
    }
}

TEST(Gate, InvariantsEnforced) {
    EXPECT_THROW(Gate::two(OpKind::CNOT, 2, 2, std::nullopt, 0.3), std::invalid_argument);
    EXPECT_THROW(Gate::one(OpKind::RY, 0, std::nan(""), 0.05), std::invalid_argument);
    EXPECT_THROW(Gate::one(OpKind::CNOT, 0, std::nullopt, 0.3), std::invalid_argument);
    Circuit c;
    c.n_qubits = 2;
    EXPECT_THROW(c.push(Gate::one(OpKind::H, 5, std::nullopt, 0.05)), std::invalid_argument);
}

TEST(CircuitIo, RoundTripLossless) {
    Circuit c = randomize_params(gen_vqe(5, 2, 11), 77);
    auto path = std::filesystem::temp_directory_path() / "nisqmap_circuit_roundtrip.json";
    write_circuit(c, path.string());
    Circuit back = read_circuit(path.string());
    EXPECT_EQ(circuit_to_json(c).dump(), circuit_to_json(back).dump());
    EXPECT_EQ(back.n_qubits, c.n_qubits);
    EXPECT_EQ(back.family, c.family);
    EXPECT_EQ(back.seed, c.seed);
    ASSERT_EQ(back.gates.size(), c.gates.size());
    for (size_t i = 0; i < c.gates.size(); ++i) {
        EXPECT_EQ(back.gates[i].op, c.gates[i].op);
        EXPECT_EQ(back.gates[i].param, c.gates[i].param);  // bit-exact doubles
        EXPECT_EQ(back.gates[i].duration_us, c.gates[i].duration_us);
    }
    std::filesystem::remove(path);
}

TEST(CircuitIo, VersionChecked) {
    nlohmann::json j = circuit_to_json(gen_qft(3));
    j["version"] = 2;
    EXPECT_THROW(circuit_from_json(j), std::invalid_argument);
}

TEST(PlacementOrder, FirstGateOrder) {
    Circuit c;
    c.n_qubits = 4;
    c.push(Gate::two(OpKind::CNOT, 2, 0, std::nullopt, 0.3));
    c.push(Gate::one(OpKind::H, 3, std::nullopt, 0.05));
    auto order = placement_order(c);
    ASSERT_EQ(order.size(), 4u);
    EXPECT_EQ(order[0], 2);
    EXPECT_EQ(order[1], 0);
    EXPECT_EQ(order[2], 3);
    EXPECT_EQ(order[3], 1);  // unused qubit appended by index
}

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nisqmap/rng.hpp"

namespace nisqmap {

enum class OpKind { H, X, RY, RZ, CP, CNOT, CZ, Swap };

inline bool op_is_two_qubit(OpKind k) {
    return k == OpKind::CP || k == OpKind::CNOT || k == OpKind::CZ || k == OpKind::Swap;
}

inline const char* op_name(OpKind k) {
    switch (k) {
        case OpKind::H: return "h";
        case OpKind::X: return "x";
        case OpKind::RY: return "ry";
        case OpKind::RZ: return "rz";
        case OpKind::CP: return "cp";
        case OpKind::CNOT: return "cnot";
        case OpKind::CZ: return "cz";
        case OpKind::Swap: return "swap";
    }
    return "?";
}

inline OpKind op_from_name(const std::string& s) {
    if (s == "h") return OpKind::H;
    if (s == "x") return OpKind::X;
    if (s == "ry") return OpKind::RY;
    if (s == "rz") return OpKind::RZ;
    if (s == "cp") return OpKind::CP;
    if (s == "cnot") return OpKind::CNOT;
    if (s == "cz") return OpKind::CZ;
    if (s == "swap") return OpKind::Swap;
    throw std::invalid_argument("unknown gate op: " + s);
}

/// Default gate durations in microseconds. The calibration tables give T1/T2
/// but no gate times; these are representative superconducting values and
/// feed the decoherence term of the fidelity budget.
struct GateDurations {
    double one_q_us = 0.05;
    double two_q_us = 0.3;
};

struct Gate {
    OpKind op;
    int q0 = -1;
    int q1 = -1;  // -1 for one-qubit gates
    std::optional<double> param;
    double duration_us = 0.0;

    bool is_two_qubit() const { return q1 >= 0; }
    int arity() const { return is_two_qubit() ? 2 : 1; }
    bool touches(int q) const { return q == q0 || q == q1; }

    static Gate one(OpKind k, int q, std::optional<double> angle, double dur) {
        if (op_is_two_qubit(k)) throw std::invalid_argument("one-qubit ctor with two-qubit op");
        if (q < 0) throw std::invalid_argument("negative qubit index");
        if (angle && !std::isfinite(*angle)) throw std::invalid_argument("non-finite gate angle");
        return Gate{k, q, -1, angle, dur};
    }

    static Gate two(OpKind k, int a, int b, std::optional<double> angle, double dur) {
        if (!op_is_two_qubit(k)) throw std::invalid_argument("two-qubit ctor with one-qubit op");
        if (a < 0 || b < 0) throw std::invalid_argument("negative qubit index");
        if (a == b) throw std::invalid_argument("two-qubit gate with identical qubits");
        if (angle && !std::isfinite(*angle)) throw std::invalid_argument("non-finite gate angle");
        return Gate{k, a, b, angle, dur};
    }
};

enum class Family { QFT, GROVER, VQE, CUSTOM };

inline const char* family_name(Family f) {
    switch (f) {
        case Family::QFT: return "qft";
        case Family::GROVER: return "grover";
        case Family::VQE: return "vqe";
        case Family::CUSTOM: return "custom";
    }
    return "?";
}

inline Family family_from_name(const std::string& s) {
    if (s == "qft") return Family::QFT;
    if (s == "grover") return Family::GROVER;
    if (s == "vqe") return Family::VQE;
    if (s == "custom") return Family::CUSTOM;
    throw std::invalid_argument("unknown circuit family: " + s);
}

/// Gate-graph circuit: ordered gate list over logical qubits, durations
/// attached, no unitary semantics. List order is a valid topological order
/// of the dependency DAG.
struct Circuit {
    int n_qubits = 0;
    std::vector<Gate> gates;
    Family family = Family::CUSTOM;
    uint64_t seed = 0;

    void push(Gate g) {
        if (g.q0 >= n_qubits || g.q1 >= n_qubits)
            throw std::invalid_argument("gate qubit index out of range");
        gates.push_back(g);
    }

    int two_qubit_count() const {
        int c = 0;
        for (const auto& g : gates) c += g.is_two_qubit() ? 1 : 0;
        return c;
    }
};

inline Circuit gen_qft(int n, GateDurations dur = {}) {
    if (n < 2) throw std::invalid_argument("gen_qft: need at least 2 qubits");
    Circuit c;
    c.n_qubits = n;
    c.family = Family::QFT;
    for (int i = 0; i < n; ++i) {
        c.push(Gate::one(OpKind::H, i, std::nullopt, dur.one_q_us));
        for (int j = i + 1; j < n; ++j) {
            double angle = M_PI / std::pow(2.0, j - i);
            c.push(Gate::two(OpKind::CP, i, j, angle, dur.two_q_us));
        }
    }
    return c;
}

namespace detail {

/// Multi-controlled Z over `qs`, decomposed structurally into a CNOT ladder
/// around one CZ. Only connectivity pattern and gate count matter here.
inline void push_mcz_ladder(Circuit& c, const std::vector<int>& qs, GateDurations dur) {
    const int m = static_cast<int>(qs.size());
    if (m == 1) {
        c.push(Gate::one(OpKind::RZ, qs[0], M_PI, dur.one_q_us));
        return;
    }
    if (m == 2) {
        c.push(Gate::two(OpKind::CZ, qs[0], qs[1], std::nullopt, dur.two_q_us));
        return;
    }
    for (int i = 0; i + 2 < m; ++i)
        c.push(Gate::two(OpKind::CNOT, qs[i], qs[i + 1], std::nullopt, dur.two_q_us));
    c.push(Gate::two(OpKind::CZ, qs[m - 2], qs[m - 1], std::nullopt, dur.two_q_us));
    for (int i = m - 3; i >= 0; --i)
        c.push(Gate::two(OpKind::CNOT, qs[i], qs[i + 1], std::nullopt, dur.two_q_us));
}

}  // namespace detail

inline Circuit gen_grover(int n, const std::string& marked, int iterations,
                          GateDurations dur = {}) {
    if (static_cast<int>(marked.size()) != n)
        throw std::invalid_argument("gen_grover: marked bitstring length must equal n");
    if (iterations < 1) throw std::invalid_argument("gen_grover: iterations must be >= 1");
    for (char ch : marked)
        if (ch != '0' && ch != '1')
            throw std::invalid_argument("gen_grover: marked must be a 0/1 string");

    Circuit c;
    c.n_qubits = n;
    c.family = Family::GROVER;
    std::vector<int> all(n);
    for (int i = 0; i < n; ++i) all[i] = i;

    for (int i = 0; i < n; ++i) c.push(Gate::one(OpKind::H, i, std::nullopt, dur.one_q_us));
    for (int it = 0; it < iterations; ++it) {
        // Oracle: flip zero-bits, phase ladder, flip back.
        for (int i = 0; i < n; ++i)
            if (marked[i] == '0') c.push(Gate::one(OpKind::X, i, std::nullopt, dur.one_q_us));
        detail::push_mcz_ladder(c, all, dur);
        for (int i = 0; i < n; ++i)
            if (marked[i] == '0') c.push(Gate::one(OpKind::X, i, std::nullopt, dur.one_q_us));
        // Diffusion.
        for (int i = 0; i < n; ++i) c.push(Gate::one(OpKind::H, i, std::nullopt, dur.one_q_us));
        for (int i = 0; i < n; ++i) c.push(Gate::one(OpKind::X, i, std::nullopt, dur.one_q_us));
        detail::push_mcz_ladder(c, all, dur);
        for (int i = 0; i < n; ++i) c.push(Gate::one(OpKind::X, i, std::nullopt, dur.one_q_us));
        for (int i = 0; i < n; ++i) c.push(Gate::one(OpKind::H, i, std::nullopt, dur.one_q_us));
    }
    return c;
}

inline Circuit gen_vqe(int n, int layers, uint64_t seed, GateDurations dur = {}) {
    if (n < 2) throw std::invalid_argument("gen_vqe: need at least 2 qubits");
    if (layers < 1) throw std::invalid_argument("gen_vqe: layers must be >= 1");
    Circuit c;
    c.n_qubits = n;
    c.family = Family::VQE;
    c.seed = seed;
    Rng rng(seed_stream(seed, "vqe-angles"));
    for (int l = 0; l < layers; ++l) {
        for (int i = 0; i < n; ++i)
            c.push(Gate::one(OpKind::RY, i, rng.uniform(0.0, 2.0 * M_PI), dur.one_q_us));
        for (int i = 0; i + 1 < n; ++i)
            c.push(Gate::two(OpKind::CNOT, i, i + 1, std::nullopt, dur.two_q_us));
    }
    return c;
}

/// Resample the angles of parameterized one-qubit gates from seeded
/// uniform [0, 2pi); structure and two-qubit gates untouched.
inline Circuit randomize_params(const Circuit& c, uint64_t seed) {
    Circuit out = c;
    out.seed = seed;
    Rng rng(seed_stream(seed, "randomize-params"));
    for (auto& g : out.gates) {
        if (!g.is_two_qubit() && g.param.has_value())
            g.param = rng.uniform(0.0, 2.0 * M_PI);
    }
    return out;
}

/// One circuit per scale x {QFT, GROVER, VQE} x variant.
inline std::vector<Circuit> gen_benchmark_suite(const std::vector<int>& scales, int variants,
                                                uint64_t seed, GateDurations dur = {},
                                                int vqe_layers = 2) {
    if (variants < 1) throw std::invalid_argument("gen_benchmark_suite: variants must be >= 1");
    std::vector<Circuit> suite;
    suite.reserve(scales.size() * 3 * variants);
    for (int n : scales) {
        for (Family fam : {Family::QFT, Family::GROVER, Family::VQE}) {
            for (int v = 0; v < variants; ++v) {
                uint64_t cs = seed_stream(seed, family_name(fam), (uint64_t)n * 1000 + v);
                switch (fam) {
                    case Family::QFT: {
                        Circuit c = randomize_params(gen_qft(n, dur), cs);
                        c.family = Family::QFT;
                        suite.push_back(std::move(c));
                        break;
                    }
                    case Family::GROVER: {
                        Rng rng(cs);
                        std::string marked(n, '0');
                        for (int i = 0; i < n; ++i) marked[i] = rng.bernoulli(0.5) ? '1' : '0';
                        Circuit c = gen_grover(n, marked, 1, dur);
                        c.seed = cs;
                        suite.push_back(std::move(c));
                        break;
                    }
                    case Family::VQE:
                        suite.push_back(gen_vqe(n, vqe_layers, cs, dur));
                        break;
                    default:
                        break;
                }
            }
        }
    }
    return suite;
}

/// Longest dependency chain; gates conflict when they share a qubit.
inline int logical_depth(const Circuit& c) {
    std::vector<int> layer(c.n_qubits, 0);
    int depth = 0;
    for (const auto& g : c.gates) {
        int l = layer[g.q0];
        if (g.is_two_qubit()) l = std::max(l, layer[g.q1]);
        ++l;
        layer[g.q0] = l;
        if (g.is_two_qubit()) layer[g.q1] = l;
        depth = std::max(depth, l);
    }
    return depth;
}

/// Logical qubits in order of their first gate; qubits not appearing in any
/// gate are appended by index. This fixes the placement order of the mapper.
inline std::vector<int> placement_order(const Circuit& c) {
    std::vector<int> order;
    std::vector<bool> seen(c.n_qubits, false);
    for (const auto& g : c.gates) {
        if (!seen[g.q0]) { seen[g.q0] = true; order.push_back(g.q0); }
        if (g.is_two_qubit() && !seen[g.q1]) { seen[g.q1] = true; order.push_back(g.q1); }
    }
    for (int q = 0; q < c.n_qubits; ++q)
        if (!seen[q]) order.push_back(q);
    return order;
}

}  // namespace nisqmap

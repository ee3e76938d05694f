#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "nisqmap/rng.hpp"

namespace nisqmap {

struct CalibrationTable {
    double f1q_mean = 0.9995, f1q_std = 0.0002;
    double f2q_intra_mean = 0.995, f2q_intra_std = 0.005;
    double f2q_inter_mean = 0.98, f2q_inter_std = 0.01;
    double t1_us = 100.0;
    double t2_us = 50.0;

    void validate() const {
        auto fid_ok = [](double f) { return f > 0.0 && f <= 1.0; };
        if (!fid_ok(f1q_mean) || !fid_ok(f2q_intra_mean) || !fid_ok(f2q_inter_mean))
            throw std::invalid_argument("calibration: fidelities must be in (0, 1]");
        if (f1q_std < 0 || f2q_intra_std < 0 || f2q_inter_std < 0)
            throw std::invalid_argument("calibration: stds must be >= 0");
        if (t1_us <= 0 || t2_us <= 0) throw std::invalid_argument("calibration: T1, T2 must be > 0");
        if (t2_us > 2.0 * t1_us) throw std::invalid_argument("calibration: T2 must be <= 2*T1");
    }
};

enum class TopologyKind { Ring4, Grid4, Hex6, Complete6, Custom };

inline const char* topology_name(TopologyKind k) {
    switch (k) {
        case TopologyKind::Ring4: return "ring4";
        case TopologyKind::Grid4: return "grid4";
        case TopologyKind::Hex6: return "hex6";
        case TopologyKind::Complete6: return "complete6";
        case TopologyKind::Custom: return "custom";
    }
    return "?";
}

inline TopologyKind topology_from_name(const std::string& s) {
    if (s == "ring4") return TopologyKind::Ring4;
    if (s == "grid4") return TopologyKind::Grid4;
    if (s == "hex6") return TopologyKind::Hex6;
    if (s == "complete6") return TopologyKind::Complete6;
    if (s == "custom") return TopologyKind::Custom;
    throw std::invalid_argument("unknown topology kind: " + s);
}

/// Multi-chip hardware model: M chips of k qubits each, chip-level graph,
/// per-qubit/per-edge baseline fidelities sampled once at build time.
/// Immutable after construction.
class Hardware {
public:
    TopologyKind kind = TopologyKind::Custom;
    int n_chips = 0;
    int qubits_per_chip = 0;
    CalibrationTable calib;
    double interchip_latency_us = 50.0;
    uint64_t seed = 0;

    // adjacency lists, neighbor lists sorted ascending
    std::vector<std::vector<std::vector<int>>> local_adj;  // [chip][slot] -> slots
    std::vector<std::vector<int>> chip_adj;                // [chip] -> chips

    // sampled baseline fidelities
    std::vector<std::vector<double>> f1q;          // [chip][slot]
    std::vector<std::vector<double>> f2q_intra;    // [chip][a*k+b] for local edges
    std::vector<std::vector<double>> f2q_inter;    // [i][j] for chip edges

    int total_qubits() const { return n_chips * qubits_per_chip; }

    bool chips_adjacent(int i, int j) const {
        check_chip(i);
        check_chip(j);
        if (i == j) return false;
        const auto& a = chip_adj[i];
        return std::binary_search(a.begin(), a.end(), j);
    }

    bool slots_adjacent(int chip, int a, int b) const {
        check_chip(chip);
        const auto& ns = local_adj[chip][a];
        return std::binary_search(ns.begin(), ns.end(), b);
    }

    /// Shortest path between two slots of one chip by BFS; ties broken by
    /// visiting smallest-index neighbors first.
    std::vector<int> local_path(int chip, int a, int b) const {
        check_chip(chip);
        check_slot(a);
        check_slot(b);
        if (a == b) return {a};
        const int k = qubits_per_chip;
        std::vector<int> parent(k, -1);
        std::deque<int> queue{a};
        parent[a] = a;
        while (!queue.empty()) {
            int u = queue.front();
            queue.pop_front();
            if (u == b) break;
            for (int v : local_adj[chip][u]) {
                if (parent[v] < 0) {
                    parent[v] = u;
                    queue.push_back(v);
                }
            }
        }
        if (parent[b] < 0) throw std::runtime_error("local_path: chip graph disconnected");
        std::vector<int> path;
        for (int v = b; v != a; v = parent[v]) path.push_back(v);
        path.push_back(a);
        std::reverse(path.begin(), path.end());
        return path;
    }

    /// Shortest chip-graph path; same deterministic BFS rule.
    std::vector<int> chip_path(int i, int j) const {
        check_chip(i);
        check_chip(j);
        if (i == j) return {i};
        std::vector<int> parent(n_chips, -1);
        std::deque<int> queue{i};
        parent[i] = i;
        while (!queue.empty()) {
            int u = queue.front();
            queue.pop_front();
            if (u == j) break;
            for (int v : chip_adj[u])
                if (parent[v] < 0) {
                    parent[v] = u;
                    queue.push_back(v);
                }
        }
        if (parent[j] < 0) throw std::runtime_error("chip_path: chip graph disconnected");
        std::vector<int> path;
        for (int v = j; v != i; v = parent[v]) path.push_back(v);
        path.push_back(i);
        std::reverse(path.begin(), path.end());
        return path;
    }

    int chip_distance(int i, int j) const {
        return static_cast<int>(chip_path(i, j).size()) - 1;
    }

    int chip_diameter() const {
        int d = 1;
        for (int i = 0; i < n_chips; ++i)
            for (int j = i + 1; j < n_chips; ++j) d = std::max(d, chip_distance(i, j));
        return d;
    }

    int max_local_distance() const {
        int d = 1;
        const int k = qubits_per_chip;
        for (int a = 0; a < k; ++a)
            for (int b = a + 1; b < k; ++b)
                d = std::max(d, static_cast<int>(local_path(0, a, b).size()) - 1);
        return d;
    }

    // Chip-level mean baselines, precomputed from the sampled values.
    double base_f1q(int chip) const { check_chip(chip); return mean_f1q_[chip]; }
    double base_f2q_intra(int chip) const { check_chip(chip); return mean_f2q_intra_[chip]; }
    double base_f2q_inter(int i, int j) const {
        check_chip(i);
        check_chip(j);
        if (i == j) throw std::invalid_argument("base_f2q_inter: chips must differ");
        return f2q_inter[std::min(i, j)][std::max(i, j)];
    }

    void finalize() {
        mean_f1q_.assign(n_chips, 0.0);
        mean_f2q_intra_.assign(n_chips, 0.0);
        for (int c = 0; c < n_chips; ++c) {
            double s = 0;
            for (double f : f1q[c]) s += f;
            mean_f1q_[c] = s / qubits_per_chip;
            double se = 0;
            int ne = 0;
            for (int a = 0; a < qubits_per_chip; ++a)
                for (int b : local_adj[c][a])
                    if (b > a) {
                        se += f2q_intra[c][a * qubits_per_chip + b];
                        ++ne;
                    }
            mean_f2q_intra_[c] = ne ? se / ne : calib.f2q_intra_mean;
        }
    }

private:
    std::vector<double> mean_f1q_;
    std::vector<double> mean_f2q_intra_;

    void check_chip(int c) const {
        if (c < 0 || c >= n_chips) throw std::out_of_range("chip index out of range");
    }
    void check_slot(int s) const {
        if (s < 0 || s >= qubits_per_chip) throw std::out_of_range("slot index out of range");
    }
};

namespace detail {

inline std::vector<std::vector<int>> linear_chain(int k) {
    std::vector<std::vector<int>> adj(k);
    for (int i = 0; i + 1 < k; ++i) {
        adj[i].push_back(i + 1);
        adj[i + 1].push_back(i);
    }
    return adj;
}

// 4-row lattice, slots row-major over ceil(k/4) columns.
inline std::vector<std::vector<int>> lattice4(int k) {
    const int cols = (k + 3) / 4;
    auto at = [&](int s) { return std::pair<int, int>{s / cols, s % cols}; };
    std::vector<std::vector<int>> adj(k);
    for (int s = 0; s < k; ++s) {
        auto [r, c] = at(s);
        if (c + 1 < cols && s + 1 < k && at(s + 1).first == r) {
            adj[s].push_back(s + 1);
            adj[s + 1].push_back(s);
        }
        int below = s + cols;
        if (r + 1 < 4 && below < k) {
            adj[s].push_back(below);
            adj[below].push_back(s);
        }
    }
    return adj;
}

inline void add_edge(std::vector<std::vector<int>>& adj, int a, int b) {
    adj[a].push_back(b);
    adj[b].push_back(a);
}

inline std::vector<std::vector<int>> chip_graph_for(TopologyKind kind, int m) {
    std::vector<std::vector<int>> adj(m);
    switch (kind) {
        case TopologyKind::Ring4:
        case TopologyKind::Grid4:
            // a 2x2 grid is the same 4-cycle as the ring
            for (int i = 0; i < 4; ++i) add_edge(adj, i, (i + 1) % 4);
            break;
        case TopologyKind::Hex6:
            // 6-cycle plus the three long diagonals (recorded in the descriptor)
            for (int i = 0; i < 6; ++i) add_edge(adj, i, (i + 1) % 6);
            for (int i = 0; i < 3; ++i) add_edge(adj, i, i + 3);
            break;
        case TopologyKind::Complete6:
            for (int i = 0; i < 6; ++i)
                for (int j = i + 1; j < 6; ++j) add_edge(adj, i, j);
            break;
        case TopologyKind::Custom:
            if (m == 2) {
                add_edge(adj, 0, 1);
            } else {
                for (int i = 0; i < m; ++i) add_edge(adj, i, (i + 1) % m);
            }
            break;
    }
    for (auto& ns : adj) std::sort(ns.begin(), ns.end());
    return adj;
}

}  // namespace detail

/// Deterministic in (kind, M, k, seed). Per-qubit and per-edge baseline
/// fidelities are sampled once from the calibration Gaussians, clamped into
/// (0, 1]. Intra-chip layout: linear chain for k <= 12, 4-row lattice above.
inline Hardware build_topology(TopologyKind kind, int m, int k, CalibrationTable calib,
                               uint64_t seed) {
    if (k < 2 || k > 20) throw std::invalid_argument("build_topology: k must be in [2, 20]");
    if (m < 2) throw std::invalid_argument("build_topology: need at least 2 chips");
    if ((kind == TopologyKind::Ring4 || kind == TopologyKind::Grid4) && m != 4)
        throw std::invalid_argument("build_topology: ring4/grid4 require M = 4");
    if ((kind == TopologyKind::Hex6 || kind == TopologyKind::Complete6) && m != 6)
        throw std::invalid_argument("build_topology: hex6/complete6 require M = 6");
    calib.validate();

    Hardware hw;
    hw.kind = kind;
    hw.n_chips = m;
    hw.qubits_per_chip = k;
    hw.calib = calib;
    hw.seed = seed;
    hw.interchip_latency_us = 50.0;

    auto local = k <= 12 ? detail::linear_chain(k) : detail::lattice4(k);
    for (auto& ns : local) std::sort(ns.begin(), ns.end());
    hw.local_adj.assign(m, local);
    hw.chip_adj = detail::chip_graph_for(kind, m);

    auto clamp_fid = [](double f) { return std::min(1.0, std::max(1e-9, f)); };
    Rng rng(seed_stream(seed, "topology-calib"));
    hw.f1q.assign(m, std::vector<double>(k, 0.0));
    for (int c = 0; c < m; ++c)
        for (int q = 0; q < k; ++q)
            hw.f1q[c][q] = clamp_fid(rng.normal(calib.f1q_mean, calib.f1q_std));
    hw.f2q_intra.assign(m, std::vector<double>(k * k, 0.0));
    for (int c = 0; c < m; ++c)
        for (int a = 0; a < k; ++a)
            for (int b : hw.local_adj[c][a])
                if (b > a) {
                    double f = clamp_fid(rng.normal(calib.f2q_intra_mean, calib.f2q_intra_std));
                    hw.f2q_intra[c][a * k + b] = f;
                    hw.f2q_intra[c][b * k + a] = f;
                }
    hw.f2q_inter.assign(m, std::vector<double>(m, 0.0));
    for (int i = 0; i < m; ++i)
        for (int j : hw.chip_adj[i])
            if (j > i) {
                double f = clamp_fid(rng.normal(calib.f2q_inter_mean, calib.f2q_inter_std));
                hw.f2q_inter[i][j] = f;
                hw.f2q_inter[j][i] = f;
            }
    // non-adjacent chip pairs route hop by hop; charge each hop at the mean
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            if (i != j && hw.f2q_inter[std::min(i, j)][std::max(i, j)] == 0.0)
                hw.f2q_inter[i][j] = calib.f2q_inter_mean;

    hw.finalize();
    return hw;
}

inline nlohmann::ordered_json topology_to_json(const Hardware& hw) {
    nlohmann::ordered_json j;
    j["kind"] = topology_name(hw.kind);
    j["M"] = hw.n_chips;
    j["k"] = hw.qubits_per_chip;
    nlohmann::ordered_json cal;
    cal["f1q"] = {hw.calib.f1q_mean, hw.calib.f1q_std};
    cal["f2q_intra"] = {hw.calib.f2q_intra_mean, hw.calib.f2q_intra_std};
    cal["f2q_inter"] = {hw.calib.f2q_inter_mean, hw.calib.f2q_inter_std};
    cal["t1_us"] = hw.calib.t1_us;
    cal["t2_us"] = hw.calib.t2_us;
    j["calib"] = std::move(cal);
    j["seed"] = hw.seed;
    j["interchip_latency_us"] = hw.interchip_latency_us;
    nlohmann::ordered_json edges = nlohmann::ordered_json::array();
    for (int i = 0; i < hw.n_chips; ++i)
        for (int v : hw.chip_adj[i])
            if (v > i) edges.push_back({i, v});
    j["chip_edges"] = std::move(edges);
    if (hw.kind == TopologyKind::Hex6)
        j["note"] = "hex6 chip adjacency: 6-cycle plus the three long diagonals";
    return j;
}

inline Hardware topology_from_json(const nlohmann::json& j) {
    CalibrationTable cal;
    const auto& jc = j.at("calib");
    cal.f1q_mean = jc.at("f1q")[0].get<double>();
    cal.f1q_std = jc.at("f1q")[1].get<double>();
    cal.f2q_intra_mean = jc.at("f2q_intra")[0].get<double>();
    cal.f2q_intra_std = jc.at("f2q_intra")[1].get<double>();
    cal.f2q_inter_mean = jc.at("f2q_inter")[0].get<double>();
    cal.f2q_inter_std = jc.at("f2q_inter")[1].get<double>();
    cal.t1_us = jc.at("t1_us").get<double>();
    cal.t2_us = jc.at("t2_us").get<double>();
    Hardware hw = build_topology(topology_from_name(j.at("kind").get<std::string>()),
                                 j.at("M").get<int>(), j.at("k").get<int>(), cal,
                                 j.at("seed").get<uint64_t>());
    if (j.contains("interchip_latency_us"))
        hw.interchip_latency_us = j.at("interchip_latency_us").get<double>();
    return hw;
}

inline void write_topology(const Hardware& hw, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for write: " + path);
    f << topology_to_json(hw).dump(1) << "\n";
}

inline Hardware read_topology(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open for read: " + path);
    nlohmann::json j;
    f >> j;
    return topology_from_json(j);
}

}  // namespace nisqmap

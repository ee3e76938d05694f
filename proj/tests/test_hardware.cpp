#include "nisqmap/hardware.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <queue>

using namespace nisqmap;

namespace {

Hardware ring4(int k = 12, uint64_t seed = 1) {
    return build_topology(TopologyKind::Ring4, 4, k, CalibrationTable{}, seed);
}

// Plain all-pairs BFS distance, independent of Hardware::local_path.
int brute_distance(const std::vector<std::vector<int>>& adj, int a, int b) {
    std::vector<int> dist(adj.size(), -1);
    std::queue<int> q;
    q.push(a);
    dist[a] = 0;
    while (!q.empty()) {
        int u = q.front();
        q.pop();
        for (int v : adj[u])
            if (dist[v] < 0) {
                dist[v] = dist[u] + 1;
                q.push(v);
            }
    }
    return dist[b];
}

}  // namespace

TEST(Topology, Ring4Basics) {
    Hardware hw = ring4(12);
    EXPECT_EQ(hw.total_qubits(), 48);
    EXPECT_TRUE(hw.chips_adjacent(0, 1));
    EXPECT_TRUE(hw.chips_adjacent(3, 0));
    EXPECT_FALSE(hw.chips_adjacent(0, 2));
    EXPECT_FALSE(hw.chips_adjacent(1, 1));  // reflexive queries are false
    EXPECT_DOUBLE_EQ(hw.interchip_latency_us, 50.0);
    EXPECT_DOUBLE_EQ(hw.calib.t1_us, 100.0);
    EXPECT_DOUBLE_EQ(hw.calib.t2_us, 50.0);
}

TEST(Topology, Complete6EdgeCount) {
    Hardware hw = build_topology(TopologyKind::Complete6, 6, 8, CalibrationTable{}, 3);
    int edges = 0;
    for (int i = 0; i < 6; ++i)
        for (int j : hw.chip_adj[i])
            if (j > i) ++edges;
    EXPECT_EQ(edges, 15);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j)
            if (i != j) EXPECT_TRUE(hw.chips_adjacent(i, j));
}

TEST(Topology, Hex6IsCyclePlusDiagonals) {
    Hardware hw = build_topology(TopologyKind::Hex6, 6, 4, CalibrationTable{}, 3);
    int edges = 0;
    for (int i = 0; i < 6; ++i)
        for (int j : hw.chip_adj[i])
            if (j > i) ++edges;
    EXPECT_EQ(edges, 9);  // 6-cycle + 3 diagonals
    EXPECT_TRUE(hw.chips_adjacent(0, 3));
    EXPECT_TRUE(hw.chips_adjacent(1, 4));
    EXPECT_TRUE(hw.chips_adjacent(2, 5));
}

TEST(Topology, BadArgsThrow) {
    EXPECT_THROW(build_topology(TopologyKind::Ring4, 4, 1, CalibrationTable{}, 1),
                 std::invalid_argument);
    EXPECT_THROW(build_topology(TopologyKind::Ring4, 4, 25, CalibrationTable{}, 1),
                 std::invalid_argument);
    EXPECT_THROW(build_topology(TopologyKind::Ring4, 5, 8, CalibrationTable{}, 1),
                 std::invalid_argument);
    EXPECT_THROW(build_topology(TopologyKind::Custom, 1, 8, CalibrationTable{}, 1),
                 std::invalid_argument);
    EXPECT_THROW(topology_from_name("torus"), std::invalid_argument);
    CalibrationTable bad;
    bad.t2_us = 300.0;  // > 2*T1
    EXPECT_THROW(build_topology(TopologyKind::Ring4, 4, 8, bad, 1), std::invalid_argument);
}

TEST(LocalPath, LinearChainCases) {
    Hardware hw = build_topology(TopologyKind::Custom, 2, 4, CalibrationTable{}, 1);
    auto p = hw.local_path(0, 0, 3);
    ASSERT_EQ(p.size(), 4u);
    EXPECT_EQ(p, (std::vector<int>{0, 1, 2, 3}));
    EXPECT_EQ(hw.local_path(0, 2, 2), (std::vector<int>{2}));
    EXPECT_EQ(hw.local_path(1, 1, 2).size(), 2u);
}

TEST(LocalPath, MatchesBruteForceAllPairs) {
    for (int k : {4, 6, 8}) {
        Hardware hw = build_topology(TopologyKind::Custom, 2, k, CalibrationTable{}, 9);
        for (int a = 0; a < k; ++a)
            for (int b = 0; b < k; ++b) {
                auto path = hw.local_path(0, a, b);
                EXPECT_EQ(static_cast<int>(path.size()) - 1,
                          brute_distance(hw.local_adj[0], a, b));
                for (size_t i = 0; i + 1 < path.size(); ++i)
                    EXPECT_TRUE(hw.slots_adjacent(0, path[i], path[i + 1]));
            }
    }
}

TEST(LocalPath, LatticeForLargeChips) {
    Hardware hw = build_topology(TopologyKind::Ring4, 4, 16, CalibrationTable{}, 2);
    // 16 slots in a 4x4 lattice: opposite corners are 6 hops apart
    auto p = hw.local_path(0, 0, 15);
    EXPECT_EQ(p.size(), 7u);
    for (int a = 0; a < 16; ++a)
        for (int b = 0; b < 16; ++b)
            EXPECT_EQ(static_cast<int>(hw.local_path(0, a, b).size()) - 1,
                      brute_distance(hw.local_adj[0], a, b));
}

TEST(ChipPath, RingDistances) {
    Hardware hw = ring4();
    EXPECT_EQ(hw.chip_distance(0, 2), 2);
    EXPECT_EQ(hw.chip_distance(0, 1), 1);
    EXPECT_EQ(hw.chip_distance(2, 2), 0);
    EXPECT_EQ(hw.chip_diameter(), 2);
}

TEST(Sampling, DeterministicInSeed) {
    Hardware a = ring4(12, 77);
    Hardware b = ring4(12, 77);
    EXPECT_EQ(a.f1q, b.f1q);
    EXPECT_EQ(a.f2q_intra, b.f2q_intra);
    EXPECT_EQ(a.f2q_inter, b.f2q_inter);
    Hardware c = ring4(12, 78);
    EXPECT_NE(a.f1q, c.f1q);
}

TEST(Sampling, StdReproducedWithinTenPercent) {
    // >= 1e4 samples of per-qubit 1q fidelity across many seeds
    CalibrationTable cal;
    const double target = cal.f1q_std;
    std::vector<double> xs;
    for (uint64_t s = 0; s < 250; ++s) {
        Hardware hw = build_topology(TopologyKind::Ring4, 4, 12, cal, s);
        for (const auto& chip : hw.f1q)
            for (double f : chip) xs.push_back(f);
    }
    ASSERT_GE(xs.size(), 10000u);
    double mean = 0;
    for (double x : xs) mean += x;
    mean /= xs.size();
    double var = 0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= (xs.size() - 1);
    double std = std::sqrt(var);
    EXPECT_NEAR(std, target, 0.1 * target);
    EXPECT_NEAR(mean, cal.f1q_mean, 5e-5);
}

TEST(Descriptor, RoundTrip) {
    Hardware hw = build_topology(TopologyKind::Hex6, 6, 10, CalibrationTable{}, 5);
    auto path = std::filesystem::temp_directory_path() / "nisqmap_topology.json";
    write_topology(hw, path.string());
    Hardware back = read_topology(path.string());
    EXPECT_EQ(back.kind, hw.kind);
    EXPECT_EQ(back.n_chips, hw.n_chips);
    EXPECT_EQ(back.qubits_per_chip, hw.qubits_per_chip);
    EXPECT_EQ(back.seed, hw.seed);
    EXPECT_EQ(back.f1q, hw.f1q);  // resampled from the same seed
    EXPECT_EQ(topology_to_json(back).dump(), topology_to_json(hw).dump());
    std::filesystem::remove(path);
}

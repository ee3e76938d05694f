#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nisqmap/agent.hpp"
#include "nisqmap/baselines.hpp"
#include "nisqmap/circuit.hpp"
#include "nisqmap/hardware.hpp"
#include "nisqmap/noise.hpp"

namespace nisqmap {

struct SuiteConfig {
    std::vector<int> scales = {20, 30, 40, 50, 60, 70, 80, 90, 100};
    int variants = 10;
    uint64_t seed = 1234;
    int vqe_layers = 2;
    std::vector<std::string> families = {"qft", "grover", "vqe"};
};

/// Full experiment description: topology, noise, benchmark suite, agent
/// hyperparameters, evaluation protocol.
struct ExperimentConfig {
    std::string out_dir = "runs/default";
    uint64_t master_seed = 1;
    int jobs = 1;
    bool dump_telemetry = false;

    TopologyKind topology_kind = TopologyKind::Ring4;
    int chips = 4;
    int qubits_per_chip = 12;
    CalibrationTable calib;
    double interchip_latency_us = 50.0;
    uint64_t topology_seed = 7;

    NoiseParams noise;
    SuiteConfig suite;
    AgentConfig agent;
    AnnealConfig anneal_cfg;

    std::vector<uint64_t> eval_seeds = {1, 2, 3, 4, 5};
    std::vector<std::string> eval_methods = {"agent", "qubo", "greedy", "trivial"};

    Hardware build_hardware() const {
        Hardware hw =
            build_topology(topology_kind, chips, qubits_per_chip, calib, topology_seed);
        hw.interchip_latency_us = interchip_latency_us;
        return hw;
    }

    void validate() const {
        if (eval_seeds.empty()) throw ConfigError("eval_seeds must be non-empty");
        if (suite.scales.empty()) throw ConfigError("suite.scales must be non-empty");
        if (agent.episodes < 1) throw ConfigError("agent.episodes must be >= 1");
        noise.validate();
        calib.validate();
        int max_scale = *std::max_element(suite.scales.begin(), suite.scales.end());
        if (agent.n_max < max_scale)
            throw ConfigError("agent.n_max smaller than the largest suite scale");
        if (agent.n_chips != chips || agent.qubits_per_chip != qubits_per_chip)
            throw ConfigError("agent network shape does not match the topology");
    }

    /// Paper-scale defaults: 4-chip ring of 12, full suite, 500 episodes.
    static ExperimentConfig defaults() {
        ExperimentConfig cfg;
        cfg.agent.n_max = 100;
        cfg.agent.n_chips = 4;
        cfg.agent.qubits_per_chip = 12;
        return cfg;
    }

    /// Scaled-down learning test: one 8-qubit QFT instance on 2 chips x 4
    /// qubits, 150 episodes, small networks, gentler decoherence budget so
    /// the linear error budget stays informative at this size.
    static ExperimentConfig smoke(uint64_t seed = 1) {
        ExperimentConfig cfg;
        cfg.out_dir = "runs/smoke";
        cfg.master_seed = seed;
        cfg.dump_telemetry = true;
        cfg.topology_kind = TopologyKind::Custom;
        cfg.chips = 2;
        cfg.qubits_per_chip = 4;
        cfg.topology_seed = 7;
        cfg.calib.f1q_std = cfg.calib.f2q_intra_std = cfg.calib.f2q_inter_std = 0.0;
        cfg.calib.t1_us = 2000.0;
        cfg.calib.t2_us = 1000.0;
        cfg.interchip_latency_us = 2.0;
        cfg.suite.scales = {8};
        cfg.suite.variants = 1;
        cfg.suite.families = {"qft"};
        cfg.suite.seed = 1234;
        cfg.agent.n_max = 8;
        cfg.agent.n_chips = 2;
        cfg.agent.qubits_per_chip = 4;
        cfg.agent.episodes = 150;
        cfg.agent.batch = 32;
        cfg.agent.dna_hidden = 24;
        cfg.agent.d_model = 64;
        cfg.agent.attn_heads = 8;
        cfg.agent.q_hidden = 64;
        cfg.agent.update_every = 2;
        cfg.agent.eps_floor_episode = 120;
        cfg.eval_seeds = {11, 12, 13};
        cfg.anneal_cfg.iterations = 4000;
        return cfg;
    }
};

namespace detail {

template <typename T>
void maybe(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace detail

inline nlohmann::ordered_json config_to_json(const ExperimentConfig& c) {
    nlohmann::ordered_json j;
    j["out_dir"] = c.out_dir;
    j["master_seed"] = c.master_seed;
    j["jobs"] = c.jobs;
    j["dump_telemetry"] = c.dump_telemetry;
    j["topology"] = {{"kind", topology_name(c.topology_kind)},
                     {"M", c.chips},
                     {"k", c.qubits_per_chip},
                     {"seed", c.topology_seed},
                     {"interchip_latency_us", c.interchip_latency_us},
                     {"calib",
                      {{"f1q", {c.calib.f1q_mean, c.calib.f1q_std}},
                       {"f2q_intra", {c.calib.f2q_intra_mean, c.calib.f2q_intra_std}},
                       {"f2q_inter", {c.calib.f2q_inter_mean, c.calib.f2q_inter_std}},
                       {"t1_us", c.calib.t1_us},
                       {"t2_us", c.calib.t2_us}}}};
    j["noise"] = {{"rho", c.noise.rho},           {"sigma_th", c.noise.sigma_th},
                  {"ou_rate", c.noise.ou_rate},   {"ou_sigma", c.noise.ou_sigma},
                  {"spike_mag", c.noise.spike_mag}, {"spike_len", c.noise.spike_len},
                  {"spike_prob", c.noise.spike_prob}, {"dt_us", c.noise.dt_us},
                  {"max_total", c.noise.max_total},   {"history_len", c.noise.history_len}};
    j["suite"] = {{"scales", c.suite.scales},
                  {"variants", c.suite.variants},
                  {"seed", c.suite.seed},
                  {"vqe_layers", c.suite.vqe_layers},
                  {"families", c.suite.families}};
    j["agent"] = {{"n_max", c.agent.n_max},
                  {"history_len", c.agent.history_len},
                  {"s_max", c.agent.s_max},
                  {"dna_hidden", c.agent.dna_hidden},
                  {"d_model", c.agent.d_model},
                  {"attn_heads", c.agent.attn_heads},
                  {"q_hidden", c.agent.q_hidden},
                  {"sigma0", c.agent.sigma0},
                  {"dropout", c.agent.dropout},
                  {"episodes", c.agent.episodes},
                  {"batch", c.agent.batch},
                  {"buffer_capacity", c.agent.buffer_capacity},
                  {"gamma", c.agent.gamma},
                  {"n_step", c.agent.n_step},
                  {"target_sync", c.agent.target_sync},
                  {"eps_start", c.agent.eps_start},
                  {"eps_floor", c.agent.eps_floor},
                  {"eps_floor_episode", c.agent.eps_floor_episode},
                  {"eps_paper_rate", c.agent.eps_paper_rate},
                  {"per_alpha", c.agent.per_alpha},
                  {"per_eps", c.agent.per_eps},
                  {"beta0", c.agent.beta0},
                  {"beta1", c.agent.beta1},
                  {"dna_weight", c.agent.dna_weight},
                  {"lr_max", c.agent.lr_max},
                  {"lr_min", c.agent.lr_min},
                  {"clip_norm", c.agent.clip_norm},
                  {"weight_decay", c.agent.weight_decay},
                  {"update_every", c.agent.update_every},
                  {"warmup", c.agent.warmup},
                  {"alpha2_base", c.agent.alpha2_base},
                  {"alpha2_ramp", c.agent.alpha2_ramp},
                  {"alpha3", c.agent.alpha3},
                  {"alpha4", c.agent.alpha4},
                  {"alpha5", c.agent.alpha5},
                  {"checkpoint_every", c.agent.checkpoint_every},
                  {"ablation", c.agent.ablation.name()}};
    j["anneal"] = {{"iterations", c.anneal_cfg.iterations},
                   {"t0", c.anneal_cfg.t0},
                   {"tau", c.anneal_cfg.tau},
                   {"weights",
                    {{"alpha", c.anneal_cfg.weights.alpha},
                     {"beta", c.anneal_cfg.weights.beta},
                     {"delta", c.anneal_cfg.weights.delta},
                     {"eta", c.anneal_cfg.weights.eta}}}};
    j["eval_seeds"] = c.eval_seeds;
    j["eval_methods"] = c.eval_methods;
    return j;
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    detail::maybe(j, "out_dir", c.out_dir);
    detail::maybe(j, "master_seed", c.master_seed);
    detail::maybe(j, "jobs", c.jobs);
    detail::maybe(j, "dump_telemetry", c.dump_telemetry);
    if (j.contains("topology")) {
        const auto& jt = j.at("topology");
        std::string kind = topology_name(c.topology_kind);
        detail::maybe(jt, "kind", kind);
        c.topology_kind = topology_from_name(kind);
        detail::maybe(jt, "M", c.chips);
        detail::maybe(jt, "k", c.qubits_per_chip);
        detail::maybe(jt, "seed", c.topology_seed);
        detail::maybe(jt, "interchip_latency_us", c.interchip_latency_us);
        if (jt.contains("calib")) {
            const auto& jc = jt.at("calib");
            if (jc.contains("f1q")) {
                c.calib.f1q_mean = jc.at("f1q")[0].get<double>();
                c.calib.f1q_std = jc.at("f1q")[1].get<double>();
            }
            if (jc.contains("f2q_intra")) {
                c.calib.f2q_intra_mean = jc.at("f2q_intra")[0].get<double>();
                c.calib.f2q_intra_std = jc.at("f2q_intra")[1].get<double>();
            }
            if (jc.contains("f2q_inter")) {
                c.calib.f2q_inter_mean = jc.at("f2q_inter")[0].get<double>();
                c.calib.f2q_inter_std = jc.at("f2q_inter")[1].get<double>();
            }
            detail::maybe(jc, "t1_us", c.calib.t1_us);
            detail::maybe(jc, "t2_us", c.calib.t2_us);
        }
    }
    if (j.contains("noise")) {
        const auto& jn = j.at("noise");
        detail::maybe(jn, "rho", c.noise.rho);
        detail::maybe(jn, "sigma_th", c.noise.sigma_th);
        detail::maybe(jn, "ou_rate", c.noise.ou_rate);
        detail::maybe(jn, "ou_sigma", c.noise.ou_sigma);
        detail::maybe(jn, "spike_mag", c.noise.spike_mag);
        detail::maybe(jn, "spike_len", c.noise.spike_len);
        detail::maybe(jn, "spike_prob", c.noise.spike_prob);
        detail::maybe(jn, "dt_us", c.noise.dt_us);
        detail::maybe(jn, "max_total", c.noise.max_total);
        detail::maybe(jn, "history_len", c.noise.history_len);
    }
    if (j.contains("suite")) {
        const auto& js = j.at("suite");
        detail::maybe(js, "scales", c.suite.scales);
        detail::maybe(js, "variants", c.suite.variants);
        detail::maybe(js, "seed", c.suite.seed);
        detail::maybe(js, "vqe_layers", c.suite.vqe_layers);
        detail::maybe(js, "families", c.suite.families);
    }
    if (j.contains("agent")) {
        const auto& ja = j.at("agent");
        detail::maybe(ja, "n_max", c.agent.n_max);
        detail::maybe(ja, "history_len", c.agent.history_len);
        detail::maybe(ja, "s_max", c.agent.s_max);
        detail::maybe(ja, "dna_hidden", c.agent.dna_hidden);
        detail::maybe(ja, "d_model", c.agent.d_model);
        detail::maybe(ja, "attn_heads", c.agent.attn_heads);
        detail::maybe(ja, "q_hidden", c.agent.q_hidden);
        detail::maybe(ja, "sigma0", c.agent.sigma0);
        detail::maybe(ja, "dropout", c.agent.dropout);
        detail::maybe(ja, "episodes", c.agent.episodes);
        detail::maybe(ja, "batch", c.agent.batch);
        detail::maybe(ja, "buffer_capacity", c.agent.buffer_capacity);
        detail::maybe(ja, "gamma", c.agent.gamma);
        detail::maybe(ja, "n_step", c.agent.n_step);
        detail::maybe(ja, "target_sync", c.agent.target_sync);
        detail::maybe(ja, "eps_start", c.agent.eps_start);
        detail::maybe(ja, "eps_floor", c.agent.eps_floor);
        detail::maybe(ja, "eps_floor_episode", c.agent.eps_floor_episode);
        detail::maybe(ja, "eps_paper_rate", c.agent.eps_paper_rate);
        detail::maybe(ja, "per_alpha", c.agent.per_alpha);
        detail::maybe(ja, "per_eps", c.agent.per_eps);
        detail::maybe(ja, "beta0", c.agent.beta0);
        detail::maybe(ja, "beta1", c.agent.beta1);
        detail::maybe(ja, "dna_weight", c.agent.dna_weight);
        detail::maybe(ja, "lr_max", c.agent.lr_max);
        detail::maybe(ja, "lr_min", c.agent.lr_min);
        detail::maybe(ja, "clip_norm", c.agent.clip_norm);
        detail::maybe(ja, "weight_decay", c.agent.weight_decay);
        detail::maybe(ja, "update_every", c.agent.update_every);
        detail::maybe(ja, "warmup", c.agent.warmup);
        detail::maybe(ja, "alpha2_base", c.agent.alpha2_base);
        detail::maybe(ja, "alpha2_ramp", c.agent.alpha2_ramp);
        detail::maybe(ja, "alpha3", c.agent.alpha3);
        detail::maybe(ja, "alpha4", c.agent.alpha4);
        detail::maybe(ja, "alpha5", c.agent.alpha5);
        detail::maybe(ja, "checkpoint_every", c.agent.checkpoint_every);
        if (ja.contains("ablation"))
            c.agent.ablation = AblationFlags::from_name(ja.at("ablation").get<std::string>());
    }
    if (j.contains("anneal")) {
        const auto& jn = j.at("anneal");
        detail::maybe(jn, "iterations", c.anneal_cfg.iterations);
        detail::maybe(jn, "t0", c.anneal_cfg.t0);
        detail::maybe(jn, "tau", c.anneal_cfg.tau);
        if (jn.contains("weights")) {
            const auto& jw = jn.at("weights");
            detail::maybe(jw, "alpha", c.anneal_cfg.weights.alpha);
            detail::maybe(jw, "beta", c.anneal_cfg.weights.beta);
            detail::maybe(jw, "delta", c.anneal_cfg.weights.delta);
            detail::maybe(jw, "eta", c.anneal_cfg.weights.eta);
        }
    }
    detail::maybe(j, "eval_seeds", c.eval_seeds);
    detail::maybe(j, "eval_methods", c.eval_methods);
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config: " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("malformed config json: " + std::string(e.what()));
    }
    return config_from_json(j);
}

/// Benchmark suite per the config, honoring the family subset.
inline std::vector<Circuit> build_suite(const SuiteConfig& sc, GateDurations dur = {}) {
    std::vector<Circuit> out;
    auto all = gen_benchmark_suite(sc.scales, sc.variants, sc.seed, dur, sc.vqe_layers);
    for (auto& c : all) {
        std::string fam = family_name(c.family);
        if (std::find(sc.families.begin(), sc.families.end(), fam) != sc.families.end())
            out.push_back(std::move(c));
    }
    return out;
}

}  // namespace nisqmap

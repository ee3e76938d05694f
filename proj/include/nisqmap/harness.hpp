#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "nisqmap/agent.hpp"
#include "nisqmap/baselines.hpp"
#include "nisqmap/circuit_io.hpp"
#include "nisqmap/config.hpp"
#include "nisqmap/stats.hpp"

namespace nisqmap {

namespace fs = std::filesystem;

inline std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string fmt_f(double v, int prec = 6) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*f", prec, v);
    return buf;
}

inline uint64_t fnv1a(const void* data, size_t len, uint64_t h = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

struct ManifestEntry {
    std::string file;
    std::string family;
    int n = 0;
    int variant = 0;
    uint64_t seed = 0;

    std::string circuit_id() const {
        return family + "_n" + std::to_string(n) + "_v" + std::to_string(variant);
    }
};

struct ResultRow {
    std::string method;
    std::string circuit_id;
    std::string family;
    int n = 0;
    uint64_t seed = 0;
    double fidelity = 0.0;
    int n_inter = 0;
    int depth = 0;
    double balance = 0.0;
    double reward = 0.0;
};

/// Experiment fingerprint: the config minus invocation-level knobs (output
/// location, worker count) that cannot change any artifact byte.
inline std::string experiment_fingerprint(const ExperimentConfig& cfg) {
    auto j = config_to_json(cfg);
    j.erase("out_dir");
    j.erase("jobs");
    return j.dump(1);
}

inline fs::path manifest_path(const ExperimentConfig& cfg) {
    return fs::path(cfg.out_dir) / "manifest.csv";
}
inline fs::path checkpoint_path(const ExperimentConfig& cfg) {
    return fs::path(cfg.out_dir) / "train" / "checkpoint_latest.bin";
}
inline fs::path metrics_path(const ExperimentConfig& cfg) {
    return fs::path(cfg.out_dir) / "train" / "metrics.csv";
}
inline fs::path results_path(const ExperimentConfig& cfg) {
    return fs::path(cfg.out_dir) / "eval" / "results.csv";
}

/// Generate the benchmark suite: one circuit file per instance plus a
/// manifest, the topology descriptor, and a config echo.
inline std::vector<ManifestEntry> cmd_gen(const ExperimentConfig& cfg,
                                          std::ostream* log = nullptr) {
    cfg.validate();
    fs::path out(cfg.out_dir);
    std::error_code ec;
    fs::create_directories(out / "circuits", ec);
    if (ec) throw IoError("cannot create output directory: " + out.string());

    {
        std::ofstream f(out / "config.json");
        if (!f) throw IoError("cannot write config echo");
        f << experiment_fingerprint(cfg) << "\n";
    }
    write_topology(cfg.build_hardware(), (out / "topology.json").string());

    auto suite = build_suite(cfg.suite);
    std::vector<ManifestEntry> manifest;
    std::map<std::string, int> next_variant;
    for (const auto& c : suite) {
        ManifestEntry e;
        e.family = family_name(c.family);
        e.n = c.n_qubits;
        e.variant = next_variant[e.family + std::to_string(c.n_qubits)]++;
        e.seed = c.seed;
        e.file = "circuits/" + e.circuit_id() + ".json";
        write_circuit(c, (out / e.file).string());
        manifest.push_back(std::move(e));
    }
    std::ofstream mf(manifest_path(cfg));
    if (!mf) throw IoError("cannot write manifest");
    mf << "file,family,n,variant,seed\n";
    for (const auto& e : manifest)
        mf << e.file << ',' << e.family << ',' << e.n << ',' << e.variant << ',' << e.seed
           << "\n";
    if (log) *log << "gen: wrote " << manifest.size() << " circuits to " << out.string() << "\n";
    return manifest;
}

inline std::vector<ManifestEntry> read_manifest(const ExperimentConfig& cfg) {
    std::ifstream f(manifest_path(cfg));
    if (!f)
        throw ConfigError("missing suite manifest at " + manifest_path(cfg).string() +
                          " (run `gen` first)");
    std::vector<ManifestEntry> out;
    std::string line;
    std::getline(f, line);  // header
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        ManifestEntry e;
        std::istringstream is(line);
        std::string n_s, v_s, seed_s;
        if (!std::getline(is, e.file, ',') || !std::getline(is, e.family, ',') ||
            !std::getline(is, n_s, ',') || !std::getline(is, v_s, ',') ||
            !std::getline(is, seed_s))
            throw IoError("malformed manifest line: " + line);
        e.n = std::stoi(n_s);
        e.variant = std::stoi(v_s);
        e.seed = std::stoull(seed_s);
        out.push_back(std::move(e));
    }
    return out;
}

inline std::vector<Circuit> load_suite(const ExperimentConfig& cfg,
                                       const std::vector<ManifestEntry>& manifest) {
    std::vector<Circuit> suite;
    suite.reserve(manifest.size());
    for (const auto& e : manifest)
        suite.push_back(read_circuit((fs::path(cfg.out_dir) / e.file).string()));
    return suite;
}

inline void write_metrics_header(std::ofstream& f, const ExperimentConfig& cfg) {
    f << "# nisqmap training metrics\n";
    f << "# ablation: " << cfg.agent.ablation.name() << "\n";
    f << "# master_seed: " << cfg.master_seed << "\n";
    f << "# episodes: " << cfg.agent.episodes << "\n";
    const std::string fp = experiment_fingerprint(cfg);
    f << "# config_hash: " << fnv1a(fp.data(), fp.size()) << "\n";
    f << "episode,fidelity,n_inter,depth,balance,reward,epsilon,dna_r2,loss,steps,lr\n";
}

inline void append_metrics_row(std::ofstream& f, const EpisodeMetrics& m) {
    f << m.episode << ',' << fmt_g(m.fidelity) << ',' << m.n_inter << ',' << m.depth << ','
      << fmt_g(m.balance) << ',' << fmt_g(m.reward_sum) << ',' << fmt_g(m.epsilon) << ','
      << fmt_g(m.dna_r2) << ',' << fmt_g(m.loss) << ',' << m.steps << ',' << fmt_g(m.lr)
      << "\n";
}

/// Train the mapper over the generated suite. Emits per-episode metrics,
/// periodic checkpoints, and the final checkpoint. With `resume`, continues
/// from the latest checkpoint in the output directory.
inline std::vector<EpisodeMetrics> cmd_train(const ExperimentConfig& cfg, bool resume = false,
                                             std::ostream* log = nullptr) {
    cfg.validate();
    auto manifest = read_manifest(cfg);
    auto suite = load_suite(cfg, manifest);
    if (suite.empty()) throw ConfigError("suite is empty");
    Hardware hw = cfg.build_hardware();
    fs::create_directories(fs::path(cfg.out_dir) / "train");

    Agent agent(cfg.agent, cfg.master_seed);
    int start_episode = 0;
    std::vector<std::string> kept_rows;
    if (resume && fs::exists(checkpoint_path(cfg))) {
        start_episode = agent.load(checkpoint_path(cfg).string());
        std::ifstream old(metrics_path(cfg));
        std::string line;
        while (std::getline(old, line)) {
            if (line.empty() || line[0] == '#' || line.rfind("episode,", 0) == 0) continue;
            int ep = std::stoi(line.substr(0, line.find(',')));
            if (ep < start_episode) kept_rows.push_back(line);
        }
        if (log) *log << "train: resuming at episode " << start_episode << "\n";
    }

    std::ofstream mf(metrics_path(cfg));
    if (!mf) throw IoError("cannot write metrics file");
    write_metrics_header(mf, cfg);
    for (const auto& row : kept_rows) mf << row << "\n";

    std::vector<EpisodeMetrics> all;
    for (int e = start_episode; e < cfg.agent.episodes; ++e) {
        size_t pick = agent.pick_circuit(suite.size());
        uint64_t noise_seed = seed_stream(cfg.master_seed, "episode-noise", e);
        EpisodeMetrics m = agent.run_episode(e, suite[pick], hw, cfg.noise, noise_seed);
        append_metrics_row(mf, m);
        mf.flush();
        all.push_back(m);
        if (log && (e % 10 == 0 || e + 1 == cfg.agent.episodes))
            *log << "train: episode " << e << " fidelity " << fmt_f(m.fidelity, 4) << " n_inter "
                 << m.n_inter << " eps " << fmt_f(m.epsilon, 3) << "\n";
        if (cfg.agent.checkpoint_every > 0 && (e + 1) % cfg.agent.checkpoint_every == 0) {
            agent.save((fs::path(cfg.out_dir) / "train" /
                        ("checkpoint_ep" + std::to_string(e + 1) + ".bin"))
                           .string(),
                       e + 1);
            agent.save(checkpoint_path(cfg).string(), e + 1);
        }
    }
    agent.save(checkpoint_path(cfg).string(), cfg.agent.episodes);
    return all;
}

/// Fixed-horizon noise trajectory for one (circuit, seed) cell; identical
/// for every method by construction.
inline std::vector<TelemetryRow> eval_noise_trajectory(const ExperimentConfig& cfg,
                                                       const Circuit& c, uint64_t noise_seed) {
    Rng rng(seed_stream(noise_seed, "env-noise"));
    NoiseState ns(cfg.chips);
    std::vector<TelemetryRow> rows;
    const int horizon =
        cfg.noise.history_len + c.n_qubits + 5 * static_cast<int>(c.gates.size()) + 32;
    for (int i = 0; i < horizon; ++i) {
        ns.step(cfg.noise, rng);
        ns.append_telemetry(rows, cfg.noise);
    }
    return rows;
}

inline uint64_t telemetry_hash(const std::vector<TelemetryRow>& rows) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& r : rows) {
        h = fnv1a(&r.step, sizeof r.step, h);
        h = fnv1a(&r.chip, sizeof r.chip, h);
        h = fnv1a(&r.eta, sizeof r.eta, h);
        h = fnv1a(&r.drift, sizeof r.drift, h);
        h = fnv1a(&r.spike, sizeof r.spike, h);
        h = fnv1a(&r.total, sizeof r.total, h);
    }
    return h;
}

/// Evaluate the requested methods over (circuit, seed) cells. Every method
/// sees the same per-cell noise stream; rows land in deterministic sorted
/// order regardless of the worker pool schedule. Wall-clock timings go to
/// the timestamp sidecar only.
inline std::vector<ResultRow> cmd_eval(const ExperimentConfig& cfg,
                                       std::vector<std::string> methods = {},
                                       std::ostream* log = nullptr) {
    cfg.validate();
    if (methods.empty()) methods = cfg.eval_methods;
    for (const auto& m : methods)
        if (m != "agent" && m != "qubo" && m != "greedy" && m != "trivial")
            throw ConfigError("unknown eval method '" + m + "'");
    auto manifest = read_manifest(cfg);
    auto suite = load_suite(cfg, manifest);
    Hardware hw = cfg.build_hardware();
    fs::create_directories(fs::path(cfg.out_dir) / "eval");
    fs::create_directories(fs::path(cfg.out_dir) / "logs");
    if (cfg.dump_telemetry)
        fs::create_directories(fs::path(cfg.out_dir) / "eval" / "telemetry");

    const bool want_agent =
        std::find(methods.begin(), methods.end(), "agent") != methods.end();
    std::unique_ptr<Agent> agent;
    if (want_agent) {
        if (!fs::exists(checkpoint_path(cfg)))
            throw ConfigError("agent method requested but no checkpoint at " +
                              checkpoint_path(cfg).string() + " (run `train` first)");
        agent = std::make_unique<Agent>(cfg.agent, cfg.master_seed);
        agent->load(checkpoint_path(cfg).string());
    }

    struct Cell {
        size_t circuit_idx;
        size_t seed_idx;
        size_t method_idx;
    };
    std::vector<Cell> cells;
    for (size_t ci = 0; ci < suite.size(); ++ci)
        for (size_t si = 0; si < cfg.eval_seeds.size(); ++si)
            for (size_t mi = 0; mi < methods.size(); ++mi) cells.push_back({ci, si, mi});

    std::vector<ResultRow> rows(cells.size());
    std::vector<long> wall_ms(cells.size(), 0);
    const RewardWeights w = cfg.agent.weights(cfg.agent.episodes);

    // per-(circuit, seed) noise stream key, shared across methods
    auto cell_noise_seed = [&](size_t ci, size_t si) {
        return seed_stream(cfg.master_seed, "eval-noise", ci * 1000003ull + cfg.eval_seeds[si]);
    };

    auto run_cell = [&](size_t idx) {
        const Cell& cell = cells[idx];
        const Circuit& c = suite[cell.circuit_idx];
        const ManifestEntry& me = manifest[cell.circuit_idx];
        const std::string& method = methods[cell.method_idx];
        uint64_t noise_seed = cell_noise_seed(cell.circuit_idx, cell.seed_idx);
        auto t0 = std::chrono::steady_clock::now();
        ResultRow r;
        r.method = method;
        r.circuit_id = me.circuit_id();
        r.family = me.family;
        r.n = me.n;
        r.seed = cfg.eval_seeds[cell.seed_idx];
        if (method == "agent") {
            auto m = agent->evaluate_episode(c, hw, cfg.noise, noise_seed, w);
            r.fidelity = m.fidelity;
            r.n_inter = m.n_inter;
            r.depth = m.depth;
            r.balance = m.balance;
            r.reward = m.reward_sum;
        } else {
            Assignment a;
            if (method == "trivial") {
                a = trivial_map(c, hw);
            } else if (method == "greedy") {
                a = greedy_map(c, hw);
            } else {
                QuboModel model(c, hw, cfg.anneal_cfg.weights);
                AnnealConfig acfg = cfg.anneal_cfg;
                acfg.seed = seed_stream(cfg.master_seed, "anneal",
                                        cell.circuit_idx * 1000003ull +
                                            cfg.eval_seeds[cell.seed_idx]);
                a = anneal(model, acfg).best;
            }
            auto s = replay_assignment(c, hw, cfg.noise, noise_seed, a, w);
            r.fidelity = s.fidelity;
            r.n_inter = s.n_inter;
            r.depth = s.depth;
            r.balance = s.balance;
            r.reward = s.reward_sum;
        }
        rows[idx] = std::move(r);
        wall_ms[idx] = std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::steady_clock::now() - t0)
                           .count();
    };

    const int jobs = std::max(1, cfg.jobs);
    if (jobs == 1) {
        for (size_t i = 0; i < cells.size(); ++i) run_cell(i);
    } else {
        std::atomic<size_t> next{0};
        std::vector<std::thread> pool;
        for (int t = 0; t < jobs; ++t)
            pool.emplace_back([&] {
                for (size_t i = next.fetch_add(1); i < cells.size(); i = next.fetch_add(1))
                    run_cell(i);
            });
        for (auto& th : pool) th.join();
    }

    // results in deterministic (method, circuit, seed) sorted order
    std::vector<size_t> order(cells.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        const ResultRow&ra = rows[a], &rb = rows[b];
        if (ra.method != rb.method) return ra.method < rb.method;
        if (ra.circuit_id != rb.circuit_id) return ra.circuit_id < rb.circuit_id;
        return ra.seed < rb.seed;
    });
    std::ofstream rf(results_path(cfg));
    if (!rf) throw IoError("cannot write results file");
    rf << "# nisqmap evaluation results\n";
    rf << "# master_seed: " << cfg.master_seed << "\n";
    rf << "method,circuit_id,family,n,seed,fidelity,n_inter,depth,balance,reward\n";
    std::vector<ResultRow> sorted;
    sorted.reserve(order.size());
    for (size_t i : order) {
        const ResultRow& r = rows[i];
        rf << r.method << ',' << r.circuit_id << ',' << r.family << ',' << r.n << ',' << r.seed
           << ',' << fmt_g(r.fidelity) << ',' << r.n_inter << ',' << r.depth << ','
           << fmt_g(r.balance) << ',' << fmt_g(r.reward) << "\n";
        sorted.push_back(r);
    }

    // method-independent telemetry hashes per (circuit, seed)
    std::ofstream hf(fs::path(cfg.out_dir) / "eval" / "telemetry_hashes.csv");
    hf << "circuit_id,seed,hash\n";
    for (size_t ci = 0; ci < suite.size(); ++ci)
        for (size_t si = 0; si < cfg.eval_seeds.size(); ++si) {
            auto rows_t = eval_noise_trajectory(cfg, suite[ci], cell_noise_seed(ci, si));
            hf << manifest[ci].circuit_id() << ',' << cfg.eval_seeds[si] << ','
               << telemetry_hash(rows_t) << "\n";
            if (cfg.dump_telemetry) {
                std::ofstream tf(fs::path(cfg.out_dir) / "eval" / "telemetry" /
                                 (manifest[ci].circuit_id() + "_s" +
                                  std::to_string(cfg.eval_seeds[si]) + ".csv"));
                write_telemetry(tf, rows_t);
            }
        }

    // wall-clock timings live only in the sidecar log
    std::ofstream tl(fs::path(cfg.out_dir) / "logs" / "timings.log", std::ios::app);
    auto stamp = std::chrono::system_clock::now().time_since_epoch().count();
    for (size_t i : order)
        tl << stamp << " method=" << rows[i].method << " circuit=" << rows[i].circuit_id
           << " seed=" << rows[i].seed << " wall_ms=" << wall_ms[i] << "\n";

    if (log) *log << "eval: " << sorted.size() << " rows -> " << results_path(cfg) << "\n";
    return sorted;
}

inline std::vector<ResultRow> read_results(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open results file: " + path);
    std::vector<ResultRow> rows;
    std::string line;
    int line_no = 0;
    bool header_seen = false;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true;  // column header
            continue;
        }
        std::istringstream is(line);
        ResultRow r;
        std::string n_s, seed_s, fid_s, ni_s, d_s, b_s, rw_s;
        if (!std::getline(is, r.method, ',') || !std::getline(is, r.circuit_id, ',') ||
            !std::getline(is, r.family, ',') || !std::getline(is, n_s, ',') ||
            !std::getline(is, seed_s, ',') || !std::getline(is, fid_s, ',') ||
            !std::getline(is, ni_s, ',') || !std::getline(is, d_s, ',') ||
            !std::getline(is, b_s, ',') || !std::getline(is, rw_s))
            throw IoError("malformed results row at line " + std::to_string(line_no));
        try {
            r.n = std::stoi(n_s);
            r.seed = std::stoull(seed_s);
            r.fidelity = std::stod(fid_s);
            r.n_inter = std::stoi(ni_s);
            r.depth = std::stoi(d_s);
            r.balance = std::stod(b_s);
            r.reward = std::stod(rw_s);
        } catch (const std::exception&) {
            throw IoError("malformed results row at line " + std::to_string(line_no));
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

struct MethodSummary {
    std::string method;
    size_t runs = 0;
    double fidelity_mean = 0, fidelity_std = 0;
    double ops_mean = 0, ops_std = 0;
    double error_mean = 0;
    double depth_mean = 0;
};

struct PairwiseRow {
    std::string method_a, method_b, metric;
    double t = 0, df = 0, p = 1, d = 0;
    bool significant = false;
};

struct Report {
    std::vector<MethodSummary> summaries;
    std::vector<PairwiseRow> pairwise;
    bool has_anova = false;
    stats::AnovaResult anova;
};

/// Per-method summary (layout mirrors the common four-column comparison:
/// fidelity, ops, error, depth), pairwise t/d tests, and a one-way ANOVA
/// across methods on fidelity. Decision threshold alpha = 0.01.
inline Report build_report(const std::vector<ResultRow>& rows) {
    Report rep;
    std::map<std::string, std::vector<const ResultRow*>> by_method;
    for (const auto& r : rows) by_method[r.method].push_back(&r);
    for (const auto& [method, rs] : by_method) {
        MethodSummary s;
        s.method = method;
        s.runs = rs.size();
        stats::SampleSet fid{method, {}}, ops{method, {}};
        for (const auto* r : rs) {
            fid.values.push_back(r->fidelity);
            ops.values.push_back(static_cast<double>(r->n_inter));
            s.error_mean += 1.0 - r->fidelity;
            s.depth_mean += r->depth;
        }
        s.fidelity_mean = fid.mean();
        s.ops_mean = ops.mean();
        s.fidelity_std = rs.size() >= 2 ? fid.stddev() : 0.0;
        s.ops_std = rs.size() >= 2 ? ops.stddev() : 0.0;
        s.error_mean /= rs.size();
        s.depth_mean /= rs.size();
        rep.summaries.push_back(std::move(s));
    }
    // pairwise tests on fidelity and inter-chip ops
    std::vector<std::string> methods;
    for (const auto& [m, _] : by_method) methods.push_back(m);
    for (size_t i = 0; i < methods.size(); ++i) {
        for (size_t j = i + 1; j < methods.size(); ++j) {
            for (const char* metric : {"fidelity", "n_inter"}) {
                stats::SampleSet a{methods[i], {}}, b{methods[j], {}};
                for (const auto* r : by_method[methods[i]])
                    a.values.push_back(std::string(metric) == "fidelity"
                                           ? r->fidelity
                                           : static_cast<double>(r->n_inter));
                for (const auto* r : by_method[methods[j]])
                    b.values.push_back(std::string(metric) == "fidelity"
                                           ? r->fidelity
                                           : static_cast<double>(r->n_inter));
                if (a.values.size() < 2 || b.values.size() < 2) continue;
                PairwiseRow pr;
                pr.method_a = methods[i];
                pr.method_b = methods[j];
                pr.metric = metric;
                try {
                    auto t = stats::t_test(a, b);
                    pr.t = t.t;
                    pr.df = t.df;
                    pr.p = t.p;
                    pr.d = stats::cohens_d(a, b);
                    pr.significant = pr.p < 0.01;
                } catch (const DegenerateSampleError&) {
                    continue;  // identical columns carry no test
                }
                rep.pairwise.push_back(std::move(pr));
            }
        }
    }
    if (methods.size() >= 2) {
        std::vector<stats::SampleSet> groups;
        for (const auto& m : methods) {
            stats::SampleSet g{m, {}};
            for (const auto* r : by_method[m]) g.values.push_back(r->fidelity);
            if (g.values.size() >= 2) groups.push_back(std::move(g));
        }
        if (groups.size() >= 2) {
            try {
                rep.anova = stats::anova(groups);
                rep.has_anova = true;
            } catch (const DegenerateSampleError&) {
            }
        }
    }
    return rep;
}

inline void write_report(const Report& rep, const fs::path& dir) {
    fs::create_directories(dir);
    std::ofstream txt(dir / "report.txt");
    if (!txt) throw IoError("cannot write report");
    txt << "Method        | Fidelity            | Ops             | Error    | Depth\n";
    txt << "--------------+---------------------+-----------------+----------+--------\n";
    for (const auto& s : rep.summaries) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%-13s | %8.4f +/- %6.4f | %7.3f +/- %5.3f | %8.4f | %7.2f\n",
                      s.method.c_str(), s.fidelity_mean, s.fidelity_std, s.ops_mean, s.ops_std,
                      s.error_mean, s.depth_mean);
        txt << buf;
    }
    if (!rep.pairwise.empty()) {
        txt << "\nPairwise tests (pooled t, alpha = 0.01):\n";
        txt << "pair                     | metric   | t        | df   | p          | d        | decision\n";
        for (const auto& p : rep.pairwise) {
            char buf[200];
            std::snprintf(buf, sizeof buf,
                          "%-11s vs %-10s | %-8s | %8.4f | %4.0f | %.4e | %8.4f | %s\n",
                          p.method_a.c_str(), p.method_b.c_str(), p.metric.c_str(), p.t, p.df,
                          p.p, p.d, p.significant ? "significant" : "n.s.");
            txt << buf;
        }
    }
    if (rep.has_anova) {
        char buf[200];
        std::snprintf(buf, sizeof buf,
                      "\nANOVA (fidelity): F(%.0f, %.0f) = %.4f, p = %.4e, eta^2 = %.4f\n",
                      rep.anova.df_between, rep.anova.df_within, rep.anova.f, rep.anova.p,
                      rep.anova.eta_squared);
        txt << buf;
    }

    std::ofstream sf(dir / "summary.csv");
    sf << "method,runs,fidelity_mean,fidelity_std,ops_mean,ops_std,error_mean,depth_mean\n";
    for (const auto& s : rep.summaries)
        sf << s.method << ',' << s.runs << ',' << fmt_g(s.fidelity_mean) << ','
           << fmt_g(s.fidelity_std) << ',' << fmt_g(s.ops_mean) << ',' << fmt_g(s.ops_std) << ','
           << fmt_g(s.error_mean) << ',' << fmt_g(s.depth_mean) << "\n";

    std::ofstream pf(dir / "pairwise.csv");
    pf << "method_a,method_b,metric,t,df,p,d,significant\n";
    for (const auto& p : rep.pairwise)
        pf << p.method_a << ',' << p.method_b << ',' << p.metric << ',' << fmt_g(p.t) << ','
           << fmt_g(p.df) << ',' << fmt_g(p.p) << ',' << fmt_g(p.d) << ','
           << (p.significant ? 1 : 0) << "\n";
}

inline Report cmd_report(const ExperimentConfig& cfg, std::ostream* log = nullptr) {
    auto rows = read_results(results_path(cfg).string());
    if (rows.empty()) throw ConfigError("results file has no rows");
    Report rep = build_report(rows);
    write_report(rep, fs::path(cfg.out_dir) / "report");
    if (log) *log << "report: " << rep.summaries.size() << " methods -> "
                  << (fs::path(cfg.out_dir) / "report" / "report.txt").string() << "\n";
    return rep;
}

/// Train every ablation row on the configured suite, one output directory
/// per row, plus a final-window summary table.
inline void cmd_ablate(const ExperimentConfig& base, const std::vector<std::string>& rows,
                       std::ostream* log = nullptr) {
    fs::create_directories(fs::path(base.out_dir) / "ablate");
    std::ofstream sf(fs::path(base.out_dir) / "ablate" / "summary.csv");
    sf << "ablation,final20_fidelity_mean,final20_n_inter_mean,episodes\n";
    for (const auto& row : rows) {
        ExperimentConfig cfg = base;
        cfg.agent.ablation = AblationFlags::from_name(row);
        cfg.out_dir = (fs::path(base.out_dir) / "ablate" / row).string();
        cmd_gen(cfg, log);
        auto metrics = cmd_train(cfg, false, log);
        const size_t win = std::min<size_t>(20, metrics.size());
        double fid = 0, ops = 0;
        for (size_t i = metrics.size() - win; i < metrics.size(); ++i) {
            fid += metrics[i].fidelity;
            ops += metrics[i].n_inter;
        }
        sf << row << ',' << fmt_g(fid / win) << ',' << fmt_g(ops / win) << ','
           << metrics.size() << "\n";
        if (log) *log << "ablate: " << row << " final-20 fidelity " << fmt_f(fid / win, 4)
                      << "\n";
    }
}

}  // namespace nisqmap

// Command-line front end: suite generation, training, evaluation, baseline
// runs, statistical reports, and ablation sweeps.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nisqmap/harness.hpp"

namespace {

// exit codes: 0 ok, 2 config, 3 numeric diagnostic, 4 io
constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kNumericError = 3;
constexpr int kIoError = 4;

struct CommonOpts {
    std::string config_path;
    std::string out_dir;
    uint64_t seed = 0;
    bool seed_set = false;
    bool smoke = false;
    int jobs = 0;
    std::string ablate;
};

nisqmap::ExperimentConfig resolve_config(const CommonOpts& o) {
    nisqmap::ExperimentConfig cfg =
        o.smoke ? nisqmap::ExperimentConfig::smoke() : nisqmap::ExperimentConfig::defaults();
    if (!o.config_path.empty()) cfg = nisqmap::load_config(o.config_path);
    if (o.smoke && !o.config_path.empty())
        throw nisqmap::ConfigError("--smoke and --config are mutually exclusive");
    if (o.seed_set) cfg.master_seed = o.seed;
    if (!o.out_dir.empty()) cfg.out_dir = o.out_dir;
    if (o.jobs > 0) cfg.jobs = o.jobs;
    if (!o.ablate.empty()) cfg.agent.ablation = nisqmap::AblationFlags::from_name(o.ablate);
    return cfg;
}

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_path, "experiment config JSON");
    cmd->add_option("--out", o.out_dir, "output directory override");
    cmd->add_option("--seed", o.seed, "master seed override")->each([&](const std::string&) {
        o.seed_set = true;
    });
    cmd->add_flag("--smoke", o.smoke, "use the scaled-down smoke configuration");
    cmd->add_option("--jobs", o.jobs, "evaluation worker threads");
    cmd->add_option("--ablate", o.ablate, "ablation row (full, no-dna, ..., basic-dqn)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"nisqmap: noise-adaptive multi-chip qubit mapping toolkit"};
    app.require_subcommand(1);

    CommonOpts gen_o, train_o, eval_o, report_o, ablate_o;
    bool train_resume = false;
    std::vector<std::string> methods;
    std::string results_override;
    std::vector<std::string> ablate_rows;

    auto* gen = app.add_subcommand("gen", "generate the benchmark suite");
    add_common(gen, gen_o);
    auto* train = app.add_subcommand("train", "train the mapping agent");
    add_common(train, train_o);
    train->add_flag("--resume", train_resume, "continue from the latest checkpoint");
    auto* eval = app.add_subcommand("eval", "evaluate methods on the suite");
    add_common(eval, eval_o);
    eval->add_option("--methods", methods, "subset of agent,qubo,greedy,trivial")
        ->delimiter(',');
    auto* report = app.add_subcommand("report", "statistics report from results");
    add_common(report, report_o);
    report->add_option("--results", results_override, "explicit results file path");
    auto* ablate = app.add_subcommand("ablate", "train each ablation row");
    add_common(ablate, ablate_o);
    ablate->add_option("--rows", ablate_rows, "ablation rows to run")->delimiter(',');

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            nisqmap::cmd_gen(resolve_config(gen_o), &std::cout);
        } else if (train->parsed()) {
            nisqmap::cmd_train(resolve_config(train_o), train_resume, &std::cout);
        } else if (eval->parsed()) {
            nisqmap::cmd_eval(resolve_config(eval_o), methods, &std::cout);
        } else if (report->parsed()) {
            auto cfg = resolve_config(report_o);
            if (!results_override.empty()) {
                auto rows = nisqmap::read_results(results_override);
                auto rep = nisqmap::build_report(rows);
                nisqmap::write_report(rep, std::filesystem::path(cfg.out_dir) / "report");
                std::cout << "report: " << rep.summaries.size() << " methods\n";
            } else {
                nisqmap::cmd_report(cfg, &std::cout);
            }
        } else if (ablate->parsed()) {
            if (ablate_rows.empty())
                ablate_rows = {"full",        "no-dna",      "no-attention", "no-prioritized",
                               "no-double",   "no-dueling",  "no-multistep", "no-noisy",
                               "basic-dqn"};
            nisqmap::cmd_ablate(resolve_config(ablate_o), ablate_rows, &std::cout);
        }
    } catch (const nisqmap::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return kConfigError;
    } catch (const nisqmap::NumericError& e) {
        std::cerr << e.what() << "\n";
        return kNumericError;
    } catch (const nisqmap::IoError& e) {
        std::cerr << e.what() << "\n";
        return kIoError;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return kConfigError;
    }
    return kOk;
}

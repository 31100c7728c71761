// stoctot: stochastic tree-of-thought reasoning over multi-hop QA benchmarks,
// with vanilla/CoT/ToT baselines and an EM/F1 evaluation harness.
//
// Verbs:
//   run        execute a strategy over a sampled corpus and persist artifacts
//   resume     finish an interrupted run directory
//   compare    side-by-side report for >= 2 completed runs
//   eval       score an external predictions file against a dataset
//   dump-tree  print the reasoning tree persisted for one example
//
// Exit codes: 0 success, 1 partial failures, 2 config error.

#include <CLI11.hpp>

#include "stoctot/errors.hpp"
#include "stoctot/runner.hpp"
#include "stoctot/text.hpp"
#include "stoctot/version.hpp"

#include <fstream>
#include <iostream>
#include <map>

namespace {

using namespace stoctot;

void add_config_flags(CLI::App& cmd, RunConfig& config, std::string& config_path,
                      std::string& dataset_kind, std::string& strategy, std::string& backend,
                      std::string& constraint, std::string& demo_flavor) {
    cmd.add_option("--config", config_path, "flat key=value config file; flags override it");
    cmd.add_option("--dataset", config.dataset_path, "dataset file path");
    cmd.add_option("--dataset-kind", dataset_kind, "hotpotqa or musique")
        ->check(CLI::IsMember({"hotpotqa", "musique"}));
    cmd.add_option("--sample-n", config.sample_n, "evaluation subset size");
    cmd.add_option("--seed", config.seed, "sampling / decoding seed");
    cmd.add_option("--strategy", strategy, "vanilla, cot, tot, or stoctot")
        ->check(CLI::IsMember({"vanilla", "cot", "tot", "stoctot"}));
    cmd.add_option("--backend", backend, "http, scripted, or local")
        ->check(CLI::IsMember({"http", "scripted", "local"}));
    cmd.add_option("--endpoint", config.endpoint, "chat-completions base URL");
    cmd.add_option("--model", config.model, "model name sent on the wire");
    cmd.add_option("--api-key-env", config.api_key_env,
                   "environment variable holding the API key");
    cmd.add_option("--fixtures", config.fixtures_path, "fixture file for the scripted backend");
    cmd.add_flag("--record-fixtures", config.record_fixtures,
                 "persist digest-keyed replies for later replay");
    cmd.add_option("--constraint", constraint, "hard, soft, or off")
        ->check(CLI::IsMember({"hard", "soft", "off"}));
    cmd.add_option("--temperature", config.temperature, "sampling temperature");
    cmd.add_option("--top", config.top, "top-p nucleus mass");
    cmd.add_option("--max-new-tokens", config.max_new_tokens, "generation length cap");
    cmd.add_option("--branching-limit", config.branching_limit, "children kept per expansion");
    cmd.add_option("--max-depth", config.max_depth, "maximum reasoning iterations");
    cmd.add_option("--concurrency", config.concurrency, "in-flight request cap");
    cmd.add_option("--demo-flavor", demo_flavor, "comparison, bridge, or both")
        ->check(CLI::IsMember({"comparison", "bridge", "both"}));
    cmd.add_option("--tot-paths", config.tot_paths, "sampled reasoning lines for tot");
    cmd.add_option("--labels", config.labels_path, "reasoning-type sidecar JSON");
    cmd.add_option("--templates-dir", config.templates_dir, "prompt template overrides");
    cmd.add_option("--stoplist", config.stoplist_path, "stop-word list override");
    cmd.add_option("--output-dir", config.output_dir, "where run directories are created");
    cmd.add_option("--time-budget", config.time_budget_seconds,
                   "per-example wall-clock budget in seconds (live backends)");
    cmd.add_option("--max-attempts", config.max_attempts, "HTTP retry cap");
    cmd.add_option("--timeout", config.timeout_seconds, "HTTP timeout in seconds");
}

// Flat key=value config file: keys are the CLI flag names without dashes;
// any flag passed on the command line wins over the file.
void apply_config_file(const CLI::App& cmd, const std::string& path, RunConfig& config,
                       std::string& dataset_kind, std::string& strategy, std::string& backend,
                       std::string& constraint, std::string& demo_flavor) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file: " + path, "config");
    }
    std::map<std::string, std::string> kv;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        line_no++;
        if (std::size_t hash = line.find('#'); hash != std::string::npos) {
            line.resize(hash);
        }
        std::string_view trimmed = text::trim(line);
        if (trimmed.empty()) {
            continue;
        }
        std::size_t eq = trimmed.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("config line " + std::to_string(line_no) + " has no '='",
                              "config");
        }
        kv[std::string(text::trim(trimmed.substr(0, eq)))] =
            std::string(text::trim(trimmed.substr(eq + 1)));
    }

    auto take_str = [&](const char* key, std::string& target) {
        auto it = kv.find(key);
        if (it != kv.end()) {
            if (cmd.count(std::string("--") + key) == 0) {
                target = it->second;
            }
            kv.erase(it);
        }
    };
    auto parse_with = [&](const char* key, auto setter) {
        auto it = kv.find(key);
        if (it != kv.end()) {
            if (cmd.count(std::string("--") + key) == 0) {
                try {
                    setter(it->second);
                } catch (const std::exception&) {
                    throw ConfigError("config key `" + std::string(key) +
                                          "`: cannot parse value `" + it->second + "`",
                                      key);
                }
            }
            kv.erase(it);
        }
    };

    take_str("dataset", config.dataset_path);
    take_str("dataset-kind", dataset_kind);
    parse_with("sample-n", [&](const std::string& v) { config.sample_n = std::stoi(v); });
    parse_with("seed", [&](const std::string& v) { config.seed = std::stoull(v); });
    take_str("strategy", strategy);
    take_str("backend", backend);
    take_str("endpoint", config.endpoint);
    take_str("model", config.model);
    take_str("api-key-env", config.api_key_env);
    take_str("fixtures", config.fixtures_path);
    parse_with("record-fixtures",
               [&](const std::string& v) { config.record_fixtures = (v == "true" || v == "1"); });
    take_str("constraint", constraint);
    parse_with("temperature", [&](const std::string& v) { config.temperature = std::stod(v); });
    parse_with("top", [&](const std::string& v) { config.top = std::stod(v); });
    parse_with("max-new-tokens",
               [&](const std::string& v) { config.max_new_tokens = std::stoi(v); });
    parse_with("branching-limit",
               [&](const std::string& v) { config.branching_limit = std::stoi(v); });
    parse_with("max-depth", [&](const std::string& v) { config.max_depth = std::stoi(v); });
    parse_with("concurrency", [&](const std::string& v) { config.concurrency = std::stoi(v); });
    take_str("demo-flavor", demo_flavor);
    parse_with("tot-paths", [&](const std::string& v) { config.tot_paths = std::stoi(v); });
    take_str("labels", config.labels_path);
    take_str("templates-dir", config.templates_dir);
    take_str("stoplist", config.stoplist_path);
    take_str("output-dir", config.output_dir);
    parse_with("time-budget",
               [&](const std::string& v) { config.time_budget_seconds = std::stod(v); });
    parse_with("max-attempts",
               [&](const std::string& v) { config.max_attempts = std::stoi(v); });
    parse_with("timeout", [&](const std::string& v) { config.timeout_seconds = std::stoi(v); });

    if (!kv.empty()) {
        throw ConfigError("unknown config key `" + kv.begin()->first + "`",
                          kv.begin()->first);
    }
}

void finish_config(RunConfig& config, const std::string& dataset_kind,
                   const std::string& strategy, const std::string& backend,
                   const std::string& constraint, const std::string& demo_flavor) {
    config.dataset_kind = dataset_kind_from_string(dataset_kind);
    config.strategy = strategy_from_string(strategy);
    config.backend = backend_kind_from_string(backend);
    config.constraint = constraint_mode_from_string(constraint);
    if (demo_flavor == "comparison") {
        config.demo_flavor = DemoFlavor::comparison_demo;
    } else if (demo_flavor == "bridge") {
        config.demo_flavor = DemoFlavor::bridge_demo;
    } else if (demo_flavor == "both") {
        config.demo_flavor = DemoFlavor::both;
    } else {
        throw ConfigError("unknown demo flavor `" + demo_flavor + "`", "demo-flavor");
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"stochastic tree-of-thought reasoning for multi-hop QA"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    RunConfig config;
    std::string config_path;
    std::string dataset_kind = "hotpotqa";
    std::string strategy = "stoctot";
    std::string backend = "scripted";
    std::string constraint = "soft";
    std::string demo_flavor = "both";

    CLI::App* run_cmd = app.add_subcommand("run", "execute a strategy over a sampled corpus");
    add_config_flags(*run_cmd, config, config_path, dataset_kind, strategy, backend,
                     constraint, demo_flavor);

    std::string resume_dir;
    CLI::App* resume_cmd = app.add_subcommand("resume", "finish an interrupted run");
    resume_cmd->add_option("run_dir", resume_dir, "run directory")->required();

    std::vector<std::string> compare_dirs;
    CLI::App* compare_cmd = app.add_subcommand("compare", "side-by-side run comparison");
    compare_cmd->add_option("run_dirs", compare_dirs, "completed run directories")
        ->expected(2, -1);

    std::string predictions_path;
    std::string eval_output;
    CLI::App* eval_cmd = app.add_subcommand("eval", "score an external predictions file");
    add_config_flags(*eval_cmd, config, config_path, dataset_kind, strategy, backend,
                     constraint, demo_flavor);
    eval_cmd->add_option("--predictions", predictions_path, "JSON object of id -> answer")
        ->required();
    eval_cmd->add_option("--output", eval_output, "write the JSON report here");

    std::string dump_example_id;
    std::string dump_run_dir;
    CLI::App* dump_cmd = app.add_subcommand("dump-tree", "print a persisted reasoning tree");
    dump_cmd->add_option("example_id", dump_example_id, "example id")->required();
    dump_cmd->add_option("--run", dump_run_dir, "run directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) {
            if (!config_path.empty()) {
                apply_config_file(*run_cmd, config_path, config, dataset_kind, strategy,
                                  backend, constraint, demo_flavor);
            }
            finish_config(config, dataset_kind, strategy, backend, constraint, demo_flavor);
            RunReport report = run_batch(config);
            std::cout << report_to_table(report.report);
            std::cout << "run directory: " << report.run_dir << "\n";
            return report.exit_code;
        }
        if (resume_cmd->parsed()) {
            RunReport report = resume(resume_dir);
            std::cout << report_to_table(report.report);
            std::cout << "run directory: " << report.run_dir << "\n";
            return report.exit_code;
        }
        if (compare_cmd->parsed()) {
            nlohmann::ordered_json comparison = compare_runs(compare_dirs);
            std::cout << render_comparison(comparison);
            return 0;
        }
        if (eval_cmd->parsed()) {
            if (!config_path.empty()) {
                apply_config_file(*eval_cmd, config_path, config, dataset_kind, strategy,
                                  backend, constraint, demo_flavor);
            }
            finish_config(config, dataset_kind, strategy, backend, constraint, demo_flavor);
            RunReport report = eval_predictions(config, predictions_path);
            if (!eval_output.empty()) {
                std::ofstream out(eval_output);
                out << report_to_json(report.report).dump(2) << "\n";
            }
            std::cout << report_to_table(report.report);
            return report.exit_code;
        }
        if (dump_cmd->parsed()) {
            std::cout << read_tree_dump(dump_run_dir, dump_example_id);
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error (" << e.field << "): " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

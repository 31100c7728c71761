#include "stoctot/runner.hpp"

#include "stoctot/digest.hpp"
#include "stoctot/errors.hpp"
#include "stoctot/http_backend.hpp"
#include "stoctot/scripted_backend.hpp"
#include "stoctot/text.hpp"
#include "stoctot/token_scorer.hpp"
#include "stoctot/version.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace stoctot {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out << content;
}

// id -> filesystem-safe name
std::string safe_name(const std::string& id) {
    std::string out;
    for (char c : id) {
        bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                  c == '-' || c == '_' || c == '.';
        out.push_back(ok ? c : '_');
    }
    return out;
}

struct ExampleResult {
    EvalRecord record;
    std::string tree_json;  // stoctot only
    std::string trace_text; // baselines
};

EvalRecord make_record(const QAExample& example, const StrategyOutcome& outcome) {
    EvalRecord r;
    r.example_id = example.id;
    r.strategy = outcome.strategy;
    r.prediction = outcome.failed ? "" : outcome.answer;
    r.gold = example.gold_answer;
    r.em = exact_match(r.prediction, r.gold);
    r.f1 = f1_score(r.prediction, r.gold);
    if (r.em == 1) {
        r.f1 = 1.0; // normalized-identical spans always overlap fully
    }
    r.error_category = categorize_error(r.em, r.f1, r.prediction, outcome.intermediate_answers,
                                        outcome.failed);
    r.question_type = example.question_type;
    r.hop_count = example.hop_count;
    r.reasoning_type = example.reasoning_type;
    r.backend_calls = outcome.backend_calls;
    r.failed = outcome.failed;
    r.p_final = outcome.p_final;
    return r;
}

struct RunContext {
    RunConfig config;
    TemplateRegistry templates;
    EngineConfig engine_config;
    GenerationParams params;
    std::shared_ptr<ScriptedBackend> scripted; // when backend kind = scripted
    std::shared_ptr<HttpBackend> http;         // when backend kind = http
    std::shared_ptr<ScriptedBackend> recorder; // record mode: captured replies
    std::shared_ptr<RecordingBackend> recording;
    std::shared_ptr<ThrottledBackend> throttled; // caps in-flight requests run-wide
};

RunContext make_context(const RunConfig& config) {
    RunContext ctx;
    ctx.config = config;
    ctx.templates = config.templates_dir.empty()
                        ? TemplateRegistry::builtin()
                        : TemplateRegistry::with_overrides(config.templates_dir);

    ctx.params.temperature = config.temperature;
    ctx.params.top_k_or_p = config.top;
    ctx.params.max_new_tokens = config.max_new_tokens;

    ctx.engine_config.max_depth = config.max_depth;
    ctx.engine_config.branching_limit = config.branching_limit;
    ctx.engine_config.constraint = config.constraint;
    ctx.engine_config.demo_flavor = config.demo_flavor;
    ctx.engine_config.sibling_concurrency = config.concurrency;
    ctx.engine_config.params = ctx.params;
    ctx.engine_config.decode_seed = config.seed;
    if (!config.stoplist_path.empty()) {
        ctx.engine_config.stoplist = load_stoplist(config.stoplist_path);
    }
    // scripted runs are deterministic and cheap; the wall-clock budget guards
    // live backends only
    if (config.backend != BackendKind::scripted && config.time_budget_seconds > 0) {
        ctx.engine_config.time_budget = std::chrono::milliseconds(
            static_cast<long long>(config.time_budget_seconds * 1000.0));
    }

    if (config.backend == BackendKind::scripted) {
        if (!config.fixtures_path.empty()) {
            ctx.scripted = std::make_shared<ScriptedBackend>(config.fixtures_path);
        } else {
            ctx.scripted = std::make_shared<ScriptedBackend>();
        }
        ctx.throttled = std::make_shared<ThrottledBackend>(*ctx.scripted, config.concurrency);
    } else if (config.backend == BackendKind::http) {
        HttpBackendConfig http;
        http.base_url = config.endpoint;
        http.model = config.model;
        http.api_key_env = config.api_key_env;
        http.timeout_seconds = config.timeout_seconds;
        http.max_attempts = config.max_attempts;
        ctx.http = std::make_shared<HttpBackend>(http);
        Backend* base = ctx.http.get();
        if (config.record_fixtures) {
            ctx.recorder = std::make_shared<ScriptedBackend>();
            ctx.recording = std::make_shared<RecordingBackend>(*base, *ctx.recorder);
            base = ctx.recording.get();
        }
        ctx.throttled = std::make_shared<ThrottledBackend>(*base, config.concurrency);
    } else if (config.record_fixtures) {
        ctx.recorder = std::make_shared<ScriptedBackend>(); // local kind records too
    }
    return ctx;
}

ExampleResult run_example(const RunContext& ctx, const QAExample& example) {
    // per-example stack: counting wrapper for call budgets, and for the local
    // kind a scorer over the example's own bank words
    Backend* base = nullptr;
    std::shared_ptr<LocalScoredBackend> local;
    std::shared_ptr<RecordingBackend> local_recording;
    std::shared_ptr<TokenScorer> scorer;
    if (ctx.config.backend == BackendKind::scripted || ctx.config.backend == BackendKind::http) {
        base = ctx.throttled.get();
    } else {
        VocabularyBank bank = build_bank(example.id, example.question, example.evidence_pool,
                                         default_stoplist());
        std::vector<std::string> words(bank.words.begin(), bank.words.end());
        scorer = make_heuristic_scorer(words);
        local = std::make_shared<LocalScoredBackend>(scorer, ctx.config.seed);
        base = local.get();
        if (ctx.recorder) {
            local_recording = std::make_shared<RecordingBackend>(*base, *ctx.recorder);
            base = local_recording.get();
        }
    }
    CountingBackend counting(*base);

    ExampleResult result;
    StrategyOutcome outcome;
    switch (ctx.config.strategy) {
        case Strategy::vanilla:
            outcome = run_vanilla(example, counting, ctx.templates, ctx.params);
            result.trace_text = outcome.trace;
            break;
        case Strategy::cot:
            outcome = run_cot(example, counting, ctx.templates, ctx.params);
            result.trace_text = outcome.trace;
            break;
        case Strategy::tot:
            outcome = run_tot(example, counting, ctx.templates, ctx.config.tot_paths,
                              ctx.params);
            result.trace_text = outcome.trace;
            break;
        case Strategy::stoctot: {
            StocTotEngine engine(counting, ctx.templates, ctx.engine_config,
                                 scorer ? scorer.get() : nullptr);
            ReasoningTree tree(example.id, example.question);
            outcome = run_stoctot_strategy(example, engine, tree);
            ordered_json tj = tree.to_json();
            if (outcome.chosen.has_value()) {
                ordered_json chosen;
                chosen["answer"] = outcome.answer;
                chosen["leaf_id"] = outcome.chosen->leaf_id;
                chosen["p_final"] = outcome.chosen->p_final;
                ordered_json factors = ordered_json::array();
                for (const auto& [node_id, p] : outcome.chosen->factors) {
                    factors.push_back({node_id, p});
                }
                chosen["factors"] = std::move(factors);
                tj["chosen"] = std::move(chosen);
            } else {
                tj["chosen"] = nullptr;
            }
            result.tree_json = tj.dump(2) + "\n";
            break;
        }
    }
    outcome.backend_calls = counting.call_count();
    result.record = make_record(example, outcome);
    return result;
}

struct Manifest {
    std::string code_version;
    std::string config_digest;
    ordered_json config;
    std::string fixture_digest; // empty = none
    std::vector<std::string> example_ids;
    std::vector<std::string> outputs;
};

ordered_json manifest_to_json(const Manifest& m) {
    ordered_json j;
    j["code_version"] = m.code_version;
    j["config_digest"] = m.config_digest;
    j["config"] = m.config;
    j["fixture_digest"] = m.fixture_digest.empty() ? ordered_json(nullptr)
                                                   : ordered_json(m.fixture_digest);
    j["example_ids"] = m.example_ids;
    j["outputs"] = m.outputs;
    return j;
}

Corpus load_and_sample(const RunConfig& config) {
    Corpus corpus = load_corpus(config.dataset_kind, config.dataset_path);
    if (!config.labels_path.empty()) {
        apply_reasoning_labels(corpus, config.labels_path);
    }
    return sample_subset(corpus, static_cast<std::size_t>(config.sample_n), config.seed);
}

// executes the not-yet-persisted examples and writes the final report
RunReport execute(const RunContext& ctx, const fs::path& run_dir, const Corpus& sampled,
                  Manifest manifest) {
    fs::create_directories(run_dir / "records");
    fs::create_directories(run_dir / "trees");
    fs::create_directories(run_dir / "traces");

    std::vector<const QAExample*> todo;
    std::vector<EvalRecord> done;
    for (const auto& ex : sampled.examples) {
        fs::path record_path = run_dir / "records" / (safe_name(ex.id) + ".json");
        if (fs::exists(record_path)) {
            done.push_back(record_from_json(json::parse(slurp(record_path))));
        } else {
            todo.push_back(&ex);
        }
    }

    std::mutex writer; // all artifact writes funnel through one lock
    std::vector<EvalRecord> fresh(todo.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < todo.size(); i = next.fetch_add(1)) {
            const QAExample& ex = *todo[i];
            ExampleResult r;
            try {
                r = run_example(ctx, ex);
            } catch (const std::exception& e) {
                // an example must not take the batch down with it
                StrategyOutcome failed;
                failed.strategy = ctx.config.strategy;
                failed.failed = true;
                failed.failure_reason = e.what();
                r.record = make_record(ex, failed);
                r.trace_text = std::string("[failed: ") + e.what() + "]";
            }
            try {
                std::lock_guard lock(writer);
                std::string name = safe_name(ex.id);
                spit(run_dir / "records" / (name + ".json"),
                     record_to_json(r.record).dump(2) + "\n");
                if (!r.tree_json.empty()) {
                    spit(run_dir / "trees" / (name + ".json"), r.tree_json);
                }
                if (!r.trace_text.empty()) {
                    spit(run_dir / "traces" / (name + ".txt"), r.trace_text + "\n");
                }
            } catch (const std::exception&) {
                r.record.failed = true; // unpersisted: resume will redo it
            }
            fresh[i] = std::move(r.record);
        }
    };
    int workers = std::max(1, std::min<int>(ctx.config.concurrency,
                                            static_cast<int>(todo.size())));
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < workers; t++) {
            pool.emplace_back(worker);
        }
        for (auto& th : pool) {
            th.join();
        }
    }

    // assemble in sampled-corpus order so reports are byte-stable
    std::map<std::string, EvalRecord> by_id;
    for (auto& r : done) {
        by_id[r.example_id] = std::move(r);
    }
    for (auto& r : fresh) {
        by_id[r.example_id] = std::move(r);
    }
    RunReport out;
    out.run_dir = run_dir.string();
    for (const auto& ex : sampled.examples) {
        auto it = by_id.find(ex.id);
        if (it == by_id.end()) {
            throw Error("missing record for example " + ex.id);
        }
        out.records.push_back(it->second);
    }
    out.report = aggregate(out.records);
    out.exit_code = out.report.failed_example_ids.empty() ? 0 : 1;

    spit(run_dir / "report.json", report_to_json(out.report).dump(2) + "\n");
    spit(run_dir / "report.txt", report_to_table(out.report));
    spit(run_dir / "records.csv", records_to_csv(out.records));

    manifest.outputs = {"manifest.json", "report.json", "report.txt", "records.csv"};
    if (ctx.recorder) {
        ctx.recorder->save((run_dir / "fixtures.json").string());
        manifest.fixture_digest = ctx.recorder->fixture_digest();
        manifest.outputs.push_back("fixtures.json");
    }
    for (const auto& ex : sampled.examples) {
        std::string name = safe_name(ex.id);
        manifest.outputs.push_back("records/" + name + ".json");
        if (fs::exists(run_dir / "trees" / (name + ".json"))) {
            manifest.outputs.push_back("trees/" + name + ".json");
        }
        if (fs::exists(run_dir / "traces" / (name + ".txt"))) {
            manifest.outputs.push_back("traces/" + name + ".txt");
        }
    }
    spit(run_dir / "manifest.json", manifest_to_json(manifest).dump(2) + "\n");
    return out;
}

} // namespace

std::string to_string(BackendKind k) {
    switch (k) {
        case BackendKind::http: return "http";
        case BackendKind::scripted: return "scripted";
        case BackendKind::local: return "local";
    }
    return "scripted";
}

BackendKind backend_kind_from_string(const std::string& s) {
    if (s == "http") {
        return BackendKind::http;
    }
    if (s == "scripted") {
        return BackendKind::scripted;
    }
    if (s == "local") {
        return BackendKind::local;
    }
    throw ConfigError("unknown backend kind `" + s + "` (expected http, scripted, or local)",
                      "backend");
}

void validate_config(const RunConfig& config) {
    if (config.dataset_path.empty()) {
        throw ConfigError("dataset path is required", "dataset");
    }
    if (config.sample_n <= 0) {
        throw ConfigError("sample-n must be positive", "sample-n");
    }
    if (config.constraint == ConstraintMode::hard && config.backend != BackendKind::local) {
        throw ConfigError("constraint mode `hard` requires a token-scoring backend, but "
                          "backend kind is `" +
                              to_string(config.backend) + "`",
                          "constraint");
    }
    if (config.backend == BackendKind::http && config.endpoint.empty()) {
        throw ConfigError("http backend requires an endpoint", "endpoint");
    }
    if (config.temperature < 0.0 || config.temperature > 2.0) {
        throw ConfigError("temperature must lie in [0, 2]", "temperature");
    }
    if (config.max_new_tokens <= 0) {
        throw ConfigError("max-new-tokens must be positive", "max-new-tokens");
    }
    if (config.branching_limit <= 0) {
        throw ConfigError("branching-limit must be positive", "branching-limit");
    }
    if (config.max_depth <= 0) {
        throw ConfigError("max-depth must be positive", "max-depth");
    }
    if (config.concurrency <= 0) {
        throw ConfigError("concurrency must be positive", "concurrency");
    }
    if (config.tot_paths <= 0) {
        throw ConfigError("tot-paths must be positive", "tot-paths");
    }
}

nlohmann::ordered_json config_to_json(const RunConfig& c) {
    ordered_json j;
    j["dataset"] = c.dataset_path;
    j["dataset_kind"] = to_string(c.dataset_kind);
    j["sample_n"] = c.sample_n;
    j["seed"] = c.seed;
    j["strategy"] = to_string(c.strategy);
    j["backend"] = to_string(c.backend);
    j["endpoint"] = c.endpoint;
    j["model"] = c.model;
    j["api_key_env"] = c.api_key_env;
    j["fixtures"] = c.fixtures_path;
    j["record_fixtures"] = c.record_fixtures;
    j["constraint"] = to_string(c.constraint);
    j["temperature"] = c.temperature;
    j["top"] = c.top;
    j["max_new_tokens"] = c.max_new_tokens;
    j["branching_limit"] = c.branching_limit;
    j["max_depth"] = c.max_depth;
    j["concurrency"] = c.concurrency;
    j["demo_flavor"] = to_string(c.demo_flavor);
    j["tot_paths"] = c.tot_paths;
    j["labels"] = c.labels_path;
    j["templates_dir"] = c.templates_dir;
    j["stoplist"] = c.stoplist_path;
    j["output_dir"] = c.output_dir;
    j["time_budget_seconds"] = c.time_budget_seconds;
    j["max_attempts"] = c.max_attempts;
    j["timeout_seconds"] = c.timeout_seconds;
    return j;
}

RunConfig config_from_json(const nlohmann::json& j) {
    RunConfig c;
    c.dataset_path = j.at("dataset").get<std::string>();
    c.dataset_kind = dataset_kind_from_string(j.at("dataset_kind").get<std::string>());
    c.sample_n = j.at("sample_n").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.strategy = strategy_from_string(j.at("strategy").get<std::string>());
    c.backend = backend_kind_from_string(j.at("backend").get<std::string>());
    c.endpoint = j.at("endpoint").get<std::string>();
    c.model = j.at("model").get<std::string>();
    c.api_key_env = j.at("api_key_env").get<std::string>();
    c.fixtures_path = j.at("fixtures").get<std::string>();
    c.record_fixtures = j.at("record_fixtures").get<bool>();
    c.constraint = constraint_mode_from_string(j.at("constraint").get<std::string>());
    c.temperature = j.at("temperature").get<double>();
    c.top = j.at("top").get<double>();
    c.max_new_tokens = j.at("max_new_tokens").get<int>();
    c.branching_limit = j.at("branching_limit").get<int>();
    c.max_depth = j.at("max_depth").get<int>();
    c.concurrency = j.at("concurrency").get<int>();
    std::string flavor = j.at("demo_flavor").get<std::string>();
    c.demo_flavor = flavor == "comparison" ? DemoFlavor::comparison_demo
                    : flavor == "bridge"   ? DemoFlavor::bridge_demo
                                           : DemoFlavor::both;
    c.tot_paths = j.at("tot_paths").get<int>();
    c.labels_path = j.at("labels").get<std::string>();
    c.templates_dir = j.at("templates_dir").get<std::string>();
    c.stoplist_path = j.at("stoplist").get<std::string>();
    c.output_dir = j.at("output_dir").get<std::string>();
    c.time_budget_seconds = j.at("time_budget_seconds").get<double>();
    c.max_attempts = j.at("max_attempts").get<int>();
    c.timeout_seconds = j.at("timeout_seconds").get<int>();
    return c;
}

std::string config_digest(const RunConfig& config) {
    return sha256_hex(config_to_json(config).dump());
}

RunReport run_batch(const RunConfig& config) {
    validate_config(config);
    RunContext ctx = make_context(config);
    Corpus sampled = load_and_sample(config);

    std::string digest = config_digest(config);
    fs::path run_dir = fs::path(config.output_dir) / digest.substr(0, 16);
    fs::create_directories(run_dir);

    Manifest manifest;
    manifest.code_version = kVersion;
    manifest.config_digest = digest;
    manifest.config = config_to_json(config);
    if (ctx.scripted) {
        manifest.fixture_digest = ctx.scripted->fixture_digest();
    }
    for (const auto& ex : sampled.examples) {
        manifest.example_ids.push_back(ex.id);
    }
    spit(run_dir / "manifest.json", manifest_to_json(manifest).dump(2) + "\n");

    return execute(ctx, run_dir, sampled, std::move(manifest));
}

RunReport resume(const std::string& run_dir_str) {
    fs::path run_dir(run_dir_str);
    fs::path manifest_path = run_dir / "manifest.json";
    if (!fs::exists(manifest_path)) {
        throw Error("no manifest in " + run_dir_str);
    }
    json m = json::parse(slurp(manifest_path));
    RunConfig config = config_from_json(m.at("config"));
    std::string recorded = m.at("config_digest").get<std::string>();
    std::string recomputed = config_digest(config);
    if (recorded != recomputed) {
        throw Error("config digest mismatch: manifest says " + recorded +
                    " but the config hashes to " + recomputed + "; refusing to resume");
    }

    validate_config(config);
    RunContext ctx = make_context(config);
    Corpus sampled = load_and_sample(config);

    std::vector<std::string> expected_ids;
    for (const auto& ex : sampled.examples) {
        expected_ids.push_back(ex.id);
    }
    std::vector<std::string> manifest_ids = m.at("example_ids").get<std::vector<std::string>>();
    if (manifest_ids != expected_ids) {
        throw Error("manifest example ids do not match the sampled corpus; refusing to resume");
    }

    Manifest manifest;
    manifest.code_version = m.at("code_version").get<std::string>();
    manifest.config_digest = recorded;
    manifest.config = m.at("config");
    if (!m.at("fixture_digest").is_null()) {
        manifest.fixture_digest = m.at("fixture_digest").get<std::string>();
    }
    manifest.example_ids = manifest_ids;

    return execute(ctx, run_dir, sampled, std::move(manifest));
}

nlohmann::ordered_json compare_runs(const std::vector<std::string>& run_dirs) {
    if (run_dirs.size() < 2) {
        throw Error("compare requires at least two run directories");
    }

    struct Loaded {
        std::string dir;
        std::string strategy;
        std::vector<EvalRecord> records;
        AggregateReport report;
    };
    std::vector<Loaded> runs;
    for (const auto& dir : run_dirs) {
        json m = json::parse(slurp(fs::path(dir) / "manifest.json"));
        Loaded run;
        run.dir = dir;
        run.strategy = m.at("config").at("strategy").get<std::string>();
        for (const auto& id : m.at("example_ids").get<std::vector<std::string>>()) {
            fs::path rp = fs::path(dir) / "records" / (safe_name(id) + ".json");
            if (!fs::exists(rp)) {
                throw Error("run " + dir + " is incomplete: no record for " + id);
            }
            run.records.push_back(record_from_json(json::parse(slurp(rp))));
        }
        run.report = aggregate(run.records);
        runs.push_back(std::move(run));
    }

    std::set<std::string> base_ids;
    for (const auto& r : runs[0].records) {
        base_ids.insert(r.example_id);
    }
    for (std::size_t i = 1; i < runs.size(); i++) {
        std::set<std::string> ids;
        for (const auto& r : runs[i].records) {
            ids.insert(r.example_id);
        }
        if (ids != base_ids) {
            std::vector<std::string> diff;
            std::set_symmetric_difference(base_ids.begin(), base_ids.end(), ids.begin(),
                                          ids.end(), std::back_inserter(diff));
            throw Error("example sets differ between " + runs[0].dir + " and " + runs[i].dir +
                        ": " + text::join(diff, ", "));
        }
    }

    ordered_json out;
    out["runs"] = ordered_json::array();
    for (const auto& run : runs) {
        ordered_json j;
        j["dir"] = run.dir;
        j["strategy"] = run.strategy;
        j["count"] = run.report.count;
        j["em"] = run.report.em_pct;
        j["f1"] = run.report.f1_pct;
        j["error_counts"] = run.report.error_counts;
        out["runs"].push_back(std::move(j));
    }
    out["deltas"] = ordered_json::array();
    for (std::size_t i = 1; i < runs.size(); i++) {
        ordered_json j;
        j["dir"] = runs[i].dir;
        j["vs"] = runs[0].dir;
        j["em_delta"] = runs[i].report.em_pct - runs[0].report.em_pct;
        j["f1_delta"] = runs[i].report.f1_pct - runs[0].report.f1_pct;
        ordered_json cat = ordered_json::object();
        std::set<std::string> keys;
        for (const auto& [k, _] : runs[0].report.error_counts) {
            keys.insert(k);
        }
        for (const auto& [k, _] : runs[i].report.error_counts) {
            keys.insert(k);
        }
        for (const auto& k : keys) {
            int a = 0;
            int b = 0;
            if (auto it = runs[0].report.error_counts.find(k);
                it != runs[0].report.error_counts.end()) {
                a = it->second;
            }
            if (auto it = runs[i].report.error_counts.find(k);
                it != runs[i].report.error_counts.end()) {
                b = it->second;
            }
            cat[k] = b - a;
        }
        j["category_deltas"] = cat;
        out["deltas"].push_back(std::move(j));
    }
    return out;
}

std::string render_comparison(const nlohmann::ordered_json& comparison) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(1);
    out << std::left << std::setw(24) << "run" << std::setw(10) << "strategy" << std::right
        << std::setw(8) << "count" << std::setw(8) << "EM" << std::setw(8) << "F1" << "\n";
    out << std::string(58, '-') << "\n";
    for (const auto& run : comparison.at("runs")) {
        std::string dir = run.at("dir").get<std::string>();
        if (dir.size() > 22) {
            dir = "..." + dir.substr(dir.size() - 19);
        }
        out << std::left << std::setw(24) << dir << std::setw(10)
            << run.at("strategy").get<std::string>() << std::right << std::setw(8)
            << run.at("count").get<int>() << std::setw(8) << run.at("em").get<double>()
            << std::setw(8) << run.at("f1").get<double>() << "\n";
    }
    for (const auto& delta : comparison.at("deltas")) {
        out << "delta vs first: EM " << std::showpos << delta.at("em_delta").get<double>()
            << ", F1 " << delta.at("f1_delta").get<double>() << std::noshowpos << " (";
        bool first = true;
        for (const auto& [k, v] : delta.at("category_deltas").items()) {
            if (!first) {
                out << ", ";
            }
            out << k << " " << std::showpos << v.get<int>() << std::noshowpos;
            first = false;
        }
        out << ")\n";
    }
    return out.str();
}

RunReport eval_predictions(const RunConfig& config, const std::string& predictions_path) {
    if (config.dataset_path.empty()) {
        throw ConfigError("dataset path is required", "dataset");
    }
    Corpus corpus = load_corpus(config.dataset_kind, config.dataset_path);
    if (!config.labels_path.empty()) {
        apply_reasoning_labels(corpus, config.labels_path);
    }

    json preds = json::parse(slurp(predictions_path));
    if (!preds.is_object()) {
        throw SchemaError("predictions file must be a JSON object of id -> answer", 0,
                          "(root)");
    }

    RunReport out;
    for (const auto& ex : corpus.examples) {
        auto it = preds.find(ex.id);
        if (it == preds.end()) {
            continue;
        }
        StrategyOutcome outcome;
        outcome.strategy = config.strategy;
        outcome.answer = it->get<std::string>();
        outcome.backend_calls = 0;
        out.records.push_back(make_record(ex, outcome));
    }
    if (out.records.empty()) {
        throw Error("no prediction ids matched the corpus");
    }
    out.report = aggregate(out.records);
    out.exit_code = 0;
    return out;
}

std::string read_tree_dump(const std::string& run_dir, const std::string& example_id) {
    fs::path p = fs::path(run_dir) / "trees" / (safe_name(example_id) + ".json");
    if (!fs::exists(p)) {
        throw Error("no tree dump for example " + example_id + " in " + run_dir);
    }
    return slurp(p);
}

} // namespace stoctot

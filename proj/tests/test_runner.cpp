#include <doctest.h>

#include "stoctot/errors.hpp"
#include "stoctot/runner.hpp"
#include "stoctot/scripted_backend.hpp"

#include "support/fig1_world.hpp"
#include "support/test_util.hpp"

#include <filesystem>
#include <fstream>

using namespace stoctot;
using namespace stoctot::testing;
namespace fs = std::filesystem;

namespace {

// records every reply a vanilla run over hotpot_mini needs
std::string record_vanilla_fixtures(const TempDir& dir) {
    Corpus corpus = load_hotpotqa(fixture_path("hotpot_mini.json"));
    ScriptedBackend backend;
    backend.set_responder([&corpus](const BackendRequest& req) -> std::optional<std::string> {
        for (const auto& ex : corpus.examples) {
            if (req.user_text.find(ex.question) != std::string::npos) {
                if (ex.id == "5ab2bfc55542997719eab59c") {
                    return std::string("siri remote"); // one deliberately wrong answer
                }
                return ex.gold_answer;
            }
        }
        return std::nullopt;
    });
    TemplateRegistry reg = TemplateRegistry::builtin();
    for (const auto& ex : corpus.examples) {
        run_vanilla(ex, backend, reg);
    }
    std::string path = (dir.path() / "vanilla_fixtures.json").string();
    backend.save(path);
    return path;
}

RunConfig vanilla_config(const TempDir& dir, const std::string& fixtures) {
    RunConfig config;
    config.dataset_path = fixture_path("hotpot_mini.json");
    config.dataset_kind = DatasetKind::hotpotqa;
    config.sample_n = 5;
    config.seed = 7;
    config.strategy = Strategy::vanilla;
    config.backend = BackendKind::scripted;
    config.fixtures_path = fixtures;
    config.output_dir = (dir.path() / "runs").string();
    return config;
}

} // namespace

TEST_CASE("config validation names the offending field before any backend call") {
    RunConfig config;
    config.dataset_path = "";
    try {
        validate_config(config);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.field == "dataset");
    }

    config.dataset_path = "x.json";
    config.constraint = ConstraintMode::hard;
    config.backend = BackendKind::http;
    try {
        validate_config(config);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.field == "constraint"); // hard masking needs a token-scoring backend
    }

    config.constraint = ConstraintMode::soft;
    config.temperature = 3.0;
    CHECK_THROWS_AS(validate_config(config), ConfigError);
}

TEST_CASE("config digest is stable across json round-trips") {
    RunConfig config;
    config.dataset_path = "d.json";
    std::string d1 = config_digest(config);
    RunConfig back = config_from_json(config_to_json(config));
    CHECK(config_digest(back) == d1);
    back.seed = 99;
    CHECK(config_digest(back) != d1);
}

TEST_CASE("run_batch produces records, artifacts, and a manifest") {
    TempDir dir("runner");
    std::string fixtures = record_vanilla_fixtures(dir);
    RunConfig config = vanilla_config(dir, fixtures);

    RunReport report = run_batch(config);
    CHECK(report.records.size() == 5);
    CHECK(report.exit_code == 0);
    CHECK(report.report.count == 5);
    CHECK(report.report.em_pct == doctest::Approx(80.0)); // 4 of 5 exact

    fs::path run_dir(report.run_dir);
    CHECK(fs::exists(run_dir / "manifest.json"));
    CHECK(fs::exists(run_dir / "report.json"));
    CHECK(fs::exists(run_dir / "report.txt"));
    CHECK(fs::exists(run_dir / "records.csv"));

    nlohmann::json manifest = nlohmann::json::parse(read_file((run_dir / "manifest.json").string()));
    CHECK(manifest.at("config_digest").get<std::string>() == config_digest(config));
    CHECK(manifest.at("example_ids").size() == 5);
    // every persisted file appears in the manifest's outputs list
    std::set<std::string> outputs;
    for (const auto& o : manifest.at("outputs")) {
        outputs.insert(o.get<std::string>());
    }
    for (const auto& entry : fs::recursive_directory_iterator(run_dir)) {
        if (entry.is_regular_file()) {
            std::string rel = fs::relative(entry.path(), run_dir).string();
            CHECK(outputs.count(rel) == 1);
        }
    }
}

TEST_CASE("reruns with identical config and fixtures are byte-identical") {
    TempDir dir("runner");
    std::string fixtures = record_vanilla_fixtures(dir);
    RunConfig config = vanilla_config(dir, fixtures);

    RunReport first = run_batch(config);
    std::string report1 = read_file((fs::path(first.run_dir) / "report.json").string());
    std::string csv1 = read_file((fs::path(first.run_dir) / "records.csv").string());

    RunReport second = run_batch(config);
    CHECK(second.run_dir == first.run_dir); // same digest, same directory
    CHECK(read_file((fs::path(second.run_dir) / "report.json").string()) == report1);
    CHECK(read_file((fs::path(second.run_dir) / "records.csv").string()) == csv1);

    SUBCASE("concurrency does not leak into the artifacts") {
        RunConfig wide = config;
        wide.concurrency = 1;
        RunReport third = run_batch(wide);
        // different config digest, different directory, but identical records
        CHECK(third.run_dir != first.run_dir);
        CHECK(read_file((fs::path(third.run_dir) / "records.csv").string()) == csv1);
    }
}

TEST_CASE("resume skips persisted examples and reproduces the report") {
    TempDir dir("runner");
    std::string fixtures = record_vanilla_fixtures(dir);
    RunConfig config = vanilla_config(dir, fixtures);

    RunReport full = run_batch(config);
    fs::path run_dir(full.run_dir);
    std::string report_bytes = read_file((run_dir / "report.json").string());

    // simulate an interruption: drop two records and the final report
    fs::remove(run_dir / "records" / "5a85ea095542994775f606a8.json");
    fs::remove(run_dir / "records" / "5abf1b575542993a06baf9fc.json");
    fs::remove(run_dir / "report.json");

    auto untouched = run_dir / "records" / "5a8b57f25542995d1e6f1371.json";
    auto stamp_before = fs::last_write_time(untouched);

    RunReport resumed = resume(run_dir.string());
    CHECK(resumed.records.size() == 5);
    CHECK(read_file((run_dir / "report.json").string()) == report_bytes);
    CHECK(fs::last_write_time(untouched) == stamp_before); // skipped, not rerun

    SUBCASE("resume with nothing done equals run_batch") {
        for (const auto& entry : fs::directory_iterator(run_dir / "records")) {
            fs::remove(entry.path());
        }
        RunReport fresh = resume(run_dir.string());
        CHECK(read_file((run_dir / "report.json").string()) == report_bytes);
        CHECK(fresh.records.size() == 5);
    }
}

TEST_CASE("resume refuses a tampered manifest, printing both digests") {
    TempDir dir("runner");
    std::string fixtures = record_vanilla_fixtures(dir);
    RunConfig config = vanilla_config(dir, fixtures);
    RunReport full = run_batch(config);
    fs::path manifest_path = fs::path(full.run_dir) / "manifest.json";

    nlohmann::json manifest = nlohmann::json::parse(read_file(manifest_path.string()));
    manifest["config"]["seed"] = 999; // tamper
    std::ofstream(manifest_path) << manifest.dump(2);

    try {
        resume(full.run_dir);
        FAIL("expected refusal");
    } catch (const Error& e) {
        std::string msg = e.what();
        CHECK(msg.find(manifest["config_digest"].get<std::string>()) != std::string::npos);
        CHECK(msg.find("refusing") != std::string::npos);
    }
}

TEST_CASE("compare lays runs side by side and diffs categories") {
    TempDir dir("runner");
    std::string fixtures = record_vanilla_fixtures(dir);
    RunConfig vanilla = vanilla_config(dir, fixtures);
    RunReport run1 = run_batch(vanilla);

    // a second strategy over the same examples: cot via its own fixtures
    Corpus corpus = load_hotpotqa(fixture_path("hotpot_mini.json"));
    ScriptedBackend backend;
    backend.set_responder([&corpus](const BackendRequest& req) -> std::optional<std::string> {
        for (const auto& ex : corpus.examples) {
            if (req.user_text.find(ex.question) != std::string::npos) {
                return "step by step...\nAnswer: " + ex.gold_answer;
            }
        }
        return std::nullopt;
    });
    TemplateRegistry reg = TemplateRegistry::builtin();
    for (const auto& ex : corpus.examples) {
        run_cot(ex, backend, reg);
    }
    std::string cot_fixtures = (dir.path() / "cot_fixtures.json").string();
    backend.save(cot_fixtures);

    RunConfig cot = vanilla;
    cot.strategy = Strategy::cot;
    cot.fixtures_path = cot_fixtures;
    RunReport run2 = run_batch(cot);

    nlohmann::ordered_json comparison = compare_runs({run1.run_dir, run2.run_dir});
    REQUIRE(comparison.at("runs").size() == 2);
    CHECK(comparison.at("runs")[0].at("strategy") == "vanilla");
    CHECK(comparison.at("runs")[1].at("strategy") == "cot");
    REQUIRE(comparison.at("deltas").size() == 1);
    CHECK(comparison.at("deltas")[0].at("em_delta").get<double>() == doctest::Approx(20.0));
    CHECK_FALSE(render_comparison(comparison).empty());

    SUBCASE("mismatched example sets are rejected with the difference") {
        RunConfig smaller = vanilla;
        smaller.sample_n = 4;
        RunReport run3 = run_batch(smaller);
        try {
            compare_runs({run1.run_dir, run3.run_dir});
            FAIL("expected mismatch error");
        } catch (const Error& e) {
            CHECK(std::string(e.what()).find("example sets differ") != std::string::npos);
        }
    }
    SUBCASE("a single run is a precondition violation") {
        CHECK_THROWS_AS(compare_runs({run1.run_dir}), Error);
    }
}

TEST_CASE("eval scores an external predictions file") {
    TempDir dir("runner");
    std::string predictions = dir.file("preds.json", R"({
      "5a8b57f25542995d1e6f1371": "yes",
      "5a85ea095542994775f606a8": "Las Vegas",
      "5abf1b575542993a06baf9fc": "1969 to 1974"
    })");
    RunConfig config;
    config.dataset_path = fixture_path("hotpot_mini.json");
    config.dataset_kind = DatasetKind::hotpotqa;

    RunReport report = eval_predictions(config, predictions);
    REQUIRE(report.records.size() == 3);
    CHECK(report.records[0].em == 1);
    CHECK(report.records[1].f1 == doctest::Approx(0.5714).epsilon(1e-3));
    CHECK(report.records[2].error_category == ErrorCategory::semantically_correct);
}

TEST_CASE("a recorded local run replays byte-identically through fixtures") {
    TempDir dir("runner");
    std::string dataset_path = write_fig1_dataset(dir);

    RunConfig record;
    record.dataset_path = dataset_path;
    record.dataset_kind = DatasetKind::hotpotqa;
    record.sample_n = 1;
    record.strategy = Strategy::vanilla;
    record.backend = BackendKind::local;
    record.record_fixtures = true;
    record.temperature = 0.0;
    record.output_dir = (dir.path() / "runs_record").string();

    RunReport recorded = run_batch(record);
    fs::path fixtures = fs::path(recorded.run_dir) / "fixtures.json";
    REQUIRE(fs::exists(fixtures));
    nlohmann::json manifest =
        nlohmann::json::parse(read_file((fs::path(recorded.run_dir) / "manifest.json").string()));
    CHECK_FALSE(manifest.at("fixture_digest").is_null());

    RunConfig replay = record;
    replay.backend = BackendKind::scripted;
    replay.record_fixtures = false;
    replay.fixtures_path = fixtures.string();
    replay.output_dir = (dir.path() / "runs_replay").string();

    RunReport replayed = run_batch(replay);
    CHECK(read_file((fs::path(replayed.run_dir) / "records.csv").string()) ==
          read_file((fs::path(recorded.run_dir) / "records.csv").string()));
}

TEST_CASE("stoctot runs persist a readable tree dump") {
    TempDir dir("runner");
    QAExample ex = fig1_example();
    std::string fixtures = record_fig1_fixtures(dir);
    std::string dataset_path = write_fig1_dataset(dir);

    RunConfig config;
    config.dataset_path = dataset_path;
    config.dataset_kind = DatasetKind::hotpotqa;
    config.sample_n = 1;
    config.strategy = Strategy::stoctot;
    config.backend = BackendKind::scripted;
    config.fixtures_path = fixtures;
    config.output_dir = (dir.path() / "runs").string();

    RunReport report = run_batch(config);
    REQUIRE(report.records.size() == 1);
    CHECK(report.records[0].em == 1);
    CHECK(report.records[0].p_final == doctest::Approx(0.72));

    std::string dump = read_tree_dump(report.run_dir, ex.id);
    nlohmann::json tj = nlohmann::json::parse(dump);
    CHECK(tj.at("example_id") == ex.id);
    CHECK(tj.at("chosen").at("answer") == "Rush Hour");
    CHECK(tj.at("nodes").size() == 4);
}

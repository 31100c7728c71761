#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "stoctot/corpus.hpp"
#include "stoctot/engine.hpp"
#include "stoctot/eval.hpp"
#include "stoctot/strategies.hpp"

namespace stoctot {

enum class BackendKind { http, scripted, local };

std::string to_string(BackendKind k);
BackendKind backend_kind_from_string(const std::string& s);

// Flat configuration; every field maps to a CLI flag of the same name.
struct RunConfig {
    std::string dataset_path;
    DatasetKind dataset_kind = DatasetKind::hotpotqa;
    int sample_n = 200;
    std::uint64_t seed = 0;
    Strategy strategy = Strategy::stoctot;
    BackendKind backend = BackendKind::scripted;
    std::string endpoint = "http://localhost:8000";
    std::string model = "gpt-4";
    std::string api_key_env = "STOCTOT_API_KEY"; // keys never enter config files
    std::string fixtures_path;                   // scripted replay source
    bool record_fixtures = false; // live runs persist digest-keyed replies
    ConstraintMode constraint = ConstraintMode::soft;
    double temperature = 0.5;
    double top = 1.0; // forwarded as top_p
    int max_new_tokens = 256;
    int branching_limit = 3;
    int max_depth = 5;
    int concurrency = 4;
    DemoFlavor demo_flavor = DemoFlavor::both;
    int tot_paths = 3;
    std::string labels_path;   // optional reasoning-type sidecar
    std::string templates_dir; // optional prompt overrides
    std::string stoplist_path; // optional stop-word override
    std::string output_dir = "runs";
    double time_budget_seconds = 120.0; // live backends; 0 disables
    int max_attempts = 3;
    int timeout_seconds = 60;
};

// Named-field validation before any backend call. Throws ConfigError.
void validate_config(const RunConfig& config);

nlohmann::ordered_json config_to_json(const RunConfig& config);
RunConfig config_from_json(const nlohmann::json& j);
std::string config_digest(const RunConfig& config);

struct RunReport {
    std::string run_dir;
    AggregateReport report;
    std::vector<EvalRecord> records; // sampled corpus order
    int exit_code = 0;               // 0 success, 1 partial failures
};

// Loads, samples, executes the strategy per example under the concurrency cap,
// persists per-example artifacts, and writes the aggregate report + manifest.
RunReport run_batch(const RunConfig& config);

// Re-runs only the examples without persisted records; refuses on config
// digest mismatch. The final report is identical to an uninterrupted run.
RunReport resume(const std::string& run_dir);

// Side-by-side EM/F1 plus per-category deltas for >= 2 completed runs over the
// same example ids.
nlohmann::ordered_json compare_runs(const std::vector<std::string>& run_dirs);
std::string render_comparison(const nlohmann::ordered_json& comparison);

// Scores an external predictions file (JSON object: id -> prediction text).
RunReport eval_predictions(const RunConfig& config, const std::string& predictions_path);

// Tree dump lookup for the `dump-tree` verb.
std::string read_tree_dump(const std::string& run_dir, const std::string& example_id);

} // namespace stoctot

#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "stoctot/corpus.hpp"
#include "stoctot/strategies.hpp"

namespace stoctot {

enum class ErrorCategory { correct, semantically_correct, wrong_answer, intermediate_answer,
                           no_answer };

std::string to_string(ErrorCategory c);

struct EvalRecord {
    std::string example_id;
    Strategy strategy = Strategy::vanilla;
    std::string prediction;
    std::string gold;
    int em = 0;
    double f1 = 0.0;
    ErrorCategory error_category = ErrorCategory::wrong_answer;
    QuestionType question_type = QuestionType::unknown;
    std::optional<int> hop_count;
    ReasoningType reasoning_type = ReasoningType::unlabeled;
    int backend_calls = 0;
    bool failed = false;
    std::optional<double> p_final;
};

// The reference normalization pipeline: lowercase, strip punctuation, drop
// articles (a, an, the), collapse whitespace — in that order.
std::string normalize_answer(std::string_view s);

// 1 iff the normalized spans match exactly.
int exact_match(std::string_view prediction, std::string_view gold);

struct F1Options {
    // yes/no/noanswer answers score 0 against anything but themselves
    bool yes_no_special_case = true;
};

// Token-level multiset-overlap F1 over normalized whitespace tokens.
double f1_score(std::string_view prediction, std::string_view gold, F1Options options = {});

// Exhaustive, mutually exclusive error taxonomy. intermediate_answers come
// from the reasoning tree's non-leaf answered nodes; engine_failed marks runs
// that produced no usable prediction.
ErrorCategory categorize_error(int em, double f1, std::string_view prediction,
                               const std::vector<std::string>& intermediate_answers,
                               bool engine_failed);

struct BreakdownRow {
    int count = 0;
    double em_pct = 0.0;
    double f1_pct = 0.0;
};

struct AggregateReport {
    int count = 0;
    double em_pct = 0.0; // mean EM x 100
    double f1_pct = 0.0; // mean F1 x 100
    std::map<std::string, BreakdownRow> by_question_type;
    std::map<std::string, BreakdownRow> by_reasoning_type; // empty when unlabeled
    std::map<int, BreakdownRow> by_hop_count;
    std::map<std::string, int> error_counts;
    std::vector<std::string> failed_example_ids;
};

AggregateReport aggregate(const std::vector<EvalRecord>& records);

nlohmann::ordered_json report_to_json(const AggregateReport& report);
std::string report_to_table(const AggregateReport& report);
std::string records_to_csv(const std::vector<EvalRecord>& records);

nlohmann::ordered_json record_to_json(const EvalRecord& record);
EvalRecord record_from_json(const nlohmann::json& j);

} // namespace stoctot

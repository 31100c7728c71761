#include "stoctot/eval.hpp"

#include "stoctot/errors.hpp"
#include "stoctot/text.hpp"

#include <unicode/locid.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <algorithm>
#include <iomanip>
#include <map>
#include <sstream>

namespace stoctot {

namespace {

// ASCII punctuation set removed by the reference pipeline
bool is_removed_punct(UChar32 c) {
    return c < 128 && std::string_view("!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~")
                              .find(static_cast<char>(c)) != std::string_view::npos;
}

bool is_word_char(UChar32 c) {
    return u_isalnum(c) || c == '_';
}

bool is_space_char(UChar32 c) {
    return u_isUWhiteSpace(c) || c == '\t' || c == '\n' || c == '\r';
}

bool is_article(const icu::UnicodeString& run) {
    return run == icu::UnicodeString("a") || run == icu::UnicodeString("an") ||
           run == icu::UnicodeString("the");
}

std::vector<std::string> tokens_of(const std::string& normalized) {
    return text::split_whitespace(normalized);
}

BreakdownRow make_row(const std::vector<const EvalRecord*>& records) {
    BreakdownRow row;
    row.count = static_cast<int>(records.size());
    if (records.empty()) {
        return row;
    }
    double em = 0.0;
    double f1 = 0.0;
    for (const EvalRecord* r : records) {
        em += r->em;
        f1 += r->f1;
    }
    row.em_pct = 100.0 * em / static_cast<double>(records.size());
    row.f1_pct = 100.0 * f1 / static_cast<double>(records.size());
    return row;
}

std::string csv_field(const std::string& s) {
    bool needs_quotes = s.find_first_of(",\"\n\r") != std::string::npos;
    if (!needs_quotes) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') {
            out += "\"\"";
        } else {
            out.push_back(c);
        }
    }
    out.push_back('"');
    return out;
}

} // namespace

std::string to_string(ErrorCategory c) {
    switch (c) {
        case ErrorCategory::correct: return "correct";
        case ErrorCategory::semantically_correct: return "semantically_correct";
        case ErrorCategory::wrong_answer: return "wrong_answer";
        case ErrorCategory::intermediate_answer: return "intermediate_answer";
        case ErrorCategory::no_answer: return "no_answer";
    }
    return "wrong_answer";
}

std::string normalize_answer(std::string_view s) {
    icu::UnicodeString us = icu::UnicodeString::fromUTF8(
        icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
    us.toLower(icu::Locale::getRoot());

    // strip ASCII punctuation
    icu::UnicodeString no_punct;
    for (int32_t i = 0; i < us.length();) {
        UChar32 c = us.char32At(i);
        i += U16_LENGTH(c);
        if (!is_removed_punct(c)) {
            no_punct.append(c);
        }
    }

    // drop whole-word articles, leaving a space in their place
    icu::UnicodeString no_articles;
    icu::UnicodeString run;
    auto flush_run = [&] {
        if (run.isEmpty()) {
            return;
        }
        if (is_article(run)) {
            no_articles.append(static_cast<UChar32>(' '));
        } else {
            no_articles.append(run);
        }
        run.remove();
    };
    for (int32_t i = 0; i < no_punct.length();) {
        UChar32 c = no_punct.char32At(i);
        i += U16_LENGTH(c);
        if (is_word_char(c)) {
            run.append(c);
        } else {
            flush_run();
            no_articles.append(c);
        }
    }
    flush_run();

    // collapse whitespace
    icu::UnicodeString collapsed;
    bool in_token = false;
    for (int32_t i = 0; i < no_articles.length();) {
        UChar32 c = no_articles.char32At(i);
        i += U16_LENGTH(c);
        if (is_space_char(c)) {
            in_token = false;
            continue;
        }
        if (!in_token && !collapsed.isEmpty()) {
            collapsed.append(static_cast<UChar32>(' '));
        }
        collapsed.append(c);
        in_token = true;
    }

    std::string out;
    collapsed.toUTF8String(out);
    return out;
}

int exact_match(std::string_view prediction, std::string_view gold) {
    return normalize_answer(prediction) == normalize_answer(gold) ? 1 : 0;
}

double f1_score(std::string_view prediction, std::string_view gold, F1Options options) {
    std::string np = normalize_answer(prediction);
    std::string ng = normalize_answer(gold);

    if (options.yes_no_special_case) {
        auto special = [](const std::string& s) {
            return s == "yes" || s == "no" || s == "noanswer";
        };
        if ((special(np) || special(ng)) && np != ng) {
            return 0.0;
        }
    }

    std::vector<std::string> pt = tokens_of(np);
    std::vector<std::string> gt = tokens_of(ng);
    std::map<std::string, int> gold_counts;
    for (const auto& t : gt) {
        gold_counts[t]++;
    }
    int num_same = 0;
    for (const auto& t : pt) {
        auto it = gold_counts.find(t);
        if (it != gold_counts.end() && it->second > 0) {
            it->second--;
            num_same++;
        }
    }
    if (num_same == 0) {
        return 0.0;
    }
    double precision = static_cast<double>(num_same) / static_cast<double>(pt.size());
    double recall = static_cast<double>(num_same) / static_cast<double>(gt.size());
    return 2.0 * precision * recall / (precision + recall);
}

ErrorCategory categorize_error(int em, double f1, std::string_view prediction,
                               const std::vector<std::string>& intermediate_answers,
                               bool engine_failed) {
    if (em == 1) {
        return ErrorCategory::correct;
    }
    if (engine_failed || normalize_answer(prediction).empty()) {
        return ErrorCategory::no_answer;
    }
    // checked before the F1 threshold: an intermediate hop's answer can
    // overlap the gold span enough to masquerade as semantically correct
    for (const auto& a : intermediate_answers) {
        if (exact_match(prediction, a) == 1) {
            return ErrorCategory::intermediate_answer;
        }
    }
    if (f1 >= 0.5) {
        return ErrorCategory::semantically_correct;
    }
    return ErrorCategory::wrong_answer;
}

AggregateReport aggregate(const std::vector<EvalRecord>& records) {
    if (records.empty()) {
        throw Error("aggregate: no records");
    }
    AggregateReport report;
    report.count = static_cast<int>(records.size());

    double em = 0.0;
    double f1 = 0.0;
    std::map<std::string, std::vector<const EvalRecord*>> by_qtype;
    std::map<std::string, std::vector<const EvalRecord*>> by_rtype;
    std::map<int, std::vector<const EvalRecord*>> by_hops;
    for (const auto& r : records) {
        em += r.em;
        f1 += r.f1;
        by_qtype[to_string(r.question_type)].push_back(&r);
        if (r.reasoning_type != ReasoningType::unlabeled) {
            by_rtype[to_string(r.reasoning_type)].push_back(&r);
        }
        if (r.hop_count.has_value()) {
            by_hops[*r.hop_count].push_back(&r);
        }
        report.error_counts[to_string(r.error_category)]++;
        if (r.failed) {
            report.failed_example_ids.push_back(r.example_id);
        }
    }
    report.em_pct = 100.0 * em / static_cast<double>(records.size());
    report.f1_pct = 100.0 * f1 / static_cast<double>(records.size());

    for (const auto& [k, v] : by_qtype) {
        report.by_question_type[k] = make_row(v);
    }
    for (const auto& [k, v] : by_rtype) {
        report.by_reasoning_type[k] = make_row(v);
    }
    for (const auto& [k, v] : by_hops) {
        report.by_hop_count[k] = make_row(v);
    }
    return report;
}

nlohmann::ordered_json report_to_json(const AggregateReport& report) {
    nlohmann::ordered_json j;
    j["count"] = report.count;
    j["em"] = report.em_pct;
    j["f1"] = report.f1_pct;

    auto rows = [](const std::map<std::string, BreakdownRow>& m) {
        nlohmann::ordered_json out = nlohmann::ordered_json::object();
        for (const auto& [k, row] : m) {
            out[k] = {{"count", row.count}, {"em", row.em_pct}, {"f1", row.f1_pct}};
        }
        return out;
    };
    j["by_question_type"] = rows(report.by_question_type);
    if (!report.by_reasoning_type.empty()) {
        j["by_reasoning_type"] = rows(report.by_reasoning_type);
    }
    nlohmann::ordered_json hops = nlohmann::ordered_json::object();
    for (const auto& [k, row] : report.by_hop_count) {
        hops[std::to_string(k)] = {{"count", row.count}, {"em", row.em_pct},
                                   {"f1", row.f1_pct}};
    }
    j["by_hop_count"] = hops;
    j["error_counts"] = report.error_counts;
    j["failed_example_ids"] = report.failed_example_ids;
    return j;
}

std::string report_to_table(const AggregateReport& report) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(1);
    out << std::left << std::setw(32) << "group" << std::right << std::setw(8) << "count"
        << std::setw(8) << "EM" << std::setw(8) << "F1" << "\n";
    out << std::string(56, '-') << "\n";
    out << std::left << std::setw(32) << "all" << std::right << std::setw(8) << report.count
        << std::setw(8) << report.em_pct << std::setw(8) << report.f1_pct << "\n";
    auto emit = [&out](const std::string& prefix,
                       const std::map<std::string, BreakdownRow>& rows) {
        for (const auto& [k, row] : rows) {
            out << std::left << std::setw(32) << (prefix + k) << std::right << std::setw(8)
                << row.count << std::setw(8) << row.em_pct << std::setw(8) << row.f1_pct
                << "\n";
        }
    };
    emit("question_type/", report.by_question_type);
    emit("reasoning_type/", report.by_reasoning_type);
    for (const auto& [k, row] : report.by_hop_count) {
        out << std::left << std::setw(32) << ("hops/" + std::to_string(k)) << std::right
            << std::setw(8) << row.count << std::setw(8) << row.em_pct << std::setw(8)
            << row.f1_pct << "\n";
    }
    out << std::string(56, '-') << "\n";
    for (const auto& [k, n] : report.error_counts) {
        out << std::left << std::setw(32) << ("category/" + k) << std::right << std::setw(8)
            << n << "\n";
    }
    if (!report.failed_example_ids.empty()) {
        out << "failed examples: " << text::join(report.failed_example_ids, ", ") << "\n";
    }
    return out.str();
}

std::string records_to_csv(const std::vector<EvalRecord>& records) {
    std::ostringstream out;
    out << "example_id,strategy,prediction,gold,em,f1,error_category,question_type,"
           "hop_count,reasoning_type,backend_calls,failed,p_final\n";
    for (const auto& r : records) {
        out << csv_field(r.example_id) << ',' << to_string(r.strategy) << ','
            << csv_field(r.prediction) << ',' << csv_field(r.gold) << ',' << r.em << ','
            << std::setprecision(17) << r.f1 << ',' << to_string(r.error_category) << ','
            << to_string(r.question_type) << ','
            << (r.hop_count.has_value() ? std::to_string(*r.hop_count) : "") << ','
            << to_string(r.reasoning_type) << ',' << r.backend_calls << ','
            << (r.failed ? "1" : "0") << ','
            << (r.p_final.has_value() ? std::to_string(*r.p_final) : "") << "\n";
    }
    return out.str();
}

nlohmann::ordered_json record_to_json(const EvalRecord& record) {
    nlohmann::ordered_json j;
    j["example_id"] = record.example_id;
    j["strategy"] = to_string(record.strategy);
    j["prediction"] = record.prediction;
    j["gold"] = record.gold;
    j["em"] = record.em;
    j["f1"] = record.f1;
    j["error_category"] = to_string(record.error_category);
    j["question_type"] = to_string(record.question_type);
    j["hop_count"] =
        record.hop_count.has_value() ? nlohmann::ordered_json(*record.hop_count)
                                     : nlohmann::ordered_json(nullptr);
    j["reasoning_type"] = to_string(record.reasoning_type);
    j["backend_calls"] = record.backend_calls;
    j["failed"] = record.failed;
    j["p_final"] = record.p_final.has_value() ? nlohmann::ordered_json(*record.p_final)
                                              : nlohmann::ordered_json(nullptr);
    return j;
}

EvalRecord record_from_json(const nlohmann::json& j) {
    EvalRecord r;
    r.example_id = j.at("example_id").get<std::string>();
    r.strategy = strategy_from_string(j.at("strategy").get<std::string>());
    r.prediction = j.at("prediction").get<std::string>();
    r.gold = j.at("gold").get<std::string>();
    r.em = j.at("em").get<int>();
    r.f1 = j.at("f1").get<double>();
    std::string cat = j.at("error_category").get<std::string>();
    if (cat == "correct") {
        r.error_category = ErrorCategory::correct;
    } else if (cat == "semantically_correct") {
        r.error_category = ErrorCategory::semantically_correct;
    } else if (cat == "intermediate_answer") {
        r.error_category = ErrorCategory::intermediate_answer;
    } else if (cat == "no_answer") {
        r.error_category = ErrorCategory::no_answer;
    } else {
        r.error_category = ErrorCategory::wrong_answer;
    }
    std::string qt = j.at("question_type").get<std::string>();
    r.question_type = qt == "bridge"       ? QuestionType::bridge
                      : qt == "comparison" ? QuestionType::comparison
                                           : QuestionType::unknown;
    if (!j.at("hop_count").is_null()) {
        r.hop_count = j.at("hop_count").get<int>();
    }
    std::string rt = j.at("reasoning_type").get<std::string>();
    r.reasoning_type = rt == "sequential" ? ReasoningType::sequential
                       : rt == "parallel" ? ReasoningType::parallel
                                          : ReasoningType::unlabeled;
    r.backend_calls = j.at("backend_calls").get<int>();
    r.failed = j.at("failed").get<bool>();
    if (!j.at("p_final").is_null()) {
        r.p_final = j.at("p_final").get<double>();
    }
    return r;
}

} // namespace stoctot

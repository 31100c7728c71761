#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace stoctot {

enum class DatasetKind { hotpotqa, musique };
enum class QuestionType { bridge, comparison, unknown };
enum class ReasoningType { sequential, parallel, unlabeled };

std::string to_string(DatasetKind k);
std::string to_string(QuestionType t);
std::string to_string(ReasoningType t);
DatasetKind dataset_kind_from_string(const std::string& s);

struct EvidencePassage {
    std::string title;
    std::vector<std::string> sentences;
};

struct QAExample {
    std::string id;
    std::string question;
    std::string gold_answer;
    QuestionType question_type = QuestionType::unknown;
    std::optional<int> hop_count; // >= 2 when known
    std::vector<EvidencePassage> evidence_pool;
    ReasoningType reasoning_type = ReasoningType::unlabeled;
};

struct Corpus {
    DatasetKind dataset = DatasetKind::hotpotqa;
    std::vector<QAExample> examples; // file order until sampled

    const QAExample* find(const std::string& id) const;
};

// HotpotQA distractor JSON: a top-level list of records with `_id`, `question`,
// `answer`, `type`, and `context` as [title, [sentence, ...]] pairs.
Corpus load_hotpotqa(const std::string& path);

// MuSiQue answerable JSONL: one object per line with `id`, `question`, `answer`
// and `paragraphs` ({title, paragraph_text}). Unanswerable lines are dropped.
Corpus load_musique(const std::string& path);

Corpus load_corpus(DatasetKind kind, const std::string& path);

// Deterministic pseudo-random sample of n examples keeping original order.
// Pure in (corpus size, n, seed); throws BoundsError unless 0 < n <= size.
Corpus sample_subset(const Corpus& corpus, std::size_t n, std::uint64_t seed);

// Sidecar labels: JSON object mapping example id -> "sequential" | "parallel".
// Unknown ids are ignored; unlabeled examples stay unlabeled.
void apply_reasoning_labels(Corpus& corpus, const std::string& sidecar_path);

nlohmann::ordered_json corpus_to_json(const Corpus& corpus);

} // namespace stoctot

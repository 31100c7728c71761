#include "stoctot/corpus.hpp"

#include "stoctot/errors.hpp"
#include "stoctot/rng.hpp"
#include "stoctot/text.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

namespace stoctot {

namespace {

using nlohmann::json;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open file: " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const json& require_key(const json& record, const char* key, std::size_t record_index) {
    auto it = record.find(key);
    if (it == record.end()) {
        throw SchemaError("record " + std::to_string(record_index) +
                              ": missing required key `" + key + "`",
                          record_index, key);
    }
    return *it;
}

std::string require_string(const json& record, const char* key, std::size_t record_index) {
    const json& v = require_key(record, key, record_index);
    if (!v.is_string()) {
        throw SchemaError("record " + std::to_string(record_index) + ": key `" + key +
                              "` is not a string",
                          record_index, key);
    }
    return v.get<std::string>();
}

void check_example(const QAExample& ex, std::size_t record_index) {
    if (ex.id.empty()) {
        throw SchemaError("record " + std::to_string(record_index) + ": empty id",
                          record_index, "id");
    }
    if (ex.question.empty()) {
        throw SchemaError("record " + std::to_string(record_index) + ": empty question",
                          record_index, "question");
    }
    if (ex.gold_answer.empty()) {
        throw SchemaError("record " + std::to_string(record_index) + ": empty answer",
                          record_index, "answer");
    }
    for (const auto& p : ex.evidence_pool) {
        if (p.title.empty()) {
            throw SchemaError("record " + std::to_string(record_index) +
                                  ": evidence passage with empty title",
                              record_index, "context");
        }
        if (p.sentences.empty()) {
            throw SchemaError("record " + std::to_string(record_index) +
                                  ": evidence passage `" + p.title + "` has no sentences",
                              record_index, "context");
        }
    }
}

void check_unique_ids(const Corpus& corpus) {
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < corpus.examples.size(); i++) {
        if (!seen.insert(corpus.examples[i].id).second) {
            throw SchemaError("record " + std::to_string(i) + ": duplicate id `" +
                                  corpus.examples[i].id + "`",
                              i, "id");
        }
    }
}

json parse_json(const std::string& text, std::size_t line_base_offset = 0) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError("malformed JSON at byte " + std::to_string(line_base_offset + e.byte) +
                             ": " + e.what(),
                         line_base_offset + e.byte);
    }
}

// MuSiQue ids look like "2hop__123_456"; the prefix encodes the hop count.
std::optional<int> hops_from_id(const std::string& id) {
    auto pos = id.find("hop");
    if (pos == std::string::npos || pos == 0) {
        return std::nullopt;
    }
    int hops = 0;
    for (std::size_t i = 0; i < pos; i++) {
        char c = id[i];
        if (c < '0' || c > '9') {
            return std::nullopt;
        }
        hops = hops * 10 + (c - '0');
    }
    if (hops < 2) {
        return std::nullopt;
    }
    return hops;
}

} // namespace

const QAExample* Corpus::find(const std::string& id) const {
    for (const auto& ex : examples) {
        if (ex.id == id) {
            return &ex;
        }
    }
    return nullptr;
}

std::string to_string(DatasetKind k) {
    return k == DatasetKind::hotpotqa ? "hotpotqa" : "musique";
}

std::string to_string(QuestionType t) {
    switch (t) {
        case QuestionType::bridge: return "bridge";
        case QuestionType::comparison: return "comparison";
        default: return "unknown";
    }
}

std::string to_string(ReasoningType t) {
    switch (t) {
        case ReasoningType::sequential: return "sequential";
        case ReasoningType::parallel: return "parallel";
        default: return "unlabeled";
    }
}

DatasetKind dataset_kind_from_string(const std::string& s) {
    if (s == "hotpotqa") {
        return DatasetKind::hotpotqa;
    }
    if (s == "musique") {
        return DatasetKind::musique;
    }
    throw ConfigError("unknown dataset kind `" + s + "` (expected hotpotqa or musique)",
                      "dataset-kind");
}

Corpus load_hotpotqa(const std::string& path) {
    json root = parse_json(read_file(path));
    if (!root.is_array()) {
        throw SchemaError("top level is not a list", 0, "(root)");
    }

    Corpus corpus;
    corpus.dataset = DatasetKind::hotpotqa;
    corpus.examples.reserve(root.size());

    for (std::size_t i = 0; i < root.size(); i++) {
        const json& rec = root[i];
        QAExample ex;
        ex.id = require_string(rec, "_id", i);
        ex.question = require_string(rec, "question", i);
        ex.gold_answer = require_string(rec, "answer", i);

        std::string type = require_string(rec, "type", i);
        if (type == "bridge") {
            ex.question_type = QuestionType::bridge;
        } else if (type == "comparison") {
            ex.question_type = QuestionType::comparison;
        } else {
            ex.question_type = QuestionType::unknown;
        }

        // HotpotQA is two-hop by construction.
        ex.hop_count = 2;
        ex.reasoning_type = ReasoningType::unlabeled;

        const json& context = require_key(rec, "context", i);
        if (!context.is_array()) {
            throw SchemaError("record " + std::to_string(i) + ": `context` is not a list", i,
                              "context");
        }
        for (const json& pair : context) {
            if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string() ||
                !pair[1].is_array()) {
                throw SchemaError("record " + std::to_string(i) +
                                      ": `context` entries must be [title, sentence-list] pairs",
                                  i, "context");
            }
            EvidencePassage passage;
            passage.title = pair[0].get<std::string>();
            for (const json& s : pair[1]) {
                passage.sentences.push_back(s.get<std::string>());
            }
            ex.evidence_pool.push_back(std::move(passage));
        }
        if (ex.evidence_pool.empty()) {
            throw SchemaError("record " + std::to_string(i) +
                                  ": empty evidence pool in distractor mode",
                              i, "context");
        }

        check_example(ex, i);
        corpus.examples.push_back(std::move(ex));
    }

    check_unique_ids(corpus);
    return corpus;
}

Corpus load_musique(const std::string& path) {
    std::string content = read_file(path);

    Corpus corpus;
    corpus.dataset = DatasetKind::musique;

    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < content.size()) {
        std::size_t eol = content.find('\n', pos);
        std::size_t len = (eol == std::string::npos) ? content.size() - pos : eol - pos;
        std::string_view line(content.data() + pos, len);
        std::size_t offset = pos;
        pos = (eol == std::string::npos) ? content.size() : eol + 1;
        std::size_t here = line_no++;

        if (text::trim(line).empty()) {
            continue;
        }

        json rec = parse_json(std::string(line), offset);
        QAExample ex;
        ex.id = require_string(rec, "id", here);
        ex.question = require_string(rec, "question", here);
        ex.gold_answer = require_string(rec, "answer", here);
        ex.question_type = QuestionType::unknown;
        ex.reasoning_type = ReasoningType::unlabeled;

        if (auto it = rec.find("answerable");
            it != rec.end() && it->is_boolean() && !it->get<bool>()) {
            continue; // only the answerable split is kept
        }

        ex.hop_count = hops_from_id(ex.id);
        if (!ex.hop_count.has_value()) {
            if (auto it = rec.find("question_decomposition");
                it != rec.end() && it->is_array() && it->size() >= 2) {
                ex.hop_count = static_cast<int>(it->size());
            }
        }

        const json& paragraphs = require_key(rec, "paragraphs", here);
        if (!paragraphs.is_array()) {
            throw SchemaError("line " + std::to_string(here) + ": `paragraphs` is not a list",
                              here, "paragraphs");
        }
        for (const json& p : paragraphs) {
            EvidencePassage passage;
            passage.title = require_string(p, "title", here);
            passage.sentences.push_back(require_string(p, "paragraph_text", here));
            ex.evidence_pool.push_back(std::move(passage));
        }
        if (ex.evidence_pool.empty()) {
            throw SchemaError("line " + std::to_string(here) +
                                  ": empty evidence pool in distractor mode",
                              here, "paragraphs");
        }

        check_example(ex, here);
        corpus.examples.push_back(std::move(ex));
    }

    check_unique_ids(corpus);
    return corpus;
}

Corpus load_corpus(DatasetKind kind, const std::string& path) {
    return kind == DatasetKind::hotpotqa ? load_hotpotqa(path) : load_musique(path);
}

Corpus sample_subset(const Corpus& corpus, std::size_t n, std::uint64_t seed) {
    if (n == 0 || n > corpus.examples.size()) {
        throw BoundsError("sample size " + std::to_string(n) + " out of range for corpus of " +
                          std::to_string(corpus.examples.size()));
    }
    std::vector<std::size_t> picked = sample_indices(corpus.examples.size(), n, seed);
    Corpus out;
    out.dataset = corpus.dataset;
    out.examples.reserve(n);
    for (std::size_t i : picked) {
        out.examples.push_back(corpus.examples[i]);
    }
    return out;
}

void apply_reasoning_labels(Corpus& corpus, const std::string& sidecar_path) {
    json labels = parse_json(read_file(sidecar_path));
    if (!labels.is_object()) {
        throw SchemaError("sidecar top level is not an object", 0, "(root)");
    }
    for (auto& ex : corpus.examples) {
        auto it = labels.find(ex.id);
        if (it == labels.end()) {
            continue;
        }
        std::string v = it->get<std::string>();
        if (v == "sequential") {
            ex.reasoning_type = ReasoningType::sequential;
        } else if (v == "parallel") {
            ex.reasoning_type = ReasoningType::parallel;
        } else {
            throw SchemaError("label for `" + ex.id + "` must be sequential or parallel", 0,
                              ex.id);
        }
    }
}

nlohmann::ordered_json corpus_to_json(const Corpus& corpus) {
    nlohmann::ordered_json out;
    out["dataset"] = to_string(corpus.dataset);
    out["examples"] = nlohmann::ordered_json::array();
    for (const auto& ex : corpus.examples) {
        nlohmann::ordered_json j;
        j["id"] = ex.id;
        j["question"] = ex.question;
        j["answer"] = ex.gold_answer;
        j["question_type"] = to_string(ex.question_type);
        if (ex.hop_count.has_value()) {
            j["hop_count"] = *ex.hop_count;
        } else {
            j["hop_count"] = nullptr;
        }
        j["reasoning_type"] = to_string(ex.reasoning_type);
        j["evidence"] = nlohmann::ordered_json::array();
        for (const auto& p : ex.evidence_pool) {
            nlohmann::ordered_json pj;
            pj["title"] = p.title;
            pj["sentences"] = p.sentences;
            j["evidence"].push_back(std::move(pj));
        }
        out["examples"].push_back(std::move(j));
    }
    return out;
}

} // namespace stoctot

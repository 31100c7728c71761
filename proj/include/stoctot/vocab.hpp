#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "stoctot/corpus.hpp"

namespace stoctot {

// The constraint universe for decoding: normalized words drawn from the
// question and the evidence pool, minus stop words. Immutable after build.
struct VocabularyBank {
    std::set<std::string> words; // non-empty, lowercase, no whitespace
    std::string source_question_id;
    std::string stoplist_id;
};

// Lowercase + NFC, surrounding punctuation stripped, interior hyphens and
// apostrophes kept. Returns nullopt when nothing survives (punctuation-only).
std::optional<std::string> normalize_word(std::string_view raw);

// The shipped 127-entry English stop-word list.
const std::set<std::string>& default_stoplist();
inline constexpr std::string_view kDefaultStoplistId = "en-127";

// One word per line, UTF-8, '#' starts a comment.
std::set<std::string> load_stoplist(const std::string& path);

VocabularyBank build_bank(std::string_view source_question_id, std::string_view question,
                          const std::vector<EvidencePassage>& evidence,
                          const std::set<std::string>& stoplist,
                          std::string_view stoplist_id = kDefaultStoplistId);

// Membership after normalization. Numerals (digits plus . , -) are always
// allowed: dates and quantities are answer material even with an empty bank.
bool contains(const VocabularyBank& bank, std::string_view candidate);

// Ordered list of the answer's out-of-bank words (normalized forms). Words
// that normalize to nothing are separators, not violations. Empty list means
// the answer is fully grounded.
std::vector<std::string> violation_report(const VocabularyBank& bank, std::string_view answer);

// Stable identity for fixture digests: words + stoplist id.
std::string bank_digest(const VocabularyBank& bank);

} // namespace stoctot

#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stoctot/backend.hpp"

namespace stoctot {

// Capability contract for backends that expose per-token scores, which is what
// makes decode-time score masking possible.
class TokenScorer {
public:
    virtual ~TokenScorer() = default;

    virtual int vocab_size() const = 0;
    virtual std::string_view token_text(int token_id) const = 0;
    virtual int eos_id() const = 0;

    // Raw scores for the next token given the prompt and the generated prefix.
    virtual std::vector<float> step_scores(const std::string& prompt,
                                           std::span<const int> prefix) = 0;

    // Greedy longest-match tokenization; nullopt when the text cannot be
    // represented with this vocabulary.
    std::optional<std::vector<int>> encode_word(std::string_view word) const;
};

// Bank words the scorer's tokenizer cannot represent (empty = full coverage).
std::vector<std::string> uncovered_bank_words(const TokenScorer& scorer,
                                              const VocabularyBank& bank);

// --- word-boundary masking -------------------------------------------------
// The bank is defined over words but decoding emits subword tokens, so the
// mask tracks the in-progress word: a token is permitted iff every word it
// completes is bank-allowed and the trailing fragment can still extend to a
// bank word (or an always-allowed numeral).

// Completed word acceptable at a boundary: in-bank, numeral, or pure punctuation.
bool word_completes(const VocabularyBank& bank, std::string_view word);

// The pending fragment can still grow into something acceptable.
bool prefix_viable(const VocabularyBank& bank, std::string_view pending);

// Appending token_text to the pending fragment keeps the output bank-clean.
// On success *pending_after holds the new fragment.
bool token_allowed(const VocabularyBank& bank, std::string_view pending,
                   std::string_view token_text, std::string* pending_after = nullptr);

bool eos_allowed(const VocabularyBank& bank, std::string_view pending);

std::vector<bool> allowed_token_mask(const TokenScorer& scorer, const VocabularyBank& bank,
                                     std::string_view pending);

// Drops a trailing fragment that never reached a word boundary.
std::string finalize_constrained_text(const VocabularyBank& bank, std::string text);

// Score-masked decoding: at every step each token that cannot extend to a word
// in the bank has its score forced to -inf. Throws ConstraintExhaustedError
// when nothing is permitted at step 0. The reply always audits clean:
// violation_report(bank, reply.text) is empty.
BackendReply generate_constrained(const BackendRequest& request, TokenScorer& scorer,
                                  std::uint64_t seed = 0);

// A Backend over a TokenScorer; generate() is ordinary unconstrained decoding.
class LocalScoredBackend : public Backend {
public:
    explicit LocalScoredBackend(std::shared_ptr<TokenScorer> scorer, std::uint64_t seed = 0);

    BackendReply generate(const BackendRequest& request) override;
    std::string describe() const override { return "local"; }

    TokenScorer& scorer() { return *scorer_; }
    std::uint64_t seed() const { return seed_; }

private:
    std::shared_ptr<TokenScorer> scorer_;
    std::uint64_t seed_;
    std::mutex mutex_;
};

// Deterministic prompt-frequency scorer: vocabulary = the given words plus
// digits and separators; tokens that occur in the prompt score higher. Used by
// the CLI's offline `local` backend so hard-mode runs work with no model.
std::shared_ptr<TokenScorer> make_heuristic_scorer(const std::vector<std::string>& words);

} // namespace stoctot

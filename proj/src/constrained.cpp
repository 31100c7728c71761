#include "stoctot/token_scorer.hpp"

#include "stoctot/digest.hpp"
#include "stoctot/errors.hpp"
#include "stoctot/rng.hpp"
#include "stoctot/text.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace stoctot {

namespace {

constexpr float kNegInf = -std::numeric_limits<float>::infinity();

// all bytes drawn from the numeral alphabet
bool numeral_shaped(std::string_view s) {
    for (char c : s) {
        if ((c < '0' || c > '9') && c != '.' && c != ',' && c != '-') {
            return false;
        }
    }
    return !s.empty();
}

std::uint64_t mix_seed(std::uint64_t seed, const BackendRequest& request) {
    std::string digest = request_digest(request);
    std::uint64_t h = 1469598103934665603ULL; // FNV-1a over the hex digest
    for (char c : digest) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    return h ^ seed;
}

struct DecodeResult {
    std::string text;
    FinishReason finish = FinishReason::length;
    int tokens = 0;
};

// one decoding loop for both constrained and unconstrained generation
DecodeResult decode(const BackendRequest& request, TokenScorer& scorer,
                    const VocabularyBank* bank, std::uint64_t seed) {
    const std::string prompt = request.system_text.empty()
                                   ? request.user_text
                                   : request.system_text + "\n" + request.user_text;
    const int eos = scorer.eos_id();
    const int vocab = scorer.vocab_size();
    SplitMix64 rng(mix_seed(seed, request));

    DecodeResult out;
    std::string pending;
    std::vector<int> prefix;

    for (int step = 0; step < request.params.max_new_tokens; step++) {
        std::vector<float> scores = scorer.step_scores(prompt, prefix);

        std::vector<std::string> pending_after(static_cast<std::size_t>(vocab));
        bool any_allowed = false;
        bool eos_ok = true;
        for (int id = 0; id < vocab; id++) {
            if (id == eos) {
                continue;
            }
            bool ok = true;
            if (bank != nullptr) {
                ok = token_allowed(*bank, pending, scorer.token_text(id), &pending_after[id]);
            }
            if (!ok) {
                scores[id] = kNegInf;
            } else {
                any_allowed = true;
            }
        }
        if (bank != nullptr) {
            eos_ok = eos_allowed(*bank, pending);
            if (!eos_ok) {
                scores[eos] = kNegInf;
            }
        }

        if (bank != nullptr && step == 0 && !any_allowed) {
            // only eos (at best) survives the mask: nothing can be said at all
            throw ConstraintExhaustedError(
                "constraint bank permits no token at the first decoding step");
        }
        if (!any_allowed && !eos_ok) {
            out.finish = FinishReason::length;
            break;
        }

        int chosen = -1;
        if (request.params.temperature <= 0.0) {
            float best = kNegInf;
            for (int id = 0; id < vocab; id++) {
                if (scores[id] > best) {
                    best = scores[id];
                    chosen = id;
                }
            }
        } else {
            // softmax with temperature, then nucleus (top-p) truncation
            double max_score = kNegInf;
            for (int id = 0; id < vocab; id++) {
                max_score = std::max(max_score, static_cast<double>(scores[id]));
            }
            std::vector<std::pair<double, int>> probs;
            double total = 0.0;
            for (int id = 0; id < vocab; id++) {
                if (scores[id] == kNegInf) {
                    continue;
                }
                double p = std::exp((scores[id] - max_score) / request.params.temperature);
                probs.emplace_back(p, id);
                total += p;
            }
            std::sort(probs.begin(), probs.end(), [](const auto& a, const auto& b) {
                return a.first != b.first ? a.first > b.first : a.second < b.second;
            });
            double top_p = std::clamp(request.params.top_k_or_p, 0.0, 1.0);
            double kept = 0.0;
            std::size_t cut = 0;
            for (; cut < probs.size(); cut++) {
                kept += probs[cut].first / total;
                if (kept >= top_p) {
                    cut++;
                    break;
                }
            }
            if (cut == 0) {
                cut = 1;
            }
            double mass = 0.0;
            for (std::size_t i = 0; i < cut; i++) {
                mass += probs[i].first;
            }
            double draw = rng.next_double() * mass;
            double acc = 0.0;
            chosen = probs[cut - 1].second;
            for (std::size_t i = 0; i < cut; i++) {
                acc += probs[i].first;
                if (draw < acc) {
                    chosen = probs[i].second;
                    break;
                }
            }
        }

        if (chosen < 0 || chosen == eos) {
            out.finish = FinishReason::stop;
            break;
        }

        out.text += scorer.token_text(chosen);
        out.tokens++;
        prefix.push_back(chosen);
        if (bank != nullptr) {
            pending = pending_after[chosen];
        }

        bool stopped = false;
        for (const std::string& stop_seq : request.params.stop_sequences) {
            if (!stop_seq.empty() && out.text.size() >= stop_seq.size() &&
                out.text.compare(out.text.size() - stop_seq.size(), stop_seq.size(), stop_seq) ==
                    0) {
                out.text.erase(out.text.size() - stop_seq.size());
                out.finish = FinishReason::stop;
                stopped = true;
                break;
            }
        }
        if (stopped) {
            break;
        }
    }

    if (bank != nullptr) {
        out.text = finalize_constrained_text(*bank, std::move(out.text));
    }
    return out;
}

} // namespace

std::optional<std::vector<int>> TokenScorer::encode_word(std::string_view word) const {
    std::vector<int> ids;
    std::size_t pos = 0;
    while (pos < word.size()) {
        int best_id = -1;
        std::size_t best_len = 0;
        for (int id = 0; id < vocab_size(); id++) {
            if (id == eos_id()) {
                continue;
            }
            std::string_view tok = token_text(id);
            if (tok.empty() || tok.size() < best_len || tok.size() > word.size() - pos) {
                continue;
            }
            if (word.compare(pos, tok.size(), tok) == 0 && tok.size() > best_len) {
                best_len = tok.size();
                best_id = id;
            }
        }
        if (best_id < 0) {
            return std::nullopt;
        }
        ids.push_back(best_id);
        pos += best_len;
    }
    return ids;
}

std::vector<std::string> uncovered_bank_words(const TokenScorer& scorer,
                                              const VocabularyBank& bank) {
    std::vector<std::string> out;
    for (const auto& w : bank.words) {
        if (!scorer.encode_word(w).has_value()) {
            out.push_back(w);
        }
    }
    return out;
}

bool word_completes(const VocabularyBank& bank, std::string_view word) {
    std::optional<std::string> w = normalize_word(word);
    if (!w.has_value()) {
        return true; // punctuation-only: a separator, not a word
    }
    if (text::is_numeral(*w)) {
        return true;
    }
    return bank.words.count(*w) != 0;
}

bool prefix_viable(const VocabularyBank& bank, std::string_view pending) {
    if (pending.empty()) {
        return true;
    }
    std::optional<std::string> w = normalize_word(pending);
    if (!w.has_value()) {
        return true; // nothing lexical committed yet
    }
    if (numeral_shaped(*w)) {
        return true; // may complete as a numeral
    }
    auto it = bank.words.lower_bound(*w);
    return it != bank.words.end() && it->size() >= w->size() &&
           it->compare(0, w->size(), *w) == 0;
}

bool token_allowed(const VocabularyBank& bank, std::string_view pending,
                   std::string_view token_text, std::string* pending_after) {
    std::string cur(pending);
    for (char c : token_text) {
        if (text::is_ascii_space(c)) {
            if (!cur.empty()) {
                if (!word_completes(bank, cur)) {
                    return false;
                }
                cur.clear();
            }
        } else {
            cur.push_back(c);
        }
    }
    if (!prefix_viable(bank, cur)) {
        return false;
    }
    if (pending_after != nullptr) {
        *pending_after = std::move(cur);
    }
    return true;
}

bool eos_allowed(const VocabularyBank& bank, std::string_view pending) {
    return pending.empty() || word_completes(bank, pending);
}

std::vector<bool> allowed_token_mask(const TokenScorer& scorer, const VocabularyBank& bank,
                                     std::string_view pending) {
    std::vector<bool> mask(static_cast<std::size_t>(scorer.vocab_size()), false);
    for (int id = 0; id < scorer.vocab_size(); id++) {
        if (id == scorer.eos_id()) {
            mask[id] = eos_allowed(bank, pending);
        } else {
            mask[id] = token_allowed(bank, pending, scorer.token_text(id));
        }
    }
    return mask;
}

std::string finalize_constrained_text(const VocabularyBank& bank, std::string text) {
    std::size_t end = text.size();
    while (end > 0 && text::is_ascii_space(text[end - 1])) {
        end--;
    }
    std::size_t word_start = end;
    while (word_start > 0 && !text::is_ascii_space(text[word_start - 1])) {
        word_start--;
    }
    std::string_view last(text.data() + word_start, end - word_start);
    if (!last.empty() && !word_completes(bank, last)) {
        text.erase(word_start);
    }
    while (!text.empty() && text::is_ascii_space(text.back())) {
        text.pop_back();
    }
    return text;
}

BackendReply generate_constrained(const BackendRequest& request, TokenScorer& scorer,
                                  std::uint64_t seed) {
    if (!request.constraint) {
        throw Error("generate_constrained requires a constraint bank");
    }
    auto started = std::chrono::steady_clock::now();
    DecodeResult r = decode(request, scorer, request.constraint.get(), seed);

    BackendReply reply;
    reply.text = std::move(r.text);
    reply.finish_reason = r.finish;
    reply.usage.completion_tokens = r.tokens;
    reply.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - started);
    return reply;
}

LocalScoredBackend::LocalScoredBackend(std::shared_ptr<TokenScorer> scorer, std::uint64_t seed)
    : scorer_(std::move(scorer)), seed_(seed) {}

BackendReply LocalScoredBackend::generate(const BackendRequest& request) {
    if (request.user_text.empty()) {
        throw Error("backend request with empty user_text");
    }
    auto started = std::chrono::steady_clock::now();
    std::lock_guard lock(mutex_);
    DecodeResult r = decode(request, *scorer_, nullptr, seed_);

    BackendReply reply;
    reply.text = std::move(r.text);
    reply.finish_reason = r.finish;
    reply.usage.completion_tokens = r.tokens;
    reply.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - started);
    return reply;
}

namespace {

class HeuristicScorer : public TokenScorer {
public:
    explicit HeuristicScorer(const std::vector<std::string>& words) {
        for (const auto& w : words) {
            if (!w.empty()) {
                tokens_.push_back(w);
            }
        }
        for (char d = '0'; d <= '9'; d++) {
            tokens_.push_back(std::string(1, d));
        }
        tokens_.push_back(" ");
        tokens_.push_back(".");
        eos_ = static_cast<int>(tokens_.size());
        tokens_.push_back("<eos>");
    }

    int vocab_size() const override { return static_cast<int>(tokens_.size()); }
    std::string_view token_text(int id) const override { return tokens_[id]; }
    int eos_id() const override { return eos_; }

    std::vector<float> step_scores(const std::string& prompt,
                                   std::span<const int> prefix) override {
        std::vector<float> scores(tokens_.size(), 0.0f);
        int last = prefix.empty() ? -1 : prefix.back();
        for (std::size_t id = 0; id < tokens_.size(); id++) {
            if (static_cast<int>(id) == eos_) {
                // favor short outputs: eos overtakes everything past a few tokens
                scores[id] = -4.0f + 2.0f * static_cast<float>(prefix.size());
                continue;
            }
            const std::string& tok = tokens_[id];
            std::uint64_t h = 14695981039346656037ULL;
            for (char c : tok) {
                h = (h ^ static_cast<unsigned char>(c)) * 1099511628211ULL;
            }
            h ^= (prefix.size() + 1) * 0x9E3779B97F4A7C15ULL;
            float jitter = static_cast<float>(h % 997) / 997.0f;

            if (tok == " " || tok == ".") {
                // separators alternate with words instead of dominating
                scores[id] = (last >= 0 && tokens_[static_cast<std::size_t>(last)] != " ")
                                 ? 1.5f + 0.1f * jitter
                                 : -1.0f;
                continue;
            }
            float occurrences = 0.0f;
            for (std::size_t pos = prompt.find(tok); pos != std::string::npos;
                 pos = prompt.find(tok, pos + 1)) {
                occurrences += 1.0f;
            }
            if (last == static_cast<int>(id)) {
                occurrences -= 2.0f; // discourage immediate repeats
            }
            scores[id] = occurrences + jitter;
        }
        return scores;
    }

private:
    std::vector<std::string> tokens_;
    int eos_ = 0;
};

} // namespace

std::shared_ptr<TokenScorer> make_heuristic_scorer(const std::vector<std::string>& words) {
    return std::make_shared<HeuristicScorer>(words);
}

} // namespace stoctot

#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <semaphore>
#include <string>
#include <vector>

#include "stoctot/vocab.hpp"

namespace stoctot {

enum class FinishReason { stop, length, error };

std::string to_string(FinishReason r);

struct TokenUsage {
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
};

struct GenerationParams {
    double temperature = 0.5;
    double top_k_or_p = 1.0; // sent as top_p on the chat-completions wire
    int max_new_tokens = 256;
    std::vector<std::string> stop_sequences;
};

struct BackendRequest {
    std::string system_text;
    std::string user_text; // must be non-empty
    GenerationParams params;
    std::shared_ptr<const VocabularyBank> constraint; // null = unconstrained
    std::uint32_t sample_index = 0; // distinguishes independent samples of one prompt
};

struct BackendReply {
    std::string text;
    FinishReason finish_reason = FinishReason::stop;
    TokenUsage usage;
    std::chrono::milliseconds latency{0};
};

// Cryptographic digest of the canonicalized request; stable across field
// reordering and shared by recording and replay.
std::string request_digest(const BackendRequest& request);

class Backend {
public:
    virtual ~Backend() = default;

    // Returns model text. Refusals are ordinary text; errors are exceptions
    // (TransportError, FixtureMissError).
    virtual BackendReply generate(const BackendRequest& request) = 0;

    virtual std::string describe() const = 0;
};

struct AuditedReply {
    BackendReply reply;
    std::vector<std::string> violations; // audit only, never fatal
};

// Prompt-based constrained decoding: the caller renders the vocabulary-bank
// instruction into user_text; the reply is post-audited with violation_report.
AuditedReply generate_prompt_constrained(Backend& backend, const BackendRequest& request);

// Counts calls and keeps an arrival-order log of user texts; shared by the
// call-budget and pruning-economy checks.
class CountingBackend : public Backend {
public:
    explicit CountingBackend(Backend& inner) : inner_(inner) {}

    BackendReply generate(const BackendRequest& request) override;
    std::string describe() const override { return "counting(" + inner_.describe() + ")"; }

    int call_count() const;
    std::vector<std::string> user_texts() const;

private:
    Backend& inner_;
    mutable std::mutex mutex_;
    std::vector<std::string> user_texts_;
};

// Engine-level cap on in-flight requests.
class ThrottledBackend : public Backend {
public:
    ThrottledBackend(Backend& inner, int max_in_flight);

    BackendReply generate(const BackendRequest& request) override;
    std::string describe() const override { return "throttled(" + inner_.describe() + ")"; }

private:
    Backend& inner_;
    std::counting_semaphore<> gate_;
};

} // namespace stoctot

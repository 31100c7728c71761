#include "stoctot/backend.hpp"

#include "stoctot/digest.hpp"
#include "stoctot/errors.hpp"

#include <json.hpp>

namespace stoctot {

std::string to_string(FinishReason r) {
    switch (r) {
        case FinishReason::stop: return "stop";
        case FinishReason::length: return "length";
        case FinishReason::error: return "error";
    }
    return "stop";
}

std::string request_digest(const BackendRequest& request) {
    nlohmann::ordered_json j;
    j["system"] = request.system_text;
    j["user"] = request.user_text;
    j["temperature"] = request.params.temperature;
    j["top_k_or_p"] = request.params.top_k_or_p;
    j["max_new_tokens"] = request.params.max_new_tokens;
    j["stop"] = request.params.stop_sequences;
    if (request.constraint) {
        j["constraint"] = bank_digest(*request.constraint);
    } else {
        j["constraint"] = nullptr;
    }
    j["sample_index"] = request.sample_index;
    return sha256_hex(j.dump());
}

AuditedReply generate_prompt_constrained(Backend& backend, const BackendRequest& request) {
    if (!request.constraint) {
        throw Error("generate_prompt_constrained requires a constraint bank");
    }
    AuditedReply out;
    out.reply = backend.generate(request);
    out.violations = violation_report(*request.constraint, out.reply.text);
    return out;
}

BackendReply CountingBackend::generate(const BackendRequest& request) {
    {
        std::lock_guard lock(mutex_);
        user_texts_.push_back(request.user_text);
    }
    return inner_.generate(request);
}

int CountingBackend::call_count() const {
    std::lock_guard lock(mutex_);
    return static_cast<int>(user_texts_.size());
}

std::vector<std::string> CountingBackend::user_texts() const {
    std::lock_guard lock(mutex_);
    return user_texts_;
}

ThrottledBackend::ThrottledBackend(Backend& inner, int max_in_flight)
    : inner_(inner), gate_(max_in_flight > 0 ? max_in_flight : 1) {}

BackendReply ThrottledBackend::generate(const BackendRequest& request) {
    gate_.acquire();
    try {
        BackendReply reply = inner_.generate(request);
        gate_.release();
        return reply;
    } catch (...) {
        gate_.release();
        throw;
    }
}

} // namespace stoctot

#include "stoctot/http_backend.hpp"

#include "stoctot/errors.hpp"

#include <httplib.h>
#include <json.hpp>

#include <cstdlib>
#include <thread>

namespace stoctot {

using nlohmann::json;

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
    if (const char* key = std::getenv(config_.api_key_env.c_str())) {
        api_key_ = key;
    }
}

std::string HttpBackend::describe() const {
    return "http(" + config_.base_url + config_.path + ", model=" + config_.model + ")";
}

BackendReply HttpBackend::generate(const BackendRequest& request) {
    if (request.user_text.empty()) {
        throw Error("backend request with empty user_text");
    }

    json body;
    body["model"] = config_.model;
    body["messages"] = json::array();
    if (!request.system_text.empty()) {
        body["messages"].push_back({{"role", "system"}, {"content", request.system_text}});
    }
    body["messages"].push_back({{"role", "user"}, {"content", request.user_text}});
    body["temperature"] = request.params.temperature;
    body["top_p"] = request.params.top_k_or_p;
    body["max_tokens"] = request.params.max_new_tokens;
    if (!request.params.stop_sequences.empty()) {
        body["stop"] = request.params.stop_sequences;
    }
    std::string payload = body.dump();

    httplib::Headers headers;
    if (!api_key_.empty()) {
        headers.emplace("Authorization", "Bearer " + api_key_);
    }

    std::string last_error;
    int attempts = 0;
    auto started = std::chrono::steady_clock::now();
    for (; attempts < config_.max_attempts; attempts++) {
        if (attempts > 0) {
            int backoff = config_.backoff_initial_ms << (attempts - 1);
            if (backoff > config_.backoff_cap_ms) {
                backoff = config_.backoff_cap_ms;
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
        }

        httplib::Client client(config_.base_url);
        client.set_connection_timeout(config_.timeout_seconds, 0);
        client.set_read_timeout(config_.timeout_seconds, 0);
        client.set_write_timeout(config_.timeout_seconds, 0);

        httplib::Result res = client.Post(config_.path, headers, payload, "application/json");
        if (!res) {
            last_error = "transport failure: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status < 200 || res->status >= 300) {
            last_error = "http status " + std::to_string(res->status);
            continue;
        }

        json reply_json;
        try {
            reply_json = json::parse(res->body);
        } catch (const json::parse_error& e) {
            last_error = std::string("unparseable response body: ") + e.what();
            continue;
        }

        BackendReply reply;
        try {
            const json& choice = reply_json.at("choices").at(0);
            reply.text = choice.at("message").at("content").is_null()
                             ? ""
                             : choice.at("message").at("content").get<std::string>();
            std::string finish = choice.value("finish_reason", "stop");
            reply.finish_reason =
                finish == "length" ? FinishReason::length : FinishReason::stop;
        } catch (const json::exception& e) {
            last_error = std::string("unexpected response shape: ") + e.what();
            continue;
        }
        if (auto usage = reply_json.find("usage"); usage != reply_json.end()) {
            reply.usage.prompt_tokens = usage->value("prompt_tokens", 0);
            reply.usage.completion_tokens = usage->value("completion_tokens", 0);
        }
        reply.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::steady_clock::now() - started);
        return reply;
    }

    throw TransportError("backend unreachable after " + std::to_string(attempts) +
                             " attempts: " + last_error,
                         attempts);
}

} // namespace stoctot

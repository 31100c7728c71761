#include "stoctot/scripted_backend.hpp"

#include "stoctot/digest.hpp"
#include "stoctot/errors.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace stoctot {

using nlohmann::json;

ScriptedBackend::ScriptedBackend(const std::string& fixture_path) {
    std::ifstream in(fixture_path, std::ios::binary);
    if (!in) {
        throw Error("cannot open fixture file: " + fixture_path);
    }
    json root;
    try {
        in >> root;
    } catch (const json::parse_error& e) {
        throw ParseError("fixture file " + fixture_path + ": " + e.what(), e.byte);
    }

    for (auto it = root.begin(); it != root.end(); ++it) {
        Entry entry;
        const json& v = it.value();
        if (v.is_string()) {
            entry.text = v.get<std::string>();
        } else {
            entry.text = v.at("reply").get<std::string>();
            if (auto u = v.find("usage"); u != v.end()) {
                entry.usage.prompt_tokens = u->value("prompt_tokens", 0);
                entry.usage.completion_tokens = u->value("completion_tokens", 0);
            }
        }
        entries_[it.key()] = std::move(entry);
    }
}

void ScriptedBackend::save(const std::string& path) const {
    std::lock_guard lock(mutex_);
    nlohmann::ordered_json root = nlohmann::ordered_json::object();
    for (const auto& [digest, entry] : entries_) {
        nlohmann::ordered_json v;
        v["reply"] = entry.text;
        v["usage"] = {{"prompt_tokens", entry.usage.prompt_tokens},
                      {"completion_tokens", entry.usage.completion_tokens}};
        root[digest] = std::move(v);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write fixture file: " + path);
    }
    out << root.dump(2) << '\n';
}

void ScriptedBackend::set_responder(Responder responder) {
    std::lock_guard lock(mutex_);
    responder_ = std::move(responder);
}

void ScriptedBackend::add_fixture(const BackendRequest& request, const std::string& text) {
    record_fixture(request_digest(request), text);
}

void ScriptedBackend::record_fixture(const std::string& digest, const std::string& text,
                                     TokenUsage usage) {
    std::lock_guard lock(mutex_);
    auto it = entries_.find(digest);
    if (it != entries_.end()) {
        if (it->second.text != text) {
            throw FixtureConflictError(
                "fixture conflict for digest " + digest + ": existing reply differs", digest);
        }
        return;
    }
    entries_[digest] = Entry{text, usage};
}

BackendReply ScriptedBackend::generate(const BackendRequest& request) {
    if (request.user_text.empty()) {
        throw Error("backend request with empty user_text");
    }
    std::string digest = request_digest(request);

    Responder responder;
    {
        std::lock_guard lock(mutex_);
        auto it = entries_.find(digest);
        if (it != entries_.end()) {
            BackendReply reply;
            reply.text = it->second.text;
            reply.usage = it->second.usage;
            reply.finish_reason = FinishReason::stop;
            return reply;
        }
        responder = responder_;
    }
    if (responder) {
        // invoked outside the lock: responders may be slow, and concurrent
        // calls for the same digest converge on an identical entry anyway
        std::optional<std::string> scripted = responder(request);
        if (scripted.has_value()) {
            record_fixture(digest, *scripted);
            BackendReply reply;
            reply.text = *scripted;
            reply.finish_reason = FinishReason::stop;
            return reply;
        }
    }
    throw FixtureMissError("no fixture entry for request digest " + digest, digest);
}

std::string ScriptedBackend::fixture_digest() const {
    std::lock_guard lock(mutex_);
    std::string buf;
    for (const auto& [digest, entry] : entries_) {
        buf += digest;
        buf.push_back('\n');
        buf += entry.text;
        buf.push_back('\n');
    }
    return sha256_hex(buf);
}

std::size_t ScriptedBackend::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

BackendReply RecordingBackend::generate(const BackendRequest& request) {
    try {
        return store_.generate(request);
    } catch (const FixtureMissError&) {
        BackendReply reply = inner_.generate(request);
        store_.record_fixture(request_digest(request), reply.text, reply.usage);
        return reply;
    }
}

} // namespace stoctot

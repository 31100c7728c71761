#pragma once

#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>

#include "stoctot/backend.hpp"

namespace stoctot {

// Deterministic record/replay backend. Replies are a pure function of request
// content (keyed by request_digest), never of arrival order, so whole-pipeline
// runs are reproducible under any scheduling.
class ScriptedBackend : public Backend {
public:
    // Scripts a reply when no fixture entry matches; nullopt means miss.
    using Responder = std::function<std::optional<std::string>(const BackendRequest&)>;

    ScriptedBackend() = default;

    // load a fixture file written by save()
    explicit ScriptedBackend(const std::string& fixture_path);
    void save(const std::string& path) const;

    // Responder replies are recorded into the fixture map as they occur.
    void set_responder(Responder responder);

    void add_fixture(const BackendRequest& request, const std::string& text);
    void record_fixture(const std::string& digest, const std::string& text,
                        TokenUsage usage = {});

    BackendReply generate(const BackendRequest& request) override;
    std::string describe() const override { return "scripted"; }

    // Digest over all entries, for run manifests.
    std::string fixture_digest() const;
    std::size_t size() const;

private:
    struct Entry {
        std::string text;
        TokenUsage usage;
    };

    mutable std::mutex mutex_;
    std::map<std::string, Entry> entries_; // digest -> reply, sorted for stable dumps
    Responder responder_;
};

// Record-through cache: replies already in the store replay as-is; everything
// else hits the inner backend once and is recorded. A recorded run and its
// later replay therefore see identical replies.
class RecordingBackend : public Backend {
public:
    RecordingBackend(Backend& inner, ScriptedBackend& store) : inner_(inner), store_(store) {}

    BackendReply generate(const BackendRequest& request) override;
    std::string describe() const override { return "recording(" + inner_.describe() + ")"; }

private:
    Backend& inner_;
    ScriptedBackend& store_;
};

} // namespace stoctot

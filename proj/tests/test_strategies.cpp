#include <doctest.h>

#include "stoctot/errors.hpp"
#include "stoctot/scripted_backend.hpp"
#include "stoctot/strategies.hpp"

#include "support/fig1_world.hpp"
#include "support/test_util.hpp"

using namespace stoctot;
using namespace stoctot::testing;

TEST_CASE("extract_final_answer takes the last marker line") {
    bool found = false;
    CHECK(extract_final_answer("reasoning...\nAnswer: Japan", found) == "Japan");
    CHECK(found);
    CHECK(extract_final_answer("Answer: draft\nmore\nAnswer: final one", found) ==
          "final one");
    CHECK(extract_final_answer("no marker at all", found) == "no marker at all");
    CHECK_FALSE(found);
}

TEST_CASE("vanilla is a single direct call") {
    ScriptedBackend backend;
    backend.set_responder([](const BackendRequest& req) -> std::optional<std::string> {
        if (req.user_text.find("Give the answer directly") != std::string::npos) {
            return std::string("yes");
        }
        return std::nullopt;
    });
    CountingBackend counting(backend);
    TemplateRegistry reg = TemplateRegistry::builtin();

    StrategyOutcome out = run_vanilla(fig1_example(), counting, reg);
    CHECK(out.answer == "yes");
    CHECK(out.backend_calls == 1);
    CHECK(counting.call_count() == 1);
    CHECK_FALSE(out.failed);
}

TEST_CASE("vanilla transport failure maps to a failed outcome") {
    ScriptedBackend backend; // miss -> but strategies only absorb transport errors
    TemplateRegistry reg = TemplateRegistry::builtin();
    CHECK_THROWS_AS(run_vanilla(fig1_example(), backend, reg), FixtureMissError);

    class Dead : public Backend {
    public:
        BackendReply generate(const BackendRequest&) override {
            throw TransportError("down", 3);
        }
        std::string describe() const override { return "dead"; }
    } dead;
    StrategyOutcome out = run_vanilla(fig1_example(), dead, reg);
    CHECK(out.failed);
    CHECK(out.answer.empty());
}

TEST_CASE("cot extracts after the marker and flags its absence") {
    ScriptedBackend backend;
    backend.set_responder([](const BackendRequest& req) -> std::optional<std::string> {
        if (req.user_text.find("Reason step by step") != std::string::npos) {
            return std::string("First find the actor. Jackie Chan fits.\nAnswer: Rush Hour");
        }
        return std::nullopt;
    });
    CountingBackend counting(backend);
    TemplateRegistry reg = TemplateRegistry::builtin();

    StrategyOutcome out = run_cot(fig1_example(), counting, reg);
    CHECK(out.answer == "Rush Hour");
    CHECK(out.backend_calls == 1);

    SUBCASE("missing marker falls back to the whole reply") {
        ScriptedBackend bare;
        bare.set_responder(
            [](const BackendRequest&) { return std::optional<std::string>("just prose"); });
        StrategyOutcome fallback = run_cot(fig1_example(), bare, reg);
        CHECK(fallback.answer == "just prose");
        CHECK(fallback.trace.find("no Answer: marker") != std::string::npos);
    }
}

TEST_CASE("tot majority vote over normalized answers") {
    TemplateRegistry reg = TemplateRegistry::builtin();

    SUBCASE("votes {a, a, b} pick a") {
        ScriptedBackend backend;
        backend.set_responder([](const BackendRequest& req) -> std::optional<std::string> {
            switch (req.sample_index) {
                case 0: return std::string("path one\nAnswer: Rush Hour");
                case 1: return std::string("path two\nAnswer: the rush hour!"); // same normalized
                default: return std::string("path three\nAnswer: Money Talks");
            }
        });
        CountingBackend counting(backend);
        StrategyOutcome out = run_tot(fig1_example(), counting, reg, 3);
        CHECK(out.answer == "Rush Hour");
        CHECK(out.backend_calls == 3);
    }
    SUBCASE("three-way tie goes to the lowest path index") {
        ScriptedBackend backend;
        backend.set_responder([](const BackendRequest& req) -> std::optional<std::string> {
            switch (req.sample_index) {
                case 0: return std::string("Answer: alpha");
                case 1: return std::string("Answer: beta");
                default: return std::string("Answer: gamma");
            }
        });
        StrategyOutcome out = run_tot(fig1_example(), backend, reg, 3);
        CHECK(out.answer == "alpha");
    }
    SUBCASE("n_paths = 1 degenerates to a single chain") {
        ScriptedBackend backend;
        backend.set_responder(
            [](const BackendRequest&) { return std::optional<std::string>("Answer: solo"); });
        CountingBackend counting(backend);
        StrategyOutcome out = run_tot(fig1_example(), counting, reg, 1);
        CHECK(out.answer == "solo");
        CHECK(out.backend_calls == 1);
    }
}

TEST_CASE("all strategies consume the same example and nothing extra") {
    // every prompt must carry the question verbatim and only pool evidence
    ScriptedBackend backend;
    std::vector<std::string> prompts;
    backend.set_responder([&prompts](const BackendRequest& req) -> std::optional<std::string> {
        prompts.push_back(req.user_text);
        return std::string("Answer: x");
    });
    TemplateRegistry reg = TemplateRegistry::builtin();
    QAExample ex = fig1_example();
    run_vanilla(ex, backend, reg);
    run_cot(ex, backend, reg);
    run_tot(ex, backend, reg, 2);
    for (const auto& p : prompts) {
        CHECK(p.find(ex.question) != std::string::npos);
        CHECK(p.find("Rush Hour is a 1998 buddy action comedy") != std::string::npos);
    }
}

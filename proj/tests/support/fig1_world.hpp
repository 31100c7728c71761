#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "stoctot/corpus.hpp"
#include "stoctot/engine.hpp"
#include "stoctot/scripted_backend.hpp"

#include "test_util.hpp"

namespace stoctot::testing {

// A two-hop scripted scenario: the root question needs the award-winning actor
// resolved first, then the movie shared with Chris Tucker. One parallel branch
// goes straight for Chris Tucker movies and lands on a weaker answer. Fixture
// validities are chosen so the winning path scores 0.9 * 0.8.

inline const char* kFig1Question =
    "What movie did the actor who received the 2016 Academy Honorary Award co-star in with "
    "Chris Tucker?";
inline const char* kFig1SubActor = "Which actor received the 2016 Academy Honorary Award?";
inline const char* kFig1SubTucker = "Which movies star Chris Tucker?";
inline const char* kFig1SubMovie =
    "Which movie stars Jackie Chan and Chris Tucker together?";

inline QAExample fig1_example() {
    QAExample ex;
    ex.id = "fig1";
    ex.question = kFig1Question;
    ex.gold_answer = "Rush Hour";
    ex.question_type = QuestionType::bridge;
    ex.hop_count = 2;
    ex.evidence_pool = {
        {"Jackie Chan",
         {"Jackie Chan received the 2016 Academy Honorary Award.",
          "He is known for acrobatic fighting and innovative stunts."}},
        {"Rush Hour (film)",
         {"Rush Hour is a 1998 buddy action comedy starring Jackie Chan and Chris Tucker."}},
        {"Money Talks (film)",
         {"Money Talks is a 1997 film starring Chris Tucker and Charlie Sheen."}},
        {"Academy Honorary Award",
         {"The Academy Honorary Award is given for lifetime achievement in film."}},
    };
    return ex;
}

inline void install_fig1_responder(ScriptedBackend& backend) {
    backend.set_responder([](const BackendRequest& req) -> std::optional<std::string> {
        const std::string& text = req.user_text;
        auto has = [&text](const std::string& needle) {
            return text.find(needle) != std::string::npos;
        };

        if (has("Break a question into high-quality sub-questions")) {
            if (has("Already answered") && has("A: Jackie Chan")) {
                return std::string("Thought 2: Now I know the actor; I need their shared "
                                   "movie. Sub Question 2-1: ") +
                       kFig1SubMovie;
            }
            return std::string("Thought 1: I could find the actor first, or look at Chris "
                               "Tucker's movies. Sub Question 1-1: ") +
                   kFig1SubActor + " Sub Question 1-2: " + kFig1SubTucker;
        }
        if (has("reviewing sub-questions for redundancy")) {
            return std::string("No, it asks for something new.");
        }
        if (has("Can you now answer the original question?")) {
            if (has("A: Rush Hour") || has("A: Money Talks")) {
                return std::string("Yes.");
            }
            return std::string("No, not yet.");
        }
        if (has("Evaluate one step of a reasoning path")) {
            if (has(std::string("Sub-question: ") + kFig1SubActor)) {
                return std::string("0.9");
            }
            if (has(std::string("Sub-question: ") + kFig1SubMovie)) {
                return std::string("0.8");
            }
            if (has(std::string("Sub-question: ") + kFig1SubTucker)) {
                return std::string("0.5");
            }
            return std::string("0.5");
        }
        if (has("give your final answer to the original question")) {
            if (has("A: Rush Hour")) {
                return std::string("Rush Hour");
            }
            return std::string("Money Talks");
        }
        if (has("give your answer directly")) {
            if (has(std::string("Question: ") + kFig1SubActor)) {
                return std::string("Jackie Chan");
            }
            if (has(std::string("Question: ") + kFig1SubMovie)) {
                return std::string("Rush Hour");
            }
            if (has(std::string("Question: ") + kFig1SubTucker)) {
                return std::string("Money Talks");
            }
        }
        return std::nullopt;
    });
}

// Runs the scenario once against a recording backend and saves the resulting
// digest-keyed fixture file; replaying it reproduces the whole run.
inline std::string record_fig1_fixtures(const TempDir& dir) {
    ScriptedBackend recorder;
    install_fig1_responder(recorder);
    TemplateRegistry reg = TemplateRegistry::builtin();
    EngineConfig config;
    config.sibling_concurrency = 1;
    StocTotEngine engine(recorder, reg, config);
    QAExample ex = fig1_example();
    ReasoningTree tree(ex.id, ex.question);
    engine.run(ex, tree);
    std::string path = (dir.path() / "fig1_fixtures.json").string();
    recorder.save(path);
    return path;
}

// The same example as a one-record distractor-format dataset file.
inline std::string write_fig1_dataset(const TempDir& dir) {
    QAExample ex = fig1_example();
    nlohmann::ordered_json record;
    record["_id"] = ex.id;
    record["question"] = ex.question;
    record["answer"] = ex.gold_answer;
    record["type"] = "bridge";
    nlohmann::ordered_json context = nlohmann::ordered_json::array();
    for (const auto& p : ex.evidence_pool) {
        context.push_back({p.title, p.sentences});
    }
    record["context"] = context;
    return dir.file("fig1.json", nlohmann::ordered_json::array({record}).dump(2));
}

} // namespace stoctot::testing

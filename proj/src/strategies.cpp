#include "stoctot/strategies.hpp"

#include "stoctot/errors.hpp"
#include "stoctot/eval.hpp"
#include "stoctot/text.hpp"

#include <algorithm>
#include <map>

namespace stoctot {

std::string to_string(Strategy s) {
    switch (s) {
        case Strategy::vanilla: return "vanilla";
        case Strategy::cot: return "cot";
        case Strategy::tot: return "tot";
        case Strategy::stoctot: return "stoctot";
    }
    return "vanilla";
}

Strategy strategy_from_string(const std::string& s) {
    if (s == "vanilla") {
        return Strategy::vanilla;
    }
    if (s == "cot") {
        return Strategy::cot;
    }
    if (s == "tot") {
        return Strategy::tot;
    }
    if (s == "stoctot") {
        return Strategy::stoctot;
    }
    throw ConfigError("unknown strategy `" + s + "`", "strategy");
}

std::string extract_final_answer(std::string_view reply, bool& found) {
    constexpr std::string_view marker = "Answer:";
    std::size_t pos = reply.rfind(marker);
    if (pos == std::string_view::npos) {
        found = false;
        return std::string(text::trim(reply));
    }
    found = true;
    std::string_view rest = reply.substr(pos + marker.size());
    // the answer is the marker line's remainder
    if (std::size_t nl = rest.find('\n'); nl != std::string_view::npos) {
        rest = rest.substr(0, nl);
    }
    return std::string(text::trim(rest));
}

namespace {

BackendRequest simple_request(const TemplateRegistry& templates, TemplateName name,
                              const QAExample& example, const GenerationParams& params) {
    BackendRequest req;
    req.user_text = render(templates.get(name), {{"question", example.question},
                                                 {"evidence",
                                                  render_evidence(example.evidence_pool)}});
    req.params = params;
    return req;
}

} // namespace

StrategyOutcome run_vanilla(const QAExample& example, Backend& backend,
                            const TemplateRegistry& templates, const GenerationParams& params) {
    StrategyOutcome out;
    out.strategy = Strategy::vanilla;
    BackendRequest req = simple_request(templates, TemplateName::vanilla, example, params);
    try {
        BackendReply reply = backend.generate(req);
        out.backend_calls = 1;
        out.answer = std::string(text::trim(reply.text));
        out.trace = reply.text;
    } catch (const TransportError& e) {
        out.backend_calls = 1;
        out.failed = true;
        out.failure_reason = e.what();
    }
    return out;
}

StrategyOutcome run_cot(const QAExample& example, Backend& backend,
                        const TemplateRegistry& templates, const GenerationParams& params) {
    StrategyOutcome out;
    out.strategy = Strategy::cot;
    BackendRequest req = simple_request(templates, TemplateName::cot, example, params);
    try {
        BackendReply reply = backend.generate(req);
        out.backend_calls = 1;
        bool found = false;
        out.answer = extract_final_answer(reply.text, found);
        out.trace = reply.text;
        if (!found) {
            out.trace += "\n[no Answer: marker; whole reply used]";
        }
    } catch (const TransportError& e) {
        out.backend_calls = 1;
        out.failed = true;
        out.failure_reason = e.what();
    }
    return out;
}

StrategyOutcome run_tot(const QAExample& example, Backend& backend,
                        const TemplateRegistry& templates, int n_paths,
                        const GenerationParams& params) {
    if (n_paths < 1) {
        throw ConfigError("tot requires n_paths >= 1", "tot-paths");
    }
    StrategyOutcome out;
    out.strategy = Strategy::tot;

    std::vector<std::string> answers(static_cast<std::size_t>(n_paths));
    std::vector<std::string> replies(static_cast<std::size_t>(n_paths));
    int failures = 0;
    for (int i = 0; i < n_paths; i++) {
        BackendRequest req = simple_request(templates, TemplateName::tot_vote, example, params);
        req.sample_index = static_cast<std::uint32_t>(i); // independent sample of one prompt
        try {
            BackendReply reply = backend.generate(req);
            bool found = false;
            answers[static_cast<std::size_t>(i)] = extract_final_answer(reply.text, found);
            replies[static_cast<std::size_t>(i)] = reply.text;
        } catch (const TransportError& e) {
            failures++;
            replies[static_cast<std::size_t>(i)] = std::string("[transport error: ") + e.what() + "]";
        }
        out.backend_calls++;
    }
    if (failures == n_paths) {
        out.failed = true;
        out.failure_reason = "all reasoning paths failed";
        return out;
    }

    // majority vote over normalized answers; ties go to the lowest path index
    std::map<std::string, int> votes;
    for (int i = 0; i < n_paths; i++) {
        if (replies[static_cast<std::size_t>(i)].rfind("[transport", 0) == 0) {
            continue;
        }
        votes[normalize_answer(answers[static_cast<std::size_t>(i)])]++;
    }
    int best_count = 0;
    int winner_index = 0;
    for (int i = 0; i < n_paths; i++) {
        if (replies[static_cast<std::size_t>(i)].rfind("[transport", 0) == 0) {
            continue;
        }
        int count = votes[normalize_answer(answers[static_cast<std::size_t>(i)])];
        if (count > best_count) { // first path of the winning group is kept
            best_count = count;
            winner_index = i;
        }
    }
    out.answer = answers[static_cast<std::size_t>(winner_index)];

    std::string trace;
    for (int i = 0; i < n_paths; i++) {
        trace += "=== path " + std::to_string(i) + " ===\n";
        trace += replies[static_cast<std::size_t>(i)];
        trace += "\n";
    }
    trace += "=== vote ===\nwinner: path " + std::to_string(winner_index) + " (" +
             std::to_string(best_count) + "/" + std::to_string(n_paths - failures) + ")";
    out.trace = std::move(trace);
    return out;
}

StrategyOutcome run_stoctot_strategy(const QAExample& example, StocTotEngine& engine,
                                     ReasoningTree& tree) {
    StrategyOutcome out;
    out.strategy = Strategy::stoctot;
    StocTotResult result = engine.run(example, tree);
    out.answer = result.answer;
    out.failed = result.failed;
    out.failure_reason = result.failure_reason;
    out.intermediate_answers = result.intermediate_answers;
    if (result.chosen.has_value()) {
        out.p_final = result.chosen->p_final;
        out.chosen = result.chosen;
    }
    out.trace = "tree:" + example.id;
    return out;
}

} // namespace stoctot

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stoctot/backend.hpp"
#include "stoctot/corpus.hpp"
#include "stoctot/engine.hpp"
#include "stoctot/prompts.hpp"

namespace stoctot {

enum class Strategy { vanilla, cot, tot, stoctot };

std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& s);

struct StrategyOutcome {
    Strategy strategy = Strategy::vanilla;
    std::string answer;
    std::string trace; // transcript, or a tree reference for stoctot
    int backend_calls = 0;
    bool failed = false;
    std::string failure_reason;
    std::vector<std::string> intermediate_answers; // stoctot only
    std::optional<double> p_final;                 // stoctot only
    std::optional<PathScore> chosen;               // stoctot only
};

// single call, question + evidence, no reasoning scaffold
StrategyOutcome run_vanilla(const QAExample& example, Backend& backend,
                            const TemplateRegistry& templates,
                            const GenerationParams& params = {});

// single call with the worked demo; answer extracted after the last "Answer:"
StrategyOutcome run_cot(const QAExample& example, Backend& backend,
                        const TemplateRegistry& templates, const GenerationParams& params = {});

// n_paths independent sampled chains, majority vote over normalized answers
StrategyOutcome run_tot(const QAExample& example, Backend& backend,
                        const TemplateRegistry& templates, int n_paths = 3,
                        const GenerationParams& params = {});

// the full engine; the caller owns the tree for persistence
StrategyOutcome run_stoctot_strategy(const QAExample& example, StocTotEngine& engine,
                                     ReasoningTree& tree);

// the final answer after the last "Answer:" marker; found=false falls back to
// the whole reply
std::string extract_final_answer(std::string_view reply, bool& found);

} // namespace stoctot

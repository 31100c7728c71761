#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "stoctot/backend.hpp"
#include "stoctot/corpus.hpp"
#include "stoctot/prompts.hpp"
#include "stoctot/token_scorer.hpp"
#include "stoctot/tree.hpp"

namespace stoctot {

enum class ConstraintMode { hard, soft, off };

std::string to_string(ConstraintMode m);
ConstraintMode constraint_mode_from_string(const std::string& s);

struct EngineConfig {
    int max_depth = 5;       // expansion rounds; nodes at this depth become leaves
    int branching_limit = 3; // parsed sub-questions beyond the limit are dropped
    ConstraintMode constraint = ConstraintMode::soft;
    DemoFlavor demo_flavor = DemoFlavor::both;
    bool prune_against_all_ancestors = true; // false = parent question only
    int sibling_concurrency = 4;             // concurrent sibling answering
    std::optional<std::chrono::milliseconds> time_budget; // exceed -> engine failure
    GenerationParams params;
    double default_validity = 0.5; // stored when the estimate is unparseable
    std::uint64_t decode_seed = 0; // hard-mode sampling seed
    std::optional<std::set<std::string>> stoplist; // nullopt = shipped list
};

struct StocTotResult {
    std::string answer; // empty on failure
    std::optional<PathScore> chosen;
    bool failed = false;
    std::string failure_reason;
    std::vector<std::string> intermediate_answers; // answers of non-leaf answered nodes
};

// The stochastic tree-of-thought engine: expands sub-questions breadth-wise,
// prunes paraphrases, answers with constrained decoding, scores each step, and
// selects the highest-probability path. All tree mutation happens on the
// calling thread in ascending node_id order; only backend calls run
// concurrently, so scripted runs are bit-deterministic at any concurrency.
class StocTotEngine {
public:
    StocTotEngine(Backend& backend, const TemplateRegistry& templates, EngineConfig config,
                  TokenScorer* scorer = nullptr);

    VocabularyBank make_bank(const QAExample& example) const;

    // creates up to branching_limit open children from parsed sub-questions
    std::vector<int> expand_node(ReasoningTree& tree, int node_id, const QAExample& example);

    // paraphrases are pruned (verbatim repeats without any backend call);
    // returns the surviving ids in ascending order
    std::vector<int> prune_paraphrases(ReasoningTree& tree, const std::vector<int>& child_ids);

    // answers one open node (idempotent) and probes answerability
    std::string answer_subquestion(ReasoningTree& tree, int node_id, const VocabularyBank& bank,
                                   const QAExample& example);

    // one validity estimate per answered sibling of a common parent
    std::map<int, double> estimate_validity(ReasoningTree& tree,
                                            const std::vector<int>& sibling_ids);

    // turns a candidate leaf into a leaf carrying the final answer to Q
    std::string finalize_leaf(ReasoningTree& tree, int node_id, const VocabularyBank& bank,
                              const QAExample& example);

    // the full breadth-wise loop; the tree must be freshly rooted at the example
    StocTotResult run(const QAExample& example, ReasoningTree& tree);

    const EngineConfig& config() const { return config_; }

private:
    struct AnswerOutcome {
        int node_id = 0;
        std::string answer;
        bool answerable = false;
        bool soft_fallback = false;
        std::vector<std::string> violations;
        std::vector<std::string> digests;
        bool transport_failed = false;
    };

    struct ValidityOutcome {
        int node_id = 0;
        double value = 0.5;
        bool warning = false;
        std::string digest;
        bool transport_failed = false;
    };

    BackendRequest make_request(std::string user_text,
                                std::shared_ptr<const VocabularyBank> constraint) const;
    std::string qa_chain_lines(const ReasoningTree& tree, int node_id) const;
    AnswerOutcome compute_answer(const ReasoningTree& tree, int node_id,
                                 const VocabularyBank& bank, const QAExample& example) const;
    void apply_answer(ReasoningTree& tree, const AnswerOutcome& outcome) const;
    ValidityOutcome compute_validity(const ReasoningTree& tree, int node_id) const;
    void apply_validity(ReasoningTree& tree, const ValidityOutcome& outcome) const;
    std::string constrained_call(const BackendRequest& request, AnswerOutcome& outcome) const;

    Backend& backend_;
    const TemplateRegistry& templates_;
    EngineConfig config_;
    TokenScorer* scorer_;
};

} // namespace stoctot

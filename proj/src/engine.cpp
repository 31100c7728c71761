#include "stoctot/engine.hpp"

#include "stoctot/digest.hpp"
#include "stoctot/errors.hpp"
#include "stoctot/text.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

namespace stoctot {

namespace {

// runs fn(0..count) on up to `workers` threads; per-item errors must be
// handled inside fn, anything escaping is rethrown after the join
template <typename Fn>
void parallel_over(std::size_t count, int workers, Fn&& fn) {
    if (workers <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; i++) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    int n = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(workers), count));
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
    for (int t = 0; t < n; t++) {
        pool.emplace_back([&, t] {
            try {
                for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
                    fn(i);
                }
            } catch (...) {
                errors[static_cast<std::size_t>(t)] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) {
        th.join();
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

} // namespace

std::string to_string(ConstraintMode m) {
    switch (m) {
        case ConstraintMode::hard: return "hard";
        case ConstraintMode::soft: return "soft";
        case ConstraintMode::off: return "off";
    }
    return "soft";
}

ConstraintMode constraint_mode_from_string(const std::string& s) {
    if (s == "hard") {
        return ConstraintMode::hard;
    }
    if (s == "soft") {
        return ConstraintMode::soft;
    }
    if (s == "off") {
        return ConstraintMode::off;
    }
    throw ConfigError("unknown constraint mode `" + s + "` (expected hard, soft, or off)",
                      "constraint");
}

StocTotEngine::StocTotEngine(Backend& backend, const TemplateRegistry& templates,
                             EngineConfig config, TokenScorer* scorer)
    : backend_(backend), templates_(templates), config_(std::move(config)), scorer_(scorer) {
    if (config_.constraint == ConstraintMode::hard && scorer_ == nullptr) {
        throw ConfigError("constraint mode `hard` requires a token-scoring backend",
                          "constraint");
    }
}

VocabularyBank StocTotEngine::make_bank(const QAExample& example) const {
    const std::set<std::string>& stoplist =
        config_.stoplist.has_value() ? *config_.stoplist : default_stoplist();
    std::string_view stoplist_id =
        config_.stoplist.has_value() ? std::string_view("custom") : kDefaultStoplistId;
    return build_bank(example.id, example.question, example.evidence_pool, stoplist,
                      stoplist_id);
}

BackendRequest StocTotEngine::make_request(
    std::string user_text, std::shared_ptr<const VocabularyBank> constraint) const {
    BackendRequest req;
    req.user_text = std::move(user_text);
    req.params = config_.params;
    req.constraint = std::move(constraint);
    return req;
}

std::string StocTotEngine::qa_chain_lines(const ReasoningTree& tree, int node_id) const {
    std::string out;
    for (int id : tree.path_from_root(node_id)) {
        const ReasoningNode& n = tree.node(id);
        if (!n.answer_text.has_value()) {
            continue;
        }
        if (!out.empty()) {
            out.push_back('\n');
        }
        out += "- Q: " + n.question_text + " A: " + *n.answer_text;
    }
    return out;
}

std::vector<int> StocTotEngine::expand_node(ReasoningTree& tree, int node_id,
                                            const QAExample& example) {
    ReasoningNode& node = tree.node(node_id);
    if (node.status == NodeStatus::pruned || node.status == NodeStatus::leaf) {
        throw Error("expand_node: node " + std::to_string(node_id) + " is " +
                    to_string(node.status));
    }
    if (node.depth >= config_.max_depth) {
        throw Error("expand_node: node " + std::to_string(node_id) + " is at max depth");
    }
    if (!node.children.empty()) {
        throw Error("expand_node: node " + std::to_string(node_id) + " already expanded");
    }

    std::string context;
    if (node.parent.has_value()) {
        std::string chain;
        for (int id : tree.path_from_root(node_id)) {
            const ReasoningNode& n = tree.node(id);
            if (!n.answer_text.has_value()) {
                continue;
            }
            if (!chain.empty()) {
                chain += " | ";
            }
            chain += "Q: " + n.question_text + " A: " + *n.answer_text;
        }
        if (!chain.empty()) {
            context = "Already answered on this path: " + chain + "\n";
        }
    }

    const PromptTemplate& tpl =
        templates_.get(TemplateName::subquestion_gen, config_.demo_flavor);
    BackendRequest req = make_request(
        render(tpl, {{"context", context}, {"question", node.question_text}}), nullptr);
    node.prompt_digests.push_back(request_digest(req));

    BackendReply reply = backend_.generate(req); // TransportError: caller keeps node open

    std::vector<std::string> questions = parse_subquestions(reply.text);
    if (questions.size() > static_cast<std::size_t>(config_.branching_limit)) {
        questions.resize(static_cast<std::size_t>(config_.branching_limit));
    }
    std::vector<int> child_ids;
    for (auto& q : questions) {
        child_ids.push_back(tree.add_child(node_id, std::move(q)));
    }
    return child_ids;
}

std::vector<int> StocTotEngine::prune_paraphrases(ReasoningTree& tree,
                                                  const std::vector<int>& child_ids) {
    std::vector<int> survivors;
    for (int child_id : child_ids) {
        ReasoningNode& child = tree.node(child_id);
        if (child.status != NodeStatus::open) {
            throw Error("prune_paraphrases: node " + std::to_string(child_id) + " is not open");
        }

        std::vector<int> path = tree.path_from_root(child_id);
        path.pop_back(); // ancestors only
        if (!config_.prune_against_all_ancestors && path.size() > 1) {
            path.erase(path.begin(), path.end() - 1); // parent question only
        }

        // verbatim repeats need no model call
        std::string_view candidate = text::trim(child.question_text);
        bool exact_repeat = false;
        for (int id : path) {
            if (text::trim(tree.node(id).question_text) == candidate) {
                exact_repeat = true;
                break;
            }
        }
        if (exact_repeat) {
            child.status = NodeStatus::pruned;
            continue;
        }

        std::string ancestors;
        for (int id : path) {
            if (!ancestors.empty()) {
                ancestors.push_back('\n');
            }
            ancestors += "- " + tree.node(id).question_text;
        }
        const ReasoningNode& root = tree.node(tree.root_id());
        BackendRequest req =
            make_request(render(templates_.get(TemplateName::paraphrase_check),
                                {{"root_question", root.question_text},
                                 {"ancestors", ancestors},
                                 {"candidate", child.question_text}}),
                         nullptr);
        child.prompt_digests.push_back(request_digest(req));

        bool prune = false;
        try {
            BackendReply reply = backend_.generate(req);
            prune = parse_yes_no(reply.text).value_or(false); // parse failure keeps the branch
        } catch (const TransportError&) {
            prune = false; // fail open: pruning on transport noise risks the only good path
        }
        if (prune) {
            child.status = NodeStatus::pruned;
        } else {
            survivors.push_back(child_id);
        }
    }
    return survivors;
}

std::string StocTotEngine::constrained_call(const BackendRequest& request,
                                            AnswerOutcome& outcome) const {
    if (config_.constraint == ConstraintMode::hard) {
        try {
            BackendReply reply = generate_constrained(request, *scorer_, config_.decode_seed);
            return reply.text;
        } catch (const ConstraintExhaustedError&) {
            outcome.soft_fallback = true; // fall through to the prompt-based variant
        }
    }
    if (config_.constraint == ConstraintMode::off) {
        return backend_.generate(request).text;
    }
    AuditedReply audited = generate_prompt_constrained(backend_, request);
    outcome.violations = audited.violations;
    return audited.reply.text;
}

StocTotEngine::AnswerOutcome StocTotEngine::compute_answer(const ReasoningTree& tree,
                                                           int node_id,
                                                           const VocabularyBank& bank,
                                                           const QAExample& example) const {
    AnswerOutcome outcome;
    outcome.node_id = node_id;
    const ReasoningNode& node = tree.node(node_id);
    auto bank_ptr = std::make_shared<const VocabularyBank>(bank);

    Bindings bindings{{"question", node.question_text},
                      {"evidence", render_evidence(example.evidence_pool)}};
    TemplateName tpl_name = TemplateName::plain_answer;
    std::shared_ptr<const VocabularyBank> constraint;
    if (config_.constraint != ConstraintMode::off) {
        bindings["vocabulary"] = render_bank(bank);
        tpl_name = TemplateName::constrained_answer;
        constraint = bank_ptr;
    }
    BackendRequest req = make_request(render(templates_.get(tpl_name), bindings), constraint);
    outcome.digests.push_back(request_digest(req));

    try {
        outcome.answer = std::string(text::trim(constrained_call(req, outcome)));
    } catch (const TransportError&) {
        outcome.transport_failed = true;
        return outcome;
    }

    // answerability probe: does this sub-answer settle the original question?
    std::string context = qa_chain_lines(tree, node_id);
    if (!context.empty()) {
        context.push_back('\n');
    }
    context += "- Q: " + node.question_text + " A: " + outcome.answer;
    const ReasoningNode& root = tree.node(tree.root_id());
    BackendRequest probe =
        make_request(render(templates_.get(TemplateName::answerable_probe),
                            {{"root_question", root.question_text}, {"context", context}}),
                     nullptr);
    outcome.digests.push_back(request_digest(probe));
    try {
        BackendReply reply = backend_.generate(probe);
        outcome.answerable = parse_yes_no(reply.text).value_or(false);
    } catch (const TransportError&) {
        outcome.answerable = false; // keep reasoning; the probe is advisory
    }
    return outcome;
}

void StocTotEngine::apply_answer(ReasoningTree& tree, const AnswerOutcome& outcome) const {
    ReasoningNode& node = tree.node(outcome.node_id);
    for (const auto& d : outcome.digests) {
        node.prompt_digests.push_back(d);
    }
    if (outcome.transport_failed) {
        return; // node stays open and retryable
    }
    node.answer_text = outcome.answer;
    node.status = NodeStatus::answered;
    node.answerable = outcome.answerable;
    node.soft_fallback = outcome.soft_fallback;
    node.constraint_violations = outcome.violations;
}

std::string StocTotEngine::answer_subquestion(ReasoningTree& tree, int node_id,
                                              const VocabularyBank& bank,
                                              const QAExample& example) {
    ReasoningNode& node = tree.node(node_id);
    if (node.answer_text.has_value()) {
        return *node.answer_text; // idempotent: answering twice is a no-op
    }
    if (node.status != NodeStatus::open) {
        throw Error("answer_subquestion: node " + std::to_string(node_id) + " is " +
                    to_string(node.status));
    }
    AnswerOutcome outcome = compute_answer(tree, node_id, bank, example);
    if (outcome.transport_failed) {
        apply_answer(tree, outcome);
        throw TransportError("backend failed answering node " + std::to_string(node_id), 0);
    }
    apply_answer(tree, outcome);
    return *tree.node(node_id).answer_text;
}

StocTotEngine::ValidityOutcome StocTotEngine::compute_validity(const ReasoningTree& tree,
                                                               int node_id) const {
    ValidityOutcome outcome;
    outcome.node_id = node_id;
    const ReasoningNode& node = tree.node(node_id);
    const ReasoningNode& root = tree.node(tree.root_id());
    const ReasoningNode& parent = tree.node(node.parent.value());

    BackendRequest req =
        make_request(render(templates_.get(TemplateName::validity_estimate),
                            {{"root_question", root.question_text},
                             {"parent_question", parent.question_text},
                             {"question", node.question_text},
                             {"answer", node.answer_text.value_or("")}}),
                     nullptr);
    outcome.digest = request_digest(req);

    try {
        BackendReply reply = backend_.generate(req);
        ParsedProbability p = parse_probability(reply.text);
        if (p.value.has_value()) {
            outcome.value = *p.value;
            outcome.warning = p.clamped;
        } else {
            outcome.value = config_.default_validity;
            outcome.warning = true;
        }
    } catch (const TransportError&) {
        outcome.value = config_.default_validity;
        outcome.warning = true;
        outcome.transport_failed = true;
    }
    return outcome;
}

void StocTotEngine::apply_validity(ReasoningTree& tree, const ValidityOutcome& outcome) const {
    ReasoningNode& node = tree.node(outcome.node_id);
    node.prompt_digests.push_back(outcome.digest);
    node.validity = outcome.value;
    node.validity_warning = outcome.warning;
}

std::map<int, double> StocTotEngine::estimate_validity(ReasoningTree& tree,
                                                       const std::vector<int>& sibling_ids) {
    if (sibling_ids.empty()) {
        return {};
    }
    std::optional<int> parent;
    for (int id : sibling_ids) {
        const ReasoningNode& n = tree.node(id);
        if (n.status != NodeStatus::answered) {
            throw Error("estimate_validity: node " + std::to_string(id) + " is not answered");
        }
        if (!parent.has_value()) {
            parent = n.parent;
        } else if (n.parent != parent) {
            throw Error("estimate_validity: siblings must share one parent");
        }
    }

    std::vector<int> ordered(sibling_ids);
    std::sort(ordered.begin(), ordered.end());
    std::vector<ValidityOutcome> outcomes(ordered.size());
    parallel_over(ordered.size(), config_.sibling_concurrency,
                  [&](std::size_t i) { outcomes[i] = compute_validity(tree, ordered[i]); });

    std::map<int, double> result;
    for (const auto& outcome : outcomes) { // ascending node_id order
        apply_validity(tree, outcome);
        result[outcome.node_id] = outcome.value;
    }
    return result;
}

std::string StocTotEngine::finalize_leaf(ReasoningTree& tree, int node_id,
                                         const VocabularyBank& bank, const QAExample& example) {
    ReasoningNode& node = tree.node(node_id);
    bool childless = true;
    for (int child : node.children) {
        if (tree.node(child).status != NodeStatus::pruned) {
            childless = false;
            break;
        }
    }
    bool candidate = childless || node.answerable || node.depth >= config_.max_depth;
    if (!candidate || node.status == NodeStatus::pruned || node.status == NodeStatus::leaf) {
        throw Error("finalize_leaf: node " + std::to_string(node_id) +
                    " is not a candidate leaf");
    }

    auto bank_ptr = std::make_shared<const VocabularyBank>(bank);
    Bindings bindings{{"question", tree.node(tree.root_id()).question_text},
                      {"context", qa_chain_lines(tree, node_id)},
                      {"evidence", render_evidence(example.evidence_pool)}};
    if (bindings["context"].empty()) {
        bindings["context"] = "(none)";
    }
    TemplateName tpl_name = TemplateName::plain_final;
    std::shared_ptr<const VocabularyBank> constraint;
    if (config_.constraint != ConstraintMode::off) {
        bindings["vocabulary"] = render_bank(bank);
        tpl_name = TemplateName::final_answer;
        constraint = bank_ptr;
    }
    BackendRequest req = make_request(render(templates_.get(tpl_name), bindings), constraint);
    node.prompt_digests.push_back(request_digest(req));

    AnswerOutcome scratch;
    scratch.node_id = node_id;
    std::string answer(text::trim(constrained_call(req, scratch))); // TransportError propagates
    node.soft_fallback = node.soft_fallback || scratch.soft_fallback;
    for (const auto& v : scratch.violations) {
        node.constraint_violations.push_back(v);
    }

    node.final_answer_text = answer;
    node.status = NodeStatus::leaf;
    if (!node.validity.has_value()) {
        node.validity = 1.0; // root-as-leaf: no (q_i, a_i) pair of its own
    }
    return answer;
}

StocTotResult StocTotEngine::run(const QAExample& example, ReasoningTree& tree) {
    StocTotResult result;
    VocabularyBank bank = make_bank(example);

    std::optional<std::chrono::steady_clock::time_point> deadline;
    if (config_.time_budget.has_value()) {
        deadline = std::chrono::steady_clock::now() + *config_.time_budget;
    }
    auto out_of_time = [&deadline] {
        return deadline.has_value() && std::chrono::steady_clock::now() > *deadline;
    };

    std::set<int> candidates;
    std::set<int> failed_nodes;
    std::vector<int> frontier{tree.root_id()};

    while (!frontier.empty() && !result.failed) {
        std::vector<int> next_frontier;
        for (int node_id : frontier) {
            if (out_of_time()) {
                result.failed = true;
                result.failure_reason = "time budget exceeded";
                break;
            }
            if (tree.node(node_id).depth >= config_.max_depth) {
                candidates.insert(node_id); // depth cap: leaf produced anyway
                continue;
            }

            std::vector<int> children;
            try {
                children = expand_node(tree, node_id, example);
            } catch (const TransportError&) {
                failed_nodes.insert(node_id); // node stays as-is, retryable
                continue;
            }
            if (children.empty()) {
                candidates.insert(node_id);
                continue;
            }

            std::vector<int> survivors = prune_paraphrases(tree, children);
            if (survivors.empty()) {
                candidates.insert(node_id); // everything pruned: parent is the leaf
                continue;
            }

            // answer all siblings (concurrently), then apply in node_id order
            std::vector<AnswerOutcome> outcomes(survivors.size());
            parallel_over(survivors.size(), config_.sibling_concurrency, [&](std::size_t i) {
                outcomes[i] = compute_answer(tree, survivors[i], bank, example);
            });
            std::vector<int> answered;
            for (const auto& outcome : outcomes) {
                apply_answer(tree, outcome);
                if (outcome.transport_failed) {
                    failed_nodes.insert(outcome.node_id);
                } else {
                    answered.push_back(outcome.node_id);
                }
            }
            if (answered.empty()) {
                continue; // the whole sibling group failed; nothing to score
            }

            estimate_validity(tree, answered);
            for (int id : answered) {
                if (tree.node(id).answerable) {
                    candidates.insert(id);
                } else {
                    next_frontier.push_back(id);
                }
            }
        }
        frontier = std::move(next_frontier);
    }

    for (int node_id : candidates) { // std::set: ascending id order
        if (out_of_time()) {
            result.failed = true;
            result.failure_reason = "time budget exceeded";
            break;
        }
        try {
            finalize_leaf(tree, node_id, bank, example);
        } catch (const TransportError&) {
            failed_nodes.insert(node_id);
        }
    }

    if (!result.failed && failed_nodes.size() * 2 > tree.size()) {
        result.failed = true;
        result.failure_reason = "backend failed on more than half of the nodes";
    }

    for (int id : tree.node_ids()) {
        const ReasoningNode& n = tree.node(id);
        if (n.status == NodeStatus::answered && n.answer_text.has_value()) {
            result.intermediate_answers.push_back(*n.answer_text);
        }
    }

    if (result.failed) {
        return result;
    }
    try {
        auto [answer, score] = select_answer(tree);
        result.answer = std::move(answer);
        result.chosen = std::move(score);
    } catch (const EngineFailureError& e) {
        result.failed = true;
        result.failure_reason = e.what();
    }
    return result;
}

} // namespace stoctot

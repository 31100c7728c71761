#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace stoctot {

enum class NodeStatus { open, answered, pruned, leaf };

std::string to_string(NodeStatus s);

struct ReasoningNode {
    int node_id = 0;
    std::optional<int> parent; // nullopt only for the root
    int depth = 0;
    std::string question_text;
    std::optional<std::string> answer_text;       // the node's own sub-answer
    std::optional<std::string> final_answer_text; // set when finalized as a leaf
    std::optional<double> validity;               // p_i in [0, 1]
    NodeStatus status = NodeStatus::open;
    bool validity_warning = false; // unparseable estimate, default applied
    bool answerable = false;       // probe said the root question is now answerable
    bool soft_fallback = false;    // hard constraint exhausted, soft mode used
    std::vector<std::string> constraint_violations; // soft-mode audit findings
    std::vector<std::string> prompt_digests;
    std::vector<int> children;
};

struct PathScore {
    int leaf_id = 0;
    double p_final = 1.0;
    std::vector<std::pair<int, double>> factors; // (node_id, p_i), root-first
};

class ReasoningTree {
public:
    ReasoningTree(std::string example_id, std::string root_question);

    int root_id() const { return root_id_; }
    const std::string& example_id() const { return example_id_; }

    ReasoningNode& node(int id);
    const ReasoningNode& node(int id) const;
    std::size_t size() const { return nodes_.size(); }

    // ids in creation order (ascending), matching the deterministic apply order
    std::vector<int> node_ids() const;

    int add_child(int parent_id, std::string question_text);

    // root-first path of node ids ending at id
    std::vector<int> path_from_root(int id) const;

    std::vector<int> leaf_ids() const;

    // acyclicity, parent existence, depth bookkeeping, status/validity pairing
    void check_invariants() const;

    nlohmann::ordered_json to_json() const;

private:
    std::map<int, ReasoningNode> nodes_;
    int root_id_ = 0;
    int next_id_ = 0;
    std::string example_id_;
};

// p_final as the root-to-leaf product of validities; the root contributes no
// factor. Requires leaf status and validities along the path.
PathScore aggregate_path(const ReasoningTree& tree, int leaf_id);

// Highest p_final wins; ties prefer fewer factors, then lower leaf node_id.
// Throws EngineFailureError when the tree has no leaves.
std::pair<std::string, PathScore> select_answer(const ReasoningTree& tree);

} // namespace stoctot

#include "stoctot/tree.hpp"

#include "stoctot/errors.hpp"

#include <algorithm>

namespace stoctot {

std::string to_string(NodeStatus s) {
    switch (s) {
        case NodeStatus::open: return "open";
        case NodeStatus::answered: return "answered";
        case NodeStatus::pruned: return "pruned";
        case NodeStatus::leaf: return "leaf";
    }
    return "open";
}

ReasoningTree::ReasoningTree(std::string example_id, std::string root_question)
    : example_id_(std::move(example_id)) {
    ReasoningNode root;
    root.node_id = next_id_++;
    root.depth = 0;
    root.question_text = std::move(root_question);
    root_id_ = root.node_id;
    nodes_[root.node_id] = std::move(root);
}

ReasoningNode& ReasoningTree::node(int id) {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) {
        throw Error("no such node: " + std::to_string(id));
    }
    return it->second;
}

const ReasoningNode& ReasoningTree::node(int id) const {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) {
        throw Error("no such node: " + std::to_string(id));
    }
    return it->second;
}

std::vector<int> ReasoningTree::node_ids() const {
    std::vector<int> ids;
    ids.reserve(nodes_.size());
    for (const auto& [id, _] : nodes_) {
        ids.push_back(id);
    }
    return ids;
}

int ReasoningTree::add_child(int parent_id, std::string question_text) {
    ReasoningNode& parent = node(parent_id);
    if (parent.status == NodeStatus::pruned) {
        throw Error("pruned nodes cannot receive children");
    }
    ReasoningNode child;
    child.node_id = next_id_++;
    child.parent = parent_id;
    child.depth = parent.depth + 1;
    child.question_text = std::move(question_text);
    parent.children.push_back(child.node_id);
    int id = child.node_id;
    nodes_[id] = std::move(child);
    return id;
}

std::vector<int> ReasoningTree::path_from_root(int id) const {
    std::vector<int> path;
    int cur = id;
    while (true) {
        path.push_back(cur);
        const ReasoningNode& n = node(cur);
        if (!n.parent.has_value()) {
            break;
        }
        cur = *n.parent;
        if (path.size() > nodes_.size()) {
            throw Error("parent links form a cycle");
        }
    }
    std::reverse(path.begin(), path.end());
    return path;
}

std::vector<int> ReasoningTree::leaf_ids() const {
    std::vector<int> out;
    for (const auto& [id, n] : nodes_) {
        if (n.status == NodeStatus::leaf) {
            out.push_back(id);
        }
    }
    return out;
}

void ReasoningTree::check_invariants() const {
    for (const auto& [id, n] : nodes_) {
        if (id == root_id_) {
            if (n.depth != 0 || n.parent.has_value()) {
                throw Error("root must have depth 0 and no parent");
            }
        } else {
            if (!n.parent.has_value() || nodes_.find(*n.parent) == nodes_.end()) {
                throw Error("node " + std::to_string(id) + ": missing parent");
            }
            const ReasoningNode& p = nodes_.at(*n.parent);
            if (n.depth != p.depth + 1) {
                throw Error("node " + std::to_string(id) + ": depth bookkeeping broken");
            }
        }
        bool should_have_validity =
            n.status == NodeStatus::answered || n.status == NodeStatus::leaf;
        if (n.validity.has_value() != should_have_validity) {
            throw Error("node " + std::to_string(id) + ": validity/status pairing broken");
        }
        if (n.validity.has_value() && (*n.validity < 0.0 || *n.validity > 1.0)) {
            throw Error("node " + std::to_string(id) + ": validity out of [0,1]");
        }
        if (n.status == NodeStatus::pruned && !n.children.empty()) {
            throw Error("node " + std::to_string(id) + ": pruned nodes must be childless");
        }
        for (int child : n.children) {
            auto it = nodes_.find(child);
            if (it == nodes_.end() || it->second.parent != id) {
                throw Error("node " + std::to_string(id) + ": child link broken");
            }
        }
        path_from_root(id); // throws on cycles
    }
}

nlohmann::ordered_json ReasoningTree::to_json() const {
    nlohmann::ordered_json out;
    out["example_id"] = example_id_;
    out["root_id"] = root_id_;
    out["nodes"] = nlohmann::ordered_json::array();
    for (const auto& [id, n] : nodes_) {
        nlohmann::ordered_json j;
        j["id"] = n.node_id;
        if (n.parent.has_value()) {
            j["parent"] = *n.parent;
        } else {
            j["parent"] = nullptr;
        }
        j["depth"] = n.depth;
        j["status"] = to_string(n.status);
        j["question"] = n.question_text;
        j["answer"] = n.answer_text.has_value() ? nlohmann::ordered_json(*n.answer_text)
                                                : nlohmann::ordered_json(nullptr);
        j["final_answer"] = n.final_answer_text.has_value()
                                ? nlohmann::ordered_json(*n.final_answer_text)
                                : nlohmann::ordered_json(nullptr);
        j["validity"] = n.validity.has_value() ? nlohmann::ordered_json(*n.validity)
                                               : nlohmann::ordered_json(nullptr);
        j["validity_warning"] = n.validity_warning;
        j["answerable"] = n.answerable;
        j["soft_fallback"] = n.soft_fallback;
        j["constraint_violations"] = n.constraint_violations;
        j["children"] = n.children;
        j["prompt_digests"] = n.prompt_digests;
        out["nodes"].push_back(std::move(j));
    }
    return out;
}

PathScore aggregate_path(const ReasoningTree& tree, int leaf_id) {
    const ReasoningNode& leaf = tree.node(leaf_id);
    if (leaf.status != NodeStatus::leaf) {
        throw Error("aggregate_path: node " + std::to_string(leaf_id) + " is not a leaf");
    }

    PathScore score;
    score.leaf_id = leaf_id;
    score.p_final = 1.0;
    for (int id : tree.path_from_root(leaf_id)) {
        if (id == tree.root_id()) {
            continue; // the root has no (q_i, a_i) pair and contributes no factor
        }
        const ReasoningNode& n = tree.node(id);
        if (!n.validity.has_value()) {
            throw Error("aggregate_path: node " + std::to_string(id) + " has no validity");
        }
        score.factors.emplace_back(id, *n.validity);
        score.p_final *= *n.validity;
    }
    return score;
}

std::pair<std::string, PathScore> select_answer(const ReasoningTree& tree) {
    std::vector<int> leaves = tree.leaf_ids();
    if (leaves.empty()) {
        throw EngineFailureError("reasoning produced no leaves for example " +
                                 tree.example_id());
    }

    std::optional<PathScore> best;
    for (int leaf : leaves) { // ascending node_id: the final tie-break is implicit
        PathScore s = aggregate_path(tree, leaf);
        if (!best.has_value() || s.p_final > best->p_final ||
            (s.p_final == best->p_final && s.factors.size() < best->factors.size())) {
            best = std::move(s);
        }
    }

    const ReasoningNode& winner = tree.node(best->leaf_id);
    std::string answer = winner.final_answer_text.value_or(winner.answer_text.value_or(""));
    return {answer, *best};
}

} // namespace stoctot

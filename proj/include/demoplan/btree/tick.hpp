#pragma once

#include <functional>
#include <unordered_map>

#include "demoplan/btree/tree.hpp"

namespace demoplan::bt {

enum class Status { success, failure, running };

inline std::string_view to_string(Status s) {
    switch (s) {
    case Status::success: return "SUCCESS";
    case Status::failure: return "FAILURE";
    case Status::running: return "RUNNING";
    }
    return "FAILURE";
}

using LeafExecutor = std::function<Status(const Node& leaf)>;

/// Resume points of every Sequence for one executor. The tree itself is never
/// modified, so several executors can tick it with their own state.
class TickState {
public:
    std::size_t cursor(const Node* sequence) const {
        const auto it = cursors_.find(sequence);
        return it == cursors_.end() ? 0 : it->second;
    }
    void set(const Node* sequence, std::size_t child) { cursors_[sequence] = child; }
    void reset(const Node* sequence) { cursors_.erase(sequence); }
    void clear() { cursors_.clear(); }

private:
    std::unordered_map<const Node*, std::size_t> cursors_;
};

namespace detail {

inline Status tick_node(const Node& node, const LeafExecutor& exec, TickState& state) {
    const auto* seq = node.sequence();
    if (!seq) return exec(node);
    for (std::size_t i = state.cursor(&node); i < seq->children.size(); ++i) {
        const Status s = tick_node(seq->children[i], exec, state);
        if (s == Status::running) {
            state.set(&node, i);
            return s;
        }
        if (s == Status::failure) {
            state.reset(&node);
            return s;
        }
    }
    state.reset(&node);
    return Status::success;
}

} // namespace detail

inline Status tick(const BehaviorTree& tree, const LeafExecutor& exec, TickState& state) {
    if (tree.variant != Variant::executable) throw VariantError("only executable behavior trees can be ticked");
    return detail::tick_node(tree.root, exec, state);
}

} // namespace demoplan::bt

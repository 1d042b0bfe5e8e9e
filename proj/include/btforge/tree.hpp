#pragma once

#include <string>
#include <utility>
#include <vector>

namespace btforge {

enum class NodeArity { composite, leaf };

// Known behavior-tree node type names. Composites hold children, leaves
// hold a primitive name. Users may register extra types on a copy of the
// base registry.
class NodeTypeRegistry {
public:
    void register_type(std::string name, NodeArity arity);
    bool contains(const std::string& name) const;
    NodeArity arity(const std::string& name) const; // throws on unknown name
    const std::vector<std::pair<std::string, NodeArity>>& types() const { return types_; }

    // The six stock types: BehaviorTree/Selector/Sequence composites,
    // Condition/ActuatorAction/StateAction leaves.
    static const NodeTypeRegistry& base();

private:
    std::vector<std::pair<std::string, NodeArity>> types_;
};

struct Node {
    std::string type;
    NodeArity arity = NodeArity::leaf;
    std::string primitive;        // leaf payload; placeholder marker on skeletons
    std::vector<Node> children;   // composite payload
};

// Executable tree: leaves name primitives from an agent registry.
struct BehaviorTree {
    Node root;
};

// Grammar-derived structure whose leaves carry placeholder markers and
// await population with real primitive names.
struct SkeletonTree {
    Node root;
};

int node_count(const Node& node);

// Type structure rendered as a nested string, primitive names ignored.
// Used for fingerprints, deduplication and shape comparison.
std::string shape_string(const Node& node);

// Marker written into skeleton leaves, e.g. "placeholder_state_action".
std::string placeholder_name(const std::string& node_type);

} // namespace btforge

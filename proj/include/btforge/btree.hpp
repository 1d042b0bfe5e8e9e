#pragma once

#include <optional>
#include <string>
#include <vector>

#include "btforge/grammar.hpp"
#include "btforge/registry.hpp"
#include "btforge/tree.hpp"

namespace btforge::btree {

// Boolean tick contract: nodes either succeed or fail, there is no
// long-running state. Long actions are modeled as agent state changes
// polled on later ticks.
enum class TickStatus { success, failure };

struct Violation {
    std::string path; // child indices from the root, e.g. "/0/1"
    std::string rule;
};

enum class HallucinationReason { unknown_name, wrong_node_type };

struct Hallucination {
    std::string path;
    std::string name;
    HallucinationReason reason;
};

// Reports, never throws: harness metrics count invalid model output
// instead of aborting on it.
struct ValidationReport {
    bool syntactically_valid = true; // <=> violations empty
    std::vector<Violation> violations;
    std::vector<Hallucination> hallucinated_primitives;

    bool clean() const { return syntactically_valid && hallucinated_primitives.empty(); }
};

// Returns the span of text from the first "<BehaviorTree" through its
// balanced closing tag, ignoring any surrounding prose or code fences.
std::optional<std::string> locate_tree_markup(const std::string& text);

// Parses arbitrary model output into a tree. A pre-pass drops anything
// outside the <BehaviorTree> element; inside it, element tags must be
// registered node types, leaves carry trimmed text content and composites
// carry child elements only.
BehaviorTree parse_xml(const std::string& text,
                       const NodeTypeRegistry& types = NodeTypeRegistry::base());

// Canonical form: 4-space indentation, one element per line, trailing
// newline. parse_xml(serialize_xml(t)) structurally equals t. Does not
// validate.
std::string serialize_xml(const BehaviorTree& tree);
std::string serialize_xml(const SkeletonTree& tree);

// Membership check: is the tree's node-type structure derivable from the
// grammar's start symbol? Primitive names are ignored.
ValidationReport validate_syntax(const BehaviorTree& tree, const grammar::Grammar& grammar);
ValidationReport validate_syntax(const SkeletonTree& tree, const grammar::Grammar& grammar);

// Flags every leaf whose primitive is absent from the registry or
// registered under a different node type.
ValidationReport validate_primitives(const BehaviorTree& tree, const PrimitiveRegistry& registry);

// Short-circuiting evaluation. Selector succeeds at the first succeeding
// child, Sequence fails at the first failing child, leaves invoke their
// bound primitive. Requires a tree that passed both validations.
TickStatus tick(const BehaviorTree& tree, AgentContext& agent, const PrimitiveRegistry& registry);

// Shape and node types equal at every position, leaf names ignored.
bool structures_equal(const Node& a, const Node& b);
bool structures_equal(const BehaviorTree& a, const BehaviorTree& b);
bool structures_equal(const SkeletonTree& skeleton, const BehaviorTree& tree);

} // namespace btforge::btree

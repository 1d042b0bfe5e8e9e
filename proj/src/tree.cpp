#include "btforge/tree.hpp"

#include <cctype>
#include <stdexcept>

namespace btforge {

void NodeTypeRegistry::register_type(std::string name, NodeArity arity) {
    if (name.empty()) {
        throw std::invalid_argument("node type name must not be empty");
    }
    for (const auto& [existing, _] : types_) {
        if (existing == name) {
            throw std::invalid_argument("node type '" + name + "' already registered");
        }
    }
    types_.emplace_back(std::move(name), arity);
}

bool NodeTypeRegistry::contains(const std::string& name) const {
    for (const auto& [existing, _] : types_) {
        if (existing == name) return true;
    }
    return false;
}

NodeArity NodeTypeRegistry::arity(const std::string& name) const {
    for (const auto& [existing, arity] : types_) {
        if (existing == name) return arity;
    }
    throw std::invalid_argument("unknown node type '" + name + "'");
}

const NodeTypeRegistry& NodeTypeRegistry::base() {
    static const NodeTypeRegistry registry = [] {
        NodeTypeRegistry r;
        r.register_type("BehaviorTree", NodeArity::composite);
        r.register_type("Selector", NodeArity::composite);
        r.register_type("Sequence", NodeArity::composite);
        r.register_type("Condition", NodeArity::leaf);
        r.register_type("ActuatorAction", NodeArity::leaf);
        r.register_type("StateAction", NodeArity::leaf);
        return r;
    }();
    return registry;
}

int node_count(const Node& node) {
    int count = 1;
    for (const Node& child : node.children) {
        count += node_count(child);
    }
    return count;
}

std::string shape_string(const Node& node) {
    if (node.arity == NodeArity::leaf) {
        return node.type;
    }
    std::string out = node.type + "(";
    for (std::size_t i = 0; i < node.children.size(); ++i) {
        if (i > 0) out += ",";
        out += shape_string(node.children[i]);
    }
    out += ")";
    return out;
}

std::string placeholder_name(const std::string& node_type) {
    std::string out = "placeholder_";
    for (std::size_t i = 0; i < node_type.size(); ++i) {
        const char c = node_type[i];
        if (std::isupper(static_cast<unsigned char>(c))) {
            if (i > 0) out += '_';
            out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        } else {
            out += c;
        }
    }
    return out;
}

} // namespace btforge

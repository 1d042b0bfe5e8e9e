#include "btforge/registry.hpp"

#include <stdexcept>

namespace btforge {

void PrimitiveRegistry::add(std::string name, std::string node_type, std::string doc,
                            Callable fn) {
    if (name.empty()) throw std::invalid_argument("primitive name must not be empty");
    if (find(name)) throw std::invalid_argument("primitive '" + name + "' already registered");
    entries_.push_back({std::move(name), std::move(node_type), std::move(doc), std::move(fn)});
}

const PrimitiveRegistry::Entry* PrimitiveRegistry::find(const std::string& name) const {
    for (const Entry& entry : entries_) {
        if (entry.name == name) return &entry;
    }
    return nullptr;
}

std::vector<std::string> PrimitiveRegistry::names_of_type(const std::string& node_type) const {
    std::vector<std::string> names;
    for (const Entry& entry : entries_) {
        if (entry.node_type == node_type) names.push_back(entry.name);
    }
    return names;
}

} // namespace btforge

#pragma once

#include <functional>
#include <string>
#include <vector>

namespace btforge {

// Opaque handle to whatever an agent is bound to while a tree ticks. The
// simulator derives a concrete handle; tests derive spies.
struct AgentContext {
    virtual ~AgentContext() = default;
};

// The agent's available primitives: name, leaf node type, a doc block in
// the two-label format ("Node Type:" / "Description:") and the callable
// binding. Entry order is preserved; it drives prompt rendering.
class PrimitiveRegistry {
public:
    using Callable = std::function<bool(AgentContext&)>;

    struct Entry {
        std::string name;
        std::string node_type;
        std::string doc;
        Callable fn;
    };

    void add(std::string name, std::string node_type, std::string doc, Callable fn);

    const Entry* find(const std::string& name) const;
    const std::vector<Entry>& entries() const { return entries_; }
    std::vector<std::string> names_of_type(const std::string& node_type) const;
    bool empty() const { return entries_.empty(); }
    std::size_t size() const { return entries_.size(); }

private:
    std::vector<Entry> entries_;
};

} // namespace btforge

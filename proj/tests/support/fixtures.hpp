#pragma once

#include <string>
#include <vector>

#include "btforge/registry.hpp"

namespace btforge::testing {

// Canonical serialization of the stock example tree.
inline const char* example_tree_xml() {
    return "<BehaviorTree>\n"
           "    <Selector>\n"
           "        <Sequence>\n"
           "            <Condition>is_good_part_detected</Condition>\n"
           "            <ActuatorAction>pick_up_part</ActuatorAction>\n"
           "        </Sequence>\n"
           "        <StateAction>state_seek_source_area</StateAction>\n"
           "    </Selector>\n"
           "</BehaviorTree>\n";
}

// Smallest closed grammar: one rule, one terminal.
inline const char* minimal_grammar_json() {
    return R"({
  "start": "B",
  "rules": {"B": [["b"]]},
  "terminals": {"b": {"node_type": "BehaviorTree", "has_children": true}}
})";
}

// Registry whose callables just record invocations and replay a scripted
// outcome; node types mirror the built-in agent's.
class SpyAgent : public AgentContext {
public:
    std::vector<std::string> invoked;
};

inline PrimitiveRegistry spy_registry(bool condition_result, bool action_result) {
    PrimitiveRegistry registry;
    const auto spy = [](const std::string& name, bool result) {
        return [name, result](AgentContext& ctx) {
            static_cast<SpyAgent&>(ctx).invoked.push_back(name);
            return result;
        };
    };
    registry.add("cond_a", "Condition", "Node Type: Condition\nDescription: Scripted check.",
                 spy("cond_a", condition_result));
    registry.add("cond_b", "Condition", "Node Type: Condition\nDescription: Scripted check.",
                 spy("cond_b", condition_result));
    registry.add("act_a", "ActuatorAction",
                 "Node Type: ActuatorAction\nDescription: Scripted action.",
                 spy("act_a", action_result));
    registry.add("act_b", "ActuatorAction",
                 "Node Type: ActuatorAction\nDescription: Scripted action.",
                 spy("act_b", action_result));
    registry.add("state_a", "StateAction",
                 "Node Type: StateAction\nDescription: Scripted state change.",
                 spy("state_a", true));
    return registry;
}

} // namespace btforge::testing

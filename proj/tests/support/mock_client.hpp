#pragma once

#include <string>
#include <vector>

#include "btforge/btree.hpp"
#include "btforge/dataset.hpp"
#include "btforge/llm.hpp"
#include "btforge/registry.hpp"
#include "btforge/rng.hpp"

namespace btforge::testing {

// Pulls the skeleton out of a self-instruct request body.
inline SkeletonTree skeleton_from_request(const std::vector<llm::ChatMessage>& messages) {
    const auto markup = llm::extract_bt_xml(messages.back().content);
    REQUIRE(markup.has_value());
    const BehaviorTree tree = btree::parse_xml(*markup);
    return SkeletonTree{tree.root};
}

inline std::string tree_reply(const std::string& task, const BehaviorTree& tree) {
    return "TASK: " + task + "\n```xml\n" + btree::serialize_xml(tree) + "```\n";
}

// Obeys the self-instruct contract: fills the placeholders with registered
// primitives of the right node type and keeps the structure intact.
inline llm::ScriptedMockClient conforming_mock(const PrimitiveRegistry& registry,
                                               std::uint64_t seed = 1) {
    llm::ScriptedMockClient mock;
    mock.set_responder([&registry, seed](const std::vector<llm::ChatMessage>& messages) {
        const SkeletonTree skeleton = skeleton_from_request(messages);
        Rng rng(seed ^ llm::fingerprint(messages));
        const BehaviorTree tree = dataset::populate_random(skeleton, registry, rng);
        return tree_reply("keep the base tidy", tree);
    });
    return mock;
}

// Returns a populated tree with one extra Sequence branch bolted on.
inline llm::ScriptedMockClient shape_changing_mock(const PrimitiveRegistry& registry) {
    llm::ScriptedMockClient mock;
    mock.set_responder([&registry](const std::vector<llm::ChatMessage>& messages) {
        const SkeletonTree skeleton = skeleton_from_request(messages);
        Rng rng(3);
        BehaviorTree tree = dataset::populate_random(skeleton, registry, rng);
        Node extra;
        extra.type = "Sequence";
        extra.arity = NodeArity::composite;
        Node leaf;
        leaf.type = "StateAction";
        leaf.arity = NodeArity::leaf;
        leaf.primitive = "state_stop";
        extra.children.push_back(leaf);
        tree.root.children.push_back(extra);
        return tree_reply("a task no one asked for", tree);
    });
    return mock;
}

// Keeps the structure but invents a primitive name.
inline llm::ScriptedMockClient hallucinating_mock(const PrimitiveRegistry& registry) {
    llm::ScriptedMockClient mock;
    mock.set_responder([&registry](const std::vector<llm::ChatMessage>& messages) {
        const SkeletonTree skeleton = skeleton_from_request(messages);
        Rng rng(4);
        BehaviorTree tree = dataset::populate_random(skeleton, registry, rng);
        Node* leaf = &tree.root;
        while (leaf->arity == NodeArity::composite) leaf = &leaf->children.front();
        leaf->primitive = "teleport";
        return tree_reply("teleport somewhere nice", tree);
    });
    return mock;
}

} // namespace btforge::testing

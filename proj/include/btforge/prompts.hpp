#pragma once

#include <string>
#include <vector>

#include "btforge/llm.hpp"
#include "btforge/registry.hpp"
#include "btforge/tree.hpp"

namespace btforge::prompts {

enum class PromptStyle { layman, technical, spoonfed };

const char* style_name(PromptStyle style);
PromptStyle style_from_name(const std::string& name);

struct PrimitiveDoc {
    std::string name;
    std::string node_type;
    std::string description;
};

// One doc per registry entry, in registry order. Parsing of the
// "Node Type:" and "Description:" labels is exact and case-sensitive;
// the extracted node type must match the registry's.
std::vector<PrimitiveDoc> extract_primitive_docs(const PrimitiveRegistry& registry);

// Identifier to phrase: known prefixes ("is_", "state_") drop, remaining
// underscores become spaces. Unknown identifiers just lose underscores.
std::string humanize(const std::string& identifier);

// Compact logical rendering, deterministic per tree:
//   Sequence -> "if <conditions ' and '> then <actions ', then '>"
//   Selector children joined by ", otherwise "
std::string generate_technical(const BehaviorTree& tree);

// Verbose rendering: one full sentence per selector branch, capitalized
// and period-terminated. Never shorter than the technical form.
std::string generate_spoonfed(const BehaviorTree& tree);

struct Shot {
    std::string task;
    std::string tree_xml;
};

struct PromptBundle {
    std::string system_prompt;
    std::vector<Shot> shots; // 0, 1 or 2 for the experiment loop
    std::string user_task;
};

// Flat prompt layout: system block, then per shot a USER REQUEST /
// RESPONSE pair, then the real task with an open RESPONSE slot.
// Byte-stable; protected by a golden file.
std::string build_prompt(const PromptBundle& bundle);

// Chat-message form. Default packs everything after the system prompt
// into one user turn; per_turn_shots renders each shot as its own
// user/assistant exchange instead.
std::vector<llm::ChatMessage> to_messages(const PromptBundle& bundle, bool per_turn_shots = false);

// Shipped default system prompt: node-type list plus the extracted
// primitive docs for the given registry.
std::string default_system_prompt(const PrimitiveRegistry& registry,
                                  const NodeTypeRegistry& types = NodeTypeRegistry::base());

// Shots file: JSON array of {task, tree_xml}.
std::vector<Shot> load_shots_json(const std::string& text);
const char* default_shots_json();

// Template rendering for user-supplied layouts: substitutes
// {SYSTEM_PROMPT}, {BT_1}..{BT_n} and {PROMPT}. The shipped default
// template reproduces the build_prompt layout with the default shots'
// tasks written out literally.
std::string render_template(const std::string& template_text, const std::string& system_prompt,
                            const std::vector<std::string>& shot_trees, const std::string& task);
const char* default_prompt_template();

} // namespace btforge::prompts

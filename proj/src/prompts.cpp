#include "btforge/prompts.hpp"

#include <cctype>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace btforge::prompts {

using ordered_json = nlohmann::ordered_json;

const char* style_name(PromptStyle style) {
    switch (style) {
        case PromptStyle::layman: return "layman";
        case PromptStyle::technical: return "technical";
        case PromptStyle::spoonfed: return "spoonfed";
    }
    return "layman";
}

PromptStyle style_from_name(const std::string& name) {
    if (name == "layman") return PromptStyle::layman;
    if (name == "technical") return PromptStyle::technical;
    if (name == "spoonfed") return PromptStyle::spoonfed;
    throw std::invalid_argument("unknown prompt style '" + name + "'");
}

namespace {

std::string trim(const std::string& s) {
    std::size_t begin = 0;
    std::size_t end = s.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
    return s.substr(begin, end - begin);
}

// Collapses internal line wraps of a doc block into single spaces.
std::string join_wrapped_lines(const std::string& text) {
    std::string out;
    for (char c : text) {
        if (c == '\n' || c == '\r' || c == '\t') {
            if (!out.empty() && out.back() != ' ') out += ' ';
        } else {
            out += c;
        }
    }
    return trim(out);
}

} // namespace

std::vector<PrimitiveDoc> extract_primitive_docs(const PrimitiveRegistry& registry) {
    std::vector<PrimitiveDoc> docs;
    docs.reserve(registry.size());
    for (const auto& entry : registry.entries()) {
        const std::string& doc = entry.doc;
        const std::string type_label = "Node Type:";
        const std::string desc_label = "Description:";
        const std::size_t type_pos = doc.find(type_label);
        if (type_pos == std::string::npos) {
            throw std::invalid_argument("primitive '" + entry.name +
                                        "' doc block is missing the 'Node Type:' label");
        }
        const std::size_t desc_pos = doc.find(desc_label, type_pos);
        if (desc_pos == std::string::npos) {
            throw std::invalid_argument("primitive '" + entry.name +
                                        "' doc block is missing the 'Description:' label");
        }
        PrimitiveDoc out;
        out.name = entry.name;
        const std::size_t type_begin = type_pos + type_label.size();
        out.node_type = trim(doc.substr(type_begin, desc_pos - type_begin));
        out.description = join_wrapped_lines(doc.substr(desc_pos + desc_label.size()));
        if (out.node_type != entry.node_type) {
            throw std::invalid_argument("primitive '" + entry.name + "' declares node type '" +
                                        out.node_type + "' but is registered as '" +
                                        entry.node_type + "'");
        }
        docs.push_back(std::move(out));
    }
    return docs;
}

std::string humanize(const std::string& identifier) {
    // Longest matching prefix wins; unknown identifiers just lose their
    // underscores.
    static const std::vector<std::pair<std::string, std::string>> prefixes = {
        {"is_", ""},
        {"state_", ""},
    };
    std::string rest = identifier;
    for (const auto& [prefix, replacement] : prefixes) {
        if (rest.size() > prefix.size() && rest.compare(0, prefix.size(), prefix) == 0) {
            rest = replacement + rest.substr(prefix.size());
            break;
        }
    }
    for (char& c : rest) {
        if (c == '_') c = ' ';
    }
    return rest;
}

namespace {

bool is_condition_leaf(const Node& node) {
    return node.arity == NodeArity::leaf && node.type == "Condition";
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i > 0) out += sep;
        out += parts[i];
    }
    return out;
}

std::string render_technical(const Node& node);

// A sequence reads left to right as condition groups gating the actions
// that follow them: "if c1 and c2 then a1, then a2".
std::string render_sequence(const Node& node) {
    std::vector<std::string> segments;
    std::vector<std::string> conditions;
    std::vector<std::string> actions;
    const auto flush = [&]() {
        if (conditions.empty() && actions.empty()) return;
        if (conditions.empty()) {
            segments.push_back(join(actions, ", then "));
        } else if (actions.empty()) {
            segments.push_back("if " + join(conditions, " and "));
        } else {
            segments.push_back("if " + join(conditions, " and ") + " then " +
                               join(actions, ", then "));
        }
        conditions.clear();
        actions.clear();
    };
    for (const Node& child : node.children) {
        if (is_condition_leaf(child)) {
            if (!actions.empty()) flush();
            conditions.push_back(humanize(child.primitive));
        } else {
            actions.push_back(render_technical(child));
        }
    }
    flush();
    return join(segments, ", then ");
}

std::string render_technical(const Node& node) {
    if (node.arity == NodeArity::leaf) {
        return humanize(node.primitive);
    }
    if (node.type == "Sequence") {
        return render_sequence(node);
    }
    if (node.type == "Selector") {
        std::vector<std::string> branches;
        for (const Node& child : node.children) {
            branches.push_back(render_technical(child));
        }
        return join(branches, ", otherwise ");
    }
    // BehaviorTree and other single-purpose composites render through
    // their children.
    std::vector<std::string> parts;
    for (const Node& child : node.children) {
        parts.push_back(render_technical(child));
    }
    return join(parts, ", then ");
}

std::string capitalize(std::string text) {
    if (!text.empty()) {
        text[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(text[0])));
    }
    return text;
}

std::string render_spoonfed_sequence(const Node& node) {
    std::vector<std::string> segments;
    std::vector<std::string> conditions;
    std::vector<std::string> actions;
    const auto flush = [&]() {
        if (conditions.empty() && actions.empty()) return;
        if (conditions.empty()) {
            segments.push_back(join(actions, ", then "));
        } else if (actions.empty()) {
            segments.push_back("if " + join(conditions, " and "));
        } else {
            segments.push_back("if " + join(conditions, " and ") + ", then " +
                               join(actions, ", then "));
        }
        conditions.clear();
        actions.clear();
    };
    for (const Node& child : node.children) {
        if (is_condition_leaf(child)) {
            if (!actions.empty()) flush();
            conditions.push_back(humanize(child.primitive));
        } else if (child.arity == NodeArity::leaf) {
            actions.push_back(humanize(child.primitive));
        } else {
            actions.push_back(render_technical(child));
        }
    }
    flush();
    return join(segments, "; then ");
}

// One sentence per selector branch; later branches open with "Otherwise,".
std::vector<std::string> render_spoonfed_sentences(const Node& node) {
    if (node.arity == NodeArity::leaf) {
        return {capitalize(humanize(node.primitive)) + "."};
    }
    if (node.type == "Selector") {
        std::vector<std::string> sentences;
        for (std::size_t i = 0; i < node.children.size(); ++i) {
            std::vector<std::string> child = render_spoonfed_sentences(node.children[i]);
            for (std::size_t j = 0; j < child.size(); ++j) {
                if (i > 0 && j == 0) {
                    std::string body = child[j];
                    if (!body.empty()) {
                        body[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(body[0])));
                    }
                    sentences.push_back("Otherwise, " + body);
                } else {
                    sentences.push_back(child[j]);
                }
            }
        }
        return sentences;
    }
    if (node.type == "Sequence") {
        return {capitalize(render_spoonfed_sequence(node)) + "."};
    }
    std::vector<std::string> sentences;
    for (const Node& child : node.children) {
        for (std::string& sentence : render_spoonfed_sentences(child)) {
            sentences.push_back(std::move(sentence));
        }
    }
    return sentences;
}

} // namespace

std::string generate_technical(const BehaviorTree& tree) {
    return render_technical(tree.root);
}

std::string generate_spoonfed(const BehaviorTree& tree) {
    return join(render_spoonfed_sentences(tree.root), " ");
}

namespace {

std::string rstrip(const std::string& s) {
    std::size_t end = s.size();
    while (end > 0 && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
    return s.substr(0, end);
}

std::string user_request_block(const std::string& task) {
    return "USER REQUEST: Generate behavior tree to \"" + task +
           "\". Output only the XML behavior tree without extra text or explanations of the "
           "tree.";
}

} // namespace

std::string build_prompt(const PromptBundle& bundle) {
    std::string out = bundle.system_prompt + "\n\n";
    for (const Shot& shot : bundle.shots) {
        out += user_request_block(shot.task) + "\n\n";
        out += "RESPONSE: " + rstrip(shot.tree_xml) + "\n\n";
    }
    out += user_request_block(bundle.user_task) + "\n\n";
    out += "RESPONSE: ";
    return out;
}

std::vector<llm::ChatMessage> to_messages(const PromptBundle& bundle, bool per_turn_shots) {
    std::vector<llm::ChatMessage> messages;
    messages.push_back({"system", bundle.system_prompt});
    if (per_turn_shots) {
        for (const Shot& shot : bundle.shots) {
            messages.push_back({"user", user_request_block(shot.task)});
            messages.push_back({"assistant", rstrip(shot.tree_xml)});
        }
        messages.push_back({"user", user_request_block(bundle.user_task)});
        return messages;
    }
    // Flat layout: everything below the system block is one user turn.
    std::string body;
    for (const Shot& shot : bundle.shots) {
        body += user_request_block(shot.task) + "\n\n";
        body += "RESPONSE: " + rstrip(shot.tree_xml) + "\n\n";
    }
    body += user_request_block(bundle.user_task) + "\n\n";
    body += "RESPONSE: ";
    messages.push_back({"user", body});
    return messages;
}

std::string default_system_prompt(const PrimitiveRegistry& registry,
                                  const NodeTypeRegistry& types) {
    static const std::map<std::string, std::string> stock_lines = {
        {"BehaviorTree", "root element wrapping exactly one child."},
        {"Selector", "runs its children in order until one succeeds."},
        {"Sequence", "runs its children in order, stopping at the first failure."},
        {"Condition", "leaf that checks a fact about the agent or its surroundings."},
        {"ActuatorAction", "leaf that makes the agent act on the environment."},
        {"StateAction", "leaf that changes the agent's internal state."},
    };

    std::ostringstream out;
    out << "You control an agent by writing behavior trees in XML.\n\n";
    out << "Node types:\n";
    for (const auto& [name, arity] : types.types()) {
        auto it = stock_lines.find(name);
        if (it != stock_lines.end()) {
            out << "- " << name << ": " << it->second << "\n";
        } else {
            out << "- " << name << ": "
                << (arity == NodeArity::composite ? "composite node." : "leaf node.") << "\n";
        }
    }
    out << "\nAvailable primitives:\n";
    for (const PrimitiveDoc& doc : extract_primitive_docs(registry)) {
        out << "- " << doc.name << " (" << doc.node_type << "): " << doc.description << "\n";
    }
    out << "\nLeaf elements contain exactly one primitive name as text. Use only the primitives "
           "listed above.";
    return out.str();
}

std::vector<Shot> load_shots_json(const std::string& text) {
    ordered_json doc = ordered_json::parse(text);
    if (!doc.is_array()) throw std::invalid_argument("shots file must be a JSON array");
    std::vector<Shot> shots;
    for (const auto& item : doc) {
        shots.push_back({item.at("task").get<std::string>(), item.at("tree_xml").get<std::string>()});
    }
    return shots;
}

namespace {

void replace_all(std::string& text, const std::string& placeholder, const std::string& value) {
    std::size_t pos = 0;
    while ((pos = text.find(placeholder, pos)) != std::string::npos) {
        text.replace(pos, placeholder.size(), value);
        pos += value.size();
    }
}

} // namespace

std::string render_template(const std::string& template_text, const std::string& system_prompt,
                            const std::vector<std::string>& shot_trees, const std::string& task) {
    std::string out = template_text;
    replace_all(out, "{SYSTEM_PROMPT}", system_prompt);
    for (std::size_t i = 0; i < shot_trees.size(); ++i) {
        replace_all(out, "{BT_" + std::to_string(i + 1) + "}", rstrip(shot_trees[i]));
    }
    replace_all(out, "{PROMPT}", task);
    if (out.find("{BT_") != std::string::npos) {
        throw std::invalid_argument("template needs more shot trees than were provided");
    }
    return out;
}

const char* default_prompt_template() {
    return "{SYSTEM_PROMPT}\n"
           "\n"
           "USER REQUEST: Generate behavior tree to \"Find any part in the environment and pick "
           "it up\". Output only the XML behavior tree without extra text or explanations of the "
           "tree.\n"
           "\n"
           "RESPONSE: {BT_1}\n"
           "\n"
           "USER REQUEST: Generate behavior tree to \"Find all the good parts in the environment. "
           "If you find a good part, go to the base. If you are in the base then drop it there\". "
           "Output only the XML behavior tree without extra text or explanations of the tree.\n"
           "\n"
           "RESPONSE: {BT_2}\n"
           "\n"
           "USER REQUEST: Generate behavior tree to \"{PROMPT}\". Output only the XML behavior "
           "tree without extra text or explanations of the tree.\n"
           "\n"
           "RESPONSE: ";
}

} // namespace btforge::prompts

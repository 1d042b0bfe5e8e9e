#include "btforge/btree.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace btforge::btree {

namespace {

bool is_name_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

// Does text[pos..] start with "<BehaviorTree" as a whole tag name?
bool at_open_tag(const std::string& text, std::size_t pos, const std::string& name) {
    if (text.compare(pos, name.size() + 1, "<" + name) != 0) return false;
    const std::size_t after = pos + name.size() + 1;
    return after >= text.size() || !is_name_char(text[after]);
}

bool at_close_tag(const std::string& text, std::size_t pos, const std::string& name) {
    if (text.compare(pos, name.size() + 2, "</" + name) != 0) return false;
    const std::size_t after = pos + name.size() + 2;
    return after >= text.size() || !is_name_char(text[after]);
}

} // namespace

std::optional<std::string> locate_tree_markup(const std::string& text) {
    static const std::string root = "BehaviorTree";
    std::size_t start = std::string::npos;
    for (std::size_t i = 0; i + root.size() < text.size(); ++i) {
        if (text[i] == '<' && at_open_tag(text, i, root)) {
            start = i;
            break;
        }
    }
    if (start == std::string::npos) return std::nullopt;

    int depth = 0;
    std::size_t i = start;
    while (i < text.size()) {
        if (text[i] != '<') {
            ++i;
            continue;
        }
        if (at_close_tag(text, i, root)) {
            const std::size_t gt = text.find('>', i);
            if (gt == std::string::npos) return std::nullopt;
            --depth;
            if (depth == 0) return text.substr(start, gt + 1 - start);
            i = gt + 1;
            continue;
        }
        if (at_open_tag(text, i, root)) {
            const std::size_t gt = text.find('>', i);
            if (gt == std::string::npos) return std::nullopt;
            const bool self_closing = gt > i && text[gt - 1] == '/';
            if (self_closing) {
                if (depth == 0) return text.substr(start, gt + 1 - start);
            } else {
                ++depth;
            }
            i = gt + 1;
            continue;
        }
        ++i;
    }
    return std::nullopt;
}

namespace {

std::string unescape_text(const std::string& raw) {
    std::string out;
    out.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] != '&') {
            out += raw[i];
            continue;
        }
        const auto entity = [&](const char* name, char value) {
            const std::size_t len = std::string(name).size();
            if (raw.compare(i, len, name) == 0) {
                out += value;
                i += len - 1;
                return true;
            }
            return false;
        };
        if (entity("&amp;", '&') || entity("&lt;", '<') || entity("&gt;", '>') ||
            entity("&quot;", '"') || entity("&apos;", '\'')) {
            continue;
        }
        out += raw[i];
    }
    return out;
}

std::string escape_text(const std::string& raw) {
    std::string out;
    out.reserve(raw.size());
    for (char c : raw) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string trim(const std::string& s) {
    std::size_t begin = 0;
    std::size_t end = s.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
    return s.substr(begin, end - begin);
}

class XmlParser {
public:
    XmlParser(const std::string& text, const NodeTypeRegistry& types)
        : text_(text), types_(types) {}

    Node parse_document() {
        skip_insignificant();
        Node root = parse_element();
        return root;
    }

private:
    [[noreturn]] void fail(const std::string& message) const {
        throw std::invalid_argument("malformed behavior tree XML: " + message);
    }

    void skip_insignificant() {
        while (pos_ < text_.size()) {
            if (std::isspace(static_cast<unsigned char>(text_[pos_]))) {
                ++pos_;
                continue;
            }
            if (text_.compare(pos_, 4, "<!--") == 0) {
                const std::size_t end = text_.find("-->", pos_ + 4);
                if (end == std::string::npos) fail("unterminated comment");
                pos_ = end + 3;
                continue;
            }
            break;
        }
    }

    std::string read_name() {
        std::string name;
        while (pos_ < text_.size() && is_name_char(text_[pos_])) {
            name += text_[pos_++];
        }
        if (name.empty()) fail("expected a tag name");
        return name;
    }

    // Attributes are tolerated and ignored; the format carries no data in
    // them. Returns true when the tag self-closes.
    bool skip_to_tag_end() {
        while (pos_ < text_.size() && text_[pos_] != '>') ++pos_;
        if (pos_ >= text_.size()) fail("unterminated tag");
        const bool self_closing = text_[pos_ - 1] == '/';
        ++pos_;
        return self_closing;
    }

    Node parse_element() {
        if (pos_ >= text_.size() || text_[pos_] != '<') fail("expected an element");
        ++pos_;
        const std::string name = read_name();
        if (!types_.contains(name)) throw std::invalid_argument("unknown tag " + name);
        const NodeArity arity = types_.arity(name);
        const bool self_closing = skip_to_tag_end();

        Node node;
        node.type = name;
        node.arity = arity;
        if (self_closing) return node;

        if (arity == NodeArity::composite) {
            parse_children(node);
        } else {
            parse_leaf_text(node);
        }

        // Closing tag.
        if (text_.compare(pos_, 2, "</") != 0) fail("expected closing tag for <" + name + ">");
        pos_ += 2;
        const std::string closing = read_name();
        if (closing != name) fail("mismatched closing tag </" + closing + "> for <" + name + ">");
        if (pos_ >= text_.size() || text_[pos_] != '>') fail("unterminated closing tag");
        ++pos_;
        return node;
    }

    void parse_children(Node& node) {
        while (true) {
            const std::size_t before = pos_;
            skip_insignificant();
            if (pos_ >= text_.size()) fail("unterminated <" + node.type + "> element");
            if (text_[pos_] == '<') {
                if (text_.compare(pos_, 2, "</") == 0) return;
                node.children.push_back(parse_element());
                continue;
            }
            pos_ = before;
            throw std::invalid_argument("composite <" + node.type + "> contains text content");
        }
    }

    void parse_leaf_text(Node& node) {
        std::string raw;
        while (pos_ < text_.size() && text_[pos_] != '<') {
            raw += text_[pos_++];
        }
        if (pos_ >= text_.size()) fail("unterminated <" + node.type + "> element");
        if (text_.compare(pos_, 2, "</") != 0) {
            throw std::invalid_argument("leaf <" + node.type + "> contains child elements");
        }
        node.primitive = trim(unescape_text(raw));
    }

    const std::string& text_;
    const NodeTypeRegistry& types_;
    std::size_t pos_ = 0;
};

} // namespace

BehaviorTree parse_xml(const std::string& text, const NodeTypeRegistry& types) {
    const auto markup = locate_tree_markup(text);
    if (!markup) {
        throw std::invalid_argument("malformed behavior tree XML: no <BehaviorTree> element found");
    }
    XmlParser parser(*markup, types);
    return BehaviorTree{parser.parse_document()};
}

namespace {

void write_node(const Node& node, int indent, std::string& out) {
    const std::string pad(static_cast<std::size_t>(indent) * 4, ' ');
    if (node.arity == NodeArity::leaf) {
        out += pad + "<" + node.type + ">" + escape_text(node.primitive) + "</" + node.type + ">\n";
        return;
    }
    out += pad + "<" + node.type + ">\n";
    for (const Node& child : node.children) {
        write_node(child, indent + 1, out);
    }
    out += pad + "</" + node.type + ">\n";
}

} // namespace

std::string serialize_xml(const BehaviorTree& tree) {
    std::string out;
    write_node(tree.root, 0, out);
    return out;
}

std::string serialize_xml(const SkeletonTree& tree) {
    std::string out;
    write_node(tree.root, 0, out);
    return out;
}

namespace {

// Membership search: can a rule derive a contiguous forest of sibling
// nodes? Spans are (parent, begin, end) over a parent's children, with the
// root as a one-tree span of its own. Completed results are memoized;
// results that were pruned by an in-progress cycle are only cached when
// they are definite (true).
class DerivationSearch {
public:
    DerivationSearch(const grammar::Grammar& grammar, const Node& root)
        : grammar_(grammar), root_(root) {
        index_nodes(root_);
    }

    bool tree_derivable() {
        return derive_rule(grammar_.start(), nullptr, 0, 1);
    }

    // Could this composite's children be valid below a node of its type
    // in any production? Localizes failures for diagnostics.
    bool children_locally_derivable(const Node& node) {
        for (const auto& [key, rule] : grammar_.rules()) {
            for (const auto& option : rule.options) {
                for (std::size_t i = 0; i < option.size(); ++i) {
                    const grammar::TerminalDef* t = grammar_.find_terminal(option[i]);
                    if (!t || !t->has_children || t->node_type != node.type) continue;
                    if (match_option(option, i + 1, &node, 0, node.children.size())) {
                        return true;
                    }
                }
            }
        }
        return false;
    }

private:
    void index_nodes(const Node& node) {
        ids_.emplace(&node, static_cast<int>(ids_.size()));
        for (const Node& child : node.children) index_nodes(child);
    }

    const Node& span_node(const Node* parent, std::size_t i) const {
        return parent ? parent->children[i] : root_;
    }

    std::string span_key(const std::string& rule, const Node* parent, std::size_t b,
                         std::size_t e) const {
        const int pid = parent ? ids_.at(parent) : -1;
        return rule + "|" + std::to_string(pid) + "|" + std::to_string(b) + "|" +
               std::to_string(e);
    }

    bool derive_rule(const std::string& key, const Node* parent, std::size_t b, std::size_t e) {
        const std::string memo_key = span_key(key, parent, b, e);
        if (auto it = memo_.find(memo_key); it != memo_.end()) return it->second;
        if (in_progress_.count(memo_key)) {
            cut_hit_ = true;
            return false;
        }
        in_progress_.insert(memo_key);

        const bool outer_cut = cut_hit_;
        cut_hit_ = false;
        bool result = false;
        const grammar::Rule* rule = grammar_.find_rule(key);
        if (rule) {
            for (const auto& option : rule->options) {
                if (match_option(option, 0, parent, b, e)) {
                    result = true;
                    break;
                }
            }
        }
        in_progress_.erase(memo_key);
        if (result || !cut_hit_) {
            memo_[memo_key] = result;
        }
        cut_hit_ = outer_cut || (cut_hit_ && !result);
        return result;
    }

    bool match_option(const std::vector<std::string>& option, std::size_t i, const Node* parent,
                      std::size_t b, std::size_t e) {
        if (i == option.size()) return b == e;
        const std::string& sym = option[i];
        if (const grammar::TerminalDef* terminal = grammar_.find_terminal(sym)) {
            if (b >= e) return false;
            const Node& node = span_node(parent, b);
            if (node.type != terminal->node_type) return false;
            if (terminal->has_children) {
                // The node absorbs the rest of the option as its children,
                // so it must close the span by itself.
                if (e - b != 1) return false;
                return match_option(option, i + 1, &node, 0, node.children.size());
            }
            if (!node.children.empty()) return false;
            return match_option(option, i + 1, parent, b + 1, e);
        }
        for (std::size_t split = b; split <= e; ++split) {
            if (derive_rule(sym, parent, b, split) && match_option(option, i + 1, parent, split, e)) {
                return true;
            }
        }
        return false;
    }

    const grammar::Grammar& grammar_;
    const Node& root_;
    std::unordered_map<const Node*, int> ids_;
    std::unordered_map<std::string, bool> memo_;
    std::unordered_set<std::string> in_progress_;
    bool cut_hit_ = false;
};

void collect_type_violations(const Node& node, const std::string& path,
                             const grammar::Grammar& grammar, std::vector<Violation>& out) {
    const auto& emitted = grammar.emitted_node_types();
    auto it = emitted.find(node.type);
    if (it == emitted.end()) {
        out.push_back({path, "unknown node type '" + node.type + "'"});
    } else if (!it->second && !node.children.empty()) {
        out.push_back({path, "node type '" + node.type + "' cannot have children"});
    }
    for (std::size_t i = 0; i < node.children.size(); ++i) {
        collect_type_violations(node.children[i], path + "/" + std::to_string(i), grammar, out);
    }
}

void collect_local_violations(const Node& node, const std::string& path,
                              const grammar::Grammar& grammar, DerivationSearch& search,
                              std::vector<Violation>& out) {
    if (node.arity == NodeArity::composite || !node.children.empty()) {
        if (!search.children_locally_derivable(node)) {
            out.push_back({path, "children of '" + node.type + "' match no production"});
        }
    }
    for (std::size_t i = 0; i < node.children.size(); ++i) {
        collect_local_violations(node.children[i], path + "/" + std::to_string(i), grammar, search,
                                 out);
    }
}

ValidationReport validate_syntax_node(const Node& root, const grammar::Grammar& grammar) {
    ValidationReport report;
    collect_type_violations(root, "/", grammar, report.violations);
    if (report.violations.empty()) {
        DerivationSearch search(grammar, root);
        if (!search.tree_derivable()) {
            collect_local_violations(root, "/", grammar, search, report.violations);
            if (report.violations.empty()) {
                report.violations.push_back(
                    {"/", "tree not derivable from start symbol '" + grammar.start() + "'"});
            }
        }
    }
    report.syntactically_valid = report.violations.empty();
    return report;
}

} // namespace

ValidationReport validate_syntax(const BehaviorTree& tree, const grammar::Grammar& grammar) {
    return validate_syntax_node(tree.root, grammar);
}

ValidationReport validate_syntax(const SkeletonTree& tree, const grammar::Grammar& grammar) {
    return validate_syntax_node(tree.root, grammar);
}

namespace {

void collect_hallucinations(const Node& node, const std::string& path,
                            const PrimitiveRegistry& registry, std::vector<Hallucination>& out) {
    if (node.arity == NodeArity::leaf) {
        const PrimitiveRegistry::Entry* entry = registry.find(node.primitive);
        if (!entry) {
            out.push_back({path, node.primitive, HallucinationReason::unknown_name});
        } else if (entry->node_type != node.type) {
            out.push_back({path, node.primitive, HallucinationReason::wrong_node_type});
        }
        return;
    }
    for (std::size_t i = 0; i < node.children.size(); ++i) {
        collect_hallucinations(node.children[i], path + "/" + std::to_string(i), registry, out);
    }
}

} // namespace

ValidationReport validate_primitives(const BehaviorTree& tree, const PrimitiveRegistry& registry) {
    ValidationReport report;
    collect_hallucinations(tree.root, "/", registry, report.hallucinated_primitives);
    return report;
}

namespace {

TickStatus tick_node(const Node& node, AgentContext& agent, const PrimitiveRegistry& registry) {
    if (node.arity == NodeArity::leaf) {
        const PrimitiveRegistry::Entry* entry = registry.find(node.primitive);
        if (!entry) {
            throw std::runtime_error("unresolvable primitive '" + node.primitive + "'");
        }
        return entry->fn(agent) ? TickStatus::success : TickStatus::failure;
    }
    if (node.type == "BehaviorTree") {
        if (node.children.size() != 1) {
            throw std::invalid_argument("BehaviorTree root must wrap exactly one child");
        }
        return tick_node(node.children.front(), agent, registry);
    }
    if (node.type == "Selector") {
        if (node.children.empty()) {
            throw std::invalid_argument("cannot tick a Selector with no children");
        }
        for (const Node& child : node.children) {
            if (tick_node(child, agent, registry) == TickStatus::success) {
                return TickStatus::success;
            }
        }
        return TickStatus::failure;
    }
    if (node.type == "Sequence") {
        if (node.children.empty()) {
            throw std::invalid_argument("cannot tick a Sequence with no children");
        }
        for (const Node& child : node.children) {
            if (tick_node(child, agent, registry) == TickStatus::failure) {
                return TickStatus::failure;
            }
        }
        return TickStatus::success;
    }
    throw std::invalid_argument("no tick semantics for node type '" + node.type + "'");
}

} // namespace

TickStatus tick(const BehaviorTree& tree, AgentContext& agent, const PrimitiveRegistry& registry) {
    return tick_node(tree.root, agent, registry);
}

bool structures_equal(const Node& a, const Node& b) {
    if (a.type != b.type || a.children.size() != b.children.size()) return false;
    for (std::size_t i = 0; i < a.children.size(); ++i) {
        if (!structures_equal(a.children[i], b.children[i])) return false;
    }
    return true;
}

bool structures_equal(const BehaviorTree& a, const BehaviorTree& b) {
    return structures_equal(a.root, b.root);
}

bool structures_equal(const SkeletonTree& skeleton, const BehaviorTree& tree) {
    return structures_equal(skeleton.root, tree.root);
}

} // namespace btforge::btree

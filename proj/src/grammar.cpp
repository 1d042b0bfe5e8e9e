#include "btforge/grammar.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>
#include <utility>

#include <json.hpp>

namespace btforge::grammar {

using ordered_json = nlohmann::ordered_json;

bool Grammar::is_list_rule(const std::string& key) {
    return key.size() > 1 && key.back() == 'n';
}

const Rule* Grammar::find_rule(const std::string& key) const {
    for (const auto& [name, rule] : rules_) {
        if (name == key) return &rule;
    }
    return nullptr;
}

const TerminalDef* Grammar::find_terminal(const std::string& key) const {
    for (const auto& [name, def] : terminals_) {
        if (name == key) return &def;
    }
    return nullptr;
}

Grammar Grammar::parse(const std::string& json_text, const NodeTypeRegistry& types) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(json_text);
    } catch (const std::exception& e) {
        throw std::invalid_argument(std::string("grammar document is not valid JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("start") || !doc.contains("rules") ||
        !doc.contains("terminals")) {
        throw std::invalid_argument("grammar document needs top-level start/rules/terminals keys");
    }

    Grammar g;
    g.start_ = doc.at("start").get<std::string>();

    for (const auto& [key, value] : doc.at("terminals").items()) {
        if (g.find_terminal(key)) {
            throw std::invalid_argument("duplicate rule key '" + key + "'");
        }
        TerminalDef def;
        def.node_type = value.at("node_type").get<std::string>();
        def.has_children = value.value("has_children", false);
        if (!types.contains(def.node_type)) {
            throw std::invalid_argument("terminal '" + key + "' names unregistered node type '" +
                                        def.node_type + "'");
        }
        const bool composite = types.arity(def.node_type) == NodeArity::composite;
        if (composite != def.has_children) {
            throw std::invalid_argument("terminal '" + key + "' has_children flag contradicts node type '" +
                                        def.node_type + "'");
        }
        g.emitted_types_[def.node_type] = def.has_children;
        g.terminals_.emplace_back(key, std::move(def));
    }

    for (const auto& [key, value] : doc.at("rules").items()) {
        if (g.find_rule(key) || g.find_terminal(key)) {
            throw std::invalid_argument("duplicate rule key '" + key + "'");
        }
        Rule rule;
        if (!value.is_array()) {
            throw std::invalid_argument("rule '" + key + "' must map to an array of options");
        }
        for (const auto& option : value) {
            if (!option.is_array()) {
                throw std::invalid_argument("rule '" + key + "' options must be arrays of symbols");
            }
            std::vector<std::string> symbols;
            for (const auto& sym : option) {
                symbols.push_back(sym.get<std::string>());
            }
            rule.options.push_back(std::move(symbols));
        }
        if (rule.options.empty()) {
            throw std::invalid_argument("rule '" + key + "' has no options");
        }
        g.rules_.emplace_back(key, std::move(rule));
    }

    // Closure: every referenced symbol resolves to a rule or a terminal.
    for (const auto& [key, rule] : g.rules_) {
        for (const auto& option : rule.options) {
            for (const auto& sym : option) {
                if (!g.find_rule(sym) && !g.find_terminal(sym)) {
                    throw std::invalid_argument("undefined symbol " + sym + " referenced by rule '" +
                                                key + "'");
                }
            }
        }
    }
    if (!g.find_rule(g.start_)) {
        throw std::invalid_argument("start symbol '" + g.start_ + "' is not a rule key");
    }

    // List rules: exactly one self-recursive option and at least one
    // option that terminates the list.
    for (auto& [key, rule] : g.rules_) {
        if (!is_list_rule(key)) continue;
        for (std::size_t i = 0; i < rule.options.size(); ++i) {
            const auto& option = rule.options[i];
            const bool recursive =
                std::find(option.begin(), option.end(), key) != option.end();
            if (recursive) {
                if (rule.recursive_option) {
                    throw std::invalid_argument("list rule '" + key +
                                                "' has more than one recursive option");
                }
                rule.recursive_option = static_cast<int>(i);
            } else if (option.empty()) {
                if (!rule.empty_option) rule.empty_option = static_cast<int>(i);
            } else if (!rule.single_option) {
                rule.single_option = static_cast<int>(i);
            }
        }
        if (!rule.recursive_option) {
            throw std::invalid_argument("list rule '" + key + "' has no recursive option");
        }
        if (!rule.single_option && !rule.empty_option) {
            throw std::invalid_argument("list rule '" + key + "' has no non-recursive option");
        }
    }

    return g;
}

Genotype random_genotype(Rng& rng, int length, int max_codon) {
    if (length < 1) throw std::invalid_argument("genotype length must be >= 1");
    if (max_codon < 0) throw std::invalid_argument("max_codon must be >= 0");
    Genotype genotype;
    genotype.codons.reserve(static_cast<std::size_t>(length));
    for (int i = 0; i < length; ++i) {
        genotype.codons.push_back(
            static_cast<int>(rng.uniform_u32(static_cast<std::uint32_t>(max_codon))));
    }
    return genotype;
}

namespace {

class Decoder {
public:
    Decoder(const Grammar& grammar, const Genotype& genotype, const StructureParams& params)
        : grammar_(grammar), codons_(genotype.codons), params_(params) {}

    Node run() {
        std::vector<Node> roots;
        expand_nonterminal(grammar_.start(), "", {}, roots);
        if (roots.size() != 1) {
            throw std::runtime_error("start symbol must derive exactly one root node");
        }
        return std::move(roots.front());
    }

private:
    int next_codon() {
        const int codon = codons_[cursor_ % codons_.size()];
        ++cursor_;
        if (codon < 0) throw std::invalid_argument("codons must be non-negative");
        return codon;
    }

    int effective_list_max(const std::string& key) const {
        auto it = params_.list_max.find(key);
        return it != params_.list_max.end() ? it->second : params_.default_list_max;
    }

    int select_option(const std::string& key, const Rule& rule, const std::string& parent_type,
                      int rec_depth) {
        const int option_count = static_cast<int>(rule.options.size());
        const bool list_rule = Grammar::is_list_rule(key);

        // list_always pins the whole list shape, so it wins over every
        // other control and consumes no codon.
        if (list_rule) {
            auto always = params_.list_always.find(key);
            if (always != params_.list_always.end()) {
                const int want = always->second;
                if (want < 0) throw std::invalid_argument("list_always must be >= 0");
                if (want == 0) {
                    if (!rule.empty_option) {
                        throw std::invalid_argument("list_always=0 but rule '" + key +
                                                    "' has no empty option");
                    }
                    return *rule.empty_option;
                }
                if (rec_depth < want - 1) return *rule.recursive_option;
                return *rule.single_option;
            }
        }

        auto by_parent = params_.parent.find(key);
        if (by_parent != params_.parent.end()) {
            auto forced = by_parent->second.find(parent_type);
            if (forced != by_parent->second.end()) {
                if (forced->second < 0 || forced->second >= option_count) {
                    throw std::invalid_argument("parent-forced option index out of range for rule '" +
                                                key + "'");
                }
                return forced->second;
            }
        }

        auto only = params_.only.find(key);
        if (only != params_.only.end()) {
            if (only->second < 0 || only->second >= option_count) {
                throw std::invalid_argument("only index out of range for rule '" + key + "'");
            }
            return only->second;
        }

        std::vector<int> admissible;
        const std::vector<int>* excluded = nullptr;
        auto excl = params_.exclude.find(key);
        if (excl != params_.exclude.end()) excluded = &excl->second;
        for (int i = 0; i < option_count; ++i) {
            if (excluded &&
                std::find(excluded->begin(), excluded->end(), i) != excluded->end()) {
                continue;
            }
            if (list_rule && rec_depth >= effective_list_max(key) &&
                i == *rule.recursive_option) {
                continue;
            }
            admissible.push_back(i);
        }
        if (admissible.empty()) {
            throw std::invalid_argument("only/exclude leave no admissible option for rule '" + key +
                                        "'");
        }
        const int codon = next_codon();
        return admissible[static_cast<std::size_t>(codon) % admissible.size()];
    }

    void expand_nonterminal(const std::string& key, const std::string& parent_type,
                            std::map<std::string, int> rec_depths, std::vector<Node>& out) {
        const Rule* rule = grammar_.find_rule(key);
        if (!rule) throw std::logic_error("symbol '" + key + "' is not a rule");
        const int depth = rec_depths.count(key) ? rec_depths.at(key) : 0;
        const int idx = select_option(key, *rule, parent_type, depth);
        rec_depths[key] = depth + 1;
        expand_symbols(rule->options[static_cast<std::size_t>(idx)], 0, parent_type, rec_depths,
                       out);
    }

    void expand_symbols(const std::vector<std::string>& symbols, std::size_t i,
                        const std::string& parent_type, const std::map<std::string, int>& rec_depths,
                        std::vector<Node>& out) {
        if (i == symbols.size()) return;
        const std::string& sym = symbols[i];
        if (const TerminalDef* terminal = grammar_.find_terminal(sym)) {
            if (++nodes_emitted_ > params_.node_budget) {
                throw std::runtime_error("expansion exceeds node budget (" +
                                         std::to_string(params_.node_budget) + " nodes)");
            }
            Node node;
            node.type = terminal->node_type;
            if (terminal->has_children) {
                // The rest of this option becomes the children of the
                // emitted node; new subtree, fresh recursion depths.
                node.arity = NodeArity::composite;
                expand_symbols(symbols, i + 1, terminal->node_type, {}, node.children);
                out.push_back(std::move(node));
                return;
            }
            node.arity = NodeArity::leaf;
            node.primitive = placeholder_name(terminal->node_type);
            out.push_back(std::move(node));
            expand_symbols(symbols, i + 1, parent_type, rec_depths, out);
            return;
        }
        expand_nonterminal(sym, parent_type, rec_depths, out);
        expand_symbols(symbols, i + 1, parent_type, rec_depths, out);
    }

    const Grammar& grammar_;
    const std::vector<int>& codons_;
    const StructureParams& params_;
    std::size_t cursor_ = 0;
    int nodes_emitted_ = 0;
};

void validate_params(const Grammar& grammar, const StructureParams& params) {
    for (const auto& [key, indices] : params.exclude) {
        const Rule* rule = grammar.find_rule(key);
        if (!rule) continue;
        const int option_count = static_cast<int>(rule->options.size());
        int survivors = 0;
        for (int i = 0; i < option_count; ++i) {
            if (std::find(indices.begin(), indices.end(), i) == indices.end()) ++survivors;
        }
        if (survivors == 0 && !params.only.count(key)) {
            throw std::invalid_argument("only/exclude leave no admissible option for rule '" + key +
                                        "'");
        }
    }
}

} // namespace

SkeletonTree decode(const Grammar& grammar, const Genotype& genotype,
                    const StructureParams& params) {
    if (genotype.codons.empty()) {
        throw std::invalid_argument("genotype must contain at least one codon");
    }
    if (params.node_budget < 1) throw std::invalid_argument("node budget must be >= 1");
    validate_params(grammar, params);
    Decoder decoder(grammar, genotype, params);
    return SkeletonTree{decoder.run()};
}

namespace {

using Forest = std::vector<Node>;

int forest_nodes(const Forest& forest) {
    int total = 0;
    for (const Node& node : forest) total += node_count(node);
    return total;
}

std::string forest_shape(const Forest& forest) {
    std::string out;
    for (const Node& node : forest) {
        out += shape_string(node);
        out += ";";
    }
    return out;
}

class Enumerator {
public:
    Enumerator(const Grammar& grammar, int max_nodes)
        : grammar_(grammar), max_nodes_(max_nodes) {
        depth_limit_ = (static_cast<int>(grammar.key_count()) + 2) * (max_nodes + 2) * 4;
    }

    std::vector<Forest> symbol_forests(const std::string& key, int budget) {
        if (budget <= 0) return {};
        const std::string memo_key = "s|" + key + "|" + std::to_string(budget);
        if (auto it = memo_.find(memo_key); it != memo_.end()) return it->second;
        if (in_progress_.count(memo_key)) return {}; // unit cycle, nothing new
        in_progress_.insert(memo_key);
        guard_depth();

        const Rule* rule = grammar_.find_rule(key);
        std::vector<Forest> results;
        std::set<std::string> seen;
        for (std::size_t opt = 0; opt < rule->options.size(); ++opt) {
            for (Forest& forest : option_forests(key, static_cast<int>(opt), 0, budget)) {
                const std::string shape = forest_shape(forest);
                if (seen.insert(shape).second) results.push_back(std::move(forest));
            }
        }

        --depth_;
        in_progress_.erase(memo_key);
        memo_[memo_key] = results;
        return results;
    }

private:
    void guard_depth() {
        if (++depth_ > depth_limit_) {
            throw std::runtime_error("enumeration budget exceeded");
        }
    }

    std::vector<Forest> option_forests(const std::string& key, int opt, std::size_t i,
                                       int budget) {
        if (budget < 0) return {};
        const std::vector<std::string>& symbols =
            grammar_.find_rule(key)->options[static_cast<std::size_t>(opt)];
        if (i == symbols.size()) {
            return {Forest{}};
        }
        const std::string memo_key = "o|" + key + "|" + std::to_string(opt) + "|" +
                                     std::to_string(i) + "|" + std::to_string(budget);
        if (auto it = memo_.find(memo_key); it != memo_.end()) return it->second;
        guard_depth();

        std::vector<Forest> results;
        const std::string& sym = symbols[i];
        if (const TerminalDef* terminal = grammar_.find_terminal(sym)) {
            if (budget >= 1) {
                if (terminal->has_children) {
                    // Remaining symbols derive the children of this node.
                    for (const Forest& children : option_forests(key, opt, i + 1, budget - 1)) {
                        Node node;
                        node.type = terminal->node_type;
                        node.arity = NodeArity::composite;
                        node.children = children;
                        results.push_back(Forest{std::move(node)});
                    }
                } else {
                    Node leaf;
                    leaf.type = terminal->node_type;
                    leaf.arity = NodeArity::leaf;
                    leaf.primitive = placeholder_name(terminal->node_type);
                    for (const Forest& rest : option_forests(key, opt, i + 1, budget - 1)) {
                        Forest forest;
                        forest.push_back(leaf);
                        forest.insert(forest.end(), rest.begin(), rest.end());
                        results.push_back(std::move(forest));
                    }
                }
            }
        } else {
            for (const Forest& head : symbol_forests(sym, budget)) {
                const int used = forest_nodes(head);
                for (const Forest& rest : option_forests(key, opt, i + 1, budget - used)) {
                    Forest forest = head;
                    forest.insert(forest.end(), rest.begin(), rest.end());
                    results.push_back(std::move(forest));
                }
            }
        }

        --depth_;
        memo_[memo_key] = results;
        return results;
    }

    const Grammar& grammar_;
    int max_nodes_;
    int depth_ = 0;
    int depth_limit_ = 0;
    std::map<std::string, std::vector<Forest>> memo_;
    std::set<std::string> in_progress_;
};

} // namespace

std::vector<SkeletonTree> enumerate_skeletons(const Grammar& grammar, int max_nodes) {
    if (max_nodes < 1) throw std::invalid_argument("max_nodes must be >= 1");
    Enumerator enumerator(grammar, max_nodes);
    std::vector<SkeletonTree> skeletons;
    std::set<std::string> seen;
    for (Forest& forest : enumerator.symbol_forests(grammar.start(), max_nodes)) {
        if (forest.size() != 1) continue;
        const std::string shape = shape_string(forest.front());
        if (seen.insert(shape).second) {
            skeletons.push_back(SkeletonTree{std::move(forest.front())});
        }
    }
    std::sort(skeletons.begin(), skeletons.end(), [](const SkeletonTree& a, const SkeletonTree& b) {
        const int na = node_count(a.root);
        const int nb = node_count(b.root);
        if (na != nb) return na < nb;
        return shape_string(a.root) < shape_string(b.root);
    });
    return skeletons;
}

const Grammar& default_grammar() {
    static const Grammar grammar = Grammar::parse(default_grammar_json());
    return grammar;
}

} // namespace btforge::grammar

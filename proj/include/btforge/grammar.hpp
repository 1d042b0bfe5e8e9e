#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "btforge/rng.hpp"
#include "btforge/tree.hpp"

namespace btforge::grammar {

// A terminal symbol resolves to one node type. Terminals marked
// has_children absorb the remaining symbols of their production option as
// the children of the emitted node.
struct TerminalDef {
    std::string node_type;
    bool has_children = false;
};

struct Rule {
    std::vector<std::vector<std::string>> options;
    // Filled for list rules (keys ending in lowercase 'n'):
    std::optional<int> recursive_option; // the option referencing the key itself
    std::optional<int> single_option;    // first non-recursive, non-empty option
    std::optional<int> empty_option;     // first empty option, if any
};

// Rule table: ordered nonterminal rules plus terminal definitions. Rule
// and option order follow the source document exactly; option indices are
// load-bearing for decoding and for structure parameters.
class Grammar {
public:
    // Loads the JSON rule-table document (top-level keys "start", "rules",
    // "terminals") and checks closure, node-type registration and the
    // list-rule shape invariants.
    static Grammar parse(const std::string& json_text,
                         const NodeTypeRegistry& types = NodeTypeRegistry::base());

    const std::string& start() const { return start_; }
    const std::vector<std::pair<std::string, Rule>>& rules() const { return rules_; }
    const std::vector<std::pair<std::string, TerminalDef>>& terminals() const { return terminals_; }

    const Rule* find_rule(const std::string& key) const;
    const TerminalDef* find_terminal(const std::string& key) const;
    std::size_t key_count() const { return rules_.size() + terminals_.size(); }

    // Node types any terminal can emit, with their children capability.
    const std::map<std::string, bool>& emitted_node_types() const { return emitted_types_; }

    static bool is_list_rule(const std::string& key);

private:
    std::string start_;
    std::vector<std::pair<std::string, Rule>> rules_;
    std::vector<std::pair<std::string, TerminalDef>> terminals_;
    std::map<std::string, bool> emitted_types_;
};

struct Genotype {
    std::vector<int> codons;
};

// Uniform codons in [0, max_codon]; identical seed state yields identical
// output.
Genotype random_genotype(Rng& rng, int length = 10, int max_codon = 9);

// Decode-time structure controls. Forcing parameters (parent, only,
// list_always) preempt codon consumption; exclude and the list_max cap
// filter the admissible options before the codon picks among survivors.
struct StructureParams {
    std::map<std::string, int> list_max;
    std::map<std::string, int> list_always;
    std::map<std::string, int> only;
    std::map<std::string, std::vector<int>> exclude;
    std::map<std::string, std::map<std::string, int>> parent;

    // Every list rule without an explicit list_max gets this cap, and the
    // node budget stops runaway recursion from pathological parameters.
    int default_list_max = 5;
    int node_budget = 256;
};

// Depth-first, left-to-right genotype decoding: at each nonterminal the
// next codon selects among the admissible options by modulo; the genotype
// wraps around cyclically when exhausted. Output always satisfies
// btree::validate_syntax against the same grammar.
SkeletonTree decode(const Grammar& grammar, const Genotype& genotype,
                    const StructureParams& params = {});

// Exhaustive enumeration of every derivable skeleton with at most
// max_nodes nodes, deduplicated, sorted by (node count, shape). Test
// oracle for the validator; independent of the decode path.
std::vector<SkeletonTree> enumerate_skeletons(const Grammar& grammar, int max_nodes);

// Shipped default rule table (see data/grammar_default.json).
const char* default_grammar_json();
const Grammar& default_grammar();

} // namespace btforge::grammar

#include "btforge/dataset.hpp"

#include <cctype>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace btforge::dataset {

using ordered_json = nlohmann::ordered_json;

const char* provenance_name(Provenance p) {
    switch (p) {
        case Provenance::method_a: return "method_a";
        case Provenance::method_b: return "method_b";
        case Provenance::enrichment: return "enrichment";
    }
    return "method_a";
}

namespace {

Provenance provenance_from_name(const std::string& name) {
    if (name == "method_a") return Provenance::method_a;
    if (name == "method_b") return Provenance::method_b;
    if (name == "enrichment") return Provenance::enrichment;
    throw std::invalid_argument("unknown provenance '" + name + "'");
}

std::string trim(const std::string& s) {
    std::size_t begin = 0;
    std::size_t end = s.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
    return s.substr(begin, end - begin);
}

void fill_leaves(Node& node, const PrimitiveRegistry& registry,
                 const std::map<std::string, std::vector<std::string>>& pools, Rng& rng) {
    if (node.arity == NodeArity::leaf) {
        const auto it = pools.find(node.type);
        if (it == pools.end() || it->second.empty()) {
            throw std::invalid_argument("registry has no primitive of node type '" + node.type +
                                        "'");
        }
        const auto& pool = it->second;
        node.primitive = pool[rng.uniform_u32(static_cast<std::uint32_t>(pool.size() - 1))];
        return;
    }
    for (Node& child : node.children) {
        fill_leaves(child, registry, pools, rng);
    }
}

} // namespace

BehaviorTree populate_random(const SkeletonTree& skeleton, const PrimitiveRegistry& registry,
                             Rng& rng) {
    std::map<std::string, std::vector<std::string>> pools;
    for (const auto& entry : registry.entries()) {
        pools[entry.node_type].push_back(entry.name);
    }
    BehaviorTree tree{skeleton.root};
    fill_leaves(tree.root, registry, pools, rng);
    return tree;
}

namespace {

sim::Metrics metrics_from_json(const ordered_json& doc) {
    sim::Metrics metrics;
    metrics.good_picked = doc.value("good_picked", 0);
    metrics.scrap_picked = doc.value("scrap_picked", 0);
    metrics.good_in_storage = doc.value("good_in_storage", 0);
    metrics.scrap_in_waste = doc.value("scrap_in_waste", 0);
    return metrics;
}

ordered_json metrics_to_json(const sim::Metrics& metrics) {
    ordered_json doc;
    doc["good_picked"] = metrics.good_picked;
    doc["scrap_picked"] = metrics.scrap_picked;
    doc["good_in_storage"] = metrics.good_in_storage;
    doc["scrap_in_waste"] = metrics.scrap_in_waste;
    return doc;
}

ordered_json entry_to_json(const DatasetEntry& entry) {
    ordered_json doc;
    doc["layman"] = entry.layman;
    doc["technical"] = entry.technical;
    doc["spoonfed"] = entry.spoonfed;
    doc["tree_xml"] = entry.tree_xml;
    doc["provenance"] = provenance_name(entry.provenance);
    doc["skeleton"] = entry.skeleton_fingerprint;
    if (entry.metrics) {
        doc["metrics"] = metrics_to_json(*entry.metrics);
    }
    return doc;
}

DatasetEntry entry_from_json(const ordered_json& doc) {
    DatasetEntry entry;
    entry.layman = doc.at("layman").get<std::string>();
    entry.technical = doc.at("technical").get<std::string>();
    entry.spoonfed = doc.at("spoonfed").get<std::string>();
    entry.tree_xml = doc.at("tree_xml").get<std::string>();
    entry.provenance = provenance_from_name(doc.at("provenance").get<std::string>());
    entry.skeleton_fingerprint = doc.value("skeleton", std::string());
    if (doc.contains("metrics")) {
        entry.metrics = metrics_from_json(doc.at("metrics"));
    }
    return entry;
}

} // namespace

std::string GenStats::to_json() const {
    ordered_json doc;
    doc["attempts"] = attempts;
    doc["llm_failures"] = llm_failures;
    doc["rejected_parse"] = rejected_parse;
    doc["rejected_structure"] = rejected_structure;
    doc["rejected_hallucination"] = rejected_hallucination;
    doc["filter_rejects"] = filter_rejects;
    return doc.dump();
}

std::string Dataset::to_json() const {
    ordered_json doc = ordered_json::array();
    for (const DatasetEntry& entry : entries) {
        doc.push_back(entry_to_json(entry));
    }
    return doc.dump(2) + "\n";
}

Dataset Dataset::from_json(const std::string& text) {
    ordered_json doc = ordered_json::parse(text);
    if (!doc.is_array()) throw std::invalid_argument("dataset file must be a JSON array");
    Dataset dataset;
    for (const auto& item : doc) {
        dataset.entries.push_back(entry_from_json(item));
    }
    return dataset;
}

GenConfig GenConfig::from_json(const std::string& text) {
    ordered_json doc = ordered_json::parse(text);
    GenConfig cfg;
    const std::string method = doc.value("method", std::string("a"));
    if (method == "a" || method == "method_a" || method == "A") {
        cfg.method = Method::a;
    } else if (method == "b" || method == "method_b" || method == "B") {
        cfg.method = Method::b;
    } else {
        throw std::invalid_argument("unknown dataset method '" + method + "'");
    }
    cfg.target_size = doc.value("target_size", cfg.target_size);
    if (cfg.target_size < 1) throw std::invalid_argument("target size must be >= 1");
    cfg.genotype_length = doc.value("genotype_length", cfg.genotype_length);
    cfg.max_codon = doc.value("max_codon", cfg.max_codon);
    cfg.filtering = doc.value("filtering", cfg.filtering);
    if (doc.contains("thresholds")) {
        const auto& t = doc.at("thresholds");
        cfg.thresholds.good_picked = t.value("good_picked", cfg.thresholds.good_picked);
        cfg.thresholds.scrap_picked = t.value("scrap_picked", cfg.thresholds.scrap_picked);
        cfg.thresholds.good_in_storage = t.value("good_in_storage", cfg.thresholds.good_in_storage);
        cfg.thresholds.scrap_in_waste = t.value("scrap_in_waste", cfg.thresholds.scrap_in_waste);
    }
    if (doc.contains("filter_world")) {
        cfg.filter_world = sim::WorldConfig::from_json(doc.at("filter_world").dump());
    }
    cfg.seed = doc.value("seed", cfg.seed);
    cfg.max_llm_retries = doc.value("max_llm_retries", cfg.max_llm_retries);
    cfg.attempt_budget_multiplier =
        doc.value("attempt_budget_multiplier", cfg.attempt_budget_multiplier);
    cfg.env_description = doc.value("env_description", cfg.env_description);
    if (doc.contains("params")) {
        const auto& p = doc.at("params");
        const auto read_int_map = [&p](const char* key, std::map<std::string, int>& out) {
            if (!p.contains(key)) return;
            for (const auto& [rule, value] : p.at(key).items()) {
                out[rule] = value.get<int>();
            }
        };
        read_int_map("list_max", cfg.params.list_max);
        read_int_map("list_always", cfg.params.list_always);
        read_int_map("only", cfg.params.only);
        if (p.contains("exclude")) {
            for (const auto& [rule, values] : p.at("exclude").items()) {
                cfg.params.exclude[rule] = values.get<std::vector<int>>();
            }
        }
        if (p.contains("parent")) {
            for (const auto& [rule, mapping] : p.at("parent").items()) {
                for (const auto& [parent_type, index] : mapping.items()) {
                    cfg.params.parent[rule][parent_type] = index.get<int>();
                }
            }
        }
        cfg.params.default_list_max = p.value("default_list_max", cfg.params.default_list_max);
        cfg.params.node_budget = p.value("node_budget", cfg.params.node_budget);
    }
    return cfg;
}

namespace {

const char* kRephraseSystemPrompt =
    "You rewrite robot task descriptions. Rephrase the given task in casual, everyday language, "
    "the way an average person would ask for it. Reply with the rephrased task only, as a single "
    "line, without quotes or explanations.";

std::string rephrase_user_prompt(const std::string& technical, const std::string& tree_xml) {
    return "Rephrase this robot task in a more natural way.\n\nTask: " + technical +
           "\n\nBehavior tree:\n" + tree_xml;
}

const char* kSelfInstructSystemPrompt =
    "You design tasks for an agent controlled by behavior trees. You will receive a tree "
    "structure whose leaves carry placeholder names, a description of the environment, and the "
    "primitives available to the agent. Think of a task that the given structure could solve in "
    "that environment, then fill every placeholder with a primitive of the matching node type. "
    "Do not add, remove or reorder any node. Reply in exactly this format:\n"
    "TASK: <one line describing the task in plain language>\n"
    "```xml\n<the populated behavior tree>\n```";

std::string self_instruct_user_prompt(const std::string& skeleton_xml,
                                      const std::string& env_description,
                                      const PrimitiveRegistry& registry) {
    std::ostringstream out;
    out << "Environment:\n" << env_description << "\n\n";
    out << "Primitives:\n";
    for (const auto& doc : prompts::extract_primitive_docs(registry)) {
        out << "- " << doc.name << " (" << doc.node_type << "): " << doc.description << "\n";
    }
    out << "\nTree structure to populate:\n" << skeleton_xml;
    return out.str();
}

std::optional<std::string> parse_task_line(const std::string& response) {
    std::istringstream stream(response);
    std::string line;
    while (std::getline(stream, line)) {
        const std::string trimmed = trim(line);
        if (trimmed.rfind("TASK:", 0) == 0) {
            const std::string task = trim(trimmed.substr(5));
            if (!task.empty()) return task;
        }
    }
    return std::nullopt;
}

} // namespace

EntryResult method_a_entry(const SkeletonTree& skeleton, const PrimitiveRegistry& registry,
                           llm::ChatClient& client, Rng& rng, int max_retries) {
    const BehaviorTree tree = populate_random(skeleton, registry, rng);
    DatasetEntry entry;
    entry.technical = prompts::generate_technical(tree);
    entry.spoonfed = prompts::generate_spoonfed(tree);
    entry.tree_xml = btree::serialize_xml(tree);
    entry.provenance = Provenance::method_a;
    entry.skeleton_fingerprint = shape_string(skeleton.root);

    const std::vector<llm::ChatMessage> messages = {
        {"system", kRephraseSystemPrompt},
        {"user", rephrase_user_prompt(entry.technical, entry.tree_xml)},
    };
    std::string error;
    for (int attempt = 0; attempt <= max_retries; ++attempt) {
        std::string response;
        try {
            response = client.complete(messages);
        } catch (const std::exception& e) {
            error = e.what();
            continue;
        }
        const std::string layman = trim(response);
        if (layman.empty()) {
            error = "model returned an empty rephrasing";
            continue;
        }
        entry.layman = layman;
        return {entry, "", SkipReason::none};
    }
    return {std::nullopt, "layman rephrasing failed: " + error, SkipReason::llm};
}

EntryResult method_b_entry(const SkeletonTree& skeleton, const PrimitiveRegistry& registry,
                           const std::string& env_description, llm::ChatClient& client,
                           int max_retries) {
    const std::string skeleton_xml = btree::serialize_xml(skeleton);
    const std::vector<llm::ChatMessage> messages = {
        {"system", kSelfInstructSystemPrompt},
        {"user", self_instruct_user_prompt(skeleton_xml, env_description, registry)},
    };

    std::string error;
    SkipReason reason = SkipReason::llm;
    for (int attempt = 0; attempt <= max_retries; ++attempt) {
        std::string response;
        try {
            response = client.complete(messages);
        } catch (const std::exception& e) {
            error = e.what();
            reason = SkipReason::llm;
            continue;
        }

        const auto task = parse_task_line(response);
        if (!task) {
            error = "reply is missing the TASK: line";
            reason = SkipReason::parse;
            continue;
        }
        const auto markup = llm::extract_bt_xml(response);
        if (!markup) {
            error = "reply contains no behavior tree";
            reason = SkipReason::parse;
            continue;
        }
        BehaviorTree tree;
        try {
            tree = btree::parse_xml(*markup);
        } catch (const std::exception& e) {
            error = std::string("reply tree does not parse: ") + e.what();
            reason = SkipReason::parse;
            continue;
        }
        if (!btree::structures_equal(skeleton, tree)) {
            error = "reply changed the tree structure";
            reason = SkipReason::structure;
            continue;
        }
        const auto primitives = btree::validate_primitives(tree, registry);
        if (!primitives.hallucinated_primitives.empty()) {
            error = "reply uses unavailable primitives ('" +
                    primitives.hallucinated_primitives.front().name + "')";
            reason = SkipReason::hallucination;
            continue;
        }

        DatasetEntry entry;
        entry.layman = *task;
        entry.technical = prompts::generate_technical(tree);
        entry.spoonfed = prompts::generate_spoonfed(tree);
        entry.tree_xml = btree::serialize_xml(tree);
        entry.provenance = Provenance::method_b;
        entry.skeleton_fingerprint = shape_string(skeleton.root);
        return {entry, "", SkipReason::none};
    }
    return {std::nullopt, "self-instruct population failed: " + error, reason};
}

std::pair<bool, sim::Metrics> filter_by_metrics(const BehaviorTree& tree,
                                                const sim::WorldConfig& world,
                                                const FilterThresholds& thresholds,
                                                const PrimitiveRegistry& registry) {
    const sim::Metrics metrics = sim::run(world, tree, registry);
    const bool pass = metrics.good_picked >= thresholds.good_picked ||
                      metrics.scrap_picked >= thresholds.scrap_picked ||
                      metrics.good_in_storage >= thresholds.good_in_storage ||
                      metrics.scrap_in_waste >= thresholds.scrap_in_waste;
    return {pass, metrics};
}

Dataset generate_dataset(const GenConfig& config, const grammar::Grammar& grammar,
                         const PrimitiveRegistry& registry, llm::ChatClient& client) {
    if (config.target_size < 1) throw std::invalid_argument("target size must be >= 1");
    Dataset dataset;
    Rng rng(config.seed);
    const long long budget =
        static_cast<long long>(config.attempt_budget_multiplier) * config.target_size;

    while (static_cast<int>(dataset.entries.size()) < config.target_size) {
        if (dataset.stats.attempts >= budget) {
            dataset.reached_target = false;
            return dataset;
        }
        ++dataset.stats.attempts;

        const grammar::Genotype genotype =
            grammar::random_genotype(rng, config.genotype_length, config.max_codon);
        const SkeletonTree skeleton = grammar::decode(grammar, genotype, config.params);

        EntryResult result;
        if (config.method == GenConfig::Method::a) {
            result = method_a_entry(skeleton, registry, client, rng, config.max_llm_retries);
        } else {
            result = method_b_entry(skeleton, registry, config.env_description, client,
                                    config.max_llm_retries);
        }
        if (!result.entry) {
            switch (result.reason) {
                case SkipReason::structure: ++dataset.stats.rejected_structure; break;
                case SkipReason::hallucination: ++dataset.stats.rejected_hallucination; break;
                case SkipReason::parse: ++dataset.stats.rejected_parse; break;
                default: ++dataset.stats.llm_failures; break;
            }
            continue;
        }

        if (config.filtering) {
            const BehaviorTree tree = btree::parse_xml(result.entry->tree_xml);
            auto [pass, metrics] =
                filter_by_metrics(tree, config.filter_world, config.thresholds, registry);
            if (!pass) {
                ++dataset.stats.filter_rejects;
                continue;
            }
            result.entry->metrics = metrics;
        }
        dataset.entries.push_back(std::move(*result.entry));
    }
    return dataset;
}

std::vector<EnrichExample> load_enrich_examples(const std::string& json_text) {
    ordered_json doc = ordered_json::parse(json_text);
    if (!doc.is_array()) throw std::invalid_argument("enrichment file must be a JSON array");
    std::vector<EnrichExample> examples;
    for (const auto& item : doc) {
        examples.push_back(
            {item.at("layman").get<std::string>(), item.at("tree_xml").get<std::string>()});
    }
    return examples;
}

void enrich(Dataset& dataset, const std::vector<EnrichExample>& examples,
            const grammar::Grammar& grammar, const PrimitiveRegistry& registry) {
    for (const EnrichExample& example : examples) {
        BehaviorTree tree = btree::parse_xml(example.tree_xml);
        const auto syntax = btree::validate_syntax(tree, grammar);
        if (!syntax.syntactically_valid) {
            throw std::invalid_argument("enrichment example tree violates the grammar: " +
                                        syntax.violations.front().rule);
        }
        const auto primitives = btree::validate_primitives(tree, registry);
        if (!primitives.hallucinated_primitives.empty()) {
            throw std::invalid_argument("enrichment example tree uses unknown primitive '" +
                                        primitives.hallucinated_primitives.front().name + "'");
        }
        DatasetEntry entry;
        entry.layman = example.layman;
        entry.technical = prompts::generate_technical(tree);
        entry.spoonfed = prompts::generate_spoonfed(tree);
        entry.tree_xml = btree::serialize_xml(tree);
        entry.provenance = Provenance::enrichment;
        entry.skeleton_fingerprint = shape_string(tree.root);
        dataset.entries.push_back(std::move(entry));
    }
}

std::string export_finetune(const Dataset& dataset, const std::vector<prompts::PromptStyle>& styles,
                            const std::string& system_prompt) {
    if (dataset.entries.empty()) throw std::invalid_argument("dataset is empty");
    std::string out;
    for (const DatasetEntry& entry : dataset.entries) {
        for (const prompts::PromptStyle style : styles) {
            std::string task;
            switch (style) {
                case prompts::PromptStyle::layman: task = entry.layman; break;
                case prompts::PromptStyle::technical: task = entry.technical; break;
                case prompts::PromptStyle::spoonfed: task = entry.spoonfed; break;
            }
            prompts::PromptBundle bundle;
            bundle.system_prompt = system_prompt;
            bundle.user_task = task;
            ordered_json record;
            record["user"] = prompts::build_prompt(bundle);
            record["assistant"] = trim(entry.tree_xml);
            out += record.dump() + "\n";
        }
    }
    return out;
}

} // namespace btforge::dataset

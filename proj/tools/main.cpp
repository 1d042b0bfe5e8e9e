#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "btforge/btree.hpp"
#include "btforge/dataset.hpp"
#include "btforge/grammar.hpp"
#include "btforge/harness.hpp"
#include "btforge/llm.hpp"
#include "btforge/prompts.hpp"
#include "btforge/sim.hpp"

namespace {

using namespace btforge;
using ordered_json = nlohmann::ordered_json;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << content;
}

grammar::Grammar load_grammar(const std::string& path) {
    if (path.empty()) return grammar::default_grammar();
    return grammar::Grammar::parse(read_file(path));
}

sim::WorldConfig load_world(const std::string& path) {
    if (path.empty()) return sim::WorldConfig{};
    return sim::WorldConfig::from_json(read_file(path));
}

std::vector<int> parse_codons(const std::string& csv) {
    std::vector<int> codons;
    std::stringstream stream(csv);
    std::string item;
    while (std::getline(stream, item, ',')) {
        codons.push_back(std::stoi(item));
    }
    return codons;
}

grammar::StructureParams load_params(const std::string& path) {
    grammar::StructureParams params;
    if (path.empty()) return params;
    // The params file reuses the GenConfig schema under a "params" key or
    // stands alone.
    ordered_json doc = ordered_json::parse(read_file(path));
    ordered_json wrapper;
    wrapper["params"] = doc.contains("params") ? doc.at("params") : doc;
    return dataset::GenConfig::from_json(wrapper.dump()).params;
}

ordered_json report_to_json(const btree::ValidationReport& syntax,
                            const btree::ValidationReport& primitives) {
    ordered_json doc;
    doc["syntactically_valid"] = syntax.syntactically_valid;
    doc["violations"] = ordered_json::array();
    for (const auto& violation : syntax.violations) {
        doc["violations"].push_back(ordered_json{{"path", violation.path}, {"rule", violation.rule}});
    }
    doc["hallucinated_primitives"] = ordered_json::array();
    for (const auto& h : primitives.hallucinated_primitives) {
        doc["hallucinated_primitives"].push_back(ordered_json{
            {"path", h.path},
            {"name", h.name},
            {"reason", h.reason == btree::HallucinationReason::unknown_name ? "unknown name"
                                                                            : "wrong node type"}});
    }
    return doc;
}

// Primitive manifests let `validate` check trees for agents other than
// the built-in one: a JSON array of {name, node_type, description}.
PrimitiveRegistry load_registry(const std::string& path) {
    if (path.empty()) return sim::experiment_registry();
    PrimitiveRegistry registry;
    ordered_json doc = ordered_json::parse(read_file(path));
    for (const auto& item : doc) {
        const std::string name = item.at("name").get<std::string>();
        const std::string node_type = item.at("node_type").get<std::string>();
        const std::string description = item.value("description", std::string());
        registry.add(name, node_type,
                     "Node Type: " + node_type + "\nDescription: " + description,
                     [](AgentContext&) { return false; });
    }
    return registry;
}

ordered_json rows_to_json(const std::vector<harness::TableRow>& rows,
                          const std::vector<std::string>& group_by,
                          const std::string& value_name) {
    ordered_json out = ordered_json::array();
    for (const auto& row : rows) {
        ordered_json item;
        for (std::size_t i = 0; i < group_by.size(); ++i) item[group_by[i]] = row.key[i];
        item[value_name] = row.value ? ordered_json(*row.value) : ordered_json(nullptr);
        out.push_back(std::move(item));
    }
    return out;
}

ordered_json metric_rows_to_json(const std::vector<harness::MetricTableRow>& rows,
                                 const std::vector<std::string>& group_by) {
    ordered_json out = ordered_json::array();
    for (const auto& row : rows) {
        ordered_json item;
        for (std::size_t i = 0; i < group_by.size(); ++i) item[group_by[i]] = row.key[i];
        for (const auto& [metric, value] : row.per_metric) {
            item[metric] = value ? ordered_json(*value) : ordered_json(nullptr);
        }
        out.push_back(std::move(item));
    }
    return out;
}

ordered_json gain_rows_to_json(const std::vector<harness::MeanGainRow>& rows) {
    const auto opt = [](const std::optional<double>& value) {
        return value ? ordered_json(*value) : ordered_json(nullptr);
    };
    ordered_json out = ordered_json::array();
    for (const auto& row : rows) {
        ordered_json item;
        item["group"] = row.group;
        item["baseline"] = opt(row.baseline);
        item["method_a"] = opt(row.variant_a);
        item["method_b"] = opt(row.variant_b);
        item["gain_a"] = opt(row.gain_a);
        item["gain_b"] = opt(row.gain_b);
        out.push_back(std::move(item));
    }
    return out;
}

std::unique_ptr<llm::ChatClient> make_client(const std::string& endpoint, const std::string& model,
                                             double temperature, const std::string& mock_script) {
    if (!mock_script.empty()) {
        auto mock = std::make_unique<llm::ScriptedMockClient>();
        ordered_json doc = ordered_json::parse(read_file(mock_script));
        if (doc.contains("default")) {
            mock->set_default_response(doc.at("default").get<std::string>());
        }
        if (doc.contains("responses")) {
            for (const auto& [fingerprint, response] : doc.at("responses").items()) {
                mock->add_response_hex(fingerprint, response.get<std::string>());
            }
        }
        return mock;
    }
    llm::LlmConfig config;
    config.endpoint = endpoint;
    config.model = model;
    config.temperature = temperature;
    return std::make_unique<llm::HttpChatClient>(config);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Grammar-constrained behavior trees: decoding, validation, simulation, dataset "
                 "generation and experiment sweeps"};
    app.require_subcommand(1);

    bool as_json = false;
    app.add_flag("--json", as_json, "machine-readable JSON on stdout");

    std::string grammar_path;
    std::string world_path;
    std::string out_path;

    // decode
    auto* decode_cmd = app.add_subcommand("decode", "decode a genotype into a skeleton tree");
    std::uint64_t decode_seed = 0;
    std::string decode_codons;
    std::string decode_params;
    int decode_length = 10;
    int decode_max_codon = 9;
    decode_cmd->add_option("--grammar", grammar_path, "grammar config JSON (default: built-in)");
    decode_cmd->add_option("--seed", decode_seed, "seed for a random genotype");
    decode_cmd->add_option("--genotype", decode_codons, "explicit comma-separated codons");
    decode_cmd->add_option("--length", decode_length, "random genotype length");
    decode_cmd->add_option("--max-codon", decode_max_codon, "random codon upper bound");
    decode_cmd->add_option("--params", decode_params, "structure params JSON file");
    decode_cmd->add_option("-o,--out", out_path, "write the XML here instead of stdout");

    // validate
    auto* validate_cmd = app.add_subcommand("validate", "validate tree XML against grammar and agent");
    std::string tree_path;
    std::string registry_path;
    validate_cmd->add_option("--tree", tree_path, "behavior tree XML file")->required();
    validate_cmd->add_option("--grammar", grammar_path, "grammar config JSON (default: built-in)");
    validate_cmd->add_option("--registry", registry_path,
                             "agent primitive manifest JSON (default: built-in agent)");

    // simulate
    auto* simulate_cmd = app.add_subcommand("simulate", "run a tree in the simulated world");
    simulate_cmd->add_option("--tree", tree_path, "behavior tree XML file")->required();
    simulate_cmd->add_option("--world", world_path, "world config JSON (default: built-in)");

    // gen-dataset
    auto* gen_cmd = app.add_subcommand("gen-dataset", "generate a fine-tuning dataset");
    std::string gen_config_path;
    std::string endpoint = "http://localhost:11434/v1";
    std::string model;
    std::string mock_script;
    double temperature = 0.7;
    gen_cmd->add_option("--config", gen_config_path, "generation config JSON");
    gen_cmd->add_option("--grammar", grammar_path, "grammar config JSON (default: built-in)");
    gen_cmd->add_option("--endpoint", endpoint, "chat-completions endpoint");
    gen_cmd->add_option("--model", model, "model identifier");
    gen_cmd->add_option("--temperature", temperature, "sampling temperature");
    gen_cmd->add_option("--mock-script", mock_script, "scripted mock responses JSON (offline)");
    gen_cmd->add_option("-o,--out", out_path, "dataset output file")->required();

    // enrich
    auto* enrich_cmd = app.add_subcommand("enrich", "append user examples to a dataset");
    std::string dataset_path;
    std::string examples_path;
    enrich_cmd->add_option("--dataset", dataset_path, "dataset JSON file")->required();
    enrich_cmd->add_option("--examples", examples_path,
                           "examples JSON array of {layman, tree_xml} (default: built-in five)");
    enrich_cmd->add_option("--grammar", grammar_path, "grammar config JSON (default: built-in)");
    enrich_cmd->add_option("-o,--out", out_path, "output file (default: in place)");

    // export-finetune
    auto* export_cmd = app.add_subcommand("export-finetune", "emit JSON-lines chat records");
    std::string styles_csv = "layman,technical,spoonfed";
    export_cmd->add_option("--dataset", dataset_path, "dataset JSON file")->required();
    export_cmd->add_option("--styles", styles_csv, "comma-separated style subset");
    export_cmd->add_option("-o,--out", out_path, "output JSONL file")->required();

    // run-experiment
    auto* run_cmd = app.add_subcommand("run-experiment", "run the core experimental loop");
    std::string experiment_path;
    std::string log_path;
    std::string shots_path;
    run_cmd->add_option("--config", experiment_path, "experiment config JSON (default: built-in)");
    run_cmd->add_option("--log", log_path, "record log (JSON lines, resumable)")->required();
    run_cmd->add_option("--shots", shots_path, "shots library JSON (default: built-in)");
    run_cmd->add_option("--grammar", grammar_path, "grammar config JSON (default: built-in)");
    run_cmd->add_option("--mock-script", mock_script, "scripted mock responses JSON (offline)");

    // report
    auto* report_cmd = app.add_subcommand("report", "aggregate a record log into tables");
    std::string table;
    std::string group_csv = "model";
    std::string format = "markdown";
    std::string log_a_path;
    std::string log_b_path;
    report_cmd->add_option("--log", log_path, "record log file (baseline for mean-gain)")
        ->required();
    report_cmd
        ->add_option("--table", table, "validity | hallucination | task-metrics | mean-gain")
        ->required();
    report_cmd->add_option("--group-by", group_csv, "comma-separated axes (model,technique,style,task)");
    report_cmd->add_option("--format", format, "markdown | csv");
    report_cmd->add_option("--config", experiment_path,
                           "experiment config JSON for task metric goals (default: built-in)");
    report_cmd->add_option("--log-a", log_a_path, "method A record log (mean-gain only)");
    report_cmd->add_option("--log-b", log_b_path, "method B record log (mean-gain only)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*decode_cmd) {
            const grammar::Grammar g = load_grammar(grammar_path);
            grammar::Genotype genotype;
            if (!decode_codons.empty()) {
                genotype.codons = parse_codons(decode_codons);
            } else {
                Rng rng(decode_seed);
                genotype = grammar::random_genotype(rng, decode_length, decode_max_codon);
            }
            const SkeletonTree skeleton = grammar::decode(g, genotype, load_params(decode_params));
            const std::string xml = btree::serialize_xml(skeleton);
            if (out_path.empty()) {
                std::cout << xml;
            } else {
                write_file(out_path, xml);
            }
            return 0;
        }

        if (*validate_cmd) {
            const grammar::Grammar g = load_grammar(grammar_path);
            const PrimitiveRegistry registry = load_registry(registry_path);
            const BehaviorTree tree = btree::parse_xml(read_file(tree_path));
            const auto syntax = btree::validate_syntax(tree, g);
            const auto primitives = btree::validate_primitives(tree, registry);
            if (as_json) {
                std::cout << report_to_json(syntax, primitives).dump(2) << "\n";
            } else {
                std::cout << (syntax.syntactically_valid ? "syntax: valid" : "syntax: INVALID")
                          << "\n";
                for (const auto& violation : syntax.violations) {
                    std::cout << "  " << violation.path << ": " << violation.rule << "\n";
                }
                std::cout << "hallucinations: " << primitives.hallucinated_primitives.size()
                          << "\n";
                for (const auto& h : primitives.hallucinated_primitives) {
                    std::cout << "  " << h.path << ": " << h.name << " ("
                              << (h.reason == btree::HallucinationReason::unknown_name
                                      ? "unknown name"
                                      : "wrong node type")
                              << ")\n";
                }
            }
            return (syntax.syntactically_valid && primitives.hallucinated_primitives.empty()) ? 0
                                                                                              : 1;
        }

        if (*simulate_cmd) {
            const BehaviorTree tree = btree::parse_xml(read_file(tree_path));
            const sim::WorldConfig world = load_world(world_path);
            const sim::Metrics metrics = sim::run(world, tree, sim::experiment_registry());
            std::cout << metrics.to_json() << "\n";
            return 0;
        }

        if (*gen_cmd) {
            const grammar::Grammar g = load_grammar(grammar_path);
            dataset::GenConfig config;
            if (!gen_config_path.empty()) {
                config = dataset::GenConfig::from_json(read_file(gen_config_path));
            }
            if (config.env_description.empty()) {
                config.env_description =
                    "A flat rectangular arena. The base area sits in one corner and contains a "
                    "storage area and a construction area. Good parts spawn in the source area in "
                    "the opposite corner; scrap parts are scattered anywhere outside the base. A "
                    "waste area in a third corner takes dropped scrap. Agents start in the base, "
                    "carry one part at a time and sense parts within a short detection radius.";
            }
            auto client = make_client(endpoint, model, temperature, mock_script);
            const dataset::Dataset result =
                dataset::generate_dataset(config, g, sim::experiment_registry(), *client);
            write_file(out_path, result.to_json());
            std::cerr << "entries: " << result.entries.size() << " stats: "
                      << result.stats.to_json() << "\n";
            if (!result.reached_target) {
                std::cerr << "error: attempt budget exhausted before the target size; wrote a "
                             "partial dataset\n";
                return 1;
            }
            return 0;
        }

        if (*enrich_cmd) {
            const grammar::Grammar g = load_grammar(grammar_path);
            dataset::Dataset data = dataset::Dataset::from_json(read_file(dataset_path));
            const auto examples = dataset::load_enrich_examples(
                examples_path.empty() ? dataset::default_enrich_examples_json()
                                      : read_file(examples_path));
            dataset::enrich(data, examples, g, sim::experiment_registry());
            write_file(out_path.empty() ? dataset_path : out_path, data.to_json());
            return 0;
        }

        if (*export_cmd) {
            const dataset::Dataset data = dataset::Dataset::from_json(read_file(dataset_path));
            std::vector<prompts::PromptStyle> styles;
            std::stringstream stream(styles_csv);
            std::string item;
            while (std::getline(stream, item, ',')) {
                styles.push_back(prompts::style_from_name(item));
            }
            const std::string system = prompts::default_system_prompt(sim::experiment_registry());
            write_file(out_path, dataset::export_finetune(data, styles, system));
            return 0;
        }

        if (*run_cmd) {
            const grammar::Grammar g = load_grammar(grammar_path);
            harness::ExperimentConfig config = harness::ExperimentConfig::from_json(
                experiment_path.empty() ? harness::default_experiment_json()
                                        : read_file(experiment_path));
            const auto shots = prompts::load_shots_json(
                shots_path.empty() ? prompts::default_shots_json() : read_file(shots_path));

            std::vector<std::unique_ptr<llm::ChatClient>> clients;
            const harness::ClientFactory factory =
                [&clients, &mock_script](const harness::ModelSpec& spec) -> llm::ChatClient& {
                clients.push_back(make_client(spec.llm.endpoint, spec.llm.model,
                                              spec.llm.temperature, mock_script));
                return *clients.back();
            };
            const auto records = harness::run_experiment(config, g, sim::experiment_registry(),
                                                         shots, factory, log_path);
            std::cerr << "records: " << records.size() << " in " << log_path << "\n";
            return 0;
        }

        if (*report_cmd) {
            const auto records = harness::load_records(log_path);
            if (records.empty()) throw std::runtime_error("record log is empty");
            std::vector<std::string> group_by;
            std::stringstream stream(group_csv);
            std::string item;
            while (std::getline(stream, item, ',')) group_by.push_back(item);

            const bool csv = format == "csv";
            if (table == "validity") {
                const auto rows = harness::syntactic_validity(records, group_by);
                if (as_json) {
                    std::cout << rows_to_json(rows, group_by, "syntactic_validity").dump(2) << "\n";
                } else {
                    std::cout << (csv ? harness::render_table_csv(rows, group_by,
                                                                  "syntactic_validity")
                                      : harness::render_table_markdown(rows, group_by,
                                                                       "syntactic_validity"));
                }
            } else if (table == "hallucination") {
                const auto rows = harness::hallucination_rate(records, group_by);
                if (as_json) {
                    std::cout << rows_to_json(rows, group_by, "hallucination_rate").dump(2) << "\n";
                } else {
                    std::cout << (csv ? harness::render_table_csv(rows, group_by,
                                                                  "hallucination_rate")
                                      : harness::render_table_markdown(rows, group_by,
                                                                       "hallucination_rate"));
                }
            } else if (table == "task-metrics") {
                harness::ExperimentConfig config = harness::ExperimentConfig::from_json(
                    experiment_path.empty() ? harness::default_experiment_json()
                                            : read_file(experiment_path));
                const auto rows = harness::task_metric_table(records, group_by, config.tasks);
                if (as_json) {
                    std::cout << metric_rows_to_json(rows, group_by).dump(2) << "\n";
                } else {
                    std::cout << (csv ? harness::render_metric_table_csv(rows, group_by)
                                      : harness::render_metric_table_markdown(rows, group_by));
                }
            } else if (table == "mean-gain") {
                if (log_a_path.empty() || log_b_path.empty()) {
                    throw std::runtime_error("mean-gain needs --log-a and --log-b record logs");
                }
                harness::ExperimentConfig config = harness::ExperimentConfig::from_json(
                    experiment_path.empty() ? harness::default_experiment_json()
                                            : read_file(experiment_path));
                const auto baseline = harness::task_metric_table(records, group_by, config.tasks);
                const auto variant_a = harness::task_metric_table(
                    harness::load_records(log_a_path), group_by, config.tasks);
                const auto variant_b = harness::task_metric_table(
                    harness::load_records(log_b_path), group_by, config.tasks);
                const auto rows = harness::mean_gain_report(baseline, variant_a, variant_b);
                if (as_json) {
                    std::cout << gain_rows_to_json(rows).dump(2) << "\n";
                } else {
                    std::cout << harness::render_mean_gain_markdown(rows);
                }
            } else {
                throw std::runtime_error("unknown table '" + table + "'");
            }
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

#include "btforge/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "btforge/btree.hpp"
#include "btforge/dataset.hpp"

namespace btforge::harness {

using ordered_json = nlohmann::ordered_json;

const char* technique_name(Technique t) {
    switch (t) {
        case Technique::zero_shot: return "zero_shot";
        case Technique::one_shot: return "one_shot";
        case Technique::two_shot: return "two_shot";
    }
    return "zero_shot";
}

Technique technique_from_name(const std::string& name) {
    if (name == "zero_shot") return Technique::zero_shot;
    if (name == "one_shot") return Technique::one_shot;
    if (name == "two_shot") return Technique::two_shot;
    throw std::invalid_argument("unknown prompt technique '" + name + "'");
}

int shots_for(Technique t) {
    switch (t) {
        case Technique::zero_shot: return 0;
        case Technique::one_shot: return 1;
        case Technique::two_shot: return 2;
    }
    return 0;
}

void ExperimentConfig::validate() const {
    if (models.empty() || techniques.empty() || styles.empty() || tasks.empty()) {
        throw std::invalid_argument("experiment axes must be non-empty");
    }
    if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
    for (const TaskSpec& task : tasks) {
        if (task.metric_goals.empty()) {
            throw std::invalid_argument("task '" + task.name + "' names no metric");
        }
        for (const prompts::PromptStyle style : styles) {
            if (!task.texts.count(prompts::style_name(style))) {
                throw std::invalid_argument("task '" + task.name + "' has no text for style '" +
                                            std::string(prompts::style_name(style)) + "'");
            }
        }
    }
    world.validate();
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
    ordered_json doc = ordered_json::parse(text);
    ExperimentConfig cfg;
    for (const auto& model : doc.at("models")) {
        ModelSpec spec;
        spec.name = model.at("name").get<std::string>();
        spec.llm.endpoint = model.value("endpoint", spec.llm.endpoint);
        spec.llm.model = model.value("model", spec.llm.model);
        spec.llm.temperature = model.value("temperature", 0.2);
        spec.llm.max_tokens = model.value("max_tokens", spec.llm.max_tokens);
        spec.llm.timeout_s = model.value("timeout_s", spec.llm.timeout_s);
        spec.llm.retries = model.value("retries", spec.llm.retries);
        cfg.models.push_back(std::move(spec));
    }
    for (const auto& technique : doc.at("techniques")) {
        cfg.techniques.push_back(technique_from_name(technique.get<std::string>()));
    }
    for (const auto& style : doc.at("styles")) {
        cfg.styles.push_back(prompts::style_from_name(style.get<std::string>()));
    }
    for (const auto& task : doc.at("tasks")) {
        TaskSpec spec;
        spec.name = task.at("name").get<std::string>();
        for (const auto& [style, text] : task.at("texts").items()) {
            spec.texts[style] = text.get<std::string>();
        }
        for (const auto& [metric, goal] : task.at("metric_goals").items()) {
            spec.metric_goals[metric] = goal.get<int>();
        }
        cfg.tasks.push_back(std::move(spec));
    }
    cfg.repetitions = doc.value("repetitions", cfg.repetitions);
    if (doc.contains("world")) {
        cfg.world = sim::WorldConfig::from_json(doc.at("world").dump());
    }
    cfg.system_prompt = doc.value("system_prompt", cfg.system_prompt);
    cfg.validate();
    return cfg;
}

std::string RunRecord::cell_key() const {
    return model + "|" + technique + "|" + style + "|" + task + "|" + std::to_string(repetition);
}

std::string RunRecord::to_json_line() const {
    ordered_json doc;
    doc["model"] = model;
    doc["technique"] = technique;
    doc["style"] = style;
    doc["task"] = task;
    doc["repetition"] = repetition;
    doc["raw_response"] = raw_response;
    doc["error"] = error;
    if (extracted_xml) {
        doc["extracted_xml"] = *extracted_xml;
    } else {
        doc["extracted_xml"] = nullptr;
    }
    doc["parsed"] = parsed;
    doc["syntactic_valid"] = syntactic_valid;
    doc["hallucination"] = hallucination;
    if (metrics) {
        ordered_json m;
        m["good_picked"] = metrics->good_picked;
        m["scrap_picked"] = metrics->scrap_picked;
        m["good_in_storage"] = metrics->good_in_storage;
        m["scrap_in_waste"] = metrics->scrap_in_waste;
        doc["metrics"] = m;
    } else {
        doc["metrics"] = nullptr;
    }
    return doc.dump();
}

RunRecord RunRecord::from_json_line(const std::string& line) {
    ordered_json doc = ordered_json::parse(line);
    RunRecord record;
    record.model = doc.at("model").get<std::string>();
    record.technique = doc.at("technique").get<std::string>();
    record.style = doc.at("style").get<std::string>();
    record.task = doc.at("task").get<std::string>();
    record.repetition = doc.at("repetition").get<int>();
    record.raw_response = doc.value("raw_response", std::string());
    record.error = doc.value("error", std::string());
    if (doc.contains("extracted_xml") && !doc.at("extracted_xml").is_null()) {
        record.extracted_xml = doc.at("extracted_xml").get<std::string>();
    }
    record.parsed = doc.value("parsed", false);
    record.syntactic_valid = doc.value("syntactic_valid", false);
    record.hallucination = doc.value("hallucination", false);
    if (doc.contains("metrics") && !doc.at("metrics").is_null()) {
        const auto& m = doc.at("metrics");
        sim::Metrics metrics;
        metrics.good_picked = m.value("good_picked", 0);
        metrics.scrap_picked = m.value("scrap_picked", 0);
        metrics.good_in_storage = m.value("good_in_storage", 0);
        metrics.scrap_in_waste = m.value("scrap_in_waste", 0);
        record.metrics = metrics;
    }
    return record;
}

std::vector<RunRecord> load_records(const std::string& log_path) {
    std::vector<RunRecord> records;
    std::ifstream in(log_path);
    if (!in) return records;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        records.push_back(RunRecord::from_json_line(line));
    }
    return records;
}

std::vector<RunRecord> run_experiment(const ExperimentConfig& config,
                                      const grammar::Grammar& grammar,
                                      const PrimitiveRegistry& registry,
                                      const std::vector<prompts::Shot>& shots_library,
                                      const ClientFactory& client_for,
                                      const std::string& log_path) {
    config.validate();
    int max_shots = 0;
    for (const Technique technique : config.techniques) {
        max_shots = std::max(max_shots, shots_for(technique));
    }
    if (static_cast<int>(shots_library.size()) < max_shots) {
        throw std::invalid_argument("shots library too small for the requested techniques");
    }

    // Resume: cells already in the log keep their records.
    std::vector<RunRecord> existing = load_records(log_path.empty() ? "" : log_path);
    std::set<std::string> done;
    for (const RunRecord& record : existing) {
        done.insert(record.cell_key());
    }

    std::ofstream log;
    if (!log_path.empty()) {
        log.open(log_path, std::ios::app);
        if (!log) throw std::runtime_error("cannot open record log '" + log_path + "'");
    }

    const std::string system_prompt =
        config.system_prompt.empty() ? prompts::default_system_prompt(registry)
                                     : config.system_prompt;

    std::vector<RunRecord> records = std::move(existing);
    for (const ModelSpec& model : config.models) {
        llm::ChatClient& client = client_for(model);
        for (const Technique technique : config.techniques) {
            for (const prompts::PromptStyle style : config.styles) {
                for (const TaskSpec& task : config.tasks) {
                    for (int rep = 0; rep < config.repetitions; ++rep) {
                        RunRecord record;
                        record.model = model.name;
                        record.technique = technique_name(technique);
                        record.style = prompts::style_name(style);
                        record.task = task.name;
                        record.repetition = rep;
                        if (done.count(record.cell_key())) continue;

                        prompts::PromptBundle bundle;
                        bundle.system_prompt = system_prompt;
                        bundle.shots.assign(shots_library.begin(),
                                            shots_library.begin() + shots_for(technique));
                        bundle.user_task = task.texts.at(prompts::style_name(style));

                        try {
                            record.raw_response = client.complete(prompts::to_messages(bundle));
                        } catch (const std::exception& e) {
                            record.error = e.what();
                        }

                        if (record.error.empty()) {
                            record.extracted_xml = llm::extract_bt_xml(record.raw_response);
                        }
                        if (record.extracted_xml) {
                            try {
                                const BehaviorTree tree = btree::parse_xml(*record.extracted_xml);
                                record.parsed = true;
                                record.syntactic_valid =
                                    btree::validate_syntax(tree, grammar).syntactically_valid;
                                record.hallucination =
                                    !btree::validate_primitives(tree, registry)
                                         .hallucinated_primitives.empty();
                                if (record.syntactic_valid && !record.hallucination) {
                                    record.metrics = sim::run(config.world, tree, registry);
                                }
                            } catch (const std::exception&) {
                                record.parsed = false;
                            }
                        }

                        if (log.is_open()) {
                            log << record.to_json_line() << "\n";
                            log.flush();
                        }
                        records.push_back(std::move(record));
                    }
                }
            }
        }
    }
    return records;
}

namespace {

std::vector<std::string> record_key(const RunRecord& record,
                                    const std::vector<std::string>& group_by) {
    std::vector<std::string> key;
    key.reserve(group_by.size());
    for (const std::string& axis : group_by) {
        if (axis == "model") {
            key.push_back(record.model);
        } else if (axis == "technique") {
            key.push_back(record.technique);
        } else if (axis == "style") {
            key.push_back(record.style);
        } else if (axis == "task") {
            key.push_back(record.task);
        } else {
            throw std::invalid_argument("unknown group-by axis '" + axis + "'");
        }
    }
    return key;
}

// Group keys keep first-seen order so tables read in sweep order.
template <typename Value>
struct Grouped {
    std::vector<std::vector<std::string>> order;
    std::map<std::vector<std::string>, Value> values;

    Value& at(const std::vector<std::string>& key) {
        if (!values.count(key)) order.push_back(key);
        return values[key];
    }
};

} // namespace

std::vector<TableRow> syntactic_validity(const std::vector<RunRecord>& records,
                                         const std::vector<std::string>& group_by) {
    if (records.empty()) throw std::invalid_argument("no records to aggregate");
    Grouped<std::pair<int, int>> groups; // valid, total
    for (const RunRecord& record : records) {
        auto& [valid, total] = groups.at(record_key(record, group_by));
        if (record.syntactic_valid) ++valid;
        ++total;
    }
    std::vector<TableRow> rows;
    for (const auto& key : groups.order) {
        const auto& [valid, total] = groups.values.at(key);
        rows.push_back({key, 100.0 * valid / total});
    }
    return rows;
}

std::vector<TableRow> hallucination_rate(const std::vector<RunRecord>& records,
                                         const std::vector<std::string>& group_by) {
    Grouped<std::pair<int, int>> groups; // hallucinating, parseable
    for (const RunRecord& record : records) {
        auto& [bad, parseable] = groups.at(record_key(record, group_by));
        if (record.parsed) {
            ++parseable;
            if (record.hallucination) ++bad;
        }
    }
    std::vector<TableRow> rows;
    for (const auto& key : groups.order) {
        const auto& [bad, parseable] = groups.values.at(key);
        if (parseable == 0) {
            rows.push_back({key, std::nullopt});
        } else {
            rows.push_back({key, 100.0 * bad / parseable});
        }
    }
    return rows;
}

std::vector<MetricTableRow> task_metric_table(const std::vector<RunRecord>& records,
                                              const std::vector<std::string>& group_by,
                                              const std::vector<TaskSpec>& tasks) {
    std::map<std::string, const TaskSpec*> by_name;
    std::vector<std::string> metric_names;
    for (const TaskSpec& task : tasks) {
        by_name[task.name] = &task;
        for (const auto& [metric, _] : task.metric_goals) {
            if (std::find(metric_names.begin(), metric_names.end(), metric) ==
                metric_names.end()) {
                metric_names.push_back(metric);
            }
        }
    }

    Grouped<std::map<std::string, std::pair<int, int>>> groups; // metric -> achieved, applicable
    for (const RunRecord& record : records) {
        const auto task_it = by_name.find(record.task);
        if (task_it == by_name.end()) {
            throw std::invalid_argument("record names unknown task '" + record.task + "'");
        }
        auto& cells = groups.at(record_key(record, group_by));
        for (const auto& [metric, goal] : task_it->second->metric_goals) {
            auto& [achieved, applicable] = cells[metric];
            ++applicable;
            if (record.metrics) {
                const auto counters = record.metrics->to_map();
                const auto counter = counters.find(metric);
                if (counter != counters.end() && counter->second >= goal) ++achieved;
            }
        }
    }

    std::vector<MetricTableRow> rows;
    for (const auto& key : groups.order) {
        MetricTableRow row;
        row.key = key;
        const auto& cells = groups.values.at(key);
        for (const std::string& metric : metric_names) {
            const auto it = cells.find(metric);
            if (it == cells.end() || it->second.second == 0) {
                row.per_metric[metric] = std::nullopt;
            } else {
                row.per_metric[metric] = 100.0 * it->second.first / it->second.second;
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace {

std::optional<double> row_mean(const MetricTableRow& row) {
    double sum = 0.0;
    int count = 0;
    for (const auto& [_, value] : row.per_metric) {
        if (value) {
            sum += *value;
            ++count;
        }
    }
    if (count == 0) return std::nullopt;
    return sum / count;
}

std::string join_key(const std::vector<std::string>& key) {
    std::string out;
    for (std::size_t i = 0; i < key.size(); ++i) {
        if (i > 0) out += "|";
        out += key[i];
    }
    return out;
}

} // namespace

std::vector<MeanGainRow> mean_gain_report(const std::vector<MetricTableRow>& baseline,
                                          const std::vector<MetricTableRow>& variant_a,
                                          const std::vector<MetricTableRow>& variant_b) {
    if (baseline.size() != variant_a.size() || baseline.size() != variant_b.size()) {
        throw std::invalid_argument("mismatched table shapes");
    }
    std::vector<MeanGainRow> rows;
    for (std::size_t i = 0; i < baseline.size(); ++i) {
        if (baseline[i].key != variant_a[i].key || baseline[i].key != variant_b[i].key) {
            throw std::invalid_argument("mismatched table shapes: row keys differ");
        }
        MeanGainRow row;
        row.group = join_key(baseline[i].key);
        row.baseline = row_mean(baseline[i]);
        row.variant_a = row_mean(variant_a[i]);
        row.variant_b = row_mean(variant_b[i]);
        if (row.baseline && row.variant_a) row.gain_a = *row.variant_a - *row.baseline;
        if (row.baseline && row.variant_b) row.gain_b = *row.variant_b - *row.baseline;
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string format_percent(const std::optional<double>& value) {
    if (!value) return "NA";
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%.1f", *value);
    return buffer;
}

namespace {

std::string markdown_header(const std::vector<std::string>& columns) {
    std::string head = "|";
    std::string rule = "|";
    for (const std::string& column : columns) {
        head += " " + column + " |";
        rule += " --- |";
    }
    return head + "\n" + rule + "\n";
}

} // namespace

std::string render_table_markdown(const std::vector<TableRow>& rows,
                                  const std::vector<std::string>& group_by,
                                  const std::string& value_name) {
    std::vector<std::string> columns = group_by;
    columns.push_back(value_name);
    std::string out = markdown_header(columns);
    for (const TableRow& row : rows) {
        out += "|";
        for (const std::string& part : row.key) out += " " + part + " |";
        out += " " + format_percent(row.value) + " |\n";
    }
    return out;
}

std::string render_metric_table_markdown(const std::vector<MetricTableRow>& rows,
                                         const std::vector<std::string>& group_by) {
    if (rows.empty()) return "";
    std::vector<std::string> columns = group_by;
    for (const auto& [metric, _] : rows.front().per_metric) columns.push_back(metric);
    std::string out = markdown_header(columns);
    for (const MetricTableRow& row : rows) {
        out += "|";
        for (const std::string& part : row.key) out += " " + part + " |";
        for (const auto& [_, value] : row.per_metric) out += " " + format_percent(value) + " |";
        out += "\n";
    }
    return out;
}

namespace {

std::string format_gain(const std::optional<double>& gain) {
    if (!gain) return "";
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), " (%+.1f%%)", *gain);
    return buffer;
}

} // namespace

std::string render_mean_gain_markdown(const std::vector<MeanGainRow>& rows) {
    const auto pct = [](const std::optional<double>& value) {
        return value ? format_percent(value) + "%" : std::string("NA");
    };
    std::string out = markdown_header({"group", "baseline", "method_a", "method_b"});
    for (const MeanGainRow& row : rows) {
        out += "| " + row.group + " | " + pct(row.baseline) + " | ";
        out += pct(row.variant_a) + format_gain(row.gain_a);
        out += " | " + pct(row.variant_b) + format_gain(row.gain_b);
        out += " |\n";
    }
    return out;
}

std::string render_table_csv(const std::vector<TableRow>& rows,
                             const std::vector<std::string>& group_by,
                             const std::string& value_name) {
    std::string out;
    for (const std::string& axis : group_by) out += axis + ",";
    out += value_name + "\n";
    for (const TableRow& row : rows) {
        for (const std::string& part : row.key) out += part + ",";
        out += format_percent(row.value) + "\n";
    }
    return out;
}

std::string render_metric_table_csv(const std::vector<MetricTableRow>& rows,
                                    const std::vector<std::string>& group_by) {
    if (rows.empty()) return "";
    std::string out;
    for (const std::string& axis : group_by) out += axis + ",";
    bool first = true;
    for (const auto& [metric, _] : rows.front().per_metric) {
        if (!first) out += ",";
        out += metric;
        first = false;
    }
    out += "\n";
    for (const MetricTableRow& row : rows) {
        for (const std::string& part : row.key) out += part + ",";
        first = true;
        for (const auto& [_, value] : row.per_metric) {
            if (!first) out += ",";
            out += format_percent(value);
            first = false;
        }
        out += "\n";
    }
    return out;
}

} // namespace btforge::harness

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "btforge/grammar.hpp"
#include "btforge/llm.hpp"
#include "btforge/prompts.hpp"
#include "btforge/registry.hpp"
#include "btforge/sim.hpp"

namespace btforge::harness {

enum class Technique { zero_shot, one_shot, two_shot };
const char* technique_name(Technique t);
Technique technique_from_name(const std::string& name);
int shots_for(Technique t);

struct ModelSpec {
    std::string name;
    llm::LlmConfig llm;
};

// A task names its per-style phrasings and the metric goals that count as
// achieving it (counter >= goal).
struct TaskSpec {
    std::string name;
    std::map<std::string, std::string> texts; // style name -> task text
    std::map<std::string, int> metric_goals;  // metric name -> goal threshold
};

struct ExperimentConfig {
    std::vector<ModelSpec> models;
    std::vector<Technique> techniques;
    std::vector<prompts::PromptStyle> styles;
    std::vector<TaskSpec> tasks;
    int repetitions = 1;
    sim::WorldConfig world;
    std::string system_prompt; // empty -> default built from the registry

    void validate() const;
    static ExperimentConfig from_json(const std::string& text);
};

// One cell of the sweep. Metrics are only present when the response was
// parseable, grammar-valid and hallucination-free.
struct RunRecord {
    std::string model;
    std::string technique;
    std::string style;
    std::string task;
    int repetition = 0;

    std::string raw_response;
    std::string error; // transport/client failure, recorded not thrown
    std::optional<std::string> extracted_xml;
    bool parsed = false;
    bool syntactic_valid = false;
    bool hallucination = false;
    std::optional<sim::Metrics> metrics;

    std::string cell_key() const;
    std::string to_json_line() const;
    static RunRecord from_json_line(const std::string& line);
};

using ClientFactory = std::function<llm::ChatClient&(const ModelSpec&)>;

// Runs every (model, technique, style, task, repetition) cell: build the
// prompt, call the model, extract and validate the tree, and simulate
// valid trees for task metrics. Records append to log_path as JSON lines
// keyed by cell; existing cells are skipped, so interrupted sweeps resume
// where they stopped. Per-cell failures are recorded, never thrown.
std::vector<RunRecord> run_experiment(const ExperimentConfig& config,
                                      const grammar::Grammar& grammar,
                                      const PrimitiveRegistry& registry,
                                      const std::vector<prompts::Shot>& shots_library,
                                      const ClientFactory& client_for,
                                      const std::string& log_path = "");

std::vector<RunRecord> load_records(const std::string& log_path);

// Aggregation rows keyed by the group-by column values. A missing value
// renders as NA.
struct TableRow {
    std::vector<std::string> key;
    std::optional<double> value;
};

struct MetricTableRow {
    std::vector<std::string> key;
    std::map<std::string, std::optional<double>> per_metric;
};

// Percentage of records per group whose response was a grammar-valid
// tree. group_by columns come from {model, technique, style, task}.
std::vector<TableRow> syntactic_validity(const std::vector<RunRecord>& records,
                                         const std::vector<std::string>& group_by);

// Hallucinating records over records with parseable XML; groups without
// parseable XML report NA.
std::vector<TableRow> hallucination_rate(const std::vector<RunRecord>& records,
                                         const std::vector<std::string>& group_by);

// Percentage of cells per group whose counter met the task's goal, one
// column per metric; metrics outside a record's task definition are NA.
std::vector<MetricTableRow> task_metric_table(const std::vector<RunRecord>& records,
                                              const std::vector<std::string>& group_by,
                                              const std::vector<TaskSpec>& tasks);

struct MeanGainRow {
    std::string group;
    std::optional<double> baseline;
    std::optional<double> variant_a;
    std::optional<double> variant_b;
    std::optional<double> gain_a; // variant - baseline
    std::optional<double> gain_b;
};

// Means over all applicable task-metric cells per group, with gains
// against the baseline table. The three tables must share row keys and
// metric columns.
std::vector<MeanGainRow> mean_gain_report(const std::vector<MetricTableRow>& baseline,
                                          const std::vector<MetricTableRow>& variant_a,
                                          const std::vector<MetricTableRow>& variant_b);

// One-decimal percent ("81.5"); NA for missing values.
std::string format_percent(const std::optional<double>& value);

std::string render_table_markdown(const std::vector<TableRow>& rows,
                                  const std::vector<std::string>& group_by,
                                  const std::string& value_name);
std::string render_metric_table_markdown(const std::vector<MetricTableRow>& rows,
                                         const std::vector<std::string>& group_by);
std::string render_mean_gain_markdown(const std::vector<MeanGainRow>& rows);
std::string render_table_csv(const std::vector<TableRow>& rows,
                             const std::vector<std::string>& group_by,
                             const std::string& value_name);
std::string render_metric_table_csv(const std::vector<MetricTableRow>& rows,
                                    const std::vector<std::string>& group_by);

// Find / Clean / Maintain with per-style texts and metric goals.
std::vector<TaskSpec> default_tasks();
const char* default_experiment_json();

} // namespace btforge::harness

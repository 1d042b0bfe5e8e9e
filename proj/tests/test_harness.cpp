#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "btforge/dataset.hpp"
#include "btforge/grammar.hpp"
#include "btforge/harness.hpp"
#include "btforge/sim.hpp"
#include "support/fixtures.hpp"

using namespace btforge;

namespace {

harness::ExperimentConfig small_experiment() {
    harness::ExperimentConfig config;
    config.models = {{"mock-model", llm::LlmConfig{}}};
    config.techniques = {harness::Technique::zero_shot, harness::Technique::one_shot,
                         harness::Technique::two_shot};
    config.styles = {prompts::PromptStyle::layman, prompts::PromptStyle::technical,
                     prompts::PromptStyle::spoonfed};
    config.tasks = harness::default_tasks();
    config.repetitions = 1;
    config.world.tick_budget = 5000;
    config.world.seed = 7;
    return config;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

harness::RunRecord record_for(const std::string& model, const std::string& task, bool parsed,
                              bool valid, bool hallucination) {
    harness::RunRecord record;
    record.model = model;
    record.technique = "zero_shot";
    record.style = "layman";
    record.task = task;
    record.parsed = parsed;
    record.syntactic_valid = valid;
    record.hallucination = hallucination;
    return record;
}

} // namespace

TEST_CASE("run_experiment covers the full grid") {
    const auto config = small_experiment();
    const auto shots = prompts::load_shots_json(prompts::default_shots_json());

    llm::ScriptedMockClient mock;
    mock.set_default_response(testing::example_tree_xml());
    const harness::ClientFactory factory = [&mock](const harness::ModelSpec&) -> llm::ChatClient& {
        return mock;
    };

    const auto records = harness::run_experiment(config, grammar::default_grammar(),
                                                 sim::experiment_registry(), shots, factory);

    SUBCASE("record count is the axis product") {
        CHECK(records.size() == 27); // 1 model x 3 techniques x 3 styles x 3 tasks x 1 rep
    }

    SUBCASE("valid trees carry metrics; find cells score") {
        for (const auto& record : records) {
            REQUIRE(record.parsed);
            REQUIRE(record.syntactic_valid);
            REQUIRE_FALSE(record.hallucination);
            REQUIRE(record.metrics.has_value());
            if (record.task == "find") {
                CHECK(record.metrics->good_picked >= 1);
            }
        }
    }

    SUBCASE("metrics-bearing records are exactly the clean ones") {
        for (const auto& record : records) {
            CHECK(record.metrics.has_value() ==
                  (record.parsed && record.syntactic_valid && !record.hallucination));
        }
    }
}

TEST_CASE("prose responses record as invalid without aborting the sweep") {
    auto config = small_experiment();
    config.techniques = {harness::Technique::zero_shot};
    config.styles = {prompts::PromptStyle::layman};
    const auto shots = prompts::load_shots_json(prompts::default_shots_json());

    llm::ScriptedMockClient mock;
    mock.set_default_response("I would rather talk about the weather.");
    const harness::ClientFactory factory = [&mock](const harness::ModelSpec&) -> llm::ChatClient& {
        return mock;
    };
    const auto records = harness::run_experiment(config, grammar::default_grammar(),
                                                 sim::experiment_registry(), shots, factory);
    REQUIRE(records.size() == 3);
    for (const auto& record : records) {
        CHECK_FALSE(record.extracted_xml.has_value());
        CHECK_FALSE(record.parsed);
        CHECK_FALSE(record.syntactic_valid);
        CHECK_FALSE(record.metrics.has_value());
    }
}

TEST_CASE("record log persists, resumes and round-trips") {
    const std::string log_path = "harness_resume_test.jsonl";
    std::remove(log_path.c_str());

    auto config = small_experiment();
    config.world.tick_budget = 400; // keep the resume test quick
    const auto shots = prompts::load_shots_json(prompts::default_shots_json());
    llm::ScriptedMockClient mock;
    mock.set_default_response(testing::example_tree_xml());
    const harness::ClientFactory factory = [&mock](const harness::ModelSpec&) -> llm::ChatClient& {
        return mock;
    };

    const auto first = harness::run_experiment(config, grammar::default_grammar(),
                                               sim::experiment_registry(), shots, factory,
                                               log_path);
    REQUIRE(first.size() == 27);
    const std::string bytes_after_first = read_file(log_path);

    SUBCASE("a completed sweep is idempotent") {
        const auto again = harness::run_experiment(config, grammar::default_grammar(),
                                                   sim::experiment_registry(), shots, factory,
                                                   log_path);
        CHECK(again.size() == 27);
        CHECK(read_file(log_path) == bytes_after_first);
    }

    SUBCASE("a truncated log resumes the missing cells only") {
        std::istringstream stream(bytes_after_first);
        std::string line;
        std::vector<std::string> lines;
        while (std::getline(stream, line)) lines.push_back(line);
        REQUIRE(lines.size() == 27);

        std::ofstream truncated(log_path, std::ios::binary | std::ios::trunc);
        for (std::size_t i = 0; i < 5; ++i) truncated << lines[i] << "\n";
        truncated.close();

        const auto resumed = harness::run_experiment(config, grammar::default_grammar(),
                                                     sim::experiment_registry(), shots, factory,
                                                     log_path);
        CHECK(resumed.size() == 27);
        const auto reloaded = harness::load_records(log_path);
        CHECK(reloaded.size() == 27);
        std::set<std::string> keys;
        for (const auto& record : reloaded) keys.insert(record.cell_key());
        CHECK(keys.size() == 27);
    }

    SUBCASE("aggregations recompute identically from the persisted log") {
        const auto reloaded = harness::load_records(log_path);
        const auto from_memory = harness::syntactic_validity(first, {"model", "task"});
        const auto from_disk = harness::syntactic_validity(reloaded, {"model", "task"});
        REQUIRE(from_memory.size() == from_disk.size());
        for (std::size_t i = 0; i < from_memory.size(); ++i) {
            CHECK(from_memory[i].key == from_disk[i].key);
            CHECK(harness::format_percent(from_memory[i].value) ==
                  harness::format_percent(from_disk[i].value));
        }
    }
    std::remove(log_path.c_str());
}

TEST_CASE("syntactic validity percentages to one decimal") {
    std::vector<harness::RunRecord> records;
    for (int i = 0; i < 27; ++i) {
        records.push_back(record_for("m1", "find", true, i < 22, false));
    }
    const auto rows = harness::syntactic_validity(records, {"model"});
    REQUIRE(rows.size() == 1);
    CHECK(harness::format_percent(rows[0].value) == "81.5"); // 22 of 27

    SUBCASE("all valid reads 100.0") {
        std::vector<harness::RunRecord> clean;
        for (int i = 0; i < 9; ++i) clean.push_back(record_for("m", "find", true, true, false));
        CHECK(harness::format_percent(harness::syntactic_validity(clean, {"model"})[0].value) ==
              "100.0");
    }
    SUBCASE("none valid reads 0.0") {
        std::vector<harness::RunRecord> broken;
        for (int i = 0; i < 27; ++i) broken.push_back(record_for("m", "find", false, false, false));
        CHECK(harness::format_percent(harness::syntactic_validity(broken, {"model"})[0].value) ==
              "0.0");
    }
    SUBCASE("empty input is an error") {
        CHECK_THROWS_AS(harness::syntactic_validity({}, {"model"}), std::invalid_argument);
    }
}

TEST_CASE("hallucination rate uses the parseable denominator") {
    SUBCASE("one in 32 parseable reads 3.1") {
        std::vector<harness::RunRecord> records;
        for (int i = 0; i < 32; ++i) {
            records.push_back(record_for("m", "find", true, true, i == 0));
        }
        const auto rows = harness::hallucination_rate(records, {"model"});
        CHECK(harness::format_percent(rows[0].value) == "3.1");
    }
    SUBCASE("no parseable XML reads NA") {
        std::vector<harness::RunRecord> records;
        for (int i = 0; i < 27; ++i) {
            records.push_back(record_for("m", "find", false, false, false));
        }
        const auto rows = harness::hallucination_rate(records, {"model"});
        CHECK_FALSE(rows[0].value.has_value());
        CHECK(harness::format_percent(rows[0].value) == "NA");
    }
    SUBCASE("all clean reads 0.0") {
        std::vector<harness::RunRecord> records;
        for (int i = 0; i < 8; ++i) records.push_back(record_for("m", "find", true, true, false));
        CHECK(harness::format_percent(harness::hallucination_rate(records, {"model"})[0].value) ==
              "0.0");
    }
}

TEST_CASE("task metric tables") {
    const auto tasks = harness::default_tasks();
    std::vector<harness::RunRecord> records;
    // Three find cells: one picked a part, one picked nothing, one invalid.
    auto achieved = record_for("m", "find", true, true, false);
    achieved.metrics = sim::Metrics{1, 0, 0, 0};
    records.push_back(achieved);
    auto missed = record_for("m", "find", true, true, false);
    missed.metrics = sim::Metrics{0, 0, 0, 0};
    records.push_back(missed);
    records.push_back(record_for("m", "find", false, false, false));
    // One clean cell that moved scrap but never dropped it.
    auto clean_cell = record_for("m", "clean", true, true, false);
    clean_cell.metrics = sim::Metrics{0, 2, 0, 0};
    records.push_back(clean_cell);

    const auto rows = harness::task_metric_table(records, {"task"}, tasks);
    REQUIRE(rows.size() == 2);

    const auto& find_row = rows[0];
    CHECK(find_row.key == std::vector<std::string>{"find"});
    CHECK(harness::format_percent(find_row.per_metric.at("good_picked")) == "33.3"); // 1 of 3
    CHECK(harness::format_percent(find_row.per_metric.at("scrap_picked")) == "NA");
    CHECK(harness::format_percent(find_row.per_metric.at("scrap_in_waste")) == "NA");

    const auto& clean_row = rows[1];
    CHECK(harness::format_percent(clean_row.per_metric.at("scrap_picked")) == "100.0");
    CHECK(harness::format_percent(clean_row.per_metric.at("scrap_in_waste")) == "0.0");
    CHECK(harness::format_percent(clean_row.per_metric.at("good_picked")) == "NA");
}

TEST_CASE("mean gain report") {
    const auto make_row = [](const std::string& size, double a, double b, double c, double d) {
        harness::MetricTableRow row;
        row.key = {size};
        row.per_metric["good_picked"] = a;
        row.per_metric["scrap_picked"] = b;
        row.per_metric["good_in_storage"] = c;
        row.per_metric["scrap_in_waste"] = d;
        return row;
    };

    SUBCASE("gain equals variant minus baseline") {
        const std::vector<harness::MetricTableRow> baseline = {make_row("1B", 0, 0, 0, 0)};
        const std::vector<harness::MetricTableRow> a = {make_row("1B", 20.4, 20.4, 20.4, 20.4)};
        const std::vector<harness::MetricTableRow> b = {make_row("1B", 40.8, 40.8, 40.8, 40.8)};
        const auto rows = harness::mean_gain_report(baseline, a, b);
        REQUIRE(rows.size() == 1);
        CHECK(harness::format_percent(rows[0].baseline) == "0.0");
        CHECK(harness::format_percent(rows[0].variant_b) == "40.8");
        CHECK(harness::format_percent(rows[0].gain_b) == "40.8");
        CHECK(harness::render_mean_gain_markdown(rows).find("40.8% (+40.8%)") !=
              std::string::npos);
    }

    SUBCASE("identical tables gain nothing") {
        const std::vector<harness::MetricTableRow> t = {make_row("4B", 10, 20, 30, 40)};
        const auto rows = harness::mean_gain_report(t, t, t);
        CHECK(harness::format_percent(rows[0].gain_a) == "0.0");
        CHECK(harness::format_percent(rows[0].gain_b) == "0.0");
    }

    SUBCASE("means are recomputable from the row cells") {
        const std::vector<harness::MetricTableRow> baseline = {make_row("12B", 10, 20, 30, 40)};
        const auto rows = harness::mean_gain_report(baseline, baseline, baseline);
        CHECK(*rows[0].baseline == doctest::Approx((10 + 20 + 30 + 40) / 4.0));
    }

    SUBCASE("mismatched shapes are refused") {
        const std::vector<harness::MetricTableRow> one = {make_row("1B", 0, 0, 0, 0)};
        const std::vector<harness::MetricTableRow> two = {make_row("1B", 0, 0, 0, 0),
                                                          make_row("4B", 0, 0, 0, 0)};
        CHECK_THROWS_WITH_AS(harness::mean_gain_report(one, one, two),
                             doctest::Contains("mismatched table shapes"), std::invalid_argument);
    }
}

TEST_CASE("experiment config JSON loads and validates") {
    const auto config = harness::ExperimentConfig::from_json(harness::default_experiment_json());
    CHECK(config.models.size() == 1);
    CHECK(config.techniques.size() == 3);
    CHECK(config.styles.size() == 3);
    CHECK(config.tasks.size() == 3);

    SUBCASE("missing style text is rejected") {
        harness::ExperimentConfig broken = config;
        broken.tasks[0].texts.erase("layman");
        CHECK_THROWS_AS(broken.validate(), std::invalid_argument);
    }
    SUBCASE("empty axes are rejected") {
        harness::ExperimentConfig broken = config;
        broken.techniques.clear();
        CHECK_THROWS_AS(broken.validate(), std::invalid_argument);
    }
}

TEST_CASE("shipped data files mirror the built-in defaults") {
    const std::string root = BTFORGE_ROOT_DIR;

    SUBCASE("grammar") {
        const auto from_file =
            grammar::Grammar::parse(read_file(root + "/data/grammar_default.json"));
        const grammar::Grammar& builtin = grammar::default_grammar();
        CHECK(from_file.start() == builtin.start());
        REQUIRE(from_file.key_count() == builtin.key_count());
        for (std::size_t i = 0; i < builtin.rules().size(); ++i) {
            CHECK(from_file.rules()[i].first == builtin.rules()[i].first);
            CHECK(from_file.rules()[i].second.options == builtin.rules()[i].second.options);
        }
        for (std::size_t i = 0; i < builtin.terminals().size(); ++i) {
            CHECK(from_file.terminals()[i].first == builtin.terminals()[i].first);
            CHECK(from_file.terminals()[i].second.node_type ==
                  builtin.terminals()[i].second.node_type);
        }
    }
    SUBCASE("world") {
        const auto from_file =
            sim::WorldConfig::from_json(read_file(root + "/data/world_default.json"));
        const sim::WorldConfig builtin;
        CHECK(from_file.to_json() == builtin.to_json());
    }
    SUBCASE("shots") {
        const auto from_file =
            prompts::load_shots_json(read_file(root + "/data/shots_default.json"));
        const auto builtin = prompts::load_shots_json(prompts::default_shots_json());
        REQUIRE(from_file.size() == builtin.size());
        for (std::size_t i = 0; i < builtin.size(); ++i) {
            CHECK(from_file[i].task == builtin[i].task);
            CHECK(from_file[i].tree_xml == builtin[i].tree_xml);
        }
    }
    SUBCASE("enrichment examples") {
        const auto from_file =
            dataset::load_enrich_examples(read_file(root + "/data/enrichment_default.json"));
        const auto builtin =
            dataset::load_enrich_examples(dataset::default_enrich_examples_json());
        REQUIRE(from_file.size() == builtin.size());
        for (std::size_t i = 0; i < builtin.size(); ++i) {
            CHECK(from_file[i].layman == builtin[i].layman);
            CHECK(from_file[i].tree_xml == builtin[i].tree_xml);
        }
    }
    SUBCASE("experiment") {
        const auto from_file = harness::ExperimentConfig::from_json(
            read_file(root + "/data/experiment_default.json"));
        const auto builtin =
            harness::ExperimentConfig::from_json(harness::default_experiment_json());
        REQUIRE(from_file.tasks.size() == builtin.tasks.size());
        for (std::size_t i = 0; i < builtin.tasks.size(); ++i) {
            CHECK(from_file.tasks[i].name == builtin.tasks[i].name);
            CHECK(from_file.tasks[i].texts == builtin.tasks[i].texts);
            CHECK(from_file.tasks[i].metric_goals == builtin.tasks[i].metric_goals);
        }
    }
}

TEST_CASE("markdown and csv renderers") {
    std::vector<harness::RunRecord> records;
    for (int i = 0; i < 4; ++i) records.push_back(record_for("m", "find", true, i < 3, false));
    const auto rows = harness::syntactic_validity(records, {"model"});
    const std::string markdown =
        harness::render_table_markdown(rows, {"model"}, "syntactic_validity");
    CHECK(markdown.find("| model | syntactic_validity |") != std::string::npos);
    CHECK(markdown.find("75.0") != std::string::npos);
    const std::string csv = harness::render_table_csv(rows, {"model"}, "syntactic_validity");
    CHECK(csv.find("m,75.0") != std::string::npos);
}

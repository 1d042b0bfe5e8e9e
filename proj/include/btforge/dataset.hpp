#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "btforge/btree.hpp"
#include "btforge/grammar.hpp"
#include "btforge/llm.hpp"
#include "btforge/prompts.hpp"
#include "btforge/registry.hpp"
#include "btforge/rng.hpp"
#include "btforge/sim.hpp"

namespace btforge::dataset {

enum class Provenance { method_a, method_b, enrichment };
const char* provenance_name(Provenance p);

// One fine-tuning example: the three task styles plus the canonical tree
// they describe. Emitted trees always pass both validators.
struct DatasetEntry {
    std::string layman;
    std::string technical;
    std::string spoonfed;
    std::string tree_xml;
    Provenance provenance = Provenance::method_a;
    std::string skeleton_fingerprint;
    std::optional<sim::Metrics> metrics; // filter result when filtering ran
};

// A tree passes when at least one counter reaches its threshold; zero
// thresholds pass everything.
struct FilterThresholds {
    int good_picked = 1;
    int scrap_picked = 1;
    int good_in_storage = 1;
    int scrap_in_waste = 1;
};

struct GenConfig {
    enum class Method { a, b };

    Method method = Method::a;
    int target_size = 300;
    int genotype_length = 10;
    int max_codon = 9;
    grammar::StructureParams params;
    bool filtering = true;
    FilterThresholds thresholds;
    sim::WorldConfig filter_world; // fixed seed keeps filtering fair across candidates
    std::uint64_t seed = 0;
    int max_llm_retries = 3;
    int attempt_budget_multiplier = 5; // attempts allowed = multiplier * target_size
    std::string env_description;       // sent with method B requests

    static GenConfig from_json(const std::string& text);
};

struct GenStats {
    int attempts = 0;
    int llm_failures = 0;
    int rejected_parse = 0;
    int rejected_structure = 0;
    int rejected_hallucination = 0;
    int filter_rejects = 0;

    std::string to_json() const;
};

struct Dataset {
    std::vector<DatasetEntry> entries;
    GenStats stats;
    bool reached_target = true; // false when the attempt budget ran out first

    std::string to_json() const; // JSON array of entries, byte-stable
    static Dataset from_json(const std::string& text);
};

// Fills every placeholder leaf with a uniformly sampled primitive of the
// leaf's node type. Shape is unchanged.
BehaviorTree populate_random(const SkeletonTree& skeleton, const PrimitiveRegistry& registry,
                             Rng& rng);

enum class SkipReason { none, llm, parse, structure, hallucination };

struct EntryResult {
    std::optional<DatasetEntry> entry;
    std::string error; // set when the skeleton was skipped
    SkipReason reason = SkipReason::none;
};

// Random population, template-generated technical/spoonfed text, then one
// model call to restate the task casually (the layman text).
EntryResult method_a_entry(const SkeletonTree& skeleton, const PrimitiveRegistry& registry,
                           llm::ChatClient& client, Rng& rng, int max_retries = 3);

// Self-instruct population: the model receives the unpopulated skeleton,
// the environment description and the primitive docs, and must return a
// populated tree of identical structure plus a task line. Structure or
// primitive violations are retried, then skipped.
EntryResult method_b_entry(const SkeletonTree& skeleton, const PrimitiveRegistry& registry,
                           const std::string& env_description, llm::ChatClient& client,
                           int max_retries = 3);

// One simulation under the fixed filter seed; pass when any counter meets
// its threshold.
std::pair<bool, sim::Metrics> filter_by_metrics(const BehaviorTree& tree,
                                                const sim::WorldConfig& world,
                                                const FilterThresholds& thresholds,
                                                const PrimitiveRegistry& registry);

// Seeded skeleton stream -> per-method entries -> optional metrics filter,
// until target size or the attempt budget runs out. Skipped skeletons do
// not consume target slots. When the budget is exhausted first, the
// partial dataset comes back with reached_target = false and the skip
// statistics filled in.
Dataset generate_dataset(const GenConfig& config, const grammar::Grammar& grammar,
                         const PrimitiveRegistry& registry, llm::ChatClient& client);

struct EnrichExample {
    std::string layman;
    std::string tree_xml;
};

std::vector<EnrichExample> load_enrich_examples(const std::string& json_text);
const char* default_enrich_examples_json(); // five examples, disjoint from the test tasks

// Appends user-provided layman/tree pairs with auto-generated technical
// and spoonfed styles. Example trees must pass both validators.
void enrich(Dataset& dataset, const std::vector<EnrichExample>& examples,
            const grammar::Grammar& grammar, const PrimitiveRegistry& registry);

// Newline-delimited JSON, one {"user", "assistant"} record per selected
// style per entry; the user field is the zero-shot rendered prompt.
std::string export_finetune(const Dataset& dataset,
                            const std::vector<prompts::PromptStyle>& styles,
                            const std::string& system_prompt);

} // namespace btforge::dataset

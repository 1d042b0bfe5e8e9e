#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "btforge/btree.hpp"
#include "btforge/registry.hpp"
#include "btforge/rng.hpp"
#include "btforge/tree.hpp"

namespace btforge::sim {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

struct Rect {
    double min_x = 0.0, min_y = 0.0, max_x = 0.0, max_y = 0.0;

    bool contains(const Vec2& p) const {
        return p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y;
    }
    Vec2 centroid() const { return {(min_x + max_x) / 2.0, (min_y + max_y) / 2.0}; }
};

// Base-maintenance arena. Storage and construction tile the base; source,
// waste and base are pairwise disjoint.
struct WorldConfig {
    double width = 1000.0;
    double height = 1000.0;
    Rect base{0.0, 0.0, 200.0, 200.0};
    Rect storage{0.0, 0.0, 100.0, 200.0};
    Rect construction{100.0, 0.0, 200.0, 200.0};
    Rect source{850.0, 850.0, 1000.0, 1000.0};
    Rect waste{0.0, 850.0, 150.0, 1000.0};
    int agents = 10;
    int good_parts = 10;
    int scrap_parts = 10;
    double max_speed = 2.0;
    double detection_radius = 25.0;
    int tick_budget = 5000;
    std::uint64_t seed = 7;

    void validate() const; // throws on geometry or count violations

    static WorldConfig from_json(const std::string& text);
    std::string to_json() const;
};

enum class PartKind { good, scrap };

// A part lies on the ground (position set) or rides in a gripper (holder
// set), never both.
struct Part {
    int id = 0;
    PartKind kind = PartKind::good;
    std::optional<Vec2> position;
    std::optional<int> holder;
};

enum class MoveMode { seek_source, seek_base, seek_waste, seek_storage, random_walk, stopped };

struct AgentState {
    int id = 0;
    Vec2 position;
    Vec2 heading{1.0, 0.0};
    MoveMode mode = MoveMode::stopped;
    std::optional<int> held_part;
};

// Monotone event counters. The "in" counters increment when a part is
// dropped inside the named area.
struct Metrics {
    int good_picked = 0;
    int scrap_picked = 0;
    int good_in_storage = 0;
    int scrap_in_waste = 0;

    std::map<std::string, int> to_map() const;
    std::string to_json() const; // flat name -> integer map
};

// Deterministic world: fixed agent iteration order, one seeded random
// source, no wall-clock input. Confined to one execution context; run
// many worlds in parallel instead of sharing one.
class World {
public:
    // Agents spawn uniformly inside the base, good parts inside the
    // source, scrap parts uniformly in the world minus the base.
    static World setup(const WorldConfig& config);

    // Ticks the tree once per agent in id order, then integrates motion
    // one tick per the agent's movement mode.
    void step(const BehaviorTree& tree, const PrimitiveRegistry& registry);

    const WorldConfig& config() const { return config_; }
    const Metrics& metrics() const { return metrics_; }
    const std::vector<AgentState>& agents() const { return agents_; }
    const std::vector<Part>& parts() const { return parts_; }
    int ticks_run() const { return ticks_; }

    // Primitive backings; exposed so registries and tests can drive them.
    bool part_detected(int agent, PartKind kind) const;
    bool holding(int agent, PartKind kind) const;
    bool in_area(int agent, const Rect& area) const;
    bool pick_up_part(int agent);
    bool drop_part(int agent);
    void set_mode(int agent, MoveMode mode);

private:
    World(WorldConfig config, Rng rng) : config_(std::move(config)), rng_(rng) {}
    void integrate_motion(AgentState& agent);

    WorldConfig config_;
    std::vector<AgentState> agents_;
    std::vector<Part> parts_;
    Metrics metrics_;
    Rng rng_;
    int ticks_ = 0;
};

// Headless run: setup, tick-budget steps, metrics.
Metrics run(const WorldConfig& config, const BehaviorTree& tree, const PrimitiveRegistry& registry);

// Concrete agent handle bound while a tree ticks inside a world.
struct AgentHandle final : AgentContext {
    World* world = nullptr;
    int agent = 0;
};

// The experiment agent's registry: nine area/part conditions, pick/drop
// actuator actions and six movement state actions.
const PrimitiveRegistry& experiment_registry();

} // namespace btforge::sim

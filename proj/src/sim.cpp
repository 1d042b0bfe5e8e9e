#include "btforge/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <json.hpp>

namespace btforge::sim {

using ordered_json = nlohmann::ordered_json;

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kRandomWalkJitterDeg = 15.0;

double distance(const Vec2& a, const Vec2& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return std::sqrt(dx * dx + dy * dy);
}

bool rect_inside(const Rect& inner, const Rect& outer) {
    return inner.min_x >= outer.min_x && inner.min_y >= outer.min_y &&
           inner.max_x <= outer.max_x && inner.max_y <= outer.max_y;
}

bool rects_disjoint(const Rect& a, const Rect& b) {
    return a.max_x < b.min_x || b.max_x < a.min_x || a.max_y < b.min_y || b.max_y < a.min_y;
}

Rect rect_from_json(const ordered_json& value) {
    if (!value.is_array() || value.size() != 4) {
        throw std::invalid_argument("area rectangles must be [min_x, min_y, max_x, max_y]");
    }
    return Rect{value[0].get<double>(), value[1].get<double>(), value[2].get<double>(),
                value[3].get<double>()};
}

ordered_json rect_to_json(const Rect& r) {
    return ordered_json::array({r.min_x, r.min_y, r.max_x, r.max_y});
}

} // namespace

void WorldConfig::validate() const {
    if (width <= 0.0 || height <= 0.0) throw std::invalid_argument("world size must be positive");
    if (max_speed <= 0.0) throw std::invalid_argument("max speed must be positive");
    if (detection_radius <= 0.0) throw std::invalid_argument("detection radius must be positive");
    if (tick_budget <= 0) throw std::invalid_argument("tick budget must be positive");
    if (agents < 0 || good_parts < 0 || scrap_parts < 0) {
        throw std::invalid_argument("agent and part counts must be non-negative");
    }
    const Rect world{0.0, 0.0, width, height};
    for (const Rect* area : {&base, &storage, &construction, &source, &waste}) {
        if (area->min_x > area->max_x || area->min_y > area->max_y) {
            throw std::invalid_argument("degenerate area rectangle");
        }
        if (!rect_inside(*area, world)) throw std::invalid_argument("area outside the world");
    }
    if (!rect_inside(storage, base) || !rect_inside(construction, base)) {
        throw std::invalid_argument("storage and construction must lie inside the base");
    }
    if (!rects_disjoint(source, base) || !rects_disjoint(waste, base) ||
        !rects_disjoint(source, waste)) {
        throw std::invalid_argument("base, source and waste must be pairwise disjoint");
    }
}

WorldConfig WorldConfig::from_json(const std::string& text) {
    ordered_json doc = ordered_json::parse(text);
    WorldConfig cfg;
    cfg.width = doc.value("width", cfg.width);
    cfg.height = doc.value("height", cfg.height);
    if (doc.contains("areas")) {
        const auto& areas = doc.at("areas");
        if (areas.contains("base")) cfg.base = rect_from_json(areas.at("base"));
        if (areas.contains("storage")) cfg.storage = rect_from_json(areas.at("storage"));
        if (areas.contains("construction")) cfg.construction = rect_from_json(areas.at("construction"));
        if (areas.contains("source")) cfg.source = rect_from_json(areas.at("source"));
        if (areas.contains("waste")) cfg.waste = rect_from_json(areas.at("waste"));
    }
    cfg.agents = doc.value("agents", cfg.agents);
    cfg.good_parts = doc.value("good_parts", cfg.good_parts);
    cfg.scrap_parts = doc.value("scrap_parts", cfg.scrap_parts);
    cfg.max_speed = doc.value("max_speed", cfg.max_speed);
    cfg.detection_radius = doc.value("detection_radius", cfg.detection_radius);
    cfg.tick_budget = doc.value("tick_budget", cfg.tick_budget);
    cfg.seed = doc.value("seed", cfg.seed);
    cfg.validate();
    return cfg;
}

std::string WorldConfig::to_json() const {
    ordered_json doc;
    doc["width"] = width;
    doc["height"] = height;
    doc["areas"] = ordered_json{{"base", rect_to_json(base)},
                                {"storage", rect_to_json(storage)},
                                {"construction", rect_to_json(construction)},
                                {"source", rect_to_json(source)},
                                {"waste", rect_to_json(waste)}};
    doc["agents"] = agents;
    doc["good_parts"] = good_parts;
    doc["scrap_parts"] = scrap_parts;
    doc["max_speed"] = max_speed;
    doc["detection_radius"] = detection_radius;
    doc["tick_budget"] = tick_budget;
    doc["seed"] = seed;
    return doc.dump(2) + "\n";
}

std::map<std::string, int> Metrics::to_map() const {
    return {{"good_picked", good_picked},
            {"scrap_picked", scrap_picked},
            {"good_in_storage", good_in_storage},
            {"scrap_in_waste", scrap_in_waste}};
}

std::string Metrics::to_json() const {
    ordered_json doc;
    doc["good_picked"] = good_picked;
    doc["scrap_picked"] = scrap_picked;
    doc["good_in_storage"] = good_in_storage;
    doc["scrap_in_waste"] = scrap_in_waste;
    return doc.dump();
}

World World::setup(const WorldConfig& config) {
    config.validate();
    World world(config, Rng(config.seed));

    const auto uniform_in = [&world](const Rect& area) {
        return Vec2{world.rng_.uniform(area.min_x, area.max_x),
                    world.rng_.uniform(area.min_y, area.max_y)};
    };

    for (int i = 0; i < config.agents; ++i) {
        AgentState agent;
        agent.id = i;
        agent.position = uniform_in(config.base);
        const double angle = world.rng_.uniform(0.0, 2.0 * kPi);
        agent.heading = {std::cos(angle), std::sin(angle)};
        world.agents_.push_back(agent);
    }

    int part_id = 0;
    for (int i = 0; i < config.good_parts; ++i) {
        world.parts_.push_back(Part{part_id++, PartKind::good, uniform_in(config.source), {}});
    }
    const Rect whole{0.0, 0.0, config.width, config.height};
    for (int i = 0; i < config.scrap_parts; ++i) {
        Vec2 position;
        bool placed = false;
        for (int attempt = 0; attempt < 100; ++attempt) {
            position = uniform_in(whole);
            if (!config.base.contains(position)) {
                placed = true;
                break;
            }
        }
        if (!placed) {
            throw std::runtime_error("could not place scrap parts outside the base area");
        }
        world.parts_.push_back(Part{part_id++, PartKind::scrap, position, {}});
    }
    return world;
}

bool World::part_detected(int agent, PartKind kind) const {
    const AgentState& a = agents_.at(static_cast<std::size_t>(agent));
    for (const Part& part : parts_) {
        if (part.kind != kind || !part.position) continue;
        if (distance(*part.position, a.position) <= config_.detection_radius) return true;
    }
    return false;
}

bool World::holding(int agent, PartKind kind) const {
    const AgentState& a = agents_.at(static_cast<std::size_t>(agent));
    if (!a.held_part) return false;
    return parts_.at(static_cast<std::size_t>(*a.held_part)).kind == kind;
}

bool World::in_area(int agent, const Rect& area) const {
    return area.contains(agents_.at(static_cast<std::size_t>(agent)).position);
}

bool World::pick_up_part(int agent) {
    AgentState& a = agents_.at(static_cast<std::size_t>(agent));
    if (a.held_part) return false;
    int best = -1;
    double best_distance = std::numeric_limits<double>::infinity();
    for (const Part& part : parts_) {
        if (!part.position) continue;
        const double d = distance(*part.position, a.position);
        if (d > config_.detection_radius) continue;
        if (d < best_distance) { // ties keep the lowest id (scan order)
            best_distance = d;
            best = part.id;
        }
    }
    if (best < 0) return false;
    Part& part = parts_.at(static_cast<std::size_t>(best));
    part.position.reset();
    part.holder = agent;
    a.held_part = best;
    if (part.kind == PartKind::good) {
        ++metrics_.good_picked;
    } else {
        ++metrics_.scrap_picked;
    }
    return true;
}

bool World::drop_part(int agent) {
    AgentState& a = agents_.at(static_cast<std::size_t>(agent));
    if (!a.held_part) return false;
    Part& part = parts_.at(static_cast<std::size_t>(*a.held_part));
    part.holder.reset();
    part.position = a.position;
    a.held_part.reset();
    if (part.kind == PartKind::good && config_.storage.contains(*part.position)) {
        ++metrics_.good_in_storage;
    }
    if (part.kind == PartKind::scrap && config_.waste.contains(*part.position)) {
        ++metrics_.scrap_in_waste;
    }
    return true;
}

void World::set_mode(int agent, MoveMode mode) {
    agents_.at(static_cast<std::size_t>(agent)).mode = mode;
}

void World::integrate_motion(AgentState& agent) {
    const Rect* target = nullptr;
    switch (agent.mode) {
        case MoveMode::seek_source: target = &config_.source; break;
        case MoveMode::seek_base: target = &config_.base; break;
        case MoveMode::seek_waste: target = &config_.waste; break;
        case MoveMode::seek_storage: target = &config_.storage; break;
        case MoveMode::random_walk: {
            const double jitter =
                rng_.uniform(-kRandomWalkJitterDeg, kRandomWalkJitterDeg) * kPi / 180.0;
            const double cos_j = std::cos(jitter);
            const double sin_j = std::sin(jitter);
            const Vec2 h = agent.heading;
            agent.heading = {h.x * cos_j - h.y * sin_j, h.x * sin_j + h.y * cos_j};
            agent.position.x += agent.heading.x * config_.max_speed;
            agent.position.y += agent.heading.y * config_.max_speed;
            break;
        }
        case MoveMode::stopped: return;
    }
    if (target) {
        const Vec2 goal = target->centroid();
        const double d = distance(goal, agent.position);
        if (d > 1e-12) {
            const double step = std::min(config_.max_speed, d);
            agent.heading = {(goal.x - agent.position.x) / d, (goal.y - agent.position.y) / d};
            agent.position.x += agent.heading.x * step;
            agent.position.y += agent.heading.y * step;
        }
    }
    agent.position.x = std::clamp(agent.position.x, 0.0, config_.width);
    agent.position.y = std::clamp(agent.position.y, 0.0, config_.height);
}

void World::step(const BehaviorTree& tree, const PrimitiveRegistry& registry) {
    for (AgentState& agent : agents_) {
        AgentHandle handle;
        handle.world = this;
        handle.agent = agent.id;
        btree::tick(tree, handle, registry);
        integrate_motion(agent);
    }
    ++ticks_;
}

Metrics run(const WorldConfig& config, const BehaviorTree& tree, const PrimitiveRegistry& registry) {
    World world = World::setup(config);
    for (int t = 0; t < config.tick_budget; ++t) {
        world.step(tree, registry);
    }
    return world.metrics();
}

namespace {

AgentHandle& as_handle(AgentContext& context) {
    auto* handle = dynamic_cast<AgentHandle*>(&context);
    if (!handle || !handle->world) {
        throw std::invalid_argument("experiment primitives need a simulation agent handle");
    }
    return *handle;
}

PrimitiveRegistry build_experiment_registry() {
    PrimitiveRegistry registry;

    const auto add_condition = [&registry](const std::string& name, const std::string& description,
                                           auto check) {
        registry.add(name, "Condition",
                     "Node Type: Condition\nDescription: " + description,
                     [check](AgentContext& ctx) {
                         AgentHandle& h = as_handle(ctx);
                         return check(*h.world, h.agent);
                     });
    };
    const auto add_actuator = [&registry](const std::string& name, const std::string& description,
                                          auto act) {
        registry.add(name, "ActuatorAction",
                     "Node Type: ActuatorAction\nDescription: " + description,
                     [act](AgentContext& ctx) {
                         AgentHandle& h = as_handle(ctx);
                         return act(*h.world, h.agent);
                     });
    };
    const auto add_state = [&registry](const std::string& name, const std::string& description,
                                       MoveMode mode) {
        registry.add(name, "StateAction",
                     "Node Type: StateAction\nDescription: " + description,
                     [mode](AgentContext& ctx) {
                         AgentHandle& h = as_handle(ctx);
                         h.world->set_mode(h.agent, mode);
                         return true;
                     });
    };

    add_condition("is_good_part_detected",
                  "Checks whether a good part on the ground lies within the agent's detection "
                  "radius. Returns True if at least one is detected, and False otherwise.",
                  [](const World& w, int a) { return w.part_detected(a, PartKind::good); });
    add_condition("is_scrap_part_detected",
                  "Checks whether a scrap part on the ground lies within the agent's detection "
                  "radius. Returns True if at least one is detected, and False otherwise.",
                  [](const World& w, int a) { return w.part_detected(a, PartKind::scrap); });
    add_condition("is_agent_holding_good_part",
                  "Checks whether the agent is currently holding a good part. Returns True if it "
                  "is, and False otherwise.",
                  [](const World& w, int a) { return w.holding(a, PartKind::good); });
    add_condition("is_agent_holding_scrap_part",
                  "Checks whether the agent is currently holding a scrap part. Returns True if it "
                  "is, and False otherwise.",
                  [](const World& w, int a) { return w.holding(a, PartKind::scrap); });
    add_condition("is_agent_in_base_area",
                  "Checks whether the agent is in the base area. Returns True if the agent is "
                  "within the base, and False otherwise.",
                  [](const World& w, int a) { return w.in_area(a, w.config().base); });
    add_condition("is_agent_in_storage_area",
                  "Checks whether the agent is in the storage area. Returns True if the agent is "
                  "within the storage, and False otherwise.",
                  [](const World& w, int a) { return w.in_area(a, w.config().storage); });
    add_condition("is_agent_in_construction_area",
                  "Checks whether the agent is in the construction area. Returns True if the agent "
                  "is within the construction area, and False otherwise.",
                  [](const World& w, int a) { return w.in_area(a, w.config().construction); });
    add_condition("is_agent_in_source_area",
                  "Checks whether the agent is in the source area. Returns True if the agent is "
                  "within the source, and False otherwise.",
                  [](const World& w, int a) { return w.in_area(a, w.config().source); });
    add_condition("is_agent_in_waste_area",
                  "Checks whether the agent is in the waste area. Returns True if the agent is "
                  "within the waste, and False otherwise.",
                  [](const World& w, int a) { return w.in_area(a, w.config().waste); });

    add_actuator("pick_up_part",
                 "Picks up the nearest part on the ground within the agent's detection radius. "
                 "Fails if the agent is already holding a part or no part is in range.",
                 [](World& w, int a) { return w.pick_up_part(a); });
    add_actuator("drop_part",
                 "Drops the part the agent is holding at its current position. Fails if the agent "
                 "is not holding a part.",
                 [](World& w, int a) { return w.drop_part(a); });

    add_state("state_seek_source_area",
              "Sets the agent's movement mode to head towards the source area. Always succeeds.",
              MoveMode::seek_source);
    add_state("state_seek_base_area",
              "Sets the agent's movement mode to head towards the base area. Always succeeds.",
              MoveMode::seek_base);
    add_state("state_seek_storage_area",
              "Sets the agent's movement mode to head towards the storage area. Always succeeds.",
              MoveMode::seek_storage);
    add_state("state_seek_waste_area",
              "Sets the agent's movement mode to head towards the waste area. Always succeeds.",
              MoveMode::seek_waste);
    add_state("state_random_walk",
              "Sets the agent's movement mode to a random walk. Always succeeds.",
              MoveMode::random_walk);
    add_state("state_stop", "Stops the agent's movement. Always succeeds.", MoveMode::stopped);

    return registry;
}

} // namespace

const PrimitiveRegistry& experiment_registry() {
    static const PrimitiveRegistry registry = build_experiment_registry();
    return registry;
}

} // namespace btforge::sim

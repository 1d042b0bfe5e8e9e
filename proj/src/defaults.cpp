#include "btforge/dataset.hpp"
#include "btforge/grammar.hpp"
#include "btforge/harness.hpp"
#include "btforge/prompts.hpp"

namespace btforge::grammar {

// Tree language of the base-maintenance agent: a BehaviorTree root wraps
// either a Selector of sequences (with an optional fallback action) or a
// single Sequence; sequences hold a condition list followed by one or two
// actions, optionally led by one action. Keys ending in lowercase "n" are
// list expansions.
const char* default_grammar_json() {
    return R"({
  "start": "B",
  "rules": {
    "B":    [["b", "SEL"], ["b", "SEQ"]],
    "SEL":  [["sel", "SEQn", "As"], ["sel", "SEQn"]],
    "SEQn": [["SEQ", "SEQn"], ["SEQ"]],
    "SEQ":  [["seq", "Pn", "A"], ["seq", "As", "Pn", "A"]],
    "A":    [["aa", "sa"], ["aa"], ["sa"]],
    "As":   [["aa"], ["sa"]],
    "Pn":   [["p", "Pn"], ["p"], []]
  },
  "terminals": {
    "b":   {"node_type": "BehaviorTree", "has_children": true},
    "sel": {"node_type": "Selector", "has_children": true},
    "seq": {"node_type": "Sequence", "has_children": true},
    "aa":  {"node_type": "ActuatorAction", "has_children": false},
    "sa":  {"node_type": "StateAction", "has_children": false},
    "p":   {"node_type": "Condition", "has_children": false}
  }
})";
}

} // namespace btforge::grammar

namespace btforge::prompts {

const char* default_shots_json() {
    return R"([
  {
    "task": "Find any part in the environment and pick it up",
    "tree_xml": "<BehaviorTree>\n    <Selector>\n        <Sequence>\n            <Condition>is_good_part_detected</Condition>\n            <ActuatorAction>pick_up_part</ActuatorAction>\n        </Sequence>\n        <Sequence>\n            <Condition>is_scrap_part_detected</Condition>\n            <ActuatorAction>pick_up_part</ActuatorAction>\n        </Sequence>\n        <StateAction>state_random_walk</StateAction>\n    </Selector>\n</BehaviorTree>\n"
  },
  {
    "task": "Find all the good parts in the environment. If you find a good part, go to the base. If you are in the base then drop it there",
    "tree_xml": "<BehaviorTree>\n    <Selector>\n        <Sequence>\n            <Condition>is_good_part_detected</Condition>\n            <ActuatorAction>pick_up_part</ActuatorAction>\n        </Sequence>\n        <Sequence>\n            <Condition>is_agent_in_base_area</Condition>\n            <Condition>is_agent_holding_good_part</Condition>\n            <ActuatorAction>drop_part</ActuatorAction>\n        </Sequence>\n        <Sequence>\n            <Condition>is_agent_holding_good_part</Condition>\n            <StateAction>state_seek_base_area</StateAction>\n        </Sequence>\n        <StateAction>state_random_walk</StateAction>\n    </Selector>\n</BehaviorTree>\n"
  }
])";
}

} // namespace btforge::prompts

namespace btforge::dataset {

// Five enrichment examples; none restates the find/clean/maintain test
// tasks.
const char* default_enrich_examples_json() {
    return R"([
  {
    "layman": "Head over to the waste area and stay there.",
    "tree_xml": "<BehaviorTree>\n    <Sequence>\n        <Condition>is_agent_in_waste_area</Condition>\n        <StateAction>state_stop</StateAction>\n    </Sequence>\n</BehaviorTree>\n"
  },
  {
    "layman": "If you end up in the construction area, stop moving.",
    "tree_xml": "<BehaviorTree>\n    <Sequence>\n        <Condition>is_agent_in_construction_area</Condition>\n        <StateAction>state_stop</StateAction>\n    </Sequence>\n</BehaviorTree>\n"
  },
  {
    "layman": "Just wander around the place.",
    "tree_xml": "<BehaviorTree>\n    <Sequence>\n        <StateAction>state_random_walk</StateAction>\n    </Sequence>\n</BehaviorTree>\n"
  },
  {
    "layman": "If you are carrying a scrap part, head towards the waste area.",
    "tree_xml": "<BehaviorTree>\n    <Sequence>\n        <Condition>is_agent_holding_scrap_part</Condition>\n        <StateAction>state_seek_waste_area</StateAction>\n    </Sequence>\n</BehaviorTree>\n"
  },
  {
    "layman": "Drop whatever you are carrying once you reach the storage area.",
    "tree_xml": "<BehaviorTree>\n    <Selector>\n        <Sequence>\n            <Condition>is_agent_in_storage_area</Condition>\n            <ActuatorAction>drop_part</ActuatorAction>\n        </Sequence>\n        <StateAction>state_seek_storage_area</StateAction>\n    </Selector>\n</BehaviorTree>\n"
  }
])";
}

} // namespace btforge::dataset

namespace btforge::harness {

std::vector<TaskSpec> default_tasks() {
    std::vector<TaskSpec> tasks;

    TaskSpec find;
    find.name = "find";
    find.texts["layman"] = "Find a good part and pick it up.";
    find.texts["technical"] = "if good part detected then pick up part, otherwise seek source area";
    find.texts["spoonfed"] =
        "Your task is to find a good part. If you detect a good part, then pick it up. "
        "Otherwise, seek the source area.";
    find.metric_goals["good_picked"] = 1;
    tasks.push_back(std::move(find));

    TaskSpec clean;
    clean.name = "clean";
    clean.texts["layman"] = "Find as many scrap parts as you can and bring them to the waste.";
    clean.texts["technical"] =
        "if scrap part detected then pick up part, otherwise if agent holding scrap part and "
        "agent in waste area then drop part, otherwise if agent holding scrap part then seek "
        "waste area, otherwise random walk";
    clean.texts["spoonfed"] =
        "Your task is to clean up scrap parts. If you detect a scrap part, then pick it up. If "
        "you are holding a scrap part and you are in the waste area, then drop it. If you are "
        "holding a scrap part, then seek the waste area. Otherwise, walk randomly.";
    clean.metric_goals["scrap_picked"] = 1;
    clean.metric_goals["scrap_in_waste"] = 1;
    tasks.push_back(std::move(clean));

    TaskSpec maintain;
    maintain.name = "maintain";
    maintain.texts["layman"] =
        "Find as many parts as you can, bring good parts to the storage, while taking any scrap "
        "parts you find to the waste.";
    maintain.texts["technical"] =
        "if good part detected or scrap part detected then pick up part, otherwise if agent "
        "holding good part and agent in storage area then drop part, otherwise if agent holding "
        "scrap part and agent in waste area then drop part, otherwise if agent holding good part "
        "then seek storage area, otherwise if agent holding scrap part then seek waste area, "
        "otherwise random walk";
    maintain.texts["spoonfed"] =
        "Your task is to keep the base maintained. If you detect a good part or a scrap part, "
        "then pick it up. If you are holding a good part and you are in the storage area, then "
        "drop it. If you are holding a scrap part and you are in the waste area, then drop it. "
        "If you are holding a good part, then seek the storage area. If you are holding a scrap "
        "part, then seek the waste area. Otherwise, walk randomly.";
    maintain.metric_goals["good_picked"] = 1;
    maintain.metric_goals["good_in_storage"] = 1;
    maintain.metric_goals["scrap_picked"] = 1;
    maintain.metric_goals["scrap_in_waste"] = 1;
    tasks.push_back(std::move(maintain));

    return tasks;
}

const char* default_experiment_json() {
    return R"({
  "models": [
    {"name": "local", "endpoint": "http://localhost:11434/v1", "model": "", "temperature": 0.2}
  ],
  "techniques": ["zero_shot", "one_shot", "two_shot"],
  "styles": ["layman", "technical", "spoonfed"],
  "tasks": [
    {
      "name": "find",
      "texts": {
        "layman": "Find a good part and pick it up.",
        "technical": "if good part detected then pick up part, otherwise seek source area",
        "spoonfed": "Your task is to find a good part. If you detect a good part, then pick it up. Otherwise, seek the source area."
      },
      "metric_goals": {"good_picked": 1}
    },
    {
      "name": "clean",
      "texts": {
        "layman": "Find as many scrap parts as you can and bring them to the waste.",
        "technical": "if scrap part detected then pick up part, otherwise if agent holding scrap part and agent in waste area then drop part, otherwise if agent holding scrap part then seek waste area, otherwise random walk",
        "spoonfed": "Your task is to clean up scrap parts. If you detect a scrap part, then pick it up. If you are holding a scrap part and you are in the waste area, then drop it. If you are holding a scrap part, then seek the waste area. Otherwise, walk randomly."
      },
      "metric_goals": {"scrap_picked": 1, "scrap_in_waste": 1}
    },
    {
      "name": "maintain",
      "texts": {
        "layman": "Find as many parts as you can, bring good parts to the storage, while taking any scrap parts you find to the waste.",
        "technical": "if good part detected or scrap part detected then pick up part, otherwise if agent holding good part and agent in storage area then drop part, otherwise if agent holding scrap part and agent in waste area then drop part, otherwise if agent holding good part then seek storage area, otherwise if agent holding scrap part then seek waste area, otherwise random walk",
        "spoonfed": "Your task is to keep the base maintained. If you detect a good part or a scrap part, then pick it up. If you are holding a good part and you are in the storage area, then drop it. If you are holding a scrap part and you are in the waste area, then drop it. If you are holding a good part, then seek the storage area. If you are holding a scrap part, then seek the waste area. Otherwise, walk randomly."
      },
      "metric_goals": {"good_picked": 1, "good_in_storage": 1, "scrap_picked": 1, "scrap_in_waste": 1}
    }
  ],
  "repetitions": 1,
  "system_prompt": ""
})";
}

} // namespace btforge::harness

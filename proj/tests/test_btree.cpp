#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <functional>
#include <set>
#include <string>

#include "btforge/btree.hpp"
#include "btforge/dataset.hpp"
#include "btforge/grammar.hpp"
#include "btforge/rng.hpp"
#include "btforge/sim.hpp"
#include "support/fixtures.hpp"

using namespace btforge;

TEST_CASE("parse_xml reads the example tree") {
    const BehaviorTree tree = btree::parse_xml(testing::example_tree_xml());
    CHECK(shape_string(tree.root) ==
          "BehaviorTree(Selector(Sequence(Condition,ActuatorAction),StateAction))");
    const Node& selector = tree.root.children[0];
    CHECK(selector.children[0].children[0].primitive == "is_good_part_detected");
    CHECK(selector.children[0].children[1].primitive == "pick_up_part");
    CHECK(selector.children[1].primitive == "state_seek_source_area");
}

TEST_CASE("parse_xml handles minimal and malformed input") {
    SUBCASE("minimal nesting") {
        const BehaviorTree tree = btree::parse_xml(
            "<BehaviorTree><Sequence><StateAction>x</StateAction></Sequence></BehaviorTree>");
        CHECK(node_count(tree.root) == 3);
        CHECK(tree.root.children[0].children[0].primitive == "x");
    }
    SUBCASE("unknown tag") {
        CHECK_THROWS_WITH_AS(btree::parse_xml("<BehaviorTree><Foo/></BehaviorTree>"),
                             doctest::Contains("unknown tag Foo"), std::invalid_argument);
    }
    SUBCASE("no tree element at all") {
        CHECK_THROWS_WITH_AS(btree::parse_xml("I cannot help with that."),
                             doctest::Contains("no <BehaviorTree>"), std::invalid_argument);
    }
    SUBCASE("unterminated document") {
        CHECK_THROWS_AS(btree::parse_xml("<BehaviorTree><Selector>"), std::invalid_argument);
    }
    SUBCASE("leaf with child elements") {
        CHECK_THROWS_WITH_AS(
            btree::parse_xml("<BehaviorTree><Condition><StateAction>x</StateAction></Condition>"
                             "</BehaviorTree>"),
            doctest::Contains("leaf <Condition> contains child elements"), std::invalid_argument);
    }
    SUBCASE("composite with text content") {
        CHECK_THROWS_WITH_AS(btree::parse_xml("<BehaviorTree><Selector>run fast</Selector>"
                                              "</BehaviorTree>"),
                             doctest::Contains("composite <Selector> contains text content"),
                             std::invalid_argument);
    }
    SUBCASE("mismatched closing tag") {
        CHECK_THROWS_AS(btree::parse_xml("<BehaviorTree><Selector></Sequence></BehaviorTree>"),
                        std::invalid_argument);
    }
}

TEST_CASE("parse_xml tolerates prose and code fences around the tree") {
    const std::string wrapped = std::string("Sure! Here is your tree:\n```xml\n") +
                                testing::example_tree_xml() + "```\nLet me know if it works.";
    const BehaviorTree tree = btree::parse_xml(wrapped);
    CHECK(btree::serialize_xml(tree) == testing::example_tree_xml());
}

TEST_CASE("serialize_xml canonical form") {
    SUBCASE("example golden") {
        const BehaviorTree tree = btree::parse_xml(testing::example_tree_xml());
        CHECK(btree::serialize_xml(tree) == testing::example_tree_xml());
    }
    SUBCASE("single leaf is a three-line document") {
        const BehaviorTree tree =
            btree::parse_xml("<BehaviorTree><StateAction>state_stop</StateAction></BehaviorTree>");
        CHECK(btree::serialize_xml(tree) ==
              "<BehaviorTree>\n    <StateAction>state_stop</StateAction>\n</BehaviorTree>\n");
    }
    SUBCASE("empty selector serializes without validation") {
        const BehaviorTree tree =
            btree::parse_xml("<BehaviorTree><Selector></Selector></BehaviorTree>");
        CHECK(btree::serialize_xml(tree) ==
              "<BehaviorTree>\n    <Selector>\n    </Selector>\n</BehaviorTree>\n");
    }
}

TEST_CASE("parse/serialize round trip over generated trees") {
    const grammar::Grammar& g = grammar::default_grammar();
    Rng rng(555);
    for (int i = 0; i < 200; ++i) {
        const auto genotype = grammar::random_genotype(rng);
        const auto skeleton = grammar::decode(g, genotype);
        const BehaviorTree tree =
            dataset::populate_random(skeleton, sim::experiment_registry(), rng);
        const std::string xml = btree::serialize_xml(tree);
        const BehaviorTree reparsed = btree::parse_xml(xml);
        REQUIRE(btree::structures_equal(tree, reparsed));
        REQUIRE(btree::serialize_xml(reparsed) == xml); // names survive too
    }
}

TEST_CASE("validate_syntax checks derivability") {
    const grammar::Grammar& g = grammar::default_grammar();

    SUBCASE("the example tree is valid") {
        const BehaviorTree tree = btree::parse_xml(testing::example_tree_xml());
        const auto report = btree::validate_syntax(tree, g);
        CHECK(report.syntactically_valid);
        CHECK(report.violations.empty());
    }
    SUBCASE("selector root without the BehaviorTree wrapper is invalid") {
        BehaviorTree tree = btree::parse_xml(testing::example_tree_xml());
        tree.root = tree.root.children[0]; // strip the wrapper
        const auto report = btree::validate_syntax(tree, g);
        CHECK_FALSE(report.syntactically_valid);
        CHECK_FALSE(report.violations.empty());
    }
    SUBCASE("sequence without a trailing action is invalid") {
        const BehaviorTree tree = btree::parse_xml(
            "<BehaviorTree><Sequence><Condition>is_agent_in_base_area</Condition></Sequence>"
            "</BehaviorTree>");
        const auto report = btree::validate_syntax(tree, g);
        CHECK_FALSE(report.syntactically_valid);
    }
    SUBCASE("empty selector is reported, not ticked") {
        const BehaviorTree tree =
            btree::parse_xml("<BehaviorTree><Selector></Selector></BehaviorTree>");
        CHECK_FALSE(btree::validate_syntax(tree, g).syntactically_valid);
    }
    SUBCASE("reports never throw on weird shapes") {
        BehaviorTree tree;
        tree.root.type = "Condition";
        tree.root.arity = NodeArity::leaf;
        tree.root.primitive = "x";
        CHECK_FALSE(btree::validate_syntax(tree, g).syntactically_valid);
    }
}

TEST_CASE("validator agrees with the enumeration oracle on mutations") {
    // The six-node slice (63 skeletons) is the complete language at that
    // size, so mutant membership is decidable against it.
    const grammar::Grammar& g = grammar::default_grammar();
    const auto skeletons = grammar::enumerate_skeletons(g, 6);
    std::set<std::string> language;
    for (const auto& skeleton : skeletons) language.insert(shape_string(skeleton.root));

    const std::vector<std::string> all_types = {"BehaviorTree", "Selector",       "Sequence",
                                                "Condition",    "ActuatorAction", "StateAction"};
    int checked = 0;
    for (const auto& skeleton : skeletons) {
        const int nodes = node_count(skeleton.root);
        for (int position = 0; position < nodes; ++position) {
            for (const std::string& new_type : all_types) {
                SkeletonTree mutant = skeleton;
                int index = 0;
                const std::function<void(Node&)> mutate = [&](Node& node) {
                    if (index++ == position) node.type = new_type;
                    for (Node& child : node.children) mutate(child);
                };
                mutate(mutant.root);
                const bool in_language = language.count(shape_string(mutant.root)) > 0;
                const bool accepted = btree::validate_syntax(mutant, g).syntactically_valid;
                REQUIRE(accepted == in_language);
                ++checked;
            }
        }
    }
    CHECK(checked > 100);
}

TEST_CASE("validate_primitives flags hallucinations") {
    const auto& registry = sim::experiment_registry();

    SUBCASE("the example tree is clean") {
        const BehaviorTree tree = btree::parse_xml(testing::example_tree_xml());
        CHECK(btree::validate_primitives(tree, registry).hallucinated_primitives.empty());
    }
    SUBCASE("unknown name") {
        const BehaviorTree tree = btree::parse_xml(
            "<BehaviorTree><Sequence><Condition>fly_to_moon</Condition>"
            "<ActuatorAction>pick_up_part</ActuatorAction></Sequence></BehaviorTree>");
        const auto report = btree::validate_primitives(tree, registry);
        REQUIRE(report.hallucinated_primitives.size() == 1);
        CHECK(report.hallucinated_primitives[0].name == "fly_to_moon");
        CHECK(report.hallucinated_primitives[0].reason ==
              btree::HallucinationReason::unknown_name);
    }
    SUBCASE("wrong node type") {
        const BehaviorTree tree = btree::parse_xml(
            "<BehaviorTree><Sequence><ActuatorAction>is_agent_in_base_area</ActuatorAction>"
            "</Sequence></BehaviorTree>");
        const auto report = btree::validate_primitives(tree, registry);
        REQUIRE(report.hallucinated_primitives.size() == 1);
        CHECK(report.hallucinated_primitives[0].reason ==
              btree::HallucinationReason::wrong_node_type);
    }
}

TEST_CASE("tick short-circuits and only leaves touch the agent") {
    testing::SpyAgent agent;

    SUBCASE("selector stops at the first success") {
        const auto registry = testing::spy_registry(false, true);
        const BehaviorTree tree = btree::parse_xml(
            "<BehaviorTree><Selector><Condition>cond_a</Condition>"
            "<ActuatorAction>act_a</ActuatorAction><ActuatorAction>act_b</ActuatorAction>"
            "</Selector></BehaviorTree>");
        CHECK(btree::tick(tree, agent, registry) == btree::TickStatus::success);
        CHECK(agent.invoked == std::vector<std::string>{"cond_a", "act_a"});
    }
    SUBCASE("sequence stops at the first failure") {
        const auto registry = testing::spy_registry(true, false);
        const BehaviorTree tree = btree::parse_xml(
            "<BehaviorTree><Sequence><Condition>cond_a</Condition>"
            "<ActuatorAction>act_a</ActuatorAction><ActuatorAction>act_b</ActuatorAction>"
            "</Sequence></BehaviorTree>");
        CHECK(btree::tick(tree, agent, registry) == btree::TickStatus::failure);
        CHECK(agent.invoked == std::vector<std::string>{"cond_a", "act_a"});
    }
    SUBCASE("all-success sequence succeeds") {
        const auto registry = testing::spy_registry(true, true);
        const BehaviorTree tree = btree::parse_xml(
            "<BehaviorTree><Sequence><Condition>cond_a</Condition><Condition>cond_b</Condition>"
            "<ActuatorAction>act_a</ActuatorAction></Sequence></BehaviorTree>");
        CHECK(btree::tick(tree, agent, registry) == btree::TickStatus::success);
        CHECK(agent.invoked.size() == 3);
    }
    SUBCASE("all-failure selector fails") {
        const auto registry = testing::spy_registry(false, false);
        const BehaviorTree tree = btree::parse_xml(
            "<BehaviorTree><Selector><Condition>cond_a</Condition>"
            "<ActuatorAction>act_a</ActuatorAction></Selector></BehaviorTree>");
        CHECK(btree::tick(tree, agent, registry) == btree::TickStatus::failure);
        CHECK(agent.invoked.size() == 2);
    }
    SUBCASE("unresolvable primitive throws when validation was skipped") {
        const auto registry = testing::spy_registry(true, true);
        const BehaviorTree tree =
            btree::parse_xml("<BehaviorTree><Condition>ghost</Condition></BehaviorTree>");
        CHECK_THROWS_WITH_AS(btree::tick(tree, agent, registry),
                             doctest::Contains("unresolvable primitive"), std::runtime_error);
    }
}

TEST_CASE("structures_equal compares shape and types only") {
    const BehaviorTree a = btree::parse_xml(testing::example_tree_xml());

    SUBCASE("a populated skeleton keeps its shape") {
        const grammar::Grammar& g = grammar::default_grammar();
        Rng rng(9);
        const auto skeleton = grammar::decode(g, grammar::random_genotype(rng));
        const BehaviorTree populated =
            dataset::populate_random(skeleton, sim::experiment_registry(), rng);
        CHECK(btree::structures_equal(skeleton, populated));
    }
    SUBCASE("different leaf order differs") {
        const BehaviorTree x = btree::parse_xml(
            "<BehaviorTree><Sequence><Condition>c</Condition><ActuatorAction>a</ActuatorAction>"
            "</Sequence></BehaviorTree>");
        const BehaviorTree y = btree::parse_xml(
            "<BehaviorTree><Sequence><ActuatorAction>a</ActuatorAction><Condition>c</Condition>"
            "</Sequence></BehaviorTree>");
        CHECK_FALSE(btree::structures_equal(x, y));
    }
    SUBCASE("an inserted node differs") {
        const BehaviorTree b = btree::parse_xml(
            "<BehaviorTree><Selector><Sequence><Condition>is_good_part_detected</Condition>"
            "<Condition>is_scrap_part_detected</Condition>"
            "<ActuatorAction>pick_up_part</ActuatorAction></Sequence>"
            "<StateAction>state_seek_source_area</StateAction></Selector></BehaviorTree>");
        CHECK_FALSE(btree::structures_equal(a, b));
    }
    SUBCASE("primitive names are ignored") {
        const BehaviorTree b = btree::parse_xml(
            "<BehaviorTree><Selector><Sequence><Condition>is_scrap_part_detected</Condition>"
            "<ActuatorAction>drop_part</ActuatorAction></Sequence>"
            "<StateAction>state_stop</StateAction></Selector></BehaviorTree>");
        CHECK(btree::structures_equal(a, b));
    }
}

TEST_CASE("parser survives garbage and truncation without crashing") {
    const std::string seed_text = testing::example_tree_xml();
    Rng rng(0xF00D);
    int parsed_ok = 0;
    for (int i = 0; i < 5000; ++i) {
        std::string text;
        const int mode = static_cast<int>(rng.uniform_u32(2));
        if (mode == 0) {
            // Random bytes.
            const int len = static_cast<int>(rng.uniform_u32(120));
            for (int j = 0; j < len; ++j) {
                text += static_cast<char>(rng.uniform_u32(255));
            }
        } else if (mode == 1) {
            // Truncated tree.
            text = seed_text.substr(0, rng.uniform_u32(static_cast<std::uint32_t>(
                                           seed_text.size())));
        } else {
            // Tree with random byte edits.
            text = seed_text;
            for (int j = 0; j < 6; ++j) {
                text[rng.uniform_u32(static_cast<std::uint32_t>(text.size() - 1))] =
                    static_cast<char>(rng.uniform_u32(255));
            }
        }
        try {
            const BehaviorTree tree = btree::parse_xml(text);
            ++parsed_ok;
            btree::validate_syntax(tree, grammar::default_grammar());
            btree::serialize_xml(tree);
        } catch (const std::invalid_argument&) {
            // rejection is the expected outcome for most inputs
        }
    }
    CHECK(parsed_ok >= 0); // the point is: no crash, no unexpected exception type
}

TEST_CASE("locate_tree_markup is tolerant and bounded") {
    SUBCASE("extracts through surrounding junk") {
        const std::string text = std::string("junk<BehaviorTree><Selector></Selector>"
                                             "</BehaviorTree>junk");
        const auto markup = btree::locate_tree_markup(text);
        REQUIRE(markup.has_value());
        CHECK(*markup == "<BehaviorTree><Selector></Selector></BehaviorTree>");
    }
    SUBCASE("missing close is rejected") {
        CHECK_FALSE(btree::locate_tree_markup("<BehaviorTree><Selector>").has_value());
    }
    SUBCASE("no tree at all") {
        CHECK_FALSE(btree::locate_tree_markup("nothing here").has_value());
    }
}

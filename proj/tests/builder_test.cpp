#include <algorithm>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "support/fixtures.hpp"
#include "support/synthetic_provider.hpp"
#include "treescheme/builder.hpp"
#include "treescheme/errors.hpp"
#include "treescheme/mock_provider.hpp"

using namespace treescheme;
using nlohmann::json;
using ts_test::make_taxonomy;

namespace {

const char* templates_dir() { return TS_TEMPLATES_DIR; }

BuilderConfig config_for(Strategy strategy, int candidates = 3) {
    BuilderConfig config;
    config.strategy = strategy;
    config.model_id = "mock-chat";
    config.candidates_per_node = candidates;
    config.prompt_template_set = templates_dir();
    config.run_id = "run-test";
    return config;
}

std::string proposal_json(
    const std::string& question,
    const std::vector<std::pair<std::string, std::vector<std::string>>>& groups) {
    json doc;
    doc["reasoning"] =
        json::array({{{"question", "What matters here?"}, {"answer", "The split."}}});
    doc["question"] = question;
    doc["groups"] = json::array();
    for (const auto& [answer, classes] : groups)
        doc["groups"].push_back({{"answer", answer}, {"classes", classes}});
    return doc.dump();
}

MockScriptEntry entry(const std::string& response, long prompt = 200, long completion = 60) {
    return MockScriptEntry{std::nullopt, response, prompt, completion};
}

MockScriptEntry score_entry(double score) {
    return entry("{\"score\": " + std::to_string(score) + "}", 80, 8);
}

std::shared_ptr<ChatGateway> gateway_from(std::vector<MockScriptEntry> script) {
    return std::make_shared<ChatGateway>(std::make_shared<MockProvider>(std::move(script)));
}

std::shared_ptr<MockNliJudge> neutral_judge() {
    auto judge = std::make_shared<MockNliJudge>();
    judge->set_default(NliVerdict::neutral);
    return judge;
}

}  // namespace

TEST_CASE("propose_split validates the partition against the strategy") {
    auto taxonomy = make_taxonomy({"A", "B", "C"});

    auto attempt = [&](Strategy strategy, const std::string& response) {
        TreeBuilder builder(gateway_from({entry(response)}), neutral_judge(),
                            config_for(strategy));
        return builder.propose_split(taxonomy.classes);
    };

    SUBCASE("valid open split passes") {
        auto p = attempt(Strategy::split_select,
                         proposal_json("Q?", {{"first", {"A", "B"}}, {"second", {"C"}}}));
        CHECK(p.classification_question == "Q?");
        REQUIRE(p.groups.size() == 2);
        CHECK(p.groups[0].members == std::vector<std::string>{"A", "B"});
        CHECK(p.rationale.size() == 1);
    }
    SUBCASE("unknown class") {
        CHECK_THROWS_AS(
            attempt(Strategy::split_select,
                    proposal_json("Q?", {{"a", {"A", "Z"}}, {"b", {"B", "C"}}})),
            InvalidPartition);
    }
    SUBCASE("missing class") {
        CHECK_THROWS_AS(attempt(Strategy::split_select,
                                proposal_json("Q?", {{"a", {"A"}}, {"b", {"B"}}})),
                        InvalidPartition);
    }
    SUBCASE("duplicated class") {
        CHECK_THROWS_AS(
            attempt(Strategy::split_select,
                    proposal_json("Q?", {{"a", {"A", "B"}}, {"b", {"B", "C"}}})),
            InvalidPartition);
    }
    SUBCASE("empty group") {
        CHECK_THROWS_AS(
            attempt(Strategy::split_select,
                    proposal_json("Q?", {{"a", {"A"}}, {"b", {"B", "C"}}, {"c", {}}})),
            InvalidPartition);
    }
    SUBCASE("single group is degenerate") {
        CHECK_THROWS_AS(attempt(Strategy::split_select,
                                proposal_json("Q?", {{"a", {"A", "B", "C"}}})),
                        DegenerateSplit);
    }
    SUBCASE("duplicate answer text after normalization") {
        CHECK_THROWS_AS(
            attempt(Strategy::split_select,
                    proposal_json("Q?", {{"Same!", {"A", "B"}}, {"same", {"C"}}})),
            InvalidPartition);
    }
    SUBCASE("binary strategies demand exactly two groups") {
        CHECK_THROWS_AS(
            attempt(Strategy::open_binary,
                    proposal_json("Q?", {{"a", {"A"}}, {"b", {"B"}}, {"c", {"C"}}})),
            InvalidPartition);
    }
    SUBCASE("yes_no answers must begin with yes and no") {
        CHECK_THROWS_AS(
            attempt(Strategy::yes_no,
                    proposal_json("Q?", {{"Opens", {"A", "B"}}, {"Reacts", {"C"}}})),
            InvalidPartition);
        auto p = attempt(Strategy::yes_no, proposal_json("Q?", {{"No, it reacts", {"C"}},
                                                                {"Yes, it opens",
                                                                 {"A", "B"}}}));
        CHECK(p.groups.size() == 2);
    }
}

TEST_CASE("score_split clamps out-of-range scores and records a warning") {
    auto taxonomy = make_taxonomy({"A", "B"});
    TreeBuilder builder(gateway_from({entry(proposal_json(
                                         "Q?", {{"a", {"A"}}, {"b", {"B"}}})),
                                      score_entry(15)}),
                        neutral_judge(), config_for(Strategy::split_select));
    auto proposal = builder.propose_split(taxonomy.classes);
    double score = builder.score_split(proposal, taxonomy.classes);
    CHECK(score == 10.0);
    REQUIRE_FALSE(builder.warnings().empty());
    CHECK(builder.warnings().front().find("clamp") != std::string::npos);
}

TEST_CASE("vet_split damns any contradicted pair") {
    auto taxonomy = make_taxonomy({"A", "B"});
    auto judge = neutral_judge();
    judge->add("Q?", "No, never", NliVerdict::contradiction);

    TreeBuilder builder(
        gateway_from({entry(proposal_json("Q?", {{"Yes, always", {"A"}},
                                                 {"No, never", {"B"}}}))}),
        judge, config_for(Strategy::split_select));
    auto proposal = builder.propose_split(taxonomy.classes);
    std::vector<JudgeCall> calls;
    CHECK(builder.vet_split(proposal, &calls) == SplitVerdict::contradictory);
    CHECK(calls.size() == 2);
    CHECK(calls[1].verdict == NliVerdict::contradiction);
}

TEST_CASE("select_split prefers the best non-contradictory candidate") {
    auto taxonomy = make_taxonomy({"A", "B"});
    auto two_way = [&](const std::string& question) {
        return entry(proposal_json(question, {{"first half", {"A"}},
                                              {"second half", {"B"}}}));
    };
    std::vector<MockScriptEntry> script{two_way("Q1"), score_entry(6), two_way("Q2"),
                                        score_entry(9), two_way("Q3"), score_entry(7)};

    SUBCASE("highest score wins when nothing is contradictory") {
        TreeBuilder builder(gateway_from(script), neutral_judge(),
                            config_for(Strategy::split_select));
        CHECK(builder.select_split(taxonomy.classes).classification_question == "Q2");
    }
    SUBCASE("contradictory best falls back to next-best") {
        auto judge = neutral_judge();
        judge->add("Q2", "first half", NliVerdict::contradiction);
        TreeBuilder builder(gateway_from(script), judge,
                            config_for(Strategy::split_select));
        CHECK(builder.select_split(taxonomy.classes).classification_question == "Q3");
        const auto& audit = builder.audit_log();
        REQUIRE(audit.size() == 3);
        CHECK(*audit[1].verdict == SplitVerdict::contradictory);
        CHECK(*audit[2].verdict == SplitVerdict::non_contradictory);
    }
    SUBCASE("all contradictory raises NoViableSplit") {
        auto judge = neutral_judge();
        for (const char* q : {"Q1", "Q2", "Q3"})
            judge->add(q, "first half", NliVerdict::contradiction);
        TreeBuilder builder(gateway_from(script), judge,
                            config_for(Strategy::split_select));
        CHECK_THROWS_AS(builder.select_split(taxonomy.classes), NoViableSplit);
    }
    SUBCASE("score ties break toward earlier generation order") {
        std::vector<MockScriptEntry> tied{two_way("Q1"), score_entry(8), two_way("Q2"),
                                          score_entry(8), two_way("Q3"), score_entry(2)};
        TreeBuilder builder(gateway_from(tied), neutral_judge(),
                            config_for(Strategy::split_select));
        CHECK(builder.select_split(taxonomy.classes).classification_question == "Q1");
    }
}

TEST_CASE("non-search strategies retry the whole proposal on invalid partitions") {
    auto taxonomy = make_taxonomy({"A", "B", "C"});
    auto bad = entry(proposal_json("Bad?", {{"Yes, a", {"A"}}, {"No, b", {"B"}}}));
    auto good = entry(proposal_json("Good?", {{"Yes, a", {"A"}},
                                              {"No, bc", {"B", "C"}}}));

    SUBCASE("second attempt succeeds") {
        TreeBuilder builder(gateway_from({bad, good,
                                          entry(proposal_json("L?", {{"Yes, b", {"B"}},
                                                                     {"No, c", {"C"}}}))}),
                            nullptr, config_for(Strategy::yes_no));
        DecisionTree tree = builder.build_tree(taxonomy);
        CHECK(tree.root.question == "Good?");
        const auto& audit = builder.audit_log();
        REQUIRE(audit.size() >= 2);
        CHECK(audit[0].error_code == "invalid_partition");
        CHECK(audit[0].error_stage == "propose");
        CHECK(audit[1].chosen);
    }
    SUBCASE("exhausted retries propagate InvalidPartition") {
        BuilderConfig config = config_for(Strategy::yes_no);
        config.proposal_retries = 1;
        TreeBuilder builder(gateway_from({bad, bad}), nullptr, config);
        CHECK_THROWS_AS(builder.build_tree(taxonomy), InvalidPartition);
    }
}

TEST_CASE("build_tree base cases") {
    SUBCASE("single class means a single leaf and zero provider calls") {
        auto taxonomy = make_taxonomy({"Solo"});
        auto provider = std::make_shared<MockProvider>(std::vector<MockScriptEntry>{});
        TreeBuilder builder(std::make_shared<ChatGateway>(provider), nullptr,
                            config_for(Strategy::open_nonbinary));
        DecisionTree tree = builder.build_tree(taxonomy);
        CHECK(tree.root.is_leaf());
        CHECK(tree.root.label == "Solo");
        CHECK(provider->calls() == 0);
    }
    SUBCASE("three class top level taxonomy") {
        auto taxonomy = make_taxonomy({"Open", "React", "Sustain"});
        TreeBuilder builder(
            gateway_from({entry(proposal_json("Who holds the floor?",
                                              {{"The speaker starts", {"Open"}},
                                               {"The speaker answers", {"React"}},
                                               {"The speaker continues", {"Sustain"}}}))}),
            nullptr, config_for(Strategy::open_nonbinary));
        DecisionTree tree = builder.build_tree(taxonomy);
        auto report = validate_tree(tree, taxonomy);
        CHECK(report.ok());
        CHECK(tree.root.answers.size() == 3);
    }
}

TEST_CASE("max_depth aborts over-deep expansions") {
    auto taxonomy = make_taxonomy({"A", "B", "C", "D"});
    BuilderConfig config = config_for(Strategy::yes_no);
    config.max_depth = 1;
    std::vector<MockScriptEntry> script{
        entry(proposal_json("Root?", {{"Yes, ab", {"A", "B"}}, {"No, cd", {"C", "D"}}})),
        entry(proposal_json("AB?", {{"Yes, a", {"A"}}, {"No, b", {"B"}}})),
        entry(proposal_json("CD?", {{"Yes, c", {"C"}}, {"No, d", {"D"}}})),
    };
    TreeBuilder shallow(gateway_from(script), nullptr, config);
    CHECK_THROWS_AS(shallow.build_tree(taxonomy), MaxDepthExceeded);

    config.max_depth = 2;
    TreeBuilder deep(gateway_from(script), nullptr, config);
    CHECK(validate_tree(deep.build_tree(taxonomy), taxonomy).ok());
}

TEST_CASE("freq_split_select needs frequencies and fills the template slot") {
    auto with_freq = make_taxonomy({"Rare", "Common"}, /*with_frequencies=*/true);
    auto no_freq = make_taxonomy({"Rare", "Common"});

    TreeBuilder builder(gateway_from({}), neutral_judge(),
                        config_for(Strategy::freq_split_select));
    CHECK_THROWS_AS(builder.propose_split(no_freq.classes), MissingFrequencies);

    std::string top = *with_freq.classes[0].frequency > *with_freq.classes[1].frequency
                          ? "Rare"
                          : "Common";
    std::vector<MockScriptEntry> script{
        {std::string("(" + top + ")"), proposal_json("Freq?", {{"the frequent one", {top}},
                                                               {"the rest",
                                                                {top == "Rare"
                                                                     ? "Common"
                                                                     : "Rare"}}}),
         200, 60},
        score_entry(8),
    };
    TreeBuilder freq_builder(gateway_from(script), neutral_judge(),
                             config_for(Strategy::freq_split_select, 1));
    DecisionTree tree = freq_builder.build_tree(with_freq);
    CHECK(validate_tree(tree, with_freq).ok());
    REQUIRE(freq_builder.audit_log().size() == 1);
    CHECK(freq_builder.audit_log()[0].singleton_most_frequent == true);
}

TEST_CASE("frequent class sits no deeper than the median leaf") {
    auto taxonomy = make_taxonomy({"Top", "B", "C", "D"});
    taxonomy.classes[0].frequency = 0.7;
    taxonomy.classes[1].frequency = 0.1;
    taxonomy.classes[2].frequency = 0.1;
    taxonomy.classes[3].frequency = 0.1;

    std::vector<MockScriptEntry> script{
        entry(proposal_json("Is it the big one?",
                            {{"the frequent kind", {"Top"}},
                             {"one of the rare kinds", {"B", "C", "D"}}})),
        score_entry(9),
        entry(proposal_json("Which rare kind?",
                            {{"kind b", {"B"}}, {"kind c", {"C"}}, {"kind d", {"D"}}})),
        score_entry(8),
    };
    TreeBuilder builder(gateway_from(script), neutral_judge(),
                        config_for(Strategy::freq_split_select, 1));
    DecisionTree tree = builder.build_tree(taxonomy);
    auto stats = depth_stats(tree);
    std::vector<int> depths;
    for (const auto& [label, depth] : stats.per_class_depth) depths.push_back(depth);
    std::sort(depths.begin(), depths.end());
    int median = depths[depths.size() / 2];
    CHECK(stats.per_class_depth.at("Top") <= median);
}

TEST_CASE("backtracking falls back to the root's second-best candidate") {
    auto taxonomy = make_taxonomy({"C1", "C2", "C3", "C4", "C5", "C6", "C7", "C8"});

    std::vector<MockScriptEntry> script;
    // Root candidates: A scores 9 but its first child will dead-end, B scores
    // 7 and works, C scores 5 and is never expanded.
    script.push_back(entry(proposal_json(
        "QA", {{"left four", {"C1", "C2", "C3", "C4"}},
               {"right four", {"C5", "C6", "C7", "C8"}}})));
    script.push_back(score_entry(9));
    script.push_back(entry(proposal_json(
        "QB", {{"pair one", {"C1", "C2"}},
               {"pair two", {"C3", "C4"}},
               {"pair three", {"C5", "C6"}},
               {"pair four", {"C7", "C8"}}})));
    script.push_back(score_entry(7));
    script.push_back(entry(proposal_json(
        "QC", {{"odd ones", {"C1", "C3", "C5", "C7"}},
               {"even ones", {"C2", "C4", "C6", "C8"}}})));
    script.push_back(score_entry(5));
    // Candidates for A's first child {C1..C4}; all judged contradictory.
    for (int i = 1; i <= 3; ++i) {
        script.push_back(entry(proposal_json(
            "QDead" + std::to_string(i),
            {{"dead yes " + std::to_string(i), {"C1", "C2"}},
             {"dead no " + std::to_string(i), {"C3", "C4"}}})));
        script.push_back(score_entry(8));
    }
    // B's four 2-class children; every node generates candidates_per_node
    // candidates, so each child consumes three propose/score pairs.
    const char* pairs[4][3] = {{"P1", "C1", "C2"},
                               {"P2", "C3", "C4"},
                               {"P3", "C5", "C6"},
                               {"P4", "C7", "C8"}};
    for (const auto& p : pairs) {
        for (int variant = 0; variant < 3; ++variant) {
            script.push_back(entry(proposal_json(
                std::string("Q") + p[0] + char('a' + variant),
                {{std::string("first of ") + p[0] + char('a' + variant), {p[1]}},
                 {std::string("second of ") + p[0] + char('a' + variant), {p[2]}}})));
            script.push_back(score_entry(6 - variant));
        }
    }

    auto judge = neutral_judge();
    for (int i = 1; i <= 3; ++i)
        judge->add("QDead" + std::to_string(i), "dead yes " + std::to_string(i),
                   NliVerdict::contradiction);

    BuilderConfig config = config_for(Strategy::split_select);
    SUBCASE("with budget the build survives the dead end") {
        std::vector<MockScriptEntry> full = script;
        TreeBuilder builder(gateway_from(full), judge, config);
        DecisionTree tree = builder.build_tree(taxonomy);
        CHECK(tree.root.question == "QB");
        CHECK(validate_tree(tree, taxonomy).ok());

        const auto& audit = builder.audit_log();
        std::vector<const AuditRecord*> root_records;
        for (const auto& record : audit)
            if (record.subset.size() == 8) root_records.push_back(&record);
        REQUIRE(root_records.size() == 3);
        CHECK(root_records[0]->proposal->classification_question == "QA");
        CHECK_FALSE(root_records[0]->chosen);
        CHECK(*root_records[0]->score == 9.0);
        CHECK(root_records[1]->chosen);
        CHECK(*root_records[1]->score == 7.0);
        CHECK_FALSE(root_records[2]->chosen);
    }
    SUBCASE("budget zero turns the dead end into NoViableSplit") {
        BuilderConfig tight = config;
        tight.backtrack_budget = 0;
        TreeBuilder builder(gateway_from(script), judge, tight);
        CHECK_THROWS_AS(builder.build_tree(taxonomy), NoViableSplit);
    }
}

TEST_CASE("audit log round trips and replays to an identical tree") {
    auto taxonomy = make_taxonomy({"A", "B", "C", "D", "E"}, /*with_frequencies=*/true);
    BuilderConfig config = config_for(Strategy::split_select);

    auto provider = std::make_shared<ts_test::SyntheticSplitProvider>(
        Strategy::split_select, 17);
    TreeBuilder builder(std::make_shared<ChatGateway>(provider), neutral_judge(), config);
    DecisionTree original = builder.build_tree(taxonomy);

    auto path = std::filesystem::temp_directory_path() / "ts_builder_audit.jsonl";
    write_audit_log(builder.audit_log(), path);
    auto loaded = read_audit_log(path);
    REQUIRE(loaded.size() == builder.audit_log().size());
    CHECK(loaded.front().subset == builder.audit_log().front().subset);

    auto script = replay_script_from_audit(loaded, config.structured_retries);
    auto judge = std::make_shared<MockNliJudge>(replay_judge_from_audit(loaded));
    TreeBuilder replayed(gateway_from(script), judge, config);
    DecisionTree rebuilt = replayed.build_tree(taxonomy);
    CHECK(serialize_tree(rebuilt) == serialize_tree(original));
}

TEST_CASE("replay also covers structured-output failures") {
    auto taxonomy = make_taxonomy({"A", "B", "C", "D"});
    BuilderConfig config = config_for(Strategy::split_select);

    auto provider =
        std::make_shared<ts_test::SyntheticSplitProvider>(Strategy::split_select, 5);
    // Three consecutive bad replies exhaust structured_retries=2 for one
    // candidate, producing a structured_output_failure audit record.
    provider->fail_splits_at({2, 3, 4});
    TreeBuilder builder(std::make_shared<ChatGateway>(provider), neutral_judge(), config);
    DecisionTree original = builder.build_tree(taxonomy);

    bool saw_sof = false;
    for (const auto& record : builder.audit_log())
        if (record.error_code == "structured_output_failure") saw_sof = true;
    CHECK(saw_sof);

    auto script = replay_script_from_audit(builder.audit_log(), config.structured_retries);
    auto judge =
        std::make_shared<MockNliJudge>(replay_judge_from_audit(builder.audit_log()));
    TreeBuilder replayed(gateway_from(script), judge, config);
    CHECK(serialize_tree(replayed.build_tree(taxonomy)) == serialize_tree(original));
}

TEST_CASE("build_consistency_suite compares runs") {
    auto taxonomy = make_taxonomy({"A", "B", "C", "D"});
    auto base_script = [&] {
        return std::vector<MockScriptEntry>{
            entry(proposal_json("Root?", {{"Yes, early letters", {"A", "B"}},
                                          {"No, late letters", {"C", "D"}}})),
            entry(proposal_json("AB?", {{"Yes, a", {"A"}}, {"No, b", {"B"}}})),
            entry(proposal_json("CD?", {{"Yes, c", {"C"}}, {"No, d", {"D"}}})),
        };
    };

    BuilderConfig config = config_for(Strategy::yes_no);

    SUBCASE("identical scripts give identical trees") {
        auto factory = [&](int) {
            return std::make_pair(gateway_from(base_script()),
                                  std::shared_ptr<NliJudge>());
        };
        ConsistencySuite suite = build_consistency_suite(taxonomy, config, 3, factory);
        REQUIRE(suite.runs.size() == 3);
        for (const auto& run : suite.runs) CHECK(run.tree.has_value());
        CHECK(suite.diff.identical);
        CHECK_FALSE(suite.diff.first_divergence_level.has_value());
        CHECK(suite.diff.leaf_depth_delta.at("A") == 0);
    }
    SUBCASE("a level-two difference is located") {
        auto factory = [&](int run) {
            auto script = base_script();
            if (run == 1)
                script[1] = entry(proposal_json("AB variant?",
                                                {{"Yes, b", {"B"}}, {"No, a", {"A"}}}));
            return std::make_pair(gateway_from(script), std::shared_ptr<NliJudge>());
        };
        ConsistencySuite suite = build_consistency_suite(taxonomy, config, 2, factory);
        CHECK_FALSE(suite.diff.identical);
        CHECK(*suite.diff.first_divergence_level == 2);
    }
    SUBCASE("failed runs keep their audit and error") {
        auto factory = [&](int run) {
            auto script = base_script();
            if (run == 1) script.resize(1);
            return std::make_pair(gateway_from(script), std::shared_ptr<NliJudge>());
        };
        ConsistencySuite suite = build_consistency_suite(taxonomy, config, 2, factory);
        CHECK(suite.runs[0].tree.has_value());
        CHECK_FALSE(suite.runs[1].tree.has_value());
        CHECK_FALSE(suite.runs[1].error.empty());
        CHECK_FALSE(suite.runs[1].audit.empty());
    }
    SUBCASE("fewer than two runs is a configuration error") {
        auto factory = [&](int) {
            return std::make_pair(gateway_from(base_script()),
                                  std::shared_ptr<NliJudge>());
        };
        CHECK_THROWS_AS(build_consistency_suite(taxonomy, config, 1, factory),
                        ConfigError);
    }
}

TEST_CASE("search strategies refuse to run without a judge") {
    CHECK_THROWS_AS(TreeBuilder(gateway_from({}), nullptr,
                                config_for(Strategy::split_select)),
                    ConfigError);
    CHECK_NOTHROW(TreeBuilder(gateway_from({}), nullptr, config_for(Strategy::yes_no)));
}

TEST_CASE("ledger stages reflect split and score calls") {
    auto taxonomy = make_taxonomy({"A", "B"});
    auto gateway = gateway_from({entry(proposal_json("Q?", {{"first", {"A"}},
                                                            {"second", {"B"}}})),
                                 score_entry(6)});
    TreeBuilder builder(gateway, neutral_judge(), config_for(Strategy::split_select, 1));
    builder.build_tree(taxonomy);
    auto stages = gateway->ledger().stages();
    CHECK(std::find(stages.begin(), stages.end(), "split") != stages.end());
    CHECK(std::find(stages.begin(), stages.end(), "score") != stages.end());
}

TEST_CASE("reasoning pairs can be disabled") {
    auto taxonomy = make_taxonomy({"A", "B"});
    BuilderConfig config = config_for(Strategy::open_binary);
    config.reasoning_pairs = 0;
    json doc;
    doc["question"] = "Q?";
    doc["groups"] = json::array({{{"answer", "one"}, {"classes", {"A"}}},
                                 {{"answer", "two"}, {"classes", {"B"}}}});
    TreeBuilder builder(gateway_from({entry(doc.dump())}), nullptr, config);
    auto proposal = builder.propose_split(taxonomy.classes);
    CHECK(proposal.rationale.empty());
}

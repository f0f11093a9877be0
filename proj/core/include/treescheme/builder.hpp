#pragma once

#include <functional>

#include "treescheme/gateway.hpp"
#include "treescheme/mock_provider.hpp"
#include "treescheme/taxonomy.hpp"
#include "treescheme/templates.hpp"
#include "treescheme/tree.hpp"

namespace treescheme {

struct BuilderConfig {
    Strategy strategy = Strategy::split_select;
    std::string model_id;
    double temperature = 0.4;
    int candidates_per_node = 3;
    int max_depth = 12;
    int reasoning_pairs = 3;
    std::filesystem::path prompt_template_set;
    /// Extra corrective attempts inside complete_structured per call.
    int structured_retries = 2;
    /// Whole-proposal retries on InvalidPartition for the non-search strategies.
    int proposal_retries = 2;
    /// Search strategies: how many times a selected candidate may be abandoned
    /// after a downstream dead-end before the whole build gives up.
    int backtrack_budget = 25;
    double score_min = 0.0;
    double score_max = 10.0;
    /// Also vet answer texts against each other, not only against the question.
    bool pairwise_answers = false;
    /// Recorded in builder_metadata; derived deterministically when empty.
    std::string run_id;
    int max_output = 2048;
};

enum class SplitVerdict { contradictory, neutral, non_contradictory };
std::string to_string(SplitVerdict v);
SplitVerdict split_verdict_from_string(const std::string& s);

struct SplitGroup {
    std::string answer_text;
    std::vector<std::string> members;
};

struct ReasoningPair {
    std::string question;
    std::string answer;
};

struct SplitProposal {
    std::string classification_question;
    std::vector<SplitGroup> groups;
    std::vector<ReasoningPair> rationale;
    std::optional<double> score;
    std::optional<SplitVerdict> verdict;
    std::string raw_response;
    std::string raw_score_response;
};

struct JudgeCall {
    std::string premise;
    std::string hypothesis;
    NliVerdict verdict;
};

/// One candidate considered at one node visit. chosen marks the candidates
/// that made it into the final tree.
struct AuditRecord {
    std::vector<std::string> subset;
    int attempt = 0;
    std::optional<SplitProposal> proposal;
    std::optional<double> score;
    std::optional<SplitVerdict> verdict;
    bool chosen = false;
    std::string error;
    std::string error_code;
    std::string error_stage;  // "propose" | "score" when error is set
    std::string raw_response;
    std::string raw_score_response;
    std::vector<JudgeCall> judge_calls;
    std::optional<bool> singleton_most_frequent;
};

nlohmann::ordered_json audit_record_to_json(const AuditRecord& record);
AuditRecord audit_record_from_json(const nlohmann::json& doc);
void write_audit_log(const std::vector<AuditRecord>& records,
                     const std::filesystem::path& path);
std::vector<AuditRecord> read_audit_log(const std::filesystem::path& path);

/// Rebuilds a mock script (and judge table) that replays a recorded build
/// call for call. structured_retries must match the original config.
std::vector<MockScriptEntry> replay_script_from_audit(
    const std::vector<AuditRecord>& records, int structured_retries = 2);
MockNliJudge replay_judge_from_audit(const std::vector<AuditRecord>& records);

class TreeBuilder {
public:
    TreeBuilder(std::shared_ptr<ChatGateway> gateway, std::shared_ptr<NliJudge> judge,
                BuilderConfig config);

    /// One model call; validates the partition against the strategy.
    SplitProposal propose_split(const std::vector<ClassSpec>& subset);
    /// Scorer call; clamps into [score_min, score_max] and records the score.
    double score_split(SplitProposal& proposal, const std::vector<ClassSpec>& subset);
    /// Judges (question, answer) pairs; any contradiction damns the proposal.
    SplitVerdict vet_split(SplitProposal& proposal,
                           std::vector<JudgeCall>* calls = nullptr);
    /// Generates, scores and vets candidates_per_node proposals; returns the
    /// best viable one. Audit records are appended for every candidate.
    SplitProposal select_split(const std::vector<ClassSpec>& subset);

    DecisionTree build_tree(const TaxonomySpec& taxonomy);

    const std::vector<AuditRecord>& audit_log() const { return audit_; }
    const std::vector<std::string>& warnings() const { return warnings_; }
    const BuilderConfig& config() const { return config_; }

private:
    struct Candidate {
        std::size_t audit_index;
        SplitProposal proposal;
        bool viable = false;
    };

    std::vector<Candidate> generate_candidates(const std::vector<ClassSpec>& subset);
    std::vector<std::size_t> viable_order(const std::vector<Candidate>& candidates) const;
    TreeNode expand(const std::vector<ClassSpec>& subset, int depth);
    TreeNode node_from_proposal(const SplitProposal& proposal,
                                const std::vector<ClassSpec>& subset, int depth);
    SplitProposal propose_with_retries(const std::vector<ClassSpec>& subset);

    std::string render_split_prompt(const std::vector<ClassSpec>& subset) const;
    std::string render_score_prompt(const SplitProposal& proposal,
                                    const std::vector<ClassSpec>& subset) const;
    void validate_partition(const SplitProposal& proposal,
                            const std::vector<ClassSpec>& subset) const;

    std::shared_ptr<ChatGateway> gateway_;
    std::shared_ptr<NliJudge> judge_;
    BuilderConfig config_;
    TemplateSet templates_;
    std::vector<AuditRecord> audit_;
    std::vector<std::string> warnings_;
    int backtracks_used_ = 0;
    std::string last_raw_response_;
};

struct ConsistencyDiff {
    bool identical = true;
    /// 1-based level of the shallowest structural difference.
    std::optional<int> first_divergence_level;
    std::map<std::string, std::vector<int>> leaf_depths;  // class -> depth per run
    std::map<std::string, int> leaf_depth_delta;          // class -> max - min
};

ConsistencyDiff diff_trees(const std::vector<DecisionTree>& trees);

struct ConsistencyRun {
    std::optional<DecisionTree> tree;
    std::vector<AuditRecord> audit;
    std::string error;
};

struct ConsistencySuite {
    std::vector<ConsistencyRun> runs;
    ConsistencyDiff diff;  // over the successful runs
};

/// Returns (gateway, judge) for the given run index; each run must get a
/// fresh provider session.
using SessionFactory =
    std::function<std::pair<std::shared_ptr<ChatGateway>, std::shared_ptr<NliJudge>>(int)>;

ConsistencySuite build_consistency_suite(const TaxonomySpec& taxonomy,
                                         const BuilderConfig& config, int runs,
                                         const SessionFactory& factory);

}  // namespace treescheme

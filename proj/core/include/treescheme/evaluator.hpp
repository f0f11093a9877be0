#pragma once

#include "treescheme/annotator.hpp"
#include "treescheme/gateway.hpp"
#include "treescheme/taxonomy.hpp"
#include "treescheme/tree.hpp"

namespace treescheme {

/// Scope of the macro-F1 average.
enum class MacroMode { gold_present, all_taxonomy };

std::string to_string(MacroMode mode);
MacroMode macro_mode_from_string(const std::string& s);

struct ClassMetrics {
    long tp = 0;
    long fp = 0;
    long fn = 0;
    long support = 0;  // gold occurrences
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct EvaluationReport {
    double p_w = 0.0;
    double r_w = 0.0;
    double f1_w = 0.0;
    double f1_macro = 0.0;
    std::map<std::string, ClassMetrics> per_class;
    /// confusion[gold][predicted] = count. Failed records predict
    /// kFailedLabel.
    std::map<std::string, std::map<std::string, long>> confusion;
    long n_evaluated = 0;
    long n_failed = 0;
    MacroMode macro_mode = MacroMode::gold_present;

    nlohmann::ordered_json to_json() const;
    static EvaluationReport from_json(const nlohmann::json& doc);
};

/// Weighted metrics are support-weighted means of per-class metrics over
/// gold-present classes. Failed records count as errors against their gold
/// class. The taxonomy is only needed for MacroMode::all_taxonomy.
EvaluationReport score(const std::vector<AnnotationRecord>& records,
                       MacroMode mode = MacroMode::gold_present,
                       const TaxonomySpec* taxonomy = nullptr);

struct DepthLevel {
    int level = 0;       // 1-based tree level
    long reached = 0;    // records on the gold path at all levels < level
    long correct = 0;    // reached and matching gold at this level
    double accuracy = 0.0;     // percent of reached
    long errors = 0;           // records first diverging at this level
    double error_share = 0.0;  // percent of all errors
};

struct DepthReport {
    std::vector<DepthLevel> levels;
    long total_records = 0;
    long total_errors = 0;

    nlohmann::ordered_json to_json() const;
};

/// Compares each record's path to the gold path, level by level. Aborted
/// traversals diverge at their first unanswered level.
DepthReport depth_analysis(const DecisionTree& tree,
                           const std::vector<AnnotationRecord>& records);

struct ConsistencySummary {
    struct Row {
        double p_w = 0.0;
        double r_w = 0.0;
        double f1_w = 0.0;
        double f1_macro = 0.0;
    };
    std::vector<Row> runs;
    Row max_delta;  // per-metric max pairwise absolute difference

    nlohmann::ordered_json to_json() const;
};

ConsistencySummary consistency_summary(const std::vector<EvaluationReport>& reports);

struct StageCost {
    long calls = 0;
    long prompt_tokens = 0;
    long completion_tokens = 0;
    double cost = 0.0;
};

struct CostReport {
    double total_cost = 0.0;
    double per_dialog_mean = 0.0;
    double wall_time_s = 0.0;
    long calls = 0;
    long prompt_tokens = 0;
    long completion_tokens = 0;
    std::map<std::string, StageCost> per_stage;

    nlohmann::ordered_json to_json() const;
};

CostReport cost_report(const UsageLedger& ledger, long n_dialogs,
                       double wall_time_s = 0.0);

// --- text tables ---

/// Approach x (P_w, R_w, F1_w, F1) aligned table.
std::string render_report_table(
    const std::vector<std::pair<std::string, EvaluationReport>>& rows);
std::string render_depth_table(const DepthReport& report);
std::string render_consistency_table(const ConsistencySummary& summary);
std::string render_cost_table(const CostReport& report);

}  // namespace treescheme

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "treescheme/errors.hpp"
#include "treescheme/taxonomy.hpp"

namespace treescheme {

/// Tree construction strategies.
enum class Strategy {
    yes_no,
    open_binary,
    open_nonbinary,
    split_select,
    freq_split_select,
};

std::string to_string(Strategy s);
/// CLI-facing spelling ("yes-no", "freq-split-select", ...).
std::string cli_name(Strategy s);
/// Accepts both underscore and dash spellings.
Strategy strategy_from_string(const std::string& s);

struct AnswerBranch;

/// Either a question with >= 2 answer-labeled branches or a leaf carrying
/// a taxonomy label. A node is a leaf iff `answers` is empty.
struct TreeNode {
    std::string question;
    std::vector<AnswerBranch> answers;
    std::string label;

    bool is_leaf() const { return answers.empty(); }
    bool operator==(const TreeNode& other) const;
};

struct AnswerBranch {
    std::string text;
    TreeNode node;

    bool operator==(const AnswerBranch& other) const;
};

struct BuilderMetadata {
    std::string model_id;
    double temperature = 0.0;
    int candidates_per_node = 0;
    /// Deterministic run identifier (seed-style, not wall clock) so that
    /// identical builds serialize to identical bytes.
    std::string run_id;

    bool operator==(const BuilderMetadata&) const = default;
};

struct DecisionTree {
    TreeNode root;
    std::string taxonomy_id;
    Strategy approach = Strategy::open_nonbinary;
    BuilderMetadata builder_metadata;

    bool operator==(const DecisionTree& other) const;
};

// --- validation ---

enum class ViolationKind {
    missing_class,
    duplicated_class,
    unknown_label,
    single_answer_node,
    duplicate_answer_text,
    empty_node,
    other_group,  // warning
};

struct Violation {
    ViolationKind kind;
    std::string detail;
};

struct ValidationReport {
    std::vector<Violation> errors;
    std::vector<Violation> warnings;

    bool ok() const { return errors.empty(); }
    bool has_error(ViolationKind kind) const;
    bool has_warning(ViolationKind kind) const;
};

/// Never throws; reports every violation it can find.
ValidationReport validate_tree(const DecisionTree& tree, const TaxonomySpec& taxonomy);

// --- queries ---

struct PathStep {
    std::string question;
    std::string answer;

    bool operator==(const PathStep&) const = default;
};

/// The unique root-to-leaf path ending at `label`.
std::vector<PathStep> gold_path(const DecisionTree& tree, const std::string& label);

struct DepthStats {
    int max_depth = 0;
    double mean_leaf_depth = 0.0;
    std::map<std::string, int> per_class_depth;
};

/// Depths count question nodes along the path; a leaf at the root has
/// depth 0.
DepthStats depth_stats(const DecisionTree& tree);

// --- serialization ---

/// Deterministic JSON: fixed key order, 2-space indent, trailing newline.
/// node := {"question": str, "answers": [{"text": str, "node": node}, ...]}
///       | {"label": str}
/// document := {"taxonomy_id", "approach", "builder_metadata", "root"}
std::string serialize_tree(const DecisionTree& tree);
DecisionTree deserialize_tree(const std::string& bytes);

DecisionTree load_tree(const std::filesystem::path& path);
void save_tree(const DecisionTree& tree, const std::filesystem::path& path);

/// Plain DOT export for quick inspection.
std::string to_dot(const DecisionTree& tree);

/// Case-folds, collapses whitespace runs, trims, and strips terminal
/// punctuation. Used for answer-text distinctness and reply matching.
std::string normalize_answer_text(std::string_view text);

}  // namespace treescheme

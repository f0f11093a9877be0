#pragma once

#include <stdexcept>
#include <string>

namespace treescheme {

/// Base class for all library errors. Each error carries a stable
/// machine-readable code next to the human-readable message; the CLI
/// emits the code in its stderr error JSON.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

// --- taxonomy / corpus ingestion ---

struct DuplicateClassName : Error {
    explicit DuplicateClassName(const std::string& name)
        : Error("duplicate_class_name", "duplicate class name: " + name) {}
};

struct MissingRequiredColumn : Error {
    explicit MissingRequiredColumn(const std::string& column)
        : Error("missing_required_column", "missing required column: " + column) {}
};

struct MalformedRow : Error {
    MalformedRow(std::size_t line, const std::string& detail)
        : Error("malformed_row",
                "malformed row at line " + std::to_string(line) + ": " + detail),
          line(line) {}
    std::size_t line;
};

struct MissingSegmentDefinition : Error {
    explicit MissingSegmentDefinition(const std::string& segment)
        : Error("missing_segment_definition",
                "no definition supplied for merged class: " + segment),
          segment(segment) {}
    std::string segment;
};

struct MissingFrequencies : Error {
    explicit MissingFrequencies(const std::string& detail)
        : Error("missing_frequencies", "class frequencies required: " + detail) {}
};

struct KTooLarge : Error {
    KTooLarge(int k, std::size_t n)
        : Error("k_too_large", "k=" + std::to_string(k) + " exceeds class count " +
                               std::to_string(n)) {}
};

struct UnknownGoldLabel : Error {
    UnknownGoldLabel(const std::string& label, const std::string& position)
        : Error("unknown_gold_label",
                "unknown gold label \"" + label + "\" at " + position),
          label(label) {}
    std::string label;
};

struct MalformedRecord : Error {
    explicit MalformedRecord(const std::string& detail)
        : Error("malformed_record", "malformed record: " + detail) {}
};

// --- tree model ---

struct SchemaViolation : Error {
    SchemaViolation(const std::string& path, const std::string& detail)
        : Error("schema_violation", "schema violation at " + path + ": " + detail),
          path(path) {}
    std::string path;
};

struct LabelNotInTree : Error {
    explicit LabelNotInTree(const std::string& label)
        : Error("label_not_in_tree", "label not present in tree: " + label),
          label(label) {}
    std::string label;
};

// --- gateway ---

struct TransportError : Error {
    TransportError(const std::string& detail, bool retryable)
        : Error("transport_error", detail), retryable(retryable) {}
    bool retryable;
};

struct AuthError : Error {
    explicit AuthError(const std::string& detail) : Error("auth_error", detail) {}
};

struct BudgetExceeded : Error {
    BudgetExceeded(double spent, double cap)
        : Error("budget_exceeded",
                "spend cap reached: spent $" + std::to_string(spent) +
                    " against cap $" + std::to_string(cap)) {}
};

struct StructuredOutputFailure : Error {
    StructuredOutputFailure(const std::string& detail, std::string last_raw)
        : Error("structured_output_failure", detail), last_raw(std::move(last_raw)) {}
    std::string last_raw;
};

struct UnparseableVerdict : Error {
    explicit UnparseableVerdict(const std::string& detail)
        : Error("unparseable_verdict", detail) {}
};

// --- tree builder ---

struct InvalidPartition : Error {
    explicit InvalidPartition(const std::string& detail)
        : Error("invalid_partition", "invalid partition: " + detail) {}
};

struct DegenerateSplit : Error {
    explicit DegenerateSplit(const std::string& detail)
        : Error("degenerate_split", "degenerate split: " + detail) {}
};

struct NoViableSplit : Error {
    explicit NoViableSplit(const std::string& subset_desc)
        : Error("no_viable_split", "no viable split for subset " + subset_desc) {}
};

struct MaxDepthExceeded : Error {
    explicit MaxDepthExceeded(int depth)
        : Error("max_depth_exceeded",
                "tree expansion reached safety depth cap " + std::to_string(depth)) {}
};

struct TemplateError : Error {
    explicit TemplateError(const std::string& detail)
        : Error("template_error", detail) {}
};

// --- annotator ---

struct NoMatch : Error {
    explicit NoMatch(const std::string& reply)
        : Error("no_match", "reply matches no answer option: \"" + reply + "\"") {}
};

struct AmbiguousMatch : Error {
    explicit AmbiguousMatch(const std::string& reply)
        : Error("ambiguous_match",
                "reply matches several answer options equally: \"" + reply + "\"") {}
};

struct UnmatchableAnswer : Error {
    explicit UnmatchableAnswer(const std::string& detail)
        : Error("unmatchable_answer", detail) {}
};

// --- evaluator / general ---

struct EmptyInput : Error {
    explicit EmptyInput(const std::string& detail) : Error("empty_input", detail) {}
};

struct IoError : Error {
    explicit IoError(const std::string& detail) : Error("io_error", detail) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& detail) : Error("config_error", detail) {}
};

}  // namespace treescheme

#pragma once

#include "treescheme/gateway.hpp"
#include "treescheme/taxonomy.hpp"
#include "treescheme/templates.hpp"
#include "treescheme/tree.hpp"

namespace treescheme {

/// Reserved predicted label for records whose traversal failed; outside any
/// taxonomy, so precision denominators stay well-defined.
inline constexpr const char* kFailedLabel = "\xE2\x8A\xA5";  // ⊥

enum class MatchMode { exact, normalized, overlap_fallback };

std::string to_string(MatchMode mode);
MatchMode match_mode_from_string(const std::string& s);

/// Maps a free-text reply to exactly one option index.
///   exact: byte equality.
///   normalized: equality after normalize_answer_text, plus acceptance of a
///     leading option ordinal ("2", "(2)", "2.").
///   overlap_fallback: normalized first, then the option with maximal
///     token-level Jaccard overlap, requiring >= 0.5 and a unique argmax.
std::size_t match_answer(const std::string& reply,
                         const std::vector<std::string>& options, MatchMode mode);

struct AnnotatorConfig {
    std::string model_id;
    double temperature = 0.9;
    int context_length = 1;
    MatchMode answer_match = MatchMode::overlap_fallback;
    int max_question_retries = 2;
    bool skip_continuations = true;
    std::filesystem::path prompt_template_set;
    int max_output = 128;
};

struct PathTrace {
    std::string question;
    std::string answer;     // chosen branch text; empty when the node failed
    std::string raw_reply;  // last model reply at this node
    Usage usage;            // summed over retries at this node
};

struct AnnotationRecord {
    std::string dialog_id;
    int turn_index = 0;
    std::string predicted;  // leaf label, or kFailedLabel when failed
    std::optional<std::string> gold;
    std::vector<PathTrace> path;
    bool failed = false;
};

struct DialogError {
    std::string dialog_id;
    std::string message;
};

struct CorpusResult {
    std::vector<AnnotationRecord> records;  // dialog order, then turn order
    std::vector<DialogError> errors;
};

class Annotator {
public:
    Annotator(std::shared_ptr<ChatGateway> gateway, AnnotatorConfig config);

    /// One question: renders the prompt, asks, maps the reply to a branch.
    /// Retries with a "number only" instruction on an unmatched reply.
    /// Throws UnmatchableAnswer once retries are exhausted.
    std::size_t answer_node(const std::string& utterance,
                            const std::vector<std::string>& context,
                            const TreeNode& node, PathTrace* trace = nullptr);

    /// Sequential traversal per utterance; per-utterance failures are
    /// recorded as failed records, never aborting the dialog.
    std::vector<AnnotationRecord> annotate_dialog(const DecisionTree& tree,
                                                  const Dialog& dialog);

    /// Dialogs run concurrently up to `parallelism`; output order is
    /// deterministic regardless of completion order. Auth and budget
    /// errors abort; other per-dialog errors are aggregated.
    CorpusResult annotate_corpus(const DecisionTree& tree,
                                 const std::vector<Dialog>& dialogs, int parallelism = 1);

    const AnnotatorConfig& config() const { return config_; }

private:
    std::string render_prompt(const std::string& utterance,
                              const std::vector<std::string>& context,
                              const TreeNode& node) const;

    std::shared_ptr<ChatGateway> gateway_;
    AnnotatorConfig config_;
    TemplateSet templates_;
};

/// JSONL with a leading header line; one record per line:
/// {"dialog_id", "turn_index", "predicted", "gold", "path": [{"q","a"}],
///  "failed"}.
void write_annotations(const std::vector<AnnotationRecord>& records,
                       const std::filesystem::path& path);
std::vector<AnnotationRecord> read_annotations(const std::filesystem::path& path);

}  // namespace treescheme

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "treescheme/errors.hpp"

namespace treescheme {

enum class FrequencyUnit { fraction, count };

/// One labeled class of an annotation taxonomy. Names are dot-separated
/// hierarchy paths, e.g. "React.Respond.Support.Register".
struct ClassSpec {
    std::string name;
    std::string definition;
    std::vector<std::string> examples;
    std::optional<double> frequency;  // fraction in [0,1] after loading

    bool operator==(const ClassSpec&) const = default;
};

struct TaxonomySpec {
    std::string id;
    std::vector<ClassSpec> classes;
    FrequencyUnit frequency_unit = FrequencyUnit::fraction;
    char hierarchy_separator = '.';
    /// How a derived taxonomy was produced (subset kind, tie-break rule, counts).
    std::map<std::string, std::string> metadata;

    bool operator==(const TaxonomySpec&) const = default;

    const ClassSpec* find(const std::string& name) const;
    bool contains(const std::string& name) const { return find(name) != nullptr; }
    std::vector<std::string> class_names() const;
    bool all_frequencies_present() const;

    /// Splits a class name into its hierarchy segments.
    std::vector<std::string> segments(const std::string& name) const;

    /// Enforces the structural invariants; throws on violation.
    void validate() const;
};

enum class TaxonomyFormat { csv, json };

/// Columns for CSV: name,definition,examples[,frequency]; examples are
/// "||"-joined. JSON mirrors the TaxonomySpec fields. Count-unit
/// frequencies are normalized to fractions on load.
TaxonomySpec load_taxonomy(const std::filesystem::path& path, TaxonomyFormat format);
void save_taxonomy(const TaxonomySpec& t, const std::filesystem::path& path,
                   TaxonomyFormat format);

TaxonomyFormat taxonomy_format_from_extension(const std::filesystem::path& path);

/// Definitions for merged classes, keyed by merged label. Loaded from a
/// CSV with columns name,definition or a JSON object {label: definition}.
using DefinitionTable = std::map<std::string, std::string>;
DefinitionTable load_definitions(const std::filesystem::path& path);

/// Merges classes by their first hierarchy segment. Definitions for the
/// merged classes come from the companion table; merging without one is
/// refused (MissingSegmentDefinition). Frequencies are summed.
TaxonomySpec subset_top_level(const TaxonomySpec& t, const DefinitionTable& defs);

/// Same merge keyed by the first `levels` segments (classes with fewer
/// segments keep their full name). The output records the resulting
/// class count in metadata rather than assuming a fixed one.
TaxonomySpec subset_prefix_levels(const TaxonomySpec& t, int levels,
                                  const DefinitionTable& defs);

/// The k most frequent classes; ties broken by lexicographic name order.
TaxonomySpec subset_top_k_frequent(const TaxonomySpec& t, int k);

// --- dialog corpora ---

struct DialogTurn {
    std::string speaker;
    std::string text;
    std::optional<std::string> gold_label;
    /// True for turns gold-tagged "+": the utterance continues the
    /// previous label and is excluded from evaluation scope.
    bool continuation = false;

    bool operator==(const DialogTurn&) const = default;
};

struct Dialog {
    std::string dialog_id;
    std::vector<DialogTurn> turns;

    bool operator==(const Dialog&) const = default;
};

enum class DialogFormat { jsonl, swda_csv };

/// JSONL: one object per dialog {"dialog_id", "turns": [{"speaker",
/// "text", "gold_label"}]}. swda-csv maps the corpus act tag column to
/// gold_label and flags "+" rows as continuations. When a taxonomy is
/// supplied, gold labels are validated against it ("+" always allowed).
std::vector<Dialog> load_dialogs(const std::filesystem::path& path, DialogFormat format,
                                 const TaxonomySpec* taxonomy = nullptr);
void save_dialogs(const std::vector<Dialog>& dialogs, const std::filesystem::path& path);

/// Reserved SWBD-style continuation tag.
inline constexpr const char* kContinuationLabel = "+";

}  // namespace treescheme

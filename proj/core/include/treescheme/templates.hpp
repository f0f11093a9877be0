#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "treescheme/tree.hpp"

namespace treescheme {

/// Replaces {SLOT} placeholders (uppercase identifiers only, so JSON braces
/// in template text pass through untouched).
std::string render_template(const std::string& text,
                            const std::map<std::string, std::string>& slots);

/// Placeholders left after substitution.
std::vector<std::string> find_unresolved_slots(const std::string& text);

/// Prompt templates loaded from a directory:
///   split_base.txt   {CLASS_TABLE} {GROUPING_RULES} {OUTPUT_SCHEMA}
///                    {FREQUENCIES} {REASONING_PAIRS} {MAX_GROUPS}
///   rules_<strategy>.txt  grouping rules; the freq variant also takes
///                         {MOST_FREQUENT_CLASS}
///   output_schema.txt
///   score.txt        {QUESTION} {GROUPS} {CLASS_TABLE}
///   annotate.txt     {CONTEXT} {UTTERANCE} {QUESTION} {OPTIONS}
struct TemplateSet {
    std::string split_base;
    std::map<Strategy, std::string> rules;
    std::string output_schema;
    std::string score;
    std::string annotate;

    /// Throws TemplateError on a missing file or absent mandatory slot.
    static TemplateSet load(const std::filesystem::path& dir);
};

}  // namespace treescheme

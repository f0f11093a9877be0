#include "treescheme/taxonomy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "csv.hpp"

namespace treescheme {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::vector<std::string> split_on(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    parts.push_back(cur);
    return parts;
}

std::string join(const std::vector<std::string>& parts, char sep, std::size_t n) {
    std::string out;
    for (std::size_t i = 0; i < n && i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

std::vector<std::string> split_examples(const std::string& cell) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= cell.size()) {
        std::size_t next = cell.find("||", pos);
        std::string piece =
            next == std::string::npos ? cell.substr(pos) : cell.substr(pos, next - pos);
        if (!piece.empty()) out.push_back(piece);
        if (next == std::string::npos) break;
        pos = next + 2;
    }
    return out;
}

std::string join_examples(const std::vector<std::string>& examples) {
    std::string out;
    for (std::size_t i = 0; i < examples.size(); ++i) {
        if (i) out += "||";
        out += examples[i];
    }
    return out;
}

void normalize_frequencies(TaxonomySpec& t) {
    if (t.frequency_unit != FrequencyUnit::count) return;
    double sum = 0.0;
    for (const auto& c : t.classes) {
        if (!c.frequency)
            throw MissingFrequencies(
                "count-unit taxonomy \"" + t.id + "\" has classes without counts");
        sum += *c.frequency;
    }
    if (sum <= 0.0) throw MissingFrequencies("counts sum to zero in \"" + t.id + "\"");
    for (auto& c : t.classes) c.frequency = *c.frequency / sum;
    t.frequency_unit = FrequencyUnit::fraction;
}

FrequencyUnit infer_csv_unit(const std::vector<ClassSpec>& classes) {
    // CSV has no unit column: values above 1 mean counts, otherwise fractions.
    for (const auto& c : classes)
        if (c.frequency && *c.frequency > 1.0 + 1e-9) return FrequencyUnit::count;
    return FrequencyUnit::fraction;
}

}  // namespace

const ClassSpec* TaxonomySpec::find(const std::string& name) const {
    for (const auto& c : classes)
        if (c.name == name) return &c;
    return nullptr;
}

std::vector<std::string> TaxonomySpec::class_names() const {
    std::vector<std::string> names;
    names.reserve(classes.size());
    for (const auto& c : classes) names.push_back(c.name);
    return names;
}

bool TaxonomySpec::all_frequencies_present() const {
    return std::all_of(classes.begin(), classes.end(),
                       [](const ClassSpec& c) { return c.frequency.has_value(); });
}

std::vector<std::string> TaxonomySpec::segments(const std::string& name) const {
    return split_on(name, hierarchy_separator);
}

void TaxonomySpec::validate() const {
    if (classes.empty()) throw MalformedRecord("taxonomy \"" + id + "\" has no classes");
    std::set<std::string> seen;
    for (const auto& c : classes) {
        if (c.name.empty()) throw MalformedRecord("class with empty name");
        if (!seen.insert(c.name).second) throw DuplicateClassName(c.name);
        if (c.frequency && *c.frequency < 0.0)
            throw MalformedRecord("negative frequency for class " + c.name);
        if (c.definition.empty() && c.examples.empty())
            throw MalformedRecord("class " + c.name +
                                  " has neither definition nor examples");
    }
    if (frequency_unit == FrequencyUnit::fraction && all_frequencies_present()) {
        double sum = 0.0;
        for (const auto& c : classes) sum += *c.frequency;
        if (sum < 0.99 || sum > 1.01)
            throw MalformedRecord("fraction frequencies sum to " + std::to_string(sum) +
                                  ", expected ~1.0");
    }
}

TaxonomyFormat taxonomy_format_from_extension(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (ext == ".csv") return TaxonomyFormat::csv;
    if (ext == ".json") return TaxonomyFormat::json;
    throw ConfigError("cannot infer taxonomy format from extension: " + path.string());
}

static TaxonomySpec load_taxonomy_csv(const std::filesystem::path& path) {
    csv::Table table = csv::read_file(path.string());

    int name_col = table.column("name");
    int def_col = table.column("definition");
    int ex_col = table.column("examples");
    if (ex_col < 0) ex_col = table.column("example");
    int freq_col = table.column("frequency");

    if (name_col < 0) throw MissingRequiredColumn("name");
    if (def_col < 0) throw MissingRequiredColumn("definition");
    if (ex_col < 0) throw MissingRequiredColumn("examples");

    TaxonomySpec t;
    t.id = path.stem().string();
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        ClassSpec c;
        c.name = row[name_col];
        c.definition = row[def_col];
        c.examples = split_examples(row[ex_col]);
        if (freq_col >= 0 && !row[freq_col].empty()) {
            try {
                std::size_t used = 0;
                c.frequency = std::stod(row[freq_col], &used);
                if (used != row[freq_col].size()) throw std::invalid_argument("trailing");
            } catch (const std::exception&) {
                throw MalformedRow(table.row_lines[r],
                                   "unparseable frequency \"" + row[freq_col] + "\"");
            }
        }
        if (c.name.empty())
            throw MalformedRow(table.row_lines[r], "empty class name");
        t.classes.push_back(std::move(c));
    }
    t.frequency_unit = infer_csv_unit(t.classes);
    normalize_frequencies(t);
    t.validate();
    return t;
}

static TaxonomySpec load_taxonomy_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open file: " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw MalformedRecord(std::string("taxonomy JSON: ") + e.what());
    }
    TaxonomySpec t;
    try {
        t.id = doc.value("id", path.stem().string());
        std::string unit = doc.value("frequency_unit", "fraction");
        if (unit == "count") t.frequency_unit = FrequencyUnit::count;
        else if (unit == "fraction") t.frequency_unit = FrequencyUnit::fraction;
        else throw MalformedRecord("unknown frequency_unit \"" + unit + "\"");
        std::string sep = doc.value("hierarchy_separator", ".");
        if (sep.size() != 1) throw MalformedRecord("hierarchy_separator must be one char");
        t.hierarchy_separator = sep[0];
        const json metadata = doc.value("metadata", json::object());
        for (const auto& [k, v] : metadata.items())
            t.metadata[k] = v.get<std::string>();
        for (const auto& jc : doc.at("classes")) {
            ClassSpec c;
            c.name = jc.at("name").get<std::string>();
            c.definition = jc.value("definition", "");
            for (const auto& e : jc.value("examples", json::array()))
                c.examples.push_back(e.get<std::string>());
            if (jc.contains("frequency") && !jc["frequency"].is_null())
                c.frequency = jc["frequency"].get<double>();
            t.classes.push_back(std::move(c));
        }
    } catch (const json::exception& e) {
        throw MalformedRecord(std::string("taxonomy JSON: ") + e.what());
    }
    normalize_frequencies(t);
    t.validate();
    return t;
}

TaxonomySpec load_taxonomy(const std::filesystem::path& path, TaxonomyFormat format) {
    if (!std::filesystem::exists(path))
        throw IoError("taxonomy file does not exist: " + path.string());
    return format == TaxonomyFormat::csv ? load_taxonomy_csv(path)
                                         : load_taxonomy_json(path);
}

void save_taxonomy(const TaxonomySpec& t, const std::filesystem::path& path,
                   TaxonomyFormat format) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write file: " + path.string());
    if (format == TaxonomyFormat::csv) {
        bool any_freq = std::any_of(t.classes.begin(), t.classes.end(),
                                    [](const ClassSpec& c) { return c.frequency.has_value(); });
        std::vector<std::string> header{"name", "definition", "examples"};
        if (any_freq) header.push_back("frequency");
        out << csv::join_row(header) << "\n";
        for (const auto& c : t.classes) {
            std::vector<std::string> row{c.name, c.definition, join_examples(c.examples)};
            if (any_freq) {
                std::ostringstream f;
                if (c.frequency) f << *c.frequency;
                row.push_back(f.str());
            }
            out << csv::join_row(row) << "\n";
        }
    } else {
        ordered_json doc;
        doc["id"] = t.id;
        doc["frequency_unit"] =
            t.frequency_unit == FrequencyUnit::count ? "count" : "fraction";
        doc["hierarchy_separator"] = std::string(1, t.hierarchy_separator);
        doc["metadata"] = ordered_json::object();
        for (const auto& [k, v] : t.metadata) doc["metadata"][k] = v;
        doc["classes"] = ordered_json::array();
        for (const auto& c : t.classes) {
            ordered_json jc;
            jc["name"] = c.name;
            jc["definition"] = c.definition;
            jc["examples"] = c.examples;
            if (c.frequency) jc["frequency"] = *c.frequency;
            doc["classes"].push_back(std::move(jc));
        }
        out << doc.dump(2) << "\n";
    }
}

DefinitionTable load_definitions(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path))
        throw IoError("definitions file does not exist: " + path.string());
    DefinitionTable defs;
    auto ext = path.extension().string();
    if (ext == ".json") {
        std::ifstream in(path);
        json doc;
        try {
            doc = json::parse(in);
        } catch (const json::parse_error& e) {
            throw MalformedRecord(std::string("definitions JSON: ") + e.what());
        }
        if (!doc.is_object()) throw MalformedRecord("definitions JSON must be an object");
        for (const auto& [k, v] : doc.items()) defs[k] = v.get<std::string>();
    } else {
        csv::Table table = csv::read_file(path.string());
        int name_col = table.column("name");
        int def_col = table.column("definition");
        if (name_col < 0) throw MissingRequiredColumn("name");
        if (def_col < 0) throw MissingRequiredColumn("definition");
        for (const auto& row : table.rows) defs[row[name_col]] = row[def_col];
    }
    return defs;
}

static TaxonomySpec subset_by_prefix(const TaxonomySpec& t, int levels,
                                     const DefinitionTable& defs,
                                     const std::string& subset_tag) {
    t.validate();
    // Preserve first-appearance order of merged keys, then sort by name for
    // a deterministic output.
    std::vector<std::string> keys;
    std::map<std::string, std::vector<const ClassSpec*>> groups;
    for (const auto& c : t.classes) {
        auto segs = t.segments(c.name);
        std::string key = join(segs, t.hierarchy_separator,
                               std::min<std::size_t>(levels, segs.size()));
        if (!groups.count(key)) keys.push_back(key);
        groups[key].push_back(&c);
    }
    std::sort(keys.begin(), keys.end());

    TaxonomySpec out;
    out.id = t.id + "-top" + (levels == 1 ? "" : std::to_string(levels));
    out.frequency_unit = FrequencyUnit::fraction;
    out.hierarchy_separator = t.hierarchy_separator;
    for (const auto& key : keys) {
        auto it = defs.find(key);
        if (it == defs.end()) throw MissingSegmentDefinition(key);
        ClassSpec merged;
        merged.name = key;
        merged.definition = it->second;
        bool all_freq = true;
        double freq_sum = 0.0;
        for (const ClassSpec* member : groups[key]) {
            for (const auto& e : member->examples) merged.examples.push_back(e);
            if (member->frequency) freq_sum += *member->frequency;
            else all_freq = false;
        }
        if (all_freq) merged.frequency = freq_sum;
        out.classes.push_back(std::move(merged));
    }
    out.metadata["subset"] = subset_tag;
    out.metadata["source_id"] = t.id;
    out.metadata["class_count"] = std::to_string(out.classes.size());
    out.validate();
    return out;
}

TaxonomySpec subset_top_level(const TaxonomySpec& t, const DefinitionTable& defs) {
    return subset_by_prefix(t, 1, defs, "top_level");
}

TaxonomySpec subset_prefix_levels(const TaxonomySpec& t, int levels,
                                  const DefinitionTable& defs) {
    if (levels < 1) throw ConfigError("prefix levels must be >= 1");
    return subset_by_prefix(t, levels, defs, "top_levels_" + std::to_string(levels));
}

TaxonomySpec subset_top_k_frequent(const TaxonomySpec& t, int k) {
    t.validate();
    if (!t.all_frequencies_present())
        throw MissingFrequencies("top-k subsetting needs a frequency for every class");
    if (k < 1 || static_cast<std::size_t>(k) > t.classes.size())
        throw KTooLarge(k, t.classes.size());
    if (static_cast<std::size_t>(k) == t.classes.size()) return t;

    std::vector<ClassSpec> sorted = t.classes;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const ClassSpec& a, const ClassSpec& b) {
                         if (*a.frequency != *b.frequency)
                             return *a.frequency > *b.frequency;
                         return a.name < b.name;
                     });
    TaxonomySpec out;
    out.id = t.id + "-top" + std::to_string(k) + "freq";
    out.frequency_unit = FrequencyUnit::fraction;
    out.hierarchy_separator = t.hierarchy_separator;
    out.classes.assign(sorted.begin(), sorted.begin() + k);
    // Re-express the kept fractions against the subset so they sum to ~1
    // again; relative proportions are unchanged.
    double kept = 0.0;
    for (const auto& c : out.classes) kept += *c.frequency;
    if (kept > 0.0)
        for (auto& c : out.classes) c.frequency = *c.frequency / kept;
    out.metadata["subset"] = "top_k";
    out.metadata["k"] = std::to_string(k);
    out.metadata["tie_break"] = "lexicographic";
    out.metadata["source_id"] = t.id;
    out.metadata["frequencies_renormalized"] = "true";
    out.validate();
    return out;
}

// --- dialogs ---

static void check_gold(const std::optional<std::string>& gold, const TaxonomySpec* taxonomy,
                       const std::string& position) {
    if (!gold || !taxonomy) return;
    if (*gold == kContinuationLabel) return;
    if (!taxonomy->contains(*gold)) throw UnknownGoldLabel(*gold, position);
}

static std::vector<Dialog> load_dialogs_jsonl(const std::filesystem::path& path,
                                              const TaxonomySpec* taxonomy) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open file: " + path.string());
    std::vector<Dialog> dialogs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json doc;
        try {
            doc = json::parse(line);
        } catch (const json::parse_error& e) {
            throw MalformedRecord("line " + std::to_string(line_no) + ": " + e.what());
        }
        Dialog d;
        try {
            d.dialog_id = doc.at("dialog_id").get<std::string>();
            for (const auto& jt : doc.at("turns")) {
                DialogTurn turn;
                turn.speaker = jt.at("speaker").get<std::string>();
                turn.text = jt.at("text").get<std::string>();
                if (jt.contains("gold_label") && !jt["gold_label"].is_null())
                    turn.gold_label = jt["gold_label"].get<std::string>();
                turn.continuation = turn.gold_label == kContinuationLabel;
                d.turns.push_back(std::move(turn));
            }
        } catch (const json::exception& e) {
            throw MalformedRecord("line " + std::to_string(line_no) + ": " + e.what());
        }
        if (d.turns.empty())
            throw MalformedRecord("dialog \"" + d.dialog_id + "\" has no turns");
        for (std::size_t i = 0; i < d.turns.size(); ++i)
            check_gold(d.turns[i].gold_label, taxonomy,
                       "dialog " + d.dialog_id + " turn " + std::to_string(i));
        dialogs.push_back(std::move(d));
    }
    return dialogs;
}

static std::vector<Dialog> load_dialogs_swda(const std::filesystem::path& path,
                                             const TaxonomySpec* taxonomy) {
    csv::Table table = csv::read_file(path.string());
    int conv_col = table.column("conversation_no");
    if (conv_col < 0) conv_col = table.column("dialog_id");
    int tag_col = table.column("act_tag");
    int caller_col = table.column("caller");
    int text_col = table.column("text");
    if (conv_col < 0) throw MissingRequiredColumn("conversation_no");
    if (tag_col < 0) throw MissingRequiredColumn("act_tag");
    if (caller_col < 0) throw MissingRequiredColumn("caller");
    if (text_col < 0) throw MissingRequiredColumn("text");

    std::vector<Dialog> dialogs;
    std::map<std::string, std::size_t> index;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::string& conv = row[conv_col];
        if (conv.empty()) throw MalformedRow(table.row_lines[r], "empty conversation id");
        if (!index.count(conv)) {
            index[conv] = dialogs.size();
            dialogs.push_back(Dialog{conv, {}});
        }
        DialogTurn turn;
        turn.speaker = row[caller_col];
        turn.text = row[text_col];
        if (!row[tag_col].empty()) turn.gold_label = row[tag_col];
        turn.continuation = turn.gold_label == kContinuationLabel;
        check_gold(turn.gold_label, taxonomy,
                   "conversation " + conv + " line " + std::to_string(table.row_lines[r]));
        dialogs[index[conv]].turns.push_back(std::move(turn));
    }
    for (const auto& d : dialogs)
        if (d.turns.empty()) throw MalformedRecord("dialog \"" + d.dialog_id + "\" has no turns");
    return dialogs;
}

std::vector<Dialog> load_dialogs(const std::filesystem::path& path, DialogFormat format,
                                 const TaxonomySpec* taxonomy) {
    if (!std::filesystem::exists(path))
        throw IoError("dialog file does not exist: " + path.string());
    return format == DialogFormat::jsonl ? load_dialogs_jsonl(path, taxonomy)
                                         : load_dialogs_swda(path, taxonomy);
}

void save_dialogs(const std::vector<Dialog>& dialogs, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write file: " + path.string());
    for (const auto& d : dialogs) {
        ordered_json doc;
        doc["dialog_id"] = d.dialog_id;
        doc["turns"] = ordered_json::array();
        for (const auto& t : d.turns) {
            ordered_json jt;
            jt["speaker"] = t.speaker;
            jt["text"] = t.text;
            jt["gold_label"] = t.gold_label ? ordered_json(*t.gold_label) : ordered_json();
            doc["turns"].push_back(std::move(jt));
        }
        out << doc.dump() << "\n";
    }
}

}  // namespace treescheme

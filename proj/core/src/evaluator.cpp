#include "treescheme/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

namespace treescheme {

using nlohmann::json;
using nlohmann::ordered_json;

std::string to_string(MacroMode mode) {
    return mode == MacroMode::gold_present ? "gold_present" : "all_taxonomy";
}

MacroMode macro_mode_from_string(const std::string& s) {
    if (s == "gold_present" || s == "gold-present") return MacroMode::gold_present;
    if (s == "all_taxonomy" || s == "all-taxonomy") return MacroMode::all_taxonomy;
    throw ConfigError("unknown macro mode: " + s);
}

EvaluationReport score(const std::vector<AnnotationRecord>& records, MacroMode mode,
                       const TaxonomySpec* taxonomy) {
    if (records.empty()) throw EmptyInput("no records to score");
    if (mode == MacroMode::all_taxonomy && !taxonomy)
        throw ConfigError("MacroMode::all_taxonomy needs a taxonomy");

    EvaluationReport report;
    report.macro_mode = mode;
    for (const auto& record : records) {
        if (!record.gold)
            throw MalformedRecord("record " + record.dialog_id + ":" +
                                  std::to_string(record.turn_index) +
                                  " lacks a gold label");
        std::string predicted =
            (record.failed || record.predicted.empty()) ? kFailedLabel : record.predicted;
        ++report.confusion[*record.gold][predicted];
        ++report.n_evaluated;
        if (record.failed) ++report.n_failed;
    }

    std::set<std::string> labels;
    for (const auto& [gold, row] : report.confusion) {
        labels.insert(gold);
        for (const auto& [pred, count] : row) labels.insert(pred);
    }
    if (mode == MacroMode::all_taxonomy)
        for (const auto& name : taxonomy->class_names()) labels.insert(name);

    for (const auto& label : labels) {
        ClassMetrics m;
        auto gold_row = report.confusion.find(label);
        if (gold_row != report.confusion.end()) {
            for (const auto& [pred, count] : gold_row->second) {
                if (pred == label) m.tp += count;
                else m.fn += count;
            }
        }
        for (const auto& [gold, row] : report.confusion) {
            if (gold == label) continue;
            auto it = row.find(label);
            if (it != row.end()) m.fp += it->second;
        }
        m.support = m.tp + m.fn;
        m.precision = (m.tp + m.fp) ? static_cast<double>(m.tp) / (m.tp + m.fp) : 0.0;
        m.recall = (m.tp + m.fn) ? static_cast<double>(m.tp) / (m.tp + m.fn) : 0.0;
        m.f1 = (m.precision + m.recall)
                   ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
                   : 0.0;
        report.per_class[label] = m;
    }

    for (const auto& [label, m] : report.per_class) {
        if (m.support == 0) continue;
        double weight = static_cast<double>(m.support) / report.n_evaluated;
        report.p_w += weight * m.precision;
        report.r_w += weight * m.recall;
        report.f1_w += weight * m.f1;
    }

    double f1_sum = 0.0;
    long f1_count = 0;
    if (mode == MacroMode::gold_present) {
        for (const auto& [label, m] : report.per_class) {
            if (m.support == 0) continue;
            f1_sum += m.f1;
            ++f1_count;
        }
    } else {
        for (const auto& name : taxonomy->class_names()) {
            auto it = report.per_class.find(name);
            f1_sum += it != report.per_class.end() ? it->second.f1 : 0.0;
            ++f1_count;
        }
    }
    report.f1_macro = f1_count ? f1_sum / f1_count : 0.0;
    return report;
}

ordered_json EvaluationReport::to_json() const {
    ordered_json doc;
    doc["p_w"] = p_w;
    doc["r_w"] = r_w;
    doc["f1_w"] = f1_w;
    doc["f1_macro"] = f1_macro;
    doc["macro_mode"] = treescheme::to_string(macro_mode);
    doc["n_evaluated"] = n_evaluated;
    doc["n_failed"] = n_failed;
    doc["per_class"] = ordered_json::object();
    for (const auto& [label, m] : per_class)
        doc["per_class"][label] = {{"tp", m.tp},           {"fp", m.fp},
                                   {"fn", m.fn},           {"support", m.support},
                                   {"precision", m.precision}, {"recall", m.recall},
                                   {"f1", m.f1}};
    doc["confusion"] = ordered_json::object();
    for (const auto& [gold, row] : confusion) {
        ordered_json jrow = ordered_json::object();
        for (const auto& [pred, count] : row) jrow[pred] = count;
        doc["confusion"][gold] = jrow;
    }
    return doc;
}

EvaluationReport EvaluationReport::from_json(const json& doc) {
    EvaluationReport report;
    report.p_w = doc.value("p_w", 0.0);
    report.r_w = doc.value("r_w", 0.0);
    report.f1_w = doc.value("f1_w", 0.0);
    report.f1_macro = doc.value("f1_macro", 0.0);
    report.macro_mode = macro_mode_from_string(doc.value("macro_mode", "gold_present"));
    report.n_evaluated = doc.value("n_evaluated", 0L);
    report.n_failed = doc.value("n_failed", 0L);
    const json per_class = doc.value("per_class", json::object());
    for (const auto& [label, jm] : per_class.items()) {
        ClassMetrics m;
        m.tp = jm.value("tp", 0L);
        m.fp = jm.value("fp", 0L);
        m.fn = jm.value("fn", 0L);
        m.support = jm.value("support", 0L);
        m.precision = jm.value("precision", 0.0);
        m.recall = jm.value("recall", 0.0);
        m.f1 = jm.value("f1", 0.0);
        report.per_class[label] = m;
    }
    const json confusion = doc.value("confusion", json::object());
    for (const auto& [gold, jrow] : confusion.items())
        for (const auto& [pred, count] : jrow.items())
            report.confusion[gold][pred] = count.get<long>();
    return report;
}

DepthReport depth_analysis(const DecisionTree& tree,
                           const std::vector<AnnotationRecord>& records) {
    if (records.empty()) throw EmptyInput("no records for depth analysis");

    std::map<int, DepthLevel> levels;
    DepthReport report;
    for (const auto& record : records) {
        if (!record.gold)
            throw MalformedRecord("record " + record.dialog_id + ":" +
                                  std::to_string(record.turn_index) +
                                  " lacks a gold label");
        auto gpath = gold_path(tree, *record.gold);
        ++report.total_records;
        for (std::size_t level = 1; level <= gpath.size(); ++level) {
            DepthLevel& entry = levels[static_cast<int>(level)];
            entry.level = static_cast<int>(level);
            ++entry.reached;
            bool correct = level <= record.path.size() &&
                           record.path[level - 1].answer == gpath[level - 1].answer;
            if (correct) {
                ++entry.correct;
            } else {
                ++entry.errors;
                ++report.total_errors;
                break;
            }
        }
    }
    for (auto& [level, entry] : levels) {
        entry.accuracy =
            entry.reached ? 100.0 * entry.correct / entry.reached : 0.0;
        entry.error_share =
            report.total_errors ? 100.0 * entry.errors / report.total_errors : 0.0;
        report.levels.push_back(entry);
    }
    return report;
}

ordered_json DepthReport::to_json() const {
    ordered_json doc;
    doc["total_records"] = total_records;
    doc["total_errors"] = total_errors;
    doc["levels"] = ordered_json::array();
    for (const auto& entry : levels)
        doc["levels"].push_back({{"level", entry.level},
                                 {"reached", entry.reached},
                                 {"correct", entry.correct},
                                 {"accuracy", entry.accuracy},
                                 {"errors", entry.errors},
                                 {"error_share", entry.error_share}});
    return doc;
}

ConsistencySummary consistency_summary(const std::vector<EvaluationReport>& reports) {
    if (reports.size() < 2) throw EmptyInput("consistency summary needs >= 2 reports");
    ConsistencySummary summary;
    for (const auto& report : reports)
        summary.runs.push_back({report.p_w, report.r_w, report.f1_w, report.f1_macro});

    auto spread = [&](auto member) {
        double lo = summary.runs.front().*member;
        double hi = lo;
        for (const auto& row : summary.runs) {
            lo = std::min(lo, row.*member);
            hi = std::max(hi, row.*member);
        }
        return hi - lo;
    };
    summary.max_delta.p_w = spread(&ConsistencySummary::Row::p_w);
    summary.max_delta.r_w = spread(&ConsistencySummary::Row::r_w);
    summary.max_delta.f1_w = spread(&ConsistencySummary::Row::f1_w);
    summary.max_delta.f1_macro = spread(&ConsistencySummary::Row::f1_macro);
    return summary;
}

ordered_json ConsistencySummary::to_json() const {
    ordered_json doc;
    doc["runs"] = ordered_json::array();
    for (const auto& row : runs)
        doc["runs"].push_back({{"p_w", row.p_w},
                               {"r_w", row.r_w},
                               {"f1_w", row.f1_w},
                               {"f1_macro", row.f1_macro}});
    doc["max_delta"] = {{"p_w", max_delta.p_w},
                        {"r_w", max_delta.r_w},
                        {"f1_w", max_delta.f1_w},
                        {"f1_macro", max_delta.f1_macro}};
    return doc;
}

CostReport cost_report(const UsageLedger& ledger, long n_dialogs, double wall_time_s) {
    CostReport report;
    auto totals = ledger.totals();
    report.total_cost = totals.cost;
    report.calls = totals.calls;
    report.prompt_tokens = totals.prompt_tokens;
    report.completion_tokens = totals.completion_tokens;
    report.per_dialog_mean = n_dialogs > 0 ? totals.cost / n_dialogs : 0.0;
    report.wall_time_s = wall_time_s;
    for (const auto& stage : ledger.stages()) {
        auto t = ledger.totals_for_stage(stage);
        report.per_stage[stage] =
            StageCost{t.calls, t.prompt_tokens, t.completion_tokens, t.cost};
    }
    return report;
}

ordered_json CostReport::to_json() const {
    ordered_json doc;
    doc["total_cost"] = total_cost;
    doc["per_dialog_mean"] = per_dialog_mean;
    doc["wall_time_s"] = wall_time_s;
    doc["calls"] = calls;
    doc["prompt_tokens"] = prompt_tokens;
    doc["completion_tokens"] = completion_tokens;
    doc["per_stage"] = ordered_json::object();
    for (const auto& [stage, t] : per_stage)
        doc["per_stage"][stage] = {{"calls", t.calls},
                                   {"prompt_tokens", t.prompt_tokens},
                                   {"completion_tokens", t.completion_tokens},
                                   {"cost", t.cost}};
    return doc;
}

// --- text tables ---

namespace {

std::string pad(const std::string& text, std::size_t width) {
    if (text.size() >= width) return text + "  ";
    return text + std::string(width - text.size() + 2, ' ');
}

std::string fixed2(double value) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(2) << value;
    return out.str();
}

std::string fixed1(double value) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(1) << value;
    return out.str();
}

}  // namespace

std::string render_report_table(
    const std::vector<std::pair<std::string, EvaluationReport>>& rows) {
    std::size_t width = 8;
    for (const auto& [approach, report] : rows) width = std::max(width, approach.size());
    std::string out = pad("Approach", width) + pad("P_w", 6) + pad("R_w", 6) +
                      pad("F1_w", 6) + "F1\n";
    for (const auto& [approach, report] : rows) {
        out += pad(approach, width) + pad(fixed2(report.p_w), 6) +
               pad(fixed2(report.r_w), 6) + pad(fixed2(report.f1_w), 6) +
               fixed2(report.f1_macro) + "\n";
    }
    return out;
}

std::string render_depth_table(const DepthReport& report) {
    std::string out =
        pad("Level", 6) + pad("Reached", 8) + pad("Accuracy", 8) + "Error share\n";
    for (const auto& entry : report.levels) {
        out += pad(std::to_string(entry.level), 6) +
               pad(std::to_string(entry.reached), 8) +
               pad(fixed1(entry.accuracy), 8) + fixed1(entry.error_share) + "\n";
    }
    out += "Errors: " + std::to_string(report.total_errors) + " of " +
           std::to_string(report.total_records) + " records\n";
    return out;
}

std::string render_consistency_table(const ConsistencySummary& summary) {
    std::string out =
        pad("Run", 9) + pad("P_w", 6) + pad("R_w", 6) + pad("F1_w", 6) + "F1\n";
    for (std::size_t i = 0; i < summary.runs.size(); ++i) {
        const auto& row = summary.runs[i];
        out += pad(std::to_string(i + 1), 9) + pad(fixed2(row.p_w), 6) +
               pad(fixed2(row.r_w), 6) + pad(fixed2(row.f1_w), 6) +
               fixed2(row.f1_macro) + "\n";
    }
    out += pad("max_delta", 9) + pad(fixed2(summary.max_delta.p_w), 6) +
           pad(fixed2(summary.max_delta.r_w), 6) +
           pad(fixed2(summary.max_delta.f1_w), 6) + fixed2(summary.max_delta.f1_macro) +
           "\n";
    return out;
}

std::string render_cost_table(const CostReport& report) {
    std::string out = pad("Stage", 10) + pad("Calls", 7) + pad("Prompt", 9) +
                      pad("Completion", 11) + "Cost\n";
    for (const auto& [stage, t] : report.per_stage) {
        out += pad(stage.empty() ? "(none)" : stage, 10) +
               pad(std::to_string(t.calls), 7) + pad(std::to_string(t.prompt_tokens), 9) +
               pad(std::to_string(t.completion_tokens), 11) + "$" + fixed2(t.cost) + "\n";
    }
    out += pad("total", 10) + pad(std::to_string(report.calls), 7) +
           pad(std::to_string(report.prompt_tokens), 9) +
           pad(std::to_string(report.completion_tokens), 11) + "$" +
           fixed2(report.total_cost) + "\n";
    out += "Per-dialog mean: $" + fixed2(report.per_dialog_mean) + "\n";
    if (report.wall_time_s > 0)
        out += "Wall time: " + fixed1(report.wall_time_s) + " s\n";
    return out;
}

}  // namespace treescheme

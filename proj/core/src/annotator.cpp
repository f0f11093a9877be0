#include "treescheme/annotator.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

namespace treescheme {

using nlohmann::json;
using nlohmann::ordered_json;

std::string to_string(MatchMode mode) {
    switch (mode) {
        case MatchMode::exact: return "exact";
        case MatchMode::normalized: return "normalized";
        case MatchMode::overlap_fallback: return "overlap-fallback";
    }
    return "overlap-fallback";
}

MatchMode match_mode_from_string(const std::string& s) {
    if (s == "exact") return MatchMode::exact;
    if (s == "normalized") return MatchMode::normalized;
    if (s == "overlap-fallback" || s == "overlap_fallback")
        return MatchMode::overlap_fallback;
    throw ConfigError("unknown answer match mode: " + s);
}

namespace {

std::set<std::string> token_set(const std::string& normalized) {
    std::set<std::string> tokens;
    std::istringstream in(normalized);
    std::string token;
    while (in >> token) tokens.insert(token);
    return tokens;
}

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
    if (a.empty() && b.empty()) return 0.0;
    std::size_t common = 0;
    for (const auto& t : a)
        if (b.count(t)) ++common;
    return static_cast<double>(common) /
           static_cast<double>(a.size() + b.size() - common);
}

/// Index from a leading ordinal like "2", "(2)", "2." or "2)"; npos if the
/// reply does not start with one.
std::size_t ordinal_index(const std::string& reply, std::size_t n_options,
                          std::string* rest = nullptr) {
    std::size_t pos = 0;
    while (pos < reply.size() && std::isspace(static_cast<unsigned char>(reply[pos])))
        ++pos;
    bool paren = pos < reply.size() && reply[pos] == '(';
    if (paren) ++pos;
    std::size_t digits_start = pos;
    while (pos < reply.size() && std::isdigit(static_cast<unsigned char>(reply[pos])))
        ++pos;
    if (pos == digits_start) return std::string::npos;
    unsigned long value = std::stoul(reply.substr(digits_start, pos - digits_start));
    if (paren) {
        if (pos >= reply.size() || reply[pos] != ')') return std::string::npos;
        ++pos;
    } else if (pos < reply.size() && (reply[pos] == '.' || reply[pos] == ')')) {
        ++pos;
    }
    if (value < 1 || value > n_options) return std::string::npos;
    if (rest) *rest = reply.substr(pos);
    return static_cast<std::size_t>(value - 1);
}

std::size_t match_normalized(const std::string& reply,
                             const std::vector<std::string>& options) {
    std::string rest;
    std::size_t ordinal = ordinal_index(reply, options.size(), &rest);
    if (ordinal != std::string::npos) {
        std::string rest_norm = normalize_answer_text(rest);
        if (rest_norm.empty() || rest_norm == normalize_answer_text(options[ordinal]))
            return ordinal;
    }
    std::string norm = normalize_answer_text(reply);
    for (std::size_t i = 0; i < options.size(); ++i)
        if (norm == normalize_answer_text(options[i])) return i;
    return std::string::npos;
}

}  // namespace

std::size_t match_answer(const std::string& reply,
                         const std::vector<std::string>& options, MatchMode mode) {
    if (options.size() < 2) throw ConfigError("match_answer needs >= 2 options");

    if (mode == MatchMode::exact) {
        for (std::size_t i = 0; i < options.size(); ++i)
            if (reply == options[i]) return i;
        throw NoMatch(reply);
    }

    std::size_t matched = match_normalized(reply, options);
    if (matched != std::string::npos) return matched;
    if (mode == MatchMode::normalized) throw NoMatch(reply);

    auto reply_tokens = token_set(normalize_answer_text(reply));
    double best = -1.0;
    std::size_t best_index = 0;
    bool tie = false;
    for (std::size_t i = 0; i < options.size(); ++i) {
        double overlap = jaccard(reply_tokens, token_set(normalize_answer_text(options[i])));
        if (overlap > best) {
            best = overlap;
            best_index = i;
            tie = false;
        } else if (overlap == best) {
            tie = true;
        }
    }
    if (best < 0.5) throw NoMatch(reply);
    if (tie) throw AmbiguousMatch(reply);
    return best_index;
}

Annotator::Annotator(std::shared_ptr<ChatGateway> gateway, AnnotatorConfig config)
    : gateway_(std::move(gateway)), config_(std::move(config)) {
    if (!gateway_) throw ConfigError("annotator needs a gateway");
    if (config_.context_length < 0) throw ConfigError("context_length must be >= 0");
    templates_ = TemplateSet::load(config_.prompt_template_set);
}

std::string Annotator::render_prompt(const std::string& utterance,
                                     const std::vector<std::string>& context,
                                     const TreeNode& node) const {
    std::string context_block;
    if (context.empty()) {
        context_block = "(start of conversation)";
    } else {
        for (std::size_t i = 0; i < context.size(); ++i) {
            if (i) context_block += '\n';
            context_block += context[i];
        }
    }
    std::string options;
    for (std::size_t i = 0; i < node.answers.size(); ++i) {
        options += std::to_string(i + 1) + ". " + node.answers[i].text;
        if (i + 1 < node.answers.size()) options += '\n';
    }
    std::map<std::string, std::string> slots = {
        {"CONTEXT", context_block},
        {"UTTERANCE", utterance},
        {"QUESTION", node.question},
        {"OPTIONS", options},
    };
    std::string prompt = render_template(templates_.annotate, slots);
    auto unresolved = find_unresolved_slots(prompt);
    if (!unresolved.empty())
        throw TemplateError("unresolved slot {" + unresolved.front() +
                            "} in annotate prompt");
    return prompt;
}

std::size_t Annotator::answer_node(const std::string& utterance,
                                   const std::vector<std::string>& context,
                                   const TreeNode& node, PathTrace* trace) {
    if (node.is_leaf()) throw ConfigError("answer_node needs a question node");
    std::vector<std::string> options;
    for (const auto& branch : node.answers) options.push_back(branch.text);

    CompletionRequest request;
    request.model_id = config_.model_id;
    request.temperature = config_.temperature;
    request.max_output = config_.max_output;
    request.messages = {{Message::Role::user, render_prompt(utterance, context, node)}};

    std::string last_reply;
    std::string last_error;
    Usage usage;
    for (int attempt = 0; attempt <= config_.max_question_retries; ++attempt) {
        CompletionResponse response = gateway_->complete(request, "annotate");
        usage.prompt_tokens += response.usage.prompt_tokens;
        usage.completion_tokens += response.usage.completion_tokens;
        last_reply = response.text;
        try {
            std::size_t index = match_answer(response.text, options, config_.answer_match);
            if (trace) {
                trace->question = node.question;
                trace->answer = node.answers[index].text;
                trace->raw_reply = response.text;
                trace->usage = usage;
            }
            return index;
        } catch (const NoMatch& e) {
            last_error = e.what();
        } catch (const AmbiguousMatch& e) {
            last_error = e.what();
        }
        request.messages.push_back({Message::Role::assistant, response.text});
        request.messages.push_back(
            {Message::Role::user,
             "That reply did not match any option. Answer with the option number only."});
    }
    if (trace) {
        trace->question = node.question;
        trace->raw_reply = last_reply;
        trace->usage = usage;
    }
    throw UnmatchableAnswer(last_error + " after " +
                            std::to_string(config_.max_question_retries + 1) +
                            " attempts at question \"" + node.question + "\"");
}

std::vector<AnnotationRecord> Annotator::annotate_dialog(const DecisionTree& tree,
                                                         const Dialog& dialog) {
    std::vector<AnnotationRecord> records;
    for (std::size_t i = 0; i < dialog.turns.size(); ++i) {
        const DialogTurn& turn = dialog.turns[i];
        if (turn.continuation && config_.skip_continuations) continue;

        std::vector<std::string> context;
        std::size_t first =
            i >= static_cast<std::size_t>(config_.context_length)
                ? i - static_cast<std::size_t>(config_.context_length)
                : 0;
        for (std::size_t j = first; j < i; ++j)
            context.push_back(dialog.turns[j].speaker + ": " + dialog.turns[j].text);
        std::string utterance = turn.speaker + ": " + turn.text;

        AnnotationRecord record;
        record.dialog_id = dialog.dialog_id;
        record.turn_index = static_cast<int>(i);
        record.gold = turn.gold_label;

        const TreeNode* node = &tree.root;
        try {
            while (!node->is_leaf()) {
                PathTrace trace;
                std::size_t index = answer_node(utterance, context, *node, &trace);
                record.path.push_back(trace);
                node = &node->answers[index].node;
            }
            record.predicted = node->label;
        } catch (const UnmatchableAnswer&) {
            record.failed = true;
            record.predicted = kFailedLabel;
        }
        records.push_back(std::move(record));
    }
    return records;
}

CorpusResult Annotator::annotate_corpus(const DecisionTree& tree,
                                        const std::vector<Dialog>& dialogs,
                                        int parallelism) {
    CorpusResult result;
    if (dialogs.empty()) return result;
    parallelism = std::max(1, parallelism);

    std::vector<std::vector<AnnotationRecord>> per_dialog(dialogs.size());
    std::vector<std::optional<DialogError>> per_dialog_error(dialogs.size());
    std::vector<std::exception_ptr> fatal(dialogs.size());
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= dialogs.size()) return;
            try {
                per_dialog[i] = annotate_dialog(tree, dialogs[i]);
            } catch (const AuthError&) {
                fatal[i] = std::current_exception();
            } catch (const BudgetExceeded&) {
                fatal[i] = std::current_exception();
            } catch (const Error& e) {
                per_dialog_error[i] = DialogError{dialogs[i].dialog_id, e.what()};
            }
        }
    };

    if (parallelism == 1 || dialogs.size() == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        int n = std::min<std::size_t>(parallelism, dialogs.size());
        for (int t = 0; t < n; ++t) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }

    for (const auto& e : fatal)
        if (e) std::rethrow_exception(e);
    for (std::size_t i = 0; i < dialogs.size(); ++i) {
        for (auto& r : per_dialog[i]) result.records.push_back(std::move(r));
        if (per_dialog_error[i]) result.errors.push_back(*per_dialog_error[i]);
    }
    return result;
}

void write_annotations(const std::vector<AnnotationRecord>& records,
                       const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write annotations: " + path.string());
    ordered_json header;
    header["header"] = {{"format", "treescheme-annotations"}, {"version", 1}};
    out << header.dump() << "\n";
    for (const auto& record : records) {
        ordered_json doc;
        doc["dialog_id"] = record.dialog_id;
        doc["turn_index"] = record.turn_index;
        doc["predicted"] = record.predicted;
        doc["gold"] = record.gold ? ordered_json(*record.gold) : ordered_json(nullptr);
        doc["path"] = ordered_json::array();
        for (const auto& step : record.path)
            doc["path"].push_back({{"q", step.question}, {"a", step.answer}});
        doc["failed"] = record.failed;
        out << doc.dump() << "\n";
    }
}

std::vector<AnnotationRecord> read_annotations(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open annotations: " + path.string());
    std::vector<AnnotationRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json doc = json::parse(line, nullptr, false);
        if (doc.is_discarded())
            throw MalformedRecord("annotation line " + std::to_string(line_no));
        if (doc.contains("header")) continue;
        if (!doc.contains("dialog_id") || !doc.contains("predicted"))
            throw MalformedRecord("annotation line " + std::to_string(line_no) +
                                  " lacks dialog_id/predicted");
        AnnotationRecord record;
        record.dialog_id = doc["dialog_id"].get<std::string>();
        record.turn_index = doc.value("turn_index", 0);
        record.predicted = doc["predicted"].get<std::string>();
        if (doc.contains("gold") && !doc["gold"].is_null())
            record.gold = doc["gold"].get<std::string>();
        for (const auto& step : doc.value("path", json::array())) {
            PathTrace trace;
            trace.question = step.value("q", "");
            trace.answer = step.value("a", "");
            record.path.push_back(std::move(trace));
        }
        record.failed = doc.value("failed", false);
        records.push_back(std::move(record));
    }
    return records;
}

}  // namespace treescheme

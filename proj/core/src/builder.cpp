#include "treescheme/builder.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace treescheme {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

/// Escapes the candidate-level catches in expand(); converted to
/// NoViableSplit at the top of build_tree.
struct BacktrackBudgetExhausted {
    std::string subset_desc;
};

std::string subset_desc(const std::vector<ClassSpec>& subset) {
    std::string out = "{";
    for (std::size_t i = 0; i < subset.size(); ++i) {
        if (i) out += ", ";
        out += subset[i].name;
    }
    return out + "}";
}

std::vector<std::string> subset_names(const std::vector<ClassSpec>& subset) {
    std::vector<std::string> out;
    out.reserve(subset.size());
    for (const auto& c : subset) out.push_back(c.name);
    return out;
}

std::string format_number(double value) {
    std::ostringstream out;
    out << value;
    return out.str();
}

std::string class_table(const std::vector<ClassSpec>& subset) {
    std::string out;
    for (const auto& c : subset) {
        out += "- " + c.name + " :: " + c.definition;
        if (!c.examples.empty()) {
            out += " :: examples: ";
            for (std::size_t i = 0; i < c.examples.size(); ++i) {
                if (i) out += " | ";
                out += c.examples[i];
            }
        }
        out += '\n';
    }
    if (!out.empty()) out.pop_back();
    return out;
}

const ClassSpec& most_frequent_class(const std::vector<ClassSpec>& subset) {
    const ClassSpec* best = &subset.front();
    for (const auto& c : subset)
        if (c.frequency && (!best->frequency || *c.frequency > *best->frequency)) best = &c;
    return *best;
}

bool is_search_strategy(Strategy s) {
    return s == Strategy::split_select || s == Strategy::freq_split_select;
}

bool is_binary_strategy(Strategy s) {
    return s == Strategy::yes_no || s == Strategy::open_binary;
}

}  // namespace

std::string to_string(SplitVerdict v) {
    switch (v) {
        case SplitVerdict::contradictory: return "contradictory";
        case SplitVerdict::neutral: return "neutral";
        case SplitVerdict::non_contradictory: return "non_contradictory";
    }
    return "neutral";
}

SplitVerdict split_verdict_from_string(const std::string& s) {
    if (s == "contradictory") return SplitVerdict::contradictory;
    if (s == "neutral") return SplitVerdict::neutral;
    if (s == "non_contradictory") return SplitVerdict::non_contradictory;
    throw UnparseableVerdict("unknown split verdict: " + s);
}

TreeBuilder::TreeBuilder(std::shared_ptr<ChatGateway> gateway,
                         std::shared_ptr<NliJudge> judge, BuilderConfig config)
    : gateway_(std::move(gateway)), judge_(std::move(judge)), config_(std::move(config)) {
    if (!gateway_) throw ConfigError("builder needs a gateway");
    if (config_.candidates_per_node < 1)
        throw ConfigError("candidates_per_node must be >= 1");
    if (config_.reasoning_pairs < 0) throw ConfigError("reasoning_pairs must be >= 0");
    if (is_search_strategy(config_.strategy) && !judge_)
        throw ConfigError("search strategies need an NLI judge");
    templates_ = TemplateSet::load(config_.prompt_template_set);
}

std::string TreeBuilder::render_split_prompt(const std::vector<ClassSpec>& subset) const {
    std::map<std::string, std::string> rule_slots;
    if (config_.strategy == Strategy::freq_split_select)
        rule_slots["MOST_FREQUENT_CLASS"] = most_frequent_class(subset).name;
    std::string rules = render_template(templates_.rules.at(config_.strategy), rule_slots);
    while (!rules.empty() && rules.back() == '\n') rules.pop_back();

    std::string frequencies;
    if (config_.strategy == Strategy::freq_split_select) {
        frequencies = "Class frequencies (fraction of all utterances):\n";
        for (const auto& c : subset)
            frequencies += "- " + c.name + ": " + format_number(*c.frequency) + "\n";
        frequencies += "\n";
    }

    int max_groups = is_binary_strategy(config_.strategy)
                         ? 2
                         : static_cast<int>(subset.size());
    std::map<std::string, std::string> slots = {
        {"CLASS_TABLE", class_table(subset)},
        {"GROUPING_RULES", rules},
        {"OUTPUT_SCHEMA", templates_.output_schema},
        {"FREQUENCIES", frequencies},
        {"REASONING_PAIRS", std::to_string(config_.reasoning_pairs)},
        {"MAX_GROUPS", std::to_string(max_groups)},
    };
    std::string prompt = render_template(templates_.split_base, slots);
    auto unresolved = find_unresolved_slots(prompt);
    if (!unresolved.empty())
        throw TemplateError("unresolved slot {" + unresolved.front() +
                            "} in split prompt");
    return prompt;
}

std::string TreeBuilder::render_score_prompt(const SplitProposal& proposal,
                                             const std::vector<ClassSpec>& subset) const {
    std::string groups;
    for (std::size_t i = 0; i < proposal.groups.size(); ++i) {
        const auto& g = proposal.groups[i];
        groups += std::to_string(i + 1) + ". \"" + g.answer_text + "\" -> ";
        for (std::size_t j = 0; j < g.members.size(); ++j) {
            if (j) groups += ", ";
            groups += g.members[j];
        }
        groups += '\n';
    }
    if (!groups.empty()) groups.pop_back();

    std::map<std::string, std::string> slots = {
        {"CLASS_TABLE", class_table(subset)},
        {"QUESTION", proposal.classification_question},
        {"GROUPS", groups},
    };
    std::string prompt = render_template(templates_.score, slots);
    auto unresolved = find_unresolved_slots(prompt);
    if (!unresolved.empty())
        throw TemplateError("unresolved slot {" + unresolved.front() +
                            "} in score prompt");
    return prompt;
}

void TreeBuilder::validate_partition(const SplitProposal& proposal,
                                     const std::vector<ClassSpec>& subset) const {
    if (proposal.classification_question.empty())
        throw InvalidPartition("empty classification question");
    if (proposal.groups.empty()) throw InvalidPartition("no groups returned");

    std::size_t non_empty = 0;
    for (const auto& g : proposal.groups)
        if (!g.members.empty()) ++non_empty;
    if (non_empty == 1) throw DegenerateSplit("only one non-empty group returned");
    for (const auto& g : proposal.groups)
        if (g.members.empty()) throw InvalidPartition("empty group returned");
    if (proposal.groups.size() < 2) throw InvalidPartition("fewer than 2 groups");

    std::vector<std::string> seen;
    for (const auto& g : proposal.groups) {
        if (g.answer_text.empty()) throw InvalidPartition("empty answer text");
        for (const auto& name : g.members) {
            bool known = std::any_of(subset.begin(), subset.end(),
                                     [&](const ClassSpec& c) { return c.name == name; });
            if (!known) throw InvalidPartition("unknown class \"" + name + "\"");
            if (std::find(seen.begin(), seen.end(), name) != seen.end())
                throw InvalidPartition("class \"" + name + "\" appears in two groups");
            seen.push_back(name);
        }
    }
    for (const auto& c : subset)
        if (std::find(seen.begin(), seen.end(), c.name) == seen.end())
            throw InvalidPartition("class \"" + c.name + "\" missing from every group");

    std::vector<std::string> normalized;
    for (const auto& g : proposal.groups) {
        std::string n = normalize_answer_text(g.answer_text);
        if (std::find(normalized.begin(), normalized.end(), n) != normalized.end())
            throw InvalidPartition("duplicate answer text \"" + g.answer_text + "\"");
        normalized.push_back(n);
    }

    if (is_binary_strategy(config_.strategy) && proposal.groups.size() != 2)
        throw InvalidPartition(to_string(config_.strategy) +
                               " needs exactly 2 groups, got " +
                               std::to_string(proposal.groups.size()));
    if (config_.strategy == Strategy::yes_no) {
        auto starts_with = [](const std::string& text, const char* word) {
            return normalize_answer_text(text).rfind(word, 0) == 0;
        };
        bool ok = (starts_with(proposal.groups[0].answer_text, "yes") &&
                   starts_with(proposal.groups[1].answer_text, "no")) ||
                  (starts_with(proposal.groups[0].answer_text, "no") &&
                   starts_with(proposal.groups[1].answer_text, "yes"));
        if (!ok)
            throw InvalidPartition(
                "yes_no answers must be a yes-affirmation and a no-negation");
    }
}

SplitProposal TreeBuilder::propose_split(const std::vector<ClassSpec>& subset) {
    if (subset.size() < 2) throw ConfigError("propose_split needs >= 2 classes");
    if (config_.strategy == Strategy::freq_split_select) {
        std::string missing;
        for (const auto& c : subset)
            if (!c.frequency) missing += missing.empty() ? c.name : (", " + c.name);
        if (!missing.empty())
            throw MissingFrequencies("freq_split_select needs frequencies for " + missing);
    }

    JsonSchema reasoning_schema{{{"question", JsonKind::string, true, nullptr},
                                 {"answer", JsonKind::string, true, nullptr}}};
    JsonSchema group_schema{{{"answer", JsonKind::string, true, nullptr},
                             {"classes", JsonKind::array, true, nullptr}}};
    JsonSchema schema{{{"reasoning", JsonKind::array, config_.reasoning_pairs > 0,
                        std::make_shared<JsonSchema>(reasoning_schema)},
                       {"question", JsonKind::string, true, nullptr},
                       {"groups", JsonKind::array, true,
                        std::make_shared<JsonSchema>(group_schema)}}};

    CompletionRequest request;
    request.model_id = config_.model_id;
    request.temperature = config_.temperature;
    request.max_output = config_.max_output;
    request.messages = {{Message::Role::user, render_split_prompt(subset)}};

    StructuredResult result =
        gateway_->complete_structured(request, schema, config_.structured_retries, "split");
    last_raw_response_ = result.raw_text;

    SplitProposal proposal;
    proposal.raw_response = result.raw_text;
    proposal.classification_question = result.value["question"].get<std::string>();
    for (const auto& jr : result.value.value("reasoning", json::array()))
        proposal.rationale.push_back(
            {jr["question"].get<std::string>(), jr["answer"].get<std::string>()});
    for (const auto& jg : result.value["groups"]) {
        SplitGroup group;
        group.answer_text = jg["answer"].get<std::string>();
        for (const auto& name : jg["classes"]) {
            if (!name.is_string())
                throw InvalidPartition("group \"classes\" entries must be strings");
            group.members.push_back(name.get<std::string>());
        }
        proposal.groups.push_back(std::move(group));
    }

    validate_partition(proposal, subset);
    return proposal;
}

double TreeBuilder::score_split(SplitProposal& proposal,
                                const std::vector<ClassSpec>& subset) {
    JsonSchema schema{{{"score", JsonKind::number, true, nullptr}}};
    CompletionRequest request;
    request.model_id = config_.model_id;
    request.temperature = config_.temperature;
    request.max_output = 64;
    request.messages = {{Message::Role::user, render_score_prompt(proposal, subset)}};

    StructuredResult result =
        gateway_->complete_structured(request, schema, config_.structured_retries, "score");
    double score = result.value["score"].get<double>();
    if (score < config_.score_min || score > config_.score_max) {
        double clamped = std::clamp(score, config_.score_min, config_.score_max);
        warnings_.push_back("score " + format_number(score) + " outside [" +
                            format_number(config_.score_min) + "," +
                            format_number(config_.score_max) + "] clamped to " +
                            format_number(clamped) + " for subset " +
                            subset_desc(subset));
        score = clamped;
    }
    proposal.score = score;
    proposal.raw_score_response = result.raw_text;
    return score;
}

SplitVerdict TreeBuilder::vet_split(SplitProposal& proposal,
                                    std::vector<JudgeCall>* calls) {
    if (!judge_) throw ConfigError("vet_split needs an NLI judge");
    bool contradiction = false;
    auto run = [&](const std::string& premise, const std::string& hypothesis) {
        NliVerdict verdict = judge_->judge(premise, hypothesis);
        if (calls) calls->push_back({premise, hypothesis, verdict});
        if (verdict == NliVerdict::contradiction) contradiction = true;
    };
    for (const auto& g : proposal.groups)
        run(proposal.classification_question, g.answer_text);
    if (config_.pairwise_answers) {
        for (std::size_t i = 0; i < proposal.groups.size(); ++i)
            for (std::size_t j = i + 1; j < proposal.groups.size(); ++j)
                run(proposal.groups[i].answer_text, proposal.groups[j].answer_text);
    }
    proposal.verdict =
        contradiction ? SplitVerdict::contradictory : SplitVerdict::non_contradictory;
    return *proposal.verdict;
}

std::vector<TreeBuilder::Candidate> TreeBuilder::generate_candidates(
    const std::vector<ClassSpec>& subset) {
    std::vector<Candidate> candidates;
    for (int attempt = 0; attempt < config_.candidates_per_node; ++attempt) {
        AuditRecord record;
        record.subset = subset_names(subset);
        record.attempt = attempt;

        Candidate candidate;
        bool proposed = false;
        try {
            candidate.proposal = propose_split(subset);
            record.raw_response = candidate.proposal.raw_response;
            proposed = true;
        } catch (const StructuredOutputFailure& e) {
            record.error = e.what();
            record.error_code = e.code();
            record.error_stage = "propose";
            record.raw_response = e.last_raw;
        } catch (const InvalidPartition& e) {
            record.error = e.what();
            record.error_code = e.code();
            record.error_stage = "propose";
            record.raw_response = last_raw_response_;
        } catch (const DegenerateSplit& e) {
            record.error = e.what();
            record.error_code = e.code();
            record.error_stage = "propose";
            record.raw_response = last_raw_response_;
        }

        if (proposed) {
            try {
                record.score = score_split(candidate.proposal, subset);
                record.raw_score_response = candidate.proposal.raw_score_response;
            } catch (const StructuredOutputFailure& e) {
                record.error = e.what();
                record.error_code = e.code();
                record.error_stage = "score";
                record.raw_score_response = e.last_raw;
                proposed = false;
            }
        }
        if (proposed) {
            record.verdict = vet_split(candidate.proposal, &record.judge_calls);
            candidate.viable = *record.verdict == SplitVerdict::non_contradictory;
            if (config_.strategy == Strategy::freq_split_select) {
                const std::string& top = most_frequent_class(subset).name;
                bool singleton = std::any_of(
                    candidate.proposal.groups.begin(), candidate.proposal.groups.end(),
                    [&](const SplitGroup& g) {
                        return g.members.size() == 1 && g.members.front() == top;
                    });
                record.singleton_most_frequent = singleton;
            }
            record.proposal = candidate.proposal;
        }

        candidate.audit_index = audit_.size();
        audit_.push_back(std::move(record));
        candidates.push_back(std::move(candidate));
    }
    return candidates;
}

std::vector<std::size_t> TreeBuilder::viable_order(
    const std::vector<Candidate>& candidates) const {
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < candidates.size(); ++i)
        if (candidates[i].viable) order.push_back(i);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return candidates[a].proposal.score.value_or(0.0) >
               candidates[b].proposal.score.value_or(0.0);
    });
    return order;
}

SplitProposal TreeBuilder::select_split(const std::vector<ClassSpec>& subset) {
    auto candidates = generate_candidates(subset);
    auto order = viable_order(candidates);
    if (order.empty()) throw NoViableSplit(subset_desc(subset));
    Candidate& best = candidates[order.front()];
    audit_[best.audit_index].chosen = true;
    return best.proposal;
}

SplitProposal TreeBuilder::propose_with_retries(const std::vector<ClassSpec>& subset) {
    for (int attempt = 0;; ++attempt) {
        AuditRecord record;
        record.subset = subset_names(subset);
        record.attempt = attempt;
        try {
            SplitProposal proposal = propose_split(subset);
            record.proposal = proposal;
            record.raw_response = proposal.raw_response;
            record.chosen = true;
            audit_.push_back(std::move(record));
            return proposal;
        } catch (const InvalidPartition& e) {
            record.error = e.what();
            record.error_code = e.code();
            record.error_stage = "propose";
            record.raw_response = last_raw_response_;
            audit_.push_back(std::move(record));
            if (attempt >= config_.proposal_retries) throw;
        } catch (const DegenerateSplit& e) {
            record.error = e.what();
            record.error_code = e.code();
            record.error_stage = "propose";
            record.raw_response = last_raw_response_;
            audit_.push_back(std::move(record));
            if (attempt >= config_.proposal_retries) throw;
        }
    }
}

TreeNode TreeBuilder::node_from_proposal(const SplitProposal& proposal,
                                         const std::vector<ClassSpec>& subset,
                                         int depth) {
    TreeNode node;
    node.question = proposal.classification_question;
    for (const auto& group : proposal.groups) {
        std::vector<ClassSpec> members;
        for (const auto& c : subset)
            if (std::find(group.members.begin(), group.members.end(), c.name) !=
                group.members.end())
                members.push_back(c);
        AnswerBranch branch;
        branch.text = group.answer_text;
        if (members.size() == 1) {
            branch.node.label = members.front().name;
        } else {
            branch.node = expand(members, depth + 1);
        }
        node.answers.push_back(std::move(branch));
    }
    return node;
}

TreeNode TreeBuilder::expand(const std::vector<ClassSpec>& subset, int depth) {
    if (subset.size() == 1) {
        TreeNode leaf;
        leaf.label = subset.front().name;
        return leaf;
    }
    if (depth > config_.max_depth) throw MaxDepthExceeded(config_.max_depth);

    if (!is_search_strategy(config_.strategy)) {
        SplitProposal proposal = propose_with_retries(subset);
        return node_from_proposal(proposal, subset, depth);
    }

    auto candidates = generate_candidates(subset);
    auto order = viable_order(candidates);
    if (order.empty()) throw NoViableSplit(subset_desc(subset));
    for (std::size_t idx : order) {
        try {
            TreeNode node = node_from_proposal(candidates[idx].proposal, subset, depth);
            audit_[candidates[idx].audit_index].chosen = true;
            return node;
        } catch (const NoViableSplit&) {
        } catch (const MaxDepthExceeded&) {
        }
        ++backtracks_used_;
        if (backtracks_used_ > config_.backtrack_budget)
            throw BacktrackBudgetExhausted{subset_desc(subset)};
    }
    throw NoViableSplit(subset_desc(subset));
}

DecisionTree TreeBuilder::build_tree(const TaxonomySpec& taxonomy) {
    taxonomy.validate();
    audit_.clear();
    warnings_.clear();
    backtracks_used_ = 0;

    DecisionTree tree;
    tree.taxonomy_id = taxonomy.id;
    tree.approach = config_.strategy;
    tree.builder_metadata.model_id = config_.model_id;
    tree.builder_metadata.temperature = config_.temperature;
    tree.builder_metadata.candidates_per_node = config_.candidates_per_node;
    if (!config_.run_id.empty()) {
        tree.builder_metadata.run_id = config_.run_id;
    } else {
        CompletionRequest key;
        key.model_id = config_.model_id;
        key.messages = {{Message::Role::user,
                         taxonomy.id + "|" + to_string(config_.strategy) + "|" +
                             format_number(config_.temperature) + "|" +
                             std::to_string(config_.candidates_per_node)}};
        tree.builder_metadata.run_id = "run-" + hash_request(key);
    }

    if (taxonomy.classes.size() == 1) {
        tree.root.label = taxonomy.classes.front().name;
        return tree;
    }
    try {
        tree.root = expand(taxonomy.classes, 1);
    } catch (const BacktrackBudgetExhausted& e) {
        throw NoViableSplit(e.subset_desc + " (backtrack budget " +
                            std::to_string(config_.backtrack_budget) + " exhausted)");
    }
    return tree;
}

// --- audit log ---

namespace {

ordered_json proposal_to_json(const SplitProposal& proposal) {
    ordered_json doc;
    doc["question"] = proposal.classification_question;
    doc["groups"] = ordered_json::array();
    for (const auto& g : proposal.groups)
        doc["groups"].push_back({{"answer", g.answer_text}, {"classes", g.members}});
    doc["reasoning"] = ordered_json::array();
    for (const auto& r : proposal.rationale)
        doc["reasoning"].push_back({{"question", r.question}, {"answer", r.answer}});
    return doc;
}

SplitProposal proposal_from_json(const json& doc) {
    SplitProposal proposal;
    proposal.classification_question = doc.value("question", "");
    for (const auto& jg : doc.value("groups", json::array())) {
        SplitGroup group;
        group.answer_text = jg.value("answer", "");
        for (const auto& name : jg.value("classes", json::array()))
            group.members.push_back(name.get<std::string>());
        proposal.groups.push_back(std::move(group));
    }
    for (const auto& jr : doc.value("reasoning", json::array()))
        proposal.rationale.push_back({jr.value("question", ""), jr.value("answer", "")});
    return proposal;
}

}  // namespace

ordered_json audit_record_to_json(const AuditRecord& record) {
    ordered_json doc;
    doc["subset"] = record.subset;
    doc["attempt"] = record.attempt;
    doc["proposal"] =
        record.proposal ? proposal_to_json(*record.proposal) : ordered_json(nullptr);
    doc["score"] = record.score ? ordered_json(*record.score) : ordered_json(nullptr);
    doc["verdict"] =
        record.verdict ? ordered_json(to_string(*record.verdict)) : ordered_json(nullptr);
    doc["chosen"] = record.chosen;
    if (!record.error.empty()) {
        doc["error"] = record.error;
        doc["error_code"] = record.error_code;
        doc["error_stage"] = record.error_stage;
    }
    doc["raw_response"] = record.raw_response;
    doc["raw_score_response"] = record.raw_score_response;
    doc["judge"] = ordered_json::array();
    for (const auto& call : record.judge_calls)
        doc["judge"].push_back({{"premise", call.premise},
                                {"hypothesis", call.hypothesis},
                                {"verdict", to_string(call.verdict)}});
    if (record.singleton_most_frequent)
        doc["singleton_most_frequent"] = *record.singleton_most_frequent;
    return doc;
}

AuditRecord audit_record_from_json(const json& doc) {
    AuditRecord record;
    for (const auto& name : doc.value("subset", json::array()))
        record.subset.push_back(name.get<std::string>());
    record.attempt = doc.value("attempt", 0);
    if (doc.contains("proposal") && !doc["proposal"].is_null())
        record.proposal = proposal_from_json(doc["proposal"]);
    if (doc.contains("score") && !doc["score"].is_null())
        record.score = doc["score"].get<double>();
    if (doc.contains("verdict") && !doc["verdict"].is_null())
        record.verdict = split_verdict_from_string(doc["verdict"].get<std::string>());
    record.chosen = doc.value("chosen", false);
    record.error = doc.value("error", "");
    record.error_code = doc.value("error_code", "");
    record.error_stage = doc.value("error_stage", "");
    record.raw_response = doc.value("raw_response", "");
    record.raw_score_response = doc.value("raw_score_response", "");
    for (const auto& jc : doc.value("judge", json::array()))
        record.judge_calls.push_back(
            {jc.value("premise", ""), jc.value("hypothesis", ""),
             nli_verdict_from_string(jc.value("verdict", "neutral"))});
    if (doc.contains("singleton_most_frequent") &&
        !doc["singleton_most_frequent"].is_null())
        record.singleton_most_frequent = doc["singleton_most_frequent"].get<bool>();
    return record;
}

void write_audit_log(const std::vector<AuditRecord>& records,
                     const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write audit log: " + path.string());
    for (const auto& record : records) out << audit_record_to_json(record).dump() << "\n";
}

std::vector<AuditRecord> read_audit_log(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open audit log: " + path.string());
    std::vector<AuditRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json doc = json::parse(line, nullptr, false);
        if (doc.is_discarded())
            throw MalformedRecord("audit log line " + std::to_string(line_no));
        records.push_back(audit_record_from_json(doc));
    }
    return records;
}

std::vector<MockScriptEntry> replay_script_from_audit(
    const std::vector<AuditRecord>& records, int structured_retries) {
    std::vector<MockScriptEntry> script;
    for (const auto& record : records) {
        bool propose_failed_structured = record.error_code == "structured_output_failure" &&
                                         record.error_stage == "propose";
        bool score_failed_structured = record.error_code == "structured_output_failure" &&
                                       record.error_stage == "score";
        if (!record.raw_response.empty()) {
            int copies = propose_failed_structured ? structured_retries + 1 : 1;
            for (int i = 0; i < copies; ++i)
                script.push_back({std::nullopt, record.raw_response, 0, 0});
        }
        if (!record.raw_score_response.empty()) {
            int copies = score_failed_structured ? structured_retries + 1 : 1;
            for (int i = 0; i < copies; ++i)
                script.push_back({std::nullopt, record.raw_score_response, 0, 0});
        }
    }
    return script;
}

MockNliJudge replay_judge_from_audit(const std::vector<AuditRecord>& records) {
    MockNliJudge judge;
    for (const auto& record : records)
        for (const auto& call : record.judge_calls)
            judge.add(call.premise, call.hypothesis, call.verdict);
    return judge;
}

// --- consistency ---

namespace {

/// 0 when identical; otherwise the 1-based level of the shallowest
/// structural difference.
int divergence_level(const TreeNode& a, const TreeNode& b, int level) {
    if (a.is_leaf() != b.is_leaf()) return level;
    if (a.is_leaf()) return a.label == b.label ? 0 : level;
    if (a.question != b.question || a.answers.size() != b.answers.size()) return level;
    for (std::size_t i = 0; i < a.answers.size(); ++i)
        if (a.answers[i].text != b.answers[i].text) return level;
    int best = 0;
    for (std::size_t i = 0; i < a.answers.size(); ++i) {
        int d = divergence_level(a.answers[i].node, b.answers[i].node, level + 1);
        if (d != 0 && (best == 0 || d < best)) best = d;
    }
    return best;
}

}  // namespace

ConsistencyDiff diff_trees(const std::vector<DecisionTree>& trees) {
    ConsistencyDiff diff;
    if (trees.size() < 2) return diff;

    for (std::size_t i = 0; i < trees.size(); ++i)
        for (std::size_t j = i + 1; j < trees.size(); ++j) {
            int d = divergence_level(trees[i].root, trees[j].root, 1);
            if (d != 0 && (!diff.first_divergence_level || d < *diff.first_divergence_level))
                diff.first_divergence_level = d;
        }
    diff.identical = !diff.first_divergence_level.has_value();

    for (const auto& tree : trees) {
        DepthStats stats = depth_stats(tree);
        for (const auto& [label, depth] : stats.per_class_depth)
            diff.leaf_depths[label].push_back(depth);
    }
    for (const auto& [label, depths] : diff.leaf_depths) {
        auto [lo, hi] = std::minmax_element(depths.begin(), depths.end());
        diff.leaf_depth_delta[label] = *hi - *lo;
    }
    return diff;
}

ConsistencySuite build_consistency_suite(const TaxonomySpec& taxonomy,
                                         const BuilderConfig& config, int runs,
                                         const SessionFactory& factory) {
    if (runs < 2) throw ConfigError("consistency suite needs >= 2 runs");
    ConsistencySuite suite;
    std::vector<DecisionTree> trees;
    for (int i = 0; i < runs; ++i) {
        auto [gateway, judge] = factory(i);
        TreeBuilder builder(std::move(gateway), std::move(judge), config);
        ConsistencyRun run;
        try {
            run.tree = builder.build_tree(taxonomy);
            trees.push_back(*run.tree);
        } catch (const Error& e) {
            run.error = e.what();
        }
        run.audit = builder.audit_log();
        suite.runs.push_back(std::move(run));
    }
    suite.diff = diff_trees(trees);
    return suite;
}

}  // namespace treescheme

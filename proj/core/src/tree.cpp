#include "treescheme/tree.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace treescheme {

using nlohmann::json;
using nlohmann::ordered_json;

std::string to_string(Strategy s) {
    switch (s) {
        case Strategy::yes_no: return "yes_no";
        case Strategy::open_binary: return "open_binary";
        case Strategy::open_nonbinary: return "open_nonbinary";
        case Strategy::split_select: return "split_select";
        case Strategy::freq_split_select: return "freq_split_select";
    }
    return "open_nonbinary";
}

std::string cli_name(Strategy s) {
    std::string name = to_string(s);
    std::replace(name.begin(), name.end(), '_', '-');
    return name;
}

Strategy strategy_from_string(const std::string& s) {
    std::string key = s;
    std::replace(key.begin(), key.end(), '-', '_');
    if (key == "yes_no") return Strategy::yes_no;
    if (key == "open_binary") return Strategy::open_binary;
    if (key == "open_nonbinary") return Strategy::open_nonbinary;
    if (key == "split_select") return Strategy::split_select;
    if (key == "freq_split_select") return Strategy::freq_split_select;
    throw ConfigError("unknown approach \"" + s + "\"");
}

bool TreeNode::operator==(const TreeNode& other) const {
    return question == other.question && label == other.label && answers == other.answers;
}

bool AnswerBranch::operator==(const AnswerBranch& other) const {
    return text == other.text && node == other.node;
}

bool DecisionTree::operator==(const DecisionTree& other) const {
    return taxonomy_id == other.taxonomy_id && approach == other.approach &&
           builder_metadata == other.builder_metadata && root == other.root;
}

std::string normalize_answer_text(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out += ' ';
            pending_space = false;
        }
        out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    while (!out.empty()) {
        char back = out.back();
        if (back == '.' || back == '!' || back == '?' || back == ',' || back == ';' ||
            back == ':')
            out.pop_back();
        else
            break;
    }
    return out;
}

bool ValidationReport::has_error(ViolationKind kind) const {
    return std::any_of(errors.begin(), errors.end(),
                       [kind](const Violation& v) { return v.kind == kind; });
}

bool ValidationReport::has_warning(ViolationKind kind) const {
    return std::any_of(warnings.begin(), warnings.end(),
                       [kind](const Violation& v) { return v.kind == kind; });
}

namespace {

bool looks_like_other_group(const std::string& text) {
    std::istringstream tokens(normalize_answer_text(text));
    std::string tok;
    while (tokens >> tok) {
        if (tok == "other" || tok == "others" || tok == "miscellaneous") return true;
    }
    return false;
}

void walk_validate(const TreeNode& node, ValidationReport& report,
                   std::vector<std::string>& leaf_labels) {
    if (node.is_leaf()) {
        if (node.label.empty())
            report.errors.push_back({ViolationKind::empty_node, "leaf with empty label"});
        else
            leaf_labels.push_back(node.label);
        return;
    }
    if (node.answers.size() == 1)
        report.errors.push_back({ViolationKind::single_answer_node,
                                 "question \"" + node.question + "\" has one answer"});
    std::set<std::string> seen;
    for (const auto& branch : node.answers) {
        if (branch.text.empty())
            report.errors.push_back({ViolationKind::empty_node, "empty answer text under \"" +
                                                                    node.question + "\""});
        if (!seen.insert(normalize_answer_text(branch.text)).second)
            report.errors.push_back(
                {ViolationKind::duplicate_answer_text,
                 "answer \"" + branch.text + "\" repeated under \"" + node.question + "\""});
        if (looks_like_other_group(branch.text))
            report.warnings.push_back(
                {ViolationKind::other_group,
                 "catch-all answer \"" + branch.text + "\" under \"" + node.question + "\""});
        walk_validate(branch.node, report, leaf_labels);
    }
}

}  // namespace

ValidationReport validate_tree(const DecisionTree& tree, const TaxonomySpec& taxonomy) {
    ValidationReport report;
    std::vector<std::string> leaves;
    walk_validate(tree.root, report, leaves);

    std::map<std::string, int> counts;
    for (const auto& label : leaves) ++counts[label];

    for (const auto& [label, n] : counts) {
        if (!taxonomy.contains(label))
            report.errors.push_back({ViolationKind::unknown_label,
                                     "leaf label \"" + label + "\" not in taxonomy"});
        if (n > 1)
            report.errors.push_back({ViolationKind::duplicated_class,
                                     "class \"" + label + "\" appears in " +
                                         std::to_string(n) + " leaves"});
    }
    for (const auto& c : taxonomy.classes) {
        if (!counts.count(c.name))
            report.errors.push_back(
                {ViolationKind::missing_class, "class \"" + c.name + "\" has no leaf"});
    }
    return report;
}

namespace {

bool find_path(const TreeNode& node, const std::string& label,
               std::vector<PathStep>& path) {
    if (node.is_leaf()) return node.label == label;
    for (const auto& branch : node.answers) {
        path.push_back({node.question, branch.text});
        if (find_path(branch.node, label, path)) return true;
        path.pop_back();
    }
    return false;
}

void walk_depths(const TreeNode& node, int depth, DepthStats& stats, int& leaves,
                 double& depth_sum) {
    if (node.is_leaf()) {
        stats.max_depth = std::max(stats.max_depth, depth);
        stats.per_class_depth[node.label] = depth;
        ++leaves;
        depth_sum += depth;
        return;
    }
    for (const auto& branch : node.answers)
        walk_depths(branch.node, depth + 1, stats, leaves, depth_sum);
}

}  // namespace

std::vector<PathStep> gold_path(const DecisionTree& tree, const std::string& label) {
    std::vector<PathStep> path;
    if (!find_path(tree.root, label, path)) throw LabelNotInTree(label);
    return path;
}

DepthStats depth_stats(const DecisionTree& tree) {
    DepthStats stats;
    int leaves = 0;
    double depth_sum = 0.0;
    walk_depths(tree.root, 0, stats, leaves, depth_sum);
    stats.mean_leaf_depth = leaves > 0 ? depth_sum / leaves : 0.0;
    return stats;
}

namespace {

ordered_json node_to_json(const TreeNode& node) {
    ordered_json j;
    if (node.is_leaf()) {
        j["label"] = node.label;
        return j;
    }
    j["question"] = node.question;
    j["answers"] = ordered_json::array();
    for (const auto& branch : node.answers) {
        ordered_json jb;
        jb["text"] = branch.text;
        jb["node"] = node_to_json(branch.node);
        j["answers"].push_back(std::move(jb));
    }
    return j;
}

TreeNode node_from_json(const json& j, const std::string& path) {
    if (!j.is_object()) throw SchemaViolation(path, "node must be an object");
    TreeNode node;
    if (j.contains("label")) {
        if (j.contains("question") || j.contains("answers"))
            throw SchemaViolation(path, "node mixes leaf and question keys");
        if (!j["label"].is_string() || j["label"].get<std::string>().empty())
            throw SchemaViolation(path + "/label", "label must be a non-empty string");
        node.label = j["label"].get<std::string>();
        return node;
    }
    if (!j.contains("question") || !j["question"].is_string())
        throw SchemaViolation(path + "/question", "question must be a string");
    if (!j.contains("answers") || !j["answers"].is_array())
        throw SchemaViolation(path + "/answers", "answers must be an array");
    node.question = j["question"].get<std::string>();
    const auto& answers = j["answers"];
    if (answers.size() < 2)
        throw SchemaViolation(path + "/answers",
                              "question node needs >= 2 answers, got " +
                                  std::to_string(answers.size()));
    for (std::size_t i = 0; i < answers.size(); ++i) {
        std::string apath = path + "/answers/" + std::to_string(i);
        const auto& ja = answers[i];
        if (!ja.is_object() || !ja.contains("text") || !ja["text"].is_string() ||
            ja["text"].get<std::string>().empty())
            throw SchemaViolation(apath + "/text", "text must be a non-empty string");
        if (!ja.contains("node"))
            throw SchemaViolation(apath + "/node", "missing child node");
        AnswerBranch branch;
        branch.text = ja["text"].get<std::string>();
        branch.node = node_from_json(ja["node"], apath + "/node");
        node.answers.push_back(std::move(branch));
    }
    return node;
}

}  // namespace

std::string serialize_tree(const DecisionTree& tree) {
    ordered_json doc;
    doc["taxonomy_id"] = tree.taxonomy_id;
    doc["approach"] = to_string(tree.approach);
    doc["builder_metadata"] = {
        {"model_id", tree.builder_metadata.model_id},
        {"temperature", tree.builder_metadata.temperature},
        {"candidates_per_node", tree.builder_metadata.candidates_per_node},
        {"run_id", tree.builder_metadata.run_id},
    };
    doc["root"] = node_to_json(tree.root);
    return doc.dump(2) + "\n";
}

DecisionTree deserialize_tree(const std::string& bytes) {
    json doc;
    try {
        doc = json::parse(bytes);
    } catch (const json::parse_error& e) {
        throw SchemaViolation("/", std::string("not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw SchemaViolation("/", "document must be an object");
    DecisionTree tree;
    if (!doc.contains("taxonomy_id") || !doc["taxonomy_id"].is_string())
        throw SchemaViolation("/taxonomy_id", "must be a string");
    tree.taxonomy_id = doc["taxonomy_id"].get<std::string>();
    if (!doc.contains("approach") || !doc["approach"].is_string())
        throw SchemaViolation("/approach", "must be a string");
    try {
        tree.approach = strategy_from_string(doc["approach"].get<std::string>());
    } catch (const ConfigError& e) {
        throw SchemaViolation("/approach", e.what());
    }
    if (doc.contains("builder_metadata")) {
        const auto& meta = doc["builder_metadata"];
        if (!meta.is_object()) throw SchemaViolation("/builder_metadata", "must be an object");
        tree.builder_metadata.model_id = meta.value("model_id", "");
        tree.builder_metadata.temperature = meta.value("temperature", 0.0);
        tree.builder_metadata.candidates_per_node = meta.value("candidates_per_node", 0);
        tree.builder_metadata.run_id = meta.value("run_id", "");
    }
    if (!doc.contains("root")) throw SchemaViolation("/root", "missing root node");
    tree.root = node_from_json(doc["root"], "/root");
    return tree;
}

DecisionTree load_tree(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open tree file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return deserialize_tree(buf.str());
}

void save_tree(const DecisionTree& tree, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write tree file: " + path.string());
    out << serialize_tree(tree);
}

namespace {

std::string dot_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out;
}

void walk_dot(const TreeNode& node, int& next_id, int my_id, std::ostream& out) {
    if (node.is_leaf()) {
        out << "  n" << my_id << " [shape=box,label=\"" << dot_escape(node.label)
            << "\"];\n";
        return;
    }
    out << "  n" << my_id << " [label=\"" << dot_escape(node.question) << "\"];\n";
    for (const auto& branch : node.answers) {
        int child_id = next_id++;
        out << "  n" << my_id << " -> n" << child_id << " [label=\""
            << dot_escape(branch.text) << "\"];\n";
        walk_dot(branch.node, next_id, child_id, out);
    }
}

}  // namespace

std::string to_dot(const DecisionTree& tree) {
    std::ostringstream out;
    out << "digraph tree {\n  rankdir=TB;\n";
    int next_id = 1;
    walk_dot(tree.root, next_id, 0, out);
    out << "}\n";
    return out.str();
}

}  // namespace treescheme

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "treescheme/annotator.hpp"
#include "treescheme/taxonomy.hpp"
#include "treescheme/tree.hpp"

namespace ts_test {

inline treescheme::TaxonomySpec make_taxonomy(const std::vector<std::string>& names,
                                              bool with_frequencies = false) {
    treescheme::TaxonomySpec t;
    t.id = "toy";
    double remaining = 1.0;
    for (std::size_t i = 0; i < names.size(); ++i) {
        treescheme::ClassSpec c;
        c.name = names[i];
        c.definition = "Definition of " + names[i] + ".";
        c.examples = {"An example of " + names[i] + "."};
        if (with_frequencies) {
            double f = i + 1 == names.size()
                           ? remaining
                           : remaining / static_cast<double>(names.size() - i) *
                                 (i % 2 ? 1.4 : 0.6);
            c.frequency = f;
            remaining -= f;
        }
        t.classes.push_back(std::move(c));
    }
    t.validate();
    return t;
}

inline treescheme::TreeNode leaf(const std::string& label) {
    treescheme::TreeNode node;
    node.label = label;
    return node;
}

inline treescheme::TreeNode node(
    const std::string& question,
    std::vector<std::pair<std::string, treescheme::TreeNode>> answers) {
    treescheme::TreeNode n;
    n.question = question;
    for (auto& [text, child] : answers)
        n.answers.push_back(treescheme::AnswerBranch{text, std::move(child)});
    return n;
}

inline treescheme::DecisionTree make_tree(treescheme::TreeNode root,
                                          const std::string& taxonomy_id = "toy") {
    treescheme::DecisionTree tree;
    tree.root = std::move(root);
    tree.taxonomy_id = taxonomy_id;
    tree.approach = treescheme::Strategy::split_select;
    tree.builder_metadata.model_id = "fixture";
    return tree;
}

/// Gold/pred pairs to records; pred == "⊥" marks the record failed.
inline std::vector<treescheme::AnnotationRecord> records_from(
    const std::vector<std::string>& gold, const std::vector<std::string>& pred) {
    std::vector<treescheme::AnnotationRecord> records;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        treescheme::AnnotationRecord r;
        r.dialog_id = "d1";
        r.turn_index = static_cast<int>(i);
        r.gold = gold[i];
        r.predicted = pred[i];
        r.failed = pred[i] == treescheme::kFailedLabel;
        records.push_back(std::move(r));
    }
    return records;
}

}  // namespace ts_test

#include "treescheme/templates.hpp"

#include <algorithm>
#include <fstream>
#include <regex>
#include <sstream>

#include "treescheme/errors.hpp"

namespace treescheme {

namespace {

const std::regex kSlotPattern{R"(\{[A-Z][A-Z0-9_]*\})"};

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw TemplateError("cannot open template file: " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void require_slots(const std::string& text, const std::filesystem::path& file,
                   const std::vector<std::string>& slots) {
    for (const auto& slot : slots) {
        if (text.find("{" + slot + "}") == std::string::npos)
            throw TemplateError(file.string() + " lacks mandatory slot {" + slot + "}");
    }
}

}  // namespace

std::string render_template(const std::string& text,
                            const std::map<std::string, std::string>& slots) {
    std::string out;
    out.reserve(text.size());
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t open = text.find('{', pos);
        if (open == std::string::npos) {
            out.append(text, pos, std::string::npos);
            break;
        }
        out.append(text, pos, open - pos);
        std::size_t close = text.find('}', open);
        bool replaced = false;
        if (close != std::string::npos) {
            std::string key = text.substr(open + 1, close - open - 1);
            auto it = slots.find(key);
            if (it != slots.end()) {
                out += it->second;
                pos = close + 1;
                replaced = true;
            }
        }
        if (!replaced) {
            out += '{';
            pos = open + 1;
        }
    }
    return out;
}

std::vector<std::string> find_unresolved_slots(const std::string& text) {
    std::vector<std::string> out;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), kSlotPattern);
         it != std::sregex_iterator(); ++it) {
        std::string slot = it->str();
        slot = slot.substr(1, slot.size() - 2);
        if (std::find(out.begin(), out.end(), slot) == out.end()) out.push_back(slot);
    }
    return out;
}

TemplateSet TemplateSet::load(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir))
        throw TemplateError("template directory not found: " + dir.string());

    TemplateSet set;
    set.split_base = read_text_file(dir / "split_base.txt");
    require_slots(set.split_base, dir / "split_base.txt",
                  {"CLASS_TABLE", "GROUPING_RULES", "OUTPUT_SCHEMA"});

    for (Strategy strategy :
         {Strategy::yes_no, Strategy::open_binary, Strategy::open_nonbinary,
          Strategy::split_select, Strategy::freq_split_select}) {
        auto file = dir / ("rules_" + to_string(strategy) + ".txt");
        set.rules[strategy] = read_text_file(file);
        if (strategy == Strategy::freq_split_select)
            require_slots(set.rules[strategy], file, {"MOST_FREQUENT_CLASS"});
    }

    set.output_schema = read_text_file(dir / "output_schema.txt");
    set.score = read_text_file(dir / "score.txt");
    require_slots(set.score, dir / "score.txt", {"QUESTION", "GROUPS"});
    set.annotate = read_text_file(dir / "annotate.txt");
    require_slots(set.annotate, dir / "annotate.txt",
                  {"CONTEXT", "UTTERANCE", "QUESTION", "OPTIONS"});
    return set;
}

}  // namespace treescheme

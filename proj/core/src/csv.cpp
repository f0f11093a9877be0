#include "csv.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "treescheme/errors.hpp"

namespace treescheme::csv {

int Table::column(const std::string& name) const {
    auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<int>(it - header.begin());
}

Table parse(const std::string& text) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::size_t> record_lines;

    std::vector<std::string> current;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    std::size_t line = 1;
    std::size_t record_start_line = 1;

    auto end_field = [&] {
        current.push_back(field);
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        end_field();
        // skip records that are entirely empty (blank lines)
        bool all_empty = std::all_of(current.begin(), current.end(),
                                     [](const std::string& f) { return f.empty(); });
        if (!(current.size() == 1 && all_empty)) {
            records.push_back(std::move(current));
            record_lines.push_back(record_start_line);
        }
        current.clear();
        record_start_line = line;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field += c;
            }
        } else if (c == '"' && !field_started) {
            in_quotes = true;
            field_started = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\r') {
            // swallow; \r\n handled by the \n branch
        } else if (c == '\n') {
            ++line;
            end_record();
        } else {
            field += c;
            field_started = true;
        }
    }
    if (in_quotes) throw MalformedRow(line, "unterminated quoted field");
    if (field_started || !current.empty() || !field.empty()) end_record();

    if (records.empty()) throw MalformedRow(1, "empty CSV: header row is mandatory");

    Table t;
    t.header = records.front();
    for (std::size_t r = 1; r < records.size(); ++r) {
        auto& row = records[r];
        if (row.size() > t.header.size())
            throw MalformedRow(record_lines[r], "more fields than header columns");
        row.resize(t.header.size());
        t.rows.push_back(std::move(row));
        t.row_lines.push_back(record_lines[r]);
    }
    return t;
}

Table read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

std::string escape_field(const std::string& field) {
    if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

std::string join_row(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out += ',';
        out += escape_field(fields[i]);
    }
    return out;
}

}  // namespace treescheme::csv

#pragma once

// Internal RFC4180-style CSV reader/writer: comma separated, double-quote
// escaping, UTF-8 passthrough, mandatory header row. Not installed.

#include <cstddef>
#include <string>
#include <vector>

namespace treescheme::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;  // each padded to header size
    /// 1-based source line of each row (header is line 1).
    std::vector<std::size_t> row_lines;

    int column(const std::string& name) const;  // -1 if absent
};

Table parse(const std::string& text);
Table read_file(const std::string& path);

std::string escape_field(const std::string& field);
std::string join_row(const std::vector<std::string>& fields);

}  // namespace treescheme::csv

#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace bislab::csv {

using Row = std::vector<std::string>;

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);
double parse_double(std::string_view text);
long long parse_int(std::string_view text);

/// RFC 4180 style: fields containing ',', '"' or newlines are quoted.
std::string format_row(const Row& row);
Row parse_row(std::string_view line);

struct Table {
    Row header;
    std::vector<Row> rows;

    /// Column position by name; throws std::out_of_range when missing.
    std::size_t column(std::string_view name) const;
};

Table read_table(std::istream& in);
Table read_table_file(const std::string& path);
void write_table(std::ostream& out, const Table& table);

} // namespace bislab::csv

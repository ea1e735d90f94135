#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace povreg {

/// Plain string table used for every CSV the toolkit emits. Numbers are
/// formatted with the shortest representation that parses back to the same
/// double, so write -> read -> parse is exact.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add_row(std::vector<std::string> row);
    std::size_t column(const std::string& name) const;
    double number(std::size_t row, const std::string& column) const;

    std::string to_csv() const;
    static Table from_csv(const std::string& text);

    void write(const std::filesystem::path& path) const;
    static Table read(const std::filesystem::path& path);

    bool operator==(const Table&) const = default;
};

/// Shortest round-trip decimal representation.
std::string format_number(double value);

/// Fixed number of decimals, for human-facing tables.
std::string format_fixed(double value, int decimals);

double parse_number(const std::string& text);

}  // namespace povreg

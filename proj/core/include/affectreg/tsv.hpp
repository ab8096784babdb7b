#pragma once

#include <cstddef>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace affectreg {

// Formats a double with enough digits to round-trip exactly; all emitted
// files use this so reruns are byte-identical.
std::string format_double(double value);

std::vector<std::string> split_tab(std::string_view line);

// Line-oriented reader for tab-separated files with a header row.
// Tracks 1-based line numbers for diagnostics.
class TsvReader {
public:
    explicit TsvReader(const std::string& path);

    const std::vector<std::string>& header() const { return header_; }

    // Column index by name; nullopt when the header lacks it.
    std::optional<std::size_t> column(const std::string& name) const;

    // Reads the next data row. Returns false at end of file.
    bool next(std::vector<std::string>& row);

    std::size_t line_number() const { return line_number_; }
    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::ifstream in_;
    std::vector<std::string> header_;
    std::unordered_map<std::string, std::size_t> columns_;
    std::size_t line_number_ = 0;
};

class TsvWriter {
public:
    explicit TsvWriter(const std::string& path);
    void write_row(const std::vector<std::string>& fields);

private:
    std::ofstream out_;
    std::string path_;
};

} // namespace affectreg

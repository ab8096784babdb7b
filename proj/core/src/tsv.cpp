#include "affectreg/tsv.hpp"

#include "affectreg/errors.hpp"

#include <cstdio>

namespace affectreg {

std::string format_double(double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

std::vector<std::string> split_tab(std::string_view line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t tab = line.find('\t', start);
        if (tab == std::string_view::npos) {
            fields.emplace_back(line.substr(start));
            break;
        }
        fields.emplace_back(line.substr(start, tab - start));
        start = tab + 1;
    }
    return fields;
}

namespace {

// Strips a trailing \r so CRLF files parse the same as LF files.
void chomp(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

} // namespace

TsvReader::TsvReader(const std::string& path) : path_(path), in_(path) {
    if (!in_) {
        throw DataError("cannot open file: " + path);
    }
    std::string line;
    if (!std::getline(in_, line)) {
        throw DataError("empty file (missing header row): " + path);
    }
    chomp(line);
    line_number_ = 1;
    header_ = split_tab(line);
    for (std::size_t i = 0; i < header_.size(); ++i) {
        columns_.emplace(header_[i], i);
    }
}

std::optional<std::size_t> TsvReader::column(const std::string& name) const {
    auto it = columns_.find(name);
    if (it == columns_.end()) return std::nullopt;
    return it->second;
}

bool TsvReader::next(std::vector<std::string>& row) {
    std::string line;
    if (!std::getline(in_, line)) return false;
    chomp(line);
    ++line_number_;
    row = split_tab(line);
    return true;
}

TsvWriter::TsvWriter(const std::string& path) : out_(path), path_(path) {
    if (!out_) {
        throw DataError("cannot open file for writing: " + path);
    }
}

void TsvWriter::write_row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out_ << '\t';
        out_ << fields[i];
    }
    out_ << '\n';
    if (!out_) {
        throw DataError("write failed: " + path_);
    }
}

} // namespace affectreg

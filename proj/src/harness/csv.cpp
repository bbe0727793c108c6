// SPDX-License-Identifier: Apache-2.0
#include "robustlab/harness/csv.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "robustlab/error.hpp"

namespace robustlab::harness {

std::string format_number(double value) {
    if (std::isnan(value)) {
        return "nan";
    }
    if (std::isinf(value)) {
        return value > 0 ? "inf" : "-inf";
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", value);
    return buf;
}

std::string quote_field(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) {
        return std::string(field);
    }
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    out += '"';
    return out;
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {
    require(!header_.empty(), "csv header must not be empty");
}

CsvTable& CsvTable::add(std::string_view text) {
    current_.push_back(quote_field(text));
    return *this;
}

CsvTable& CsvTable::add(double value) {
    current_.push_back(format_number(value));
    return *this;
}

CsvTable& CsvTable::add(std::uint64_t value) {
    current_.push_back(std::to_string(value));
    return *this;
}

void CsvTable::end_row() {
    require(current_.size() == header_.size(), "csv row width " + std::to_string(current_.size()) +
                                                   " does not match header width " +
                                                   std::to_string(header_.size()));
    rows_.push_back(std::move(current_));
    current_.clear();
}

std::string CsvTable::str() const {
    std::string out;
    auto emit = [&out](const std::vector<std::string>& fields, bool quote) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i > 0) {
                out += ',';
            }
            out += quote ? quote_field(fields[i]) : fields[i];
        }
        out += "\r\n";
    };
    emit(header_, true);
    for (const auto& row : rows_) {
        emit(row, false);
    }
    return out;
}

void CsvTable::write(const std::filesystem::path& path) const {
    std::error_code ec;
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) {
            throw std::runtime_error("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
        }
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write '" + path.string() + "'");
    }
    out << str();
    if (!out) {
        throw std::runtime_error("write to '" + path.string() + "' failed");
    }
}

}  // namespace robustlab::harness

// SPDX-License-Identifier: Apache-2.0
//
// RFC-4180 CSV output with numbers at 6 significant digits.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace robustlab::harness {

/// "%.6g"; non-finite values print as nan, inf or -inf.
std::string format_number(double value);
/// Quotes a field holding a comma, quote, CR or LF; inner quotes are doubled.
std::string quote_field(std::string_view field);

class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header);

    CsvTable& add(std::string_view text);
    CsvTable& add(double value);
    CsvTable& add(std::uint64_t value);
    /// Closes the current row; throws ContractViolation if its width differs from the header.
    void end_row();

    std::string str() const;
    /// Creates parent directories; throws std::runtime_error when the file cannot be written.
    void write(const std::filesystem::path& path) const;

    std::size_t rows() const noexcept { return rows_.size(); }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
    std::vector<std::string> current_;
};

}  // namespace robustlab::harness

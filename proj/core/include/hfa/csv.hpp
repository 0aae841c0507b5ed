#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hfa::csv {

using Row = std::vector<std::string>;

/// RFC 4180 reader: quoted fields, doubled quotes, embedded newlines, CRLF.
/// Blank lines are skipped. Throws PositionedError(MetadataParse) on an
/// unterminated quote, positioned at the 1-based record number.
std::vector<Row> parse(std::string_view content);

/// Header-addressed view over parsed rows.
class Table {
public:
    static Table parse(std::string_view content);

    const Row& header() const { return header_; }
    std::size_t size() const { return rows_.size(); }
    const Row& row(std::size_t i) const { return rows_[i]; }

    std::optional<std::size_t> column(std::string_view name) const;
    bool has_columns(const std::vector<std::string_view>& names) const;
    /// Field by column name; empty string when the row is short.
    std::string get(std::size_t row, std::string_view name) const;

private:
    Row header_;
    std::vector<Row> rows_;
};

std::string escape(std::string_view field);
std::string format_row(const Row& row);

}  // namespace hfa::csv

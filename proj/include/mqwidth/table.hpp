// Copyright 2026 The mqwidth Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Column-ordered result tables, written as CSV or as a JSON array of row
// objects. Number formatting goes through std::to_chars (shortest
// round-trip, '.' separator, locale independent).

#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <variant>
#include <vector>

#include "json.hpp"
#include "mqwidth/error.hpp"

namespace mqwidth::io {

/// Empty cell (monostate) is written as an empty CSV field and JSON null.
using Cell = std::variant<std::monostate, double, std::int64_t, std::string>;

inline std::string format_number(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

class Table {
public:
    Table() = default;
    explicit Table(std::vector<std::string> columns) : columns_(std::move(columns)) {}

    const std::vector<std::string>& columns() const noexcept { return columns_; }
    const std::vector<std::vector<Cell>>& rows() const noexcept { return rows_; }
    std::size_t size() const noexcept { return rows_.size(); }

    void add_row(std::vector<Cell> row) {
        detail::require(row.size() == columns_.size(), "Table: row width does not match header");
        rows_.push_back(std::move(row));
    }

    std::size_t column_index(std::string_view name) const {
        for (std::size_t i = 0; i < columns_.size(); ++i)
            if (columns_[i] == name) return i;
        throw ValidationError("table has no column '" + std::string(name) + "'");
    }

    bool has_column(std::string_view name) const {
        for (const auto& c : columns_)
            if (c == name) return true;
        return false;
    }

    /// Numeric value of a cell; empty cells give NaN.
    double number(std::size_t row, std::size_t col) const {
        const Cell& c = rows_.at(row).at(col);
        if (const auto* d = std::get_if<double>(&c)) return *d;
        if (const auto* i = std::get_if<std::int64_t>(&c)) return static_cast<double>(*i);
        if (std::holds_alternative<std::monostate>(c)) return std::nan("");
        throw ValidationError("column '" + columns_.at(col) + "' is not numeric");
    }

    void write_csv(std::ostream& out) const {
        write_csv_line(out, columns_);
        std::vector<std::string> fields(columns_.size());
        for (const auto& row : rows_) {
            for (std::size_t i = 0; i < row.size(); ++i) fields[i] = to_text(row[i]);
            write_csv_line(out, fields);
        }
    }

    void write_json(std::ostream& out) const {
        nlohmann::ordered_json doc = nlohmann::ordered_json::array();
        for (const auto& row : rows_) {
            nlohmann::ordered_json obj = nlohmann::ordered_json::object();
            for (std::size_t i = 0; i < row.size(); ++i) obj[columns_[i]] = to_json(row[i]);
            doc.push_back(std::move(obj));
        }
        out << doc.dump(2) << '\n';
    }

private:
    static std::string to_text(const Cell& c) {
        if (const auto* d = std::get_if<double>(&c)) return format_number(*d);
        if (const auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
        if (const auto* s = std::get_if<std::string>(&c)) return *s;
        return {};
    }

    static nlohmann::ordered_json to_json(const Cell& c) {
        if (const auto* d = std::get_if<double>(&c)) {
            if (!std::isfinite(*d)) return nullptr;
            return *d;
        }
        if (const auto* i = std::get_if<std::int64_t>(&c)) return *i;
        if (const auto* s = std::get_if<std::string>(&c)) return *s;
        return nullptr;
    }

    static void write_csv_line(std::ostream& out, const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out << ',';
            const auto& f = fields[i];
            if (f.find_first_of(",\"\n\r") != std::string::npos) {
                out << '"';
                for (char ch : f) {
                    if (ch == '"') out << '"';
                    out << ch;
                }
                out << '"';
            } else {
                out << f;
            }
        }
        out << '\n';
    }

    std::vector<std::string> columns_;
    std::vector<std::vector<Cell>> rows_;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line, int line_no) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    if (quoted) throw ValidationError("line " + std::to_string(line_no) + ": unterminated quote");
    fields.push_back(std::move(cur));
    return fields;
}

inline Cell parse_cell(const std::string& text) {
    if (text.empty()) return std::monostate{};
    double value = 0.0;
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    const auto res = std::from_chars(first, last, value);
    if (res.ec == std::errc{} && res.ptr == last) return value;
    return text;
}

}  // namespace detail

/// Reads a CSV table with a header row. Numeric-looking fields become
/// doubles, empty fields stay empty, anything else is kept as text. Ragged
/// rows are rejected with their line number.
inline Table read_csv(std::istream& in) {
    std::string line;
    int line_no = 0;
    Table table;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto fields = detail::split_csv_line(line, line_no);
        if (!have_header) {
            table = Table(std::move(fields));
            have_header = true;
            continue;
        }
        if (fields.size() != table.columns().size()) {
            throw ValidationError("line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(table.columns().size()) + " fields, found " +
                                  std::to_string(fields.size()));
        }
        std::vector<Cell> row;
        row.reserve(fields.size());
        for (const auto& f : fields) row.push_back(detail::parse_cell(f));
        table.add_row(std::move(row));
    }
    if (!have_header) throw ValidationError("line 1: empty table, header row expected");
    return table;
}

}  // namespace mqwidth::io

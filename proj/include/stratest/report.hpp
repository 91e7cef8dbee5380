#pragma once

// Tabular output shared by every command: fixed-column text, markdown,
// CSV and JSON renderings of one Table, and a schema-driven CSV reader so
// every emitted CSV table can be parsed back.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "stratest/domain.hpp"
#include "stratest/error.hpp"
#include "stratest/io.hpp"

namespace stratest {

enum class ColumnType { text, real, integer };

struct Column {
  std::string name;
  ColumnType type = ColumnType::text;

  bool operator==(const Column&) const = default;
};

using Cell = std::variant<std::monostate, std::string, double, Count>;

struct Table {
  std::string title;
  std::vector<Column> columns;
  std::vector<std::vector<Cell>> rows;
  std::vector<std::string> notes;  // rendered below text/markdown tables, omitted from CSV

  void add_row(std::vector<Cell> row) {
    if (row.size() != columns.size()) {
      throw InputError("table '" + title + "': row width does not match the columns");
    }
    rows.push_back(std::move(row));
  }
};

enum class Format { text, csv, markdown, json };

inline std::optional<Format> parse_format(std::string_view s) {
  if (s == "text") return Format::text;
  if (s == "csv") return Format::csv;
  if (s == "markdown" || s == "md") return Format::markdown;
  if (s == "json") return Format::json;
  return std::nullopt;
}

inline std::string_view format_extension(Format f) {
  switch (f) {
    case Format::text: return "txt";
    case Format::csv: return "csv";
    case Format::markdown: return "md";
    case Format::json: return "json";
  }
  return "txt";
}

/// Significant digits for rendered numbers.
inline constexpr int kDefaultDigits = 6;
inline constexpr int kFullDigits = 17;

inline std::string format_number(double v, int digits) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, digits);
  return std::string(buf, ptr);
}

inline std::string format_cell(const Cell& c, int digits, std::string_view empty = "") {
  return std::visit(
      [&](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return std::string(empty);
        } else if constexpr (std::is_same_v<T, std::string>) {
          return v;
        } else if constexpr (std::is_same_v<T, double>) {
          return format_number(v, digits);
        } else {
          return std::to_string(v);
        }
      },
      c);
}

inline std::string render_text(const Table& t, int digits = kDefaultDigits) {
  std::vector<std::size_t> width(t.columns.size());
  std::vector<std::vector<std::string>> cells;
  for (std::size_t c = 0; c < t.columns.size(); ++c) width[c] = t.columns[c].name.size();
  for (const auto& row : t.rows) {
    auto& out = cells.emplace_back();
    for (std::size_t c = 0; c < row.size(); ++c) {
      out.push_back(format_cell(row[c], digits, "-"));
      width[c] = std::max(width[c], out.back().size());
    }
  }
  std::ostringstream os;
  if (!t.title.empty()) os << t.title << "\n\n";
  auto line = [&](auto&& get) {
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
      const std::string s = get(c);
      const bool left = t.columns[c].type == ColumnType::text;
      if (c) os << "  ";
      const std::string pad(width[c] - s.size(), ' ');
      os << (left ? s + pad : pad + s);
    }
    os << '\n';
  };
  line([&](std::size_t c) { return t.columns[c].name; });
  line([&](std::size_t c) { return std::string(width[c], '-'); });
  for (const auto& row : cells) line([&](std::size_t c) { return row[c]; });
  if (!t.notes.empty()) os << '\n';
  for (const auto& n : t.notes) os << n << '\n';
  return os.str();
}

inline std::string render_markdown(const Table& t, int digits = kDefaultDigits) {
  std::ostringstream os;
  if (!t.title.empty()) os << "### " << t.title << "\n\n";
  os << '|';
  for (const auto& c : t.columns) os << ' ' << c.name << " |";
  os << "\n|";
  for (const auto& c : t.columns) os << (c.type == ColumnType::text ? " --- |" : " ---: |");
  os << '\n';
  for (const auto& row : t.rows) {
    os << '|';
    for (const auto& cell : row) os << ' ' << format_cell(cell, digits, "-") << " |";
    os << '\n';
  }
  if (!t.notes.empty()) os << '\n';
  for (const auto& n : t.notes) os << "- " << n << '\n';
  return os.str();
}

inline std::string render_csv(const Table& t, int digits = kDefaultDigits) {
  std::ostringstream os;
  for (std::size_t c = 0; c < t.columns.size(); ++c) os << (c ? "," : "") << t.columns[c].name;
  os << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      os << (c ? "," : "") << csv::quote(format_cell(row[c], digits));
    }
    os << '\n';
  }
  return os.str();
}

inline nlohmann::json table_to_json(const Table& t) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : t.rows) {
    nlohmann::json obj = nlohmann::json::object();
    for (std::size_t c = 0; c < row.size(); ++c) {
      const auto& name = t.columns[c].name;
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>) {
              obj[name] = nullptr;
            } else {
              obj[name] = v;
            }
          },
          row[c]);
    }
    rows.push_back(std::move(obj));
  }
  nlohmann::json j{{"title", t.title}, {"rows", rows}};
  if (!t.notes.empty()) j["notes"] = t.notes;
  return j;
}

inline std::string render(const Table& t, Format f, bool full_precision) {
  const int digits = full_precision ? kFullDigits : kDefaultDigits;
  switch (f) {
    case Format::text: return render_text(t, digits);
    case Format::markdown: return render_markdown(t, digits);
    case Format::csv: return render_csv(t, digits);
    case Format::json: {
      auto j = table_to_json(t);
      return j.dump(2) + "\n";
    }
  }
  return {};
}

/// Parses a CSV table emitted by render_csv back into cells of the given
/// column types. Empty cells become monostate.
inline Table parse_csv_table(std::string_view text, const std::vector<Column>& columns) {
  const auto doc = csv::parse(text);
  if (doc.header.size() != columns.size()) throw InputError("table CSV: column count mismatch");
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (doc.header[c] != columns[c].name) {
      throw InputError("table CSV: expected column '" + columns[c].name + "', found '" +
                       doc.header[c] + "'");
    }
  }
  Table t;
  t.columns = columns;
  for (std::size_t r = 0; r < doc.rows.size(); ++r) {
    std::vector<Cell> row;
    for (std::size_t c = 0; c < columns.size(); ++c) {
      const auto& s = doc.rows[r][c];
      if (s.empty()) {
        row.emplace_back(std::monostate{});
      } else if (columns[c].type == ColumnType::real) {
        row.emplace_back(csv::to_double(s, doc.line_numbers[r], columns[c].name));
      } else if (columns[c].type == ColumnType::integer) {
        row.emplace_back(csv::to_count(s, doc.line_numbers[r], columns[c].name));
      } else {
        row.emplace_back(s);
      }
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace stratest

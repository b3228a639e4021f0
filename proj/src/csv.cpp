#include "mecrl/csv.hpp"

#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>

#include "mecrl/types.hpp"

namespace mecrl {

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

CsvTable parse_csv(std::istream& in, const std::string& origin) {
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  if (text.empty()) {
    throw DataError(origin + ": empty input, expected a header row");
  }

  CsvTable table;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool row_has_content = false;  // distinguishes "" from a lone empty field
  std::size_t line = 1;
  std::size_t row_start_line = 1;
  bool have_header = false;

  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    row_has_content = true;
  };
  auto end_row = [&] {
    if (!row_has_content && field.empty() && row.empty()) return;  // blank line
    end_field();
    if (!have_header) {
      table.header = std::move(row);
      have_header = true;
    } else {
      if (row.size() != table.header.size()) {
        throw DataError(origin + ":" + std::to_string(row_start_line) +
                        ": expected " + std::to_string(table.header.size()) +
                        " fields, got " + std::to_string(row.size()));
      }
      table.rows.push_back(std::move(row));
      table.line_numbers.push_back(row_start_line);
    }
    row.clear();
    row_has_content = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') break;  // CRLF
        field.push_back(c);
        break;
      case '\n':
        end_row();
        ++line;
        row_start_line = line;
        break;
      default:
        field.push_back(c);
    }
  }
  if (in_quotes) {
    throw DataError(origin + ":" + std::to_string(row_start_line) +
                    ": unterminated quoted field");
  }
  if (!field.empty() || row_has_content) end_row();
  if (!have_header) {
    throw DataError(origin + ": empty input, expected a header row");
  }
  return table;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) {
    throw DataError(path + ": cannot open file");
  }
  return parse_csv(in, path);
}

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    const std::string& f = fields[i];
    const bool needs_quotes =
        f.find_first_of(",\"\n\r") != std::string::npos;
    if (!needs_quotes) {
      out << f;
      continue;
    }
    out << '"';
    for (char c : f) {
      if (c == '"') out << '"';
      out << c;
    }
    out << '"';
  }
  out << '\n';
}

std::string format_double(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

}  // namespace mecrl


#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mecrl {

// A parsed delimited file: header row plus data rows, with the 1-based
// source line number of each row retained for diagnostics.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;

  // Index of a header column, or -1 when absent.
  int column(const std::string& name) const;
};

// RFC 4180-style reader: quoted fields, doubled-quote escapes, LF or CRLF
// line ends. A header row is required. Throws DataError on a missing file
// or structurally malformed content (unterminated quote, ragged row).
CsvTable read_csv(const std::string& path);
CsvTable parse_csv(std::istream& in, const std::string& origin);

// Writes one row, quoting fields only where needed. Deterministic output.
void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

// Shortest round-trip decimal form of a double (std::to_chars), with
// "inf"/"-inf"/"nan" for non-finite values. Used for all numeric output so
// that repeated runs are byte-identical.
std::string format_double(double value);

}  // namespace mecrl

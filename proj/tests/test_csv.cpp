#include "mecrl/csv.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <sstream>

#include "mecrl/types.hpp"

using namespace mecrl;

TEST_CASE("csv round trip with quoting") {
  std::ostringstream out;
  write_csv_row(out, {"id", "name", "note"});
  write_csv_row(out, {"1", "plain", "a,b"});
  write_csv_row(out, {"2", "say \"hi\"", "line\nbreak"});

  std::istringstream in(out.str());
  CsvTable t = parse_csv(in, "<mem>");
  REQUIRE(t.header == std::vector<std::string>{"id", "name", "note"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][2] == "a,b");
  CHECK(t.rows[1][1] == "say \"hi\"");
  CHECK(t.rows[1][2] == "line\nbreak");
}

TEST_CASE("crlf line ends and line-number tracking") {
  std::istringstream in("x,y\r\n1,2\r\n3,4\r\n");
  CsvTable t = parse_csv(in, "<mem>");
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[1][0] == "3");
  CHECK(t.line_numbers == std::vector<std::size_t>{2, 3});
  CHECK(t.column("y") == 1);
  CHECK(t.column("z") == -1);
}

TEST_CASE("malformed csv is rejected") {
  std::istringstream ragged("a,b\n1\n");
  CHECK_THROWS_AS(parse_csv(ragged, "<mem>"), DataError);

  std::istringstream unterminated("a,b\n\"open,2\n");
  CHECK_THROWS_AS(parse_csv(unterminated, "<mem>"), DataError);

  CHECK_THROWS_AS(read_csv("/nonexistent/file.csv"), DataError);
}

TEST_CASE("header-only input yields zero rows") {
  std::istringstream in("a,b\n");
  CsvTable t = parse_csv(in, "<mem>");
  CHECK(t.rows.empty());
}

TEST_CASE("empty input is rejected (header required)") {
  std::istringstream in("");
  CHECK_THROWS_AS(parse_csv(in, "<mem>"), DataError);
}

TEST_CASE("doubles format with shortest round-trip text") {
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(20.0) == "20");
  CHECK(format_double(1.0 / 3.0) == "0.3333333333333333");
  CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");
}

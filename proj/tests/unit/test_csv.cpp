#include <cmath>
#include <limits>
#include <random>

#include "ctdc/csv.hpp"
#include "ctdc/error.hpp"
#include "doctest.h"

using namespace ctdc;

TEST_CASE("quoted fields, CRLF and BOM") {
  const CsvTable t = parse_csv("\xEF\xBB\xBFid,name,note\r\n1,\"a, b\",\"say \"\"hi\"\"\"\r\n\r\n2,c,\"two\nlines\"\n");
  CHECK(t.header == std::vector<std::string>{"id", "name", "note"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][1] == "a, b");
  CHECK(t.rows[0][2] == "say \"hi\"");
  CHECK(t.rows[1][2] == "two\nlines");
  CHECK(t.lines[0] == 2);
  CHECK(t.lines[1] == 4);
  CHECK(t.column("note") == std::optional<std::size_t>(2));
  CHECK_FALSE(t.column("missing"));
}

TEST_CASE("malformed tables are schema errors") {
  auto kind = [](const char* text) {
    try {
      parse_csv(text);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::usage;
  };
  CHECK(kind("a,b\n1,2,3\n") == ErrorKind::schema);
  CHECK(kind("a,b\n1,\"2\n") == ErrorKind::schema);
  CHECK(kind("") == ErrorKind::schema);
  const CsvTable t = parse_csv("a,b\n1,2\n");
  CHECK_THROWS_AS(t.require_column("c", "test file"), Error);
}

TEST_CASE("escaping round trips") {
  const std::vector<std::string> fields{"plain", "with,comma", "with \"quote\"", "new\nline", ""};
  const std::string text = csv_row({"a", "b", "c", "d", "e"}) + csv_row(fields);
  const CsvTable t = parse_csv(text);
  REQUIRE(t.rows.size() == 1);
  CHECK(t.rows[0] == fields);
  CHECK(csv_escape("x") == "x");
  CHECK(csv_escape("x,y") == "\"x,y\"");
}

TEST_CASE("doubles print in shortest round-trip form") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double x = u(rng) * std::pow(10.0, static_cast<int>(i % 40) - 20);
    CHECK(parse_double(format_double(x), "x") == x);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(32.9) == "32.9");
  CHECK(format_double(3.0) == "3");
  CHECK(format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
}

TEST_CASE("number parsing") {
  CHECK(parse_double(" 7.3 ", "t") == 7.3);
  CHECK(parse_double("1e-3", "t") == 0.001);
  CHECK(parse_integer("21", "s") == 21);
  CHECK_THROWS_AS(parse_double("abc", "t"), Error);
  CHECK_THROWS_AS(parse_double("1.5x", "t"), Error);
  CHECK_THROWS_AS(parse_integer("2.5", "s"), Error);
  CHECK_THROWS_AS(parse_integer("", "s"), Error);
}

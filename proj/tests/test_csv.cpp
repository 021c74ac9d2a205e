#include <catch2/catch_amalgamated.hpp>

#include <cholcast/csv.hpp>

using namespace cholcast;

TEST_CASE("csv parses header and rows with line numbers") {
    const auto t = csv::parse_string("a,b,c\n1,2,3\n\n4,5,6\n", "t.csv");
    REQUIRE(t.header == std::vector<std::string>{"a", "b", "c"});
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0] == std::vector<std::string>{"1", "2", "3"});
    CHECK(t.rows[1] == std::vector<std::string>{"4", "5", "6"});
    CHECK(t.line_numbers == std::vector<size_t>{2, 4});
    CHECK(t.column("b") == 1);
    CHECK(t.column("missing") == -1);
}

TEST_CASE("csv strips carriage returns and keeps empty fields") {
    const auto t = csv::parse_string("x,y\r\n,7\r\n", "t.csv");
    CHECK(t.rows[0][0].empty());
    CHECK(t.rows[0][1] == "7");
}

TEST_CASE("csv rejects ragged rows and empty input") {
    CHECK_THROWS_WITH(csv::parse_string("a,b\n1\n", "t.csv"),
                      Catch::Matchers::ContainsSubstring("line 2"));
    CHECK_THROWS_AS(csv::parse_string("a,b\n1,2,3\n", "t.csv"), Error);
    CHECK_THROWS_AS(csv::parse_string("", "t.csv"), Error);
}

TEST_CASE("parse_double is strict") {
    CHECK(csv::parse_double("2.5", "t", 1) == 2.5);
    CHECK(csv::parse_double("-0.125", "t", 1) == -0.125);
    CHECK_THROWS_AS(csv::parse_double("", "t", 1), Error);
    CHECK_THROWS_AS(csv::parse_double("1.2x", "t", 1), Error);
    CHECK_THROWS_AS(csv::parse_double(" 1.2", "t", 1), Error);
}

TEST_CASE("file write and read round trip") {
    const std::string path = "csv_roundtrip_test.csv";
    csv::write_file(path, "h1,h2\n5,6\n");
    CHECK(csv::read_file(path) == "h1,h2\n5,6\n");
    const auto t = csv::parse_file(path);
    CHECK(t.rows.size() == 1);
    std::remove(path.c_str());
    CHECK_THROWS_AS(csv::parse_file("does_not_exist.csv"), Error);
    CHECK_THROWS_AS(csv::read_file("does_not_exist.csv"), Error);
}

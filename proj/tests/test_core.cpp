#include <catch2/catch_amalgamated.hpp>

#include <cholcast/core.hpp>

using namespace cholcast;

TEST_CASE("date parse and format round trip") {
    for (const char* s : {"1970-01-01", "2017-04-15", "2016-02-29", "2000-02-29", "1999-12-31",
                          "2017-12-31", "2018-01-01"}) {
        CHECK(Date::parse(s).str() == s);
    }
    CHECK(Date::parse("1970-01-01").raw() == 0);
    CHECK(Date::parse("1970-01-02").raw() == 1);
    CHECK(Date::parse("1969-12-31").raw() == -1);
}

TEST_CASE("date arithmetic and ordering") {
    const Date a = Date::parse("2017-02-27");
    CHECK((a + 2).str() == "2017-03-01");   // non-leap year
    CHECK((a - 1).str() == "2017-02-26");
    CHECK(Date::parse("2016-02-28") + 1 == Date::parse("2016-02-29"));
    CHECK(Date::parse("2017-05-01") - Date::parse("2017-04-15") == 16);
    CHECK(Date::parse("2017-04-15") < Date::parse("2017-04-16"));
    CHECK(Date::parse("2017-04-15") <= Date::parse("2017-04-15"));
}

TEST_CASE("date parse rejects malformed input") {
    for (const char* s : {"2017-4-15", "2017/04/15", "20170415", "2017-13-01", "2017-00-10",
                          "2017-02-29", "2017-04-31", "2017-04-00", "abcd-ef-gh", ""}) {
        CHECK_THROWS_AS(Date::parse(s), Error);
    }
}

TEST_CASE("date range containment") {
    const DateRange r{Date::parse("2017-08-16"), Date::parse("2017-08-31")};
    CHECK(r.contains(Date::parse("2017-08-16")));
    CHECK(r.contains(Date::parse("2017-08-31")));
    CHECK_FALSE(r.contains(Date::parse("2017-08-15")));
    CHECK_FALSE(r.contains(Date::parse("2017-09-01")));
    CHECK(r.n_days() == 16);
}

TEST_CASE("error kinds carry exit codes") {
    try {
        fail_usage("x");
    } catch (const Error& e) {
        CHECK(static_cast<int>(e.kind()) == 1);
    }
    try {
        fail_data("x");
    } catch (const Error& e) {
        CHECK(static_cast<int>(e.kind()) == 2);
    }
    try {
        fail_internal("x");
    } catch (const Error& e) {
        CHECK(static_cast<int>(e.kind()) == 3);
    }
}

TEST_CASE("matrix layout is row major") {
    Matrix m(2, 3);
    m.at(0, 0) = 1;
    m.at(0, 2) = 3;
    m.at(1, 1) = 5;
    CHECK(m.data == std::vector<double>{1, 0, 3, 0, 5, 0});
    CHECK(m.row(1)[1] == 5);
}

TEST_CASE("gather copies the requested submatrix and marks rows") {
    Matrix m(3, 3);
    for (size_t r = 0; r < 3; ++r)
        for (size_t c = 0; c < 3; ++c) m.at(r, c) = static_cast<double>(10 * r + c);
    AccessLog log;
    const Matrix sub = gather(m, {2, 0}, {1, 2}, &log);
    REQUIRE(sub.n_rows == 2);
    REQUIRE(sub.n_cols == 2);
    CHECK(sub.at(0, 0) == 21);
    CHECK(sub.at(0, 1) == 22);
    CHECK(sub.at(1, 0) == 1);
    CHECK(sub.at(1, 1) == 2);
    CHECK(log.was_touched(0));
    CHECK_FALSE(log.was_touched(1));
    CHECK(log.was_touched(2));

    CHECK(gather_vec({5, 6, 7}, {1, 1, 0}) == std::vector<double>{6, 6, 5});
}

TEST_CASE("double formatting survives a round trip") {
    for (double v : {0.1, 1.0 / 3.0, 12345.6789, -2.5e-17, 1e300, 0.0}) {
        CHECK(std::stod(fmt_double(v)) == v);
    }
    CHECK(fmt_double(2.0) == "2");
}

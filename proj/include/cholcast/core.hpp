#pragma once

// Shared building blocks: error type, calendar dates, dense matrix.

#include <cstdint>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace cholcast {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

// Error kinds map onto CLI exit codes: usage = 1, data = 2, internal = 3.
class Error : public std::runtime_error {
public:
    enum class Kind { usage = 1, data = 2, internal = 3 };

    Error(Kind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

[[noreturn]] inline void fail_usage(const std::string& msg) { throw Error(Error::Kind::usage, msg); }
[[noreturn]] inline void fail_data(const std::string& msg) { throw Error(Error::Kind::data, msg); }
[[noreturn]] inline void fail_internal(const std::string& msg) { throw Error(Error::Kind::internal, msg); }

// ---------------------------------------------------------------------------
// Dates
// ---------------------------------------------------------------------------

// Calendar date stored as days since 1970-01-01 (proleptic Gregorian).
class Date {
public:
    Date() = default;
    explicit Date(int32_t days_since_epoch) : days_(days_since_epoch) {}

    static Date from_ymd(int y, int m, int d);
    // Strict "YYYY-MM-DD".
    static Date parse(const std::string& s);

    int32_t raw() const { return days_; }
    void to_ymd(int& y, int& m, int& d) const;
    std::string str() const;

    Date operator+(int days) const { return Date(days_ + days); }
    Date operator-(int days) const { return Date(days_ - days); }
    int operator-(Date o) const { return days_ - o.days_; }
    Date& operator++() { ++days_; return *this; }

    friend bool operator==(Date a, Date b) { return a.days_ == b.days_; }
    friend bool operator!=(Date a, Date b) { return a.days_ != b.days_; }
    friend bool operator<(Date a, Date b) { return a.days_ < b.days_; }
    friend bool operator<=(Date a, Date b) { return a.days_ <= b.days_; }
    friend bool operator>(Date a, Date b) { return a.days_ > b.days_; }
    friend bool operator>=(Date a, Date b) { return a.days_ >= b.days_; }

private:
    int32_t days_ = 0;
};

namespace detail {

// Days from civil date, epoch 1970-01-01. Standard shift-the-year-to-March trick.
inline int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);               // [0, 399]
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;    // [0, 365]
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;              // [0, 146096]
    return era * 146097 + static_cast<int64_t>(doe) - 719468;
}

inline void civil_from_days(int64_t z, int& y, int& m, int& d) {
    z += 719468;
    const int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);            // [0, 146096]
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const int64_t yr = static_cast<int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);            // [0, 365]
    const unsigned mp = (5 * doy + 2) / 153;                                 // [0, 11]
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    y = static_cast<int>(yr + (m <= 2));
}

} // namespace detail

inline Date Date::from_ymd(int y, int m, int d) {
    if (m < 1 || m > 12 || d < 1 || d > 31) fail_data("InvalidDate: " + std::to_string(y) + "-" + std::to_string(m) + "-" + std::to_string(d));
    Date out(static_cast<int32_t>(detail::days_from_civil(y, m, d)));
    int yy, mm, dd;
    out.to_ymd(yy, mm, dd);
    if (yy != y || mm != m || dd != d) fail_data("InvalidDate: day out of range for month");
    return out;
}

inline Date Date::parse(const std::string& s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') fail_data("InvalidDate: expected YYYY-MM-DD, got '" + s + "'");
    auto num = [&](size_t pos, size_t len) {
        int v = 0;
        auto [p, ec] = std::from_chars(s.data() + pos, s.data() + pos + len, v);
        if (ec != std::errc() || p != s.data() + pos + len) fail_data("InvalidDate: expected YYYY-MM-DD, got '" + s + "'");
        return v;
    };
    return from_ymd(num(0, 4), num(5, 2), num(8, 2));
}

inline void Date::to_ymd(int& y, int& m, int& d) const { detail::civil_from_days(days_, y, m, d); }

inline std::string Date::str() const {
    int y, m, d;
    to_ymd(y, m, d);
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", y, m, d);
    return buf;
}

// Inclusive date range.
struct DateRange {
    Date start;
    Date end;

    bool contains(Date d) const { return start <= d && d <= end; }
    int n_days() const { return end - start + 1; }
};

// ---------------------------------------------------------------------------
// Matrix
// ---------------------------------------------------------------------------

// Dense row-major matrix of doubles.
struct Matrix {
    size_t n_rows = 0;
    size_t n_cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(size_t r, size_t c) : n_rows(r), n_cols(c), data(r * c, 0.0) {}

    double& at(size_t r, size_t c) { return data[r * n_cols + c]; }
    double at(size_t r, size_t c) const { return data[r * n_cols + c]; }
    const double* row(size_t r) const { return data.data() + r * n_cols; }
    double* row(size_t r) { return data.data() + r * n_cols; }
};

// Marks rows of a matrix touched by pipeline stages; used to verify that model
// selection never reads evaluation rows.
struct AccessLog {
    std::vector<char> touched;

    void ensure(size_t n) { if (touched.size() < n) touched.resize(n, 0); }
    void mark(size_t row) { ensure(row + 1); touched[row] = 1; }
    bool was_touched(size_t row) const { return row < touched.size() && touched[row]; }
};

// Copies selected rows/columns out of a matrix. All pipeline data access is
// funneled through these so an AccessLog sees every read.
inline Matrix gather(const Matrix& m, const std::vector<size_t>& rows,
                     const std::vector<size_t>& cols, AccessLog* log = nullptr) {
    Matrix out(rows.size(), cols.size());
    for (size_t i = 0; i < rows.size(); ++i) {
        if (log) log->mark(rows[i]);
        const double* src = m.row(rows[i]);
        double* dst = out.row(i);
        for (size_t j = 0; j < cols.size(); ++j) dst[j] = src[cols[j]];
    }
    return out;
}

inline std::vector<double> gather_vec(const std::vector<double>& v, const std::vector<size_t>& rows) {
    std::vector<double> out(rows.size());
    for (size_t i = 0; i < rows.size(); ++i) out[i] = v[rows[i]];
    return out;
}

// ---------------------------------------------------------------------------
// Formatting
// ---------------------------------------------------------------------------

// Round-trip-exact double formatting (17 significant digits).
inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace cholcast

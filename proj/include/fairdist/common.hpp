#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fairdist {

/// Base error for all library failures.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad user input: config files, schemas, CLI values.
class ConfigError : public Error {
public:
    using Error::Error;
};

namespace detail {
inline void append_msg(std::ostringstream&) {}
template <typename T, typename... Rest>
void append_msg(std::ostringstream& oss, T&& v, Rest&&... rest) {
    oss << std::forward<T>(v);
    append_msg(oss, std::forward<Rest>(rest)...);
}
} // namespace detail

template <typename E = Error, typename... Ts>
void ensure(bool cond, Ts&&... parts) {
    if (!cond) {
        std::ostringstream oss;
        detail::append_msg(oss, std::forward<Ts>(parts)...);
        throw E(oss.str());
    }
}

/// Dense row-major matrix of doubles. Minimal by intent; the library only
/// needs row access and element indexing.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    const double* row(std::size_t i) const { return data.data() + i * cols; }
    double* row(std::size_t i) { return data.data() + i * cols; }

    std::vector<double> row_copy(std::size_t i) const {
        return std::vector<double>(row(i), row(i) + cols);
    }
};

/// Shortest decimal form that parses back to the identical double.
inline std::string format_double(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

/// Strict double parse: the whole token must be consumed.
inline double parse_double(const std::string& s, const std::string& what = "number") {
    ensure<ConfigError>(!s.empty(), "empty ", what);
    char* end = nullptr;
    errno = 0;
    double v = std::strtod(s.c_str(), &end);
    ensure<ConfigError>(end == s.c_str() + s.size() && errno == 0,
                        "cannot parse ", what, " from '", s, "'");
    return v;
}

inline long parse_long(const std::string& s, const std::string& what = "integer") {
    ensure<ConfigError>(!s.empty(), "empty ", what);
    char* end = nullptr;
    errno = 0;
    long v = std::strtol(s.c_str(), &end, 10);
    ensure<ConfigError>(end == s.c_str() + s.size() && errno == 0,
                        "cannot parse ", what, " from '", s, "'");
    return v;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    ensure(a.size() == b.size(), "dot: dimension mismatch (", a.size(), " vs ", b.size(), ")");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

inline double squared_distance(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

} // namespace fairdist

#pragma once

#include <stdexcept>
#include <string>

namespace quadcorr {

/// Base class for every error raised by the library.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A form index outside {1, 2, 3, 4, 7}.
class unsupported_form : public error {
public:
    explicit unsupported_form(long long d)
        : error("unsupported form index d=" + std::to_string(d) + " (expected 1, 2, 3, 4 or 7)") {}
};

/// Violated precondition on an argument (zero where positive required, non-prime, ...).
class invalid_argument : public error {
public:
    using error::error;
};

/// A query outside the range covered by a bitmap or table.
class range_error : public error {
public:
    using error::error;
};

/// Work or memory budget exceeded.
class budget_exceeded : public error {
public:
    using error::error;
};

/// A requested precision could not be certified at the given truncation.
class precision_error : public error {
public:
    precision_error(const std::string& what, double achieved)
        : error(what), achieved_bound(achieved) {}

    double achieved_bound;
};

/// Malformed, truncated or corrupted persisted data.
class format_error : public error {
public:
    using error::error;
};

} // namespace quadcorr

#pragma once

#include <stdexcept>
#include <string>

namespace gocre {

/// Raised when vector/matrix shapes disagree.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A component whose score has zero weighted norm cannot be deflated.
class DegenerateComponentError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or truncated input files.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A cell that does not parse as a number. Row and column are 1-based,
/// with row 1 being the header line.
class ParseError : public FormatError {
public:
    ParseError(std::size_t row, std::size_t column, const std::string& what)
        : FormatError(what), row_(row), column_(column) {}

    std::size_t row() const noexcept { return row_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t row_;
    std::size_t column_;
};

/// The requested column is not in the file.
class MissingColumnError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class UnsupportedVersionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require_same_length(long a, long b, const char* what) {
    if (a != b) {
        throw DimensionError(std::string(what) + ": length mismatch (" + std::to_string(a) +
                             " vs " + std::to_string(b) + ")");
    }
}

}  // namespace gocre

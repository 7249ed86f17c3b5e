#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace clare {

// Shapes or widths that do not line up.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// NaN/Inf produced or consumed by a numeric routine.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// API called in the wrong order or with an unsupported request.
class UsageError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Class index or one-hot code that does not fit the model.
class ConditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Malformed binary input. Carries the byte offset where decoding failed.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t offset)
        : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"),
          offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

// Required input file or directory is absent.
class MissingFileError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid experiment configuration or report contents.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

} // namespace clare

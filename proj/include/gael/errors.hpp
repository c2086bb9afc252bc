#pragma once

#include <stdexcept>

namespace gael {

// File-system and stream failures: unopenable paths, short writes.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed file contents; messages name the offending line or field.
class ParseError : public IoError {
public:
    using IoError::IoError;
};

// A loss or parameter became non-finite; the message names the training
// step and the offending component.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace gael

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace timbre {

// Base for all library-specific failures. Plain std::invalid_argument is used
// for precondition violations on arguments; the classes below carry the
// domain-specific failure modes that callers are expected to branch on.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Operation received a spectrogram in the wrong representation
// (e.g. inverse STFT of a CQT grid).
class UnsupportedRepresentation : public Error {
public:
    using Error::Error;
};

// Spectrogram is in the wrong normalization state for the operation.
class WrongNormalizationState : public Error {
public:
    using Error::Error;
};

// File failed magic/CRC/structure validation.
class CorruptFile : public Error {
public:
    using Error::Error;
};

// Stored tensor shapes do not match the requested configuration.
class ShapeMismatch : public Error {
public:
    using Error::Error;
};

// Non-finite value produced mid-computation; `position` locates the first
// offending sample/step when known.
class NumericFailure : public Error {
public:
    explicit NumericFailure(const std::string& what, std::size_t position = 0)
        : Error(what), position_(position) {}
    std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

// Input carries no usable signal (silent waveform).
class NoSignal : public Error {
public:
    using Error::Error;
};

// Manifest cannot be partitioned (fewer than two pieces).
class CannotSplit : public Error {
public:
    using Error::Error;
};

// Corpus statistics are unusable (zero variance).
class DegenerateStats : public Error {
public:
    using Error::Error;
};

// Weight payload contains non-finite values.
class InvalidWeights : public Error {
public:
    using Error::Error;
};

} // namespace timbre

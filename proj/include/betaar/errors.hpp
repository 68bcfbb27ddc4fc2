#pragma once

#include <stdexcept>
#include <string>

namespace betaar {

/// An argument lies outside the mathematical domain of an operation
/// (non-positive shape, observation on the boundary of (0,1), ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Shapes of vectors/matrices do not agree.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Invalid configuration or usage.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical procedure could not produce a result (exhausted rejection
/// budget, singular system, ...).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace betaar

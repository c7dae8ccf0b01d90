#pragma once

#include <stdexcept>
#include <string>

namespace classgen {

/// Raised when a KL divergence is infinite: p places mass where q has none.
/// Distinct from invalid input so callers can report a vacuous bound instead
/// of a usage error.
class DivergenceInfinite : public std::runtime_error {
public:
    explicit DivergenceInfinite(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when an estimator needs more samples than it was given
/// (e.g. mutual information from fewer than two mask draws).
class InsufficientSamples : public std::invalid_argument {
public:
    explicit InsufficientSamples(const std::string& what) : std::invalid_argument(what) {}
};

/// Raised when a class (or attribute value) is absent from every
/// contributing super-sample draw.
class EmptyClass : public std::invalid_argument {
public:
    explicit EmptyClass(const std::string& what) : std::invalid_argument(what) {}
};

/// Raised when an exact-enumeration request exceeds the supported budget
/// or requires a learner that cannot be enumerated.
class Unsupported : public std::invalid_argument {
public:
    explicit Unsupported(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace classgen

#pragma once

#include <stdexcept>
#include <string>

namespace kzlab {

/// Malformed mathematical input: bad bigrading, non-transitive permutation
/// pair, rank-deficient frame, inconsistent chain complex.
class StructureError : public std::runtime_error {
public:
    explicit StructureError(const std::string& what) : std::runtime_error(what) {}
};

/// Argument outside the mathematical domain of an operation (z = 0 for the
/// torus action, tau below the base-domain margin, lambda2 >= 1, ...).
class DomainError : public std::runtime_error {
public:
    explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

/// A stated precondition fails: non-isotropic classes, non-generating walk
/// support, inconsistent polynomial samples.
class PreconditionError : public std::runtime_error {
public:
    explicit PreconditionError(const std::string& what) : std::runtime_error(what) {}
};

/// Division by a quantity below the configured zero threshold (norm of a
/// section at a zero, degenerate wedge).
class ZeroDivisorError : public std::runtime_error {
public:
    explicit ZeroDivisorError(const std::string& what) : std::runtime_error(what) {}
};

/// The generator action is not semisimple, so no isotypic decomposition
/// exists; carries a human-readable certificate of the failure.
class SemisimplicityError : public std::runtime_error {
public:
    explicit SemisimplicityError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace kzlab

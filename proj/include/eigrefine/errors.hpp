#pragma once

#include <stdexcept>
#include <string>

namespace eigrefine {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Operands do not conform (matrix product, residuals, packing...).
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Input matrix violates a structural requirement (asymmetry, non-finite entries).
class InvalidMatrixError : public Error {
public:
    using Error::Error;
};

/// Iterative routine failed to converge; carries the best estimate reached.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& msg, double best)
        : Error(msg), best_estimate(best) {}
    double best_estimate;
};

/// Generic numeric failure (singular system, invalid state).
class NumericError : public Error {
public:
    using Error::Error;
};

/// Two approximate eigenvalues are too close for the plain correction formula.
class BreakdownNearMultiple : public Error {
public:
    BreakdownNearMultiple(const std::string& msg, int i_, int j_, double gap_, double floor_)
        : Error(msg), i(i_), j(j_), gap(gap_), floor(floor_) {}
    int i;
    int j;
    double gap;
    double floor;
};

/// The candidate eigenvector matrix is too far from orthogonal to refine.
class BadApproximation : public Error {
public:
    BadApproximation(const std::string& msg, int index_, double value_)
        : Error(msg), index(index_), value(value_) {}
    int index;
    double value;
};

/// A cluster map no longer matches the approximate eigenvalues it was built from.
class InconsistentClusters : public Error {
public:
    InconsistentClusters(const std::string& msg, int i_, int j_, double gap_)
        : Error(msg), i(i_), j(j_), gap(gap_) {}
    int i;
    int j;
    double gap;
};

/// Cross-cluster denominator of the fixed-point map is numerically zero.
class NearSingularDenominator : public Error {
public:
    NearSingularDenominator(const std::string& msg, int i_, int j_, double gap_)
        : Error(msg), i(i_), j(j_), gap(gap_) {}
    int i;
    int j;
    double gap;
};

/// State vector outside the domain of the fixed-point map.
class BadState : public Error {
public:
    using Error::Error;
};

/// A stated hypothesis of a bound check or experiment does not hold.
class HypothesisError : public Error {
public:
    using Error::Error;
};

/// Malformed input file; carries the 1-based line number when known.
class ParseError : public Error {
public:
    ParseError(const std::string& msg, long line_)
        : Error(msg), line(line_) {}
    long line;
};

} // namespace eigrefine

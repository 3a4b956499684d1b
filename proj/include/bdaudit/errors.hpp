#ifndef BDAUDIT_ERRORS_HPP
#define BDAUDIT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace bdaudit {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// CSV / file ingestion problems (bad arity, non-numeric cell, ...).
class ParseError : public Error {
public:
    using Error::Error;
};

// Unknown label or group string during ingestion.
class VocabularyError : public Error {
public:
    using Error::Error;
};

// Invalid or inconsistent configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Operation requires more samples than available.
class SizeError : public Error {
public:
    using Error::Error;
};

// Index or count outside its permitted range.
class BoundsError : public Error {
public:
    using Error::Error;
};

// Unknown attribute / group / class name.
class LookupError : public Error {
public:
    using Error::Error;
};

// Requested bias level cannot be reached by removing samples.
class InfeasibilityError : public Error {
public:
    using Error::Error;
};

// Input violates a mathematical domain requirement (e.g. negative feature).
class DomainError : public Error {
public:
    using Error::Error;
};

// Target or distribution too degenerate to work with (single class, zero variance).
class DegenerateError : public Error {
public:
    using Error::Error;
};

// Matrix / row dimension mismatch.
class ShapeError : public Error {
public:
    using Error::Error;
};

// Training loss became non-finite.
class TrainingDivergenceError : public Error {
public:
    TrainingDivergenceError(const std::string& msg, int epoch)
        : Error(msg), epoch_(epoch) {}
    int epoch() const { return epoch_; }

private:
    int epoch_;
};

// More attribute groups than encodable labels.
class CapacityError : public Error {
public:
    using Error::Error;
};

// No collision-free group-to-label assignment exists.
class AssignmentError : public Error {
public:
    using Error::Error;
};

// Requested more poisoned samples than the victim pool holds.
class PoolExhaustedError : public Error {
public:
    using Error::Error;
};

// Poison fraction rounded to zero samples for every group.
class EmptyPoisonError : public Error {
public:
    using Error::Error;
};

// Curve x-ranges do not overlap; no common evaluation grid.
class IncomparableCurvesError : public Error {
public:
    using Error::Error;
};

// Nonlinear fit did not converge; carries best-so-far parameters.
class CurveFitError : public Error {
public:
    CurveFitError(const std::string& msg, double a, double b, double c, double rmse)
        : Error(msg), a_(a), b_(b), c_(c), rmse_(rmse) {}
    double a() const { return a_; }
    double b() const { return b_; }
    double c() const { return c_; }
    double rmse() const { return rmse_; }

private:
    double a_, b_, c_, rmse_;
};

// I/O failure (missing file, unwritable directory).
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace bdaudit

#endif  // BDAUDIT_ERRORS_HPP

#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace etamu {

namespace detail {
inline std::string num(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}
}  // namespace detail

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParameterOutOfRange : public Error {
public:
    ParameterOutOfRange(std::string field, double value, std::string allowed)
        : Error(describe(field, value, allowed)),
          field_(std::move(field)),
          value_(value),
          allowed_(std::move(allowed)) {}

    const std::string& field() const noexcept { return field_; }
    double value() const noexcept { return value_; }
    const std::string& allowed() const noexcept { return allowed_; }

private:
    static std::string describe(const std::string& field, double value, const std::string& allowed) {
        std::ostringstream os;
        os << "parameter '" << field << "' = " << value << " outside " << allowed;
        return os.str();
    }

    std::string field_;
    double value_;
    std::string allowed_;
};

class DegenerateParameters : public Error {
public:
    using Error::Error;
};

class PoleAtNonPositiveInteger : public Error {
public:
    using Error::Error;
};

class ZeroBase : public Error {
public:
    using Error::Error;
};

class NonPositiveShape : public Error {
public:
    using Error::Error;
};

class InvalidOrder : public Error {
public:
    using Error::Error;
};

class EvaluationAtBranchPoint : public Error {
public:
    using Error::Error;
};

/// Raised when an error estimate stays above the requested tolerance.
class ConvergenceFailure : public Error {
public:
    ConvergenceFailure(const std::string& what, double estimate)
        : Error(what), estimate_(estimate) {}

    double estimate() const noexcept { return estimate_; }

private:
    double estimate_;
};

class ContourCrossesSingularity : public Error {
public:
    using Error::Error;
};

class InvalidAbscissa : public Error {
public:
    using Error::Error;
};

class NonIntegerClusterCount : public Error {
public:
    using Error::Error;
};

class TruncationBoundNotMet : public Error {
public:
    using Error::Error;
};

}  // namespace etamu

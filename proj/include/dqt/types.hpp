#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace dqt {

using cplx = std::complex<double>;
using Vector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXcd;

inline constexpr cplx I{0.0, 1.0};

/// Bad parameters or mismatched dimensions passed to a library call.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed or inconsistent run configuration.
class ConfigError : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

/// Failure of a numerical run that was correctly configured.
class RuntimeFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The vacuum block of a dressed state fell below the projection floor,
/// so the conditional average of the coupling operator is undefined.
class DegenerateProjection : public RuntimeFailure {
public:
    DegenerateProjection(double time, double ratio)
        : RuntimeFailure("degenerate vacuum projection at t=" + std::to_string(time) +
                         " (vacuum weight ratio " + std::to_string(ratio) + ")"),
          time_(time), ratio_(ratio) {}

    double time() const noexcept { return time_; }
    double ratio() const noexcept { return ratio_; }

private:
    double time_;
    double ratio_;
};

class AllDegenerate : public RuntimeFailure {
public:
    using RuntimeFailure::RuntimeFailure;
};

class TooManyDegenerate : public RuntimeFailure {
public:
    using RuntimeFailure::RuntimeFailure;
};

class NormDrift : public RuntimeFailure {
public:
    using RuntimeFailure::RuntimeFailure;
};

} // namespace dqt

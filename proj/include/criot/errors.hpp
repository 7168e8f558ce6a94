#pragma once

#include <stdexcept>
#include <string>

namespace criot {

class InvalidParameter : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Raised when an iterative solve stops before meeting its tolerance.
class NoConvergence : public std::runtime_error {
public:
    NoConvergence(const std::string& what, double residual)
        : std::runtime_error(what + " (residual " + std::to_string(residual) + ")"),
          residual_(residual) {}

    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

// No offered traffic, so the drop probability has no meaning.
class UndefinedLoad : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// No admitted traffic, so Little's law cannot produce a waiting time.
class UndefinedWait : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// No successful departures ever happen in the chain.
class DegenerateDistribution : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// A metric fell outside [0,1] by more than the clamping tolerance.
class MetricOutOfRange : public std::range_error {
public:
    using std::range_error::range_error;
};

}  // namespace criot

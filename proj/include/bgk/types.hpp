#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace bgk {

using Vec3 = Eigen::Vector3d;
/// One value per velocity node, in grid node order.
using Field = Eigen::ArrayXd;

template <int N>
using Vec = Eigen::Matrix<double, N, 1>;
template <int N>
using Mat = Eigen::Matrix<double, N, N>;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    /// Short machine-readable category, e.g. "config" or "solver".
    virtual const char* category() const noexcept { return "error"; }
};

class ConfigError : public Error {
public:
    using Error::Error;
    const char* category() const noexcept override { return "config"; }
};

class ShapeError : public Error {
public:
    using Error::Error;
    const char* category() const noexcept override { return "shape"; }
};

/// Arguments outside the mathematical domain (e.g. lambda2 >= 0).
class DomainError : public Error {
public:
    using Error::Error;
    const char* category() const noexcept override { return "domain"; }
};

class DegenerateInputError : public Error {
public:
    using Error::Error;
    const char* category() const noexcept override { return "degenerate"; }
};

class StepSizeError : public Error {
public:
    using Error::Error;
    const char* category() const noexcept override { return "step-size"; }
};

class IoError : public Error {
public:
    using Error::Error;
    const char* category() const noexcept override { return "io"; }
};

} // namespace bgk

#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace edgegs {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat23 = Eigen::Matrix<double, 2, 3>;

// Error hierarchy. The CLI maps these onto exit codes (2 data, 3 numeric).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input files, inconsistent datasets, bad preconditions on data.
class DataError : public Error {
public:
    using Error::Error;
};

// Non-finite values, collapsed optimization, degenerate fits.
class NumericError : public Error {
public:
    using Error::Error;
};

// Caller broke an API contract (e.g. backward without a matching forward).
class ContractError : public Error {
public:
    using Error::Error;
};

} // namespace edgegs

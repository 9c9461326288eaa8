#ifndef MFOC_TYPES_HPP
#define MFOC_TYPES_HPP

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace mfoc {

using Index = Eigen::Index;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// Time-major tables (one row per time step) are stored row-major so that a
// time layer is a contiguous vector.
template <typename Scalar>
using TimeTable =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Input outside the domain of an operation (non-finite state, point
/// outside the grid hull, masses that do not sum to one).
class DomainError : public std::domain_error {
  using std::domain_error::domain_error;
};

/// Caller broke a size or shape contract.
class ContractError : public std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A computation produced a non-finite or otherwise unusable number.
class NumericError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Invalid user-supplied configuration.
class ConfigError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace mfoc

#endif  // MFOC_TYPES_HPP

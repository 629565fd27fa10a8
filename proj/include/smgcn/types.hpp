#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace smgcn {

// Row-major so that parameter blocks serialize in the natural order.
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

template <typename Scalar>
using SparseMatrix = Eigen::SparseMatrix<Scalar, Eigen::RowMajor>;

using MatrixXd = Matrix<double>;
using RowVectorXd = RowVector<double>;

/// Failure categories map one-to-one onto CLI exit codes.
enum class ErrorKind { usage = 1, data = 2, divergence = 3 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error config_error(const std::string& what) { return Error(ErrorKind::usage, what); }
inline Error data_error(const std::string& what) { return Error(ErrorKind::data, what); }
inline Error divergence_error(const std::string& what) { return Error(ErrorKind::divergence, what); }

/// Violated shape or precondition contract between modules.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

inline void require(bool ok, const char* what) {
  if (!ok) throw ContractError(what);
}

template <typename Scalar>
inline Scalar leaky_relu(Scalar x, Scalar slope) {
  return x > Scalar(0) ? x : slope * x;
}

template <typename Scalar>
inline Scalar leaky_relu_grad(Scalar x, Scalar slope) {
  return x > Scalar(0) ? Scalar(1) : slope;
}

inline constexpr double kDefaultLeakySlope = 0.01;

}  // namespace smgcn

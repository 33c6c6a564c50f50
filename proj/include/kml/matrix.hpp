#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <string>
#include <type_traits>

#include "kml/error.hpp"

namespace kml {

/// Dense row-major matrix. All layer math in the library is expressed over
/// this type; `Matrix` is the single-precision instance used everywhere
/// outside of tests.
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Matrix = MatrixX<float>;

/// Accumulator used for dot products: at least double precision.
template <typename Scalar>
using AccumulatorOf = std::conditional_t<(sizeof(Scalar) < sizeof(double)), double, Scalar>;

enum class Elementwise { add, sub, mul };

template <typename Derived>
std::string shape_string(const Eigen::EigenBase<Derived>& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

/// out = a * b, accumulating each dot product in (at least) double
/// precision. `out` is resized only when its shape differs, so repeated
/// calls with stable shapes never allocate. `out` must not alias a or b.
template <typename Dst, typename A, typename B>
void matmul_into(Eigen::PlainObjectBase<Dst>& out, const Eigen::MatrixBase<A>& a,
                 const Eigen::MatrixBase<B>& b) {
  using Scalar = typename Dst::Scalar;
  using Acc = AccumulatorOf<Scalar>;
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: cannot multiply " + shape_string(a) + " by " + shape_string(b));
  }
  if (out.rows() != a.rows() || out.cols() != b.cols()) out.resize(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      Acc acc = 0;
      for (Eigen::Index k = 0; k < a.cols(); ++k) {
        acc += static_cast<Acc>(a(i, k)) * static_cast<Acc>(b(k, j));
      }
      out(i, j) = static_cast<Scalar>(acc);
    }
  }
}

template <typename A, typename B>
MatrixX<typename A::Scalar> matmul(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  MatrixX<typename A::Scalar> out;
  matmul_into(out, a, b);
  return out;
}

template <typename A, typename B>
MatrixX<typename A::Scalar> elementwise(Elementwise op, const Eigen::MatrixBase<A>& a,
                                        const Eigen::MatrixBase<B>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError("elementwise: shapes " + shape_string(a) + " and " + shape_string(b) +
                     " differ");
  }
  switch (op) {
    case Elementwise::add:
      return a + b;
    case Elementwise::sub:
      return a - b;
    case Elementwise::mul:
      return a.cwiseProduct(b);
  }
  throw ArgumentError("elementwise: unknown operation");
}

template <typename A>
MatrixX<typename A::Scalar> transpose(const Eigen::MatrixBase<A>& a) {
  return a.transpose();
}

template <typename A>
bool all_finite(const Eigen::MatrixBase<A>& a) {
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      if (!std::isfinite(a(i, j))) return false;
  return true;
}

/// Numerically stable softmax over a row or column vector: the maximum is
/// subtracted before exponentiation and the normaliser is summed in double.
/// `out` takes the shape of `v`.
template <typename Dst, typename A>
void softmax_into(Eigen::PlainObjectBase<Dst>& out, const Eigen::MatrixBase<A>& v) {
  using Scalar = typename Dst::Scalar;
  using Acc = AccumulatorOf<Scalar>;
  if (v.size() == 0 || (v.rows() != 1 && v.cols() != 1)) {
    throw ShapeError("softmax: expected a non-empty vector, got " + shape_string(v));
  }
  if (!all_finite(v)) throw NumericError("softmax: non-finite input");
  if (out.rows() != v.rows() || out.cols() != v.cols()) out.resize(v.rows(), v.cols());
  const Acc peak = static_cast<Acc>(v.maxCoeff());
  Acc total = 0;
  for (Eigen::Index i = 0; i < v.size(); ++i) total += std::exp(static_cast<Acc>(v(i)) - peak);
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out(i) = static_cast<Scalar>(std::exp(static_cast<Acc>(v(i)) - peak) / total);
  }
}

template <typename A>
MatrixX<typename A::Scalar> softmax(const Eigen::MatrixBase<A>& v) {
  MatrixX<typename A::Scalar> out;
  softmax_into(out, v);
  return out;
}

/// Index of the largest entry of a vector; ties resolve to the lowest index.
template <typename A>
std::size_t argmax(const Eigen::MatrixBase<A>& v) {
  std::size_t best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v(i) > v(static_cast<Eigen::Index>(best))) best = static_cast<std::size_t>(i);
  }
  return best;
}

}  // namespace kml

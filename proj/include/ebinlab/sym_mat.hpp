#pragma once

#include "ebinlab/common.hpp"

#include <initializer_list>
#include <span>

namespace ebinlab {

inline constexpr int packedSize(int dim) { return dim * (dim + 1) / 2; }

/// Symmetric dim x dim matrix (dim <= 3) in row-major upper-triangular storage:
/// (0,0) (0,1) (0,2) (1,1) (1,2) (2,2). Asymmetric values cannot be represented.
template <typename Scalar>
class SymMat {
 public:
  using Packed = Eigen::Matrix<Scalar, Eigen::Dynamic, 1, 0, 6, 1>;

  SymMat() : dim_(0) {}
  explicit SymMat(int dim) : dim_(checkDim(dim)), packed_(Packed::Zero(packedSize(dim))) {}

  static SymMat identity(int dim) { return scaledIdentity(dim, Scalar(1)); }

  static SymMat scaledIdentity(int dim, Scalar value) {
    SymMat m(dim);
    for (int i = 0; i < dim; ++i) m.set(i, i, value);
    return m;
  }

  static SymMat diagonal(std::initializer_list<Scalar> entries) {
    SymMat m(static_cast<int>(entries.size()));
    int i = 0;
    for (Scalar v : entries) m.set(i, i, v), ++i;
    return m;
  }

  /// Symmetric part of `m`.
  template <typename Derived>
  static SymMat fromMatrix(const Eigen::MatrixBase<Derived>& m) {
    if (m.rows() != m.cols()) throw ShapeMismatchError("SymMat::fromMatrix: matrix is not square");
    SymMat out(static_cast<int>(m.rows()));
    for (int i = 0; i < out.dim_; ++i)
      for (int j = i; j < out.dim_; ++j) out.set(i, j, Scalar(0.5) * (Scalar(m(i, j)) + Scalar(m(j, i))));
    return out;
  }

  static SymMat fromPacked(int dim, std::span<const Scalar> entries) {
    SymMat out(dim);
    if (static_cast<int>(entries.size()) != packedSize(dim))
      throw ShapeMismatchError("SymMat::fromPacked: expected " + std::to_string(packedSize(dim)) + " entries");
    for (int i = 0; i < packedSize(dim); ++i) out.packed_(i) = entries[i];
    return out;
  }

  int dim() const { return dim_; }
  const Packed& packed() const { return packed_; }

  Scalar operator()(int i, int j) const { return packed_(index(i, j)); }
  void set(int i, int j, Scalar v) { packed_(index(i, j)) = v; }

  Mat<Scalar> matrix() const {
    Mat<Scalar> m(dim_, dim_);
    for (int i = 0; i < dim_; ++i)
      for (int j = i; j < dim_; ++j) m(i, j) = m(j, i) = (*this)(i, j);
    return m;
  }

  bool allFinite() const { return packed_.allFinite(); }
  bool isZero() const { return (packed_.array() == Scalar(0)).all(); }

  Scalar trace() const {
    Scalar t(0);
    for (int i = 0; i < dim_; ++i) t += (*this)(i, i);
    return t;
  }

  /// Largest absolute entry.
  Scalar maxAbs() const { return dim_ == 0 ? Scalar(0) : packed_.cwiseAbs().maxCoeff(); }

  template <typename Other>
  SymMat<Other> cast() const {
    SymMat<Other> out(dim_);
    for (int i = 0; i < dim_; ++i)
      for (int j = i; j < dim_; ++j) out.set(i, j, static_cast<Other>((*this)(i, j)));
    return out;
  }

  SymMat& operator+=(const SymMat& o) { return checkSame(o), packed_ += o.packed_, *this; }
  SymMat& operator-=(const SymMat& o) { return checkSame(o), packed_ -= o.packed_, *this; }
  SymMat& operator*=(Scalar s) { return packed_ *= s, *this; }

  friend SymMat operator+(SymMat a, const SymMat& b) { return a += b; }
  friend SymMat operator-(SymMat a, const SymMat& b) { return a -= b; }
  friend SymMat operator*(SymMat a, Scalar s) { return a *= s; }
  friend SymMat operator*(Scalar s, SymMat a) { return a *= s; }
  friend bool operator==(const SymMat& a, const SymMat& b) { return a.dim_ == b.dim_ && a.packed_ == b.packed_; }

 private:
  static int checkDim(int dim) {
    if (dim < 1 || dim > 3) throw PreconditionError("SymMat: dimension must be 1, 2 or 3");
    return dim;
  }

  int index(int i, int j) const {
    if (i > j) std::swap(i, j);
    // offset of row i in packed upper storage, then column
    return i * dim_ - i * (i - 1) / 2 + (j - i);
  }

  void checkSame(const SymMat& o) const {
    if (o.dim_ != dim_) throw ShapeMismatchError("SymMat: dimension mismatch");
  }

  int dim_;
  Packed packed_;
};

}  // namespace ebinlab

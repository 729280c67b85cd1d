#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>

#include <Eigen/Dense>

namespace loopmp {

template <class Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using DenseVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// v^T M^{-1} v (plain transpose, no conjugation) by LU with partial pivoting.
// M is factorized in place. Returns nullopt when M is numerically singular.
template <class Scalar>
std::optional<Scalar> bilinear_inverse(Eigen::Ref<DenseMatrix<Scalar>> m, const Eigen::Ref<const DenseVector<Scalar>>& v) {
  using std::abs;
  const auto k = m.rows();
  if (k == 0) return Scalar(0);
  if (k == 1) {
    if (m(0, 0) == Scalar(0)) return std::nullopt;
    return v(0) * v(0) / m(0, 0);
  }
  Eigen::PartialPivLU<Eigen::Ref<DenseMatrix<Scalar>>> lu(m);
  const auto& factored = lu.matrixLU();
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto d = factored(i, i);
    if (d == Scalar(0) || !std::isfinite(abs(d))) return std::nullopt;
  }
  const Scalar out = v.transpose() * lu.solve(v);
  if (!std::isfinite(abs(out))) return std::nullopt;
  return out;
}

// Same quantity for complex symmetric M, by symmetric elimination without
// pivoting over the lower triangle (the upper triangle is never read). M and v
// are overwritten. When Im(M) is positive definite (Im z > 0 in the resolvent
// systems) every pivot has imaginary part bounded away from zero, so this is
// stable; nullopt on a pivot below `rel_pivot` times the largest entry, and
// the caller should fall back to bilinear_inverse.
template <class Scalar>
std::optional<Scalar> symmetric_bilinear_inverse(Eigen::Ref<DenseMatrix<Scalar>> m, Eigen::Ref<DenseVector<Scalar>> v,
                                                 double rel_pivot = 1e-12) {
  using std::abs;
  const auto k = m.rows();
  auto l1 = [](const Scalar& x) { return abs(std::real(x)) + abs(std::imag(x)); };
  double scale = 0.0;
  for (Eigen::Index j = 0; j < k; ++j)
    for (Eigen::Index i = j; i < k; ++i) scale = std::max(scale, l1(m(i, j)));
  Scalar acc(0);
  for (Eigen::Index c = 0; c < k; ++c) {
    const Scalar d = m(c, c);
    if (!(l1(d) > rel_pivot * scale)) return std::nullopt;
    const Scalar inv = Scalar(1) / d;
    const Scalar vc = v(c);
    acc += vc * vc * inv;
    for (Eigen::Index j = c + 1; j < k; ++j) {
      const Scalar mjc = m(j, c);
      if (mjc == Scalar(0)) continue;
      const Scalar f = mjc * inv;
      v(j) -= f * vc;
      for (Eigen::Index i = j; i < k; ++i) m(i, j) -= m(i, c) * f;
    }
  }
  if (!std::isfinite(l1(acc))) return std::nullopt;
  return acc;
}

}  // namespace loopmp

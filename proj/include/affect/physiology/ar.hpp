#pragma once

#include <complex>
#include <stdexcept>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

namespace affect::physiology {

/// Burg estimate of AR coefficients [1, a1..ap] so that
/// x[t] + a1 x[t-1] + ... + ap x[t-p] = e[t]. Stops early (remaining
/// coefficients zero) once the prediction error vanishes.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> burg(const Eigen::MatrixBase<Derived>& x, int order) {
  using Scalar = typename Derived::Scalar;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Eigen::Index n = x.size();
  if (order < 1 || n <= order) throw std::invalid_argument("burg: need more samples than the model order");
  Vec a = Vec::Zero(order + 1);
  a(0) = 1;
  Vec f = x, b = x;
  const Scalar energy = x.squaredNorm();
  for (int m = 1; m <= order; ++m) {
    // forward error f[t], backward error b[t-1] for t = m..n-1
    const auto fs = f.segment(m, n - m);
    const auto bs = b.segment(m - 1, n - m);
    const Scalar den = fs.squaredNorm() + bs.squaredNorm();
    if (den <= energy * Scalar(1e-24)) break;
    const Scalar k = Scalar(-2) * fs.dot(bs) / den;
    const Vec prev = a;
    for (int i = 1; i <= m; ++i) a(i) = prev(i) + k * prev(m - i);
    const Vec f_old = f.segment(m, n - m);
    f.segment(m, n - m) += k * b.segment(m - 1, n - m);
    b.segment(m, n - m) = b.segment(m - 1, n - m).eval() + k * f_old;
  }
  return a;
}

/// Roots of z^p + a1 z^{p-1} + ... + ap: eigenvalues of the companion matrix.
template <typename Derived>
Eigen::Matrix<std::complex<typename Derived::Scalar>, Eigen::Dynamic, 1> ar_poles(
    const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::Index p = a.size() - 1;
  if (p < 1) return {};
  Mat companion = Mat::Zero(p, p);
  companion.row(0) = -a.tail(p).transpose();
  if (p > 1) companion.bottomLeftCorner(p - 1, p - 1).setIdentity();
  Eigen::EigenSolver<Mat> es(companion, false);
  return es.eigenvalues();
}

}  // namespace affect::physiology

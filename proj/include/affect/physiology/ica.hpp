#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "affect/core/error.hpp"

namespace affect::physiology {

AFFECT_DEFINE_ERROR(ConvergenceFailure, "convergence_failure");

struct IcaParams {
  int max_iterations = 200;
  double tolerance = 1e-6;
  std::uint64_t seed = 0;
};

namespace detail {

/// W <- (W W^T)^{-1/2} W
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> symmetric_decorrelation(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& w) {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Eigen::SelfAdjointEigenSolver<Mat> es(w * w.transpose());
  const Mat inv_sqrt = es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                       es.eigenvectors().transpose();
  return inv_sqrt * w;
}

}  // namespace detail

/// FastICA (tanh contrast, symmetric decorrelation) over the columns of
/// `x` (samples x channels). Returns unit-variance sources as columns.
/// Directions with negligible variance are discarded during whitening, so a
/// rank-deficient input yields fewer sources. Throws ConvergenceFailure
/// when the unmixing matrix has not settled after max_iterations.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> ica_decompose(
    const Eigen::MatrixBase<Derived>& x, const IcaParams& params = {}) {
  using Scalar = typename Derived::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::Index n = x.rows();
  const Mat centered = x.rowwise() - x.colwise().mean();
  const Mat cov = centered.transpose() * centered / Scalar(n);
  Eigen::SelfAdjointEigenSolver<Mat> es(cov);
  const Scalar top = es.eigenvalues().maxCoeff();
  Eigen::Index kept = 0;
  for (Eigen::Index i = 0; i < cov.rows(); ++i)
    if (es.eigenvalues()(i) > Scalar(1e-10) * top) ++kept;
  if (kept == 0) throw ConvergenceFailure("ica input has no variance");
  const Mat whitening = es.eigenvalues().tail(kept).cwiseSqrt().cwiseInverse().asDiagonal() *
                        es.eigenvectors().rightCols(kept).transpose();
  const Mat z = centered * whitening.transpose();  // n x kept, identity covariance

  std::mt19937_64 rng(params.seed);
  std::normal_distribution<double> normal;
  Mat w(kept, kept);
  for (Eigen::Index i = 0; i < kept; ++i)
    for (Eigen::Index j = 0; j < kept; ++j) w(i, j) = Scalar(normal(rng));
  w = detail::symmetric_decorrelation<Scalar>(w);

  for (int it = 0; it < params.max_iterations; ++it) {
    const Mat g = (z * w.transpose()).array().tanh().matrix();
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> g_prime_mean =
        (Scalar(1) - g.array().square()).colwise().mean().transpose();
    Mat next = g.transpose() * z / Scalar(n) - g_prime_mean.asDiagonal() * w;
    next = detail::symmetric_decorrelation<Scalar>(next);
    const Scalar change = ((next * w.transpose()).diagonal().cwiseAbs().array() - Scalar(1)).abs().maxCoeff();
    w = next;
    if (change < Scalar(params.tolerance)) {
      Mat s = z * w.transpose();
      for (Eigen::Index c = 0; c < s.cols(); ++c) {
        const Scalar sd = std::sqrt((s.col(c).array() - s.col(c).mean()).square().mean());
        if (sd > Scalar(0)) s.col(c) /= sd;
      }
      return s;
    }
  }
  throw ConvergenceFailure("fastica did not converge");
}

}  // namespace affect::physiology

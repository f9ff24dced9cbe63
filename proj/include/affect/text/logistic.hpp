#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace affect::text {

template <typename Scalar>
using SparseDesign = Eigen::SparseMatrix<Scalar, Eigen::RowMajor>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
struct LogisticObjective {
  Scalar loss = 0;
  Vector<Scalar> grad_w;
  Scalar grad_b = 0;

  Scalar grad_norm() const { return std::sqrt(grad_w.squaredNorm() + grad_b * grad_b); }
};

template <typename Scalar>
Scalar sigmoid(Scalar z) {
  return z >= Scalar(0) ? Scalar(1) / (Scalar(1) + std::exp(-z)) : std::exp(z) / (Scalar(1) + std::exp(z));
}

/// Mean log loss of labels y in {0,1} plus (lambda/2)|w|^2; the bias is
/// not regularised. Returns the loss and its analytic gradient.
template <typename Scalar>
LogisticObjective<Scalar> logistic_objective(const SparseDesign<Scalar>& x, const Vector<Scalar>& y,
                                             const Vector<Scalar>& w, Scalar b, Scalar lambda) {
  const Scalar n = Scalar(x.rows());
  const Vector<Scalar> z = (x * w).array() + b;
  Vector<Scalar> residual(z.size());
  Scalar loss = 0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const Scalar zi = z(i);
    // log(1 + e^z) - y z, computed without overflow
    loss += std::max(zi, Scalar(0)) + std::log1p(std::exp(-std::abs(zi))) - y(i) * zi;
    residual(i) = sigmoid(zi) - y(i);
  }
  LogisticObjective<Scalar> out;
  out.loss = loss / n + lambda / Scalar(2) * w.squaredNorm();
  out.grad_w = x.transpose() * residual / n + lambda * w;
  out.grad_b = residual.sum() / n;
  return out;
}

struct DescentParams {
  double tolerance = 1e-6;  // on the full gradient norm
  int max_iterations = 200000;
  double armijo = 1e-4;
};

template <typename Scalar>
struct LogisticFit {
  Vector<Scalar> w;
  Scalar b = 0;
  int iterations = 0;
  bool converged = false;
  std::vector<Scalar> loss_history;  // loss at every accepted iterate
};

/// Gradient descent with Armijo backtracking from w = 0, b = 0.
template <typename Scalar>
LogisticFit<Scalar> fit_logistic(const SparseDesign<Scalar>& x, const Vector<Scalar>& y, Scalar lambda,
                                 const DescentParams& params = {}) {
  LogisticFit<Scalar> fit;
  fit.w = Vector<Scalar>::Zero(x.cols());
  auto obj = logistic_objective(x, y, fit.w, fit.b, lambda);
  fit.loss_history.push_back(obj.loss);
  Scalar step = 1;
  for (; fit.iterations < params.max_iterations; ++fit.iterations) {
    const Scalar g2 = obj.grad_w.squaredNorm() + obj.grad_b * obj.grad_b;
    if (std::sqrt(g2) <= Scalar(params.tolerance)) {
      fit.converged = true;
      break;
    }
    step *= Scalar(2);
    bool accepted = false;
    while (!accepted && step > Scalar(1e-30)) {
      const Vector<Scalar> w = fit.w - step * obj.grad_w;
      const Scalar b = fit.b - step * obj.grad_b;
      auto next = logistic_objective(x, y, w, b, lambda);
      if (next.loss <= obj.loss - Scalar(params.armijo) * step * g2) {
        fit.w = w;
        fit.b = b;
        obj = std::move(next);
        accepted = true;
      } else {
        step /= Scalar(2);
      }
    }
    if (!accepted) break;  // no descent possible at machine precision
    fit.loss_history.push_back(obj.loss);
  }
  return fit;
}

}  // namespace affect::text

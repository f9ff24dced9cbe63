#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <unsupported/Eigen/FFT>

#include "affect/core/error.hpp"

namespace affect::physiology {

AFFECT_DEFINE_ERROR(TooShort, "too_short");

template <typename Scalar>
using Signal = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Zero mean, unit (population) variance. A constant input maps to zeros.
template <typename Derived>
Signal<typename Derived::Scalar> znormalize(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  Signal<Scalar> c = x.array() - x.mean();
  const Scalar sd = std::sqrt(c.squaredNorm() / Scalar(c.size()));
  if (sd > Scalar(0)) c /= sd;
  return c;
}

/// Smoothness-priors detrending: subtracts the trend z minimising
/// |x - z|^2 + lambda^2 |D2 z|^2, with D2 the second-difference operator.
template <typename Derived>
Signal<typename Derived::Scalar> detrend(const Eigen::MatrixBase<Derived>& x, typename Derived::Scalar lambda) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = x.size();
  if (n < 3) throw TooShort("detrend needs at least 3 samples");
  Eigen::SparseMatrix<Scalar> d2(n - 2, n);
  std::vector<Eigen::Triplet<Scalar>> entries;
  entries.reserve(std::size_t(3 * (n - 2)));
  for (Eigen::Index i = 0; i < n - 2; ++i) {
    entries.emplace_back(i, i, Scalar(1));
    entries.emplace_back(i, i + 1, Scalar(-2));
    entries.emplace_back(i, i + 2, Scalar(1));
  }
  d2.setFromTriplets(entries.begin(), entries.end());
  Eigen::SparseMatrix<Scalar> a(n, n);
  a.setIdentity();
  a += (lambda * lambda) * Eigen::SparseMatrix<Scalar>(d2.transpose() * d2);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<Scalar>> solver(a);
  const Signal<Scalar> trend = solver.solve(x.eval());
  return x - trend;
}

/// One-sided power spectrum |X_k|^2 / n of the zero-padded signal, bins
/// 0..nfft/2 at spacing sample_rate / nfft.
template <typename Derived>
Signal<typename Derived::Scalar> power_spectrum(const Eigen::MatrixBase<Derived>& x, Eigen::Index nfft) {
  using Scalar = typename Derived::Scalar;
  nfft = std::max(nfft, x.size());
  std::vector<Scalar> padded(std::size_t(nfft), Scalar(0));
  for (Eigen::Index i = 0; i < x.size(); ++i) padded[std::size_t(i)] = x(i);
  std::vector<std::complex<Scalar>> spectrum;
  Eigen::FFT<Scalar> fft;
  fft.fwd(spectrum, padded);
  Signal<Scalar> p(nfft / 2 + 1);
  for (Eigen::Index k = 0; k < p.size(); ++k) p(k) = std::norm(spectrum[std::size_t(k)]) / Scalar(x.size());
  return p;
}

template <typename Scalar>
struct SpectralPeak {
  Scalar frequency = 0;  // Hz
  Scalar power = 0;
  Scalar snr = 0;  // peak power over mean in-band power
};

/// Largest in-band bin of a one-sided spectrum, refined by parabolic
/// interpolation over its neighbours and clamped to the band.
template <typename Derived>
SpectralPeak<typename Derived::Scalar> band_peak(const Eigen::MatrixBase<Derived>& power,
                                                 typename Derived::Scalar bin_hz, typename Derived::Scalar lo,
                                                 typename Derived::Scalar hi) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index first = std::max<Eigen::Index>(1, Eigen::Index(std::ceil(lo / bin_hz)));
  const Eigen::Index last = std::min<Eigen::Index>(power.size() - 2, Eigen::Index(std::floor(hi / bin_hz)));
  SpectralPeak<Scalar> peak;
  if (last < first) return peak;
  Eigen::Index k = first;
  for (Eigen::Index i = first; i <= last; ++i)
    if (power(i) > power(k)) k = i;
  const Scalar mean = power.segment(first, last - first + 1).mean();
  const Scalar a = power(k - 1), b = power(k), c = power(k + 1);
  const Scalar denom = a - Scalar(2) * b + c;
  const Scalar offset = denom < Scalar(0) ? Scalar(0.5) * (a - c) / denom : Scalar(0);
  peak.frequency = std::clamp((Scalar(k) + offset) * bin_hz, lo, hi);
  peak.power = b - Scalar(0.25) * (a - c) * offset;
  peak.snr = mean > Scalar(0) ? peak.power / mean : Scalar(0);
  return peak;
}

/// Ideal band-pass by zeroing DFT bins outside [lo, hi] Hz.
template <typename Derived>
Signal<typename Derived::Scalar> fft_bandpass(const Eigen::MatrixBase<Derived>& x, typename Derived::Scalar sample_rate,
                                              typename Derived::Scalar lo, typename Derived::Scalar hi) {
  using Scalar = typename Derived::Scalar;
  const std::size_t n = std::size_t(x.size());
  std::vector<Scalar> in(n);
  for (std::size_t i = 0; i < n; ++i) in[i] = x(Eigen::Index(i));
  std::vector<std::complex<Scalar>> spectrum;
  Eigen::FFT<Scalar> fft;
  fft.fwd(spectrum, in);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t m = std::min(k, n - k);
    const Scalar f = Scalar(m) * sample_rate / Scalar(n);
    if (f < lo || f > hi) spectrum[k] = 0;
  }
  std::vector<Scalar> out;
  fft.inv(out, spectrum);
  return Eigen::Map<const Signal<Scalar>>(out.data(), Eigen::Index(n));
}

}  // namespace affect::physiology

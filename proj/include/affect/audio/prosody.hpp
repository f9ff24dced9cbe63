#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <vector>

#include <Eigen/Core>
#include <unsupported/Eigen/FFT>

#include "affect/audio/types.hpp"

namespace affect::audio {

template <typename Derived>
typename Derived::Scalar rms(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  if (x.size() == 0) return Scalar(0);
  return std::sqrt(x.squaredNorm() / Scalar(x.size()));
}

struct PitchParams {
  double min_hz = 60.0;
  double max_hz = 400.0;
  double voicing_threshold = 0.45;
};

/// Biased autocorrelation r(k) / r(0) for k = 0..max_lag.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> normalized_autocorrelation(
    const Eigen::MatrixBase<Derived>& x, Eigen::Index max_lag) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = x.size();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> r = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(max_lag + 1);
  const Scalar r0 = x.squaredNorm();
  if (r0 <= Scalar(0)) return r;
  for (Eigen::Index k = 0; k <= max_lag && k < n; ++k) r(k) = x.head(n - k).dot(x.tail(n - k)) / r0;
  return r;
}

/// Fundamental frequency from the highest local maximum of the normalised
/// autocorrelation within the lag range of [min_hz, max_hz], refined by
/// parabolic interpolation. Empty when that peak is below the voicing
/// threshold.
template <typename Derived>
std::optional<double> estimate_pitch(const Eigen::MatrixBase<Derived>& x, double sample_rate,
                                     const PitchParams& params = {}) {
  const auto min_lag = Eigen::Index(std::floor(sample_rate / params.max_hz));
  const auto max_lag = Eigen::Index(std::ceil(sample_rate / params.min_hz));
  if (x.size() <= max_lag + 1) return std::nullopt;
  const auto r = normalized_autocorrelation(x, max_lag + 1);
  Eigen::Index best = -1;
  for (Eigen::Index k = std::max<Eigen::Index>(min_lag, 1); k <= max_lag; ++k) {
    if (r(k) > r(k - 1) && r(k) >= r(k + 1) && (best < 0 || r(k) > r(best))) best = k;
  }
  if (best < 0 || double(r(best)) < params.voicing_threshold) return std::nullopt;
  const double a = r(best - 1), b = r(best), c = r(best + 1);
  const double denom = a - 2 * b + c;
  const double offset = denom < 0 ? 0.5 * (a - c) / denom : 0.0;
  const double f = sample_rate / (double(best) + offset);
  if (f < params.min_hz || f > params.max_hz) return std::nullopt;
  return f;
}

/// Pitch and RMS energy of one 40 ms frame. Throws BadFrameLength.
template <typename Derived>
ProsodyFeatures extract_prosody(const Eigen::MatrixBase<Derived>& frame, Timestamp frame_time,
                                const PitchParams& params = {}) {
  if (frame.size() != kProsodyFrame)
    throw BadFrameLength("prosody frame must hold " + std::to_string(kProsodyFrame) + " samples");
  ProsodyFeatures f;
  f.energy_rms = double(rms(frame));
  f.pitch_hz = estimate_pitch(frame, double(kSampleRate), params);
  f.frame_time = frame_time;
  return f;
}

/// Prosody over consecutive 640-sample frames with a 320-sample hop.
template <typename Derived>
std::vector<ProsodyFeatures> prosody_track(const Eigen::MatrixBase<Derived>& x, Timestamp start,
                                           const PitchParams& params = {}) {
  std::vector<ProsodyFeatures> out;
  for (Eigen::Index s = 0; s + kProsodyFrame <= x.size(); s += kVadFrame)
    out.push_back(extract_prosody(x.segment(s, kProsodyFrame), start + Duration(s * 1000000 / kSampleRate), params));
  return out;
}

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

/// Triangular filters equally spaced on the mel scale over [fmin, fmax],
/// one row per filter over the nfft/2 + 1 power bins; each row sums to one.
template <typename Scalar = double>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> mel_filterbank(int filters = 26, int nfft = 512,
                                                                    double sample_rate = kSampleRate,
                                                                    double fmin = 0.0, double fmax = -1.0) {
  if (fmax <= 0) fmax = sample_rate / 2;
  const int bins = nfft / 2 + 1;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> fb =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(filters, bins);
  const double lo = hz_to_mel(fmin), hi = hz_to_mel(fmax);
  std::vector<double> edges(std::size_t(filters + 2));
  for (int i = 0; i < filters + 2; ++i) edges[std::size_t(i)] = mel_to_hz(lo + (hi - lo) * i / (filters + 1));
  for (int m = 0; m < filters; ++m) {
    const double left = edges[std::size_t(m)], centre = edges[std::size_t(m + 1)], right = edges[std::size_t(m + 2)];
    for (int k = 0; k < bins; ++k) {
      const double f = k * sample_rate / nfft;
      double w = 0.0;
      if (f > left && f <= centre) w = (f - left) / (centre - left);
      else if (f > centre && f < right) w = (right - f) / (right - centre);
      fb(m, k) = Scalar(w);
    }
    // a filter narrower than the bin spacing takes its nearest bin
    if (fb.row(m).sum() <= Scalar(0)) fb(m, int(std::lround(centre * nfft / sample_rate))) = Scalar(1);
    fb.row(m) /= fb.row(m).sum();
  }
  return fb;
}

/// Log mel energies of one frame (Hamming window, zero padded to nfft).
template <typename Derived, typename FbDerived>
Eigen::Matrix<typename FbDerived::Scalar, Eigen::Dynamic, 1> log_mel(const Eigen::MatrixBase<Derived>& frame,
                                                                     const Eigen::MatrixBase<FbDerived>& fb) {
  using Scalar = typename FbDerived::Scalar;
  const Eigen::Index nfft = (fb.cols() - 1) * 2;
  std::vector<Scalar> padded(std::size_t(nfft), Scalar(0));
  const Eigen::Index n = std::min<Eigen::Index>(frame.size(), nfft);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double w = n > 1 ? 0.54 - 0.46 * std::cos(2 * std::numbers::pi * double(i) / double(n - 1)) : 1.0;
    padded[std::size_t(i)] = Scalar(w * double(frame(i)));
  }
  std::vector<std::complex<Scalar>> spectrum;
  Eigen::FFT<Scalar> fft;
  fft.fwd(spectrum, padded);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> power(fb.cols());
  for (Eigen::Index k = 0; k < power.size(); ++k) power(k) = std::norm(spectrum[std::size_t(k)]) / Scalar(nfft);
  return ((fb * power).array() + Scalar(1e-10)).log().matrix();
}

/// Log mel frames (25 ms, 10 ms hop) over a whole segment; rows are frames.
template <typename Derived>
Eigen::MatrixXd mel_features(const Eigen::MatrixBase<Derived>& x, int filters = 26) {
  constexpr Eigen::Index frame = kSampleRate / 40, hop = kSampleRate / 100;
  const Eigen::MatrixXd fb = mel_filterbank<double>(filters);
  const Eigen::Index count = x.size() < frame ? 0 : (x.size() - frame) / hop + 1;
  Eigen::MatrixXd out(count, filters);
  for (Eigen::Index i = 0; i < count; ++i)
    out.row(i) = log_mel(x.segment(i * hop, frame).template cast<double>(), fb).transpose();
  return out;
}

}  // namespace affect::audio

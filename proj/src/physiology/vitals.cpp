#include "affect/physiology/vitals.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "affect/physiology/ar.hpp"
#include "affect/physiology/dsp.hpp"

namespace affect::physiology {

namespace {

Timestamp sample_time(const RgbTrace& trace, Eigen::Index i) {
  return trace.start_time + seconds_to_duration(double(i) / trace.sample_rate);
}

void require_window(const RgbTrace& trace, int window_length) {
  if (window_length < 3 || trace.samples.rows() < window_length)
    throw WindowIncomplete("need " + std::to_string(window_length) + " contiguous samples, have " +
                           std::to_string(trace.samples.rows()));
}

}  // namespace

Eigen::Vector3d spatial_average(const vision::VideoFrame& frame, const vision::BoundingBox& roi) {
  if (roi.area() <= 0) throw EmptyRoi("roi has zero area");
  if (!roi.inside(frame.width, frame.height)) throw std::out_of_range("roi outside frame");
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  for (int y = roi.y; y < roi.y + roi.h; ++y)
    for (int x = roi.x; x < roi.x + roi.w; ++x) {
      const auto* p = frame.at(x, y);
      sum += Eigen::Vector3d(p[0], p[1], p[2]);
    }
  return sum / double(roi.area());
}

HrEstimate estimate_hr(const RgbTrace& trace, const HrParams& params) {
  require_window(trace, params.window_length);
  const Eigen::Index n = params.window_length;
  Eigen::Matrix<double, Eigen::Dynamic, 3> x(n, 3);
  for (int c = 0; c < 3; ++c) {
    const Signal<double> z = znormalize(trace.samples.col(c).head(n));
    x.col(c) = znormalize(detrend(z, params.detrend_lambda));
  }
  Eigen::MatrixXd sources;
  try {
    sources = ica_decompose(x, params.ica);
  } catch (const ConvergenceFailure&) {
    sources = x.col(1);
  }
  const Eigen::Index nfft = std::max(params.nfft, n);
  const double bin_hz = trace.sample_rate / double(nfft);
  SpectralPeak<double> best;
  bool found = false;
  for (Eigen::Index s = 0; s < sources.cols(); ++s) {
    const auto peak = band_peak(power_spectrum(sources.col(s), nfft), bin_hz, params.band_lo, params.band_hi);
    if (!found || peak.snr > best.snr) {
      best = peak;
      found = true;
    }
  }
  HrEstimate out;
  out.bpm = 60.0 * (best.frequency > 0 ? best.frequency : params.band_lo);
  out.snr = best.snr;
  out.window_start = sample_time(trace, 0);
  out.window_end = sample_time(trace, n - 1);
  return out;
}

std::vector<HrEstimate> estimate_hr_windows(const RgbTrace& trace, const HrParams& params) {
  require_window(trace, params.window_length);
  if (params.hop < 1) throw std::invalid_argument("hop must be positive");
  std::vector<HrEstimate> out;
  for (Eigen::Index s = 0; s + params.window_length <= trace.samples.rows(); s += params.hop) {
    RgbTrace w{trace.samples.middleRows(s, params.window_length), trace.sample_rate, sample_time(trace, s)};
    out.push_back(estimate_hr(w, params));
  }
  return out;
}

RespEstimate estimate_respiration(const RgbTrace& trace, const RespParams& params) {
  require_window(trace, params.window_length);
  const Eigen::Index n = params.window_length;
  const Signal<double> green = detrend(znormalize(trace.samples.col(1).head(n)), params.detrend_lambda);
  const Signal<double> band = fft_bandpass(green, trace.sample_rate, params.band_lo, params.band_hi);
  const double total = green.squaredNorm();
  if (total <= 0 || band.squaredNorm() < params.min_band_fraction * total)
    throw NoPoleInBand("insufficient power in the respiration band");

  // An ideal band-pass leaves a line spectrum whose AR poles all sit on the
  // unit circle, so the model is fitted to a decimated low-pass instead.
  const int q = std::max(1, int(std::lround(trace.sample_rate / params.ar_sample_rate)));
  const double rate = trace.sample_rate / q;
  const Signal<double> low = fft_bandpass(green, trace.sample_rate, 0.0, 0.999 * rate / 2);
  Signal<double> decimated(low.size() / q);
  for (Eigen::Index i = 0; i < decimated.size(); ++i) decimated(i) = low(i * q);
  const auto poles = ar_poles(burg(decimated, params.ar_order));
  double best_freq = 0, best_mag = -1;
  for (const auto& p : poles) {
    if (p.imag() < 0) continue;
    const double f = std::arg(p) * rate / (2 * std::numbers::pi);
    if (f < params.band_lo || f > params.band_hi) continue;
    if (std::abs(p) > best_mag) {
      best_mag = std::abs(p);
      best_freq = f;
    }
  }
  if (best_mag < 0) throw NoPoleInBand("no AR pole inside the respiration band");
  RespEstimate out;
  out.breaths_per_minute = 60.0 * best_freq;
  out.window_start = sample_time(trace, 0);
  out.window_end = sample_time(trace, n - 1);
  return out;
}

}  // namespace affect::physiology

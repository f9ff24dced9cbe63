#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "affect/core/error.hpp"
#include "affect/core/time.hpp"
#include "affect/physiology/ica.hpp"
#include "affect/vision/types.hpp"

namespace affect::physiology {

AFFECT_DEFINE_ERROR(EmptyRoi, "empty_roi");
AFFECT_DEFINE_ERROR(WindowIncomplete, "window_incomplete");
AFFECT_DEFINE_ERROR(NoPoleInBand, "no_pole_in_band");

/// Per-frame spatial RGB means of the face region.
struct RgbTrace {
  Eigen::Matrix<double, Eigen::Dynamic, 3> samples;
  double sample_rate = 15.0;
  Timestamp start_time{};
};

struct HrEstimate {
  std::uint64_t face_id = 0;
  double bpm = 0.0;
  double snr = 0.0;
  Timestamp window_start{};
  Timestamp window_end{};
};

struct RespEstimate {
  std::uint64_t face_id = 0;
  double breaths_per_minute = 0.0;
  Timestamp window_start{};
  Timestamp window_end{};
};

struct HrParams {
  int window_length = 300;
  int hop = 15;
  double band_lo = 0.75;  // Hz
  double band_hi = 4.0;
  double detrend_lambda = 10.0;
  Eigen::Index nfft = 2048;
  IcaParams ica;
};

struct RespParams {
  int window_length = 300;
  int hop = 15;
  double band_lo = 0.1;  // Hz
  double band_hi = 0.5;
  double detrend_lambda = 1000.0;
  int ar_order = 9;
  /// Rate the AR model is fitted at, after low-pass and decimation.
  double ar_sample_rate = 3.0;
  /// Minimum share of the detrended variance that must lie in the band.
  double min_band_fraction = 0.1;
};

/// Mean of each channel over the pixels of `roi`. Throws EmptyRoi for a
/// zero-area box and std::out_of_range when it leaves the frame.
Eigen::Vector3d spatial_average(const vision::VideoFrame& frame, const vision::BoundingBox& roi);

/// Heart rate from the first window_length samples: per-channel z-score,
/// detrend, z-score, FastICA, then the in-band spectral peak of the source
/// with the best SNR. Falls back to the green channel when ICA fails.
HrEstimate estimate_hr(const RgbTrace& trace, const HrParams& params = {});

/// One estimate per full window, windows starting every `hop` samples.
std::vector<HrEstimate> estimate_hr_windows(const RgbTrace& trace, const HrParams& params = {});

/// Respiration rate from the first window_length samples: green channel,
/// detrend, then a Burg AR fit on the low-passed and decimated trace and the
/// in-band pole of largest magnitude. Throws NoPoleInBand when the band-passed
/// trace carries too little power or no pole falls inside the band.
RespEstimate estimate_respiration(const RgbTrace& trace, const RespParams& params = {});

}  // namespace affect::physiology

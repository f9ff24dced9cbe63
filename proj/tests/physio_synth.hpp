#pragma once

#include <cmath>
#include <numbers>
#include <random>

#include "affect/physiology/vitals.hpp"

namespace synth {

struct PulseSpec {
  double hr_hz = 1.2;
  double snr_db = 10.0;  // cardiac power over noise power, green channel
  double amplitude = 1.0;
  double resp_hz = 0.0;  // 0 disables the respiratory component
  double resp_amplitude = 0.0;
  double drift_per_sample = 0.01;
  int samples = 300;
  double fs = 15.0;
  unsigned seed = 1;
};

/// Face-colour trace with a cardiac sinusoid strongest in green, a slow
/// drift and white noise on every channel.
inline affect::physiology::RgbTrace pulse_trace(const PulseSpec& s) {
  std::mt19937 rng(s.seed);
  const double sigma = std::sqrt(s.amplitude * s.amplitude / 2.0 / std::pow(10.0, s.snr_db / 10.0));
  std::normal_distribution<double> noise(0.0, sigma);
  std::uniform_real_distribution<double> phase(0, 2 * std::numbers::pi);
  const double ph = phase(rng), rph = phase(rng);
  const double base[3] = {150, 110, 90};
  const double weight[3] = {0.3, 1.0, 0.15};
  affect::physiology::RgbTrace t;
  t.samples.resize(s.samples, 3);
  t.sample_rate = s.fs;
  for (int i = 0; i < s.samples; ++i) {
    const double time = i / s.fs;
    const double pulse = s.amplitude * std::sin(2 * std::numbers::pi * s.hr_hz * time + ph);
    const double breath = s.resp_amplitude * std::sin(2 * std::numbers::pi * s.resp_hz * time + rph);
    for (int c = 0; c < 3; ++c)
      t.samples(i, c) = base[c] + weight[c] * pulse + breath + s.drift_per_sample * i + noise(rng);
  }
  return t;
}

}  // namespace synth

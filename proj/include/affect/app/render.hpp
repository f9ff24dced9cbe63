#pragma once

#include <string>
#include <string_view>

#include "affect/sinks/metrics.hpp"

namespace affect::app {

/// Marker for a field with no value in the window.
inline constexpr std::string_view kAbsent = "\xe2\x80\x94";

/// Fixed-width console view of one row. Labels take 12 columns, per-face
/// labels 4 (e.g. "  HR  72.0 bpm"); absent values print as kAbsent.
std::string render_metrics(const sinks::MetricsRow& row);

}  // namespace affect::app

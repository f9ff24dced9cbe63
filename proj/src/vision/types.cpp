#include "affect/vision/types.hpp"

#include <algorithm>
#include <stdexcept>

namespace affect::vision {

void VideoFrame::fill_rect(const BoundingBox& box, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  const int x0 = std::max(0, box.x), y0 = std::max(0, box.y);
  const int x1 = std::min(width, box.x + box.w), y1 = std::min(height, box.y + box.h);
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      auto* p = at(x, y);
      p[0] = r;
      p[1] = g;
      p[2] = b;
    }
  }
}

VideoFrame crop(const VideoFrame& frame, const BoundingBox& box) {
  if (!box.inside(frame.width, frame.height) || box.w == 0 || box.h == 0)
    throw std::out_of_range("crop box outside frame");
  VideoFrame patch(box.w, box.h);
  const std::size_t row_bytes = std::size_t(box.w) * 3;
  for (int y = 0; y < box.h; ++y)
    std::copy_n(frame.at(box.x, box.y + y), row_bytes, patch.at(0, y));
  return patch;
}

}  // namespace affect::vision

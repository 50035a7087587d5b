#pragma once

#include <stdexcept>
#include <vector>

#include "usrecon/geometry.hpp"

namespace usrecon {

// Tracked acquisition: a stack of images with per-frame poses. `poses` holds
// the working (possibly noise-corrupted) poses the reconstruction starts from;
// `truth_poses` is empty when no reference trajectory exists.
struct FrameSequence {
  int width = 0;
  int height = 0;
  double d_pixel = 0;          // in-plane pixel size, mm
  double slice_thickness = 0;  // elevation extent of the imaging cell, mm
  std::vector<float> pixels;   // frame-major, then row-major (h*width + w)
  std::vector<RigidPose> poses;
  std::vector<RigidPose> truth_poses;

  int num_frames() const { return static_cast<int>(poses.size()); }
  size_t pixel_index(int f, int w, int h) const {
    return (static_cast<size_t>(f) * height + h) * width + w;
  }
  float pixel(int f, int w, int h) const { return pixels[pixel_index(f, w, h)]; }

  // Consistency of sizes and value ranges; throws std::invalid_argument.
  void validate() const {
    if (width < 1 || height < 1)
      throw std::invalid_argument("frame dimensions must be positive");
    if (!(d_pixel > 0)) throw std::invalid_argument("d_pixel must be positive");
    if (!(slice_thickness > 0))
      throw std::invalid_argument("slice_thickness must be positive");
    if (poses.empty()) throw std::invalid_argument("sequence has no frames");
    if (pixels.size() !=
        static_cast<size_t>(poses.size()) * width * height)
      throw std::invalid_argument("pixel buffer size does not match frames");
    if (!truth_poses.empty() && truth_poses.size() != poses.size())
      throw std::invalid_argument("truth pose count does not match frames");
    for (float v : pixels) {
      if (!(v >= 0.0f && v <= 1.0f))
        throw std::invalid_argument("pixel intensities must lie in [0, 1]");
    }
  }
};

}  // namespace usrecon

#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "usrecon/geometry.hpp"

namespace usrecon {

// Regular voxel grid. `origin` is the center of voxel (0, 0, 0); data is laid
// out x-fastest: index = ix + nx*(iy + ny*iz).
struct VolumeGrid {
  Vec3 origin = Vec3::Zero();
  double spacing = 0.2;  // mm
  int nx = 0, ny = 0, nz = 0;

  size_t count() const {
    return static_cast<size_t>(nx) * ny * nz;
  }
  size_t index(int ix, int iy, int iz) const {
    return static_cast<size_t>(ix) +
           static_cast<size_t>(nx) *
               (static_cast<size_t>(iy) + static_cast<size_t>(ny) * iz);
  }
  Vec3 center(int ix, int iy, int iz) const {
    return origin + spacing * Vec3(ix, iy, iz);
  }
  int dim(int axis) const { return axis == 0 ? nx : (axis == 1 ? ny : nz); }
  void validate() const {
    if (nx < 1 || ny < 1 || nz < 1)
      throw std::invalid_argument("volume grid dimensions must be positive");
    if (!(spacing > 0))
      throw std::invalid_argument("voxel spacing must be positive");
  }
};

struct Volume {
  VolumeGrid grid;
  std::vector<float> data;
};

}  // namespace usrecon

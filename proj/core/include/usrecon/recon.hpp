#pragma once

#include <array>
#include <vector>

#include "usrecon/field.hpp"
#include "usrecon/sequence.hpp"
#include "usrecon/volume.hpp"

namespace usrecon {

// Field sampled at every voxel center, in x-fastest order. Points outside the
// field's domain box clamp to it (check grid_within_domain to surface that).
Volume query_volume(const ImplicitField& field, const VolumeGrid& grid,
                    int chunk_voxels = 65536);

bool grid_within_domain(const VolumeGrid& grid, const DomainBox& domain);

struct VnnResult {
  Volume volume;
  double fill_ratio = 0.0;  // fraction of voxels hit by at least one pixel
};

// Baseline: each pixel lands in the voxel containing its world position;
// voxel value = mean of its pixels; untouched voxels stay 0. Poses may come
// from anywhere (tracker, truth, refinement) but must match the sequence.
VnnResult vnn_reconstruct(const FrameSequence& seq,
                          const std::vector<RigidPose>& poses,
                          const VolumeGrid& grid);

// Otsu's threshold over [0, 1] with 256 bins; returns the boundary value
// separating the two classes (foreground: value >= threshold).
double otsu_threshold(const std::vector<float>& values);

struct LineFitOptions {
  int axis = 2;             // slicing axis (0/1/2); default: sweep axis
  double threshold = -1.0;  // < 0: Otsu over the evaluation region
  std::array<int, 3> lo{0, 0, 0};        // inclusive index bounds per axis
  std::array<int, 3> hi{-1, -1, -1};     // -1: last index of that axis
};

struct LineFitReport {
  std::vector<Vec3> barycenters;    // per populated slice, mm
  std::vector<double> distances;    // per barycenter, mm
  Vec3 line_point = Vec3::Zero();   // point on the fitted line
  Vec3 line_direction = Vec3::Zero();  // unit direction
  double lfe = 0.0;                 // mean distance, mm
  double threshold = 0.0;           // threshold actually applied
};

// Threshold -> per-slice intensity-weighted barycenters along `axis` ->
// total-least-squares 3D line (principal axis of the barycenter covariance)
// -> mean point-to-line distance. Throws if fewer than 3 slices are populated.
LineFitReport line_fit_error(const Volume& vol, const LineFitOptions& opt = {});

// 10*log10(1/MSE) over all voxels; identical volumes -> +infinity sentinel.
// Grids must match exactly.
double psnr(const Volume& a, const Volume& b);

// Pearson correlation over all voxels; throws if either volume is constant.
double pearson(const Volume& a, const Volume& b);

struct PoseError {
  double mean_translation_mm = 0.0;
  double mean_rotation_deg = 0.0;
};

// Per-frame translation distance and geodesic rotation angle, averaged.
PoseError pose_error(const std::vector<RigidPose>& estimated,
                     const std::vector<RigidPose>& reference);

}  // namespace usrecon

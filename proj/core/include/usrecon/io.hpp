#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "usrecon/field.hpp"
#include "usrecon/sequence.hpp"
#include "usrecon/training.hpp"
#include "usrecon/volume.hpp"

namespace usrecon {

// FNV-1a, 64-bit; used as the content checksum in manifests and checkpoints.
uint64_t fnv1a64(const void* data, size_t n);

// Writes to <path>.tmp then renames, so readers never see partial files.
void atomic_write_file(const std::string& path, const std::string& bytes);

// --- sequence bundles -------------------------------------------------------
// Directory layout: manifest.json, frames.raw (little-endian float32, frame-
// major then row-major, values in [0,1]), poses.csv, optional truth_poses.csv.
// Pose rows: index, qw, qx, qy, qz, tx, ty, tz — Hamilton convention,
// scalar-first unit quaternion, translation in mm.
void save_bundle(const std::string& dir, const FrameSequence& seq);
FrameSequence load_bundle(const std::string& dir);

void save_poses_csv(const std::string& path,
                    const std::vector<RigidPose>& poses);
std::vector<RigidPose> load_poses_csv(const std::string& path);

// --- checkpoints ------------------------------------------------------------
// Versioned little-endian binary: field configuration + parameters + the pose
// trajectory the field was trained against, checksummed.
struct Checkpoint {
  HashEncodingConfig encoding;
  MlpConfig mlp;
  std::vector<double> table;
  MlpParams params;
  std::vector<RigidPose> poses;  // refined (or initial, if refinement was off)
  double slice_thickness = 0.0;  // mm; provenance for sigma-matched rendering
};

Checkpoint checkpoint_from(const ImplicitField& field,
                           const std::vector<RigidPose>& poses,
                           double slice_thickness);
ImplicitField field_from(const Checkpoint& ck);

void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

// --- volumes ----------------------------------------------------------------
// <stem>.raw (little-endian float32, x fastest, then y, then z) plus
// <stem>.json sidecar with dims, spacing, origin, axis order, and dtype.
void save_volume(const std::string& stem, const Volume& vol);
Volume load_volume(const std::string& stem);

// --- training trace ---------------------------------------------------------
void save_trace_csv(const std::string& path,
                    const std::vector<EpochTrace>& trace);

}  // namespace usrecon

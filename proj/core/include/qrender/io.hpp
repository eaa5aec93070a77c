/* SPDX-FileCopyrightText: 2026 qrender authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include "qrender/integrators.hpp"
#include "qrender/scene.hpp"
#include "qrender/synth.hpp"
#include "qrender/voxel.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qrender {

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

/// {width, height, fx, fy, cx, cy, world_to_camera: 16 numbers row-major, near}.
/// Throws SchemaError naming the offending JSON path.
CameraModel parse_camera_json(std::string_view text);
std::string camera_to_json(const CameraModel& cam);

/// Every field is optional; unknown keys are rejected.
SyntheticSceneSpec parse_scene_spec(std::string_view text);
std::string scene_spec_to_json(const SyntheticSceneSpec& spec);

/// {"clusters": k, "labels": [...]}.
std::string labels_to_json(std::span<const int> labels, int clusters);
std::vector<int> parse_labels_json(std::string_view text);

/// Binary PPM (P6), 8-bit, channel value round(clamp(v, 0, 1) * 255). Needs 3 channels.
std::string encode_ppm(const RenderedMap& map);

/// Raw little-endian f32 H x W x C at `path` plus `path`.json {height, width, channels}.
void write_feature_map(const std::filesystem::path& path, const RenderedMap& map);
RenderedMap read_feature_map(const std::filesystem::path& path);

/// Raw little-endian f32 rows at `path` plus `path`.json {count, channels, seed, steps}.
void write_feature_table(const std::filesystem::path& path, const FeatureTable& table, std::uint64_t seed, int steps);
FeatureTable read_feature_table(const std::filesystem::path& path);

/// ray_id, order, gaussian_id, depth, alpha_prime, T_before, T_after, selected_volume,
/// selected_quantile, selected_topk, selected_stratified.
void write_trace_csv(std::ostream& out, std::span<const TransmittanceTrace> traces);

/// "QVOX", u32 version, f64 grid size, u64 unique, u64 sampled, u64 gaussians,
/// u32 feature width, then i32 coords (unique x 3), f64 features (unique x width),
/// i64 inverse (sampled), i64 counts (gaussians). All little-endian.
std::string encode_voxels(const VoxelSet& set);
VoxelSet decode_voxels(std::string_view bytes);

/// Companion path for JSON sidecars: `path` + ".json".
std::filesystem::path sidecar_path(const std::filesystem::path& path);

}  // namespace qrender

/* SPDX-FileCopyrightText: 2026 qrender authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include "qrender/scene.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace qrender {

struct PlyScene {
    GaussianScene scene;
    std::optional<FeatureTable> features;
};

/// Reads a binary little-endian PLY in the common Gaussian-splatting layout.
///
/// Required vertex properties: x y z, f_dc_0..2, opacity (logit), scale_0..2
/// (log scale), rot_0..3 (w x y z, unnormalised). Optional: f_rest_* (SH degree
/// inferred from their count), feat_0..feat_{C-1} (feature table). Other
/// properties are skipped. Throws SchemaError for layout problems and
/// ParseError for truncated data or non-finite values.
PlyScene load_ply(std::string_view bytes);
PlyScene load_ply_file(const std::filesystem::path& path);

/// Writes the layout accepted by load_ply. All properties are float32; normals
/// are emitted as zeros for compatibility with common viewers.
std::string write_ply(const GaussianScene& scene, const FeatureTable* features = nullptr);
void write_ply_file(const std::filesystem::path& path, const GaussianScene& scene,
                    const FeatureTable* features = nullptr);

}  // namespace qrender

/* SPDX-FileCopyrightText: 2026 qrender authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#include "qrender/error.hpp"
#include "qrender/ply.hpp"
#include "qrender/synth.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

using namespace qrender;

namespace {

std::string header(const std::vector<std::string>& props, std::size_t count) {
    std::string h = "ply\nformat binary_little_endian 1.0\nelement vertex " + std::to_string(count) + "\n";
    for (const auto& p : props) h += "property float " + p + "\n";
    return h + "end_header\n";
}

void put(std::string& out, float v) { out.append(reinterpret_cast<const char*>(&v), sizeof v); }

const std::vector<std::string> kLayout{"x",       "y",       "z",       "nx",      "ny",    "nz",   "f_dc_0",
                                       "f_dc_1",  "f_dc_2",  "opacity", "scale_0", "scale_1", "scale_2",
                                       "rot_0",   "rot_1",   "rot_2",   "rot_3"};

// One vertex authored by hand in the writer's own layout.
std::string single_gaussian_fixture() {
    std::string bytes = header(kLayout, 1);
    for (float v : {0.25f, -1.5f, 3.0f, 0.0f, 0.0f, 0.0f, 0.5f, -0.25f, 1.0f, 0.0f, 0.0f, std::log(2.0f), -1.0f, 1.0f,
                    0.0f, 0.0f, 0.0f})
        put(bytes, v);
    return bytes;
}

}  // namespace

TEST(Ply, SingleGaussianFixtureFields) {
    const auto ply = load_ply(single_gaussian_fixture());
    ASSERT_EQ(ply.scene.size(), 1u);
    EXPECT_FALSE(ply.features.has_value());
    const auto& g = ply.scene[0];
    EXPECT_EQ(g.center, Eigen::Vector3d(0.25, -1.5, 3.0));
    EXPECT_EQ(g.opacity, 0.5);
    EXPECT_EQ(g.scale.x(), 1.0);
    EXPECT_NEAR(g.scale.y(), 2.0, 1e-6);
    EXPECT_DOUBLE_EQ(g.scale.z(), std::exp(-1.0));
    EXPECT_EQ(g.rotation.w(), 1.0);
    EXPECT_EQ(g.sh_degree, 0);
    EXPECT_EQ(g.sh, (std::vector<double>{0.5, -0.25, 1.0}));
}

TEST(Ply, SingleGaussianFixtureRoundTripsBitExact) {
    const std::string bytes = single_gaussian_fixture();
    EXPECT_EQ(write_ply(load_ply(bytes).scene), bytes);
}

TEST(Ply, GeneratedCorpusRoundTripsBitExact) {
    for (int degree = 0; degree <= 3; ++degree) {
        SyntheticSceneSpec spec;
        spec.count = 300;
        spec.sh_degree = degree;
        spec.clusters = 3;
        spec.seed = static_cast<std::uint64_t>(degree);
        const std::string first = write_ply(generate_scene(spec).scene);
        const auto loaded = load_ply(first);
        EXPECT_EQ(write_ply(loaded.scene), first) << "degree " << degree;
        EXPECT_EQ(loaded.scene[0].sh_degree, degree);
    }
}

TEST(Ply, FeaturesRoundTrip) {
    SyntheticSceneSpec spec;
    spec.count = 20;
    const auto scene = load_ply(write_ply(generate_scene(spec).scene)).scene;
    const auto table = smooth_features(scene, 5, 2);
    const std::string bytes = write_ply(scene, &table);
    const auto loaded = load_ply(bytes);
    ASSERT_TRUE(loaded.features.has_value());
    EXPECT_EQ(*loaded.features, table);
    EXPECT_EQ(write_ply(loaded.scene, &*loaded.features), bytes);
}

TEST(Ply, LogitAndLogScaleConventions) {
    std::string bytes = header(kLayout, 1);
    for (float v : {0.f, 0.f, 0.f, 0.f, 0.f, 0.f, 0.f, 0.f, 0.f, 0.f, 0.f, 0.f, 0.f, 2.f, 0.f, 0.f, 0.f}) put(bytes, v);
    const auto g = load_ply(bytes).scene[0];
    EXPECT_EQ(g.opacity, 0.5);
    EXPECT_EQ(g.scale, Eigen::Vector3d(1, 1, 1));
    EXPECT_EQ(g.rotation.w(), 1.0);
    EXPECT_NEAR(g.rotation.norm(), 1.0, 1e-15);
}

TEST(Ply, EmptyScene) {
    const auto bytes = write_ply(GaussianScene{});
    EXPECT_EQ(load_ply(bytes).scene.size(), 0u);
}

TEST(Ply, MissingPropertyIsNamed) {
    std::vector<std::string> props = kLayout;
    props.erase(props.begin() + 9);
    std::string bytes = header(props, 1);
    for (std::size_t i = 0; i < props.size(); ++i) put(bytes, i == 13 ? 1.0f : 0.0f);
    try {
        load_ply(bytes);
        FAIL() << "expected SchemaError";
    } catch (const SchemaError& e) {
        EXPECT_NE(std::string(e.what()).find("opacity"), std::string::npos);
    }
}

TEST(Ply, NonFiniteValueReportsVertex) {
    std::string bytes = header(kLayout, 2);
    for (int v = 0; v < 2; ++v)
        for (std::size_t i = 0; i < kLayout.size(); ++i)
            put(bytes, (v == 1 && i == 1) ? std::nanf("") : (i == 13 ? 1.0f : 0.0f));
    try {
        load_ply(bytes);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("vertex 1"), std::string::npos);
    }
}

TEST(Ply, TruncatedAndForeignFormats) {
    std::string bytes = single_gaussian_fixture();
    bytes.resize(bytes.size() - 3);
    EXPECT_THROW(load_ply(bytes), ParseError);
    EXPECT_THROW(load_ply("ply\nformat ascii 1.0\nelement vertex 0\nend_header\n"), SchemaError);
    EXPECT_THROW(load_ply("not a ply"), SchemaError);
}

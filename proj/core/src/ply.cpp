/* SPDX-FileCopyrightText: 2026 qrender authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#include "qrender/ply.hpp"

#include "qrender/error.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>
#include <unordered_map>
#include <vector>

namespace qrender {

static_assert(std::endian::native == std::endian::little, "PLY I/O assumes a little-endian host");

namespace {

enum class ScalarType { i8, u8, i16, u16, i32, u32, f32, f64 };

struct Property {
    std::string name;
    ScalarType type;
    std::size_t offset;
};

std::optional<ScalarType> parse_type(const std::string& t) {
    static const std::unordered_map<std::string, ScalarType> types = {
        {"char", ScalarType::i8},     {"int8", ScalarType::i8},      {"uchar", ScalarType::u8},
        {"uint8", ScalarType::u8},    {"short", ScalarType::i16},    {"int16", ScalarType::i16},
        {"ushort", ScalarType::u16},  {"uint16", ScalarType::u16},   {"int", ScalarType::i32},
        {"int32", ScalarType::i32},   {"uint", ScalarType::u32},     {"uint32", ScalarType::u32},
        {"float", ScalarType::f32},   {"float32", ScalarType::f32},  {"double", ScalarType::f64},
        {"float64", ScalarType::f64},
    };
    auto it = types.find(t);
    if (it == types.end()) return std::nullopt;
    return it->second;
}

std::size_t type_size(ScalarType t) {
    switch (t) {
        case ScalarType::i8:
        case ScalarType::u8: return 1;
        case ScalarType::i16:
        case ScalarType::u16: return 2;
        case ScalarType::i32:
        case ScalarType::u32:
        case ScalarType::f32: return 4;
        case ScalarType::f64: return 8;
    }
    return 0;
}

template <class T>
T load_raw(const char* p) {
    T v;
    std::memcpy(&v, p, sizeof(T));
    return v;
}

double read_scalar(const char* p, ScalarType t) {
    switch (t) {
        case ScalarType::i8: return load_raw<std::int8_t>(p);
        case ScalarType::u8: return load_raw<std::uint8_t>(p);
        case ScalarType::i16: return load_raw<std::int16_t>(p);
        case ScalarType::u16: return load_raw<std::uint16_t>(p);
        case ScalarType::i32: return load_raw<std::int32_t>(p);
        case ScalarType::u32: return load_raw<std::uint32_t>(p);
        case ScalarType::f32: return load_raw<float>(p);
        case ScalarType::f64: return load_raw<double>(p);
    }
    return 0.0;
}

struct Header {
    std::size_t vertex_count = 0;
    std::size_t stride = 0;
    std::vector<Property> properties;
    std::size_t data_offset = 0;
};

Header parse_header(std::string_view bytes) {
    const std::string_view terminator = "end_header";
    const auto end = bytes.find(terminator);
    if (bytes.substr(0, 3) != "ply" || end == std::string_view::npos)
        throw SchemaError("not a PLY file (missing magic or end_header)");
    auto data = bytes.find('\n', end);
    if (data == std::string_view::npos) throw SchemaError("PLY header is not newline terminated");

    Header h;
    h.data_offset = data + 1;
    std::istringstream in{std::string(bytes.substr(0, end))};
    std::string line;
    bool format_seen = false;
    bool in_vertex = false;
    bool vertex_seen = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ls(line);
        std::string keyword;
        ls >> keyword;
        if (keyword == "format") {
            std::string fmt, version;
            ls >> fmt >> version;
            if (fmt != "binary_little_endian") throw SchemaError("unsupported PLY format '" + fmt + "'");
            format_seen = true;
        } else if (keyword == "element") {
            std::string name;
            std::size_t count = 0;
            ls >> name >> count;
            if (name == "vertex") {
                if (vertex_seen) throw SchemaError("duplicate vertex element");
                in_vertex = vertex_seen = true;
                h.vertex_count = count;
            } else {
                if (!vertex_seen) throw SchemaError("element '" + name + "' precedes the vertex element");
                in_vertex = false;
            }
        } else if (keyword == "property" && in_vertex) {
            std::string type, name;
            ls >> type;
            if (type == "list") throw SchemaError("list properties are not supported on vertices");
            ls >> name;
            auto t = parse_type(type);
            if (!t) throw SchemaError("unknown property type '" + type + "' for '" + name + "'");
            h.properties.push_back({name, *t, h.stride});
            h.stride += type_size(*t);
        }
    }
    if (!format_seen) throw SchemaError("PLY header has no format line");
    if (!vertex_seen) throw SchemaError("PLY has no vertex element");
    return h;
}

float to_float(double v) { return static_cast<float>(v); }

double sigmoid(double x) {
    double s = 1.0 / (1.0 + std::exp(-x));
    // Keep opacity strictly inside (0, 1) for extreme logits.
    if (s <= 0.0) s = std::numeric_limits<double>::denorm_min();
    if (s >= 1.0) s = std::nextafter(1.0, 0.0);
    return s;
}

}  // namespace

PlyScene load_ply(std::string_view bytes) {
    const Header h = parse_header(bytes);

    std::unordered_map<std::string, const Property*> by_name;
    for (const auto& p : h.properties) by_name[p.name] = &p;
    auto require = [&](const std::string& name) -> const Property& {
        auto it = by_name.find(name);
        if (it == by_name.end()) throw SchemaError("missing required vertex property '" + name + "'");
        return *it->second;
    };
    auto optional_prop = [&](const std::string& name) -> const Property* {
        auto it = by_name.find(name);
        return it == by_name.end() ? nullptr : it->second;
    };

    const Property* pos[3] = {&require("x"), &require("y"), &require("z")};
    const Property* dc[3] = {&require("f_dc_0"), &require("f_dc_1"), &require("f_dc_2")};
    const Property& opacity = require("opacity");
    const Property* scale[3] = {&require("scale_0"), &require("scale_1"), &require("scale_2")};
    const Property* rot[4] = {&require("rot_0"), &require("rot_1"), &require("rot_2"), &require("rot_3")};

    std::vector<const Property*> rest;
    while (const Property* p = optional_prop("f_rest_" + std::to_string(rest.size()))) rest.push_back(p);
    int degree = -1;
    for (int d = 0; d <= 3; ++d)
        if (rest.size() == static_cast<std::size_t>(3 * (sh_coeff_count(d) - 1))) degree = d;
    if (degree < 0)
        throw SchemaError("f_rest_* count " + std::to_string(rest.size()) + " does not match any SH degree 0..3");
    const std::size_t rest_per_channel = rest.size() / 3;

    std::vector<const Property*> feats;
    while (const Property* p = optional_prop("feat_" + std::to_string(feats.size()))) feats.push_back(p);

    const std::size_t needed = h.data_offset + h.vertex_count * h.stride;
    if (bytes.size() < needed)
        throw ParseError("PLY data truncated: expected " + std::to_string(needed) + " bytes, got " +
                         std::to_string(bytes.size()));

    std::vector<GaussianPrimitive> gaussians(h.vertex_count);
    std::vector<float> feature_values(h.vertex_count * feats.size());
    for (std::size_t i = 0; i < h.vertex_count; ++i) {
        const char* base = bytes.data() + h.data_offset + i * h.stride;
        auto get = [&](const Property& p) {
            const double v = read_scalar(base + p.offset, p.type);
            if (!std::isfinite(v))
                throw ParseError("non-finite value in property '" + p.name + "' of vertex " + std::to_string(i));
            return v;
        };
        GaussianPrimitive& g = gaussians[i];
        for (int a = 0; a < 3; ++a) {
            g.center[a] = get(*pos[a]);
            g.scale[a] = std::exp(get(*scale[a]));
        }
        g.opacity = sigmoid(get(opacity));

        Eigen::Quaterniond q(get(*rot[0]), get(*rot[1]), get(*rot[2]), get(*rot[3]));
        const double n = q.norm();
        if (!(n > 0.0)) throw ParseError("zero-length rotation quaternion at vertex " + std::to_string(i));
        // Already-unit quaternions are kept as stored so that write_ply round-trips bit-exactly.
        if (std::abs(n - 1.0) > 1e-6) q.coeffs() /= n;
        g.rotation = q;

        g.sh_degree = degree;
        g.sh.assign(static_cast<std::size_t>(sh_coeff_count(degree) * 3), 0.0);
        for (int ch = 0; ch < 3; ++ch) {
            g.sh[static_cast<std::size_t>(ch)] = get(*dc[ch]);
            for (std::size_t j = 0; j < rest_per_channel; ++j)
                g.sh[(j + 1) * 3 + static_cast<std::size_t>(ch)] = get(*rest[static_cast<std::size_t>(ch) * rest_per_channel + j]);
        }
        for (std::size_t c = 0; c < feats.size(); ++c)
            feature_values[i * feats.size() + c] = static_cast<float>(get(*feats[c]));
        if (!g.scale.allFinite() || (g.scale.array() <= 0.0).any())
            throw ParseError("scale out of range at vertex " + std::to_string(i));
    }

    PlyScene out{GaussianScene(std::move(gaussians)), std::nullopt};
    if (!feats.empty()) out.features = FeatureTable(h.vertex_count, feats.size(), std::move(feature_values));
    return out;
}

PlyScene load_ply_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open PLY file '" + path.string() + "'");
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return load_ply(bytes);
}

std::string write_ply(const GaussianScene& scene, const FeatureTable* features) {
    if (features && features->rows() != scene.size())
        throw ContractViolation("feature table row count must equal scene size");
    const int degree = scene.empty() ? 0 : scene[0].sh_degree;
    for (const auto& g : scene)
        if (g.sh_degree != degree) throw ContractViolation("write_ply requires a uniform SH degree");
    const std::size_t rest_per_channel = static_cast<std::size_t>(sh_coeff_count(degree) - 1);
    const std::size_t channels = features ? features->channels() : 0;

    std::ostringstream header;
    header << "ply\nformat binary_little_endian 1.0\n";
    header << "element vertex " << scene.size() << "\n";
    for (const char* name : {"x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1", "f_dc_2"})
        header << "property float " << name << "\n";
    for (std::size_t j = 0; j < 3 * rest_per_channel; ++j) header << "property float f_rest_" << j << "\n";
    header << "property float opacity\n";
    for (const char* name : {"scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"})
        header << "property float " << name << "\n";
    for (std::size_t c = 0; c < channels; ++c) header << "property float feat_" << c << "\n";
    header << "end_header\n";

    std::string out = header.str();
    const std::size_t floats_per_vertex = 9 + 3 * rest_per_channel + 1 + 7 + channels;
    std::vector<float> row(floats_per_vertex);
    out.reserve(out.size() + scene.size() * floats_per_vertex * sizeof(float));
    for (std::size_t i = 0; i < scene.size(); ++i) {
        const GaussianPrimitive& g = scene[i];
        std::size_t k = 0;
        for (int a = 0; a < 3; ++a) row[k++] = to_float(g.center[a]);
        for (int a = 0; a < 3; ++a) row[k++] = 0.0f;
        for (std::size_t ch = 0; ch < 3; ++ch) row[k++] = to_float(g.sh[ch]);
        for (std::size_t ch = 0; ch < 3; ++ch)
            for (std::size_t j = 0; j < rest_per_channel; ++j) row[k++] = to_float(g.sh[(j + 1) * 3 + ch]);
        row[k++] = to_float(std::log(g.opacity / (1.0 - g.opacity)));
        for (int a = 0; a < 3; ++a) row[k++] = to_float(std::log(g.scale[a]));
        row[k++] = to_float(g.rotation.w());
        row[k++] = to_float(g.rotation.x());
        row[k++] = to_float(g.rotation.y());
        row[k++] = to_float(g.rotation.z());
        for (std::size_t c = 0; c < channels; ++c) row[k++] = features->row(i)[c];
        out.append(reinterpret_cast<const char*>(row.data()), row.size() * sizeof(float));
    }
    return out;
}

void write_ply_file(const std::filesystem::path& path, const GaussianScene& scene, const FeatureTable* features) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot open '" + path.string() + "' for writing");
    const std::string bytes = write_ply(scene, features);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace qrender

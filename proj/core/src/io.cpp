/* SPDX-FileCopyrightText: 2026 qrender authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#include "qrender/io.hpp"

#include "qrender/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <ostream>
#include <sstream>

static_assert(std::endian::native == std::endian::little, "binary containers assume a little-endian host");

namespace qrender {

using nlohmann::json;

namespace {

json parse_json(std::string_view text) {
    try {
        return json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw SchemaError(std::string("$: invalid JSON: ") + e.what());
    }
}

const json& member(const json& obj, const std::string& path, const char* key) {
    if (!obj.contains(key)) throw SchemaError(path + "." + key + ": missing");
    return obj.at(key);
}

double number_at(const json& v, const std::string& path) {
    if (!v.is_number()) throw SchemaError(path + ": expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw SchemaError(path + ": expected a finite number");
    return d;
}

long long integer_at(const json& v, const std::string& path, long long lo) {
    if (!v.is_number_integer()) throw SchemaError(path + ": expected an integer");
    const long long i = v.get<long long>();
    if (i < lo) throw SchemaError(path + ": must be at least " + std::to_string(lo));
    return i;
}

json object_at(std::string_view text) {
    json j = parse_json(text);
    if (!j.is_object()) throw SchemaError("$: expected an object");
    return j;
}

template <class T>
void append(std::string& out, const T& v) {
    const auto* p = reinterpret_cast<const char*>(&v);
    out.append(p, sizeof(T));
}

template <class T>
void append_all(std::string& out, std::span<const T> v) {
    out.append(reinterpret_cast<const char*>(v.data()), v.size_bytes());
}

class Reader {
public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}
    template <class T>
    T take() {
        T v;
        take_into(&v, 1);
        return v;
    }
    template <class T>
    void take_into(T* dst, std::size_t n) {
        const std::size_t need = sizeof(T) * n;
        if (bytes_.size() - pos_ < need) throw ParseError("voxel container is truncated");
        std::memcpy(dst, bytes_.data() + pos_, need);
        pos_ += need;
    }
    bool done() const { return pos_ == bytes_.size(); }

private:
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

std::vector<float> read_f32(const std::filesystem::path& path, std::size_t expected) {
    const std::string raw = read_file(path);
    if (raw.size() != expected * sizeof(float))
        throw ParseError(path.string() + ": expected " + std::to_string(expected * sizeof(float)) + " bytes, found " +
                         std::to_string(raw.size()));
    std::vector<float> v(expected);
    std::memcpy(v.data(), raw.data(), raw.size());
    return v;
}

}  // namespace

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
    auto p = path;
    p += ".json";
    return p;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("failed writing " + path.string());
}

CameraModel parse_camera_json(std::string_view text) {
    const json j = object_at(text);
    CameraModel cam;
    cam.width = static_cast<int>(integer_at(member(j, "$", "width"), "$.width", 1));
    cam.height = static_cast<int>(integer_at(member(j, "$", "height"), "$.height", 1));
    cam.fx = number_at(member(j, "$", "fx"), "$.fx");
    cam.fy = number_at(member(j, "$", "fy"), "$.fy");
    cam.cx = number_at(member(j, "$", "cx"), "$.cx");
    cam.cy = number_at(member(j, "$", "cy"), "$.cy");
    cam.near = number_at(member(j, "$", "near"), "$.near");
    if (!(cam.near > 0.0)) throw SchemaError("$.near: must be positive");
    const json& m = member(j, "$", "world_to_camera");
    if (!m.is_array() || m.size() != 16) throw SchemaError("$.world_to_camera: expected 16 numbers");
    for (int i = 0; i < 16; ++i)
        cam.world_to_camera(i / 4, i % 4) = number_at(m[static_cast<std::size_t>(i)], "$.world_to_camera[" + std::to_string(i) + "]");
    try {
        validate(cam);
    } catch (const DomainError& e) {
        throw SchemaError(std::string("$.world_to_camera: ") + e.what());
    }
    return cam;
}

std::string camera_to_json(const CameraModel& cam) {
    json m = json::array();
    for (int i = 0; i < 16; ++i) m.push_back(cam.world_to_camera(i / 4, i % 4));
    json j{{"width", cam.width}, {"height", cam.height}, {"fx", cam.fx},   {"fy", cam.fy},
           {"cx", cam.cx},       {"cy", cam.cy},         {"near", cam.near}, {"world_to_camera", m}};
    return j.dump(2) + "\n";
}

SyntheticSceneSpec parse_scene_spec(std::string_view text) {
    const json j = object_at(text);
    SyntheticSceneSpec s;
    for (const auto& [key, v] : j.items()) {
        const std::string path = "$." + key;
        if (key == "count") s.count = static_cast<std::size_t>(integer_at(v, path, 0));
        else if (key == "extent") s.extent = number_at(v, path);
        else if (key == "cluster_radius") s.cluster_radius = number_at(v, path);
        else if (key == "scale_min") s.scale_min = number_at(v, path);
        else if (key == "scale_max") s.scale_max = number_at(v, path);
        else if (key == "opacity_min") s.opacity_min = number_at(v, path);
        else if (key == "opacity_max") s.opacity_max = number_at(v, path);
        else if (key == "clusters") s.clusters = static_cast<int>(integer_at(v, path, 1));
        else if (key == "sh_degree") s.sh_degree = static_cast<int>(integer_at(v, path, 0));
        else if (key == "seed") s.seed = static_cast<std::uint64_t>(integer_at(v, path, 0));
        else throw SchemaError(path + ": unknown field");
    }
    try {
        validate(s);
    } catch (const DomainError& e) {
        throw SchemaError(std::string("$: ") + e.what());
    }
    return s;
}

std::string scene_spec_to_json(const SyntheticSceneSpec& s) {
    json j{{"count", s.count},         {"extent", s.extent},       {"cluster_radius", s.cluster_radius},
           {"scale_min", s.scale_min}, {"scale_max", s.scale_max}, {"opacity_min", s.opacity_min},
           {"opacity_max", s.opacity_max}, {"clusters", s.clusters}, {"sh_degree", s.sh_degree},
           {"seed", s.seed}};
    return j.dump(2) + "\n";
}

std::string labels_to_json(std::span<const int> labels, int clusters) {
    json j{{"clusters", clusters}, {"labels", std::vector<int>(labels.begin(), labels.end())}};
    return j.dump() + "\n";
}

std::vector<int> parse_labels_json(std::string_view text) {
    const json j = object_at(text);
    const json& arr = member(j, "$", "labels");
    if (!arr.is_array()) throw SchemaError("$.labels: expected an array");
    std::vector<int> out;
    out.reserve(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i)
        out.push_back(static_cast<int>(integer_at(arr[i], "$.labels[" + std::to_string(i) + "]", -1)));
    return out;
}

std::string encode_ppm(const RenderedMap& map) {
    if (map.channels != 3) throw DomainError("PPM output needs exactly 3 channels");
    std::string out = "P6\n" + std::to_string(map.width) + " " + std::to_string(map.height) + "\n255\n";
    out.reserve(out.size() + map.values.size());
    for (float v : map.values) {
        const double c = std::clamp(static_cast<double>(v), 0.0, 1.0);
        out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(c * 255.0))));
    }
    return out;
}

void write_feature_map(const std::filesystem::path& path, const RenderedMap& map) {
    std::string raw;
    append_all(raw, std::span<const float>(map.values));
    write_file(path, raw);
    json j{{"height", map.height}, {"width", map.width}, {"channels", map.channels}};
    write_file(sidecar_path(path), j.dump(2) + "\n");
}

RenderedMap read_feature_map(const std::filesystem::path& path) {
    const json j = object_at(read_file(sidecar_path(path)));
    RenderedMap map;
    map.height = static_cast<int>(integer_at(member(j, "$", "height"), "$.height", 1));
    map.width = static_cast<int>(integer_at(member(j, "$", "width"), "$.width", 1));
    map.channels = static_cast<std::size_t>(integer_at(member(j, "$", "channels"), "$.channels", 1));
    const std::size_t pixels = static_cast<std::size_t>(map.width) * static_cast<std::size_t>(map.height);
    map.values = read_f32(path, pixels * map.channels);
    map.residual.assign(pixels, 1.0f);
    map.selected.assign(pixels, 0);
    return map;
}

void write_feature_table(const std::filesystem::path& path, const FeatureTable& table, std::uint64_t seed, int steps) {
    std::string raw;
    append_all(raw, std::span<const float>(table.values()));
    write_file(path, raw);
    json j{{"count", table.rows()}, {"channels", table.channels()}, {"seed", seed}, {"steps", steps}};
    write_file(sidecar_path(path), j.dump(2) + "\n");
}

FeatureTable read_feature_table(const std::filesystem::path& path) {
    const json j = object_at(read_file(sidecar_path(path)));
    const auto count = static_cast<std::size_t>(integer_at(member(j, "$", "count"), "$.count", 0));
    const auto channels = static_cast<std::size_t>(integer_at(member(j, "$", "channels"), "$.channels", 1));
    return FeatureTable(count, channels, read_f32(path, count * channels));
}

void write_trace_csv(std::ostream& out, std::span<const TransmittanceTrace> traces) {
    out << "ray_id,order,gaussian_id,depth,alpha_prime,T_before,T_after,selected_volume,selected_quantile,"
           "selected_topk,selected_stratified\n";
    const auto old = out.precision(17);
    for (const auto& t : traces) {
        for (std::size_t i = 0; i < t.records.size(); ++i) {
            const auto& r = t.records[i];
            out << t.ray_id << ',' << i << ',' << r.gaussian << ',' << r.depth << ',' << r.alpha << ',' << r.t_before
                << ',' << r.t_after << ',' << int(r.volume) << ',' << int(r.quantile) << ',' << int(r.topk) << ','
                << int(r.stratified) << '\n';
        }
    }
    out.precision(old);
}

std::string encode_voxels(const VoxelSet& set) {
    std::string out = "QVOX";
    append(out, std::uint32_t{1});
    append(out, set.grid_size);
    append(out, static_cast<std::uint64_t>(set.coords.size()));
    append(out, static_cast<std::uint64_t>(set.inverse.size()));
    append(out, static_cast<std::uint64_t>(set.counts.size()));
    append(out, static_cast<std::uint32_t>(set.features.cols()));
    for (const auto& c : set.coords) append_all(out, std::span<const std::int32_t>(c));
    for (Eigen::Index r = 0; r < set.features.rows(); ++r)
        for (Eigen::Index c = 0; c < set.features.cols(); ++c) append(out, set.features(r, c));
    append_all(out, std::span<const std::int64_t>(set.inverse));
    append_all(out, std::span<const std::int64_t>(set.counts));
    return out;
}

VoxelSet decode_voxels(std::string_view bytes) {
    if (bytes.substr(0, 4) != "QVOX") throw ParseError("not a voxel container");
    Reader in(bytes.substr(4));
    if (in.take<std::uint32_t>() != 1) throw ParseError("unsupported voxel container version");
    VoxelSet set;
    set.grid_size = in.take<double>();
    const auto unique = in.take<std::uint64_t>();
    const auto sampled = in.take<std::uint64_t>();
    const auto gaussians = in.take<std::uint64_t>();
    const auto width = in.take<std::uint32_t>();
    const std::uint64_t limit = bytes.size();
    if (unique > limit || sampled > limit || gaussians > limit || width > limit)
        throw ParseError("voxel container is truncated");
    set.coords.resize(unique);
    for (auto& c : set.coords) in.take_into(c.data(), 3);
    set.features.resize(static_cast<Eigen::Index>(unique), static_cast<Eigen::Index>(width));
    for (Eigen::Index r = 0; r < set.features.rows(); ++r)
        for (Eigen::Index c = 0; c < set.features.cols(); ++c) set.features(r, c) = in.take<double>();
    set.inverse.resize(sampled);
    in.take_into(set.inverse.data(), sampled);
    set.counts.resize(gaussians);
    in.take_into(set.counts.data(), gaussians);
    if (!in.done()) throw ParseError("trailing bytes after voxel container");
    return set;
}

}  // namespace qrender

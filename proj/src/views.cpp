#include "splat6d/views.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "splat6d/error.hpp"

namespace splat6d {

Camera ViewSpec::camera() const { return Camera::look_at(eye, target, up, fov_y, width, height); }

namespace {

Vec3 read_vec3(const nlohmann::json& j, const char* key) {
    const auto& a = j.at(key);
    if (!a.is_array() || a.size() != 3) throw Error(ErrorCode::MalformedFile, std::string("view '") + key + "' needs 3 numbers");
    return {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
}

}  // namespace

std::vector<ViewSpec> load_views_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open views manifest " + path.string());
    std::vector<ViewSpec> views;
    try {
        const nlohmann::json doc = nlohmann::json::parse(in);
        if (!doc.is_array()) throw Error(ErrorCode::MalformedFile, "views manifest must be a JSON array");
        for (const auto& j : doc) {
            ViewSpec v;
            v.eye = read_vec3(j, "eye");
            v.target = read_vec3(j, "target");
            if (j.contains("up")) v.up = read_vec3(j, "up");
            v.fov_y = j.value("fov", v.fov_y);
            v.width = j.value("width", v.width);
            v.height = j.value("height", v.height);
            v.image = path.parent_path() / j.at("image").get<std::string>();
            views.push_back(v);
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::MalformedFile, "bad views manifest " + path.string() + ": " + e.what());
    }
    return views;
}

void save_views_manifest(const std::vector<ViewSpec>& views, const std::filesystem::path& path) {
    nlohmann::json doc = nlohmann::json::array();
    for (const auto& v : views) {
        doc.push_back({{"eye", {v.eye.x(), v.eye.y(), v.eye.z()}},
                       {"target", {v.target.x(), v.target.y(), v.target.z()}},
                       {"up", {v.up.x(), v.up.y(), v.up.z()}},
                       {"fov", v.fov_y},
                       {"width", v.width},
                       {"height", v.height},
                       {"image", std::filesystem::relative(v.image, path.parent_path().empty() ? "." : path.parent_path()).generic_string()}});
    }
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << doc.dump(2) << '\n';
}

std::vector<TrainingView> load_training_views(const std::vector<ViewSpec>& specs) {
    std::vector<TrainingView> views;
    for (const auto& s : specs) {
        TrainingView v{s.camera(), read_png(s.image)};
        if (v.image.width != s.width || v.image.height != s.height) {
            throw Error(ErrorCode::ShapeMismatch, "image " + s.image.string() + " does not match its view size");
        }
        views.push_back(std::move(v));
    }
    return views;
}

std::vector<ViewSpec> orbit_views(const Vec3& target, double radius, int count, double elevation,
                                  double phase, int width, int height, double fov_y) {
    std::vector<ViewSpec> views;
    for (int i = 0; i < count; ++i) {
        const double az = phase + 2.0 * M_PI * i / count;
        ViewSpec v;
        v.target = target;
        v.eye = target + radius * Vec3(std::cos(elevation) * std::sin(az), std::sin(elevation),
                                       std::cos(elevation) * std::cos(az));
        v.fov_y = fov_y;
        v.width = width;
        v.height = height;
        views.push_back(v);
    }
    return views;
}

}  // namespace splat6d

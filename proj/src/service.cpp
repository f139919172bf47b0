#include "splat6d/service.hpp"

#include <cstdlib>
#include <limits>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "splat6d/error.hpp"
#include "splat6d/labels.hpp"
#include "splat6d/scene_io.hpp"
#include "splat6d/transfer_function.hpp"

namespace splat6d {

Camera RenderRequest::camera() const {
    Camera cam = Camera::look_at(eye, target, up, fov_y, width, height);
    cam.validate();
    return cam;
}

namespace {

double parse_number(const std::string& key, const std::string& text) {
    const char* begin = text.c_str();
    char* end = nullptr;
    const double value = std::strtod(begin, &end);
    if (text.empty() || end != begin + text.size() || !std::isfinite(value)) {
        throw RequestError(400, "parameter '" + key + "' is not a number: " + text);
    }
    return value;
}

long parse_integer(const std::string& key, const std::string& text) {
    const double value = parse_number(key, text);
    if (value != std::floor(value) || std::abs(value) > 1e9) {
        throw RequestError(400, "parameter '" + key + "' must be an integer");
    }
    return static_cast<long>(value);
}

Vec3 parse_vec3(const std::string& key, const std::string& text) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) parts.push_back(item);
    if (parts.size() != 3) throw RequestError(400, "parameter '" + key + "' needs three comma-separated values");
    return {parse_number(key, parts[0]), parse_number(key, parts[1]), parse_number(key, parts[2])};
}

const std::string* find_param(const std::multimap<std::string, std::string>& params, const std::string& key) {
    auto it = params.find(key);
    return it == params.end() ? nullptr : &it->second;
}

}  // namespace

RenderRequest parse_render_request(const std::multimap<std::string, std::string>& params) {
    RenderRequest r;
    if (auto* s = find_param(params, "eye")) r.eye = parse_vec3("eye", *s);
    if (auto* s = find_param(params, "target")) r.target = parse_vec3("target", *s);
    if (auto* s = find_param(params, "up")) r.up = parse_vec3("up", *s);
    if (auto* s = find_param(params, "fov")) r.fov_y = parse_number("fov", *s);
    long width = r.width, height = r.height;
    if (auto* s = find_param(params, "width")) width = parse_integer("width", *s);
    if (auto* s = find_param(params, "height")) height = parse_integer("height", *s);
    if (auto* s = find_param(params, "mask")) {
        const long mask = parse_integer("mask", *s);
        if (mask < 0 || mask >= (1L << kNumGroups)) throw RequestError(400, "mask must be a 12-bit group set");
        r.mask = GroupMask(static_cast<unsigned long>(mask));
    }
    if (auto* s = find_param(params, "bg")) {
        r.background = parse_vec3("bg", *s);
        if (r.background.minCoeff() < 0.0 || r.background.maxCoeff() > 1.0) {
            throw RequestError(400, "bg components must lie in [0, 1]");
        }
    }
    if (!(r.fov_y > 0.05 && r.fov_y < 3.0)) throw RequestError(400, "fov must lie in (0.05, 3.0)");
    if (width < 1 || height < 1) throw RequestError(400, "width and height must be positive");
    if (width * height > kMaxRenderPixels) throw RequestError(413, "resolution exceeds 4096x4096 pixels");
    r.width = static_cast<int>(width);
    r.height = static_cast<int>(height);
    try {
        (void)r.camera();
    } catch (const Error& e) {
        throw RequestError(400, e.what());
    }
    return r;
}

std::vector<std::uint8_t> render_png(const PreparedScene& prepared, const RenderRequest& request, int threads) {
    RenderOptions options;
    options.mask = request.mask;
    options.threads = threads;
    return encode_png(composite_over(render(prepared, request.camera(), options), request.background));
}

int default_port() {
    if (const char* env = std::getenv(kPortEnvVar)) {
        char* end = nullptr;
        const long port = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && port > 0 && port < 65536) return static_cast<int>(port);
    }
    return kDefaultPort;
}

SceneService::SceneService(std::shared_ptr<const Scene> scene, ServiceConfig config)
    : config_(std::move(config)), loaded_(load(std::move(scene), config_.render_threads)),
      server_(std::make_unique<httplib::Server>()) {
    install_routes();
}

SceneService::~SceneService() { stop(); }

std::shared_ptr<const SceneService::Loaded> SceneService::load(std::shared_ptr<const Scene> scene, int threads) {
    if (!scene) throw Error(ErrorCode::InvalidParameter, "service needs a scene");
    auto loaded = std::make_shared<Loaded>();
    loaded->scene = std::move(scene);
    loaded->prepared = prepare_scene(*loaded->scene, threads);
    return loaded;
}

std::shared_ptr<const SceneService::Loaded> SceneService::current() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return loaded_;
}

HttpResponse SceneService::meta() const {
    if (reloading_) return {503, "application/json", R"({"error":"scene reload in progress"})"};
    const auto loaded = current();
    const Scene& scene = *loaded->scene;
    nlohmann::json j;
    j["count"] = scene.size();
    j["degenerate"] = loaded->prepared.degenerate;
    const auto counts = scene.group_counts();
    j["groups"] = nlohmann::json::array();
    for (int g = 0; g < kNumGroups; ++g) {
        j["groups"].push_back({{"index", g}, {"name", std::string(group_name(g))}, {"count", counts[static_cast<std::size_t>(g)]}});
    }
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    for (const auto& gs : scene.gaussians) {
        lo = lo.cwiseMin(gs.mu_p);
        hi = hi.cwiseMax(gs.mu_p);
    }
    if (scene.gaussians.empty()) {
        const auto b = scene.grid_bounds();
        lo = b[0];
        hi = b[1];
    }
    j["bounding_box"] = {{"min", {lo.x(), lo.y(), lo.z()}}, {"max", {hi.x(), hi.y(), hi.z()}}};
    const auto grid = scene.grid_bounds();
    j["grid_bounds"] = {{"min", {grid[0].x(), grid[0].y(), grid[0].z()}}, {"max", {grid[1].x(), grid[1].y(), grid[1].z()}}};
    j["tf_presets"] = preset_names();
    return {200, "application/json", j.dump()};
}

HttpResponse SceneService::groups() const {
    nlohmann::json j = nlohmann::json::array();
    for (int g = 0; g < kNumGroups; ++g) j.push_back({{"index", g}, {"name", std::string(group_name(g))}});
    return {200, "application/json", j.dump()};
}

HttpResponse SceneService::render(const std::multimap<std::string, std::string>& params) const {
    if (reloading_) return {503, "application/json", R"({"error":"scene reload in progress"})"};
    try {
        const RenderRequest request = parse_render_request(params);
        const auto loaded = current();
        const auto png = render_png(loaded->prepared, request, config_.render_threads);
        return {200, "image/png", std::string(png.begin(), png.end())};
    } catch (const RequestError& e) {
        return {e.status(), "application/json", nlohmann::json{{"error", e.what()}}.dump()};
    } catch (const Error& e) {
        return {500, "application/json", nlohmann::json{{"error", e.what()}}.dump()};
    }
}

HttpResponse SceneService::reload(const std::function<std::shared_ptr<const Scene>()>& loader) {
    bool expected = false;
    if (!reloading_.compare_exchange_strong(expected, true)) {
        return {503, "application/json", R"({"error":"scene reload in progress"})"};
    }
    HttpResponse response;
    try {
        auto fresh = load(loader(), config_.render_threads);
        {
            std::lock_guard<std::mutex> lock(mutex_);
            loaded_ = std::move(fresh);
        }
        response = {200, "application/json", nlohmann::json{{"count", current()->scene->size()}}.dump()};
    } catch (const std::exception& e) {
        response = {500, "application/json", nlohmann::json{{"error", e.what()}}.dump()};
    }
    reloading_ = false;
    return response;
}

HttpResponse SceneService::reload_from_file() {
    if (!config_.scene_path) return {400, "application/json", R"({"error":"service has no scene file to reload"})"};
    const auto path = *config_.scene_path;
    return reload([&] { return std::make_shared<const Scene>(load_scene(path)); });
}

void SceneService::install_routes() {
    auto send = [](httplib::Response& res, const HttpResponse& r) {
        res.status = r.status;
        res.set_header("Cache-Control", "no-store, no-cache, must-revalidate");
        res.set_header("Pragma", "no-cache");
        res.set_header("Expires", "0");
        res.set_content(r.body, r.content_type.c_str());
    };
    server_->Get("/meta", [this, send](const httplib::Request&, httplib::Response& res) { send(res, meta()); });
    server_->Get("/groups", [this, send](const httplib::Request&, httplib::Response& res) { send(res, groups()); });
    server_->Get("/render", [this, send](const httplib::Request& req, httplib::Response& res) {
        send(res, render(req.params));
    });
    server_->Post("/reload", [this, send](const httplib::Request&, httplib::Response& res) {
        send(res, reload_from_file());
    });
    if (config_.static_dir) server_->set_mount_point("/", config_.static_dir->string());
}

bool SceneService::listen() { return server_->listen(config_.host, config_.port); }

int SceneService::bind_any_port() { return server_->bind_to_any_port(config_.host); }

bool SceneService::listen_after_bind() { return server_->listen_after_bind(); }

void SceneService::stop() {
    if (server_) server_->stop();
}

}  // namespace splat6d

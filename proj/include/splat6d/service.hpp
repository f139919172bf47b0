#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "splat6d/rasterizer.hpp"

namespace httplib {
class Server;
}

namespace splat6d {

inline constexpr int kMaxRenderPixels = 4096 * 4096;
inline constexpr const char* kPortEnvVar = "G6DS_PORT";
inline constexpr int kDefaultPort = 8080;

/// Look-at camera plus display options, as carried in a /render query string.
struct RenderRequest {
    Vec3 eye{0.0, 0.0, -500.0};
    Vec3 target = Vec3::Zero();
    Vec3 up{0.0, 1.0, 0.0};
    double fov_y = 0.8;
    int width = 512;
    int height = 512;
    GroupMask mask = all_groups();
    Vec3 background = Vec3::Zero();

    Camera camera() const;
};

/// Error carrying the HTTP status it maps to.
class RequestError : public std::runtime_error {
public:
    RequestError(int status, const std::string& what) : std::runtime_error(what), status_(status) {}
    int status() const { return status_; }

private:
    int status_;
};

/// Parses eye, target, up (x,y,z), fov, width, height, mask (12-bit integer)
/// and bg (r,g,b in [0,1]). Throws RequestError 400 on malformed or
/// out-of-range values, 413 when width * height exceeds 4096^2.
RenderRequest parse_render_request(const std::multimap<std::string, std::string>& params);

/// The PNG both the CLI and the service produce for a request.
std::vector<std::uint8_t> render_png(const PreparedScene& prepared, const RenderRequest& request,
                                     int threads = 0);

struct HttpResponse {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;
};

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = kDefaultPort;
    std::optional<std::filesystem::path> static_dir;
    std::optional<std::filesystem::path> scene_path;  // source for POST /reload
    int render_threads = 0;
};

/// Port from G6DS_PORT, else kDefaultPort.
int default_port();

/// HTTP front end over one immutable, shared scene. Renders read the scene
/// concurrently; reload swaps in a new one while in-flight renders finish on
/// the old.
class SceneService {
public:
    SceneService(std::shared_ptr<const Scene> scene, ServiceConfig config = {});
    ~SceneService();

    HttpResponse meta() const;
    HttpResponse groups() const;
    HttpResponse render(const std::multimap<std::string, std::string>& params) const;

    /// Replaces the scene with `loader()`. Requests arriving meanwhile get 503.
    HttpResponse reload(const std::function<std::shared_ptr<const Scene>()>& loader);
    /// POST /reload: reloads config.scene_path.
    HttpResponse reload_from_file();
    bool reloading() const { return reloading_.load(); }

    /// Binds and serves until stop(). Returns false when the port cannot be bound.
    bool listen();
    /// Binds to a free port on the configured host and returns it; serve with listen_after_bind().
    int bind_any_port();
    bool listen_after_bind();
    void stop();

private:
    struct Loaded {
        std::shared_ptr<const Scene> scene;
        PreparedScene prepared;
    };
    std::shared_ptr<const Loaded> current() const;
    static std::shared_ptr<const Loaded> load(std::shared_ptr<const Scene> scene, int threads);
    void install_routes();

    ServiceConfig config_;
    mutable std::mutex mutex_;
    std::shared_ptr<const Loaded> loaded_;
    std::atomic<bool> reloading_{false};
    std::unique_ptr<httplib::Server> server_;
};

}  // namespace splat6d

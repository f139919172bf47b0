#include "splat6d/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "splat6d/error.hpp"
#include "splat6d/metrics.hpp"
#include "splat6d/phantom.hpp"
#include "splat6d/pipeline.hpp"
#include "splat6d/scene_io.hpp"
#include "splat6d/service.hpp"
#include "splat6d/views.hpp"

namespace splat6d {

namespace fs = std::filesystem;

namespace {

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidParameter:
            return kExitUsage;
        case ErrorCode::DegenerateCovariance:
        case ErrorCode::DegenerateGeometry:
        case ErrorCode::DegenerateVolume:
        case ErrorCode::EmptyScene:
            return kExitNumerical;
        default:
            return kExitIo;
    }
}

Vec3 to_vec3(const std::vector<double>& v) { return {v[0], v[1], v[2]}; }

struct RenderArgs {
    std::vector<double> eye{0.0, 0.0, -500.0};
    std::vector<double> target{0.0, 0.0, 0.0};
    std::vector<double> up{0.0, 1.0, 0.0};
    double fov = 0.8;
    int width = 512;
    int height = 512;
    int mask = (1 << kNumGroups) - 1;
    std::vector<double> bg{0.0, 0.0, 0.0};
};

// Same validation as the HTTP endpoint so both paths accept the same requests.
RenderRequest to_request(const RenderArgs& a) {
    auto number = [](double x) {
        std::ostringstream s;
        s.precision(17);
        s << x;
        return s.str();
    };
    auto join = [](const std::vector<double>& v) {
        std::ostringstream s;
        s.precision(17);
        s << v[0] << ',' << v[1] << ',' << v[2];
        return s.str();
    };
    std::multimap<std::string, std::string> params{
        {"eye", join(a.eye)}, {"target", join(a.target)}, {"up", join(a.up)},
        {"fov", number(a.fov)}, {"width", std::to_string(a.width)},
        {"height", std::to_string(a.height)}, {"mask", std::to_string(a.mask)}, {"bg", join(a.bg)}};
    return parse_render_request(params);
}

void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"6D Gaussian splatting for CT volumes: initialize, render, fine-tune, evaluate, serve"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "Worker threads (0: all)")->check(CLI::NonNegativeNumber);

    // phantom
    auto* phantom = app.add_subcommand("phantom", "Write the synthetic nested-ellipsoid CT phantom and labels");
    std::string phantom_out;
    PhantomConfig phantom_cfg;
    phantom->add_option("-o,--out", phantom_out, "Output base name; writes <out>_ct and <out>_labels")->required();
    phantom->add_option("--size", phantom_cfg.size, "Voxels per axis")->check(CLI::PositiveNumber);
    phantom->add_option("--spacing", phantom_cfg.spacing, "Voxel spacing in mm")->check(CLI::PositiveNumber);

    // init
    auto* init = app.add_subcommand("init", "CT volume + labels + transfer functions -> scene");
    std::string init_volume, init_labels, init_out, init_tf = "seen_tf";
    int init_stride = 1;
    std::optional<double> init_iso;
    bool init_raw_density = false;
    init->add_option("--volume", init_volume, "CT volume (.meta/.raw base)")->required();
    init->add_option("--labels", init_labels, "Label volume (.meta/.raw base)")->required();
    init->add_option("--tf", init_tf, "Transfer-function preset name or file");
    init->add_option("--stride", init_stride, "Instantiate every n-th voxel per axis")->check(CLI::PositiveNumber);
    init->add_option("--isotropic", init_iso, "Resample to this isotropic spacing (mm) first");
    init->add_flag("--raw-density", init_raw_density, "Modulate opacity by the unnormalized directional density");
    init->add_option("-o,--out", init_out, "Output scene file")->required();

    // render
    auto* render_cmd = app.add_subcommand("render", "Render a scene to PNG");
    std::string render_scene, render_out, render_views;
    RenderArgs ra;
    render_cmd->add_option("--scene", render_scene, "Scene file")->required();
    render_cmd->add_option("--eye", ra.eye, "Camera position x,y,z")->delimiter(',')->expected(3);
    render_cmd->add_option("--target", ra.target, "Look-at point x,y,z")->delimiter(',')->expected(3);
    render_cmd->add_option("--up", ra.up, "Up vector x,y,z")->delimiter(',')->expected(3);
    render_cmd->add_option("--fov", ra.fov, "Vertical field of view, radians");
    render_cmd->add_option("--width", ra.width, "Image width");
    render_cmd->add_option("--height", ra.height, "Image height");
    render_cmd->add_option("--mask", ra.mask, "Visible groups as a 12-bit set (bit g = group g)");
    render_cmd->add_option("--bg", ra.bg, "Background r,g,b in [0,1]")->delimiter(',')->expected(3);
    auto* render_out_opt = render_cmd->add_option("-o,--out", render_out, "Output PNG");
    auto* render_views_opt = render_cmd->add_option("--views", render_views,
                                                    "Render every camera of a views manifest to its image path");
    render_out_opt->excludes(render_views_opt);

    // finetune
    auto* ft = app.add_subcommand("finetune", "Optimize a scene against reference views");
    std::string ft_scene, ft_views, ft_out, ft_csv, ft_resume;
    FinetuneConfig ft_cfg;
    std::vector<double> ft_bg{0.0, 0.0, 0.0};
    ft->add_option("--scene", ft_scene, "Input scene file")->required();
    ft->add_option("--views", ft_views, "Views manifest with ground-truth images")->required();
    ft->add_option("-o,--out", ft_out, "Output scene file; the optimizer state goes to <out>.opt")->required();
    ft->add_option("--iters", ft_cfg.iterations, "Iterations")->check(CLI::NonNegativeNumber);
    ft->add_option("--lr", ft_cfg.base_lr, "Base learning rate");
    ft->add_option("--seed", ft_cfg.seed, "View sampling seed");
    ft->add_option("--lambda-l1", ft_cfg.loss.lambda_l1, "L1 weight");
    ft->add_option("--lambda-ssim", ft_cfg.loss.lambda_ssim, "1 - MS-SSIM weight");
    ft->add_option("--bg", ft_bg, "Background r,g,b")->delimiter(',')->expected(3);
    ft->add_option("--loss-csv", ft_csv, "Write the loss trace as CSV");
    ft->add_option("--resume", ft_resume, "Continue from an optimizer state sidecar");

    // metrics
    auto* metrics_cmd = app.add_subcommand("metrics", "PSNR and SSIM of a scene against reference views");
    std::string m_scene, m_views, m_csv;
    std::vector<double> m_bg{0.0, 0.0, 0.0};
    metrics_cmd->add_option("--scene", m_scene, "Scene file")->required();
    metrics_cmd->add_option("--views", m_views, "Views manifest")->required();
    metrics_cmd->add_option("--bg", m_bg, "Background r,g,b")->delimiter(',')->expected(3);
    metrics_cmd->add_option("--csv", m_csv, "CSV output path (default: standard output)");

    // serve
    auto* serve = app.add_subcommand("serve", "HTTP render service");
    std::string s_scene, s_static;
    ServiceConfig s_cfg;
    s_cfg.port = default_port();
    serve->add_option("--scene", s_scene, "Scene file")->required();
    serve->add_option("--host", s_cfg.host, "Bind address");
    serve->add_option("--port", s_cfg.port, std::string("Port (default from ") + kPortEnvVar + ")");
    serve->add_option("--static", s_static, "Directory of static viewer files served at /");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*phantom) {
            const Phantom ph = make_phantom(phantom_cfg);
            save_volume(ph.ct, phantom_out + "_ct");
            save_labels(ph.labels, phantom_out + "_labels");
            std::size_t fg = 0;
            for (auto l : ph.labels.labels) fg += l != 0;
            out << "wrote " << phantom_out << "_ct and " << phantom_out << "_labels (" << fg << " foreground voxels)\n";
        } else if (*init) {
            InitConfig cfg;
            cfg.isotropic_mm = init_iso;
            cfg.agp.stride = init_stride;
            if (init_raw_density) cfg.agp.modulation = OpacityModulation::RawDensity;
            const Scene scene = initialize_scene(load_volume(init_volume), load_labels(init_labels),
                                                 resolve_transfer_functions(init_tf), cfg);
            save_scene(scene, init_out);
            out << "wrote " << init_out << " (" << scene.size() << " Gaussians)\n";
        } else if (*render_cmd) {
            const Scene scene = load_scene(render_scene);
            const PreparedScene prepared = prepare_scene(scene, threads);
            if (!render_views.empty()) {
                const auto specs = load_views_manifest(render_views);
                for (const auto& v : specs) {
                    RenderArgs a = ra;
                    a.eye = {v.eye.x(), v.eye.y(), v.eye.z()};
                    a.target = {v.target.x(), v.target.y(), v.target.z()};
                    a.up = {v.up.x(), v.up.y(), v.up.z()};
                    a.fov = v.fov_y;
                    a.width = v.width;
                    a.height = v.height;
                    write_bytes(v.image, render_png(prepared, to_request(a), threads));
                }
                out << "rendered " << specs.size() << " views\n";
            } else {
                if (render_out.empty()) throw RequestError(400, "render needs --out or --views");
                write_bytes(render_out, render_png(prepared, to_request(ra), threads));
            }
        } else if (*ft) {
            Scene scene = load_scene(ft_scene);
            const auto views = load_training_views(load_views_manifest(ft_views));
            ft_cfg.background = to_vec3(ft_bg);
            ft_cfg.threads = threads;
            std::optional<OptimizerState> resume;
            if (!ft_resume.empty()) resume = load_optimizer_state(ft_resume);
            const FinetuneResult result = finetune(scene, views, ft_cfg, resume ? &*resume : nullptr);
            save_scene(scene, ft_out);
            save_optimizer_state(result.optimizer, ft_out + ".opt");
            if (!ft_csv.empty()) {
                std::ofstream csv(ft_csv);
                if (!csv) throw Error(ErrorCode::Io, "cannot write " + ft_csv);
                write_loss_csv(csv, result.trace);
            }
            if (!result.trace.empty()) {
                out << "loss " << result.trace.front().total << " -> " << result.trace.back().total << " over "
                    << result.trace.size() << " iterations";
                if (result.optimizer.skipped > 0) out << " (" << result.optimizer.skipped << " steps skipped)";
                out << '\n';
            }
        } else if (*metrics_cmd) {
            const Scene scene = load_scene(m_scene);
            const auto views = load_training_views(load_views_manifest(m_views));
            RenderOptions options;
            options.threads = threads;
            const MetricReport report = evaluate(scene, views, to_vec3(m_bg), options, true);
            if (m_csv.empty()) {
                write_metrics_csv(out, report);
            } else {
                std::ofstream csv(m_csv);
                if (!csv) throw Error(ErrorCode::Io, "cannot write " + m_csv);
                write_metrics_csv(csv, report);
                out << format_metrics_table(report);
            }
        } else if (*serve) {
            auto scene = std::make_shared<const Scene>(load_scene(s_scene));
            s_cfg.scene_path = s_scene;
            s_cfg.render_threads = threads;
            if (!s_static.empty()) s_cfg.static_dir = s_static;
            SceneService service(scene, s_cfg);
            out << "serving " << scene->size() << " Gaussians on http://" << s_cfg.host << ':' << s_cfg.port << std::endl;
            if (!service.listen()) {
                err << "error: cannot listen on " << s_cfg.host << ':' << s_cfg.port << '\n';
                return kExitIo;
            }
        }
    } catch (const RequestError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitIo;
    }
    return kExitOk;
}

}  // namespace splat6d

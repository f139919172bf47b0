#include <cmath>
#include <random>
#include <set>

#include <Eigen/Geometry>
#include <gtest/gtest.h>

#include "oracles.hpp"
#include "splat6d/error.hpp"
#include "splat6d/labels.hpp"
#include "splat6d/rasterizer.hpp"
#include "test_util.hpp"

using namespace splat6d;
using splat6d::testing::front_camera;
using splat6d::testing::random_scene;

namespace {

SlicedGaussian isotropic(const Vec3& mu, double var) {
    return {mu, var * Mat3::Identity(), 1.0};
}

Splat2D make_splat(Vec2 mean, double var, double depth, double alpha, Vec3 color, std::uint32_t id,
                   int w, int h) {
    Splat2D s;
    s.mean = mean;
    s.cov = var * Mat2::Identity();
    s.conic = Vec3(1.0 / var, 0.0, 1.0 / var);
    s.depth = depth;
    s.alpha = alpha;
    s.color = color;
    s.gaussian_id = id;
    const double r = 3.0 * std::sqrt(var);
    s.x0 = std::max(0, static_cast<int>(std::floor(mean.x() - r)) - 1);
    s.x1 = std::min(w - 1, static_cast<int>(std::ceil(mean.x() + r)) + 1);
    s.y0 = std::max(0, static_cast<int>(std::floor(mean.y() - r)) - 1);
    s.y1 = std::min(h - 1, static_cast<int>(std::ceil(mean.y() + r)) + 1);
    return s;
}

Vec2 pinhole(const Camera& cam, const Vec3& world) {
    const Vec3 t = cam.rotation * (world - cam.position);
    const double f = 0.5 * cam.height / std::tan(0.5 * cam.fov_y);
    return {f * t.x() / t.z() + 0.5 * cam.width, f * t.y() / t.z() + 0.5 * cam.height};
}

bool images_equal(const Image& a, const Image& b) { return a.same_shape(b) && a.data == b.data; }

}  // namespace

TEST(Camera, LookAtConventions) {
    const Camera cam = Camera::look_at(Vec3(0.0, 0.0, -10.0), Vec3::Zero(), Vec3(0.0, 1.0, 0.0), 0.8, 64, 48);
    EXPECT_NO_THROW(cam.validate());
    // World +y appears towards the top of the image.
    EXPECT_LT(pinhole(cam, Vec3(0.0, 1.0, 0.0)).y(), 24.0);
    EXPECT_NEAR(cam.focal(), 24.0 / std::tan(0.4), 1e-12);
    EXPECT_THROW(Camera::look_at(Vec3::Zero(), Vec3::Zero(), Vec3::UnitY(), 0.8, 8, 8), Error);
    EXPECT_THROW(Camera::look_at(Vec3::Zero(), Vec3::UnitY(), Vec3::UnitY(), 0.8, 8, 8), Error);
    Camera bad = cam;
    bad.fov_y = 3.2;
    EXPECT_THROW(bad.validate(), Error);
}

TEST(ProjectGaussian, OnAxisLandsAtImageCentre) {
    const Camera cam = front_camera(64, 48);
    const auto s = project_gaussian(isotropic(Vec3::Zero(), 4.0), Vec3(1.0, 0.0, 0.0), 0.5, cam);
    ASSERT_TRUE(s);
    EXPECT_NEAR(s->mean.x(), 32.0, 1e-12);
    EXPECT_NEAR(s->mean.y(), 24.0, 1e-12);
    EXPECT_NEAR(s->depth, 80.0, 1e-12);
}

TEST(ProjectGaussian, BehindCameraOrBeyondFarIsCulled) {
    Camera cam = front_camera();
    EXPECT_FALSE(project_gaussian(isotropic(Vec3(0.0, 0.0, -100.0), 1.0), Vec3::Ones(), 0.9, cam));
    cam.far = 50.0;
    EXPECT_FALSE(project_gaussian(isotropic(Vec3::Zero(), 1.0), Vec3::Ones(), 0.9, cam));
}

TEST(ProjectGaussian, OutsideViewportIsCulled) {
    const Camera cam = front_camera(32, 32);
    EXPECT_FALSE(project_gaussian(isotropic(Vec3(500.0, 0.0, 0.0), 1.0), Vec3::Ones(), 0.9, cam));
    EXPECT_TRUE(project_gaussian(isotropic(Vec3(20.0, 0.0, 0.0), 1.0), Vec3::Ones(), 0.9, cam));
}

TEST(ProjectGaussian, AlphaClampAndThreshold) {
    const Camera cam = front_camera();
    SlicedGaussian g = isotropic(Vec3::Zero(), 1.0);
    auto s = project_gaussian(g, Vec3::Ones(), 0.999, cam);
    ASSERT_TRUE(s);
    EXPECT_EQ(s->alpha, 0.99);
    g.w = 0.5;
    s = project_gaussian(g, Vec3::Ones(), 0.6, cam);
    ASSERT_TRUE(s);
    EXPECT_DOUBLE_EQ(s->alpha, 0.3);
    EXPECT_FALSE(project_gaussian(g, Vec3::Ones(), 0.5 / 255.0, cam));
}

TEST(ProjectGaussian, OffAxisMatchesPinholeAndFiniteDifferenceJacobian) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-15.0, 15.0);
    const Camera cam = Camera::look_at(Vec3(30.0, -20.0, -70.0), Vec3(2.0, 1.0, 0.0), Vec3(0.1, 1.0, 0.0), 0.9, 80, 60);
    for (int t = 0; t < 50; ++t) {
        const Vec3 mu(u(rng), u(rng), u(rng));
        Mat3 A = Mat3::Random();
        const Mat3 sigma = A * A.transpose() + 0.5 * Mat3::Identity();
        const auto s = project_gaussian({mu, sigma, 1.0}, Vec3::Ones(), 0.8, cam);
        ASSERT_TRUE(s);
        const Vec2 expected = pinhole(cam, mu);
        EXPECT_NEAR(s->mean.x(), expected.x(), 1e-9);
        EXPECT_NEAR(s->mean.y(), expected.y(), 1e-9);

        Eigen::Matrix<double, 2, 3> J;
        const double h = 1e-5;
        for (int a = 0; a < 3; ++a) {
            Vec3 d = Vec3::Zero();
            d[a] = h;
            J.col(a) = (pinhole(cam, mu + d) - pinhole(cam, mu - d)) / (2.0 * h);
        }
        const Mat2 cov_fd = J * sigma * J.transpose() + 0.3 * Mat2::Identity();
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 2; ++c)
                EXPECT_NEAR(s->cov(r, c), cov_fd(r, c), 1e-4 * std::max(1.0, std::abs(cov_fd(r, c))));
        Eigen::SelfAdjointEigenSolver<Mat2> es(s->cov);
        EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
    }
}

TEST(BinAndSort, FullScreenSplatInEveryTile) {
    const int w = 70, h = 40;
    std::vector<Splat2D> splats = {make_splat({35.0, 20.0}, 900.0, 5.0, 0.5, Vec3::Ones(), 0, w, h)};
    const TileBins bins = bin_and_sort(splats, w, h);
    EXPECT_EQ(bins.tiles_x, 5);
    EXPECT_EQ(bins.tiles_y, 3);
    for (int t = 0; t < bins.tiles_x * bins.tiles_y; ++t) {
        ASSERT_EQ(bins.tile(t).size(), 1u);
    }
}

TEST(BinAndSort, DepthOrderWithIdTieBreak) {
    const int w = 32, h = 32;
    std::vector<Splat2D> splats = {
        make_splat({16.0, 16.0}, 4.0, 10.0, 0.5, Vec3::Ones(), 0, w, h),
        make_splat({16.0, 16.0}, 4.0, 5.0, 0.5, Vec3::Ones(), 1, w, h),
        make_splat({16.0, 16.0}, 4.0, 5.0, 0.5, Vec3::Ones(), 7, w, h),
        make_splat({16.0, 16.0}, 4.0, 5.0, 0.5, Vec3::Ones(), 3, w, h),
    };
    const TileBins bins = bin_and_sort(splats, w, h);
    for (int t = 0; t < 4; ++t) {
        const auto tile = bins.tile(t);
        ASSERT_EQ(tile.size(), 4u);
        std::vector<std::uint32_t> ids;
        for (auto e : tile) ids.push_back(splats[e].gaussian_id);
        EXPECT_EQ(ids, (std::vector<std::uint32_t>{1, 3, 7, 0}));
    }
}

TEST(BinAndSort, UnionOfTilesIsOverlappingSplats) {
    std::mt19937_64 rng(22);
    const int w = 100, h = 75;
    std::uniform_real_distribution<double> x(-20.0, 120.0), var(0.5, 60.0), depth(1.0, 50.0);
    std::vector<Splat2D> splats;
    std::set<std::uint32_t> expected;
    for (std::uint32_t i = 0; i < 300; ++i) {
        const Vec2 m(x(rng), x(rng));
        const double v = var(rng);
        const double r = 3.0 * std::sqrt(v);
        if (m.x() + r < 0.0 || m.x() - r > w || m.y() + r < 0.0 || m.y() - r > h) continue;
        splats.push_back(make_splat(m, v, depth(rng), 0.5, Vec3::Ones(), i, w, h));
        expected.insert(i);
    }
    const TileBins bins = bin_and_sort(splats, w, h);
    std::set<std::uint32_t> seen;
    for (auto e : bins.entries) seen.insert(splats[e].gaussian_id);
    EXPECT_EQ(seen, expected);
    for (int t = 0; t < bins.tiles_x * bins.tiles_y; ++t) {
        const auto tile = bins.tile(t);
        for (std::size_t k = 1; k < tile.size(); ++k) {
            const auto& a = splats[tile[k - 1]];
            const auto& b = splats[tile[k]];
            ASSERT_TRUE(a.depth < b.depth || (a.depth == b.depth && a.gaussian_id < b.gaussian_id));
        }
    }
}

TEST(CompositeTile, EmptyIsTransparentBlack) {
    Image img(16, 16, 4, 7.0);
    composite_tile({}, {}, {0, 0, 16, 16}, {}, img);
    for (double x : img.data) EXPECT_EQ(x, 0.0);
}

TEST(CompositeTile, SingleSplatAtMean) {
    const auto s = make_splat({8.5, 8.5}, 4.0, 1.0, 0.9, Vec3(1.0, 0.0, 0.0), 0, 16, 16);
    std::vector<Splat2D> splats{s};
    std::vector<std::uint32_t> order{0};
    Image img(16, 16, 4);
    composite_tile(splats, order, {0, 0, 16, 16}, {}, img);
    EXPECT_EQ(img.at(8, 8, 0), 0.9);
    EXPECT_EQ(img.at(8, 8, 1), 0.0);
    EXPECT_EQ(img.at(8, 8, 2), 0.0);
    EXPECT_EQ(img.at(8, 8, 3), 0.9);
}

TEST(CompositeTile, ThreeOverlappingMatchSequentialOracle) {
    std::vector<Splat2D> splats = {
        make_splat({8.0, 8.0}, 9.0, 1.0, 0.6, Vec3(1.0, 0.2, 0.1), 0, 16, 16),
        make_splat({10.0, 7.0}, 6.0, 2.0, 0.8, Vec3(0.1, 0.9, 0.3), 1, 16, 16),
        make_splat({6.0, 9.0}, 12.0, 3.0, 0.7, Vec3(0.2, 0.3, 1.0), 2, 16, 16),
    };
    std::vector<std::uint32_t> order{0, 1, 2};
    Image img(16, 16, 4);
    composite_tile(splats, order, {0, 0, 16, 16}, {}, img);
    for (int py = 0; py < 16; ++py) {
        for (int px = 0; px < 16; ++px) {
            double T = 1.0, C[4] = {0, 0, 0, 0};
            for (const auto& s : splats) {
                const double dx = px + 0.5 - s.mean.x(), dy = py + 0.5 - s.mean.y();
                const double m = (dx * dx + dy * dy) / s.cov(0, 0);
                if (m > 9.0) continue;
                const double a = s.alpha * std::exp(-0.5 * m);
                if (a < 1.0 / 255.0) continue;
                for (int c = 0; c < 3; ++c) C[c] += s.color[c] * a * T;
                C[3] += a * T;
                T *= 1.0 - a;
            }
            for (int c = 0; c < 4; ++c) ASSERT_NEAR(img.at(px, py, c), C[c], 1e-15);
        }
    }
}

TEST(CompositeTile, EarlyTerminationAfterTransmittanceFloor) {
    std::vector<Splat2D> splats;
    for (std::uint32_t i = 0; i < 5; ++i) splats.push_back(make_splat({4.5, 4.5}, 4.0, i + 1.0, 0.99, Vec3::Ones(), i, 8, 8));
    std::vector<std::uint32_t> order{0, 1, 2, 3, 4};
    Image img(8, 8, 4);
    std::vector<PixelState> state(64);
    composite_tile(splats, order, {0, 0, 8, 8}, {}, img, &state);
    // T: 1e-2 after one, 1e-4 (not below) after two, 1e-6 after three.
    EXPECT_EQ(state[4 * 8 + 4].contributors, 3u);
    EXPECT_NEAR(state[4 * 8 + 4].final_transmittance, 1e-6, 1e-18);
}

TEST(Render, EmptyMaskGivesBackground) {
    std::mt19937_64 rng(23);
    const Scene scene = random_scene(rng, 50);
    RenderOptions opts;
    opts.mask = GroupMask{};
    const Image img = render(scene, front_camera(), opts);
    for (double x : img.data) EXPECT_EQ(x, 0.0);
}

TEST(Render, MaskCommutesWithFilter) {
    std::mt19937_64 rng(24);
    const Scene scene = random_scene(rng, 200);
    RenderOptions opts;
    opts.mask = GroupMask{}.set(kSkeleton);
    const Image masked = render(scene, front_camera(), opts);
    const Image filtered = render(filter_scene(scene, opts.mask), front_camera());
    EXPECT_TRUE(images_equal(masked, filtered));
}

TEST(Render, TenGaussiansMatchBruteForceBitForBit) {
    std::mt19937_64 rng(25);
    for (int t = 0; t < 20; ++t) {
        const Scene scene = random_scene(rng, 10);
        const Camera cam = front_camera(32, 32, 60.0);
        const Image tiled = render(scene, cam);
        const Image brute = oracle::brute_force_composite(oracle::library_splats(scene, cam), 32, 32);
        ASSERT_TRUE(images_equal(tiled, brute)) << "scene " << t;
    }
}

TEST(Render, MatchesIndependentReferencePipeline) {
    std::mt19937_64 rng(26);
    for (int t = 0; t < 20; ++t) {
        const Scene scene = random_scene(rng, 40);
        const Camera cam = Camera::look_at(Vec3(25.0, -15.0, -70.0), Vec3::Zero(), Vec3(0.0, 1.0, 0.0), 0.7, 64, 48);
        const Image tiled = render(scene, cam);
        const Image ref = oracle::brute_force_composite(oracle::reference_splats(scene, cam), 64, 48);
        ASSERT_LE(oracle::max_abs_diff(tiled, ref), 1e-9) << "scene " << t;
    }
}

TEST(Render, DeterministicAcrossThreadCounts) {
    std::mt19937_64 rng(27);
    const Scene scene = random_scene(rng, 2000, 30.0);
    const Camera cam = front_camera(96, 80);
    RenderOptions opts;
    opts.threads = 1;
    const Image base = render(scene, cam, opts);
    for (int threads : {2, 4, 8}) {
        opts.threads = threads;
        EXPECT_TRUE(images_equal(render(scene, cam, opts), base)) << threads;
    }
}

TEST(Render, AlphaInUnitIntervalAndTransmittanceNonNegative) {
    std::mt19937_64 rng(28);
    const Scene scene = random_scene(rng, 500);
    const PreparedScene prepared = prepare_scene(scene);
    ForwardState state;
    const Image img = render(prepared, front_camera(), {}, &state);
    for (std::size_t p = 0; p < img.pixel_count(); ++p) {
        EXPECT_GE(img.data[4 * p + 3], 0.0);
        EXPECT_LE(img.data[4 * p + 3], 1.0);
        EXPECT_GE(state.pixels[p].final_transmittance, 0.0);
        EXPECT_NEAR(img.data[4 * p + 3], 1.0 - state.pixels[p].final_transmittance, 1e-12);
    }
}

TEST(Render, RigidMotionEquivariance) {
    std::mt19937_64 rng(29);
    Scene scene = random_scene(rng, 60, 8.0, 1.0);
    // Near-isotropic blocks keep the rotated Cholesky factors inside tanh's range.
    for (auto& g : scene.gaussians)
        for (int k = 0; k < kCovRawCount; ++k) g.cov_raw[static_cast<std::size_t>(k)] *= k < 6 ? 0.3 : 0.2;
    const Camera cam = Camera::look_at(Vec3(5.0, -3.0, -40.0), Vec3::Zero(), Vec3(0.0, 1.0, 0.0), 0.6, 48, 48);
    const Image base = render(scene, cam);
    double coverage = 0.0;
    for (std::size_t p = 0; p < base.pixel_count(); ++p) coverage += base.data[4 * p + 3];
    ASSERT_GT(coverage, 50.0);

    const Mat3 R = Eigen::AngleAxisd(0.7, Vec3(0.3, -0.5, 0.8).normalized()).toRotationMatrix();
    const Vec3 shift(12.0, -30.0, 4.5);
    Mat6 B = Mat6::Zero();
    B.topLeftCorner<3, 3>() = R;
    B.bottomRightCorner<3, 3>() = R;
    Scene moved = scene;
    for (auto& g : moved.gaussians) {
        g.mu_p = R * g.mu_p + shift;
        g.mu_d = R * g.mu_d;
        const Mat6 sigma = build_covariance(g.cov_raw, scene.meta.cov_scale).sigma;
        g.cov_raw = covariance_to_raw(B * sigma * B.transpose(), scene.meta.cov_scale);
        // Degree-1 SH is linear in the direction: rotate its vector per channel.
        for (int ch = 0; ch < 3; ++ch) {
            auto& sh = g.sh;
            const Vec3 a(-sh[9 + ch], -sh[3 + ch], sh[6 + ch]);
            const Vec3 ra = R * a;
            sh[9 + ch] = -ra.x();
            sh[3 + ch] = -ra.y();
            sh[6 + ch] = ra.z();
        }
    }
    Camera cam2 = cam;
    cam2.position = R * cam.position + shift;
    cam2.rotation = cam.rotation * R.transpose();
    const Image img = render(moved, cam2);
    EXPECT_LE(oracle::max_abs_diff(img, base), 1e-6);
}

TEST(PrepareScene, DegenerateGaussiansSkippedUpToOnePercent) {
    std::mt19937_64 rng(30);
    Scene scene = random_scene(rng, 200);
    scene.gaussians[3].cov_raw[5] = 16.0;  // cond(Sigma_dd) ~ e^32
    scene.gaussians[150].cov_raw[4] = 16.0;
    const PreparedScene p = prepare_scene(scene);
    EXPECT_EQ(p.degenerate, 2u);
    EXPECT_EQ(p.usable[3], 0);
    EXPECT_EQ(p.usable[150], 0);
    const Camera cam = front_camera();
    const Image a = render(p, cam);
    const Image b = oracle::brute_force_composite(oracle::library_splats(scene, cam), cam.width, cam.height);
    EXPECT_TRUE(images_equal(a, b));

    scene.gaussians[7].cov_raw[3] = 16.0;
    try {
        prepare_scene(scene);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DegenerateCovariance);
    }
}

TEST(PrepareScene, CountsPreparations) {
    std::mt19937_64 rng(31);
    const Scene scene = random_scene(rng, 10);
    const auto before = instrumentation().preparations.load();
    const PreparedScene p = prepare_scene(scene);
    RenderOptions opts;
    for (int g = 0; g < kNumGroups; ++g) {
        opts.mask = GroupMask{}.set(static_cast<std::size_t>(g));
        render(p, front_camera(), opts);
    }
    EXPECT_EQ(instrumentation().preparations.load(), before + 1);
}

TEST(Image, CompositeOverAndPngRoundTrip) {
    Image rgba(3, 2, 4);
    rgba.at(0, 0, 0) = 0.5;
    rgba.at(0, 0, 3) = 0.5;
    const Image over = composite_over(rgba, Vec3(1.0, 1.0, 1.0));
    EXPECT_DOUBLE_EQ(over.at(0, 0, 0), 1.0);
    EXPECT_DOUBLE_EQ(over.at(0, 0, 1), 0.5);
    EXPECT_DOUBLE_EQ(over.at(1, 1, 2), 1.0);
    const Image back = decode_png(encode_png(over));
    ASSERT_TRUE(back.same_shape(over));
    for (std::size_t i = 0; i < over.data.size(); ++i) EXPECT_EQ(to_byte(back.data[i]), to_byte(over.data[i]));
    EXPECT_EQ(to_byte(0.5), 128);
    EXPECT_EQ(to_byte(-1.0), 0);
    EXPECT_EQ(to_byte(2.0), 255);
}

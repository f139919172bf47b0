#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "golden_tables.hpp"
#include "splat6d/channels.hpp"
#include "splat6d/error.hpp"
#include "splat6d/labels.hpp"
#include "splat6d/transfer_function.hpp"
#include "splat6d/volume.hpp"
#include "test_util.hpp"

using namespace splat6d;
using splat6d::testing::TempDir;

namespace {

CtVolume make_volume(std::array<int, 3> dims, Vec3 spacing, double fill = 0.0) {
    CtVolume v;
    v.geometry.dims = dims;
    v.geometry.spacing = spacing;
    v.hu.assign(v.geometry.voxel_count(), fill);
    return v;
}

LabelVolume make_labels(const VolumeGeometry& g, std::uint8_t fill, bool consolidated) {
    LabelVolume l;
    l.geometry = g;
    l.labels.assign(g.voxel_count(), fill);
    l.consolidated = consolidated;
    return l;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream f(p);
    f << text;
}

void write_bytes(const std::filesystem::path& p, std::size_t n) {
    std::ofstream f(p, std::ios::binary);
    std::string zeros(n, '\0');
    f.write(zeros.data(), static_cast<std::streamsize>(n));
}

const char* kMeta4 =
    "dims = 4 4 4\nspacing = 1 1 1\norigin = 0 0 0\ndirection = 1 0 0 0 1 0 0 0 1\n";

// Interpolation oracle on the golden table, independent of the library lookup.
std::array<double, 4> golden_eval(const std::vector<golden::GoldenPoint>& pts, double hu) {
    if (hu <= pts.front().hu) return pts.front().rgba;
    if (hu >= pts.back().hu) return pts.back().rgba;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        if (hu < pts[i].hu) {
            const double t = (hu - pts[i - 1].hu) / (pts[i].hu - pts[i - 1].hu);
            std::array<double, 4> out{};
            for (int c = 0; c < 4; ++c) out[c] = pts[i - 1].rgba[c] * (1.0 - t) + pts[i].rgba[c] * t;
            return out;
        }
    }
    return pts.back().rgba;
}

}  // namespace

TEST(VolumeFile, ConstantVolumeLoads) {
    TempDir dir("vol");
    CtVolume v = make_volume({2, 2, 2}, Vec3::Ones(), -1024.0);
    save_volume(v, dir / "c");
    const CtVolume back = load_volume(dir / "c.meta");
    ASSERT_EQ(back.hu.size(), 8u);
    for (double x : back.hu) EXPECT_EQ(x, -1024.0);
}

TEST(VolumeFile, RoundTripIsBitIdentical) {
    TempDir dir("vol");
    CtVolume v = make_volume({5, 3, 4}, Vec3(0.7, 1.3, 2.5));
    v.geometry.origin = Vec3(-101.25, 3.0 / 7.0, 12.0);
    const double c = std::cos(0.3), s = std::sin(0.3);
    v.geometry.direction << c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0;
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> hu(-1024, 3072);
    for (auto& x : v.hu) x = hu(rng);
    save_volume(v, dir / "r");
    const CtVolume back = load_volume(dir / "r");
    EXPECT_EQ(back.geometry.dims, v.geometry.dims);
    EXPECT_EQ(back.geometry.spacing, v.geometry.spacing);
    EXPECT_EQ(back.geometry.origin, v.geometry.origin);
    EXPECT_EQ(back.geometry.direction, v.geometry.direction);
    EXPECT_EQ(back.hu, v.hu);

    save_volume(back, dir / "r2");
    std::ifstream a(dir / "r.raw", std::ios::binary), b(dir / "r2.raw", std::ios::binary);
    const std::string ra((std::istreambuf_iterator<char>(a)), {}), rb((std::istreambuf_iterator<char>(b)), {});
    EXPECT_EQ(ra, rb);
}

TEST(VolumeFile, ClampsOutOfRangeIntensities) {
    TempDir dir("vol");
    CtVolume v = make_volume({2, 1, 1}, Vec3::Ones());
    v.hu = {-3000.0, 5000.0};
    save_volume(v, dir / "x");
    const CtVolume back = load_volume(dir / "x");
    EXPECT_EQ(back.hu[0], -1024.0);
    EXPECT_EQ(back.hu[1], 3072.0);
}

TEST(VolumeFile, PayloadSizeMismatch) {
    TempDir dir("vol");
    write_text(dir / "m.meta", kMeta4);
    write_bytes(dir / "m.raw", 100);  // 4^3 * 2 = 128 expected
    try {
        load_volume(dir / "m");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::SizeMismatch);
    }
    write_bytes(dir / "m.raw", 128);
    EXPECT_NO_THROW(load_volume(dir / "m"));
}

TEST(VolumeFile, MalformedDescriptors) {
    TempDir dir("vol");
    write_bytes(dir / "m.raw", 128);
    auto expect_malformed = [&](const std::string& meta) {
        write_text(dir / "m.meta", meta);
        try {
            load_volume(dir / "m");
            ADD_FAILURE() << meta;
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::MalformedFile) << meta;
        }
    };
    expect_malformed("dims = 4 4\nspacing = 1 1 1\norigin = 0 0 0\ndirection = 1 0 0 0 1 0 0 0 1\n");
    expect_malformed("dims = 4 4 4\norigin = 0 0 0\ndirection = 1 0 0 0 1 0 0 0 1\n");
    expect_malformed("dims = 4 4 4\nspacing = 1 x 1\norigin = 0 0 0\ndirection = 1 0 0 0 1 0 0 0 1\n");
    expect_malformed("dims = 4 4 4\nspacing = 1 1 1\norigin = 0 0 0\ndirection = 1 0 0 0 1 0 0 0 1\ngarbage\n");
    expect_malformed("dims = 4 4 4\nspacing = 0 1 1\norigin = 0 0 0\ndirection = 1 0 0 0 1 0 0 0 1\n");
    expect_malformed("dims = 4 4 4\nspacing = 1 1 1\norigin = 0 0 0\ndirection = 1 0 0 0 2 0 0 0 1\n");
}

TEST(VolumeFile, MissingFileIsIoError) {
    TempDir dir("vol");
    try {
        load_volume(dir / "nothing");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Io);
    }
}

TEST(LabelFile, RoundTripAndRangeCheck) {
    TempDir dir("lab");
    LabelVolume l = make_labels(make_volume({3, 2, 2}, Vec3::Ones()).geometry, 0, false);
    for (std::size_t i = 0; i < l.labels.size(); ++i) l.labels[i] = static_cast<std::uint8_t>(i * 10);
    save_labels(l, dir / "l");
    const LabelVolume back = load_labels(dir / "l");
    EXPECT_EQ(back.labels, l.labels);
    EXPECT_FALSE(back.consolidated);

    write_text(dir / "bad.meta", "dims = 1 1 1\nspacing = 1 1 1\norigin = 0 0 0\ndirection = 1 0 0 0 1 0 0 0 1\n");
    std::ofstream f(dir / "bad.raw", std::ios::binary);
    const std::int16_t v = 120;
    f.write(reinterpret_cast<const char*>(&v), 2);
    f.close();
    try {
        load_labels(dir / "bad");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::UnknownLabel);
    }
}

TEST(Resample, IsotropicAtTargetIsIdentity) {
    CtVolume v = make_volume({6, 5, 4}, Vec3::Constant(1.5));
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-500.0, 500.0);
    for (auto& x : v.hu) x = u(rng);
    const CtVolume r = resample_isotropic(v, 1.5);
    EXPECT_EQ(r.geometry.dims, v.geometry.dims);
    EXPECT_EQ(r.hu, v.hu);
}

TEST(Resample, ConstantStaysConstant) {
    const CtVolume v = make_volume({7, 9, 5}, Vec3(0.8, 1.1, 2.3), 42.0);
    for (double t : {0.5, 1.0, 1.5, 3.0}) {
        const CtVolume r = resample_isotropic(v, t);
        for (double x : r.hu) ASSERT_NEAR(x, 42.0, 1e-12);
    }
}

TEST(Resample, LinearRampMatchesAnalyticValues) {
    // HU = 3x + 2y - z + 5 in mm, sampled at 1 mm, resampled to 1.5 mm.
    CtVolume v = make_volume({13, 10, 7}, Vec3::Ones());
    auto ramp = [](double x, double y, double z) { return 3.0 * x + 2.0 * y - z + 5.0; };
    for (int k = 0; k < 7; ++k)
        for (int j = 0; j < 10; ++j)
            for (int i = 0; i < 13; ++i) v.hu[v.geometry.linear_index(i, j, k)] = ramp(i, j, k);
    const CtVolume r = resample_isotropic(v, 1.5);
    // floor((n - 1) / 1.5) + 1
    EXPECT_EQ(r.geometry.dims, (std::array<int, 3>{9, 7, 5}));
    EXPECT_EQ(r.geometry.spacing, Vec3::Constant(1.5));
    for (int k = 0; k < r.geometry.dims[2]; ++k)
        for (int j = 0; j < r.geometry.dims[1]; ++j)
            for (int i = 0; i < r.geometry.dims[0]; ++i)
                ASSERT_NEAR(r.hu[r.geometry.linear_index(i, j, k)], ramp(1.5 * i, 1.5 * j, 1.5 * k), 1e-6);
}

TEST(Resample, NoOvershoot) {
    CtVolume v = make_volume({8, 8, 8}, Vec3(1.0, 0.7, 2.0));
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1024.0, 3072.0);
    for (auto& x : v.hu) x = u(rng);
    const auto [lo, hi] = std::minmax_element(v.hu.begin(), v.hu.end());
    for (double t : {0.6, 1.5}) {
        const CtVolume r = resample_isotropic(v, t);
        for (double x : r.hu) {
            ASSERT_GE(x, *lo);
            ASSERT_LE(x, *hi);
        }
    }
}

TEST(Resample, RejectsNonPositiveTarget) {
    const CtVolume v = make_volume({2, 2, 2}, Vec3::Ones());
    EXPECT_THROW(resample_isotropic(v, 0.0), Error);
    EXPECT_THROW(resample_isotropic(v, -1.0), Error);
}

TEST(Resample, LabelsUseNearestNeighbour) {
    LabelVolume l = make_labels(make_volume({4, 1, 1}, Vec3::Ones()).geometry, 0, true);
    l.labels = {1, 2, 3, 4};
    const LabelVolume r = resample_isotropic(l, 1.5);
    ASSERT_EQ(r.geometry.dims, (std::array<int, 3>{3, 1, 1}));
    // Output positions 0, 1.5, 3 mm; round-half-away picks 0, 2, 3.
    EXPECT_EQ(r.labels, (std::vector<std::uint8_t>{1, 3, 4}));
    EXPECT_TRUE(r.consolidated);
}

TEST(Normalize, PercentileMatchesSortOracle) {
    std::vector<double> values(1000);
    std::iota(values.begin(), values.end(), 0.0);
    std::mt19937_64 rng(4);
    std::shuffle(values.begin(), values.end(), rng);
    for (double p : {0.0, 0.5, 25.0, 50.0, 99.5, 100.0}) {
        std::vector<double> sorted = values;
        std::sort(sorted.begin(), sorted.end());
        const double rank = p / 100.0 * 999.0;
        const std::size_t lo = static_cast<std::size_t>(rank);
        const double oracle = lo + 1 < sorted.size() ? sorted[lo] + (sorted[lo + 1] - sorted[lo]) * (rank - lo) : sorted[lo];
        EXPECT_NEAR(percentile(values, p), oracle, 1e-12) << p;
    }
    // Oracle values, frozen.
    EXPECT_NEAR(percentile(values, 0.5), 4.995, 1e-12);
    EXPECT_NEAR(percentile(values, 99.5), 994.005, 1e-12);
}

TEST(Normalize, ClipBoundsUseForegroundPercentiles) {
    CtVolume v = make_volume({10, 10, 10}, Vec3::Ones());
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n(40.0, 200.0);
    for (auto& x : v.hu) x = n(rng);
    LabelVolume mask = make_labels(v.geometry, 0, true);
    std::vector<double> fg;
    for (std::size_t i = 0; i < mask.labels.size(); ++i) {
        if (i % 3 == 0) {
            mask.labels[i] = 2;
            fg.push_back(v.hu[i]);
        }
    }
    std::sort(fg.begin(), fg.end());
    auto oracle = [&](double p) {
        const double rank = p / 100.0 * static_cast<double>(fg.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(rank);
        return fg[lo] + (fg[lo + 1] - fg[lo]) * (rank - lo);
    };
    const HuNormalization stats = hu_normalization(v, &mask);
    EXPECT_NEAR(stats.clip_lo, oracle(0.5), 1e-9);
    EXPECT_NEAR(stats.clip_hi, oracle(99.5), 1e-9);
}

TEST(Normalize, TwoValueVolumeZScore) {
    CtVolume v = make_volume({10, 10, 10}, Vec3::Ones());
    for (std::size_t i = 0; i < v.hu.size(); ++i) v.hu[i] = i % 10 == 0 ? 100.0 : 0.0;
    const CtVolume z = normalize_hu(v);
    double mean = 0.0;
    for (double x : z.hu) mean += x;
    mean /= static_cast<double>(z.hu.size());
    double var = 0.0;
    for (double x : z.hu) var += (x - mean) * (x - mean);
    EXPECT_NEAR(mean, 0.0, 1e-9);
    EXPECT_NEAR(std::sqrt(var / static_cast<double>(z.hu.size())), 1.0, 1e-9);
}

TEST(Normalize, ConstantVolumeIsDegenerate) {
    const CtVolume v = make_volume({4, 4, 4}, Vec3::Ones(), 12.0);
    try {
        normalize_hu(v);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DegenerateVolume);
    }
}

TEST(Labels, SpecificMappings) {
    EXPECT_EQ(consolidate_label(5), 2);
    EXPECT_EQ(consolidate_label(79), 9);
    EXPECT_EQ(consolidate_label(118), 8);
    EXPECT_EQ(consolidate_label(0), 0);
}

TEST(Labels, AllEntriesMatchGoldenTable) {
    for (int raw = 0; raw < 120; ++raw) EXPECT_EQ(consolidate_label(raw), golden::kLabelGroup[raw]) << raw;
}

TEST(Labels, TotalWithImageExactlyAllGroups) {
    std::set<int> image;
    for (int raw = 0; raw <= 119; ++raw) image.insert(consolidate_label(raw));
    EXPECT_EQ(image.size(), 12u);
    EXPECT_EQ(*image.begin(), 0);
    EXPECT_EQ(*image.rbegin(), 11);
}

TEST(Labels, AboveRangeIsUnknown) {
    for (int raw : {120, 200, 255}) {
        try {
            consolidate_label(raw);
            ADD_FAILURE() << raw;
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::UnknownLabel);
        }
    }
}

TEST(Labels, VolumeConsolidation) {
    LabelVolume l = make_labels(make_volume({4, 1, 1}, Vec3::Ones()).geometry, 0, false);
    l.labels = {5, 79, 118, 0};
    const LabelVolume c = consolidate_labels(l);
    EXPECT_TRUE(c.consolidated);
    EXPECT_EQ(c.labels, (std::vector<std::uint8_t>{2, 9, 8, 0}));
}

TEST(Labels, GroupNames) {
    EXPECT_EQ(group_name(7), "Skeleton Group (Bones, Cartilage)");
    EXPECT_EQ(group_name(0), "Background/Other");
    EXPECT_THROW(group_name(12), Error);
}

TEST(TransferFunction, SkeletonExamples) {
    const auto& seen = builtin_preset("seen_tf");
    EXPECT_EQ(seen[kSkeleton].eval(350.0), (Rgba{255.0, 255.0, 255.0, 1.0}));
    const Rgba mid = seen[kSkeleton].eval(140.0);
    const auto oracle = golden_eval(golden::kSeenTf[kSkeleton], 140.0);
    const Rgba frozen{217.5, 122.5, 85.0, 0.35};
    for (int c = 0; c < 4; ++c) {
        EXPECT_NEAR(oracle[c], frozen[c], 1e-12);
        EXPECT_NEAR(mid[c], frozen[c], 1e-12);
    }
}

TEST(TransferFunction, AllGroupsStartTransparentBlack) {
    for (const auto& name : preset_names()) {
        const auto& set = builtin_preset(name);
        for (int g = 0; g < kNumGroups; ++g) EXPECT_EQ(set[g].eval(-1024.0), (Rgba{0.0, 0.0, 0.0, 0.0}));
    }
}

TEST(TransferFunction, ControlPointsMatchGoldenTables) {
    const std::pair<const char*, const std::vector<golden::GoldenPoint>*> presets[] = {
        {"seen_tf", golden::kSeenTf}, {"unseen_tf", golden::kUnseenTf}};
    for (const auto& [name, table] : presets) {
        const auto& set = builtin_preset(name);
        for (int g = 0; g < kNumGroups; ++g) {
            const auto& pts = table[g];
            ASSERT_EQ(set[g].points.size(), pts.size()) << name << " group " << g;
            for (const auto& p : pts) {
                const Rgba got = set[g].eval(p.hu);
                for (int c = 0; c < 3; ++c) EXPECT_EQ(got[c], p.rgba[c]) << name << " g" << g << " hu " << p.hu;
                EXPECT_NEAR(got[3], p.rgba[3], 1e-12) << name << " g" << g << " hu " << p.hu;
            }
        }
    }
}

TEST(TransferFunction, InterpolationMatchesOracleEverywhere) {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> hu(-1500.0, 3500.0);
    for (int t = 0; t < 5000; ++t) {
        const double h = hu(rng);
        const int g = t % kNumGroups;
        const Rgba got = builtin_preset("unseen_tf")[g].eval(h);
        const auto want = golden_eval(golden::kUnseenTf[g], h);
        for (int c = 0; c < 4; ++c) ASSERT_NEAR(got[c], want[c], 1e-9);
    }
}

TEST(TransferFunction, Continuity) {
    const auto& set = builtin_preset("seen_tf");
    for (int g = 0; g < kNumGroups; ++g) {
        for (const auto& p : set[g].points) {
            const Rgba a = set[g].eval(p.hu - 1e-7), b = set[g].eval(p.hu + 1e-7);
            for (int c = 0; c < 4; ++c) EXPECT_NEAR(a[c], b[c], 1e-4);
        }
    }
}

TEST(TransferFunction, DataFilesParseToBuiltinPresets) {
    for (const auto& name : preset_names()) {
        const auto path = std::filesystem::path(SPLAT6D_SOURCE_DIR) / "data" / "tf" / (name + ".tf");
        const TransferFunctionSet loaded = load_transfer_functions(path);
        const auto& builtin = builtin_preset(name);
        for (int g = 0; g < kNumGroups; ++g) {
            ASSERT_EQ(loaded[g].points.size(), builtin[g].points.size());
            for (std::size_t i = 0; i < loaded[g].points.size(); ++i) {
                EXPECT_EQ(loaded[g].points[i].hu, builtin[g].points[i].hu);
                EXPECT_EQ(loaded[g].points[i].rgba, builtin[g].points[i].rgba);
            }
        }
    }
}

TEST(TransferFunction, FormatParseRoundTrip) {
    const auto& set = builtin_preset("unseen_tf");
    const TransferFunctionSet back = parse_transfer_functions(format_transfer_functions(set));
    for (int g = 0; g < kNumGroups; ++g) {
        ASSERT_EQ(back[g].points.size(), set[g].points.size());
        for (std::size_t i = 0; i < set[g].points.size(); ++i) {
            EXPECT_EQ(back[g].points[i].hu, set[g].points[i].hu);
            EXPECT_EQ(back[g].points[i].rgba, set[g].points[i].rgba);
        }
    }
}

TEST(TransferFunction, ValidationRejectsBadTables) {
    TransferFunction tf;
    EXPECT_THROW(tf.validate(), Error);
    tf.points = {{0.0, {0, 0, 0, 0}}, {0.0, {1, 1, 1, 0.5}}};
    EXPECT_THROW(tf.validate(), Error);
    tf.points = {{0.0, {0, 0, 0, 0}}, {10.0, {256, 1, 1, 0.5}}};
    EXPECT_THROW(tf.validate(), Error);
    tf.points = {{0.0, {0, 0, 0, 0}}, {10.0, {1, 1, 1, 1.5}}};
    EXPECT_THROW(tf.validate(), Error);
    EXPECT_THROW(builtin_preset("no_such_preset"), Error);
}

TEST(InputChannels, BackgroundAndLiverVoxels) {
    CtVolume raw = make_volume({2, 1, 1}, Vec3::Ones());
    raw.hu = {-400.0, 250.0};
    CtVolume norm = raw;
    norm.hu = {-1.0, 1.0};
    LabelVolume labels = make_labels(raw.geometry, 0, true);
    labels.labels = {kBackground, kLiver};
    const InputVolume6 in = build_input_channels(norm, raw, labels, builtin_preset("seen_tf"));
    ASSERT_EQ(in.data.size(), 12u);
    for (int c = InputVolume6::kRed; c <= InputVolume6::kAlpha; ++c) EXPECT_EQ(in.at(c, 0), 0.0);
    EXPECT_EQ(in.at(InputVolume6::kHu, 1), 1.0);
    EXPECT_EQ(in.at(InputVolume6::kLabel, 1), 2.0);
    EXPECT_NEAR(in.at(InputVolume6::kRed, 1), 190.0 / 255.0, 1e-15);
    EXPECT_NEAR(in.at(InputVolume6::kGreen, 1), 150.0 / 255.0, 1e-15);
    EXPECT_NEAR(in.at(InputVolume6::kBlue, 1), 110.0 / 255.0, 1e-15);
    EXPECT_NEAR(in.at(InputVolume6::kAlpha, 1), 0.75, 1e-15);
}

TEST(InputChannels, RandomVolumeIsFiniteAndInRange) {
    CtVolume raw = make_volume({12, 11, 10}, Vec3::Ones());
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> hu(-1024.0, 3072.0);
    std::uniform_int_distribution<int> grp(0, 11);
    for (auto& x : raw.hu) x = hu(rng);
    LabelVolume labels = make_labels(raw.geometry, 0, true);
    for (auto& l : labels.labels) l = static_cast<std::uint8_t>(grp(rng));
    const CtVolume norm = normalize_hu(raw, &labels);
    const InputVolume6 in = build_input_channels(norm, raw, labels, builtin_preset("unseen_tf"));
    for (double x : in.data) ASSERT_TRUE(std::isfinite(x));
    for (int c = InputVolume6::kRed; c <= InputVolume6::kAlpha; ++c) {
        for (double x : in.channel(c)) {
            ASSERT_GE(x, 0.0);
            ASSERT_LE(x, 1.0);
        }
    }
}

TEST(InputChannels, ShapeMismatch) {
    const CtVolume a = make_volume({2, 2, 2}, Vec3::Ones());
    const CtVolume b = make_volume({2, 2, 3}, Vec3::Ones());
    const LabelVolume l = make_labels(a.geometry, 0, true);
    try {
        build_input_channels(a, b, l, builtin_preset("seen_tf"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ShapeMismatch);
    }
}

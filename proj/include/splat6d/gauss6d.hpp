#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>

#include <Eigen/Core>

namespace splat6d {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;

inline constexpr int kCovRawCount = 21;
inline constexpr int kShCount = 12;
inline constexpr int kNumGroups = 12;
/// mu_p(3) + mu_d(3) + cov_raw(21) + sh(12) + opacity_raw(1)
inline constexpr int kParamsPerGaussian = 40;

// Real SH constants, 3DGS basis order [Y00, Y1-1, Y10, Y11].
inline constexpr double kShC0 = 0.28209479177387814;
inline constexpr double kShC1 = 0.4886025119029199;

/// One 6D (position x direction) Gaussian primitive.
///
/// `cov_raw` holds the 6 log-diagonal Cholesky entries followed by the 15
/// strictly-lower entries in row-major order: (1,0), (2,0), (2,1), (3,0), ...
/// `sh` is basis-major: sh[3 * basis + channel].
struct Gaussian6D {
    Vec3 mu_p = Vec3::Zero();
    Vec3 mu_d = Vec3(0.0, 0.0, 1.0);
    std::array<double, kCovRawCount> cov_raw{};
    std::array<double, kShCount> sh{};
    double opacity_raw = 0.0;
    std::uint8_t label = 0;

    friend bool operator==(const Gaussian6D&, const Gaussian6D&) = default;
};

/// Multiplier applied to the Cholesky diagonal. Per-scene: raw 0 then yields
/// Gaussians of roughly voxel size.
struct CovarianceScale {
    double spatial = 1.0;
    double directional = 1.0;

    double for_row(int row) const { return row < 3 ? spatial : directional; }
    friend bool operator==(const CovarianceScale&, const CovarianceScale&) = default;
};

/// Index into cov_raw of the strictly-lower Cholesky entry (row, col), row > col.
constexpr int off_diagonal_index(int row, int col) { return 6 + row * (row - 1) / 2 + col; }

struct Covariance6 {
    Mat6 chol;   // lower-triangular factor L
    Mat6 sigma;  // L * L^T

    Mat3 pp() const { return sigma.topLeftCorner<3, 3>(); }
    Mat3 pd() const { return sigma.topRightCorner<3, 3>(); }
    Mat3 dp() const { return sigma.bottomLeftCorner<3, 3>(); }
    Mat3 dd() const { return sigma.bottomRightCorner<3, 3>(); }
};

/// Builds Sigma = L L^T with L_ii = scale_i * exp(raw_i), L_ij = tanh(raw_ij).
/// Throws InvalidParameter on non-finite input.
Covariance6 build_covariance(std::span<const double, kCovRawCount> raw,
                             const CovarianceScale& scale = {});

/// Inverse of build_covariance for matrices whose Cholesky factor has
/// off-diagonals strictly inside (-1, 1). Throws InvalidParameter otherwise.
std::array<double, kCovRawCount> covariance_to_raw(const Mat6& sigma,
                                                   const CovarianceScale& scale = {});

enum class OpacityModulation {
    PeakNormalized,  // w = exp(-1/2 e^T Sdd^-1 e), in (0, 1]
    RawDensity,      // w = N(v | mu_d, Sdd), the unnormalized density
};

struct SliceOptions {
    OpacityModulation modulation = OpacityModulation::PeakNormalized;
    double max_condition = 1e12;
};

/// View-independent part of the conditional Gaussian. Computed once per
/// covariance and reused for every view direction.
struct SliceFactors {
    Mat3 gain;        // Sigma_pd * Sigma_dd^-1
    Mat3 sigma_pp;    // Schur complement Sigma_pp - Sigma_pd Sigma_dd^-1 Sigma_dp
    Mat3 dd_inv;      // Sigma_dd^-1
    double density_norm = 1.0;  // 1 for peak-normalized, ((2pi)^3 det Sdd)^-1/2 for raw density
};

/// Throws DegenerateCovariance when cond(Sigma_dd) exceeds options.max_condition.
SliceFactors slice_factors(const Covariance6& cov, const SliceOptions& options = {});

struct SlicedGaussian {
    Vec3 mu_p;
    Mat3 sigma_pp;
    double w = 1.0;
};

SlicedGaussian slice_covariance(const Gaussian6D& g, const SliceFactors& factors, const Vec3& v);

SlicedGaussian slice_covariance(const Gaussian6D& g, const Covariance6& cov, const Vec3& v,
                                const SliceOptions& options = {});

/// Unit vector from the camera position towards mu_p. Throws DegenerateGeometry
/// when the points coincide.
Vec3 view_direction(const Vec3& mu_p, const Vec3& cam_pos);

/// Degree-1 SH plus the 0.5 DC shift, before clamping.
Vec3 eval_sh_unclamped(std::span<const double, kShCount> sh, const Vec3& v);

/// RGB in [0, 1].
Vec3 eval_sh_color(std::span<const double, kShCount> sh, const Vec3& v);

/// SH DC coefficient whose constant color equals `color`.
inline double sh_dc_from_color(double color) { return (color - 0.5) / kShC0; }

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace splat6d

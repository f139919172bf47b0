#include "splat6d/gauss6d.hpp"

#include <numbers>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "splat6d/error.hpp"

namespace splat6d {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidParameter: return "invalid parameter";
        case ErrorCode::DegenerateCovariance: return "degenerate covariance";
        case ErrorCode::DegenerateGeometry: return "degenerate geometry";
        case ErrorCode::DegenerateVolume: return "degenerate volume";
        case ErrorCode::UnknownLabel: return "unknown label";
        case ErrorCode::ShapeMismatch: return "shape mismatch";
        case ErrorCode::SizeMismatch: return "size mismatch";
        case ErrorCode::MalformedFile: return "malformed file";
        case ErrorCode::Io: return "i/o error";
        case ErrorCode::EmptyScene: return "empty scene";
    }
    return "error";
}

Covariance6 build_covariance(std::span<const double, kCovRawCount> raw,
                             const CovarianceScale& scale) {
    Covariance6 out;
    out.chol.setZero();
    for (int i = 0; i < 6; ++i) {
        if (!std::isfinite(raw[i])) {
            throw Error(ErrorCode::InvalidParameter, "non-finite covariance parameter");
        }
        out.chol(i, i) = scale.for_row(i) * std::exp(raw[i]);
    }
    for (int r = 1; r < 6; ++r) {
        for (int c = 0; c < r; ++c) {
            const double x = raw[off_diagonal_index(r, c)];
            if (!std::isfinite(x)) {
                throw Error(ErrorCode::InvalidParameter, "non-finite covariance parameter");
            }
            out.chol(r, c) = std::tanh(x);
        }
    }
    out.sigma = out.chol * out.chol.transpose();
    return out;
}

std::array<double, kCovRawCount> covariance_to_raw(const Mat6& sigma,
                                                   const CovarianceScale& scale) {
    Eigen::LLT<Mat6> llt(sigma);
    if (llt.info() != Eigen::Success) {
        throw Error(ErrorCode::InvalidParameter, "covariance is not positive definite");
    }
    const Mat6 l = llt.matrixL();
    std::array<double, kCovRawCount> raw{};
    for (int i = 0; i < 6; ++i) raw[i] = std::log(l(i, i) / scale.for_row(i));
    for (int r = 1; r < 6; ++r) {
        for (int c = 0; c < r; ++c) {
            if (std::abs(l(r, c)) >= 1.0) {
                throw Error(ErrorCode::InvalidParameter,
                            "Cholesky off-diagonal outside the tanh range");
            }
            raw[off_diagonal_index(r, c)] = std::atanh(l(r, c));
        }
    }
    return raw;
}

SliceFactors slice_factors(const Covariance6& cov, const SliceOptions& options) {
    const Mat3 dd = cov.dd();
    Eigen::SelfAdjointEigenSolver<Mat3> eig;
    eig.computeDirect(dd, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues()(0);
    const double hi = eig.eigenvalues()(2);
    if (!(lo > 0.0) || hi / lo > options.max_condition) {
        throw Error(ErrorCode::DegenerateCovariance, "directional block is ill-conditioned");
    }
    SliceFactors f;
    f.dd_inv = dd.inverse();
    f.gain = cov.pd() * f.dd_inv;
    f.sigma_pp = cov.pp() - f.gain * cov.dp();
    f.sigma_pp = 0.5 * (f.sigma_pp + f.sigma_pp.transpose()).eval();
    if (options.modulation == OpacityModulation::RawDensity) {
        const double two_pi_cubed = std::pow(2.0 * std::numbers::pi, 3);
        f.density_norm = 1.0 / std::sqrt(two_pi_cubed * dd.determinant());
    }
    return f;
}

SlicedGaussian slice_covariance(const Gaussian6D& g, const SliceFactors& f, const Vec3& v) {
    const Vec3 e = v - g.mu_d;
    SlicedGaussian s;
    s.mu_p = g.mu_p + f.gain * e;
    s.sigma_pp = f.sigma_pp;
    s.w = f.density_norm * std::exp(-0.5 * e.dot(f.dd_inv * e));
    return s;
}

SlicedGaussian slice_covariance(const Gaussian6D& g, const Covariance6& cov, const Vec3& v,
                                const SliceOptions& options) {
    return slice_covariance(g, slice_factors(cov, options), v);
}

Vec3 view_direction(const Vec3& mu_p, const Vec3& cam_pos) {
    const Vec3 d = mu_p - cam_pos;
    const double n = d.norm();
    if (!(n > 0.0) || !std::isfinite(n)) {
        throw Error(ErrorCode::DegenerateGeometry, "gaussian coincides with the camera");
    }
    return d / n;
}

Vec3 eval_sh_unclamped(std::span<const double, kShCount> sh, const Vec3& v) {
    Vec3 c;
    for (int ch = 0; ch < 3; ++ch) {
        c[ch] = kShC0 * sh[ch] - kShC1 * v.y() * sh[3 + ch] + kShC1 * v.z() * sh[6 + ch] -
                kShC1 * v.x() * sh[9 + ch] + 0.5;
    }
    return c;
}

Vec3 eval_sh_color(std::span<const double, kShCount> sh, const Vec3& v) {
    for (double x : sh) {
        if (!std::isfinite(x)) throw Error(ErrorCode::InvalidParameter, "non-finite SH coefficient");
    }
    return eval_sh_unclamped(sh, v).cwiseMax(0.0).cwiseMin(1.0);
}

}  // namespace splat6d

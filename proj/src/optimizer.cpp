#include "splat6d/optimizer.hpp"

#include <cmath>
#include <cstring>

#include "binary_io.hpp"
#include "splat6d/error.hpp"

namespace splat6d {

double polylr(std::int64_t step, std::int64_t total, double base_lr) {
    if (total <= 0) throw Error(ErrorCode::InvalidParameter, "PolyLR needs a positive step count");
    if (step < 0 || step > total) throw Error(ErrorCode::InvalidParameter, "PolyLR step out of range");
    return base_lr * std::pow(1.0 - static_cast<double>(step) / static_cast<double>(total), 0.9);
}

double LrMultipliers::for_param(int p) const {
    if (p < kParamMuD) return mu_p;
    if (p < kParamCov) return mu_d;
    if (p < kParamSh) return cov;
    if (p < kParamOpacity) return sh;
    return opacity;
}

bool adam_step(OptimizerState& state, const GradientBuffer& grads, Scene& scene,
               const AdamConfig& config) {
    const std::size_t n = scene.size() * kParamsPerGaussian;
    if (grads.data.size() != n || state.m.size() != n || state.v.size() != n) {
        throw Error(ErrorCode::ShapeMismatch, "optimizer state, gradients and scene differ in size");
    }
    if (!grads.all_finite()) {
        ++state.skipped;
        return false;
    }
    const double lr = state.current_lr();
    const double t = static_cast<double>(state.step + 1);
    const double bc1 = 1.0 - std::pow(config.beta1, t);
    const double bc2 = 1.0 - std::pow(config.beta2, t);
    double multiplier[kParamsPerGaussian];
    for (int p = 0; p < kParamsPerGaussian; ++p) multiplier[p] = config.groups.for_param(p);

    double params[kParamsPerGaussian];
    for (std::size_t i = 0; i < scene.size(); ++i) {
        std::span<double, kParamsPerGaussian> ps(params, kParamsPerGaussian);
        pack_parameters(scene.gaussians[i], ps);
        const auto g = grads[i];
        for (int p = 0; p < kParamsPerGaussian; ++p) {
            const std::size_t k = i * kParamsPerGaussian + static_cast<std::size_t>(p);
            state.m[k] = config.beta1 * state.m[k] + (1.0 - config.beta1) * g[p];
            state.v[k] = config.beta2 * state.v[k] + (1.0 - config.beta2) * g[p] * g[p];
            const double m_hat = state.m[k] / bc1;
            const double v_hat = state.v[k] / bc2;
            params[p] -= lr * multiplier[p] * m_hat / (std::sqrt(v_hat) + config.eps);
        }
        unpack_parameters(ps, scene.gaussians[i]);
    }
    ++state.step;
    return true;
}

namespace {
constexpr char kMagic[4] = {'G', '6', 'D', 'O'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

void save_optimizer_state(const OptimizerState& state, const std::filesystem::path& path) {
    detail::BinaryWriter w(path.string());
    w.bytes(kMagic, 4);
    w.put(kVersion);
    w.put(static_cast<std::int64_t>(state.step));
    w.put(state.base_lr);
    w.put(static_cast<std::int64_t>(state.total_steps));
    w.put(static_cast<std::int64_t>(state.skipped));
    w.put(static_cast<std::uint64_t>(state.m.size()));
    w.bytes(state.m.data(), state.m.size() * sizeof(double));
    w.bytes(state.v.data(), state.v.size() * sizeof(double));
    w.finish(path.string());
}

OptimizerState load_optimizer_state(const std::filesystem::path& path) {
    detail::BinaryReader r(path.string());
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) throw Error(ErrorCode::MalformedFile, "not an optimizer state file");
    if (r.get<std::uint32_t>() != kVersion) throw Error(ErrorCode::MalformedFile, "unsupported optimizer state version");
    OptimizerState s;
    s.step = r.get<std::int64_t>();
    s.base_lr = r.get<double>();
    s.total_steps = r.get<std::int64_t>();
    s.skipped = r.get<std::int64_t>();
    const auto count = r.get<std::uint64_t>();
    if (count % kParamsPerGaussian != 0 || r.remaining() != 2 * count * sizeof(double)) {
        throw Error(ErrorCode::MalformedFile, "optimizer state payload size mismatch");
    }
    s.m.resize(count);
    s.v.resize(count);
    r.bytes(s.m.data(), count * sizeof(double));
    r.bytes(s.v.data(), count * sizeof(double));
    return s;
}

}  // namespace splat6d

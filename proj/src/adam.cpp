#include "opnn/adam.hpp"

#include <cmath>

namespace opnn {

std::size_t parameter_count(const ModelParams& params) {
    std::size_t n = 0;
    for (const auto& [name, tensor] : params) n += tensor.size();
    return n;
}

void zero_grads(ModelParams& params) {
    for (auto& [name, tensor] : params) tensor.zero_grad();
}

Adam::Adam(AdamConfig config) : config_(config) {
    if (config_.learning_rate <= 0.0) throw UsageError("adam: learning rate must be positive");
    if (config_.beta1 < 0.0 || config_.beta1 >= 1.0 || config_.beta2 < 0.0 || config_.beta2 >= 1.0) {
        throw UsageError("adam: betas must lie in [0,1)");
    }
}

void Adam::step(ModelParams& params) {
    for (const auto& [name, tensor] : params) {
        if (!tensor.requires_grad()) {
            throw UsageError("adam: parameter '" + name + "' has no gradient");
        }
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    for (auto& [name, tensor] : params) {
        const auto& g = tensor.grad();
        Moments& mom = moments_[name];
        if (mom.m.size() != g.size()) {
            mom.m.assign(g.size(), 0.0);
            mom.v.assign(g.size(), 0.0);
        }
        auto& theta = tensor.values();
        for (std::size_t i = 0; i < g.size(); ++i) {
            mom.m[i] = config_.beta1 * mom.m[i] + (1.0 - config_.beta1) * g[i];
            mom.v[i] = config_.beta2 * mom.v[i] + (1.0 - config_.beta2) * g[i] * g[i];
            const double m_hat = mom.m[i] / bc1;
            const double v_hat = mom.v[i] / bc2;
            theta[i] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.eps);
        }
    }
}

}  // namespace opnn

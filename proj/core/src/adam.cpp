#include "querysum/adam.hpp"

#include <cmath>

namespace querysum {

AdamState AdamState::for_params(const std::vector<ParamView>& params) {
    AdamState state;
    state.m.reserve(params.size());
    state.v.reserve(params.size());
    for (const ParamView& p : params) {
        state.m.emplace_back(p.values.size(), 0.0);
        state.v.emplace_back(p.values.size(), 0.0);
    }
    return state;
}

void adam_step(const AdamConfig& config, AdamState& state,
               const std::vector<ParamView>& params,
               const std::vector<ParamView>& grads) {
    require(params.size() == grads.size() && params.size() == state.m.size(),
            "adam_step: block count mismatch between params, grads, and state");
    state.t += 1;
    const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.t));
    for (size_t b = 0; b < params.size(); ++b) {
        require(params[b].values.size() == grads[b].values.size() &&
                    params[b].values.size() == state.m[b].size(),
                "adam_step: size mismatch in block " + params[b].name);
        double* p = params[b].values.data();
        const double* g = grads[b].values.data();
        double* m = state.m[b].data();
        double* v = state.v[b].data();
        const size_t n = params[b].values.size();
        for (size_t i = 0; i < n; ++i) {
            m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
            v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
            const double m_hat = m[i] / bc1;
            const double v_hat = v[i] / bc2;
            p[i] -= config.lr * m_hat / (std::sqrt(v_hat) + config.epsilon);
        }
    }
}

} // namespace querysum

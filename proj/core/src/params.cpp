#include "morel/params.hpp"

namespace morel {

void adam_step(ParamSet& params, const GradBuffer& grads, OptimizerState& state,
               const LrTable& lr_table) {
    for (const auto& arr : params.arrays()) {
        const auto& g = grads.at(arr.name);
        if (g.size() != arr.values.size())
            throw InvalidInput("gradient shape mismatch for " + arr.name);
        for (double gv : g)
            if (!std::isfinite(gv))
                throw NonFiniteGradient("non-finite gradient in " + arr.name);
    }

    state.step_count += 1;
    const double b1 = state.beta1, b2 = state.beta2;
    const double bias1 = 1.0 - std::pow(b1, static_cast<double>(state.step_count));
    const double bias2 = 1.0 - std::pow(b2, static_cast<double>(state.step_count));

    for (auto& arr : params.arrays()) {
        auto lr_it = lr_table.find(arr.group);
        if (lr_it == lr_table.end())
            throw InvalidInput("no learning rate for group " + arr.group);
        const double lr = lr_it->second;

        auto& m = state.m[arr.name];
        auto& v = state.v[arr.name];
        if (m.size() != arr.values.size()) m.assign(arr.values.size(), 0.0);
        if (v.size() != arr.values.size()) v.assign(arr.values.size(), 0.0);

        const auto& g = grads.at(arr.name);
        for (size_t i = 0; i < arr.values.size(); ++i) {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            const double m_hat = m[i] / bias1;
            const double v_hat = v[i] / bias2;
            arr.values[i] -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
        }
    }
}

}  // namespace morel

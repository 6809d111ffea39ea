#include "morel/blending.hpp"

namespace morel {

double blend_weight(double offset, double decay, double tau, double lambda_decay) {
    if (!(decay > 0.0)) throw InvalidInput("blend_weight: decay must be > 0");
    if (!(lambda_decay > 0.0)) throw InvalidInput("blend_weight: lambda_decay must be > 0");
    return std::exp(-lambda_decay * decay * std::abs(tau - offset));
}

BlendWeightGrads blend_weight_backward(double offset, double decay, double tau,
                                       double lambda_decay, double weight, double d_weight) {
    const double diff = tau - offset;
    const double sgn = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
    BlendWeightGrads g;
    // dw/do = lambda * d * sign(tau - o) * w;  dw/dd = -lambda * |tau - o| * w
    g.d_offset = d_weight * lambda_decay * decay * sgn * weight;
    g.d_decay = d_weight * (-lambda_decay * std::abs(diff)) * weight;
    return g;
}

}  // namespace morel

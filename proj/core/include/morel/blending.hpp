#pragma once

#include "morel/common.hpp"

namespace morel {

struct BlendConfig {
    double lambda_decay = 2.0;  // base decay coefficient, global decay speed
};

// Temporal opacity weight of a keyframe anchor:
//   w = exp(-lambda_decay * d * |tau - o|)
// w = 1 exactly when tau = o; 0 < w <= 1 for all finite inputs.
double blend_weight(double offset, double decay, double tau, double lambda_decay);

struct BlendWeightGrads {
    double d_offset = 0.0;
    double d_decay = 0.0;
};

// Gradients of w w.r.t. (o, d) for fixed tau and lambda. At tau == o the
// offset subgradient is taken as 0.
BlendWeightGrads blend_weight_backward(double offset, double decay, double tau,
                                       double lambda_decay, double weight, double d_weight);

}  // namespace morel

#pragma once

#include <vector>

#include "morel/image.hpp"

namespace morel {

// Dense per-pixel 2-vector field, row-major (u = x displacement, v = y).
struct FlowField {
    int width = 0, height = 0;
    std::vector<double> u, v;

    FlowField() = default;
    FlowField(int w, int h) : width(w), height(h), u(static_cast<size_t>(w) * h, 0.0),
                              v(static_cast<size_t>(w) * h, 0.0) {}

    double magnitude(size_t i) const { return std::sqrt(u[i] * u[i] + v[i] * v[i]); }
};

struct FlowOptions {
    int levels = 3;
    int window_radius = 3;   // 7x7 window
    int iterations = 3;      // refinement iterations per level
    double det_epsilon = 1e-8;
};

// Pyramidal Lucas-Kanade on luminance. Pixels whose structure tensor is
// degenerate keep zero (or inherited) flow; per-iteration updates are clamped
// to the window radius.
FlowField flow_lk(const Image& prev, const Image& next, const FlowOptions& opts = {});

}  // namespace morel

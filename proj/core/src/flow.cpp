#include "morel/flow.hpp"

#include <algorithm>

namespace morel {

namespace {

struct Grid {
    int w = 0, h = 0;
    std::vector<double> v;

    double at(int x, int y) const {
        x = std::clamp(x, 0, w - 1);
        y = std::clamp(y, 0, h - 1);
        return v[static_cast<size_t>(y) * w + x];
    }

    double sample(double x, double y) const {
        x = std::clamp(x, 0.0, static_cast<double>(w - 1));
        y = std::clamp(y, 0.0, static_cast<double>(h - 1));
        const int x0 = std::min(static_cast<int>(x), w - 2 >= 0 ? w - 2 : 0);
        const int y0 = std::min(static_cast<int>(y), h - 2 >= 0 ? h - 2 : 0);
        const double fx = x - x0, fy = y - y0;
        const double a = at(x0, y0), b = at(x0 + 1, y0);
        const double c = at(x0, y0 + 1), d = at(x0 + 1, y0 + 1);
        return (1 - fy) * ((1 - fx) * a + fx * b) + fy * ((1 - fx) * c + fx * d);
    }
};

Grid to_grid(const Image& img) {
    Grid g;
    g.w = img.width();
    g.h = img.height();
    g.v = img.luminance();
    return g;
}

// 5-tap binomial blur then 2x subsample.
Grid downsample(const Grid& in) {
    static const double taps[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
    Grid tmp;
    tmp.w = in.w;
    tmp.h = in.h;
    tmp.v.resize(in.v.size());
    for (int y = 0; y < in.h; ++y)
        for (int x = 0; x < in.w; ++x) {
            double acc = 0.0;
            for (int k = -2; k <= 2; ++k) acc += taps[k + 2] * in.at(x + k, y);
            tmp.v[static_cast<size_t>(y) * in.w + x] = acc;
        }
    Grid blurred;
    blurred.w = in.w;
    blurred.h = in.h;
    blurred.v.resize(in.v.size());
    for (int y = 0; y < in.h; ++y)
        for (int x = 0; x < in.w; ++x) {
            double acc = 0.0;
            for (int k = -2; k <= 2; ++k) acc += taps[k + 2] * tmp.at(x, y + k);
            blurred.v[static_cast<size_t>(y) * in.w + x] = acc;
        }
    Grid out;
    out.w = std::max(1, in.w / 2);
    out.h = std::max(1, in.h / 2);
    out.v.resize(static_cast<size_t>(out.w) * out.h);
    for (int y = 0; y < out.h; ++y)
        for (int x = 0; x < out.w; ++x)
            out.v[static_cast<size_t>(y) * out.w + x] = blurred.at(2 * x, 2 * y);
    return out;
}

std::vector<double> elementwise(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out(a.size());
    for (size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
    return out;
}

// Box-filter sums over the LK window via row/column running sums.
std::vector<double> box_sum(const std::vector<double>& in, int w, int h, int radius) {
    std::vector<double> rows(in.size()), out(in.size());
    for (int y = 0; y < h; ++y) {
        const double* src = in.data() + static_cast<size_t>(y) * w;
        double* dst = rows.data() + static_cast<size_t>(y) * w;
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            const int lo = std::max(0, x - radius), hi = std::min(w - 1, x + radius);
            for (int q = lo; q <= hi; ++q) acc += src[q];
            dst[x] = acc;
        }
    }
    for (int x = 0; x < w; ++x)
        for (int y = 0; y < h; ++y) {
            double acc = 0.0;
            const int lo = std::max(0, y - radius), hi = std::min(h - 1, y + radius);
            for (int q = lo; q <= hi; ++q) acc += rows[static_cast<size_t>(q) * w + x];
            out[static_cast<size_t>(y) * w + x] = acc;
        }
    return out;
}

}  // namespace

FlowField flow_lk(const Image& prev, const Image& next, const FlowOptions& opts) {
    if (!prev.same_shape(next)) throw InvalidInput("flow_lk: image shape mismatch");

    std::vector<Grid> pyr_prev{to_grid(prev)}, pyr_next{to_grid(next)};
    for (int l = 1; l < opts.levels; ++l) {
        pyr_prev.push_back(downsample(pyr_prev.back()));
        pyr_next.push_back(downsample(pyr_next.back()));
    }

    FlowField flow(pyr_prev.back().w, pyr_prev.back().h);

    for (int level = opts.levels - 1; level >= 0; --level) {
        const Grid& a = pyr_prev[level];
        const Grid& b = pyr_next[level];
        const int w = a.w, h = a.h;
        const size_t n = static_cast<size_t>(w) * h;

        if (flow.width != w || flow.height != h) {
            // Upsample the coarser flow, doubling magnitudes, and re-clamp:
            // the radius bound holds at every level in its own pixel units.
            FlowField up(w, h);
            Grid gu{flow.width, flow.height, flow.u};
            Grid gv{flow.width, flow.height, flow.v};
            const double clamp = static_cast<double>(opts.window_radius);
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    const size_t i = static_cast<size_t>(y) * w + x;
                    up.u[i] = 2.0 * gu.sample(x * 0.5, y * 0.5);
                    up.v[i] = 2.0 * gv.sample(x * 0.5, y * 0.5);
                    const double mag = std::sqrt(up.u[i] * up.u[i] + up.v[i] * up.v[i]);
                    if (mag > clamp) {
                        up.u[i] *= clamp / mag;
                        up.v[i] *= clamp / mag;
                    }
                }
            flow = std::move(up);
        }

        // Spatial gradients of the previous frame (central differences).
        std::vector<double> ix(n), iy(n);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const size_t i = static_cast<size_t>(y) * w + x;
                ix[i] = 0.5 * (a.at(x + 1, y) - a.at(x - 1, y));
                iy[i] = 0.5 * (a.at(x, y + 1) - a.at(x, y - 1));
            }
        const auto sxx = box_sum(elementwise(ix, ix), w, h, opts.window_radius);
        const auto sxy = box_sum(elementwise(ix, iy), w, h, opts.window_radius);
        const auto syy = box_sum(elementwise(iy, iy), w, h, opts.window_radius);

        std::vector<double> it(n), sxt(n), syt(n), ixit(n), iyit(n);
        for (int iter = 0; iter < opts.iterations; ++iter) {
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    const size_t i = static_cast<size_t>(y) * w + x;
                    it[i] = b.sample(x + flow.u[i], y + flow.v[i]) - a.at(x, y);
                    ixit[i] = ix[i] * it[i];
                    iyit[i] = iy[i] * it[i];
                }
            const auto bx = box_sum(ixit, w, h, opts.window_radius);
            const auto by = box_sum(iyit, w, h, opts.window_radius);

            const double clamp = static_cast<double>(opts.window_radius);
            for (size_t i = 0; i < n; ++i) {
                const double det = sxx[i] * syy[i] - sxy[i] * sxy[i];
                if (det < opts.det_epsilon) continue;
                double du = (-syy[i] * bx[i] + sxy[i] * by[i]) / det;
                double dv = (sxy[i] * bx[i] - sxx[i] * by[i]) / det;
                const double mag = std::sqrt(du * du + dv * dv);
                if (mag > clamp) {
                    du *= clamp / mag;
                    dv *= clamp / mag;
                }
                flow.u[i] += du;
                flow.v[i] += dv;
                // Total flow is clamped to the window radius at every level,
                // which bounds the output even on incoherent input.
                const double total = std::sqrt(flow.u[i] * flow.u[i] + flow.v[i] * flow.v[i]);
                if (total > clamp) {
                    flow.u[i] *= clamp / total;
                    flow.v[i] *= clamp / total;
                }
            }
        }
    }
    return flow;
}

}  // namespace morel

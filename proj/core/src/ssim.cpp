#include "morel/ssim.hpp"

#include <array>

namespace morel {

namespace {

constexpr int kRadius = 5;  // 11-tap window
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

const std::array<double, 11>& window_taps() {
    static const std::array<double, 11> taps = [] {
        std::array<double, 11> t{};
        double sum = 0.0;
        for (int i = 0; i < 11; ++i) {
            const double d = i - kRadius;
            t[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
            sum += t[i];
        }
        for (auto& v : t) v /= sum;
        return t;
    }();
    return taps;
}

// In-bounds tap sum for a coordinate near the border.
double tap_norm(int pos, int extent) {
    const auto& k = window_taps();
    double s = 0.0;
    for (int j = -kRadius; j <= kRadius; ++j) {
        const int q = pos + j;
        if (q >= 0 && q < extent) s += k[j + kRadius];
    }
    return s;
}

enum class Pass { Normalized, Unnormalized };

void blur_1d_x(const std::vector<double>& in, std::vector<double>& out, int w, int h, Pass pass) {
    const auto& k = window_taps();
    for (int y = 0; y < h; ++y) {
        const double* row = in.data() + static_cast<size_t>(y) * w;
        double* orow = out.data() + static_cast<size_t>(y) * w;
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int j = -kRadius; j <= kRadius; ++j) {
                const int q = x + j;
                if (q >= 0 && q < w) acc += k[j + kRadius] * row[q];
            }
            if (pass == Pass::Normalized) acc /= tap_norm(x, w);
            orow[x] = acc;
        }
    }
}

void blur_1d_y(const std::vector<double>& in, std::vector<double>& out, int w, int h, Pass pass) {
    const auto& k = window_taps();
    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y) {
            double acc = 0.0;
            for (int j = -kRadius; j <= kRadius; ++j) {
                const int q = y + j;
                if (q >= 0 && q < h) acc += k[j + kRadius] * in[static_cast<size_t>(q) * w + x];
            }
            if (pass == Pass::Normalized) acc /= tap_norm(y, h);
            out[static_cast<size_t>(y) * w + x] = acc;
        }
    }
}

std::vector<double> elementwise_product(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out(a.size());
    for (size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
    return out;
}

}  // namespace

std::vector<double> ssim_blur(const std::vector<double>& field, int width, int height) {
    std::vector<double> tmp(field.size()), out(field.size());
    blur_1d_x(field, tmp, width, height, Pass::Normalized);
    blur_1d_y(tmp, out, width, height, Pass::Normalized);
    return out;
}

// Adjoint of ssim_blur: scale by the per-axis normalizers, then convolve with
// the raw (unnormalized) symmetric taps, y axis first.
std::vector<double> ssim_blur_adjoint(const std::vector<double>& field, int width, int height) {
    std::vector<double> t1(field.size()), t2(field.size()), out(field.size());
    for (int y = 0; y < height; ++y) {
        const double ny = 1.0 / tap_norm(y, height);
        for (int x = 0; x < width; ++x)
            t1[static_cast<size_t>(y) * width + x] = field[static_cast<size_t>(y) * width + x] * ny;
    }
    blur_1d_y(t1, t2, width, height, Pass::Unnormalized);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            const double nx = 1.0 / tap_norm(x, width);
            t1[static_cast<size_t>(y) * width + x] = t2[static_cast<size_t>(y) * width + x] * nx;
        }
    blur_1d_x(t1, out, width, height, Pass::Unnormalized);
    return out;
}

SsimFields ssim_forward(const std::vector<double>& x, const std::vector<double>& y, int width,
                        int height) {
    if (x.size() != static_cast<size_t>(width) * height || x.size() != y.size())
        throw InvalidInput("ssim: field shape mismatch");

    SsimFields f;
    f.width = width;
    f.height = height;
    f.mu_x = ssim_blur(x, width, height);
    f.mu_y = ssim_blur(y, width, height);
    f.e_xx = ssim_blur(elementwise_product(x, x), width, height);
    f.e_yy = ssim_blur(elementwise_product(y, y), width, height);
    f.e_xy = ssim_blur(elementwise_product(x, y), width, height);

    f.ssim_map.resize(x.size());
    double total = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        const double mx = f.mu_x[i], my = f.mu_y[i];
        const double sx = f.e_xx[i] - mx * mx;
        const double sy = f.e_yy[i] - my * my;
        const double sxy = f.e_xy[i] - mx * my;
        const double a1 = 2.0 * mx * my + kC1;
        const double a2 = 2.0 * sxy + kC2;
        const double b1 = mx * mx + my * my + kC1;
        const double b2 = sx + sy + kC2;
        f.ssim_map[i] = (a1 * a2) / (b1 * b2);
        total += f.ssim_map[i];
    }
    f.mean = total / static_cast<double>(x.size());
    return f;
}

std::vector<double> ssim_backward_x(const SsimFields& f, const std::vector<double>& x,
                                    const std::vector<double>& y, double upstream) {
    const size_t n = x.size();
    const double per_pixel = upstream / static_cast<double>(n);

    // Gradients w.r.t. the blurred fields mu_x, E[x^2], E[xy].
    std::vector<double> g_mu(n), g_xx(n), g_xy(n);
    for (size_t i = 0; i < n; ++i) {
        const double mx = f.mu_x[i], my = f.mu_y[i];
        const double sxy = f.e_xy[i] - mx * my;
        const double a1 = 2.0 * mx * my + kC1;
        const double a2 = 2.0 * sxy + kC2;
        const double b1 = mx * mx + my * my + kC1;
        const double b2 = (f.e_xx[i] - mx * mx) + (f.e_yy[i] - my * my) + kC2;
        const double den = b1 * b2;
        const double num = a1 * a2;

        const double dn_dmu = 2.0 * my * (a2 - a1);
        const double dd_dmu = 2.0 * mx * (b2 - b1);
        g_mu[i] = per_pixel * (dn_dmu * den - num * dd_dmu) / (den * den);
        g_xx[i] = per_pixel * (-num * b1) / (den * den);
        g_xy[i] = per_pixel * (2.0 * a1) / den;
    }

    const auto a_mu = ssim_blur_adjoint(g_mu, f.width, f.height);
    const auto a_xx = ssim_blur_adjoint(g_xx, f.width, f.height);
    const auto a_xy = ssim_blur_adjoint(g_xy, f.width, f.height);

    std::vector<double> dx(n);
    for (size_t i = 0; i < n; ++i) dx[i] = a_mu[i] + 2.0 * x[i] * a_xx[i] + y[i] * a_xy[i];
    return dx;
}

}  // namespace morel

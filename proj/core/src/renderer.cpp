#include "morel/renderer.hpp"

#include <algorithm>
#include <future>
#include <numeric>

namespace morel {

namespace {

// Contributions are skipped once transmittance drops below this; both passes
// apply the identical rule so forward and backward see the same coverage.
constexpr double kMinTransmittance = 1e-12;

ProjectedGaussian project_gaussian(const GaussianAttributes& g, const ViewTransform& view,
                                   const RenderOptions& opts) {
    if (!(g.cov.xx > 0.0) || !(g.cov.yy > 0.0) || !(g.cov.det() > 0.0))
        throw InvalidInput("gaussian covariance is not positive definite");

    ProjectedGaussian p;
    p.mu = view.to_image(g.center);

    const Mat2& a = view.linear;
    // cov_img = A cov A^T
    const Mat2 cov_full{g.cov.xx, g.cov.xy, g.cov.xy, g.cov.yy};
    const Mat2 m = a * cov_full * a.transpose();
    p.cov = Sym2{m.a, 0.5 * (m.b + m.c), m.d};
    p.q = p.cov.inverse();

    if (opts.cull) {
        const double rx = opts.cull_sigma * std::sqrt(p.cov.xx);
        const double ry = opts.cull_sigma * std::sqrt(p.cov.yy);
        p.x0 = std::max(0, static_cast<int>(std::floor(p.mu.x - rx - 0.5)));
        p.x1 = std::min(view.width - 1, static_cast<int>(std::ceil(p.mu.x + rx - 0.5)));
        p.y0 = std::max(0, static_cast<int>(std::floor(p.mu.y - ry - 0.5)));
        p.y1 = std::min(view.height - 1, static_cast<int>(std::ceil(p.mu.y + ry - 0.5)));
    } else {
        p.x0 = 0;
        p.x1 = view.width - 1;
        p.y0 = 0;
        p.y1 = view.height - 1;
    }
    return p;
}

std::vector<int> depth_order(const std::vector<GaussianAttributes>& gaussians) {
    std::vector<int> order(gaussians.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&gaussians](int l, int r) {
        return gaussians[l].depth_key < gaussians[r].depth_key;
    });
    return order;
}

// Gaussian-outer forward pass: iterate primitives in depth order, updating a
// per-pixel running transmittance.
void composite_gaussian_outer(RenderTape& tape) {
    const int w = tape.view.width, h = tape.view.height;
    const RenderOptions& opts = tape.opts;
    const double q_max = opts.cull_sigma * opts.cull_sigma;
    std::vector<double> transmittance(static_cast<size_t>(w) * h, 1.0);
    Image& img = tape.image;

    for (int idx : tape.order) {
        const ProjectedGaussian& p = tape.projected[idx];
        const GaussianAttributes& g = tape.gaussians[idx];
        for (int y = p.y0; y <= p.y1; ++y) {
            for (int x = p.x0; x <= p.x1; ++x) {
                double& t = transmittance[static_cast<size_t>(y) * w + x];
                if (t <= kMinTransmittance) continue;
                const double dx = (x + 0.5) - p.mu.x;
                const double dy = (y + 0.5) - p.mu.y;
                const double qf = p.q.xx * dx * dx + 2.0 * p.q.xy * dx * dy + p.q.yy * dy * dy;
                if (opts.cull && qf > q_max) continue;
                const double alpha = g.opacity * exp_neg(0.5 * qf);
                const double wgt = alpha * t;
                const size_t base = (static_cast<size_t>(y) * w + x) * 3;
                img.data()[base] += g.color.r * wgt;
                img.data()[base + 1] += g.color.g * wgt;
                img.data()[base + 2] += g.color.b * wgt;
                t *= (1.0 - alpha);
            }
        }
    }
}

// Bins of sorted-gaussian indices per image row, for pixel-outer traversal.
std::vector<std::vector<int>> build_row_bins(const RenderTape& tape) {
    std::vector<std::vector<int>> bins(tape.view.height);
    for (int idx : tape.order) {
        const ProjectedGaussian& p = tape.projected[idx];
        for (int y = p.y0; y <= p.y1; ++y) bins[y].push_back(idx);
    }
    return bins;
}

// Pixel-outer forward for one row; bit-identical to the gaussian-outer pass
// because per-pixel compositing order and arithmetic are the same.
void composite_row(RenderTape& tape, const std::vector<int>& bin, int y) {
    const int w = tape.view.width;
    const double q_max = tape.opts.cull_sigma * tape.opts.cull_sigma;
    for (int x = 0; x < w; ++x) {
        double t = 1.0;
        Vec3 c{};
        for (int idx : bin) {
            const ProjectedGaussian& p = tape.projected[idx];
            if (x < p.x0 || x > p.x1) continue;
            if (t <= kMinTransmittance) break;
            const double dx = (x + 0.5) - p.mu.x;
            const double dy = (y + 0.5) - p.mu.y;
            const double qf = p.q.xx * dx * dx + 2.0 * p.q.xy * dx * dy + p.q.yy * dy * dy;
            if (tape.opts.cull && qf > q_max) continue;
            const double alpha = tape.gaussians[idx].opacity * exp_neg(0.5 * qf);
            const double wgt = alpha * t;
            c += tape.gaussians[idx].color * wgt;
            t *= (1.0 - alpha);
        }
        tape.image.set_pixel(x, y, c);
    }
}

}  // namespace

RenderTape render_forward(const std::vector<GaussianAttributes>& gaussians,
                          const ViewTransform& view, const RenderOptions& opts) {
    view.validate();
    RenderTape tape;
    tape.view = view;
    tape.opts = opts;
    tape.gaussians = gaussians;
    tape.projected.reserve(gaussians.size());
    for (const auto& g : gaussians) tape.projected.push_back(project_gaussian(g, view, opts));
    tape.order = depth_order(gaussians);
    tape.image = Image(view.width, view.height, 0.0);

    if (opts.threads <= 1) {
        composite_gaussian_outer(tape);
    } else {
        const auto bins = build_row_bins(tape);
        const int workers = std::min(opts.threads, view.height);
        std::vector<std::future<void>> futures;
        futures.reserve(workers);
        for (int widx = 0; widx < workers; ++widx) {
            futures.push_back(std::async(std::launch::async, [&tape, &bins, widx, workers]() {
                for (int y = widx; y < tape.view.height; y += workers)
                    composite_row(tape, bins[y], y);
            }));
        }
        for (auto& f : futures) f.get();
    }
    return tape;
}

Image render(const std::vector<GaussianAttributes>& gaussians, const ViewTransform& view,
             const RenderOptions& opts) {
    return render_forward(gaussians, view, opts).image;
}

std::vector<GaussianGrad> render_backward(const RenderTape& tape, const Image& loss_grad) {
    if (loss_grad.width() != tape.view.width || loss_grad.height() != tape.view.height)
        throw InvalidInput("loss gradient shape does not match the rendered image");

    const int w = tape.view.width, h = tape.view.height;
    const double q_max = tape.opts.cull_sigma * tape.opts.cull_sigma;
    std::vector<GaussianGrad> grads(tape.gaussians.size());
    const auto bins = build_row_bins(tape);

    // Scratch for one pixel's covering primitives, front to back.
    struct Hit {
        int idx;
        double alpha;
        double gauss;  // exp(-q/2)
        double trans;  // transmittance in front of this primitive
        double dx, dy;
    };
    std::vector<Hit> hits;
    hits.reserve(256);

    for (int y = 0; y < h; ++y) {
        const auto& bin = bins[y];
        for (int x = 0; x < w; ++x) {
            const Vec3 dl = loss_grad.pixel(x, y);
            if (dl.r == 0.0 && dl.g == 0.0 && dl.b == 0.0) continue;

            hits.clear();
            double t = 1.0;
            for (int idx : bin) {
                const ProjectedGaussian& p = tape.projected[idx];
                if (x < p.x0 || x > p.x1) continue;
                if (t <= kMinTransmittance) break;
                const double dx = (x + 0.5) - p.mu.x;
                const double dy = (y + 0.5) - p.mu.y;
                const double qf = p.q.xx * dx * dx + 2.0 * p.q.xy * dx * dy + p.q.yy * dy * dy;
                if (tape.opts.cull && qf > q_max) continue;
                const double gauss = exp_neg(0.5 * qf);
                const double alpha = tape.gaussians[idx].opacity * gauss;
                hits.push_back({idx, alpha, gauss, t, dx, dy});
                t *= (1.0 - alpha);
            }

            // Suffix pass: rec is the color composited behind the current
            // primitive as if compositing restarted there.
            Vec3 rec{};
            for (size_t k = hits.size(); k-- > 0;) {
                const Hit& hit = hits[k];
                const GaussianAttributes& g = tape.gaussians[hit.idx];
                const ProjectedGaussian& p = tape.projected[hit.idx];
                GaussianGrad& gg = grads[hit.idx];

                const double wgt = hit.alpha * hit.trans;
                gg.d_color += dl * wgt;

                const double d_alpha = hit.trans * (dl.r * (g.color.r - rec.r) +
                                                    dl.g * (g.color.g - rec.g) +
                                                    dl.b * (g.color.b - rec.b));
                rec = g.color * hit.alpha + rec * (1.0 - hit.alpha);

                gg.d_opacity += d_alpha * hit.gauss;
                const double d_gauss = d_alpha * g.opacity;
                const double d_q = -0.5 * d_gauss * hit.gauss;  // dL/d qform

                // qform = d^T Q d with d = pixel - mu.
                const double qdx = p.q.xx * hit.dx + p.q.xy * hit.dy;
                const double qdy = p.q.xy * hit.dx + p.q.yy * hit.dy;
                gg.d_screen.x += -2.0 * d_q * qdx;
                gg.d_screen.y += -2.0 * d_q * qdy;

                // dL/dQ as a full symmetric matrix (both off-diagonal slots).
                gg.d_cov.xx += d_q * hit.dx * hit.dx;  // reused as dL/dQ accumulator
                gg.d_cov.xy += d_q * hit.dx * hit.dy;
                gg.d_cov.yy += d_q * hit.dy * hit.dy;
            }
        }
    }

    // Convert accumulated image-space gradients to scene-space parameters.
    const Mat2& a = tape.view.linear;
    for (size_t i = 0; i < grads.size(); ++i) {
        GaussianGrad& gg = grads[i];
        const ProjectedGaussian& p = tape.projected[i];

        // dL/d cov_img = -Q (dL/dQ) Q, all matrices symmetric.
        const Mat2 q_full{p.q.xx, p.q.xy, p.q.xy, p.q.yy};
        const Mat2 dq_full{gg.d_cov.xx, gg.d_cov.xy, gg.d_cov.xy, gg.d_cov.yy};
        const Mat2 dcov_img = (q_full * dq_full * q_full) * -1.0;

        // cov_img = A cov A^T  =>  dL/d cov_full = A^T (dL/d cov_img) A.
        const Mat2 dcov_scene = a.transpose() * dcov_img * a;
        gg.d_cov = Sym2{dcov_scene.a, dcov_scene.b + dcov_scene.c, dcov_scene.d};

        // mu_img = A center + b  =>  dL/d center = A^T dL/d mu_img.
        gg.d_center = a.transpose() * gg.d_screen;
    }
    return grads;
}

}  // namespace morel

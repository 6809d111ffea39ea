#include "morel/metrics.hpp"

#include <fstream>
#include <limits>

#include "morel/ssim.hpp"

#include "json.hpp"

namespace morel {

double psnr(const Image& a, const Image& b) {
    if (!a.same_shape(b)) throw InvalidInput("psnr: image shape mismatch");
    double mse = 0.0;
    const double* pa = a.data();
    const double* pb = b.data();
    for (size_t i = 0; i < a.size(); ++i) {
        const double d = pa[i] - pb[i];
        mse += d * d;
    }
    mse /= static_cast<double>(a.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

double ssim(const Image& a, const Image& b) {
    if (!a.same_shape(b)) throw InvalidInput("ssim: image shape mismatch");
    return ssim_forward(a.luminance(), b.luminance(), a.width(), a.height()).mean;
}

double tof(const FrameSequence& rendered, const FrameSequence& ground_truth,
           const TofOptions& opts) {
    if (rendered.size() != ground_truth.size() || rendered.size() < 2)
        throw InvalidInput("tof: sequences must have equal length >= 2");

    double total = 0.0;
    const size_t pairs = rendered.size() - 1;
    for (size_t t = 0; t < pairs; ++t) {
        const FlowField fg = flow_lk(ground_truth.image(t), ground_truth.image(t + 1), opts.flow);
        const FlowField fr = flow_lk(rendered.image(t), rendered.image(t + 1), opts.flow);
        double frame_sum = 0.0;
        for (size_t i = 0; i < fg.u.size(); ++i)
            frame_sum += std::abs(fg.u[i] - fr.u[i]) + std::abs(fg.v[i] - fr.v[i]);
        total += frame_sum / static_cast<double>(fg.u.size());
    }
    return total / static_cast<double>(pairs);
}

double ofps(const FrameSequence& seq, int fps, double mag_threshold, const FlowOptions& opts) {
    if (seq.size() < 2) throw InvalidInput("ofps: need at least 2 frames");
    if (fps < 1) throw InvalidInput("ofps: fps must be >= 1");

    const size_t pairs = seq.size() - 1;
    const size_t windows = (pairs + fps - 1) / fps;
    double window_total = 0.0;
    for (size_t wdx = 0; wdx < windows; ++wdx) {
        double mag_sum = 0.0;
        size_t mag_count = 0;
        const size_t lo = wdx * fps;
        const size_t hi = std::min(pairs, lo + fps);
        for (size_t t = lo; t < hi; ++t) {
            const FlowField f = flow_lk(seq.image(t), seq.image(t + 1), opts);
            for (size_t i = 0; i < f.u.size(); ++i) {
                const double m = f.magnitude(i);
                if (m > mag_threshold) {
                    mag_sum += m;
                    mag_count += 1;
                }
            }
        }
        // Empty windows (fully static content) contribute zero.
        window_total += mag_count > 0 ? mag_sum / static_cast<double>(mag_count) : 0.0;
    }
    return window_total / static_cast<double>(windows);
}

Image temporal_profile(const FrameSequence& seq, int row) {
    if (seq.size() == 0) throw InvalidInput("temporal_profile: empty sequence");
    const int w = seq.frames[0].width;
    const int h = seq.frames[0].height;
    if (row < 0 || row >= h) throw InvalidInput("temporal_profile: row out of range");

    Image profile(w, static_cast<int>(seq.size()));
    for (size_t t = 0; t < seq.size(); ++t) {
        const Frame8& frame = seq.frames[t];
        for (int x = 0; x < w; ++x) {
            const size_t base = (static_cast<size_t>(row) * w + x) * 3;
            profile.set_pixel(x, static_cast<int>(t),
                              {frame.data[base] / 255.0, frame.data[base + 1] / 255.0,
                               frame.data[base + 2] / 255.0});
        }
    }
    return profile;
}

EvalSummary evaluate_sequences(const FrameSequence& rendered, const FrameSequence& ground_truth,
                               const std::filesystem::path& csv_path) {
    if (rendered.size() != ground_truth.size())
        throw InvalidInput("evaluate: sequence length mismatch");

    EvalSummary summary;
    std::ofstream csv(csv_path);
    if (!csv) throw Error("cannot write " + csv_path.string());
    csv << "frame,psnr,ssim\n";

    double psnr_sum = 0.0, ssim_sum = 0.0;
    for (size_t t = 0; t < rendered.size(); ++t) {
        const Image r = rendered.image(t);
        const Image g = ground_truth.image(t);
        const double p = psnr(r, g);
        const double s = ssim(r, g);
        summary.frame_psnr.push_back(p);
        summary.frame_ssim.push_back(s);
        psnr_sum += p;
        ssim_sum += s;
        char line[96];
        if (std::isinf(p))
            std::snprintf(line, sizeof(line), "%zu,inf,%.6f\n", t, s);
        else
            std::snprintf(line, sizeof(line), "%zu,%.6f,%.6f\n", t, p, s);
        csv << line;
    }
    summary.mean_psnr = psnr_sum / static_cast<double>(rendered.size());
    summary.mean_ssim = ssim_sum / static_cast<double>(rendered.size());
    summary.tof_value = tof(rendered, ground_truth);
    summary.ofps_rendered = ofps(rendered, rendered.fps);
    summary.ofps_ground_truth = ofps(ground_truth, ground_truth.fps);

    const auto dir = csv_path.parent_path();
    write_ppm(dir / "temporal_profile.ppm",
              temporal_profile(rendered, rendered.frames[0].height / 2));

    nlohmann::ordered_json j;
    j["frames"] = rendered.size();
    j["mean_psnr"] = summary.mean_psnr;
    j["mean_ssim"] = summary.mean_ssim;
    j["tof"] = summary.tof_value;
    j["ofps_rendered"] = summary.ofps_rendered;
    j["ofps_ground_truth"] = summary.ofps_ground_truth;
    std::ofstream js(dir / "summary.json");
    js << j.dump(2) << "\n";

    return summary;
}

}  // namespace morel

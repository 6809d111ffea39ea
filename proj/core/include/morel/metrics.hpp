#pragma once

#include <filesystem>
#include <optional>

#include "morel/dataset.hpp"
#include "morel/flow.hpp"
#include "morel/image.hpp"

namespace morel {

// 10 log10(1 / MSE) on the [0,1] scale; identical images report +infinity.
double psnr(const Image& a, const Image& b);

// Single-scale SSIM on RGB-mean luminance (11x11 Gaussian window, sigma 1.5).
double ssim(const Image& a, const Image& b);

struct TofOptions {
    FlowOptions flow;
};

// Temporal-consistency metric: mean over consecutive-frame pairs of the mean
// per-pixel l1 difference between the flow of the ground truth pair and the
// flow of the rendered pair.
double tof(const FrameSequence& rendered, const FrameSequence& ground_truth,
           const TofOptions& opts = {});

// Average optical-flow magnitude per second. Flows are computed per
// consecutive pair; within each window of `fps` pairs the l2 magnitudes of
// pixels above `mag_threshold` are averaged, then window means are averaged.
// Windows with no above-threshold pixel contribute zero.
double ofps(const FrameSequence& seq, int fps, double mag_threshold = 0.5,
            const FlowOptions& opts = {});

// Stacks scanline `row` of every frame into a (T x W) image; flicker shows
// up as horizontal discontinuities.
Image temporal_profile(const FrameSequence& seq, int row);

struct EvalSummary {
    double mean_psnr = 0.0;
    double mean_ssim = 0.0;
    double tof_value = 0.0;
    double ofps_rendered = 0.0;
    double ofps_ground_truth = 0.0;
    std::vector<double> frame_psnr;
    std::vector<double> frame_ssim;
};

// Writes metrics.csv (frame, psnr, ssim), a summary JSON text block and the
// temporal-profile image next to the csv.
EvalSummary evaluate_sequences(const FrameSequence& rendered, const FrameSequence& ground_truth,
                               const std::filesystem::path& csv_path);

}  // namespace morel

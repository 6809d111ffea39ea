#pragma once

#include <filesystem>
#include <vector>

#include "morel/image.hpp"
#include "morel/view.hpp"

namespace morel {

// A ground-truth video: per-frame images for one camera.
struct FrameSequence {
    int fps = 30;
    std::vector<Frame8> frames;

    size_t size() const { return frames.size(); }
    Image image(size_t t) const { return frames[t].to_image(); }
};

// Multi-view training corpus as written by the generator:
//   views/<m>/frame_<t:05>.ppm, spec.cfg, oracle.morl
struct Dataset {
    std::filesystem::path dir;
    int frames = 0;
    int fps = 30;
    int width = 0, height = 0;
    int num_views = 0;
    Vec2 bbox_min, bbox_max;
    uint64_t seed = 0;
    std::vector<ViewTransform> views;
    std::vector<FrameSequence> sequences;  // one per view

    Image ground_truth(int view, int t) const { return sequences[view].frames[t].to_image(); }

    static Dataset load(const std::filesystem::path& dir, bool load_frames = true);
};

std::filesystem::path dataset_frame_path(const std::filesystem::path& dir, int view, int t);

}  // namespace morel

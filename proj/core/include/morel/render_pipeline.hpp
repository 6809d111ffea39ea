#pragma once

#include <filesystem>
#include <optional>

#include "morel/metrics.hpp"
#include "morel/model_forward.hpp"
#include "morel/store.hpp"
#include "morel/training.hpp"

namespace morel {

// n = floor(t / gop), paired with min(n+1, N-1). The boundary frame
// t = (n+1)*gop belongs to the next chunk.
std::pair<int, int> required_anchors(int t, int gop, int num_keyframes, int total_frames);

struct RenderSessionOptions {
    bool blending = true;  // false = chunk-isolated baseline (hard switching)
    BlendConfig blend;
    RenderOptions render;
};

// Random-access frame rendering with the load/unload discipline: the current
// bundle pair stays resident for its whole chunk and is dropped at the first
// frame of the next chunk.
class RenderSession {
public:
    RenderSession(AnchorStore& store, TrainPlan plan, RenderSessionOptions opts = {});
    ~RenderSession();

    Image render_frame(int t, const ViewTransform& view);

    // Renders [t_lo, t_hi] into out_dir as frame_<t:05>.ppm plus a manifest
    // with one line per frame: index, file, psnr (or "-"), resident keys.
    struct ManifestEntry {
        int t = 0;
        std::string file;
        double psnr = 0.0;
        bool has_psnr = false;
        std::vector<std::string> resident;
    };
    std::vector<ManifestEntry> render_sequence(int t_lo, int t_hi, const ViewTransform& view,
                                               const std::filesystem::path& out_dir,
                                               const Dataset* gt = nullptr, int gt_view = 0);

    void release();  // unload everything currently resident

    const AnchorStore& store() const { return store_; }

private:
    void ensure_loaded(int t);

    AnchorStore& store_;
    TrainPlan plan_;
    RenderSessionOptions opts_;
    std::vector<int> current_;  // resident bundle indices (1 or 2 entries)
    std::map<int, Bundle> bundles_;
};

void write_manifest(const std::filesystem::path& path,
                    const std::vector<RenderSession::ManifestEntry>& entries);

}  // namespace morel

#include "morel/render_pipeline.hpp"

#include <fstream>

namespace morel {

std::pair<int, int> required_anchors(int t, int gop, int num_keyframes, int total_frames) {
    if (t < 0 || t >= total_frames) throw InvalidInput("frame index out of range");
    const int n = std::min(t / gop, num_keyframes - 1);
    return {n, std::min(n + 1, num_keyframes - 1)};
}

RenderSession::RenderSession(AnchorStore& store, TrainPlan plan, RenderSessionOptions opts)
    : store_(store), plan_(plan), opts_(opts) {}

RenderSession::~RenderSession() {
    try {
        release();
    } catch (...) {
    }
}

void RenderSession::release() {
    for (int n : current_) store_.unload(BundleKey{false, n});
    current_.clear();
    bundles_.clear();
}

void RenderSession::ensure_loaded(int t) {
    auto [n, n1] = required_anchors(t, plan_.gop, plan_.num_keyframes(), plan_.total_frames);
    std::vector<int> required{n};
    if (opts_.blending && n1 != n) required.push_back(n1);

    if (required == current_) return;

    // Drop the outgoing pair, then load the incoming one in full.
    release();
    for (int idx : required) {
        bundles_[idx] = store_.load(BundleKey{false, idx});
        if (!bundles_[idx].field)
            throw PreconditionViolation("bundle kfa_" + std::to_string(idx) +
                                        " has no deformation field (PWD not run?)");
    }
    current_ = required;
}

Image RenderSession::render_frame(int t, const ViewTransform& view) {
    store_.set_clock(t);
    ensure_loaded(t);

    const int n = current_[0];
    Bundle& a = bundles_.at(n);
    const double tau_a = static_cast<double>(t - a.space.key_frame) / plan_.gop;

    std::vector<SpaceInput> inputs;
    if (opts_.blending && current_.size() == 2) {
        Bundle& b = bundles_.at(current_[1]);
        const double tau_b = static_cast<double>(t - b.space.key_frame) / plan_.gop;
        inputs.push_back({&a.space, &*a.field, tau_a, BlendDirection::Forward, 1.0, "a."});
        inputs.push_back({&b.space, &*b.field, tau_b, BlendDirection::Backward, 1.0, "b."});
    } else {
        // Single-space path: the last partial chunk, or the chunk-isolated
        // baseline. No temporal-opacity attenuation without a partner.
        inputs.push_back({&a.space, &*a.field, tau_a, BlendDirection::None, 1.0, "a."});
    }

    FrameForward fwd = forward_frame(inputs, view, opts_.blend, opts_.render);
    return std::move(fwd.render.image);
}

std::vector<RenderSession::ManifestEntry> RenderSession::render_sequence(
    int t_lo, int t_hi, const ViewTransform& view, const std::filesystem::path& out_dir,
    const Dataset* gt, int gt_view) {
    std::filesystem::create_directories(out_dir);
    std::vector<ManifestEntry> entries;
    for (int t = t_lo; t <= t_hi; ++t) {
        const Image img = render_frame(t, view);
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%05d.ppm", t);
        write_ppm(out_dir / name, img);

        ManifestEntry e;
        e.t = t;
        e.file = name;
        if (gt) {
            e.psnr = psnr(img, gt->ground_truth(gt_view, t));
            e.has_psnr = true;
        }
        e.resident = store_.residency_report().resident;
        entries.push_back(std::move(e));
    }
    write_manifest(out_dir / "manifest.txt", entries);
    return entries;
}

void write_manifest(const std::filesystem::path& path,
                    const std::vector<RenderSession::ManifestEntry>& entries) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    for (const auto& e : entries) {
        out << e.t << " " << e.file << " ";
        if (e.has_psnr) {
            char buf[32];
            if (std::isinf(e.psnr))
                std::snprintf(buf, sizeof(buf), "inf");
            else
                std::snprintf(buf, sizeof(buf), "%.4f", e.psnr);
            out << buf;
        } else {
            out << "-";
        }
        out << " [";
        for (size_t i = 0; i < e.resident.size(); ++i) {
            if (i) out << ",";
            out << e.resident[i];
        }
        out << "]\n";
    }
}

}  // namespace morel

// Command-line front end: gen / train / render / eval / inspect.
//
// Exit codes: 0 success, 2 malformed config (offending key printed),
// 3 missing inputs or out-of-range arguments, 1 anything else.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "morel/config.hpp"
#include "morel/dataset.hpp"
#include "morel/metrics.hpp"
#include "morel/render_pipeline.hpp"
#include "morel/scenegen.hpp"
#include "morel/store.hpp"
#include "morel/training.hpp"

namespace fs = std::filesystem;
using namespace morel;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitMissing = 3;

int resolve_threads(int flag_value) {
    if (flag_value > 0) return flag_value;
    if (const char* env = std::getenv("MOREL_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    return 0;  // keep the config default
}

// "a..b" or a single frame index.
bool parse_range(const std::string& text, int& lo, int& hi) {
    const size_t dots = text.find("..");
    try {
        if (dots == std::string::npos) {
            lo = hi = std::stoi(text);
        } else {
            lo = std::stoi(text.substr(0, dots));
            hi = std::stoi(text.substr(dots + 2));
        }
        return true;
    } catch (const std::exception&) {
        return false;
    }
}

int cmd_gen(const std::string& spec_path, const std::string& out_dir, int64_t seed) {
    SceneSpec spec = spec_path.empty() ? acceptance_scene() : parse_scene_spec(spec_path);
    if (seed >= 0) spec.seed = static_cast<uint64_t>(seed);
    generate(spec, out_dir);
    {
        std::ofstream out(fs::path(out_dir) / "scene.cfg");
        out << format_scene_spec(spec);
    }
    std::cout << "dataset written to " << out_dir << " (" << spec.frames << " frames, "
              << spec.num_views << " views)\n";
    return 0;
}

int cmd_train(const std::string& data_dir, const std::string& out_dir,
              const std::string& config_path, int gop, int64_t seed, int threads) {
    Config config;
    if (!config_path.empty()) config.load_file(config_path);
    if (gop > 0) config.set("train.gop", std::to_string(gop));
    if (seed >= 0) config.set("train.seed", std::to_string(seed));
    if (const int t = resolve_threads(threads); t > 0)
        config.set("render.threads", std::to_string(t));

    const Dataset data = Dataset::load(data_dir);
    AnchorStore store(out_dir);

    // Make the store self-contained: render and inspect read views from here.
    fs::copy_file(fs::path(data_dir) / "spec.cfg", fs::path(out_dir) / "dataset.cfg",
                  fs::copy_options::overwrite_existing);
    {
        std::ofstream out(fs::path(out_dir) / "config.cfg");
        out << config.format();
    }

    TrainerConfig cfg = trainer_config_from(config, data.frames);
    Trainer trainer(data, store, cfg);
    trainer.run();

    const auto report = store.residency_report();
    std::cout << "training complete: " << store.list_records().size()
              << " bundles, peak key residency " << report.peak_key << "\n";
    return 0;
}

// The store carries a copy of the dataset geometry (dataset.cfg).
Dataset store_metadata(const std::string& store_dir) {
    const fs::path src = fs::path(store_dir) / "dataset.cfg";
    if (!fs::exists(src)) throw NotFound("store has no dataset.cfg: " + store_dir);
    const fs::path tmp = fs::path(store_dir) / ".meta";
    fs::create_directories(tmp);
    fs::copy_file(src, tmp / "spec.cfg", fs::copy_options::overwrite_existing);
    return Dataset::load(tmp, /*load_frames=*/false);
}

int cmd_render(const std::string& store_dir, int view_index, const std::string& range,
               const std::string& out_dir, const std::string& data_dir, bool no_blend,
               int threads) {
    const Dataset meta = store_metadata(store_dir);
    if (view_index < 0 || view_index >= meta.num_views) {
        std::cerr << "view " << view_index << " outside [0, " << meta.num_views << ")\n";
        return kExitMissing;
    }
    int t_lo = 0, t_hi = 0;
    if (!parse_range(range, t_lo, t_hi)) {
        std::cerr << "bad --t range: " << range << "\n";
        return kExitMissing;
    }
    if (t_lo < 0 || t_hi >= meta.frames || t_lo > t_hi) {
        std::cerr << "frame range [" << t_lo << ", " << t_hi << "] outside [0, " << meta.frames
                  << ")\n";
        return kExitMissing;
    }

    Config config;
    const fs::path cfg_path = fs::path(store_dir) / "config.cfg";
    if (fs::exists(cfg_path)) config.load_file(cfg_path);
    if (const int t = resolve_threads(threads); t > 0)
        config.set("render.threads", std::to_string(t));

    TrainerConfig tc = trainer_config_from(config, meta.frames);
    AnchorStore store(store_dir);
    RenderSessionOptions opts;
    opts.blending = !no_blend;
    opts.blend = tc.blend;
    opts.render = tc.render_opts;
    RenderSession session(store, tc.plan, opts);

    std::optional<Dataset> gt;
    if (!data_dir.empty()) gt = Dataset::load(data_dir);
    const auto entries = session.render_sequence(t_lo, t_hi, meta.views[view_index], out_dir,
                                                 gt ? &*gt : nullptr, view_index);
    std::cout << "rendered " << entries.size() << " frames to " << out_dir << "\n";
    return 0;
}

int cmd_eval(const std::string& render_dir, const std::string& gt_dir, const std::string& out_csv,
             int view_index) {
    const Dataset gt = Dataset::load(gt_dir);
    if (view_index < 0 || view_index >= gt.num_views) {
        std::cerr << "view " << view_index << " outside [0, " << gt.num_views << ")\n";
        return kExitMissing;
    }

    FrameSequence rendered;
    rendered.fps = gt.fps;
    for (int t = 0;; ++t) {
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%05d.ppm", t);
        const fs::path p = fs::path(render_dir) / name;
        if (!fs::exists(p)) break;
        rendered.frames.push_back(read_ppm(p));
    }
    if (rendered.frames.empty()) {
        std::cerr << "no frames found in " << render_dir << "\n";
        return kExitMissing;
    }
    if (rendered.frames.size() > gt.sequences[view_index].frames.size()) {
        std::cerr << "rendered sequence longer than ground truth\n";
        return kExitMissing;
    }

    FrameSequence truth;
    truth.fps = gt.fps;
    for (size_t t = 0; t < rendered.frames.size(); ++t)
        truth.frames.push_back(gt.sequences[view_index].frames[t]);

    const EvalSummary summary = evaluate_sequences(rendered, truth, out_csv);
    std::cout << "frames " << rendered.frames.size() << "\n";
    std::cout << "mean_psnr " << summary.mean_psnr << "\n";
    std::cout << "mean_ssim " << summary.mean_ssim << "\n";
    std::cout << "tof " << summary.tof_value << "\n";
    std::cout << "ofps_rendered " << summary.ofps_rendered << "\n";
    std::cout << "ofps_ground_truth " << summary.ofps_ground_truth << "\n";
    return 0;
}

int cmd_inspect(const std::string& store_dir) {
    if (!fs::exists(store_dir)) {
        std::cerr << "no store at " << store_dir << "\n";
        return kExitMissing;
    }
    AnchorStore store(store_dir);
    const auto records = store.list_records();
    if (records.empty()) {
        std::cout << "store " << store_dir << " holds no bundles\n";
        return 0;
    }
    for (const auto& rec : records) {
        const Bundle bundle = store.peek(rec.key);
        int per_level[3] = {0, 0, 0};
        for (int32_t level : bundle.space.levels)
            if (level >= 0 && level < 3) per_level[level] += 1;
        char line[256];
        std::snprintf(line, sizeof(line),
                      "%-12s %9llu bytes  checksum %016llx  anchors %6zu  levels %d/%d/%d"
                      "  stage %d ifb_fw %d ifb_bw %d field %d\n",
                      rec.key.file_name().c_str(),
                      static_cast<unsigned long long>(rec.byte_size),
                      static_cast<unsigned long long>(rec.checksum), bundle.space.anchor_count(),
                      per_level[0], per_level[1], per_level[2], bundle.meta.stage,
                      bundle.meta.ifb_fw, bundle.meta.ifb_bw, bundle.field ? 1 : 0);
        std::cout << line;
    }
    const fs::path log_path = fs::path(store_dir) / "train_log.txt";
    if (fs::exists(log_path)) {
        std::cout << "-- training events --\n";
        std::ifstream log(log_path);
        std::string line;
        while (std::getline(log, line))
            if (line.rfind("stage_done", 0) == 0 || line.rfind("densify", 0) == 0)
                std::cout << line << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"anchor-relay dynamic gaussian splatting at desk scale"};
    app.require_subcommand(1);

    std::string spec_path, out_dir, data_dir, config_path, store_dir, range = "0..0";
    std::string render_dir, gt_dir, out_csv = "metrics.csv";
    int gop = 0, view_index = 0, threads = 0;
    int64_t seed = -1;
    bool no_blend = false;

    auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
    gen->add_option("--spec", spec_path, "scene spec file (defaults to the built-in scene)");
    gen->add_option("--out", out_dir, "output dataset directory")->required();
    gen->add_option("--seed", seed, "override the scene seed");

    auto* train = app.add_subcommand("train", "run the four-stage training relay");
    train->add_option("--data", data_dir, "dataset directory")->required();
    train->add_option("--out", store_dir, "anchor store directory")->required();
    train->add_option("--gop", gop, "keyframe spacing in frames");
    train->add_option("--config", config_path, "key = value config file");
    train->add_option("--seed", seed, "master random seed");
    train->add_option("--threads", threads, "render worker cap (or MOREL_THREADS)");

    auto* render_cmd = app.add_subcommand("render", "random-access rendering from a store");
    render_cmd->add_option("--store", store_dir, "anchor store directory")->required();
    render_cmd->add_option("--view", view_index, "view index");
    render_cmd->add_option("--t", range, "frame range a..b or a single frame")->required();
    render_cmd->add_option("--out", out_dir, "output directory")->required();
    render_cmd->add_option("--data", data_dir, "dataset directory (adds PSNR to the manifest)");
    render_cmd->add_flag("--no-blend", no_blend, "chunk-isolated baseline (hard switching)");
    render_cmd->add_option("--threads", threads, "render worker cap (or MOREL_THREADS)");

    auto* eval_cmd = app.add_subcommand("eval", "metrics for a rendered sequence");
    eval_cmd->add_option("--render", render_dir, "rendered frame directory")->required();
    eval_cmd->add_option("--gt", gt_dir, "ground-truth dataset directory")->required();
    eval_cmd->add_option("--out", out_csv, "metrics csv path");
    eval_cmd->add_option("--view", view_index, "ground-truth view index");

    auto* inspect = app.add_subcommand("inspect", "list store records and training events");
    inspect->add_option("--store", store_dir, "anchor store directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen(spec_path, out_dir, seed);
        if (train->parsed())
            return cmd_train(data_dir, store_dir, config_path, gop, seed, threads);
        if (render_cmd->parsed())
            return cmd_render(store_dir, view_index, range, out_dir, data_dir, no_blend, threads);
        if (eval_cmd->parsed()) return cmd_eval(render_dir, gt_dir, out_csv, view_index);
        if (inspect->parsed()) return cmd_inspect(store_dir);
    } catch (const ConfigError& e) {
        std::cerr << "config error (" << e.offending_key << "): " << e.what() << "\n";
        return kExitConfig;
    } catch (const NotFound& e) {
        std::cerr << "missing input: " << e.what() << "\n";
        return kExitMissing;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

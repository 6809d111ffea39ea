#pragma once

#include <filesystem>
#include <vector>

#include "morel/dataset.hpp"
#include "morel/renderer.hpp"

namespace morel {

// Procedurally animated ground truth. Frames are rendered with the project's
// own rasterizer from per-frame oracle Gaussian states, so a trained model
// can in principle reach near-lossless quality and convergence failures are
// attributable to the method rather than the data.

enum class TrajectoryType { Static, Linear, Circular };

struct ActorSpec {
    TrajectoryType type = TrajectoryType::Static;
    Vec2 start;          // Linear / Static
    Vec2 velocity;       // Linear, scene units per frame
    Vec2 orbit_center;   // Circular
    double radius = 0.0;
    double period = 240.0;  // frames per revolution
    double phase = 0.0;
    int appear_t = 0;
    int disappear_t = 1 << 30;  // exclusive
    Vec3 color{0.8, 0.8, 0.8};
    double sigma = 0.35;
    double opacity = 0.9;
    double depth = -0.5;

    Vec2 position_at(int t) const;
    bool present_at(int t) const { return t >= appear_t && t < disappear_t; }
};

struct SceneSpec {
    int static_count = 40;
    double static_sigma_min = 0.15;
    double static_sigma_max = 0.5;
    std::vector<ActorSpec> actors;
    int frames = 240;
    int fps = 30;
    int num_views = 4;
    int width = 128, height = 128;
    Vec2 bbox_min{0.0, 0.0};
    Vec2 bbox_max{10.0, 10.0};
    uint64_t seed = 1234;
};

// The default evaluation scene: 40 static Gaussians plus a circular actor, a
// fast linear actor and one that appears at t=100 and disappears at t=180.
SceneSpec acceptance_scene();

// Scene spec file I/O (flat key = value, actor fields indexed actor.<i>.*).
SceneSpec parse_scene_spec(const std::filesystem::path& path);
std::string format_scene_spec(const SceneSpec& spec);

// The fully-resolved scene: static layer realized from the seed.
struct GeneratedScene {
    SceneSpec spec;
    std::vector<GaussianAttributes> statics;
    std::vector<ViewTransform> views;

    // Oracle Gaussian state at frame t (statics plus present actors).
    std::vector<GaussianAttributes> oracle_state(int t) const;
};

GeneratedScene realize_scene(const SceneSpec& spec);

// Renders and writes the dataset directory; also stores the per-frame oracle
// states (oracle.morl) for debugging and representability checks.
void generate(const SceneSpec& spec, const std::filesystem::path& out_dir);

// Positions sampled around the oracle Gaussian centers at the given frames,
// merged across frames.
std::vector<Vec2> sample_point_cloud(const GeneratedScene& scene, const std::vector<int>& frames_at,
                                     int per_frame, double jitter, uint64_t seed);

// Repeated voxel-grid decimation (voxel grows 1.5x per round) until the
// count drops below max_points.
std::vector<Vec2> voxel_decimate(const std::vector<Vec2>& points, double voxel, int max_points);

// Reads back the per-frame oracle states written by generate().
std::vector<std::vector<GaussianAttributes>> read_oracle_states(
    const std::filesystem::path& dataset_dir);

}  // namespace morel

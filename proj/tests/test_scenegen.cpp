#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fstream>

#include "morel/scenegen.hpp"

using namespace morel;

namespace {

SceneSpec tiny_scene() {
    SceneSpec spec;
    spec.static_count = 6;
    spec.frames = 10;
    spec.fps = 5;
    spec.num_views = 2;
    spec.width = 48;
    spec.height = 48;
    spec.seed = 77;

    ActorSpec mover;
    mover.type = TrajectoryType::Linear;
    mover.start = {2.0, 2.0};
    mover.velocity = {0.3, 0.1};
    mover.color = {1.0, 0.2, 0.2};
    mover.depth = -1.0;
    spec.actors.push_back(mover);
    return spec;
}

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& name) {
        path = std::filesystem::temp_directory_path() / ("morel_gen_" + name);
        std::filesystem::remove_all(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

std::string file_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), {});
}

}  // namespace

TEST_CASE("a scene without actors renders identical frames at every t") {
    SceneSpec spec = tiny_scene();
    spec.actors.clear();
    const GeneratedScene scene = realize_scene(spec);
    const auto s0 = scene.oracle_state(0);
    const Image f0 = render(s0, scene.views[0]);
    const Image f7 = render(scene.oracle_state(7), scene.views[0]);
    CHECK(f0 == f7);
}

TEST_CASE("a linear actor's oracle center follows start + velocity * t") {
    const SceneSpec spec = tiny_scene();
    const GeneratedScene scene = realize_scene(spec);
    for (int t = 0; t < spec.frames; ++t) {
        const auto state = scene.oracle_state(t);
        const GaussianAttributes& actor = state.back();
        CHECK(actor.center.x == doctest::Approx(2.0 + 0.3 * t).epsilon(1e-12));
        CHECK(actor.center.y == doctest::Approx(2.0 + 0.1 * t).epsilon(1e-12));
    }
}

TEST_CASE("appearance events add and remove the actor") {
    SceneSpec spec = tiny_scene();
    spec.actors[0].type = TrajectoryType::Static;
    spec.actors[0].start = {5, 5};
    spec.actors[0].appear_t = 3;
    spec.actors[0].disappear_t = 7;
    const GeneratedScene scene = realize_scene(spec);
    CHECK(scene.oracle_state(2).size() == static_cast<size_t>(spec.static_count));
    CHECK(scene.oracle_state(3).size() == static_cast<size_t>(spec.static_count + 1));
    CHECK(scene.oracle_state(6).size() == static_cast<size_t>(spec.static_count + 1));
    CHECK(scene.oracle_state(7).size() == static_cast<size_t>(spec.static_count));
}

TEST_CASE("trajectories leaving the bbox are rejected") {
    SceneSpec spec = tiny_scene();
    spec.actors[0].velocity = {3.0, 0.0};  // exits after a few frames
    CHECK_THROWS_AS(realize_scene(spec), InvalidInput);
}

TEST_CASE("generation is byte-identical across runs with a fixed seed") {
    const SceneSpec spec = tiny_scene();
    TempDir a("det_a"), b("det_b");
    generate(spec, a.path);
    generate(spec, b.path);
    for (int m = 0; m < spec.num_views; ++m)
        for (int t = 0; t < spec.frames; ++t)
            CHECK(file_bytes(dataset_frame_path(a.path, m, t)) ==
                  file_bytes(dataset_frame_path(b.path, m, t)));
    CHECK(file_bytes(a.path / "oracle.morl") == file_bytes(b.path / "oracle.morl"));
    CHECK(file_bytes(a.path / "spec.cfg") == file_bytes(b.path / "spec.cfg"));
}

TEST_CASE("rendering the stored oracle states reproduces the dataset bytes") {
    const SceneSpec spec = tiny_scene();
    TempDir dir("repro");
    generate(spec, dir.path);
    const Dataset data = Dataset::load(dir.path);
    const auto states = read_oracle_states(dir.path);
    REQUIRE(states.size() == static_cast<size_t>(spec.frames));
    for (int m = 0; m < spec.num_views; ++m)
        for (int t = 0; t < spec.frames; ++t) {
            const Frame8 rendered = Frame8::from_image(render(states[t], data.views[m]));
            CHECK(rendered == data.sequences[m].frames[t]);
        }
}

TEST_CASE("point cloud sampling covers a moving actor's distant locations") {
    const SceneSpec spec = tiny_scene();
    const GeneratedScene scene = realize_scene(spec);
    const auto points = sample_point_cloud(scene, {0, 9}, 400, 0.05, 3);
    REQUIRE(points.size() == 800);

    // Nearest-neighbor check against the actor's two endpoints.
    const Vec2 p0 = spec.actors[0].position_at(0);
    const Vec2 p9 = spec.actors[0].position_at(9);
    double d0 = 1e300, d9 = 1e300;
    for (const auto& p : points) {
        d0 = std::min(d0, (p - p0).norm());
        d9 = std::min(d9, (p - p9).norm());
    }
    CHECK(d0 < 0.25);
    CHECK(d9 < 0.25);
}

TEST_CASE("sampling with no frames is an error") {
    const GeneratedScene scene = realize_scene(tiny_scene());
    CHECK_THROWS_AS(sample_point_cloud(scene, {}, 100, 0.05, 3), InvalidInput);
}

TEST_CASE("coincident points decimate to a single point") {
    const std::vector<Vec2> points(100, Vec2{1.234, 5.678});
    const auto out = voxel_decimate(points, 0.01, 60000);
    REQUIRE(out.size() == 1);
    CHECK(out[0].x == doctest::Approx(1.234));
}

TEST_CASE("decimation terminates under the cap and keeps points separated") {
    Rng rng(1, 1);
    std::vector<Vec2> points;
    for (int i = 0; i < 100000; ++i) points.push_back({rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)});
    const auto out = voxel_decimate(points, 0.01, 500);
    CHECK(out.size() < 500);

    // The final voxel v satisfies: any two kept points lie in distinct cells,
    // so brute-force min pairwise distance is positive.
    double min_dist = 1e300;
    for (size_t i = 0; i < out.size(); ++i)
        for (size_t j = i + 1; j < out.size(); ++j)
            min_dist = std::min(min_dist, (out[i] - out[j]).norm());
    CHECK(min_dist > 0.0);
}

TEST_CASE("decimation rejects a non-positive cap") {
    CHECK_THROWS_AS(voxel_decimate({{0, 0}}, 0.01, 0), InvalidInput);
}

TEST_CASE("scene spec files roundtrip") {
    const SceneSpec spec = acceptance_scene();
    TempDir dir("specio");
    std::filesystem::create_directories(dir.path);
    {
        std::ofstream out(dir.path / "scene.cfg");
        out << format_scene_spec(spec);
    }
    const SceneSpec parsed = parse_scene_spec(dir.path / "scene.cfg");
    CHECK(parsed.static_count == spec.static_count);
    CHECK(parsed.frames == spec.frames);
    CHECK(parsed.actors.size() == spec.actors.size());
    CHECK(parsed.actors[0].radius == doctest::Approx(spec.actors[0].radius));
    CHECK(parsed.actors[2].appear_t == spec.actors[2].appear_t);
    CHECK(parsed.seed == spec.seed);
}

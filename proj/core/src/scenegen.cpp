#include "morel/scenegen.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "morel/store.hpp"

namespace morel {

namespace {

std::string frame_name(int t) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "frame_%05d.ppm", t);
    return buf;
}

std::map<std::string, std::string> read_flat_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw NotFound("cannot open " + path.string());
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const size_t eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const size_t b = s.find_first_not_of(" \t\r");
            if (b == std::string::npos) return std::string();
            const size_t e = s.find_last_not_of(" \t\r");
            return s.substr(b, e - b + 1);
        };
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

std::vector<double> parse_numbers(const std::string& s) {
    std::istringstream in(s);
    std::vector<double> out;
    double v;
    while (in >> v) out.push_back(v);
    return out;
}

}  // namespace

Vec2 ActorSpec::position_at(int t) const {
    switch (type) {
        case TrajectoryType::Static:
            return start;
        case TrajectoryType::Linear:
            return start + velocity * static_cast<double>(t);
        case TrajectoryType::Circular: {
            const double a = 2.0 * M_PI * (static_cast<double>(t) / period) + phase;
            return {orbit_center.x + radius * std::cos(a), orbit_center.y + radius * std::sin(a)};
        }
    }
    return start;
}

SceneSpec acceptance_scene() {
    SceneSpec spec;
    spec.static_count = 40;
    spec.static_sigma_min = 0.06;  // sub-pixel detail up to smooth blobs
    spec.frames = 240;
    spec.fps = 30;
    spec.num_views = 4;
    spec.width = 128;
    spec.height = 128;
    spec.seed = 1234;

    ActorSpec orbiter;
    orbiter.type = TrajectoryType::Circular;
    orbiter.orbit_center = {5.0, 5.0};
    orbiter.radius = 2.6;
    orbiter.period = 150.0;
    orbiter.color = {0.92, 0.28, 0.22};
    orbiter.sigma = 0.42;
    orbiter.opacity = 0.92;
    orbiter.depth = -0.6;
    spec.actors.push_back(orbiter);

    ActorSpec runner;
    runner.type = TrajectoryType::Linear;
    runner.start = {1.0, 1.2};
    runner.velocity = {0.034, 0.030};
    runner.color = {0.95, 0.82, 0.2};
    runner.sigma = 0.38;
    runner.opacity = 0.9;
    runner.depth = -0.8;
    spec.actors.push_back(runner);

    ActorSpec visitor;
    visitor.type = TrajectoryType::Static;
    visitor.start = {7.2, 2.8};
    visitor.appear_t = 100;
    visitor.disappear_t = 180;
    visitor.color = {0.2, 0.85, 0.9};
    visitor.sigma = 0.45;
    visitor.opacity = 0.92;
    visitor.depth = -1.0;
    spec.actors.push_back(visitor);
    return spec;
}

GeneratedScene realize_scene(const SceneSpec& spec) {
    GeneratedScene scene;
    scene.spec = spec;

    Rng rng(spec.seed, 41);
    const Vec2 span = spec.bbox_max - spec.bbox_min;
    for (int i = 0; i < spec.static_count; ++i) {
        GaussianAttributes g;
        g.center = {spec.bbox_min.x + rng.uniform(0.08, 0.92) * span.x,
                    spec.bbox_min.y + rng.uniform(0.08, 0.92) * span.y};
        const double sigma = rng.uniform(spec.static_sigma_min, spec.static_sigma_max);
        const double aspect = rng.uniform(0.7, 1.4);
        const double theta = rng.uniform(0.0, M_PI);
        const double s1 = sigma * aspect, s2 = sigma / aspect;
        const double ct = std::cos(theta), st = std::sin(theta);
        const double v1 = s1 * s1, v2 = s2 * s2;
        g.cov = Sym2{ct * ct * v1 + st * st * v2, ct * st * (v1 - v2), st * st * v1 + ct * ct * v2};
        g.color = {rng.uniform(0.15, 0.95), rng.uniform(0.15, 0.95), rng.uniform(0.15, 0.95)};
        g.opacity = rng.uniform(0.65, 0.95);
        g.depth_key = rng.uniform(0.0, 1.0);
        scene.statics.push_back(g);
    }

    // Validate actor trajectories against the bbox.
    for (const auto& actor : spec.actors) {
        for (int t = 0; t < spec.frames; ++t) {
            if (!actor.present_at(t)) continue;
            const Vec2 p = actor.position_at(t);
            if (p.x < spec.bbox_min.x || p.x > spec.bbox_max.x || p.y < spec.bbox_min.y ||
                p.y > spec.bbox_max.y)
                throw InvalidInput("actor trajectory leaves the scene bbox at frame " +
                                   std::to_string(t));
        }
    }

    // View 0 maps the bbox exactly onto the image; the rest jitter rotation,
    // scale and translation around the scene center.
    Rng vrng(spec.seed, 43);
    const Vec2 scene_center = (spec.bbox_min + spec.bbox_max) * 0.5;
    const Vec2 image_center{spec.width * 0.5, spec.height * 0.5};
    for (int m = 0; m < spec.num_views; ++m) {
        ViewTransform view;
        view.width = spec.width;
        view.height = spec.height;
        const double base_scale = std::min(spec.width / span.x, spec.height / span.y);
        if (m == 0) {
            view.linear = Mat2{base_scale, 0.0, 0.0, base_scale};
            view.translation = {-spec.bbox_min.x * base_scale, -spec.bbox_min.y * base_scale};
        } else {
            const double angle = vrng.uniform(-0.1, 0.1);
            const double scale = base_scale * vrng.uniform(0.92, 1.02);
            view.linear = Mat2::rotation(angle) * Mat2{scale, 0.0, 0.0, scale};
            const Vec2 shift{vrng.uniform(-3.0, 3.0), vrng.uniform(-3.0, 3.0)};
            view.translation = image_center - view.linear * scene_center + shift;
        }
        view.validate();
        scene.views.push_back(view);
    }
    return scene;
}

std::vector<GaussianAttributes> GeneratedScene::oracle_state(int t) const {
    std::vector<GaussianAttributes> state = statics;
    for (const auto& actor : spec.actors) {
        if (!actor.present_at(t)) continue;
        GaussianAttributes g;
        g.center = actor.position_at(t);
        const double v = actor.sigma * actor.sigma;
        g.cov = Sym2{v, 0.0, v};
        g.color = actor.color;
        g.opacity = actor.opacity;
        g.depth_key = actor.depth;
        state.push_back(g);
    }
    return state;
}

void generate(const SceneSpec& spec, const std::filesystem::path& out_dir) {
    const GeneratedScene scene = realize_scene(spec);
    std::filesystem::create_directories(out_dir);

    std::vector<NamedSection> oracle_sections;
    for (int t = 0; t < spec.frames; ++t) {
        const auto state = scene.oracle_state(t);
        const uint64_t count = state.size();
        NamedSection centers, covs, colors, opacities, depths;
        char prefix[16];
        std::snprintf(prefix, sizeof(prefix), "f%05d.", t);
        centers.name = std::string(prefix) + "center";
        centers.shape = {count, 2};
        covs.name = std::string(prefix) + "cov";
        covs.shape = {count, 3};
        colors.name = std::string(prefix) + "color";
        colors.shape = {count, 3};
        opacities.name = std::string(prefix) + "opacity";
        opacities.shape = {count};
        depths.name = std::string(prefix) + "depth";
        depths.shape = {count};
        for (const auto& g : state) {
            centers.f64.insert(centers.f64.end(), {g.center.x, g.center.y});
            covs.f64.insert(covs.f64.end(), {g.cov.xx, g.cov.xy, g.cov.yy});
            colors.f64.insert(colors.f64.end(), {g.color.r, g.color.g, g.color.b});
            opacities.f64.push_back(g.opacity);
            depths.f64.push_back(g.depth_key);
        }
        for (auto* s : {&centers, &covs, &colors, &opacities, &depths})
            oracle_sections.push_back(std::move(*s));

        for (int m = 0; m < spec.num_views; ++m) {
            const auto view_dir = out_dir / "views" / std::to_string(m);
            std::filesystem::create_directories(view_dir);
            write_ppm(view_dir / frame_name(t), render(state, scene.views[m]));
        }
    }
    write_section_file(out_dir / "oracle.morl", oracle_sections);

    std::ostringstream cfg;
    cfg << "dataset.frames = " << spec.frames << "\n";
    cfg << "dataset.fps = " << spec.fps << "\n";
    cfg << "dataset.views = " << spec.num_views << "\n";
    cfg << "dataset.width = " << spec.width << "\n";
    cfg << "dataset.height = " << spec.height << "\n";
    char bbox[128];
    std::snprintf(bbox, sizeof(bbox), "dataset.bbox = %.17g %.17g %.17g %.17g", spec.bbox_min.x,
                  spec.bbox_min.y, spec.bbox_max.x, spec.bbox_max.y);
    cfg << bbox << "\n";
    cfg << "dataset.seed = " << spec.seed << "\n";
    for (int m = 0; m < spec.num_views; ++m) {
        const ViewTransform& v = scene.views[m];
        char line[256];
        std::snprintf(line, sizeof(line), "view.%d.linear = %.17g %.17g %.17g %.17g", m, v.linear.a,
                      v.linear.b, v.linear.c, v.linear.d);
        cfg << line << "\n";
        std::snprintf(line, sizeof(line), "view.%d.translation = %.17g %.17g", m, v.translation.x,
                      v.translation.y);
        cfg << line << "\n";
    }
    std::ofstream out(out_dir / "spec.cfg");
    out << cfg.str();
}

std::vector<Vec2> sample_point_cloud(const GeneratedScene& scene, const std::vector<int>& frames_at,
                                     int per_frame, double jitter, uint64_t seed) {
    if (frames_at.empty()) throw InvalidInput("sample_point_cloud: no frames given");
    Rng rng(seed, 47);
    std::vector<Vec2> points;
    points.reserve(frames_at.size() * per_frame);
    for (int t : frames_at) {
        if (t < 0 || t >= scene.spec.frames)
            throw InvalidInput("sample_point_cloud: frame out of range");
        const auto state = scene.oracle_state(t);
        for (int i = 0; i < per_frame; ++i) {
            const auto& g = state[rng.uniform_index(static_cast<uint32_t>(state.size()))];
            points.push_back(
                {g.center.x + rng.normal(0.0, jitter), g.center.y + rng.normal(0.0, jitter)});
        }
    }
    return points;
}

std::vector<Vec2> voxel_decimate(const std::vector<Vec2>& points, double voxel, int max_points) {
    if (max_points < 1) throw InvalidInput("voxel_decimate: max_points must be >= 1");
    if (!(voxel > 0.0)) throw InvalidInput("voxel_decimate: voxel must be > 0");

    std::vector<Vec2> current = points;
    double v = voxel;
    for (;;) {
        std::map<std::pair<int64_t, int64_t>, std::pair<Vec2, int>> cells;
        for (const Vec2& p : current) {
            auto& e = cells[{static_cast<int64_t>(std::floor(p.y / v)),
                             static_cast<int64_t>(std::floor(p.x / v))}];
            e.first += p;
            e.second += 1;
        }
        std::vector<Vec2> reduced;
        reduced.reserve(cells.size());
        for (const auto& [cell, acc] : cells) reduced.push_back(acc.first * (1.0 / acc.second));
        if (static_cast<int>(reduced.size()) < max_points) return reduced;
        current = std::move(reduced);
        v *= 1.5;
    }
}

std::vector<std::vector<GaussianAttributes>> read_oracle_states(
    const std::filesystem::path& dataset_dir) {
    const auto sections = read_section_file(dataset_dir / "oracle.morl");
    std::map<std::string, const NamedSection*> map;
    for (const auto& s : sections) map[s.name] = &s;

    std::vector<std::vector<GaussianAttributes>> states;
    for (int t = 0;; ++t) {
        char prefix[16];
        std::snprintf(prefix, sizeof(prefix), "f%05d.", t);
        auto it = map.find(std::string(prefix) + "center");
        if (it == map.end()) break;
        const auto& centers = *it->second;
        const auto& covs = *map.at(std::string(prefix) + "cov");
        const auto& colors = *map.at(std::string(prefix) + "color");
        const auto& opacities = *map.at(std::string(prefix) + "opacity");
        const auto& depths = *map.at(std::string(prefix) + "depth");
        const size_t count = centers.shape[0];
        std::vector<GaussianAttributes> state(count);
        for (size_t i = 0; i < count; ++i) {
            state[i].center = {centers.f64[2 * i], centers.f64[2 * i + 1]};
            state[i].cov = {covs.f64[3 * i], covs.f64[3 * i + 1], covs.f64[3 * i + 2]};
            state[i].color = {colors.f64[3 * i], colors.f64[3 * i + 1], colors.f64[3 * i + 2]};
            state[i].opacity = opacities.f64[i];
            state[i].depth_key = depths.f64[i];
        }
        states.push_back(std::move(state));
    }
    return states;
}

SceneSpec parse_scene_spec(const std::filesystem::path& path) {
    const auto kv = read_flat_file(path);
    SceneSpec spec = acceptance_scene();
    spec.actors.clear();

    auto get = [&kv](const std::string& key, const std::string& fallback) {
        auto it = kv.find(key);
        return it == kv.end() ? fallback : it->second;
    };
    spec.static_count = std::stoi(get("scene.static_count", "40"));
    spec.static_sigma_min = std::stod(get("scene.static_sigma_min", "0.15"));
    spec.static_sigma_max = std::stod(get("scene.static_sigma_max", "0.5"));
    spec.frames = std::stoi(get("scene.frames", "240"));
    spec.fps = std::stoi(get("scene.fps", "30"));
    spec.num_views = std::stoi(get("scene.views", "4"));
    spec.width = std::stoi(get("scene.width", "128"));
    spec.height = std::stoi(get("scene.height", "128"));
    spec.seed = std::stoull(get("scene.seed", "1234"));
    const auto bbox = parse_numbers(get("scene.bbox", "0 0 10 10"));
    if (bbox.size() == 4) {
        spec.bbox_min = {bbox[0], bbox[1]};
        spec.bbox_max = {bbox[2], bbox[3]};
    }

    const int actor_count = std::stoi(get("scene.actor_count", "0"));
    for (int i = 0; i < actor_count; ++i) {
        const std::string p = "actor." + std::to_string(i) + ".";
        ActorSpec a;
        const std::string type = get(p + "type", "static");
        a.type = type == "linear"     ? TrajectoryType::Linear
                 : type == "circular" ? TrajectoryType::Circular
                                      : TrajectoryType::Static;
        auto vec2 = [&](const std::string& key, Vec2 fallback) {
            const auto nums = parse_numbers(get(key, ""));
            return nums.size() == 2 ? Vec2{nums[0], nums[1]} : fallback;
        };
        auto vec3 = [&](const std::string& key, Vec3 fallback) {
            const auto nums = parse_numbers(get(key, ""));
            return nums.size() == 3 ? Vec3{nums[0], nums[1], nums[2]} : fallback;
        };
        a.start = vec2(p + "start", {5, 5});
        a.velocity = vec2(p + "velocity", {0, 0});
        a.orbit_center = vec2(p + "center", {5, 5});
        a.radius = std::stod(get(p + "radius", "2"));
        a.period = std::stod(get(p + "period", "240"));
        a.phase = std::stod(get(p + "phase", "0"));
        a.appear_t = std::stoi(get(p + "appear", "0"));
        a.disappear_t = std::stoi(get(p + "disappear", std::to_string(1 << 30)));
        a.color = vec3(p + "color", {0.8, 0.8, 0.8});
        a.sigma = std::stod(get(p + "sigma", "0.35"));
        a.opacity = std::stod(get(p + "opacity", "0.9"));
        a.depth = std::stod(get(p + "depth", "-0.5"));
        spec.actors.push_back(a);
    }
    return spec;
}

std::string format_scene_spec(const SceneSpec& spec) {
    std::ostringstream out;
    out << "scene.static_count = " << spec.static_count << "\n";
    out << "scene.static_sigma_min = " << spec.static_sigma_min << "\n";
    out << "scene.static_sigma_max = " << spec.static_sigma_max << "\n";
    out << "scene.frames = " << spec.frames << "\n";
    out << "scene.fps = " << spec.fps << "\n";
    out << "scene.views = " << spec.num_views << "\n";
    out << "scene.width = " << spec.width << "\n";
    out << "scene.height = " << spec.height << "\n";
    out << "scene.seed = " << spec.seed << "\n";
    out << "scene.bbox = " << spec.bbox_min.x << " " << spec.bbox_min.y << " " << spec.bbox_max.x
        << " " << spec.bbox_max.y << "\n";
    out << "scene.actor_count = " << spec.actors.size() << "\n";
    for (size_t i = 0; i < spec.actors.size(); ++i) {
        const ActorSpec& a = spec.actors[i];
        const std::string p = "actor." + std::to_string(i) + ".";
        out << p << "type = "
            << (a.type == TrajectoryType::Linear     ? "linear"
                : a.type == TrajectoryType::Circular ? "circular"
                                                     : "static")
            << "\n";
        out << p << "start = " << a.start.x << " " << a.start.y << "\n";
        out << p << "velocity = " << a.velocity.x << " " << a.velocity.y << "\n";
        out << p << "center = " << a.orbit_center.x << " " << a.orbit_center.y << "\n";
        out << p << "radius = " << a.radius << "\n";
        out << p << "period = " << a.period << "\n";
        out << p << "phase = " << a.phase << "\n";
        out << p << "appear = " << a.appear_t << "\n";
        out << p << "disappear = " << a.disappear_t << "\n";
        out << p << "color = " << a.color.r << " " << a.color.g << " " << a.color.b << "\n";
        out << p << "sigma = " << a.sigma << "\n";
        out << p << "opacity = " << a.opacity << "\n";
        out << p << "depth = " << a.depth << "\n";
    }
    return out.str();
}

}  // namespace morel

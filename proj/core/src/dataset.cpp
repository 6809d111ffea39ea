#include "morel/dataset.hpp"

#include <fstream>
#include <map>
#include <sstream>

namespace morel {

std::filesystem::path dataset_frame_path(const std::filesystem::path& dir, int view, int t) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "frame_%05d.ppm", t);
    return dir / "views" / std::to_string(view) / buf;
}

Dataset Dataset::load(const std::filesystem::path& dir, bool load_frames) {
    const auto cfg_path = dir / "spec.cfg";
    std::ifstream in(cfg_path);
    if (!in) throw NotFound("dataset spec not found: " + cfg_path.string());

    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
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

    auto require = [&kv, &cfg_path](const std::string& key) {
        auto it = kv.find(key);
        if (it == kv.end()) throw CorruptRecord("missing " + key + " in " + cfg_path.string());
        return it->second;
    };
    auto numbers = [](const std::string& s) {
        std::istringstream ss(s);
        std::vector<double> out;
        double v;
        while (ss >> v) out.push_back(v);
        return out;
    };

    Dataset ds;
    ds.dir = dir;
    ds.frames = std::stoi(require("dataset.frames"));
    ds.fps = std::stoi(require("dataset.fps"));
    ds.num_views = std::stoi(require("dataset.views"));
    ds.width = std::stoi(require("dataset.width"));
    ds.height = std::stoi(require("dataset.height"));
    ds.seed = std::stoull(require("dataset.seed"));
    const auto bbox = numbers(require("dataset.bbox"));
    if (bbox.size() != 4) throw CorruptRecord("bad dataset.bbox in " + cfg_path.string());
    ds.bbox_min = {bbox[0], bbox[1]};
    ds.bbox_max = {bbox[2], bbox[3]};

    for (int m = 0; m < ds.num_views; ++m) {
        const auto lin = numbers(require("view." + std::to_string(m) + ".linear"));
        const auto tr = numbers(require("view." + std::to_string(m) + ".translation"));
        if (lin.size() != 4 || tr.size() != 2)
            throw CorruptRecord("bad view " + std::to_string(m) + " in " + cfg_path.string());
        ViewTransform view;
        view.linear = Mat2{lin[0], lin[1], lin[2], lin[3]};
        view.translation = {tr[0], tr[1]};
        view.width = ds.width;
        view.height = ds.height;
        view.validate();
        ds.views.push_back(view);
    }

    if (load_frames) {
        ds.sequences.resize(ds.num_views);
        for (int m = 0; m < ds.num_views; ++m) {
            ds.sequences[m].fps = ds.fps;
            ds.sequences[m].frames.reserve(ds.frames);
            for (int t = 0; t < ds.frames; ++t)
                ds.sequences[m].frames.push_back(read_ppm(dataset_frame_path(dir, m, t)));
        }
    }
    return ds;
}

}  // namespace morel

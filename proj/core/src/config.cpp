#include "morel/config.hpp"

#include <fstream>
#include <sstream>

namespace morel {

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

const std::map<std::string, std::string>& default_table() {
    static const std::map<std::string, std::string> defaults = {
        // scene model
        {"model.feature_dim", "16"},
        {"model.gaussians_per_anchor", "4"},
        {"model.hidden_dim", "32"},
        {"model.grid_voxel", "0.4"},

        // loss
        {"loss.lambda_ssim", "0.2"},

        // learning rates per parameter group
        {"lr.features", "2.5e-3"},
        {"lr.offsets", "1e-3"},
        {"lr.scalings", "5e-3"},
        {"lr.decoder", "2e-3"},
        {"lr.deform_grids", "1.6e-2"},
        {"lr.deform_decoder", "2e-3"},
        {"lr.blend", "2e-2"},

        // deformation field
        {"deform.grid_res", "16"},
        {"deform.channels", "8"},
        {"deform.hidden", "32"},
        {"deform.lambda_id", "1e-4"},

        // temporal blending
        {"blend.lambda_decay", "2.0"},

        // hierarchical densification
        {"fhd.enabled", "true"},
        {"fhd.leveled", "true"},
        {"fhd.q1", "0.6"},
        {"fhd.q2", "0.9"},
        {"fhd.lambda1", "0.3"},
        {"fhd.lambda2", "0.1"},
        {"fhd.grad_threshold", "1e-4"},
        {"fhd.opacity_threshold", "5e-3"},
        {"fhd.success_min", "50"},
        {"fhd.interval", "50"},
        {"fhd.stop_frac", "0.5"},
        {"fhd.prune_freeze_frac", "0.2"},

        // training schedule
        {"train.gop", "40"},
        {"train.eps", "2"},
        {"train.iters_gca", "3000"},
        {"train.iters_kfa", "1000"},
        {"train.iters_pwd", "2000"},
        {"train.iters_ifb", "2000"},
        {"train.seed", "1"},
        {"train.log_every", "50"},

        // point cloud construction
        {"points.per_frame", "1500"},
        {"points.num_sample_frames", "4"},
        {"points.jitter", "0.08"},
        {"points.decimate_voxel", "0.01"},
        {"points.max_points", "60000"},

        // rendering
        {"render.cull_sigma", "3.0"},
        {"render.threads", "1"},
    };
    return defaults;
}

}  // namespace

Config::Config() : values_(default_table()), defaults_(default_table()) {}

void Config::load_text(const std::string& text, const std::string& origin) {
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const size_t eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ConfigError(stripped, origin + ":" + std::to_string(line_no) +
                                            ": expected 'key = value', got '" + stripped + "'");
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        set(key, value);
    }
}

void Config::load_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw NotFound("config file not found: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    load_text(ss.str(), path.filename().string());
}

void Config::set(const std::string& key, const std::string& value) {
    if (!defaults_.count(key)) throw ConfigError(key, "unknown config key: " + key);
    values_[key] = value;
}

void Config::set_unchecked(const std::string& key, const std::string& value) {
    values_[key] = value;
}

std::string Config::get_string(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError(key, "missing config key: " + key);
    return it->second;
}

double Config::get_double(const std::string& key) const {
    const std::string v = get_string(key);
    try {
        size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError(key, "config key " + key + " is not a number: '" + v + "'");
    }
}

int Config::get_int(const std::string& key) const {
    const std::string v = get_string(key);
    try {
        size_t pos = 0;
        const long n = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return static_cast<int>(n);
    } catch (const std::exception&) {
        throw ConfigError(key, "config key " + key + " is not an integer: '" + v + "'");
    }
}

bool Config::get_bool(const std::string& key) const {
    const std::string v = get_string(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(key, "config key " + key + " is not a boolean: '" + v + "'");
}

std::string Config::format() const {
    std::ostringstream out;
    for (const auto& [k, v] : values_) out << k << " = " << v << "\n";
    return out.str();
}

}  // namespace morel

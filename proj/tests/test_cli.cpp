#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

// End-to-end checks of the installed command surface, driven through the
// real binary (path injected by the build).

namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "morel_cli_test";

int run(const std::string& args) {
    const std::string cmd = std::string(MOREL_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

struct Setup {
    Setup() {
        fs::remove_all(kRoot);
        fs::create_directories(kRoot);
        write_file(kRoot / "tiny.cfg",
                   "scene.static_count = 8\n"
                   "scene.frames = 20\n"
                   "scene.fps = 10\n"
                   "scene.views = 2\n"
                   "scene.width = 32\n"
                   "scene.height = 32\n"
                   "scene.seed = 5\n"
                   "scene.actor_count = 1\n"
                   "actor.0.type = linear\n"
                   "actor.0.start = 2 5\n"
                   "actor.0.velocity = 0.2 0\n"
                   "actor.0.color = 1 0.3 0.2\n"
                   "actor.0.sigma = 0.5\n"
                   "actor.0.depth = -1\n");
        write_file(kRoot / "train.cfg",
                   "train.gop = 10\n"
                   "train.iters_gca = 120\n"
                   "train.iters_kfa = 60\n"
                   "train.iters_pwd = 120\n"
                   "train.iters_ifb = 30\n"
                   "model.feature_dim = 8\n"
                   "model.gaussians_per_anchor = 2\n"
                   "model.hidden_dim = 16\n"
                   "model.grid_voxel = 0.5\n"
                   "deform.grid_res = 8\n"
                   "deform.channels = 4\n"
                   "deform.hidden = 16\n"
                   "points.per_frame = 300\n");
    }
};

Setup& setup() {
    static Setup s;
    return s;
}

std::string path(const char* name) {
    setup();
    return (kRoot / name).string();
}

}  // namespace

TEST_CASE("gen, train, render, eval, inspect complete end to end") {
    REQUIRE(run("gen --spec " + path("tiny.cfg") + " --out " + path("data")) == 0);
    CHECK(fs::exists(kRoot / "data" / "views" / "0" / "frame_00000.ppm"));
    CHECK(fs::exists(kRoot / "data" / "oracle.morl"));

    REQUIRE(run("train --data " + path("data") + " --out " + path("store") + " --config " +
                path("train.cfg")) == 0);
    CHECK(fs::exists(kRoot / "store" / "gca.morl"));
    CHECK(fs::exists(kRoot / "store" / "kfa_0000.morl"));

    REQUIRE(run("render --store " + path("store") + " --view 0 --t 0..19 --out " + path("frames") +
                " --data " + path("data")) == 0);
    CHECK(fs::exists(kRoot / "frames" / "frame_00019.ppm"));
    CHECK(fs::exists(kRoot / "frames" / "manifest.txt"));

    // Manifest residency column stays within two keys.
    std::ifstream manifest(kRoot / "frames" / "manifest.txt");
    std::string line;
    int lines = 0;
    while (std::getline(manifest, line)) {
        ++lines;
        const size_t bracket = line.find('[');
        REQUIRE(bracket != std::string::npos);
        const std::string keys = line.substr(bracket);
        CHECK(std::count(keys.begin(), keys.end(), ',') <= 1);
    }
    CHECK(lines == 20);

    REQUIRE(run("eval --render " + path("frames") + " --gt " + path("data") + " --out " +
                path("metrics.csv")) == 0);
    CHECK(fs::exists(kRoot / "metrics.csv"));
    CHECK(fs::exists(kRoot / "summary.json"));
    CHECK(fs::exists(kRoot / "temporal_profile.ppm"));

    CHECK(run("inspect --store " + path("store")) == 0);
}

TEST_CASE("frame ranges outside the sequence exit with code 3") {
    setup();
    CHECK(run("render --store " + path("store") + " --view 0 --t 0..50 --out " + path("x")) == 3);
    CHECK(run("render --store " + path("store") + " --view 0 --t -3 --out " + path("x")) == 3);
}

TEST_CASE("malformed config exits with code 2") {
    setup();
    write_file(kRoot / "bad.cfg", "no.such.key = 1\n");
    CHECK(run("train --data " + path("data") + " --out " + path("s2") + " --config " +
              path("bad.cfg")) == 2);
    write_file(kRoot / "bad2.cfg", "train.gop = not_a_number\n");
    CHECK(run("train --data " + path("data") + " --out " + path("s3") + " --config " +
              path("bad2.cfg")) == 2);
}

TEST_CASE("missing dataset exits with code 3") {
    setup();
    CHECK(run("train --data " + path("nowhere") + " --out " + path("s4")) == 3);
    CHECK(run("eval --render " + path("nowhere") + " --gt " + path("data")) == 3);
}

TEST_CASE("inspect on a store with only the gca lists no kfa bundles") {
    setup();
    const std::string gca_store = path("gca_only");
    fs::create_directories(gca_store);
    fs::copy_file(kRoot / "store" / "gca.morl", fs::path(gca_store) / "gca.morl",
                  fs::copy_options::overwrite_existing);
    const std::string cmd = std::string(MOREL_CLI_PATH) + " inspect --store " + gca_store + " > " +
                            path("inspect_out.txt") + " 2>&1";
    REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);
    std::ifstream in(kRoot / "inspect_out.txt");
    const std::string text((std::istreambuf_iterator<char>(in)), {});
    CHECK(text.find("gca.morl") != std::string::npos);
    CHECK(text.find("kfa_") == std::string::npos);
}

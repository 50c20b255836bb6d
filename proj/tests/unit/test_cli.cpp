#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "doctest.h"
#include "isoprnu/cli.hpp"
#include "isoprnu/error.hpp"
#include "isoprnu/image_io.hpp"

#include <unistd.h>

namespace fs = std::filesystem;
using namespace isoprnu;

namespace {

struct Workspace {
    fs::path dir;
    Workspace() {
        dir = fs::temp_directory_path() / ("isoprnu_cli_" + std::to_string(::getpid()));
        fs::remove_all(dir);
        fs::create_directories(dir);
        std::ofstream(dir / "p.txt") << "width=128\nheight=128\nsigma_k=0.007\ngain=1e-4\nseed=3\n";
        std::ofstream(dir / "p8.txt") << "width=128\nheight=128\nsigma_k=0.007\ngain=8e-4\nseed=3\n";
    }
    ~Workspace() { fs::remove_all(dir); }
    std::string at(const std::string& name) const { return (dir / name).string(); }

    int run(std::vector<std::string> args, std::string* out_text = nullptr, std::string* err_text = nullptr) const {
        args.insert(args.begin(), {"isoprnu", "--out-dir", dir.string()});
        std::vector<const char*> argv;
        for (const auto& a : args) argv.push_back(a.c_str());
        std::ostringstream out, err;
        const int rc = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
        if (out_text) *out_text = out.str();
        if (err_text) *err_text = err.str();
        return rc;
    }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("simulate writes a 16-bit PGM and a config echo") {
    Workspace w;
    REQUIRE(w.run({"simulate", "--profile", w.at("p.txt"), "--scene", "flat:0.5", "--out", "img.pgm"}) == 0);
    CHECK(slurp(w.at("img.pgm")).rfind("P5", 0) == 0);
    const Image img = read_image(w.at("img.pgm"));
    CHECK(img.channels.front().width() == 128);
    CHECK(img.iso == doctest::Approx(1000));
    const std::string echo = slurp(w.at("simulate.config.toml"));
    CHECK(echo.find("[simulate]") != std::string::npos);
    CHECK(echo.find("threads") == std::string::npos);
}

TEST_CASE("config echo reproduces the run") {
    Workspace w;
    REQUIRE(w.run({"--seed", "11", "simulate", "--profile", w.at("p.txt"), "--scene", "natural:4", "--out", "a.pgm",
                   "--nr-exponent", "0.3"}) == 0);
    const std::string first = slurp(w.at("a.pgm"));
    fs::copy_file(w.at("simulate.config.toml"), w.at("saved.toml"));
    fs::remove(w.at("a.pgm"));
    REQUIRE(w.run({"--config", w.at("saved.toml")}) == 0);
    CHECK(slurp(w.at("a.pgm")) == first);
    CHECK(slurp(w.at("simulate.config.toml")) == slurp(w.at("saved.toml")));
}

TEST_CASE("argument errors exit with 2") {
    Workspace w;
    std::string err;
    CHECK(w.run({}) == 2);
    CHECK(w.run({"bogus"}) == 2);
    CHECK(w.run({"simulate", "--profile", w.at("p.txt"), "--scene", "flat:0.5", "--no-such-flag"}) == 2);
    CHECK(w.run({"simulate", "--profile", w.at("p.txt"), "--scene", "stripes:2"}, nullptr, &err) == 2);
    CHECK(err.find("scene") != std::string::npos);
    std::ofstream(w.at("bad.txt")) << "width=128\ncolour=blue\n";
    CHECK(w.run({"simulate", "--profile", w.at("bad.txt"), "--scene", "flat:0.5"}) == 2);
    std::ofstream(w.at("extra.toml")) << "[simulate]\nprofile=\"" << w.at("p.txt") << "\"\nwobble=3\n";
    CHECK(w.run({"--config", w.at("extra.toml")}) == 2);
    CHECK(w.run({"--help"}) == 0);
}

TEST_CASE("runtime errors exit with 1") {
    Workspace w;
    std::string err;
    CHECK(w.run({"fit-noise", "--image", w.at("missing.pgm")}, nullptr, &err) == 1);
    CHECK(err.find("missing.pgm") != std::string::npos);
}

TEST_CASE("strict prediction refuses a mismatched model") {
    Workspace w;
    REQUIRE(w.run({"simulate", "--profile", w.at("p.txt"), "--scene", "natural:1", "--count", "3", "--out", "lo.pgm",
                   "--nr-exponent", "0.35", "--white-level", "0.95", "--base-gain", "1e-4"}) == 0);
    REQUIRE(w.run({"simulate", "--profile", w.at("p.txt"), "--scene", "flat:0.6", "--count", "3", "--out", "flat.pgm"}) == 0);
    REQUIRE(w.run({"simulate", "--profile", w.at("p8.txt"), "--scene", "natural:2", "--out", "hi.pgm"}) == 0);
    REQUIRE(w.run({"fingerprint", "--image", w.at("flat_000.pgm"), w.at("flat_001.pgm"), w.at("flat_002.pgm")}) == 0);
    REQUIRE(w.run({"features", "--image", w.at("lo_000.pgm"), w.at("lo_001.pgm"), w.at("lo_002.pgm"), "--fingerprint",
                   w.at("fingerprint.prnu"), "--block", "32", "--stride", "16"}) == 0);
    REQUIRE(w.run({"train-predictor", "--samples", w.at("samples.csv"), "--iso", "1000", "--out", "m1000.txt"}) == 0);
    std::string err;
    CHECK(w.run({"predict", "--model", w.at("m1000.txt"), "--image", w.at("hi.pgm"), "--block", "32", "--strict"},
                nullptr, &err) == 1);
    CHECK(err.find("no-matching-predictor") != std::string::npos);
    CHECK(w.run({"predict", "--model", w.at("m1000.txt"), "--image", w.at("lo_000.pgm"), "--block", "32", "--strict"}) == 0);
}

TEST_CASE("infer-iso prints votes and a winner") {
    Workspace w;
    REQUIRE(w.run({"simulate", "--profile", w.at("p.txt"), "--scene", "natural:5", "--count", "3", "--out", "a.pgm"}) == 0);
    REQUIRE(w.run({"simulate", "--profile", w.at("p8.txt"), "--scene", "natural:6", "--count", "2", "--out", "b.pgm"}) == 0);
    std::ofstream(w.at("sets.manifest")) << w.at("a_000.pgm") << "\t1000\n"
                                         << w.at("a_001.pgm") << "\t1000\n"
                                         << w.at("b_000.pgm") << "\t8000\n"
                                         << w.at("b_001.pgm") << "\t8000\n";
    std::string out;
    REQUIRE(w.run({"infer-iso", "--query", w.at("a_002.pgm"), "--sets", w.at("sets.manifest"), "--m", "10"}, &out) == 0);
    CHECK(out.rfind("iso,votes\n", 0) == 0);
    CHECK(out.find("winner,") != std::string::npos);
    CHECK(fs::exists(w.at("set_iso1000.pidx")));
}

TEST_CASE("profile parsing") {
    const SensorProfile p = parse_profile("width=64\nheight=32\ngain=3e-5\n# comment\n");
    CHECK(p.width == 64);
    CHECK(p.gain == 3e-5);
    CHECK(parse_profile(profile_text(p)).height == 32);
    CHECK_THROWS_AS(parse_profile("widht=64\n"), Error);
    CHECK_THROWS_AS(parse_profile("gain=-1\n"), Error);
    CHECK(gain_to_iso(1e-5) == doctest::Approx(100));
}

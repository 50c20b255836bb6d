#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "isoprnu/error.hpp"
#include "isoprnu/image_io.hpp"

namespace fs = std::filesystem;
using namespace isoprnu;

TEST_CASE("image round trips") {
    const fs::path dir = fs::temp_directory_path();
    Plane p(5, 3);
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = static_cast<double>(i) / 14.0;

    write_pgm16((dir / "isoprnu_io16.pgm").string(), p, 400.0);
    const Image a = read_image((dir / "isoprnu_io16.pgm").string());
    CHECK(a.iso == 400.0);
    REQUIRE(a.channels.size() == 1);
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(a.channels[0][i] == doctest::Approx(p[i]).epsilon(1.0 / 65535));

    write_pgm8((dir / "isoprnu_io8.pgm").string(), p);
    const Plane b = read_plane((dir / "isoprnu_io8.pgm").string());
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(std::abs(b[i] - p[i]) <= 0.5 / 255 + 1e-12);

    write_ppm8((dir / "isoprnu_io.ppm").string(), p, Plane(5, 3, 0.0), Plane(5, 3, 1.0));
    const Image c = read_image((dir / "isoprnu_io.ppm").string());
    REQUIRE(c.channels.size() == 3);
    CHECK(c.channels[2][7] == 1.0);
    CHECK(read_plane((dir / "isoprnu_io.ppm").string()).width() == 5);

    std::ofstream(dir / "isoprnu_bad.pgm") << "P2\n2 2\n255\n1 2 3 4\n";
    CHECK_THROWS_AS(read_image((dir / "isoprnu_bad.pgm").string()), Error);
    for (const char* f : {"isoprnu_io16.pgm", "isoprnu_io8.pgm", "isoprnu_io.ppm", "isoprnu_bad.pgm"}) fs::remove(dir / f);
}

TEST_CASE("key-value text") {
    const auto kv = parse_key_values("# c\na = 1.5\nb=x\n\n");
    CHECK(kv.at("a") == "1.5");
    CHECK(kv_double(kv, "a") == 1.5);
    CHECK_THROWS_AS(kv_double(kv, "b"), Error);
    CHECK_THROWS_AS(kv_double(kv, "missing"), Error);
}

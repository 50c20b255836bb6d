#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "isoprnu/plane.hpp"

namespace isoprnu {

/// Planes plus the ISO label recorded in the header comment, if any.
struct Image {
    std::vector<Plane> channels;
    std::optional<double> iso;
};

/// Reads binary PGM (P5, 8 or 16 bit, big-endian) or PPM (P6, 8 bit) into [0,1] planes.
/// A header comment of the form "# iso=<value>" sets Image::iso.
Image read_image(const std::string& path);
/// Grey image convenience: PPM input is reduced to its first channel.
Plane read_plane(const std::string& path);

/// 16-bit PGM, sample = round(v * 65535), big-endian.
void write_pgm16(const std::string& path, const Plane& p, std::optional<double> iso = std::nullopt);
/// 8-bit PGM, sample = round(v * 255).
void write_pgm8(const std::string& path, const Plane& p);
/// 8-bit PPM from three planes in [0,1].
void write_ppm8(const std::string& path, const Plane& r, const Plane& g, const Plane& b);

std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& text);

/// Flat "key=value" lines; '#' starts a comment. Unknown keys are the caller's concern.
std::map<std::string, std::string> parse_key_values(const std::string& text);
double kv_double(const std::map<std::string, std::string>& kv, const std::string& key);

}  // namespace isoprnu

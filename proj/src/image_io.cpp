#include "isoprnu/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "isoprnu/error.hpp"
#include "isoprnu/format.hpp"

namespace isoprnu {

namespace {

// Reads the next header token, collecting "# iso=..." comments along the way.
std::string next_token(std::istream& in, std::optional<double>& iso) {
    std::string tok;
    int ch;
    while ((ch = in.get()) != EOF) {
        if (ch == '#') {
            std::string comment;
            std::getline(in, comment);
            const auto pos = comment.find("iso=");
            if (pos != std::string::npos) {
                try {
                    iso = std::stod(comment.substr(pos + 4));
                } catch (const std::logic_error&) {
                }
            }
            if (!tok.empty()) return tok;
            continue;
        }
        if (std::isspace(ch)) {
            if (!tok.empty()) return tok;
            continue;
        }
        tok.push_back(static_cast<char>(ch));
    }
    return tok;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::Io, "cannot open '" + path + "' for writing");
    return out;
}

unsigned to_sample(double v, unsigned maxval) {
    return static_cast<unsigned>(std::lround(std::clamp(v, 0.0, 1.0) * maxval));
}

}  // namespace

Image read_image(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open '" + path + "'");
    Image img;
    const std::string magic = next_token(in, img.iso);
    if (magic != "P5" && magic != "P6") fail(ErrorKind::Io, "'" + path + "' is not a binary PGM/PPM file");
    std::size_t w = 0, h = 0;
    unsigned maxval = 0;
    try {
        w = std::stoul(next_token(in, img.iso));
        h = std::stoul(next_token(in, img.iso));
        maxval = static_cast<unsigned>(std::stoul(next_token(in, img.iso)));
    } catch (const std::logic_error&) {
        fail(ErrorKind::Io, "malformed header in '" + path + "'");
    }
    const std::size_t nch = magic == "P6" ? 3 : 1;
    if (maxval == 0 || maxval > 65535 || (nch == 3 && maxval > 255))
        fail(ErrorKind::Io, "unsupported maxval in '" + path + "'");
    const std::size_t bytes = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> raw(w * h * nch * bytes);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size())) fail(ErrorKind::Io, "truncated image '" + path + "'");
    img.channels.assign(nch, Plane(w, h));
    for (std::size_t i = 0; i < w * h; ++i)
        for (std::size_t ch = 0; ch < nch; ++ch) {
            const std::size_t k = (i * nch + ch) * bytes;
            const unsigned v = bytes == 2 ? (raw[k] << 8) | raw[k + 1] : raw[k];
            img.channels[ch][i] = static_cast<double>(v) / maxval;
        }
    return img;
}

Plane read_plane(const std::string& path) { return std::move(read_image(path).channels.front()); }

void write_pgm16(const std::string& path, const Plane& p, std::optional<double> iso) {
    auto out = open_out(path);
    out << "P5\n";
    if (iso) out << "# iso=" << format_sig(*iso) << '\n';
    out << p.width() << ' ' << p.height() << "\n65535\n";
    std::vector<unsigned char> buf(p.size() * 2);
    for (std::size_t i = 0; i < p.size(); ++i) {
        const unsigned v = to_sample(p[i], 65535);
        buf[2 * i] = static_cast<unsigned char>(v >> 8);
        buf[2 * i + 1] = static_cast<unsigned char>(v & 0xff);
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

void write_pgm8(const std::string& path, const Plane& p) {
    auto out = open_out(path);
    out << "P5\n" << p.width() << ' ' << p.height() << "\n255\n";
    std::vector<unsigned char> buf(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) buf[i] = static_cast<unsigned char>(to_sample(p[i], 255));
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

void write_ppm8(const std::string& path, const Plane& r, const Plane& g, const Plane& b) {
    require(r.same_shape(g) && r.same_shape(b), "PPM channels differ in size");
    auto out = open_out(path);
    out << "P6\n" << r.width() << ' ' << r.height() << "\n255\n";
    std::vector<unsigned char> buf(r.size() * 3);
    for (std::size_t i = 0; i < r.size(); ++i) {
        buf[3 * i] = static_cast<unsigned char>(to_sample(r[i], 255));
        buf[3 * i + 1] = static_cast<unsigned char>(to_sample(g[i], 255));
        buf[3 * i + 2] = static_cast<unsigned char>(to_sample(b[i], 255));
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_text(const std::string& path, const std::string& text) {
    auto out = open_out(path);
    out << text;
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) {
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r"), e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        if (eq == std::string::npos) {
            if (!trim(line).empty()) fail(ErrorKind::Io, "malformed key=value line: '" + line + "'");
            continue;
        }
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

double kv_double(const std::map<std::string, std::string>& kv, const std::string& key) {
    const auto it = kv.find(key);
    if (it == kv.end()) fail(ErrorKind::Io, "missing key '" + key + "'");
    try {
        return std::stod(it->second);
    } catch (const std::logic_error&) {
        fail(ErrorKind::Io, "key '" + key + "' is not a number");
    }
}

}  // namespace isoprnu

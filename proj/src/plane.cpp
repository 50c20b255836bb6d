#include "isoprnu/plane.hpp"

#include <cmath>
#include <string>

#include "isoprnu/error.hpp"

namespace isoprnu {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::InvalidParameter: return "invalid-parameter";
        case ErrorKind::EmptyResult: return "empty-result";
        case ErrorKind::SingularFit: return "singular-fit";
        case ErrorKind::DegenerateInput: return "degenerate-input";
        case ErrorKind::NoMatchingPredictor: return "no-matching-predictor";
        case ErrorKind::InvalidSpec: return "invalid-spec";
        case ErrorKind::InferenceFailed: return "inference-failed";
        case ErrorKind::Io: return "io";
    }
    return "error";
}

Plane::Plane(std::size_t width, std::size_t height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
    require(data_.size() == width * height, "plane data size does not match dimensions");
}

Plane Plane::crop(std::size_t row0, std::size_t col0, std::size_t h, std::size_t w) const {
    require(row0 + h <= height_ && col0 + w <= width_, "crop window exceeds plane bounds");
    Plane out(w, h);
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c) out(r, c) = (*this)(row0 + r, col0 + c);
    return out;
}

void Plane::paste(const Plane& src, std::size_t row0, std::size_t col0) {
    require(row0 + src.height() <= height_ && col0 + src.width() <= width_, "paste window exceeds plane bounds");
    for (std::size_t r = 0; r < src.height(); ++r)
        for (std::size_t c = 0; c < src.width(); ++c) (*this)(row0 + r, col0 + c) = src(r, c);
}

double mean(std::span<const double> v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double variance(std::span<const double> v) {
    if (v.empty()) return 0.0;
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size());
}

double pearson(std::span<const double> a, std::span<const double> b) {
    require(a.size() == b.size() && !a.empty(), "pearson: length mismatch");
    const double ma = mean(a), mb = mean(b);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma, db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa <= 0.0 || sbb <= 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

IntegralImage::IntegralImage(const Plane& p) : IntegralImage(p, [](double x) { return x; }) {}

}  // namespace isoprnu

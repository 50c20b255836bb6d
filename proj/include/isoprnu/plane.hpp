#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace isoprnu {

/// Single-channel row-major image of real samples, nominally in [0,1].
class Plane {
public:
    Plane() = default;
    Plane(std::size_t width, std::size_t height, double fill = 0.0)
        : width_(width), height_(height), data_(width * height, fill) {}
    Plane(std::size_t width, std::size_t height, std::vector<double> data);

    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t row, std::size_t col) noexcept { return data_[row * width_ + col]; }
    double operator()(std::size_t row, std::size_t col) const noexcept { return data_[row * width_ + col]; }
    double& operator[](std::size_t i) noexcept { return data_[i]; }
    double operator[](std::size_t i) const noexcept { return data_[i]; }

    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }
    std::span<const double> row(std::size_t r) const noexcept { return {data_.data() + r * width_, width_}; }

    bool same_shape(const Plane& other) const noexcept {
        return width_ == other.width_ && height_ == other.height_;
    }

    Plane crop(std::size_t row0, std::size_t col0, std::size_t height, std::size_t width) const;
    void paste(const Plane& src, std::size_t row0, std::size_t col0);

    friend bool operator==(const Plane&, const Plane&) = default;

private:
    std::size_t width_ = 0;
    std::size_t height_ = 0;
    std::vector<double> data_;
};

double mean(std::span<const double> v);
/// Population variance (divides by N).
double variance(std::span<const double> v);
double pearson(std::span<const double> a, std::span<const double> b);

inline double mean(const Plane& p) { return mean(p.values()); }
inline double variance(const Plane& p) { return variance(p.values()); }

/// Summed-area table with one row/column of zero padding: (h+1) x (w+1).
class IntegralImage {
public:
    IntegralImage() = default;
    explicit IntegralImage(const Plane& p);
    template <class F>
    IntegralImage(const Plane& p, F&& transform);

    /// Sum over rows [r0, r1) and columns [c0, c1).
    double sum(std::size_t r0, std::size_t c0, std::size_t r1, std::size_t c1) const noexcept {
        const std::size_t s = stride_;
        return table_[r1 * s + c1] - table_[r0 * s + c1] - table_[r1 * s + c0] + table_[r0 * s + c0];
    }

private:
    std::size_t stride_ = 0;
    std::vector<double> table_;
};

template <class F>
IntegralImage::IntegralImage(const Plane& p, F&& transform)
    : stride_(p.width() + 1), table_((p.height() + 1) * (p.width() + 1), 0.0) {
    for (std::size_t r = 0; r < p.height(); ++r) {
        double run = 0.0;
        for (std::size_t c = 0; c < p.width(); ++c) {
            run += transform(p(r, c));
            table_[(r + 1) * stride_ + c + 1] = table_[r * stride_ + c + 1] + run;
        }
    }
}

}  // namespace isoprnu

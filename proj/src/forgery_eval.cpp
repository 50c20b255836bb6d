#include "isoprnu/forgery_eval.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "isoprnu/error.hpp"
#include "isoprnu/format.hpp"
#include "isoprnu/image_io.hpp"

namespace isoprnu {

Forgery make_forgery(const Plane& image, const ForgerySpec& spec) {
    if (spec.patch == 0 || spec.patch >= spec.region) fail(ErrorKind::InvalidSpec, "patch must be smaller than the region");
    if (spec.region_row + spec.region > image.height() || spec.region_col + spec.region > image.width())
        fail(ErrorKind::InvalidSpec, "region does not fit inside the image");
    if (spec.donor_row + spec.patch > image.height() || spec.donor_col + spec.patch > image.width())
        fail(ErrorKind::InvalidSpec, "donor patch does not fit inside the image");
    const std::size_t tr = spec.target_row(), tc = spec.target_col();
    const bool rows_apart = spec.donor_row + spec.patch <= tr || tr + spec.patch <= spec.donor_row;
    const bool cols_apart = spec.donor_col + spec.patch <= tc || tc + spec.patch <= spec.donor_col;
    if (!rows_apart && !cols_apart) fail(ErrorKind::InvalidSpec, "donor patch overlaps the target patch");

    Forgery f{image, Plane(image.width(), image.height(), 0.0)};
    f.forged.paste(image.crop(spec.donor_row, spec.donor_col, spec.patch, spec.patch), tr, tc);
    f.truth.paste(Plane(spec.patch, spec.patch, 1.0), tr, tc);
    return f;
}

double DetectorParams::resolved_sigma0(std::size_t block) const {
    const double s = sigma0.value_or(1.0 / static_cast<double>(block));
    require(s > 0.0, "sigma0 must be positive");
    return s;
}

double DetectorParams::resolved_sigma1(std::size_t block) const {
    const double s = sigma1.value_or(2.0 * resolved_sigma0(block));
    require(s > 0.0, "sigma1 must be positive");
    return s;
}

std::pair<double, double> unary_costs(double rho, double rho_hat, double sigma0, double sigma1, double p0) {
    auto nll = [](double x, double mu, double s) {
        const double z = (x - mu) / s;
        return 0.5 * z * z + std::log(s) + 0.5 * std::log(2.0 * std::numbers::pi);
    };
    const double authentic = nll(rho, rho_hat, sigma1) - std::log1p(-p0);
    const double tampered = nll(rho, 0.0, sigma0) - std::log(p0);
    return {authentic, tampered};
}

BlockDetection detect_blocks(const CorrelationMap& map, const CorrelationMap& predicted, const DetectorParams& params) {
    require(map.rows == predicted.rows && map.cols == predicted.cols && map.rho.size() == predicted.rho.size(),
            "correlation and prediction maps are not aligned");
    require(params.beta >= 0.0, "beta must be non-negative");
    require(params.p0 >= 0.0 && params.p0 <= 1.0, "p0 must lie in [0,1]");
    const double s0 = params.resolved_sigma0(map.block), s1 = params.resolved_sigma1(map.block);
    const std::size_t n = map.rho.size();
    std::vector<double> cost0(n), cost1(n);
    BlockDetection det;
    det.labels.assign(n, 0);
    for (std::size_t k = 0; k < n; ++k) {
        std::tie(cost0[k], cost1[k]) = unary_costs(map.rho[k], predicted.rho[k], s0, s1, params.p0);
        det.labels[k] = cost1[k] < cost0[k] ? 1 : 0;
    }
    auto& lab = det.labels;
    auto disagreements = [&](std::size_t r, std::size_t c, std::uint8_t label) {
        int d = 0;
        if (r > 0) d += lab[(r - 1) * map.cols + c] != label;
        if (r + 1 < map.rows) d += lab[(r + 1) * map.cols + c] != label;
        if (c > 0) d += lab[r * map.cols + c - 1] != label;
        if (c + 1 < map.cols) d += lab[r * map.cols + c + 1] != label;
        return d;
    };
    auto energy = [&] {
        double e = 0.0;
        for (std::size_t r = 0; r < map.rows; ++r)
            for (std::size_t c = 0; c < map.cols; ++c) {
                const std::size_t k = r * map.cols + c;
                e += lab[k] ? cost1[k] : cost0[k];
                if (c + 1 < map.cols && lab[k] != lab[k + 1]) e += params.beta;
                if (r + 1 < map.rows && lab[k] != lab[k + map.cols]) e += params.beta;
            }
        return e;
    };
    det.energy.push_back(energy());
    if (params.beta == 0.0) return det;
    for (std::size_t it = 0; it < params.max_icm_iters; ++it) {
        bool flipped = false;
        for (std::size_t r = 0; r < map.rows; ++r)
            for (std::size_t c = 0; c < map.cols; ++c) {
                const std::size_t k = r * map.cols + c;
                const double e0 = cost0[k] + params.beta * disagreements(r, c, 0);
                const double e1 = cost1[k] + params.beta * disagreements(r, c, 1);
                const std::uint8_t want = e1 < e0 ? 1 : (e0 < e1 ? 0 : lab[k]);
                if (want != lab[k]) {
                    lab[k] = want;
                    flipped = true;
                }
            }
        det.energy.push_back(energy());
        if (!flipped) break;
    }
    return det;
}

Plane rasterize_labels(const CorrelationMap& grid, const std::vector<std::uint8_t>& labels) {
    require(labels.size() == grid.rows * grid.cols, "label count does not match the grid");
    const std::size_t w = grid.image_width, h = grid.image_height;
    // 2-D difference arrays of covering and tampered block counts
    std::vector<long> cover((h + 1) * (w + 1), 0), hits((h + 1) * (w + 1), 0);
    auto add = [&](std::vector<long>& a, std::size_t r0, std::size_t c0, std::size_t r1, std::size_t c1) {
        a[r0 * (w + 1) + c0] += 1;
        a[r0 * (w + 1) + c1] -= 1;
        a[r1 * (w + 1) + c0] -= 1;
        a[r1 * (w + 1) + c1] += 1;
    };
    for (std::size_t r = 0; r < grid.rows; ++r)
        for (std::size_t c = 0; c < grid.cols; ++c) {
            const std::size_t r0 = grid.block_row0(r), c0 = grid.block_col0(c);
            const std::size_t r1 = std::min(h, r0 + grid.block), c1 = std::min(w, c0 + grid.block);
            add(cover, r0, c0, r1, c1);
            if (labels[r * grid.cols + c]) add(hits, r0, c0, r1, c1);
        }
    for (auto* a : {&cover, &hits}) {
        for (std::size_t r = 0; r <= h; ++r)
            for (std::size_t c = 1; c <= w; ++c) (*a)[r * (w + 1) + c] += (*a)[r * (w + 1) + c - 1];
        for (std::size_t r = 1; r <= h; ++r)
            for (std::size_t c = 0; c <= w; ++c) (*a)[r * (w + 1) + c] += (*a)[(r - 1) * (w + 1) + c];
    }
    Plane mask(w, h, 0.0);
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c) {
            const long n = cover[r * (w + 1) + c], t = hits[r * (w + 1) + c];
            mask(r, c) = (n > 0 && 2 * t > n) ? 1.0 : 0.0;
        }
    return mask;
}

Plane detect(const CorrelationMap& map, const CorrelationMap& predicted, const DetectorParams& params) {
    return rasterize_labels(map, detect_blocks(map, predicted, params).labels);
}

PixelRates pixel_metrics(const Plane& mask, const Plane& truth) {
    require(mask.same_shape(truth), "mask and truth differ in size");
    double tp = 0, fp = 0, pos = 0, neg = 0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        const bool m = mask[i] > 0.5, t = truth[i] > 0.5;
        pos += t;
        neg += !t;
        tp += m && t;
        fp += m && !t;
    }
    return {pos > 0 ? tp / pos : 0.0, neg > 0 ? fp / neg : 0.0};
}

BlockScorer::BlockScorer(const CorrelationMap& grid, const Plane& truth) : n_blocks_(grid.rows * grid.cols) {
    require(truth.width() == grid.image_width && truth.height() == grid.image_height,
            "truth mask does not match the grid geometry");
    auto cuts = [](std::size_t n, std::size_t extent, std::size_t block, auto start) {
        std::vector<std::size_t> v{0, extent};
        for (std::size_t i = 0; i < n; ++i) {
            v.push_back(start(i));
            v.push_back(std::min(extent, start(i) + block));
        }
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
        return v;
    };
    const auto rc = cuts(grid.rows, grid.image_height, grid.block, [&](std::size_t r) { return grid.block_row0(r); });
    const auto cc = cuts(grid.cols, grid.image_width, grid.block, [&](std::size_t c) { return grid.block_col0(c); });
    const IntegralImage tsum(truth, [](double x) { return x > 0.5 ? 1.0 : 0.0; });
    for (std::size_t i = 0; i + 1 < rc.size(); ++i)
        for (std::size_t j = 0; j + 1 < cc.size(); ++j) {
            const double area = static_cast<double>((rc[i + 1] - rc[i]) * (cc[j + 1] - cc[j]));
            const double pos = tsum.sum(rc[i], cc[j], rc[i + 1], cc[j + 1]);
            std::vector<std::uint32_t> cover;
            for (std::size_t r = 0; r < grid.rows; ++r) {
                const std::size_t r0 = grid.block_row0(r);
                if (r0 > rc[i] || r0 + grid.block < rc[i + 1]) continue;
                for (std::size_t c = 0; c < grid.cols; ++c) {
                    const std::size_t c0 = grid.block_col0(c);
                    if (c0 <= cc[j] && c0 + grid.block >= cc[j + 1])
                        cover.push_back(static_cast<std::uint32_t>(r * grid.cols + c));
                }
            }
            if (cover.empty()) {
                uncovered_ += {0.0, 0.0, pos, area - pos};
                continue;
            }
            cover_.push_back(std::move(cover));
            cell_pos_.push_back(pos);
            cell_neg_.push_back(area - pos);
        }
}

PixelCounts BlockScorer::score(const std::vector<std::uint8_t>& labels) const {
    require(labels.size() == n_blocks_, "label count does not match the grid");
    PixelCounts pc = uncovered_;
    for (std::size_t k = 0; k < cover_.size(); ++k) {
        std::size_t hits = 0;
        for (auto b : cover_[k]) hits += labels[b];
        const bool tampered = 2 * hits > cover_[k].size();
        pc.pos += cell_pos_[k];
        pc.neg += cell_neg_[k];
        if (tampered) {
            pc.tp += cell_pos_[k];
            pc.fp += cell_neg_[k];
        }
    }
    return pc;
}

std::vector<RocRun> roc_envelope(const std::vector<RocRun>& runs, double max_fpr) {
    std::vector<RocRun> sorted;
    for (const auto& r : runs) {
        require(r.fpr >= 0.0 && r.fpr <= 1.0 && r.tpr >= 0.0 && r.tpr <= 1.0, "ROC rates must lie in [0,1]");
        if (r.fpr <= max_fpr) sorted.push_back(r);
    }
    // fpr ascending, best tpr first within equal fpr; stable keeps the first of equal points
    std::stable_sort(sorted.begin(), sorted.end(), [](const RocRun& a, const RocRun& b) {
        return a.fpr != b.fpr ? a.fpr < b.fpr : a.tpr > b.tpr;
    });
    std::vector<RocRun> front;
    for (const auto& r : sorted)
        if (front.empty() || (r.tpr > front.back().tpr && r.fpr > front.back().fpr)) front.push_back(r);
    return front;
}

double envelope_tpr(const std::vector<RocRun>& envelope, double fpr) {
    double x0 = 0.0, y0 = 0.0;
    for (const auto& p : envelope) {
        if (fpr <= p.fpr) {
            if (p.fpr == x0) return std::max(y0, p.tpr);
            return y0 + (p.tpr - y0) * (fpr - x0) / (p.fpr - x0);
        }
        x0 = p.fpr;
        y0 = std::max(y0, p.tpr);
    }
    return y0;
}

double envelope_shortfall(const std::vector<RocRun>& a, const std::vector<RocRun>& b, double max_fpr,
                          std::size_t grid) {
    require(grid >= 1, "grid needs at least one point");
    double worst = 0.0;
    for (std::size_t i = 1; i <= grid; ++i) {
        const double f = max_fpr * static_cast<double>(i) / static_cast<double>(grid);
        worst = std::max(worst, envelope_tpr(b, f) - envelope_tpr(a, f));
    }
    return worst;
}

std::vector<std::pair<double, double>> default_roc_grid() {
    std::vector<std::pair<double, double>> g;
    for (double beta : {0.0, 1.0, 3.0, 10.0, 30.0, 100.0, 300.0, 1200.0})
        // prior log-odds ladder; the far end is needed to push FPR into the 0.1-0.2 range
        for (double t : {-24.0, -16.0, -10.0, -6.0, -4.0, -2.0, 0.0, 2.0, 4.0, 6.0, 10.0, 16.0, 24.0, 36.0})
            g.emplace_back(beta, 1.0 / (1.0 + std::exp(-t)));
    return g;
}

std::string roc_csv(const std::vector<RocRun>& runs) {
    std::ostringstream os;
    os << "beta,p0,fpr,tpr\n";
    for (const auto& r : runs)
        os << format_sig(r.beta) << ',' << format_sig(r.p0) << ',' << format_sig(r.fpr) << ',' << format_sig(r.tpr)
           << '\n';
    return os.str();
}

void write_overlay(const std::string& path, const Plane& image, const Plane& mask, const Plane& truth) {
    require(image.same_shape(mask) && image.same_shape(truth), "overlay inputs differ in size");
    Plane r = image, g = image, b = image;
    for (std::size_t i = 0; i < image.size(); ++i) {
        const bool m = mask[i] > 0.5, t = truth[i] > 0.5;
        if (m && t) {
            r[i] = 0.0, g[i] = 1.0, b[i] = 0.0;
        } else if (m) {
            r[i] = 1.0, g[i] = 0.0, b[i] = 0.0;
        } else if (t) {
            r[i] = 1.0, g[i] = 1.0, b[i] = 1.0;
        }
    }
    write_ppm8(path, r, g, b);
}

void write_mask(const std::string& path, const Plane& mask) {
    Plane m = mask;
    for (double& x : m.values()) x = x > 0.5 ? 1.0 : 0.0;
    write_pgm8(path, m);
}

}  // namespace isoprnu

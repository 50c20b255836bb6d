#include "isoprnu/corr_predictor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "isoprnu/error.hpp"
#include "isoprnu/format.hpp"
#include "isoprnu/image_io.hpp"
#include "isoprnu/ols.hpp"
#include "isoprnu/parallel.hpp"

namespace isoprnu {

namespace {

constexpr double kKnee = 0.98;
constexpr double kRollOff = 0.02;
constexpr double kFlatVariance = 1e-6;
constexpr std::size_t kMinBlock = 32;

// Local variance over clipped (2*half+1)^2 windows.
Plane local_variance(const Plane& p, std::size_t half) {
    const IntegralImage s(p), s2(p, [](double x) { return x * x; });
    Plane out(p.width(), p.height());
    for (std::size_t r = 0; r < p.height(); ++r)
        for (std::size_t c = 0; c < p.width(); ++c) {
            const std::size_t ra = r >= half ? r - half : 0, rb = std::min(p.height(), r + half + 1);
            const std::size_t ca = c >= half ? c - half : 0, cb = std::min(p.width(), c + half + 1);
            const double n = static_cast<double>((rb - ra) * (cb - ca));
            const double m = s.sum(ra, ca, rb, cb) / n;
            out(r, c) = std::max(0.0, s2.sum(ra, ca, rb, cb) / n - m * m);
        }
    return out;
}

Plane laplacian(const Plane& p) {
    const std::size_t h = p.height(), w = p.width();
    Plane out(w, h);
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c) {
            const double up = p(r > 0 ? r - 1 : 0, c), down = p(std::min(r + 1, h - 1), c);
            const double left = p(r, c > 0 ? c - 1 : 0), right = p(r, std::min(c + 1, w - 1));
            out(r, c) = up + down + left + right - 4.0 * p(r, c);
        }
    return out;
}

}  // namespace

double attenuate_intensity(double intensity) {
    if (intensity <= kKnee) return intensity;
    const double t = (intensity - kKnee) / kRollOff;
    return kKnee * std::exp(-t * t);
}

Plane texture_weights(const Plane& block) {
    Plane v = local_variance(laplacian(block), 2);
    for (double& x : v.values()) x = 1.0 / (1.0 + x);
    return v;
}

FeatureVector extract_features(const Plane& block) {
    require(block.width() >= kMinBlock && block.height() >= kMinBlock, "feature block must be at least 32x32");
    const Plane weights = texture_weights(block);
    const Plane flat = local_variance(block, 2);
    FeatureVector fv;
    for (std::size_t i = 0; i < block.size(); ++i) {
        const double att = attenuate_intensity(block[i]);
        fv.f_I += att;
        fv.f_T += weights[i];
        fv.f_S += flat[i] < kFlatVariance ? 1.0 : 0.0;
        fv.f_TI += att * weights[i];
    }
    const double n = static_cast<double>(block.size());
    fv.f_I /= n;
    fv.f_T /= n;
    fv.f_S /= n;
    fv.f_TI /= n;
    return fv;
}

std::vector<FeatureVector> block_features(const Plane& image, std::size_t block, std::size_t stride) {
    require(block <= std::min(image.width(), image.height()) && stride >= 1, "block grid does not fit the image");
    const std::size_t rows = (image.height() - block) / stride + 1, cols = (image.width() - block) / stride + 1;
    std::vector<FeatureVector> out(rows * cols);
    parallel_for(out.size(), [&](std::size_t k) {
        out[k] = extract_features(image.crop((k / cols) * stride, (k % cols) * stride, block, block));
    });
    return out;
}

PredictorModel train(const std::vector<TrainingSample>& samples, double iso) {
    require(samples.size() >= kMinTrainingSamples, "predictor training needs at least 25 samples");
    const auto m = static_cast<Eigen::Index>(samples.size());
    Eigen::MatrixXd x(m, 5);
    Eigen::VectorXd y(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto& s = samples[i];
        require(s.rho >= -1.0 && s.rho <= 1.0, "training correlations must lie in [-1,1]");
        x.row(i) << 1.0, s.features.f_I, s.features.f_T, s.features.f_S, s.features.f_TI;
        y(i) = s.rho;
    }
    const auto sol = solve_ols(x, y);
    PredictorModel model;
    for (int k = 0; k < 5; ++k) model.weights[k] = sol.coef(k);
    model.training_iso = iso;
    model.n_training_blocks = samples.size();
    model.train_rmse = sol.rmse;
    return model;
}

double predict(const PredictorModel& model, const FeatureVector& fv) {
    const auto& w = model.weights;
    const double raw = w[0] + w[1] * fv.f_I + w[2] * fv.f_T + w[3] * fv.f_S + w[4] * fv.f_TI;
    return std::clamp(raw, 0.0, 1.0);
}

CorrelationMap predict_map(const PredictorModel& model, const Plane& image, const CorrelationMap& grid) {
    require(image.width() == grid.image_width && image.height() == grid.image_height,
            "image does not match the correlation-map geometry");
    CorrelationMap out = grid;
    std::fill(out.degenerate.begin(), out.degenerate.end(), 0);
    const auto features = block_features(image, grid.block, grid.stride);
    for (std::size_t k = 0; k < out.rho.size(); ++k) out.rho[k] = predict(model, features[k]);
    return out;
}

PredictionMetrics metrics(const std::vector<double>& pred, const std::vector<double>& actual) {
    require(pred.size() == actual.size(), "metrics: prediction and actual lengths differ");
    require(pred.size() >= 2, "metrics need at least 2 points");
    const double mu = mean(actual);
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        ss_res += (actual[i] - pred[i]) * (actual[i] - pred[i]);
        ss_tot += (actual[i] - mu) * (actual[i] - mu);
    }
    PredictionMetrics m;
    m.rmse = std::sqrt(ss_res / static_cast<double>(pred.size()));
    if (ss_tot > 0.0)
        m.r2 = std::max(0.0, 1.0 - ss_res / ss_tot);
    else
        m.r2 = ss_res == 0.0 ? 1.0 : 0.0;
    return m;
}

double risk_fraction(const CorrelationMap& actual, const CorrelationMap& predicted) {
    require(actual.rho.size() == predicted.rho.size() && !actual.rho.empty(), "risk_fraction: maps are not aligned");
    std::size_t risky = 0;
    for (std::size_t k = 0; k < actual.rho.size(); ++k)
        if (d_stat(actual.rho[k], predicted.rho[k]) < 0.0) ++risky;
    return static_cast<double>(risky) / static_cast<double>(actual.rho.size());
}

bool iso_match(double train_iso, double test_iso) {
    return 2.0 * train_iso >= test_iso && train_iso <= 2.0 * test_iso;
}

void PredictorRegistry::add(PredictorModel model) {
    require(model.training_iso > 0.0, "predictor ISO must be positive");
    const auto [it, inserted] = models_.emplace(model.training_iso, model);
    (void)it;
    require(inserted, "a predictor for ISO " + format_sig(model.training_iso) + " is already registered");
}

const PredictorModel& select_predictor(const PredictorRegistry& registry, double test_iso) {
    require(test_iso > 0.0, "test ISO must be positive");
    const PredictorModel* best = nullptr;
    double best_dist = 0.0;
    double nearest_iso = 0.0, nearest_dist = INFINITY;
    for (const auto& [iso, model] : registry.models()) {
        const double dist = std::abs(std::log2(iso / test_iso));
        if (dist < nearest_dist - 1e-12) {
            nearest_dist = dist;
            nearest_iso = iso;
        }
        if (!iso_match(iso, test_iso)) continue;
        // ascending ISO order, so a tie keeps the lower ISO
        if (!best || dist < best_dist - 1e-12) {
            best = &model;
            best_dist = dist;
        }
    }
    if (!best) {
        std::string msg = "no predictor within one stop of ISO " + format_sig(test_iso);
        if (!registry.empty()) msg += " (nearest available: ISO " + format_sig(nearest_iso) + ")";
        fail(ErrorKind::NoMatchingPredictor, msg);
    }
    return *best;
}

std::string predictor_to_text(const PredictorModel& model) {
    std::ostringstream os;
    for (int k = 0; k < 5; ++k) os << 'w' << k << '=' << format_sig(model.weights[k], 17) << '\n';
    os << "training_iso=" << format_sig(model.training_iso, 17) << '\n'
       << "n_training_blocks=" << model.n_training_blocks << '\n'
       << "train_rmse=" << format_sig(model.train_rmse, 17) << '\n';
    return os.str();
}

PredictorModel predictor_from_text(const std::string& text) {
    const auto kv = parse_key_values(text);
    PredictorModel m;
    for (int k = 0; k < 5; ++k) m.weights[k] = kv_double(kv, "w" + std::to_string(k));
    m.training_iso = kv_double(kv, "training_iso");
    m.n_training_blocks = static_cast<std::size_t>(kv_double(kv, "n_training_blocks"));
    m.train_rmse = kv_double(kv, "train_rmse");
    return m;
}

std::vector<TrainingSample> samples_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "f_I,f_T,f_S,f_TI,rho") fail(ErrorKind::Io, "training CSV must start with header f_I,f_T,f_S,f_TI,rho");
    std::vector<TrainingSample> out;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        std::istringstream row(line);
        std::array<double, 5> v{};
        for (auto& x : v) {
            std::string cell;
            if (!std::getline(row, cell, ',')) fail(ErrorKind::Io, "short training CSV row: '" + line + "'");
            try {
                x = std::stod(cell);
            } catch (const std::logic_error&) {
                fail(ErrorKind::Io, "bad number in training CSV row: '" + line + "'");
            }
        }
        out.push_back({{v[0], v[1], v[2], v[3]}, v[4]});
    }
    return out;
}

std::string samples_to_csv(const std::vector<TrainingSample>& samples) {
    std::ostringstream os;
    os << "f_I,f_T,f_S,f_TI,rho\n";
    for (const auto& s : samples)
        os << format_sig(s.features.f_I) << ',' << format_sig(s.features.f_T) << ',' << format_sig(s.features.f_S)
           << ',' << format_sig(s.features.f_TI) << ',' << format_sig(s.rho) << '\n';
    return os.str();
}

}  // namespace isoprnu

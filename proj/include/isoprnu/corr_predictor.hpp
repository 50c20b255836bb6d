#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "isoprnu/plane.hpp"
#include "isoprnu/prnu_core.hpp"

namespace isoprnu {

struct FeatureVector {
    double f_I = 0.0;   // attenuated intensity
    double f_T = 0.0;   // texture, 1 = flat
    double f_S = 0.0;   // fraction of flattened (near-zero local variance) pixels
    double f_TI = 0.0;  // texture-intensity product
};

/// att(I) = I below 0.98, Gaussian roll-off above it.
double attenuate_intensity(double intensity);

/// Per-pixel 1/(1 + var5(F(q))) with F the 4-neighbour Laplacian; replicate borders,
/// 5x5 variance windows clipped at the plane edge.
Plane texture_weights(const Plane& block);

FeatureVector extract_features(const Plane& block);

/// Features of every block of a correlation-map grid.
std::vector<FeatureVector> block_features(const Plane& image, std::size_t block, std::size_t stride);

struct TrainingSample {
    FeatureVector features;
    double rho = 0.0;
};

struct PredictorModel {
    std::array<double, 5> weights{};  // bias, f_I, f_T, f_S, f_TI
    double training_iso = 0.0;
    std::size_t n_training_blocks = 0;
    double train_rmse = 0.0;
};

inline constexpr std::size_t kMinTrainingSamples = 25;

PredictorModel train(const std::vector<TrainingSample>& samples, double iso);
/// Affine prediction clamped to [0, 1].
double predict(const PredictorModel& model, const FeatureVector& fv);

/// Predicted map over the same block grid as the reference map.
CorrelationMap predict_map(const PredictorModel& model, const Plane& image, const CorrelationMap& grid);

struct PredictionMetrics {
    double r2 = 0.0;  // floored at 0
    double rmse = 0.0;
};
PredictionMetrics metrics(const std::vector<double>& pred, const std::vector<double>& actual);

/// 2 rho - rho_hat; negative values put an authentic block at risk of a false detection.
inline double d_stat(double rho, double rho_hat) { return 2.0 * rho - rho_hat; }
double risk_fraction(const CorrelationMap& actual, const CorrelationMap& predicted);

/// One-stop rule: train_iso in [test_iso/2, 2 test_iso].
bool iso_match(double train_iso, double test_iso);

class PredictorRegistry {
public:
    /// Throws invalid-parameter if a model with the same training ISO is present.
    void add(PredictorModel model);
    const std::map<double, PredictorModel>& models() const noexcept { return models_; }
    bool empty() const noexcept { return models_.empty(); }

private:
    std::map<double, PredictorModel> models_;
};

/// Closest one-stop-compatible model in log2 distance; ties go to the lower ISO.
/// Throws no-matching-predictor naming the nearest available ISO.
const PredictorModel& select_predictor(const PredictorRegistry& registry, double test_iso);

// File formats --------------------------------------------------------------

std::string predictor_to_text(const PredictorModel& model);
PredictorModel predictor_from_text(const std::string& text);
/// CSV with header f_I,f_T,f_S,f_TI,rho.
std::vector<TrainingSample> samples_from_csv(const std::string& text);
std::string samples_to_csv(const std::vector<TrainingSample>& samples);

}  // namespace isoprnu

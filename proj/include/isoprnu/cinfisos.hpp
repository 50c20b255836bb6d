#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "isoprnu/plane.hpp"

namespace isoprnu {

/// d x d crop of one or three channels.
struct Patch {
    std::vector<Plane> channels;
    std::string source;
    std::size_t row = 0;
    std::size_t col = 0;

    std::size_t size() const noexcept { return channels.empty() ? 0 : channels.front().width(); }
    /// Throws invalid-parameter unless square, 1 or 3 equal channels and d >= 8.
    void validate() const;
};

/// Dark/saturated guard bands on the [0,1] scale.
struct QualifyThresholds {
    double lambda1 = 10.0 / 255.0;
    double lambda2 = 250.0 / 255.0;
    double lambda_tau = 0.5;
};

enum class ThresholdMode { OneSided, Absolute };

struct CinfisosParams {
    std::size_t patch = 32;     // d
    std::size_t m = 50;         // query patches kept
    std::size_t n = 5;          // nearest candidates per set
    double lambda_dct = 13.0315;  // on the 0-255 scale
    ThresholdMode mode = ThresholdMode::OneSided;
    QualifyThresholds thresholds;
    double prefilter = 0.1;     // mean-intensity window; <= 0 disables it

    void validate() const;
};

/// True unless every channel has more than lambda_tau * d^2 pixels outside [lambda1, lambda2].
bool qualify_patch(const Patch& p, double lambda1, double lambda2, double lambda_tau);
inline bool qualify_patch(const Patch& p, const QualifyThresholds& t) {
    return qualify_patch(p, t.lambda1, t.lambda2, t.lambda_tau);
}

/// Mean texture weight over pixels and channels; 1 for a flat patch, lower with more texture.
double texture_feature(const Patch& p);

/// Non-overlapping d x d partition of an image, one Patch per grid cell, row-major.
std::vector<Patch> partition(const std::vector<Plane>& image, const std::string& source, std::size_t d);

struct PatchSelection {
    std::vector<Patch> patches;
    /// Fewer than m patches qualified; all qualified ones are returned.
    bool warning = false;
};

/// The m qualified patches with the largest texture feature; ties by (row, col).
PatchSelection select_query_patches(const std::vector<Plane>& image, const std::string& source, std::size_t d,
                                    std::size_t m, const QualifyThresholds& thresholds);

/// Hard threshold on coefficients: x kept when x > lambda (or |x| > lambda), else 0.
Plane hard_threshold(const Plane& coeffs, double lambda, ThresholdMode mode = ThresholdMode::OneSided);

/// Orthonormal 2-D DCT with hard thresholding, applied on whatever scale the input has.
Plane dct_hard_threshold(const Plane& channel, double lambda_dct, ThresholdMode mode = ThresholdMode::OneSided);

/// Sum over channels of the L2 distance between thresholded transforms (inputs on [0,1],
/// thresholding on the 0-255 scale).
double patch_distance(const Patch& a, const Patch& b, double lambda_dct,
                      ThresholdMode mode = ThresholdMode::OneSided);

/// Per-channel variance of q minus its thresholded-DCT low-pass, in 0-255 squared units.
std::vector<double> patch_noise_variances(const Patch& p, double lambda_dct,
                                          ThresholdMode mode = ThresholdMode::OneSided);

/// Sum over channels of |query noise variance - mean match noise variance|.
double noise_distance(const Patch& query, const std::vector<Patch>& matches, double lambda_dct,
                      ThresholdMode mode = ThresholdMode::OneSided);

/// Immutable set of candidate patches sharing one ISO label, with their thresholded
/// transforms and noise variances precomputed.
class CandidateSet {
public:
    CandidateSet(double iso, std::vector<Patch> patches, double lambda_dct,
                 ThresholdMode mode = ThresholdMode::OneSided);

    double iso() const noexcept { return iso_; }
    double lambda_dct() const noexcept { return lambda_; }
    ThresholdMode mode() const noexcept { return mode_; }
    const std::vector<Patch>& patches() const noexcept { return patches_; }
    std::size_t size() const noexcept { return patches_.size(); }

    struct Entry {
        std::vector<std::vector<std::pair<std::uint32_t, double>>> coeffs;  // sparse, index-sorted
        std::vector<double> noise_var;
        double mean = 0.0;
    };
    const Entry& entry(std::size_t i) const { return entries_[i]; }
    Entry prepare(const Patch& p) const;

    /// Indices sorted by mean intensity, for the pre-filter.
    const std::vector<std::size_t>& by_mean() const noexcept { return by_mean_; }

private:
    double iso_;
    double lambda_;
    ThresholdMode mode_;
    std::vector<Patch> patches_;
    std::vector<Entry> entries_;
    std::vector<std::size_t> by_mean_;
};

/// All qualified patches of the given images (no texture selection).
CandidateSet build_candidate_set(double iso, const std::vector<std::vector<Plane>>& images,
                                 const std::vector<std::string>& sources, const CinfisosParams& params);

struct NearestResult {
    std::vector<std::size_t> indices;
    std::vector<double> distances;
    /// The searchable pool held fewer than n patches.
    bool warning = false;
};

struct SearchOptions {
    double prefilter = 0.0;   // mean-intensity window, <= 0 searches exhaustively
    std::string exclude_source;  // candidates from this source are skipped
};

/// n smallest patch distances; ties by patch index.
NearestResult nearest_patches(const Patch& query, const CandidateSet& set, std::size_t n,
                              const SearchOptions& options = {});

struct IsoVote {
    std::map<double, std::size_t> votes;
    double winner = 0.0;
    std::size_t query_patch_count = 0;
    bool warning = false;

    double share(double iso) const;
};

/// Each selected query patch votes for the set with the smallest noise distance; plurality
/// wins, ties toward the lower ISO. Throws inference-failed when no query patch qualifies.
IsoVote infer_iso(const std::vector<Plane>& query, const std::string& query_source,
                  const std::vector<CandidateSet>& sets, const CinfisosParams& params);

// File formats --------------------------------------------------------------

struct ManifestEntry {
    std::string path;
    double iso = 0.0;
};
/// One "path<TAB>iso" per line; '#' starts a comment line.
std::vector<ManifestEntry> parse_manifest(const std::string& text);
std::string manifest_text(const std::vector<ManifestEntry>& entries);

struct PatchIndexRecord {
    std::uint32_t source = 0;
    std::uint32_t row = 0;
    std::uint32_t col = 0;
    double f_T = 0.0;
};
/// "PIDX", LE u32 count, then per patch LE u32 source, row, col and f64 f_T.
void write_patch_index(const std::string& path, const std::vector<PatchIndexRecord>& records);
std::vector<PatchIndexRecord> read_patch_index(const std::string& path);
/// Records for a set whose patch sources are positions in `sources`.
std::vector<PatchIndexRecord> patch_index(const CandidateSet& set, const std::vector<std::string>& sources);

std::string iso_vote_csv(const IsoVote& vote);

}  // namespace isoprnu

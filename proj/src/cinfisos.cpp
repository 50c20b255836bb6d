#include "isoprnu/cinfisos.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "isoprnu/corr_predictor.hpp"
#include "isoprnu/error.hpp"
#include "isoprnu/format.hpp"
#include "isoprnu/parallel.hpp"
#include "isoprnu/transforms.hpp"

namespace isoprnu {

namespace {

constexpr double kScale = 255.0;

using Sparse = std::vector<std::pair<std::uint32_t, double>>;

double threshold(double x, double lambda, ThresholdMode mode) {
    const bool keep = mode == ThresholdMode::OneSided ? x > lambda : std::abs(x) > lambda;
    return keep ? x : 0.0;
}

Plane scaled(const Plane& p) {
    Plane out = p;
    for (double& x : out.values()) x *= kScale;
    return out;
}

// Thresholded coefficients (0-255 scale) and the variance of what the threshold removed.
std::pair<Plane, double> analyse_channel(const Plane& channel, double lambda, ThresholdMode mode) {
    const Plane q = scaled(channel);
    const Plane kept = dct_hard_threshold(q, lambda, mode);
    const Plane low = idct2(kept);
    Plane diff(q.width(), q.height());
    for (std::size_t i = 0; i < q.size(); ++i) diff[i] = q[i] - low[i];
    return {kept, variance(diff)};
}

Sparse to_sparse(const Plane& coeffs) {
    Sparse s;
    for (std::size_t i = 0; i < coeffs.size(); ++i)
        if (coeffs[i] != 0.0) s.emplace_back(static_cast<std::uint32_t>(i), coeffs[i]);
    return s;
}

double sparse_distance(const Sparse& a, const Sparse& b) {
    double acc = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() || j < b.size()) {
        if (j == b.size() || (i < a.size() && a[i].first < b[j].first)) {
            acc += a[i].second * a[i].second;
            ++i;
        } else if (i == a.size() || b[j].first < a[i].first) {
            acc += b[j].second * b[j].second;
            ++j;
        } else {
            const double d = a[i].second - b[j].second;
            acc += d * d;
            ++i;
            ++j;
        }
    }
    return std::sqrt(acc);
}

double entry_distance(const CandidateSet::Entry& a, const CandidateSet::Entry& b) {
    require(a.coeffs.size() == b.coeffs.size(), "patches differ in channel count");
    double d = 0.0;
    for (std::size_t ch = 0; ch < a.coeffs.size(); ++ch) d += sparse_distance(a.coeffs[ch], b.coeffs[ch]);
    return d;
}

double patch_mean(const Patch& p) {
    double m = 0.0;
    for (const auto& ch : p.channels) m += mean(ch);
    return m / static_cast<double>(p.channels.size());
}

void check_same_geometry(const Patch& a, const Patch& b) {
    a.validate();
    b.validate();
    require(a.channels.size() == b.channels.size() && a.size() == b.size(), "patches differ in size or channels");
}

template <class T>
void put_le(std::ostream& out, T v) {
    unsigned char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
    out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <class T>
T get_le(std::istream& in, const std::string& path) {
    unsigned char buf[sizeof(T)];
    in.read(reinterpret_cast<char*>(buf), sizeof(T));
    if (in.gcount() != sizeof(T)) fail(ErrorKind::Io, "truncated patch index '" + path + "'");
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return v;
}

}  // namespace

void Patch::validate() const {
    require(channels.size() == 1 || channels.size() == 3, "a patch has 1 or 3 channels");
    const std::size_t d = channels.front().width();
    require(d >= 8, "patch size must be at least 8");
    for (const auto& ch : channels) require(ch.width() == d && ch.height() == d, "patch channels must be square and equal");
}

void CinfisosParams::validate() const {
    require(patch >= 8, "patch size must be at least 8");
    require(m >= 1 && n >= 1, "m and n must be positive");
    require(lambda_dct >= 0.0, "DCT threshold must be non-negative");
    require(thresholds.lambda1 < thresholds.lambda2, "lambda1 must be below lambda2");
    require(thresholds.lambda_tau >= 0.0 && thresholds.lambda_tau <= 1.0, "lambda_tau must lie in [0,1]");
}

bool qualify_patch(const Patch& p, double lambda1, double lambda2, double lambda_tau) {
    require(lambda1 < lambda2, "lambda1 must be below lambda2");
    p.validate();
    const double limit = lambda_tau * static_cast<double>(p.channels.front().size());
    for (const auto& ch : p.channels) {
        std::size_t bad = 0;
        for (double v : ch.values()) bad += (v < lambda1 || v > lambda2) ? 1 : 0;
        if (static_cast<double>(bad) <= limit) return true;
    }
    return false;
}

double texture_feature(const Patch& p) {
    p.validate();
    double acc = 0.0;
    for (const auto& ch : p.channels) acc += mean(texture_weights(ch));
    return acc / static_cast<double>(p.channels.size());
}

std::vector<Patch> partition(const std::vector<Plane>& image, const std::string& source, std::size_t d) {
    require(!image.empty(), "image has no channels");
    require(d >= 8, "patch size must be at least 8");
    const Plane& first = image.front();
    for (const auto& ch : image) require(ch.same_shape(first), "image channels differ in size");
    std::vector<Patch> out;
    for (std::size_t r = 0; r + d <= first.height(); r += d)
        for (std::size_t c = 0; c + d <= first.width(); c += d) {
            Patch p{{}, source, r, c};
            for (const auto& ch : image) p.channels.push_back(ch.crop(r, c, d, d));
            out.push_back(std::move(p));
        }
    return out;
}

PatchSelection select_query_patches(const std::vector<Plane>& image, const std::string& source, std::size_t d,
                                    std::size_t m, const QualifyThresholds& thresholds) {
    require(m >= 1, "m must be positive");
    require(thresholds.lambda1 < thresholds.lambda2, "lambda1 must be below lambda2");
    auto all = partition(image, source, d);
    std::vector<std::pair<double, std::size_t>> ranked;
    std::vector<double> ft(all.size());
    std::vector<std::uint8_t> ok(all.size());
    parallel_for(all.size(), [&](std::size_t i) {
        ok[i] = qualify_patch(all[i], thresholds);
        if (ok[i]) ft[i] = texture_feature(all[i]);
    });
    for (std::size_t i = 0; i < all.size(); ++i)
        if (ok[i]) ranked.emplace_back(ft[i], i);
    // partition order is row-major, so index order is (row, col) order
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    PatchSelection sel;
    sel.warning = ranked.size() < m;
    const std::size_t keep = std::min(m, ranked.size());
    for (std::size_t k = 0; k < keep; ++k) sel.patches.push_back(std::move(all[ranked[k].second]));
    return sel;
}

Plane hard_threshold(const Plane& coeffs, double lambda, ThresholdMode mode) {
    Plane c = coeffs;
    for (double& x : c.values()) x = threshold(x, lambda, mode);
    return c;
}

Plane dct_hard_threshold(const Plane& channel, double lambda_dct, ThresholdMode mode) {
    return hard_threshold(dct2(channel), lambda_dct, mode);
}

double patch_distance(const Patch& a, const Patch& b, double lambda_dct, ThresholdMode mode) {
    check_same_geometry(a, b);
    double d = 0.0;
    for (std::size_t ch = 0; ch < a.channels.size(); ++ch) {
        const Plane ta = dct_hard_threshold(scaled(a.channels[ch]), lambda_dct, mode);
        const Plane tb = dct_hard_threshold(scaled(b.channels[ch]), lambda_dct, mode);
        double acc = 0.0;
        for (std::size_t i = 0; i < ta.size(); ++i) acc += (ta[i] - tb[i]) * (ta[i] - tb[i]);
        d += std::sqrt(acc);
    }
    return d;
}

std::vector<double> patch_noise_variances(const Patch& p, double lambda_dct, ThresholdMode mode) {
    p.validate();
    std::vector<double> v;
    for (const auto& ch : p.channels) v.push_back(analyse_channel(ch, lambda_dct, mode).second);
    return v;
}

double noise_distance(const Patch& query, const std::vector<Patch>& matches, double lambda_dct, ThresholdMode mode) {
    if (matches.empty()) fail(ErrorKind::InvalidParameter, "noise distance needs at least one match");
    const auto qv = patch_noise_variances(query, lambda_dct, mode);
    std::vector<double> avg(qv.size(), 0.0);
    for (const auto& m : matches) {
        check_same_geometry(query, m);
        const auto mv = patch_noise_variances(m, lambda_dct, mode);
        for (std::size_t ch = 0; ch < avg.size(); ++ch) avg[ch] += mv[ch];
    }
    double d = 0.0;
    for (std::size_t ch = 0; ch < qv.size(); ++ch)
        d += std::abs(qv[ch] - avg[ch] / static_cast<double>(matches.size()));
    return d;
}

CandidateSet::CandidateSet(double iso, std::vector<Patch> patches, double lambda_dct, ThresholdMode mode)
    : iso_(iso), lambda_(lambda_dct), mode_(mode), patches_(std::move(patches)) {
    require(iso > 0.0, "candidate set ISO must be positive");
    require(!patches_.empty(), "candidate set is empty");
    for (const auto& p : patches_) check_same_geometry(p, patches_.front());
    entries_.resize(patches_.size());
    parallel_for(patches_.size(), [&](std::size_t i) { entries_[i] = prepare(patches_[i]); });
    by_mean_.resize(patches_.size());
    std::iota(by_mean_.begin(), by_mean_.end(), std::size_t{0});
    std::stable_sort(by_mean_.begin(), by_mean_.end(),
                     [&](std::size_t a, std::size_t b) { return entries_[a].mean < entries_[b].mean; });
}

CandidateSet::Entry CandidateSet::prepare(const Patch& p) const {
    p.validate();
    Entry e;
    for (const auto& ch : p.channels) {
        auto [coeffs, var] = analyse_channel(ch, lambda_, mode_);
        e.coeffs.push_back(to_sparse(coeffs));
        e.noise_var.push_back(var);
    }
    e.mean = patch_mean(p);
    return e;
}

CandidateSet build_candidate_set(double iso, const std::vector<std::vector<Plane>>& images,
                                 const std::vector<std::string>& sources, const CinfisosParams& params) {
    params.validate();
    require(images.size() == sources.size(), "one source name per image is required");
    std::vector<Patch> patches;
    for (std::size_t i = 0; i < images.size(); ++i)
        for (auto& p : partition(images[i], sources[i], params.patch))
            if (qualify_patch(p, params.thresholds)) patches.push_back(std::move(p));
    if (patches.empty())
        fail(ErrorKind::EmptyResult, "no qualified patches for the ISO " + format_sig(iso) + " candidate set");
    return CandidateSet(iso, std::move(patches), params.lambda_dct, params.mode);
}

namespace {

NearestResult nearest_entries(const CandidateSet::Entry& q, const CandidateSet& set, std::size_t n,
                              const SearchOptions& options) {
    require(n >= 1, "n must be positive");
    auto eligible = [&](std::size_t i) {
        return options.exclude_source.empty() || set.patches()[i].source != options.exclude_source;
    };
    std::vector<std::size_t> pool;
    if (options.prefilter > 0.0) {
        const auto& order = set.by_mean();
        auto lo = std::lower_bound(order.begin(), order.end(), q.mean - options.prefilter,
                                   [&](std::size_t i, double v) { return set.entry(i).mean < v; });
        for (auto it = lo; it != order.end() && set.entry(*it).mean <= q.mean + options.prefilter; ++it)
            if (eligible(*it)) pool.push_back(*it);
        std::sort(pool.begin(), pool.end());
    }
    if (pool.size() < n) {
        pool.clear();
        for (std::size_t i = 0; i < set.size(); ++i)
            if (eligible(i)) pool.push_back(i);
    }
    std::vector<std::pair<double, std::size_t>> scored;
    scored.reserve(pool.size());
    for (std::size_t i : pool) scored.emplace_back(entry_distance(q, set.entry(i)), i);
    NearestResult res;
    res.warning = scored.size() < n;
    const std::size_t keep = std::min(n, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep), scored.end());
    for (std::size_t k = 0; k < keep; ++k) {
        res.distances.push_back(scored[k].first);
        res.indices.push_back(scored[k].second);
    }
    return res;
}

}  // namespace

NearestResult nearest_patches(const Patch& query, const CandidateSet& set, std::size_t n,
                              const SearchOptions& options) {
    check_same_geometry(query, set.patches().front());
    return nearest_entries(set.prepare(query), set, n, options);
}

double IsoVote::share(double iso) const {
    if (query_patch_count == 0) return 0.0;
    const auto it = votes.find(iso);
    return it == votes.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(query_patch_count);
}

IsoVote infer_iso(const std::vector<Plane>& query, const std::string& query_source,
                  const std::vector<CandidateSet>& sets, const CinfisosParams& params) {
    params.validate();
    require(sets.size() >= 2, "ISO inference needs at least two candidate sets");
    std::vector<const CandidateSet*> order;
    for (const auto& s : sets) order.push_back(&s);
    std::sort(order.begin(), order.end(), [](const auto* a, const auto* b) { return a->iso() < b->iso(); });
    for (std::size_t k = 1; k < order.size(); ++k)
        require(order[k]->iso() != order[k - 1]->iso(), "candidate sets must have distinct ISO labels");

    const auto sel = select_query_patches(query, query_source, params.patch, params.m, params.thresholds);
    if (sel.patches.empty()) fail(ErrorKind::InferenceFailed, "the query image has no qualified patches");

    const SearchOptions opts{params.prefilter, query_source};
    constexpr std::size_t kNoVote = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> choice(sel.patches.size(), kNoVote);
    std::vector<std::uint8_t> short_pool(sel.patches.size(), 0);
    parallel_for(sel.patches.size(), [&](std::size_t i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < order.size(); ++k) {
            const CandidateSet& set = *order[k];
            check_same_geometry(sel.patches[i], set.patches().front());
            const auto q = set.prepare(sel.patches[i]);
            const auto near = nearest_entries(q, set, params.n, opts);
            short_pool[i] |= near.warning ? 1 : 0;
            if (near.indices.empty()) continue;
            double d = 0.0;
            for (std::size_t ch = 0; ch < q.noise_var.size(); ++ch) {
                double avg = 0.0;
                for (std::size_t idx : near.indices) avg += set.entry(idx).noise_var[ch];
                d += std::abs(q.noise_var[ch] - avg / static_cast<double>(near.indices.size()));
            }
            if (d < best) {
                best = d;
                choice[i] = k;
            }
        }
    });

    IsoVote vote;
    vote.warning = sel.warning;
    for (const auto* s : order) vote.votes[s->iso()] = 0;
    for (std::size_t i = 0; i < choice.size(); ++i) {
        if (choice[i] == kNoVote) fail(ErrorKind::InferenceFailed, "no candidate patches left to match after source exclusion");
        ++vote.votes[order[choice[i]]->iso()];
        vote.warning = vote.warning || short_pool[i];
    }
    vote.query_patch_count = choice.size();
    std::size_t best = 0;
    for (const auto& [iso, count] : vote.votes)
        if (count > best) {  // ascending ISO, strict comparison keeps the lower label on ties
            best = count;
            vote.winner = iso;
        }
    return vote;
}

std::vector<ManifestEntry> parse_manifest(const std::string& text) {
    std::vector<ManifestEntry> out;
    std::istringstream in(text);
    std::size_t lineno = 0;
    for (std::string line; std::getline(in, line);) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        const auto tab = line.rfind('\t');
        if (tab == std::string::npos || tab == 0)
            fail(ErrorKind::Io, "manifest line " + std::to_string(lineno) + " is not 'path<TAB>iso'");
        ManifestEntry e{line.substr(0, tab), 0.0};
        try {
            e.iso = std::stod(line.substr(tab + 1));
        } catch (const std::logic_error&) {
            fail(ErrorKind::Io, "manifest line " + std::to_string(lineno) + " has a bad ISO value");
        }
        if (!(e.iso > 0.0)) fail(ErrorKind::Io, "manifest line " + std::to_string(lineno) + " has a non-positive ISO");
        out.push_back(std::move(e));
    }
    return out;
}

std::string manifest_text(const std::vector<ManifestEntry>& entries) {
    std::ostringstream os;
    for (const auto& e : entries) os << e.path << '\t' << format_sig(e.iso) << '\n';
    return os.str();
}

void write_patch_index(const std::string& path, const std::vector<PatchIndexRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::Io, "cannot open '" + path + "' for writing");
    out.write("PIDX", 4);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(records.size()));
    for (const auto& r : records) {
        put_le(out, r.source);
        put_le(out, r.row);
        put_le(out, r.col);
        put_le(out, r.f_T);
    }
}

std::vector<PatchIndexRecord> read_patch_index(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open '" + path + "'");
    char magic[4];
    in.read(magic, 4);
    if (in.gcount() != 4 || std::string(magic, 4) != "PIDX") fail(ErrorKind::Io, "'" + path + "' is not a patch index");
    const auto count = get_le<std::uint32_t>(in, path);
    std::vector<PatchIndexRecord> out(count);
    for (auto& r : out) {
        r.source = get_le<std::uint32_t>(in, path);
        r.row = get_le<std::uint32_t>(in, path);
        r.col = get_le<std::uint32_t>(in, path);
        r.f_T = get_le<double>(in, path);
    }
    return out;
}

std::vector<PatchIndexRecord> patch_index(const CandidateSet& set, const std::vector<std::string>& sources) {
    std::vector<PatchIndexRecord> out;
    for (const auto& p : set.patches()) {
        const auto it = std::find(sources.begin(), sources.end(), p.source);
        require(it != sources.end(), "patch source '" + p.source + "' is not listed");
        out.push_back({static_cast<std::uint32_t>(it - sources.begin()), static_cast<std::uint32_t>(p.row),
                       static_cast<std::uint32_t>(p.col), texture_feature(p)});
    }
    return out;
}

std::string iso_vote_csv(const IsoVote& vote) {
    std::ostringstream os;
    os << "iso,votes\n";
    for (const auto& [iso, count] : vote.votes) os << format_sig(iso) << ',' << count << '\n';
    os << "winner," << format_sig(vote.winner) << '\n';
    return os.str();
}

}  // namespace isoprnu

#include "isoprnu/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <type_traits>
#include <map>
#include <ostream>
#include <sstream>

#include "isoprnu/cinfisos.hpp"
#include "isoprnu/corr_predictor.hpp"
#include "isoprnu/error.hpp"
#include "isoprnu/forgery_eval.hpp"
#include "isoprnu/format.hpp"
#include "isoprnu/image_io.hpp"
#include "isoprnu/noise_fit.hpp"
#include "isoprnu/parallel.hpp"
#include "isoprnu/prnu_core.hpp"

namespace fs = std::filesystem;

namespace isoprnu {

SensorProfile parse_profile(const std::string& text) {
    SensorProfile p;
    for (const auto& [key, value] : parse_key_values(text)) {
        const std::map<std::string, std::string> one{{key, value}};
        if (key == "width")
            p.width = static_cast<std::size_t>(kv_double(one, key));
        else if (key == "height")
            p.height = static_cast<std::size_t>(kv_double(one, key));
        else if (key == "sigma_k")
            p.sigma_k = kv_double(one, key);
        else if (key == "gain")
            p.gain = kv_double(one, key);
        else if (key == "read_noise")
            p.read_noise = kv_double(one, key);
        else if (key == "pedestal")
            p.pedestal = kv_double(one, key);
        else if (key == "eta_bar")
            p.eta_bar = kv_double(one, key);
        else if (key == "seed")
            p.seed = static_cast<std::uint64_t>(kv_double(one, key));
        else
            fail(ErrorKind::InvalidParameter, "unknown profile key '" + key + "'");
    }
    p.validate();
    return p;
}

std::string profile_text(const SensorProfile& p) {
    std::ostringstream os;
    os << "width=" << p.width << "\nheight=" << p.height << "\nsigma_k=" << format_sig(p.sigma_k)
       << "\ngain=" << format_sig(p.gain) << "\nread_noise=" << format_sig(p.read_noise)
       << "\npedestal=" << format_sig(p.pedestal) << "\neta_bar=" << format_sig(p.eta_bar) << "\nseed=" << p.seed
       << '\n';
    return os.str();
}

namespace {

// Records every configurable option with a getter for its resolved value, so the echo
// reproduces a run exactly (doubles at 17 significant digits).
class Echo {
public:
    template <class T>
    CLI::Option* opt(CLI::App* sub, const std::string& name, T& var, const std::string& desc) {
        auto* o = sub->add_option(name, var, desc)->capture_default_str();
        items_.push_back({sub, name.substr(2), [&var] { return render(var); }});
        return o;
    }
    CLI::Option* flag(CLI::App* sub, const std::string& name, bool& var, const std::string& desc) {
        auto* o = sub->add_flag(name, var, desc);
        items_.push_back({sub, name.substr(2), [&var] { return render(var); }});
        return o;
    }

    std::string text(const CLI::App* root, const CLI::App* used) const {
        std::string s;
        for (const auto* app : {root, used}) {
            if (app != root) s += "\n[" + app->get_name() + "]\n";
            for (const auto& it : items_)
                if (it.app == app) s += it.key + '=' + it.value() + '\n';
        }
        return s;
    }

private:
    struct Item {
        const CLI::App* app;
        std::string key;
        std::function<std::string()> value;
    };
    std::vector<Item> items_;

    static std::string render(const std::string& v) {
        std::string q = "\"";
        for (char ch : v) {
            if (ch == '"' || ch == '\\') q += '\\';
            q += ch;
        }
        return q + '"';
    }
    static std::string render(bool v) { return v ? "true" : "false"; }
    static std::string render(double v) { return format_sig(v, 17); }
    template <class T>
        requires std::is_integral_v<T>
    static std::string render(T v) { return std::to_string(v); }
    template <class T>
    static std::string render(const std::vector<T>& v) {
        std::string s = "[";
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + render(v[i]);
        return s + ']';
    }
};

struct Globals {
    std::uint64_t seed = 1;
    unsigned threads = 1;
    std::string out_dir = ".";
};

struct Io {
    std::ostream& out;
    std::ostream& err;
    const Globals& g;

    std::string path(const std::string& p) const {
        const fs::path q(p);
        return q.is_absolute() ? p : (fs::path(g.out_dir) / q).string();
    }
};

struct PipelineOpts {
    CameraPipeline pipe;
    void add(Echo& echo, CLI::App* sub) {
        echo.opt(sub, "--base-gain", pipe.base_gain, "Gain at which in-camera noise reduction starts");
        echo.opt(sub, "--nr-exponent", pipe.nr_exponent, "Noise-reduction exponent (0 = raw noise)");
        echo.opt(sub, "--white-level", pipe.white_level, "Raw value mapped to full scale");
        echo.opt(sub, "--gamma", pipe.gamma, "Tone curve exponent");
        echo.opt(sub, "--quant", pipe.quant_strength, "Block-DCT quantization strength (0 = off)");
    }
};

struct GridOpts {
    std::size_t block = 128;
    std::size_t stride = 0;
    void add(Echo& echo, CLI::App* sub) {
        echo.opt(sub, "--block", block, "Correlation block size");
        echo.opt(sub, "--stride", stride, "Block stride (0 = block size)");
    }
    std::size_t step() const { return stride == 0 ? block : stride; }
};

struct ModelOpts {
    std::vector<std::string> models;
    double iso = 0.0;
    bool strict = false;
    void add(Echo& echo, CLI::App* sub) {
        echo.opt(sub, "--model", models, "Predictor model file(s)")->required();
        echo.opt(sub, "--iso", iso, "Test ISO used to select among several models (0 = from the image header)");
        echo.flag(sub, "--strict", strict, "Enforce the one-stop rule against the image's recorded ISO");
    }

    PredictorModel choose(const Image& img) const {
        PredictorRegistry reg;
        for (const auto& m : models) reg.add(predictor_from_text(read_text(m)));
        if (strict) {
            if (!img.iso) fail(ErrorKind::InvalidParameter, "--strict needs an image with a recorded ISO (# iso=...)");
            return select_predictor(reg, *img.iso);
        }
        if (iso > 0.0) return select_predictor(reg, iso);
        if (reg.models().size() == 1) return reg.models().begin()->second;
        if (img.iso) return select_predictor(reg, *img.iso);
        fail(ErrorKind::InvalidParameter, "several models given; pass --iso or use an image with a recorded ISO");
    }
};

struct CinfOpts {
    CinfisosParams p;
    bool absolute = false;
    void add(Echo& echo, CLI::App* sub) {
        echo.opt(sub, "--patch", p.patch, "Patch size d");
        echo.opt(sub, "--m", p.m, "Query patches kept");
        echo.opt(sub, "--n", p.n, "Nearest candidate patches per set");
        echo.opt(sub, "--lambda-dct", p.lambda_dct, "DCT hard threshold on the 0-255 scale");
        echo.flag(sub, "--abs-threshold", absolute, "Threshold |x| instead of x");
        echo.opt(sub, "--lambda1", p.thresholds.lambda1, "Dark limit");
        echo.opt(sub, "--lambda2", p.thresholds.lambda2, "Saturation limit");
        echo.opt(sub, "--lambda-tau", p.thresholds.lambda_tau, "Bad-pixel fraction limit");
        echo.opt(sub, "--prefilter", p.prefilter, "Mean-intensity search window (0 = exhaustive)");
    }
    CinfisosParams resolved() const {
        CinfisosParams q = p;
        q.mode = absolute ? ThresholdMode::Absolute : ThresholdMode::OneSided;
        return q;
    }
};

Plane load_plane(const std::string& path) { return read_plane(path); }

std::optional<double> common_iso(const std::vector<Image>& imgs) {
    if (imgs.empty() || !imgs.front().iso) return std::nullopt;
    for (const auto& i : imgs)
        if (!i.iso || *i.iso != *imgs.front().iso) return std::nullopt;
    return imgs.front().iso;
}

CorrelationMap observed_map(const Plane& image, const Fingerprint& fp, const GridOpts& grid) {
    require(image.same_shape(fp.values), "image and fingerprint differ in size");
    const Residual res = standardize(residual(image), true);
    return block_corr_map(res, fp, grid.block, grid.step());
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"PRNU forensics toolkit: simulation, noise fitting, fingerprints, ISO inference, forgery evaluation",
                 "isoprnu"};
    app.require_subcommand(1);
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.set_config("--config", "", "Read options from a TOML/INI file");
    Globals g;
    Echo echo;
    echo.opt(&app, "--seed", g.seed, "Random seed");
    app.add_option("--threads", g.threads, "Worker threads")->capture_default_str()->configurable(false);
    echo.opt(&app, "--out-dir", g.out_dir, "Directory for outputs and the config echo");

    // simulate
    auto* sim = app.add_subcommand("simulate", "Render one or more simulated exposures");
    std::string sim_profile, sim_scene = "flat:0.5", sim_out = "sim.pgm";
    std::size_t sim_count = 1;
    double sim_iso = 0.0;
    PipelineOpts sim_pipe;
    echo.opt(sim, "--profile", sim_profile, "Sensor profile (key=value)")->required();
    echo.opt(sim, "--scene", sim_scene, "flat:V, ramp:LO:HI or natural:SEED");
    echo.opt(sim, "--out", sim_out, "Output 16-bit PGM (index appended when --count > 1)");
    echo.opt(sim, "--count", sim_count, "Number of exposures")->check(CLI::PositiveNumber);
    echo.opt(sim, "--iso", sim_iso, "ISO label written to the header (0 = from gain)");
    sim_pipe.add(echo, sim);

    // fit-noise
    auto* fit = app.add_subcommand("fit-noise", "Fit the quadratic residual-variance law");
    std::vector<std::string> fit_images;
    std::size_t fit_block = 64;
    double fit_fixed_a = -1.0;
    std::string fit_points = "stat_points.csv", fit_out = "noise_fit.csv";
    echo.opt(fit, "--image", fit_images, "Input PGM(s)")->required();
    echo.opt(fit, "--block", fit_block, "Block size");
    echo.opt(fit, "--fixed-a", fit_fixed_a, "Hold the quadratic coefficient fixed (negative = free)")
        ->capture_default_str();
    echo.opt(fit, "--points", fit_points, "StatPoint CSV output");
    echo.opt(fit, "--out", fit_out, "Fit CSV output");

    // gain-slope
    auto* slope = app.add_subcommand("gain-slope", "Sweep gains on the simulator and fit log B against log gain");
    std::string slope_profile, slope_out = "gain_slope.csv";
    std::vector<double> slope_gains{1e-5, 2e-5, 4e-5, 8e-5, 16e-5};
    std::size_t slope_frames = 4, slope_block = 32;
    double slope_fixed_a = -1.0;
    echo.opt(slope, "--profile", slope_profile, "Sensor profile (key=value)")->required();
    echo.opt(slope, "--gains", slope_gains, "Gains to sweep");
    echo.opt(slope, "--frames", slope_frames, "Staircase exposures per gain");
    echo.opt(slope, "--block", slope_block, "Block size");
    echo.opt(slope, "--fixed-a", slope_fixed_a, "Quadratic coefficient (negative = sigma_k^2)");
    echo.opt(slope, "--out", slope_out, "Output CSV");

    // fingerprint
    auto* fpc = app.add_subcommand("fingerprint", "Estimate a reference fingerprint");
    std::vector<std::string> fp_images;
    std::string fp_out = "fingerprint.prnu", fp_mode = "average";
    double fp_sigma0 = kDefaultSigma0;
    echo.opt(fpc, "--image", fp_images, "Input images")->required();
    echo.opt(fpc, "--out", fp_out, "Fingerprint file");
    echo.opt(fpc, "--mode", fp_mode, "average or ml")->check(CLI::IsMember({"average", "ml"}));
    echo.opt(fpc, "--sigma0", fp_sigma0, "Denoiser noise level");

    // corrmap
    auto* cm = app.add_subcommand("corrmap", "Block correlation map between an image residual and a fingerprint");
    std::string cm_image, cm_fp, cm_out = "corrmap.csv", cm_heat = "corrmap.pgm";
    GridOpts cm_grid;
    echo.opt(cm, "--image", cm_image, "Input image")->required();
    echo.opt(cm, "--fingerprint", cm_fp, "Fingerprint file")->required();
    echo.opt(cm, "--out", cm_out, "CSV output");
    echo.opt(cm, "--heatmap", cm_heat, "8-bit heatmap output");
    cm_grid.add(echo, cm);

    // autocorr
    auto* ac = app.add_subcommand("autocorr", "Residual autocorrelation and spreading radius");
    std::string ac_image, ac_out = "autocorr.pgm", ac_text = "autocorr.txt";
    double ac_tau = 0.05;
    echo.opt(ac, "--image", ac_image, "Input image")->required();
    echo.opt(ac, "--tau", ac_tau, "Spreading threshold");
    echo.opt(ac, "--out", ac_out, "Centred autocorrelation image");
    echo.opt(ac, "--report", ac_text, "Text report");

    // features
    auto* feat = app.add_subcommand("features", "Per-block content features with observed correlations");
    std::vector<std::string> feat_images;
    std::string feat_fp, feat_out = "samples.csv";
    GridOpts feat_grid;
    echo.opt(feat, "--image", feat_images, "Input image(s)")->required();
    echo.opt(feat, "--fingerprint", feat_fp, "Fingerprint file")->required();
    echo.opt(feat, "--out", feat_out, "Training sample CSV");
    feat_grid.add(echo, feat);

    // train-predictor
    auto* tr = app.add_subcommand("train-predictor", "Fit a correlation predictor");
    std::vector<std::string> tr_samples;
    double tr_iso = 0.0;
    std::string tr_out = "predictor.txt";
    echo.opt(tr, "--samples", tr_samples, "Training sample CSV(s)")->required();
    echo.opt(tr, "--iso", tr_iso, "Training ISO")->required();
    echo.opt(tr, "--out", tr_out, "Model file");

    // predict
    auto* pr = app.add_subcommand("predict", "Predicted correlation map for an image");
    std::string pr_image, pr_out = "predicted.csv";
    GridOpts pr_grid;
    ModelOpts pr_model;
    echo.opt(pr, "--image", pr_image, "Input image")->required();
    echo.opt(pr, "--out", pr_out, "CSV output");
    pr_grid.add(echo, pr);
    pr_model.add(echo, pr);

    // infer-iso
    auto* inf = app.add_subcommand("infer-iso", "Infer the ISO of a query image from candidate sets");
    std::string inf_query, inf_sets, inf_out = "iso_votes.csv";
    CinfOpts inf_opts;
    echo.opt(inf, "--query", inf_query, "Query image")->required();
    echo.opt(inf, "--sets", inf_sets, "Candidate manifest (path<TAB>iso)")->required();
    echo.opt(inf, "--out", inf_out, "Vote CSV");
    inf_opts.add(echo, inf);

    // forge
    auto* fg = app.add_subcommand("forge", "Splice a donor patch into the centre of a region");
    std::string fg_image, fg_out = "forged.pgm", fg_truth = "truth.pgm";
    ForgerySpec fg_spec;
    echo.opt(fg, "--image", fg_image, "Input image")->required();
    echo.opt(fg, "--region", fg_spec.region, "Region size");
    echo.opt(fg, "--patch", fg_spec.patch, "Tampered patch size");
    echo.opt(fg, "--region-row", fg_spec.region_row, "Region top row");
    echo.opt(fg, "--region-col", fg_spec.region_col, "Region left column");
    echo.opt(fg, "--donor-row", fg_spec.donor_row, "Donor top row");
    echo.opt(fg, "--donor-col", fg_spec.donor_col, "Donor left column");
    echo.opt(fg, "--out", fg_out, "Forged 16-bit PGM");
    echo.opt(fg, "--truth", fg_truth, "Truth mask PGM");

    // detect and roc share inputs
    struct DetectOpts {
        std::string image, fp, truth;
        GridOpts grid;
        ModelOpts model;
    };
    DetectOpts det_o, roc_o;
    auto add_detect_inputs = [&echo](CLI::App* sub, DetectOpts& o) {
        echo.opt(sub, "--image", o.image, "Image under test")->required();
        echo.opt(sub, "--fingerprint", o.fp, "Camera fingerprint")->required();
        o.grid.add(echo, sub);
        o.model.add(echo, sub);
    };
    auto* dt = app.add_subcommand("detect", "Forgery detection mask");
    add_detect_inputs(dt, det_o);
    DetectorParams det_p;
    double det_s0 = 0.0, det_s1 = 0.0;
    std::string det_out = "mask.pgm", det_overlay = "overlay.ppm", det_report = "detect.txt";
    echo.opt(dt, "--beta", det_p.beta, "MRF interaction");
    echo.opt(dt, "--p0", det_p.p0, "Tamper prior");
    echo.opt(dt, "--sigma0", det_s0, "Tampered correlation std (0 = 1/block)");
    echo.opt(dt, "--sigma1", det_s1, "Authentic correlation std (0 = 2 sigma0)");
    echo.opt(dt, "--max-iters", det_p.max_icm_iters, "ICM sweep limit");
    echo.opt(dt, "--truth", det_o.truth, "Truth mask; enables metrics and the overlay");
    echo.opt(dt, "--out", det_out, "Mask output");
    echo.opt(dt, "--overlay", det_overlay, "Overlay output (needs --truth)");
    echo.opt(dt, "--report", det_report, "Metrics report (needs --truth)");

    auto* rc = app.add_subcommand("roc", "Sweep detector parameters and report the ROC envelope");
    add_detect_inputs(rc, roc_o);
    std::string roc_out = "roc.csv", roc_env = "roc_envelope.csv";
    double roc_max_fpr = 0.2;
    echo.opt(rc, "--truth", roc_o.truth, "Truth mask")->required();
    echo.opt(rc, "--out", roc_out, "All runs CSV");
    echo.opt(rc, "--envelope", roc_env, "Envelope CSV");
    echo.opt(rc, "--max-fpr", roc_max_fpr, "Envelope fpr limit");

    // fp-quality
    auto* fq = app.add_subcommand("fp-quality", "Correlation of a fingerprint with the simulator's true PRNU");
    std::string fq_fp, fq_profile, fq_out = "fp_quality.txt";
    echo.opt(fq, "--fingerprint", fq_fp, "Fingerprint file")->required();
    echo.opt(fq, "--profile", fq_profile, "Sensor profile that generated the images")->required();
    echo.opt(fq, "--out", fq_out, "Report");

    for (auto* sub : app.get_subcommands({})) sub->configurable();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }

    set_default_threads(std::max(1u, g.threads));
    const Io io{out, err, g};
    CLI::App* used = app.get_subcommands().front();

    try {
        fs::create_directories(g.out_dir);
        write_text(io.path(used->get_name() + ".config.toml"), echo.text(&app, used));

        if (used == sim) {
            const SensorProfile prof = parse_profile(read_text(sim_profile));
            sim_pipe.pipe.validate();
            const Scene scene = parse_scene(sim_scene, prof.width, prof.height);
            const PrnuField prnu = gen_prnu_field(prof.width, prof.height, prof.sigma_k, prof.seed);
            const double iso = sim_iso > 0.0 ? sim_iso : gain_to_iso(prof.gain);
            for (std::size_t i = 0; i < sim_count; ++i) {
                const Exposure e = render_camera_image(scene, prnu, prof, sim_pipe.pipe, g.seed + i);
                std::string name = sim_out;
                if (sim_count > 1) {
                    const auto dot = name.rfind('.');
                    char idx[16];
                    std::snprintf(idx, sizeof idx, "_%03zu", i);
                    name.insert(dot == std::string::npos ? name.size() : dot, idx);
                }
                write_pgm16(io.path(name), e.plane, iso);
                if (e.clip_warning())
                    err << "warning: " << name << ": " << format_sig(100.0 * e.clip_fraction, 4) << "% of pixels clipped\n";
            }
        } else if (used == fit) {
            std::vector<StatPoint> pts;
            for (const auto& path : fit_images) {
                auto p = estimate_block_stats(load_plane(path), fit_block);
                pts.insert(pts.end(), p.begin(), p.end());
            }
            const QuadraticFit q = fit_fixed_a >= 0.0 ? fit_quadratic_fixed_A(pts, fit_fixed_a) : fit_quadratic(pts);
            write_text(io.path(fit_points), stat_points_csv(pts));
            write_text(io.path(fit_out), quadratic_fit_csv(q));
            out << quadratic_fit_csv(q);
        } else if (used == slope) {
            SensorProfile prof = parse_profile(read_text(slope_profile));
            const double a = slope_fixed_a >= 0.0 ? slope_fixed_a : prof.sigma_k * prof.sigma_k;
            const PrnuField prnu = gen_prnu_field(prof.width, prof.height, prof.sigma_k, prof.seed);
            // staircase: one flat intensity per column of blocks
            const std::size_t steps = prof.width / slope_block;
            require(steps >= 3, "gain-slope needs at least 3 blocks across the sensor width");
            Scene scene{Plane(prof.width, prof.height)};
            for (std::size_t r = 0; r < prof.height; ++r)
                for (std::size_t c = 0; c < prof.width; ++c)
                    scene.phi(r, c) = 0.05 + 0.9 * static_cast<double>(std::min(c / slope_block, steps - 1)) /
                                                 static_cast<double>(steps - 1);
            std::vector<std::pair<double, double>> pairs;
            std::ostringstream csv;
            csv << "gain,B\n";
            for (std::size_t k = 0; k < slope_gains.size(); ++k) {
                prof.gain = slope_gains[k];
                prof.validate();
                std::vector<StatPoint> pts;
                for (std::size_t f = 0; f < slope_frames; ++f) {
                    const auto e = simulate_exposure(scene, prnu, prof, g.seed + 1000 * k + f);
                    auto p = estimate_block_stats(e.plane, slope_block);
                    pts.insert(pts.end(), p.begin(), p.end());
                }
                const auto q = fit_quadratic_fixed_A(pts, a);
                pairs.emplace_back(prof.gain, q.B);
                csv << format_sig(prof.gain) << ',' << format_sig(q.B) << '\n';
            }
            csv << "slope," << format_sig(gain_slope(pairs)) << '\n';
            write_text(io.path(slope_out), csv.str());
            out << csv.str();
        } else if (used == fpc) {
            std::vector<Image> imgs;
            std::vector<Residual> res;
            std::vector<Plane> planes;
            for (const auto& path : fp_images) {
                imgs.push_back(read_image(path));
                planes.push_back(imgs.back().channels.front());
            }
            res.resize(planes.size());
            for (std::size_t i = 0; i < planes.size(); ++i) res[i] = residual(planes[i], fp_sigma0);
            Fingerprint fp = fp_mode == "ml" ? estimate_fingerprint_ml(planes, res) : estimate_fingerprint(res);
            fp.iso_label = common_iso(imgs);
            write_fingerprint(io.path(fp_out), fp);
        } else if (used == cm) {
            const Fingerprint fp = read_fingerprint(cm_fp);
            const auto map = observed_map(load_plane(cm_image), fp, cm_grid);
            write_text(io.path(cm_out), corr_map_csv(map));
            write_pgm8(io.path(cm_heat), corr_map_heatmap(map));
            out << "mean_rho," << format_sig(map_mean(map)) << '\n';
        } else if (used == ac) {
            const Plane acp = autocorrelation(standardize(residual(load_plane(ac_image))));
            const std::size_t radius = spreading_radius(acp, ac_tau);
            Plane shown = center_lags(acp);
            for (double& x : shown.values()) x = 0.5 + 0.5 * x;
            write_pgm8(io.path(ac_out), shown);
            const std::string report = "tau=" + format_sig(ac_tau) + "\nradius=" + std::to_string(radius) + '\n';
            write_text(io.path(ac_text), report);
            out << report;
        } else if (used == feat) {
            const Fingerprint fp = read_fingerprint(feat_fp);
            std::vector<TrainingSample> samples;
            for (const auto& path : feat_images) {
                const Plane img = load_plane(path);
                const auto map = observed_map(img, fp, feat_grid);
                const auto fv = block_features(img, feat_grid.block, feat_grid.step());
                for (std::size_t k = 0; k < fv.size(); ++k)
                    if (!map.degenerate[k]) samples.push_back({fv[k], map.rho[k]});
            }
            write_text(io.path(feat_out), samples_to_csv(samples));
        } else if (used == tr) {
            std::vector<TrainingSample> samples;
            for (const auto& path : tr_samples) {
                auto s = samples_from_csv(read_text(path));
                samples.insert(samples.end(), s.begin(), s.end());
            }
            const PredictorModel m = train(samples, tr_iso);
            write_text(io.path(tr_out), predictor_to_text(m));
            out << predictor_to_text(m);
        } else if (used == pr) {
            const Image img = read_image(pr_image);
            const PredictorModel model = pr_model.choose(img);
            const Plane& plane = img.channels.front();
            CorrelationMap grid = block_corr_map(plane, plane, pr_grid.block, pr_grid.step());
            const auto map = predict_map(model, plane, grid);
            write_text(io.path(pr_out), corr_map_csv(map));
            out << "model_iso," << format_sig(model.training_iso) << '\n';
        } else if (used == inf) {
            const CinfisosParams params = inf_opts.resolved();
            params.validate();
            const auto entries = parse_manifest(read_text(inf_sets));
            std::map<double, std::vector<std::string>> groups;
            for (const auto& e : entries) groups[e.iso].push_back(e.path);
            std::vector<CandidateSet> sets;
            for (const auto& [iso, paths] : groups) {
                std::vector<std::vector<Plane>> imgs;
                for (const auto& p : paths) imgs.push_back(read_image(p).channels);
                sets.push_back(build_candidate_set(iso, imgs, paths, params));
                write_patch_index(io.path("set_iso" + format_sig(iso) + ".pidx"), patch_index(sets.back(), paths));
            }
            const auto vote = infer_iso(read_image(inf_query).channels, inf_query, sets, params);
            if (vote.warning) err << "warning: fewer query or candidate patches than requested\n";
            write_text(io.path(inf_out), iso_vote_csv(vote));
            out << iso_vote_csv(vote);
        } else if (used == fg) {
            const Image img = read_image(fg_image);
            const Forgery f = make_forgery(img.channels.front(), fg_spec);
            write_pgm16(io.path(fg_out), f.forged, img.iso);
            write_mask(io.path(fg_truth), f.truth);
        } else if (used == dt || used == rc) {
            const DetectOpts& o = used == dt ? det_o : roc_o;
            const Image img = read_image(o.image);
            const PredictorModel model = o.model.choose(img);
            const Plane& plane = img.channels.front();
            const auto map = observed_map(plane, read_fingerprint(o.fp), o.grid);
            const auto pred = predict_map(model, plane, map);
            std::optional<Plane> truth;
            if (!o.truth.empty()) truth = load_plane(o.truth);
            if (used == dt) {
                if (det_s0 > 0.0) det_p.sigma0 = det_s0;
                if (det_s1 > 0.0) det_p.sigma1 = det_s1;
                const Plane mask = detect(map, pred, det_p);
                write_mask(io.path(det_out), mask);
                if (truth) {
                    const auto rates = pixel_metrics(mask, *truth);
                    const std::string rep = "tpr=" + format_sig(rates.tpr) + "\nfpr=" + format_sig(rates.fpr) + '\n';
                    write_text(io.path(det_report), rep);
                    write_overlay(io.path(det_overlay), plane, mask, *truth);
                    out << rep;
                }
            } else {
                const auto grid = default_roc_grid();
                std::vector<RocRun> runs(grid.size());
                parallel_for(grid.size(), [&](std::size_t i) {
                    DetectorParams p;
                    p.beta = grid[i].first;
                    p.p0 = grid[i].second;
                    const auto rates = pixel_metrics(detect(map, pred, p), *truth);
                    runs[i] = {p.beta, p.p0, rates.fpr, rates.tpr};
                });
                write_text(io.path(roc_out), roc_csv(runs));
                const auto env = roc_envelope(runs, roc_max_fpr);
                write_text(io.path(roc_env), roc_csv(env));
                out << roc_csv(env);
            }
        } else if (used == fq) {
            const SensorProfile prof = parse_profile(read_text(fq_profile));
            const Fingerprint fp = read_fingerprint(fq_fp);
            const PrnuField k = gen_prnu_field(prof.width, prof.height, prof.sigma_k, prof.seed);
            require(fp.values.same_shape(k.values), "fingerprint and profile differ in size");
            const std::string rep = "n_images=" + std::to_string(fp.n_images) +
                                    "\ncorrelation=" + format_sig(pearson(fp.values.values(), k.values.values())) + '\n';
            write_text(io.path(fq_out), rep);
            out << rep;
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return e.kind() == ErrorKind::InvalidParameter ? 2 : 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace isoprnu

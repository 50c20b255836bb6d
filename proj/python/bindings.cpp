#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>

#include "isoprnu/cinfisos.hpp"
#include "isoprnu/corr_predictor.hpp"
#include "isoprnu/error.hpp"
#include "isoprnu/forgery_eval.hpp"
#include "isoprnu/noise_fit.hpp"
#include "isoprnu/prnu_core.hpp"
#include "isoprnu/sensor_sim.hpp"

namespace py = pybind11;
using namespace isoprnu;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Plane to_plane(const Array& a) {
    if (a.ndim() != 2) throw py::value_error("expected a 2-D array");
    const auto h = static_cast<std::size_t>(a.shape(0));
    const auto w = static_cast<std::size_t>(a.shape(1));
    return Plane(w, h, std::vector<double>(a.data(), a.data() + w * h));
}

Array to_array(const Plane& p) {
    Array out({p.height(), p.width()});
    std::copy(p.values().begin(), p.values().end(), out.mutable_data());
    return out;
}

std::vector<Plane> to_channels(const py::list& images) {
    std::vector<Plane> out;
    for (auto item : images) out.push_back(to_plane(item.cast<Array>()));
    return out;
}

Array map_array(const CorrelationMap& m) {
    Array out({m.rows, m.cols});
    std::copy(m.rho.begin(), m.rho.end(), out.mutable_data());
    return out;
}

FeatureVector feature_row(const double* r) { return {r[0], r[1], r[2], r[3]}; }

Array features_array(const std::vector<FeatureVector>& fvs) {
    Array out({fvs.size(), std::size_t{4}});
    double* d = out.mutable_data();
    for (const auto& f : fvs) {
        *d++ = f.f_I;
        *d++ = f.f_T;
        *d++ = f.f_S;
        *d++ = f.f_TI;
    }
    return out;
}

}  // namespace

PYBIND11_MODULE(_isoprnu, m) {
    m.doc() = "Sensor noise simulation, PRNU correlation prediction and ISO-aware forgery detection";

    py::register_exception<Error>(m, "IsoprnuError", PyExc_RuntimeError);

    // simulation
    m.def("flat_scene", [](std::size_t w, std::size_t h, double phi) { return to_array(flat_scene(w, h, phi).phi); },
          py::arg("width"), py::arg("height"), py::arg("phi"));
    m.def("natural_scene",
          [](std::size_t w, std::size_t h, std::uint64_t seed) { return to_array(natural_scene(w, h, seed).phi); },
          py::arg("width"), py::arg("height"), py::arg("seed"));
    m.def("prnu_field",
          [](std::size_t w, std::size_t h, double sigma_k, std::uint64_t seed) {
              return to_array(gen_prnu_field(w, h, sigma_k, seed).values);
          },
          py::arg("width"), py::arg("height"), py::arg("sigma_k") = 0.007, py::arg("seed") = 1);
    m.def(
        "simulate",
        [](const Array& scene, double gain, double sigma_k, double read_noise, double pedestal,
           std::uint64_t prnu_seed, std::uint64_t noise_seed) {
            Scene s{to_plane(scene)};
            SensorProfile profile;
            profile.width = s.phi.width();
            profile.height = s.phi.height();
            profile.gain = gain;
            profile.sigma_k = sigma_k;
            profile.read_noise = read_noise;
            profile.pedestal = pedestal;
            profile.seed = prnu_seed;
            profile.validate();
            const auto prnu = gen_prnu_field(profile.width, profile.height, sigma_k, prnu_seed);
            Exposure e;
            {
                py::gil_scoped_release release;
                e = simulate_exposure(s, prnu, profile, noise_seed);
            }
            return py::make_tuple(to_array(e.plane), e.clip_fraction);
        },
        "Raw exposure of a scene; returns (image, clipped fraction).", py::arg("scene"), py::arg("gain") = 2e-5,
        py::arg("sigma_k") = 0.007, py::arg("read_noise") = 0.0, py::arg("pedestal") = 0.0,
        py::arg("prnu_seed") = 1, py::arg("noise_seed") = 1);
    m.def("develop", [](const Array& raw, double gamma, double q) { return to_array(develop(to_plane(raw), gamma, q)); },
          py::arg("raw"), py::arg("gamma") = 2.2, py::arg("quant_strength") = 1.0);

    // noise model
    m.def(
        "block_stats",
        [](const Array& image, std::size_t block) {
            const auto pts = estimate_block_stats(to_plane(image), block);
            Array out({pts.size(), std::size_t{2}});
            double* d = out.mutable_data();
            for (const auto& p : pts) {
                *d++ = p.phi_hat;
                *d++ = p.var_hat;
            }
            return out;
        },
        "Flat-block (intensity, variance) pairs as an (n, 2) array.", py::arg("image"), py::arg("block") = 32);
    m.def(
        "fit_quadratic",
        [](const Array& points, std::optional<double> fixed_a) {
            if (points.ndim() != 2 || points.shape(1) != 2) throw py::value_error("expected an (n, 2) array");
            std::vector<StatPoint> pts(static_cast<std::size_t>(points.shape(0)));
            for (std::size_t i = 0; i < pts.size(); ++i) {
                pts[i].phi_hat = points.at(i, 0);
                pts[i].var_hat = points.at(i, 1);
            }
            const auto fit = fixed_a ? fit_quadratic_fixed_A(pts, *fixed_a) : fit_quadratic(pts);
            py::dict d;
            d["A"] = fit.A;
            d["B"] = fit.B;
            d["C"] = fit.C;
            d["rmse"] = fit.rmse;
            d["n"] = fit.n_points;
            return d;
        },
        py::arg("points"), py::arg("fixed_a") = py::none());
    m.def("gain_slope", &gain_slope, "Log-log slope of B against ISO.", py::arg("iso_b_pairs"));

    // PRNU
    m.def("residual", [](const Array& image, double sigma0) { return to_array(residual(to_plane(image), sigma0).values); },
          py::arg("image"), py::arg("sigma0") = kDefaultSigma0);
    m.def(
        "fingerprint",
        [](const py::list& images) {
            std::vector<Plane> planes = to_channels(images);
            Fingerprint fp;
            {
                py::gil_scoped_release release;
                std::vector<Residual> res;
                for (const auto& p : planes) res.push_back(residual(p));
                fp = estimate_fingerprint(res);
            }
            return to_array(fp.values);
        },
        "Standardized fingerprint from a list of images.", py::arg("images"));

    py::class_<CorrelationMap>(m, "CorrelationMap")
        .def_readonly("rows", &CorrelationMap::rows)
        .def_readonly("cols", &CorrelationMap::cols)
        .def_readonly("block", &CorrelationMap::block)
        .def_readonly("stride", &CorrelationMap::stride)
        .def_property_readonly("rho", &map_array)
        .def("mean", &map_mean);
    m.def(
        "corr_map",
        [](const Array& image, const Array& fingerprint, std::size_t block, std::size_t stride) {
            const Plane img = to_plane(image);
            const Residual res = standardize(residual(img));
            return block_corr_map(res.values, to_plane(fingerprint), block, stride);
        },
        "Block correlations between an image's standardized residual and a fingerprint.", py::arg("image"),
        py::arg("fingerprint"), py::arg("block") = 128, py::arg("stride") = 128);

    // predictor
    m.def("block_features",
          [](const Array& image, std::size_t block, std::size_t stride) {
              return features_array(block_features(to_plane(image), block, stride));
          },
          "Features (intensity, texture, saturation, texture*intensity) per block.", py::arg("image"),
          py::arg("block"), py::arg("stride"));

    py::class_<PredictorModel>(m, "Predictor")
        .def_readonly("weights", &PredictorModel::weights)
        .def_readonly("training_iso", &PredictorModel::training_iso)
        .def_readonly("n_training_blocks", &PredictorModel::n_training_blocks)
        .def_readonly("train_rmse", &PredictorModel::train_rmse)
        .def("predict",
             [](const PredictorModel& model, const Array& features) {
                 if (features.ndim() != 2 || features.shape(1) != 4) throw py::value_error("expected an (n, 4) array");
                 const auto n = static_cast<std::size_t>(features.shape(0));
                 Array out(n);
                 for (std::size_t i = 0; i < n; ++i)
                     out.mutable_data()[i] = predict(model, feature_row(features.data() + 4 * i));
                 return out;
             })
        .def("predict_map", [](const PredictorModel& model, const Array& image, const CorrelationMap& grid) {
            return predict_map(model, to_plane(image), grid);
        });
    m.def(
        "train_predictor",
        [](const Array& features, const Array& rho, double iso) {
            if (features.ndim() != 2 || features.shape(1) != 4) throw py::value_error("expected an (n, 4) array");
            if (rho.size() != features.shape(0)) throw py::value_error("rho length differs from feature rows");
            std::vector<TrainingSample> samples(static_cast<std::size_t>(rho.size()));
            for (std::size_t i = 0; i < samples.size(); ++i)
                samples[i] = {feature_row(features.data() + 4 * i), rho.data()[i]};
            return train(samples, iso);
        },
        py::arg("features"), py::arg("rho"), py::arg("iso"));

    // ISO inference
    m.def(
        "infer_iso",
        [](const py::list& query, const std::vector<std::pair<double, py::list>>& sets, std::size_t patch,
           std::size_t m_patches, std::size_t n, bool absolute) {
            CinfisosParams params;
            params.patch = patch;
            params.m = m_patches;
            params.n = n;
            params.mode = absolute ? ThresholdMode::Absolute : ThresholdMode::OneSided;
            params.validate();
            const auto q = to_channels(query);
            std::vector<std::pair<double, std::vector<std::vector<Plane>>>> raw;
            for (const auto& [iso, images] : sets) {
                std::vector<std::vector<Plane>> imgs;
                for (auto item : images) imgs.push_back({to_plane(item.cast<Array>())});
                raw.emplace_back(iso, std::move(imgs));
            }
            IsoVote vote;
            {
                py::gil_scoped_release release;
                std::vector<CandidateSet> built;
                for (std::size_t s = 0; s < raw.size(); ++s) {
                    std::vector<std::string> sources;
                    for (std::size_t i = 0; i < raw[s].second.size(); ++i)
                        sources.push_back("set" + std::to_string(s) + "_" + std::to_string(i));
                    built.push_back(build_candidate_set(raw[s].first, raw[s].second, sources, params));
                }
                vote = infer_iso(q, "query", built, params);
            }
            return py::make_tuple(vote.winner, vote.votes);
        },
        "Infer the ISO of a query image (list of channels) from labelled candidate image sets; returns "
        "(winner, {iso: votes}).",
        py::arg("query"), py::arg("sets"), py::arg("patch") = 32, py::arg("m") = 50, py::arg("n") = 5,
        py::arg("absolute") = false);

    // forgery detection
    m.def(
        "make_forgery",
        [](const Array& image, std::size_t region, std::size_t patch, std::size_t region_row, std::size_t region_col,
           std::size_t donor_row, std::size_t donor_col) {
            ForgerySpec spec{region, patch, region_row, region_col, donor_row, donor_col};
            const auto f = make_forgery(to_plane(image), spec);
            return py::make_tuple(to_array(f.forged), to_array(f.truth));
        },
        py::arg("image"), py::arg("region"), py::arg("patch"), py::arg("region_row"), py::arg("region_col"),
        py::arg("donor_row"), py::arg("donor_col"));
    m.def(
        "detect",
        [](const CorrelationMap& map, const CorrelationMap& predicted, double beta, double p0,
           std::optional<double> sigma0, std::optional<double> sigma1) {
            DetectorParams params;
            params.beta = beta;
            params.p0 = p0;
            params.sigma0 = sigma0;
            params.sigma1 = sigma1;
            return to_array(detect(map, predicted, params));
        },
        "Pixel mask (1 = tampered) from measured and predicted correlation maps.", py::arg("map"),
        py::arg("predicted"), py::arg("beta") = 10.0, py::arg("p0") = 0.01, py::arg("sigma0") = py::none(),
        py::arg("sigma1") = py::none());
    m.def(
        "pixel_metrics",
        [](const Array& mask, const Array& truth) {
            const auto r = pixel_metrics(to_plane(mask), to_plane(truth));
            return py::make_tuple(r.fpr, r.tpr);
        },
        "(fpr, tpr) of a mask against a truth mask.", py::arg("mask"), py::arg("truth"));
}

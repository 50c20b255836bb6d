#pragma once

#include <cstdint>
#include <string>

#include "isoprnu/plane.hpp"

namespace isoprnu {

/// Ground-truth camera parameters. All intensities are normalized to [0,1].
struct SensorProfile {
    std::size_t width = 512;
    std::size_t height = 512;
    double sigma_k = 0.007;   // PRNU factor std
    double gain = 2e-5;       // camera gain g, proportional to ISO
    double read_noise = 0.0;  // s
    double pedestal = 0.0;    // p0
    double eta_bar = 1.0;     // mean photo-electron conversion rate, documentary only
    std::uint64_t seed = 1;   // seeds the PRNU field

    /// Throws invalid-parameter on any violated invariant.
    void validate() const;

    /// g^2 s^2 - g^2 p0
    double offset_variance() const noexcept { return gain * gain * (read_noise * read_noise - pedestal); }
    /// Residual variance of a flat block at expected intensity phi.
    double residual_variance(double phi) const noexcept {
        return phi * phi * sigma_k * sigma_k + gain * phi + offset_variance();
    }
};

struct PrnuField {
    Plane values;
    double sigma_k = 0.0;
};

/// Expected pixel intensity phi per pixel, in gain-applied output units.
struct Scene {
    Plane phi;
};

struct Exposure {
    Plane plane;
    double clip_fraction = 0.0;
    /// Set when more than 1% of pixels were clipped; the variance law assumes none are.
    bool clip_warning() const noexcept { return clip_fraction > 0.01; }
};

PrnuField gen_prnu_field(std::size_t width, std::size_t height, double sigma_k, std::uint64_t seed);

/// I = (1+k) phi + N(0, g phi + g^2 s^2 - g^2 p0), clipped to [0,1].
Exposure simulate_exposure(const Scene& scene, const PrnuField& prnu, const SensorProfile& profile,
                           std::uint64_t seed);

/// Power law x^(1/gamma) followed by 8x8 block DCT quantization with steps
/// quant_strength * (JPEG luminance table)/255. quant_strength == 0 skips quantization.
Plane develop(const Plane& raw, double gamma, double quant_strength);

Plane bayer_subsample(const Plane& raw, int row_offset, int col_offset);

// Scenes -------------------------------------------------------------------

Scene flat_scene(std::size_t width, std::size_t height, double phi);
/// Horizontal ramp from lo (left column) to hi (right column).
Scene ramp_scene(std::size_t width, std::size_t height, double lo, double hi);
/// Synthetic piecewise-smooth content: smooth background, flat and textured shapes,
/// and a few highlight regions bright enough to saturate after the camera's white level.
Scene natural_scene(std::size_t width, std::size_t height, std::uint64_t seed);

/// Parses "flat:V", "ramp:LO:HI" or "natural:SEED".
Scene parse_scene(const std::string& spec, std::size_t width, std::size_t height);

// Camera pipeline ----------------------------------------------------------

/// In-camera processing applied on top of a raw exposure to produce a "JPEG-like" image.
/// Temporal noise is attenuated by (gain/base_gain)^-nr_exponent (capped at 1) to mimic
/// ISO-dependent in-camera noise reduction; the PRNU-modulated signal passes unchanged.
struct CameraPipeline {
    double base_gain = 1e-5;
    double nr_exponent = 0.0;
    double white_level = 1.0;  // raw value mapped to full scale before clipping
    double gamma = 1.0;
    double quant_strength = 0.0;

    void validate() const;
    double noise_attenuation(double gain) const noexcept;
};

/// Raw exposure with in-camera noise reduction, white-level clipping and develop().
Exposure render_camera_image(const Scene& scene, const PrnuField& prnu, const SensorProfile& profile,
                             const CameraPipeline& pipeline, std::uint64_t seed);

}  // namespace isoprnu

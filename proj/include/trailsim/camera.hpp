#pragma once

#include "trailsim/config.hpp"
#include "trailsim/grid.hpp"

#include <cstdint>
#include <vector>

namespace trailsim {

// Per-pixel noise injected before the response chain (power domain, energy
// units) or after it (pixel domain, PV units). Draws are addressed by
// (seed, frame, pixel) so results never depend on evaluation order.
struct NoiseModel {
    NoiseDomain domain = NoiseDomain::pixel;
    double sigma = 0.0;
    std::uint64_t seed = 0;
};

NoiseModel noise_model_from(const SystemConfig& cfg, std::uint64_t seed);

struct SensorFrame {
    Grid pv;                     // role pixel_value, 0..255
    std::uint64_t seed = 0;
    std::uint64_t frame_id = 0;
    std::vector<int> bits;
    std::uint64_t config_hash = 0;
};

// Photon count from received energy plus noise; floored at zero.
double photon_count(double received, double noise, double q_p);

// Photon count -> pixel value on the 0..255 scale. The chain runs sense
// node, source follower, CDS and ADC stages, clips the raw ratio to [0,1]
// and applies display gamma. With normalize_adc the ADC gain is
// raw_max / v_a_ref counts per volt so a full well reaches raw_max.
double pixel_response(double photons, const CameraConfig& cam);

// Analytic derivative of pixel_response. Throws std::domain_error
// ("operating point saturated") outside the unclipped region.
double response_derivative(double photons, const CameraConfig& cam);

// Photon counts at which the response leaves 0 and reaches 255.
double response_floor_photons(const CameraConfig& cam);
double response_ceiling_photons(const CameraConfig& cam);

// Photon count producing a given pixel value strictly inside (0, 255).
double response_inverse_photons(double pv, const CameraConfig& cam);

// Power-domain sigma that reproduces a pixel-domain sigma at operating
// point I (in photons): sigma_n = sigma_prime * Q_p / Phi'(I).
double power_sigma_from_pixel(const SystemConfig& cfg, double sigma_prime,
                              double photons_op);

// Received-energy grid -> noisy pixel-value frame. exposure_gain scales the
// received energy before photon conversion. Deterministic given
// (noise.seed, frame_id) regardless of thread count.
SensorFrame capture_frame(const Grid& received, double exposure_gain,
                          const SystemConfig& cfg, const NoiseModel& noise,
                          std::uint64_t frame_id);

// Noise level estimate from repeated frames of one bit pattern: framewise
// maximum PV, variance-stabilizing transform 2*sqrt(x+3/8), mean removal,
// sample deviation mapped back through the local transform slope.
double estimate_sigma_maxbright(const std::vector<SensorFrame>& frames);

namespace reference {
SensorFrame capture_frame(const Grid& received, double exposure_gain,
                          const SystemConfig& cfg, const NoiseModel& noise,
                          std::uint64_t frame_id);
} // namespace reference

} // namespace trailsim

#include "trailsim/camera.hpp"

#include "trailsim/philox.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace trailsim {

namespace {

double adc_counts_per_volt(const CameraConfig& cam) {
    return cam.normalize_adc ? cam.raw_max / cam.v_a_ref : cam.adc_gain;
}

// Raw ADC ratio before clipping; linear in the photon count.
double raw_ratio(double photons, const CameraConfig& cam) {
    const double v_sense = cam.v_ref - cam.quantum_efficiency * cam.sense_node_gain * photons;
    const double v_amp = cam.v_a_ref - cam.source_follower_gain * v_sense;
    return adc_counts_per_volt(cam) * cam.cds_gain * v_amp / cam.raw_max;
}

double ratio_slope(const CameraConfig& cam) {
    return adc_counts_per_volt(cam) * cam.cds_gain * cam.source_follower_gain *
           cam.quantum_efficiency * cam.sense_node_gain / cam.raw_max;
}

SensorFrame capture_impl(const Grid& received, double exposure_gain,
                         const SystemConfig& cfg, const NoiseModel& noise,
                         std::uint64_t frame_id, bool parallel) {
    received.require_role(GridRole::received, "capture_frame");
    if (noise.sigma < 0.0) throw std::invalid_argument("noise sigma must be >= 0");
    SensorFrame frame;
    frame.pv = Grid(static_cast<Window>(received), GridRole::pixel_value);
    frame.seed = noise.seed;
    frame.frame_id = frame_id;
    frame.config_hash = config_hash(cfg);

    const double q_p = cfg.photon_energy();
    const int h = received.height, w = received.width;
    const std::uint64_t res_x = static_cast<std::uint64_t>(cfg.camera.resolution_x);

#pragma omp parallel for schedule(static) if (parallel)
    for (int row = 0; row < h; ++row) {
        const int y = received.y0 + row;
        for (int col = 0; col < w; ++col) {
            const int x = received.x0 + col;
            const double r = received.at(x, y) * exposure_gain;
            // Cell index in full-sensor coordinates, so the draw a pixel
            // sees does not depend on the ROI placement.
            const std::uint64_t cell = static_cast<std::uint64_t>(y) * res_x + x;
            double pv;
            if (noise.domain == NoiseDomain::power) {
                const double n = noise.sigma > 0.0
                    ? noise.sigma * normal_at(noise.seed, kNoiseStream, frame_id, cell)
                    : 0.0;
                pv = pixel_response(photon_count(r, n, q_p), cfg.camera);
            } else {
                pv = pixel_response(photon_count(r, 0.0, q_p), cfg.camera);
                if (noise.sigma > 0.0)
                    pv += noise.sigma * normal_at(noise.seed, kNoiseStream, frame_id, cell);
                pv = std::min(255.0, std::max(0.0, pv));
            }
            frame.pv.at(x, y) = pv;
        }
    }
    return frame;
}

} // namespace

NoiseModel noise_model_from(const SystemConfig& cfg, std::uint64_t seed) {
    NoiseModel nm;
    nm.domain = cfg.camera.noise_domain;
    nm.seed = seed;
    nm.sigma = nm.domain == NoiseDomain::pixel ? cfg.camera.sigma_n_pixel
                                               : cfg.camera.sigma_n_power;
    return nm;
}

double photon_count(double received, double noise, double q_p) {
    if (q_p <= 0.0) throw std::invalid_argument("photon energy must be positive");
    return std::max(0.0, (received + noise) / q_p);
}

double pixel_response(double photons, const CameraConfig& cam) {
    const double ratio = std::min(1.0, std::max(0.0, raw_ratio(photons, cam)));
    return 255.0 * std::pow(ratio, 1.0 / cam.pixel_gamma);
}

double response_derivative(double photons, const CameraConfig& cam) {
    const double ratio = raw_ratio(photons, cam);
    if (ratio <= 0.0 || ratio >= 1.0)
        throw std::domain_error("operating point saturated");
    return 255.0 / cam.pixel_gamma *
           std::pow(ratio, 1.0 / cam.pixel_gamma - 1.0) * ratio_slope(cam);
}

double response_floor_photons(const CameraConfig& cam) {
    // raw_ratio crosses 0 where the amplified voltage is zero.
    const double v0 = cam.v_ref - cam.v_a_ref / cam.source_follower_gain;
    return v0 / (cam.quantum_efficiency * cam.sense_node_gain);
}

double response_ceiling_photons(const CameraConfig& cam) {
    const double target = cam.raw_max / (adc_counts_per_volt(cam) * cam.cds_gain);
    const double v0 = cam.v_ref - (cam.v_a_ref - target) / cam.source_follower_gain;
    return v0 / (cam.quantum_efficiency * cam.sense_node_gain);
}

double response_inverse_photons(double pv, const CameraConfig& cam) {
    if (pv <= 0.0 || pv >= 255.0)
        throw std::domain_error("operating point saturated");
    const double ratio = std::pow(pv / 255.0, cam.pixel_gamma);
    const double v_amp = ratio * cam.raw_max / (adc_counts_per_volt(cam) * cam.cds_gain);
    const double v_sense = (cam.v_a_ref - v_amp) / cam.source_follower_gain;
    return (cam.v_ref - v_sense) / (cam.quantum_efficiency * cam.sense_node_gain);
}

double power_sigma_from_pixel(const SystemConfig& cfg, double sigma_prime,
                              double photons_op) {
    return sigma_prime * cfg.photon_energy() /
           response_derivative(photons_op, cfg.camera);
}

SensorFrame capture_frame(const Grid& received, double exposure_gain,
                          const SystemConfig& cfg, const NoiseModel& noise,
                          std::uint64_t frame_id) {
    return capture_impl(received, exposure_gain, cfg, noise, frame_id, true);
}

SensorFrame reference::capture_frame(const Grid& received, double exposure_gain,
                                     const SystemConfig& cfg,
                                     const NoiseModel& noise,
                                     std::uint64_t frame_id) {
    return capture_impl(received, exposure_gain, cfg, noise, frame_id, false);
}

double estimate_sigma_maxbright(const std::vector<SensorFrame>& frames) {
    if (frames.size() < 2)
        throw std::invalid_argument("noise estimation needs at least 2 frames");
    std::vector<double> stabilized;
    stabilized.reserve(frames.size());
    double mean_max = 0.0;
    for (const auto& f : frames) {
        double m = 0.0;
        for (double v : f.pv.cells()) m = std::max(m, v);
        mean_max += m;
        stabilized.push_back(2.0 * std::sqrt(m + 0.375));
    }
    mean_max /= static_cast<double>(frames.size());

    double mean = 0.0;
    for (double v : stabilized) mean += v;
    mean /= static_cast<double>(stabilized.size());
    double var = 0.0;
    for (double v : stabilized) var += (v - mean) * (v - mean);
    var /= static_cast<double>(stabilized.size() - 1);

    // Undo the transform: slope of 2*sqrt(x+3/8) at the mean maximum.
    return std::sqrt(var) * std::sqrt(mean_max + 0.375);
}

} // namespace trailsim

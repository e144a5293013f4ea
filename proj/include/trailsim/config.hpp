#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace trailsim {

enum class NoiseDomain { pixel, power };

// Transmitter: LED disk radius, blade mounting radii, OOK segmentation.
struct TxConfig {
    double led_radius = 2.0e-3;                 // m
    std::vector<double> rotation_radii =        // m, innermost..outermost
        {17.5e-3, 24.5e-3, 31.5e-3, 38.5e-3, 45.5e-3, 52.5e-3,
         59.5e-3, 66.5e-3, 73.5e-3, 80.5e-3, 87.5e-3, 94.5e-3};
    double control_angle = 3.14159265358979323846 / 9.0; // rad per bit segment
    double total_power = 0.2;                   // W, per LED under constant drive
    double rotations_per_second = 3.0;
};

// Free-space path plus receiver optics front end.
struct ChannelConfig {
    double distance = 52.0;                     // m
    double path_loss_exponent = 2.0;
    double filter_transmittance = 0.9;
    double fov = 0.2617993877991494;            // rad (15 deg) incidence cutoff
    double lens_gain = 1.0;
    double lambertian_order = 1.0;
    double blur_sigma = 1.5;                    // px
    int kernel_size = 5;                        // odd
    double pupil_area = 0.0;                    // m^2; <=0 -> pi*(f/5.6)^2
};

// Sensor geometry and the photon -> pixel-value response chain.
struct CameraConfig {
    int resolution_x = 4000;
    int resolution_y = 3000;
    double pixel_pitch = 1.85e-6;               // m
    double focal_length = 30.0e-3;              // m
    double quantum_efficiency = 0.5;
    double v_ref = 3.1;                         // V
    double sense_node_gain = 2.8e-4;            // V per electron
    double source_follower_gain = 1.0;
    double v_a_ref = 2.5;                       // V
    double adc_gain = 1.0;
    double cds_gain = 1.0;
    double raw_max = 4095.0;
    double pixel_gamma = 2.2;
    double wavelength = 620.0e-9;               // m
    double luminous_efficacy = 683.0;           // lm/W
    double luminous_efficiency = 0.381;         // V(lambda) at wavelength
    double sigma_n_pixel = 4.065;               // PV units on 0..255
    double sigma_n_power = 0.0;                 // J; <=0 -> derived on demand
    bool normalize_adc = true;                  // adc_gain in counts per volt
    bool auto_exposure = true;                  // per-scenario gain, see render
    double exposure_target = 1.10;              // ring level / full-well
    NoiseDomain noise_domain = NoiseDomain::pixel;
};

// Detection-side knobs: priors, target error rate, ISI neighborhood.
struct AnalysisConfig {
    double prior_one = 0.5;
    // P(b_{j-1}=a, b_{j+1}=b) for (a,b) = 00,01,10,11.
    std::array<double, 4> neighbor_priors = {0.25, 0.25, 0.25, 0.25};
    double target_ber = 1.0e-4;
    int isi_neighborhood = 1;
    double lambda2_tolerance = 0.1;
    int led_index = 2;                          // 1-based into rotation_radii
};

struct SystemConfig {
    TxConfig tx;
    ChannelConfig channel;
    CameraConfig camera;
    AnalysisConfig analysis;

    // Derived quantities.
    int segments_per_rotation() const;          // J
    double exposure_time() const;               // s, one rotation per frame
    double photon_energy() const;               // J
    double pupil_area_effective() const;        // m^2
    double image_radius_px(int led_index) const;
    double footprint_radius_px() const;
    double transmit_energy(int active_segments) const; // J per frame
    double full_well_photons() const;
    double led_radius_m(int led_index) const;

    void validate() const;                      // throws std::invalid_argument
};

SystemConfig load_config(const std::string& path);
SystemConfig parse_config(const std::string& text);
std::string serialize(const SystemConfig& cfg);
std::uint64_t config_hash(const SystemConfig& cfg);
std::string config_hash_hex(const SystemConfig& cfg);

} // namespace trailsim

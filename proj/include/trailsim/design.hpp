#pragma once

#include "trailsim/config.hpp"

#include <vector>

namespace trailsim {

struct DesignPoint {
    int led_index = 1;
    double r_i = 0.0;            // blade mounting radius, m
    double distance = 0.0;       // m
    bool feasible = false;
    int j_star = 0;              // even segment count, 0 when infeasible
    double dtheta_star = 0.0;    // rad, 0 when infeasible
    double ber = 0.0;            // analytic BER at the returned design
    double best_ber = 0.0;       // lowest BER seen (reported when infeasible)
    double throughput_bps = 0.0;
    double scaling_diag = 0.0;   // dtheta_star * image_radius / sigma_eff
};

// Blur width and LED footprint combined in quadrature, in pixels.
double sigma_eff_px(const SystemConfig& cfg);

// Bit rate for a control angle that divides the circle into an integer
// number of segments.
double throughput(double dtheta, double rotations_per_second);

// Largest even segment count whose arc length still spans at least one
// pixel at this LED and distance.
int max_even_segments(const SystemConfig& cfg, int led_index, double distance);

// Largest even J whose analytic adjacent-only BER meets the target;
// infeasibility is reported in the result, not thrown.
DesignPoint optimal_control_angle(const SystemConfig& cfg, int led_index,
                                  double distance, double target_ber);

// Full (led, distance) grid, sorted by led index then distance.
std::vector<DesignPoint> design_sweep(const SystemConfig& cfg,
                                      const std::vector<double>& distances,
                                      const std::vector<int>& led_indices);

} // namespace trailsim

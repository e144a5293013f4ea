#include "trailsim/design.hpp"

#include "trailsim/constants.hpp"
#include "trailsim/isi.hpp"
#include "trailsim/render.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace trailsim {

double sigma_eff_px(const SystemConfig& cfg) {
    const double fp = cfg.footprint_radius_px();
    return std::sqrt(cfg.channel.blur_sigma * cfg.channel.blur_sigma + fp * fp);
}

double throughput(double dtheta, double rotations_per_second) {
    if (dtheta <= 0.0) throw std::invalid_argument("control angle must be positive");
    const double j = 2.0 * kPi / dtheta;
    if (std::abs(j - std::round(j)) > 1e-9 * j)
        throw std::invalid_argument("control angle must divide the circle evenly");
    return rotations_per_second * std::round(j);
}

int max_even_segments(const SystemConfig& cfg, int led_index, double distance) {
    SystemConfig c = cfg;
    c.channel.distance = distance;
    const double r_img = c.image_radius_px(led_index);
    int j_max = static_cast<int>(std::floor(2.0 * kPi * r_img));
    j_max -= j_max % 2;
    return std::max(2, j_max);
}

namespace {

double ber_at(const SystemConfig& base, int led_index, double distance, int j) {
    SystemConfig c = base;
    c.channel.distance = distance;
    c.tx.control_angle = 2.0 * kPi / j;
    c.analysis.led_index = led_index;
    c.validate();
    const Scenario sc = prepare_scenario(c, led_index);
    return analytic_ber(sc).ber;
}

} // namespace

DesignPoint optimal_control_angle(const SystemConfig& cfg, int led_index,
                                  double distance, double target_ber) {
    if (target_ber <= 0.0 || target_ber >= 0.5)
        throw std::invalid_argument("target BER must lie in (0, 0.5)");
    DesignPoint pt;
    pt.led_index = led_index;
    pt.r_i = cfg.led_radius_m(led_index);
    pt.distance = distance;
    pt.best_ber = 1.0;

    const int j_max = max_even_segments(cfg, led_index, distance);
    // Scan from the largest candidate down; the first hit is the largest
    // feasible J whether or not BER is monotone in J.
    for (int j = j_max; j >= 2; j -= 2) {
        const double ber = ber_at(cfg, led_index, distance, j);
        pt.best_ber = std::min(pt.best_ber, ber);
        if (ber <= target_ber) {
            pt.feasible = true;
            pt.j_star = j;
            pt.dtheta_star = 2.0 * kPi / j;
            pt.ber = ber;
            pt.throughput_bps = throughput(pt.dtheta_star, cfg.tx.rotations_per_second);
            SystemConfig c = cfg;
            c.channel.distance = distance;
            pt.scaling_diag = pt.dtheta_star * c.image_radius_px(led_index) /
                              sigma_eff_px(c);
            break;
        }
    }
    return pt;
}

std::vector<DesignPoint> design_sweep(const SystemConfig& cfg,
                                      const std::vector<double>& distances,
                                      const std::vector<int>& led_indices) {
    if (distances.empty() || led_indices.empty())
        throw std::invalid_argument("design sweep needs at least one distance and one LED");
    std::vector<int> leds = led_indices;
    std::sort(leds.begin(), leds.end());
    std::vector<double> dists = distances;
    std::sort(dists.begin(), dists.end());

    const std::size_t n = leds.size() * dists.size();
    std::vector<DesignPoint> out(n);
#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
        const std::size_t li = static_cast<std::size_t>(i) / dists.size();
        const std::size_t di = static_cast<std::size_t>(i) % dists.size();
        out[static_cast<std::size_t>(i)] = optimal_control_angle(
            cfg, leds[li], dists[di], cfg.analysis.target_ber);
    }
    return out;
}

} // namespace trailsim

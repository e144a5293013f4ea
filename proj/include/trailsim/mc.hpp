#pragma once

#include "trailsim/camera.hpp"
#include "trailsim/isi.hpp"

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

namespace trailsim {

struct McResult {
    std::uint64_t n_bits = 0;
    std::uint64_t n_errors = 0;
    double ber_hat = 0.0;
    double ci_low = 0.0;        // 95% Wilson interval
    double ci_high = 0.0;
    std::uint64_t seed = 0;
    // Centroid pixel values binned at 1 PV per bin, split by transmitted bit.
    std::array<std::vector<std::uint64_t>, 2> histogram;
};

// Threshold detector: bit j is 1 iff the pixel value at centroid j strictly
// exceeds the threshold.
std::vector<int> demodulate(const Grid& pv, const TrailLayout& layout,
                            double pv_th);

// I.i.d. equiprobable payload for one frame, addressed by (seed, frame).
std::vector<int> random_payload(std::uint64_t seed, std::uint64_t frame,
                                int segments);

// 95% Wilson score interval for errors/n.
std::pair<double, double> wilson_interval(std::uint64_t errors, std::uint64_t n);

// End-to-end Monte Carlo: random whole-frame payloads, noisy capture,
// threshold demodulation against the analysis threshold. n_bits must be a
// positive multiple of the segment count. The default path evaluates pixel
// values at the bit centroids only (the superposition of single-segment
// responses); full_frames renders and captures entire frames instead.
McResult run_mc(const Scenario& sc, const TrailAnalysis& an,
                std::uint64_t n_bits, std::uint64_t seed,
                bool full_frames = false);

// Local maxima of a 256-bin histogram after width-3 moving-average
// smoothing, keeping peaks with prominence at least 1% of the total mass.
// Returns ascending bin positions (plateau centers).
std::vector<double> histogram_modes(const std::vector<std::uint64_t>& hist);

} // namespace trailsim

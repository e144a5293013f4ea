#include "trailsim/mc.hpp"

#include "trailsim/philox.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace trailsim {

namespace {

int pv_bin(double pv) {
    const int b = static_cast<int>(std::floor(pv));
    return std::min(255, std::max(0, b));
}

// Noisy pixel value at one sensor cell given the scaled received energy.
// Mirrors the capture path formulas exactly so centroid-only evaluation
// matches a full-frame capture at that pixel.
double noisy_pv(double received_scaled, const SystemConfig& cfg,
                const NoiseModel& noise, std::uint64_t frame,
                std::uint64_t cell) {
    const double q_p = cfg.photon_energy();
    if (noise.domain == NoiseDomain::power) {
        const double n = noise.sigma > 0.0
            ? noise.sigma * normal_at(noise.seed, kNoiseStream, frame, cell)
            : 0.0;
        return pixel_response(photon_count(received_scaled, n, q_p), cfg.camera);
    }
    double pv = pixel_response(photon_count(received_scaled, 0.0, q_p), cfg.camera);
    if (noise.sigma > 0.0)
        pv += noise.sigma * normal_at(noise.seed, kNoiseStream, frame, cell);
    return std::min(255.0, std::max(0.0, pv));
}

} // namespace

std::vector<int> demodulate(const Grid& pv, const TrailLayout& layout,
                            double pv_th) {
    pv.require_role(GridRole::pixel_value, "demodulate");
    std::vector<int> bits(static_cast<std::size_t>(layout.segments));
    for (int j = 0; j < layout.segments; ++j) {
        if (!pv.contains(layout.pixel_x[static_cast<std::size_t>(j)],
                         layout.pixel_y[static_cast<std::size_t>(j)]))
            throw std::out_of_range("bit centroid outside the captured frame");
        const double v = pv.sample(layout.centroid_x[static_cast<std::size_t>(j)],
                                   layout.centroid_y[static_cast<std::size_t>(j)]);
        bits[static_cast<std::size_t>(j)] = v > pv_th ? 1 : 0;
    }
    return bits;
}

std::vector<int> random_payload(std::uint64_t seed, std::uint64_t frame,
                                int segments) {
    std::vector<int> bits(static_cast<std::size_t>(segments));
    for (int j = 0; j < segments; ++j)
        bits[static_cast<std::size_t>(j)] =
            bit_at(seed, kPayloadStream, frame, static_cast<std::uint64_t>(j));
    return bits;
}

std::pair<double, double> wilson_interval(std::uint64_t errors, std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("empty sample");
    const double z = 1.959963984540054;
    const double p = static_cast<double>(errors) / static_cast<double>(n);
    const double nn = static_cast<double>(n);
    const double denom = 1.0 + z * z / nn;
    const double center = (p + z * z / (2.0 * nn)) / denom;
    const double half = z / denom *
        std::sqrt(p * (1.0 - p) / nn + z * z / (4.0 * nn * nn));
    // The score equation has exact roots at 0 and 1 for the degenerate
    // counts; computing them through center/half leaves rounding residue.
    const double low = errors == 0 ? 0.0 : std::max(0.0, center - half);
    const double high = errors == n ? 1.0 : std::min(1.0, center + half);
    return {low, high};
}

McResult run_mc(const Scenario& sc, const TrailAnalysis& an,
                std::uint64_t n_bits, std::uint64_t seed, bool full_frames) {
    const int j_count = sc.layout.segments;
    if (n_bits < static_cast<std::uint64_t>(j_count) ||
        n_bits % static_cast<std::uint64_t>(j_count) != 0)
        throw std::invalid_argument("n_bits must be a positive multiple of the segment count");
    const std::uint64_t frames = n_bits / static_cast<std::uint64_t>(j_count);
    const NoiseModel noise = noise_model_from(sc.cfg, seed);
    const std::uint64_t res_x = static_cast<std::uint64_t>(sc.cfg.camera.resolution_x);

    McResult res;
    res.n_bits = n_bits;
    res.seed = seed;
    res.histogram[0].assign(256, 0);
    res.histogram[1].assign(256, 0);

    std::uint64_t errors = 0;

#pragma omp parallel
    {
        std::uint64_t local_err = 0;
        std::array<std::vector<std::uint64_t>, 2> local_hist;
        local_hist[0].assign(256, 0);
        local_hist[1].assign(256, 0);

#pragma omp for schedule(static) nowait
        for (long long f = 0; f < static_cast<long long>(frames); ++f) {
            const std::uint64_t fid = static_cast<std::uint64_t>(f);
            const std::vector<int> bits = random_payload(seed, fid, j_count);
            if (full_frames) {
                const Grid received = render_scene(sc, bits);
                for (int j = 0; j < j_count; ++j) {
                    const double r = received.sample(sc.layout.centroid_x[static_cast<std::size_t>(j)],
                                                     sc.layout.centroid_y[static_cast<std::size_t>(j)]);
                    const std::uint64_t cell =
                        static_cast<std::uint64_t>(sc.layout.pixel_y[static_cast<std::size_t>(j)]) * res_x +
                        static_cast<std::uint64_t>(sc.layout.pixel_x[static_cast<std::size_t>(j)]);
                    const double pv = noisy_pv(r * sc.exposure_gain, sc.cfg, noise, fid, cell);
                    const int bhat = pv > an.pv_th ? 1 : 0;
                    local_err += bhat != bits[static_cast<std::size_t>(j)];
                    ++local_hist[static_cast<std::size_t>(bits[static_cast<std::size_t>(j)])]
                                [static_cast<std::size_t>(pv_bin(pv))];
                }
            } else {
                for (int j = 0; j < j_count; ++j) {
                    double r = 0.0;
                    for (int k = 0; k < j_count; ++k)
                        if (bits[static_cast<std::size_t>(k)]) r += an.matrix.at(j, k);
                    const std::uint64_t cell =
                        static_cast<std::uint64_t>(sc.layout.pixel_y[static_cast<std::size_t>(j)]) * res_x +
                        static_cast<std::uint64_t>(sc.layout.pixel_x[static_cast<std::size_t>(j)]);
                    const double pv = noisy_pv(r * sc.exposure_gain, sc.cfg, noise, fid, cell);
                    const int bhat = pv > an.pv_th ? 1 : 0;
                    local_err += bhat != bits[static_cast<std::size_t>(j)];
                    ++local_hist[static_cast<std::size_t>(bits[static_cast<std::size_t>(j)])]
                                [static_cast<std::size_t>(pv_bin(pv))];
                }
            }
        }

#pragma omp critical
        {
            errors += local_err;
            for (int c = 0; c < 2; ++c)
                for (int b = 0; b < 256; ++b)
                    res.histogram[static_cast<std::size_t>(c)][static_cast<std::size_t>(b)] +=
                        local_hist[static_cast<std::size_t>(c)][static_cast<std::size_t>(b)];
        }
    }

    res.n_errors = errors;
    res.ber_hat = static_cast<double>(errors) / static_cast<double>(n_bits);
    const auto ci = wilson_interval(errors, n_bits);
    res.ci_low = ci.first;
    res.ci_high = ci.second;
    return res;
}

std::vector<double> histogram_modes(const std::vector<std::uint64_t>& hist) {
    if (hist.empty()) throw std::invalid_argument("empty histogram");
    double mass = 0.0;
    for (std::uint64_t v : hist) mass += static_cast<double>(v);
    if (mass <= 0.0) throw std::invalid_argument("empty histogram class");

    const int n = static_cast<int>(hist.size());
    std::vector<double> s(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        const double left = i > 0 ? static_cast<double>(hist[static_cast<std::size_t>(i - 1)]) : 0.0;
        const double right = i + 1 < n ? static_cast<double>(hist[static_cast<std::size_t>(i + 1)]) : 0.0;
        s[static_cast<std::size_t>(i)] =
            (left + static_cast<double>(hist[static_cast<std::size_t>(i)]) + right) / 3.0;
    }

    const double min_prominence = 0.01 * mass;
    std::vector<double> modes;
    int i = 0;
    while (i < n) {
        int run_end = i;
        while (run_end + 1 < n && s[static_cast<std::size_t>(run_end + 1)] == s[static_cast<std::size_t>(i)])
            ++run_end;
        const double v = s[static_cast<std::size_t>(i)];
        const bool left_lower = i == 0 || s[static_cast<std::size_t>(i - 1)] < v;
        const bool right_lower = run_end == n - 1 || s[static_cast<std::size_t>(run_end + 1)] < v;
        if (v > 0.0 && left_lower && right_lower) {
            // Prominence: drop to the lowest saddle before higher terrain on
            // each side; sides that run off the edge bottom out at zero.
            double valley_left = 0.0;
            if (i > 0) {
                valley_left = v;
                for (int t = i - 1; t >= 0; --t) {
                    if (s[static_cast<std::size_t>(t)] > v) break;
                    valley_left = std::min(valley_left, s[static_cast<std::size_t>(t)]);
                    if (t == 0) valley_left = std::min(valley_left, 0.0);
                }
            }
            double valley_right = 0.0;
            if (run_end < n - 1) {
                valley_right = v;
                for (int t = run_end + 1; t < n; ++t) {
                    if (s[static_cast<std::size_t>(t)] > v) break;
                    valley_right = std::min(valley_right, s[static_cast<std::size_t>(t)]);
                    if (t == n - 1) valley_right = std::min(valley_right, 0.0);
                }
            }
            if (v - std::max(valley_left, valley_right) >= min_prominence)
                modes.push_back(0.5 * (i + run_end));
        }
        i = run_end + 1;
    }
    return modes;
}

} // namespace trailsim

#include "trailsim/render.hpp"

#include "trailsim/constants.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace trailsim {

namespace {

int g_threads = 0;

int effective_threads() {
#ifdef _OPENMP
    return g_threads > 0 ? g_threads : omp_get_max_threads();
#else
    return 1;
#endif
}

// Nearest pixel with ties toward the smaller index.
int round_centroid(double v) {
    return static_cast<int>(std::ceil(v - 0.5));
}

// Arc sweep oversampling: steps per pixel of arc length, and a fixed
// point pattern approximating uniform coverage of the unit disk.
constexpr int kArcStepsPerPixel = 8;

const std::vector<std::pair<double, double>>& disk_pattern() {
    static const std::vector<std::pair<double, double>> pts = [] {
        std::vector<std::pair<double, double>> p;
        const int n = 8;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                const double u = (i + 0.5) / n * 2.0 - 1.0;
                const double v = (j + 0.5) / n * 2.0 - 1.0;
                if (u * u + v * v <= 1.0) p.emplace_back(u, v);
            }
        }
        return p;
    }();
    return pts;
}

// Deposit one arc span [a0, a1) of a blink carrying total energy q_total.
void sweep_arc(Grid& g, const TrailLayout& layout, double a0, double a1,
               double q_total) {
    const double arc_px = layout.image_radius * (a1 - a0);
    const int steps = std::max(8, static_cast<int>(std::ceil(kArcStepsPerPixel * arc_px)));
    const auto& disk = disk_pattern();
    const double w = q_total / steps / static_cast<double>(disk.size());
    for (int t = 0; t < steps; ++t) {
        const double ang = a0 + (t + 0.5) * (a1 - a0) / steps;
        const double cx = layout.center_x + layout.image_radius * std::cos(ang);
        const double cy = layout.center_y + layout.image_radius * std::sin(ang);
        for (const auto& [du, dv] : disk) {
            const double px = cx + layout.footprint_radius * du;
            const double py = cy + layout.footprint_radius * dv;
            // Bilinear splat: keeps the deposit a continuous function of the
            // sample position, which is what bounds the resampling error of
            // a rotated pattern at the centroids.
            const int ix = static_cast<int>(std::floor(px));
            const int iy = static_cast<int>(std::floor(py));
            const double u = px - ix, v = py - iy;
            if (g.contains(ix, iy)) g.at(ix, iy) += w * (1.0 - u) * (1.0 - v);
            if (g.contains(ix + 1, iy)) g.at(ix + 1, iy) += w * u * (1.0 - v);
            if (g.contains(ix, iy + 1)) g.at(ix, iy + 1) += w * (1.0 - u) * v;
            if (g.contains(ix + 1, iy + 1)) g.at(ix + 1, iy + 1) += w * u * v;
        }
    }
}

// Shared convolution tap loop; both the full and the point evaluation use
// this exact order so their results agree bitwise.
double blur_at(const Grid& allocated, const BlurKernel& kernel, int x, int y) {
    const int r = kernel.reach();
    double acc = 0.0;
    for (int b = -r; b <= r; ++b)
        for (int a = -r; a <= r; ++a)
            acc += kernel.at(a, b) * allocated.at_or_zero(x - a, y - b);
    return acc;
}

Grid accumulate_impl(const SystemConfig& cfg, const TrailLayout& layout,
                     const std::vector<int>& bits, bool parallel) {
    if (static_cast<int>(bits.size()) != layout.segments)
        throw std::invalid_argument("bit pattern length must equal segment count");
    Grid out(layout.roi, GridRole::blink_energy);
    std::vector<int> active;
    for (int j = 0; j < layout.segments; ++j)
        if (bits[j] != 0) active.push_back(j);
    if (active.empty()) return out;

    std::vector<Grid> parts(active.size());
    if (parallel) {
#pragma omp parallel for schedule(dynamic) num_threads(effective_threads())
        for (int i = 0; i < static_cast<int>(active.size()); ++i)
            parts[i] = render_segment_blink(cfg, layout, active[i]);
    } else {
        for (std::size_t i = 0; i < active.size(); ++i)
            parts[i] = render_segment_blink(cfg, layout, active[i]);
    }
    // Fixed-order reduction keeps the result independent of scheduling.
    for (const Grid& p : parts) {
        auto& dst = out.cells();
        const auto& src = p.cells();
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    }
    return out;
}

Grid received_impl(const Grid& allocated, const Grid& gain,
                   const BlurKernel& kernel, bool parallel) {
    allocated.require_role(GridRole::allocated, "received_power");
    gain.require_role(GridRole::gain_field, "received_power");
    Grid out(static_cast<Window>(allocated), GridRole::received);
    const int h = allocated.height, w = allocated.width;
#pragma omp parallel for schedule(static) num_threads(effective_threads()) if (parallel)
    for (int row = 0; row < h; ++row) {
        const int y = allocated.y0 + row;
        for (int col = 0; col < w; ++col) {
            const int x = allocated.x0 + col;
            out.at(x, y) = gain.at(x, y) * blur_at(allocated, kernel, x, y);
        }
    }
    return out;
}

} // namespace

void set_thread_count(int n) {
    g_threads = n;
#ifdef _OPENMP
    if (n > 0) omp_set_num_threads(n);
#endif
}
int thread_count() { return effective_threads(); }

TrailLayout project_geometry(const SystemConfig& cfg, int led_index) {
    TrailLayout lay;
    lay.led_index = led_index;
    lay.segments = cfg.segments_per_rotation();
    lay.image_radius = cfg.image_radius_px(led_index);
    lay.footprint_radius = cfg.footprint_radius_px();
    lay.center_x = (cfg.camera.resolution_x - 1) / 2.0;
    lay.center_y = (cfg.camera.resolution_y - 1) / 2.0;

    const double dtheta = cfg.tx.control_angle;
    for (int j = 0; j < lay.segments; ++j) {
        const double ang = (j + 0.5) * dtheta;
        const double x = lay.center_x + lay.image_radius * std::cos(ang);
        const double y = lay.center_y + lay.image_radius * std::sin(ang);
        lay.centroid_x.push_back(x);
        lay.centroid_y.push_back(y);
        lay.pixel_x.push_back(round_centroid(x));
        lay.pixel_y.push_back(round_centroid(y));
    }

    const int margin = static_cast<int>(std::ceil(
        lay.footprint_radius + (cfg.channel.kernel_size - 1) / 2 + 2.0));
    const int ext = static_cast<int>(std::ceil(lay.image_radius)) + margin;
    lay.roi.x0 = static_cast<int>(std::floor(lay.center_x)) - ext;
    lay.roi.y0 = static_cast<int>(std::floor(lay.center_y)) - ext;
    lay.roi.width = 2 * ext + 2;
    lay.roi.height = 2 * ext + 2;
    if (lay.roi.x0 < 0 || lay.roi.y0 < 0 ||
        lay.roi.x0 + lay.roi.width > cfg.camera.resolution_x ||
        lay.roi.y0 + lay.roi.height > cfg.camera.resolution_y)
        throw std::invalid_argument("projected trail exceeds sensor bounds");
    return lay;
}

BlurKernel gaussian_kernel(int size, double sigma) {
    if (size < 1 || size % 2 == 0)
        throw std::invalid_argument("kernel_size must be odd and >= 1");
    if (sigma <= 0.0) throw std::invalid_argument("blur_sigma must be positive");
    BlurKernel k;
    k.size = size;
    k.taps.resize(static_cast<std::size_t>(size) * size);
    const int r = (size - 1) / 2;
    double sum = 0.0;
    for (int b = -r; b <= r; ++b)
        for (int a = -r; a <= r; ++a) {
            const double v = std::exp(-(a * a + b * b) / (2.0 * sigma * sigma));
            k.taps[static_cast<std::size_t>(b + r) * size + (a + r)] = v;
            sum += v;
        }
    for (double& v : k.taps) v /= sum;
    return k;
}

Grid render_segment_blink(const SystemConfig& cfg, const TrailLayout& layout,
                          int segment) {
    if (segment < 0 || segment >= layout.segments)
        throw std::invalid_argument("segment index out of range");
    Grid g(layout.roi, GridRole::blink_energy);
    const double dtheta = cfg.tx.control_angle;
    // Luminous energy emitted during one segment's dwell.
    const double q_total = cfg.tx.total_power * cfg.camera.luminous_efficacy *
                           cfg.camera.luminous_efficiency *
                           cfg.exposure_time() / layout.segments;
    sweep_arc(g, layout, segment * dtheta, (segment + 1) * dtheta, q_total);
    return g;
}

Grid render_ring_blink(const SystemConfig& cfg, const TrailLayout& layout) {
    Grid g(layout.roi, GridRole::blink_energy);
    const double q_total = cfg.tx.total_power * cfg.camera.luminous_efficacy *
                           cfg.camera.luminous_efficiency * cfg.exposure_time();
    sweep_arc(g, layout, 0.0, 2.0 * kPi, q_total);
    return g;
}

Grid accumulate_blink_energy(const SystemConfig& cfg, const TrailLayout& layout,
                             const std::vector<int>& bits) {
    return accumulate_impl(cfg, layout, bits, true);
}

Grid reference::accumulate_blink_energy(const SystemConfig& cfg,
                                        const TrailLayout& layout,
                                        const std::vector<int>& bits) {
    return accumulate_impl(cfg, layout, bits, false);
}

Grid radiometric_distribution(const Grid& blink, double luminous_efficacy,
                              double luminous_efficiency) {
    blink.require_role(GridRole::blink_energy, "radiometric_distribution");
    if (luminous_efficacy <= 0.0 || luminous_efficiency <= 0.0)
        throw std::invalid_argument("luminous conversion constants must be positive");
    Grid out(static_cast<Window>(blink), GridRole::radiometric);
    const double inv = 1.0 / (luminous_efficacy * luminous_efficiency);
    const auto& src = blink.cells();
    auto& dst = out.cells();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] * inv;
    return out;
}

Grid allocate_power(const Grid& radiometric, double total) {
    radiometric.require_role(GridRole::radiometric, "allocate_power");
    const double sum = radiometric.sum();
    if (sum <= 0.0)
        throw std::invalid_argument("allocate_power: allocation over an all-dark grid");
    if (total < 0.0)
        throw std::invalid_argument("allocate_power: negative total");
    Grid out(static_cast<Window>(radiometric), GridRole::allocated);
    const double scale = total / sum;
    const auto& src = radiometric.cells();
    auto& dst = out.cells();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] * scale;
    return out;
}

double los_gain_at(const SystemConfig& cfg, double center_x, double center_y,
                   int x, int y) {
    const double sx = (x - center_x) * cfg.camera.pixel_pitch;
    const double sy = (y - center_y) * cfg.camera.pixel_pitch;
    const double d = cfg.channel.distance;
    // Back-project the pixel to its emission point at range D.
    const double lx = sx * d / cfg.camera.focal_length;
    const double ly = sy * d / cfg.camera.focal_length;
    const double dist = std::sqrt(d * d + lx * lx + ly * ly);
    const double cos_psi = d / dist;
    const double psi = std::acos(std::min(1.0, cos_psi));
    if (psi > cfg.channel.fov) return 0.0;
    const double m = cfg.channel.lambertian_order;
    const double radiance = (m + 1.0) / (2.0 * kPi) * std::pow(cos_psi, m);
    const double pupil = cfg.pupil_area_effective() * cfg.channel.filter_transmittance *
                         cfg.channel.lens_gain * cos_psi;
    return pupil / std::pow(dist, cfg.channel.path_loss_exponent) * radiance;
}

Grid los_gain_grid(const SystemConfig& cfg, const TrailLayout& layout, bool flat) {
    Grid g(layout.roi, GridRole::gain_field);
    if (flat) {
        const double h = los_gain_at(cfg, layout.center_x, layout.center_y,
                                     static_cast<int>(std::lround(layout.center_x)),
                                     static_cast<int>(std::lround(layout.center_y)));
        for (double& v : g.cells()) v = h;
        return g;
    }
    for (int y = g.y0; y < g.y0 + g.height; ++y)
        for (int x = g.x0; x < g.x0 + g.width; ++x)
            g.at(x, y) = los_gain_at(cfg, layout.center_x, layout.center_y, x, y);
    return g;
}

Grid received_power(const Grid& allocated, const Grid& gain,
                    const BlurKernel& kernel) {
    return received_impl(allocated, gain, kernel, true);
}

Grid reference::received_power(const Grid& allocated, const Grid& gain,
                               const BlurKernel& kernel) {
    return received_impl(allocated, gain, kernel, false);
}

double received_at(const Grid& allocated, const Grid& gain,
                   const BlurKernel& kernel, int x, int y) {
    allocated.require_role(GridRole::allocated, "received_at");
    return gain.at(x, y) * blur_at(allocated, kernel, x, y);
}

double received_at(const Grid& allocated, const Grid& gain,
                   const BlurKernel& kernel, double x, double y) {
    allocated.require_role(GridRole::allocated, "received_at");
    const double fx = std::floor(x), fy = std::floor(y);
    const int ix = static_cast<int>(fx), iy = static_cast<int>(fy);
    const double u = x - fx, v = y - fy;
    auto corner = [&](int cx, int cy) {
        return gain.at(cx, cy) * blur_at(allocated, kernel, cx, cy);
    };
    return (1.0 - u) * (1.0 - v) * corner(ix, iy) +
           u * (1.0 - v) * corner(ix + 1, iy) +
           (1.0 - u) * v * corner(ix, iy + 1) +
           u * v * corner(ix + 1, iy + 1);
}

Scenario prepare_scenario(const SystemConfig& cfg, int led_index) {
    Scenario sc;
    sc.cfg = cfg;
    sc.layout = project_geometry(cfg, led_index);
    sc.kernel = gaussian_kernel(cfg.channel.kernel_size, cfg.channel.blur_sigma);
    sc.gain = los_gain_grid(cfg, sc.layout);

    // Exposure anchor: mean received energy of the all-on annulus sampled at
    // a fixed set of angles, independent of the segmentation.
    const Grid ring_q = render_ring_blink(cfg, sc.layout);
    const Grid ring_p = radiometric_distribution(ring_q, cfg.camera.luminous_efficacy,
                                                 cfg.camera.luminous_efficiency);
    const Grid ring_l = allocate_power(ring_p, cfg.transmit_energy(sc.layout.segments));
    double level = 0.0;
    const int samples = 360;
    for (int k = 0; k < samples; ++k) {
        const double ang = (k + 0.5) * 2.0 * kPi / samples;
        const double x = sc.layout.center_x + sc.layout.image_radius * std::cos(ang);
        const double y = sc.layout.center_y + sc.layout.image_radius * std::sin(ang);
        level += received_at(ring_l, sc.gain, sc.kernel, x, y);
    }
    level /= samples;
    sc.ring_level = level;
    if (cfg.camera.auto_exposure) {
        if (level <= 0.0)
            throw std::runtime_error("auto exposure: ring level is zero");
        sc.exposure_gain = cfg.camera.exposure_target * cfg.full_well_photons() *
                           cfg.photon_energy() / level;
    } else {
        sc.exposure_gain = 1.0;
    }
    return sc;
}

Grid render_scene(const Scenario& sc, const std::vector<int>& bits) {
    int active = 0;
    for (int b : bits) active += (b != 0);
    if (active == 0) {
        // All-dark pattern renders to an all-zero received grid.
        return Grid(sc.layout.roi, GridRole::received);
    }
    const Grid q = accumulate_blink_energy(sc.cfg, sc.layout, bits);
    const Grid p = radiometric_distribution(q, sc.cfg.camera.luminous_efficacy,
                                            sc.cfg.camera.luminous_efficiency);
    const Grid l = allocate_power(p, sc.cfg.transmit_energy(active));
    return received_power(l, sc.gain, sc.kernel);
}

} // namespace trailsim

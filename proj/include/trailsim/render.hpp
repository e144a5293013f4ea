#pragma once

#include "trailsim/config.hpp"
#include "trailsim/grid.hpp"

#include <vector>

namespace trailsim {

// Projected trail geometry for one LED, in sensor pixel coordinates.
struct TrailLayout {
    int led_index = 1;
    int segments = 0;                 // J
    double image_radius = 0.0;        // px
    double footprint_radius = 0.0;    // px
    double center_x = 0.0;            // continuous principal point
    double center_y = 0.0;
    std::vector<double> centroid_x;   // continuous bit centroids
    std::vector<double> centroid_y;
    std::vector<int> pixel_x;         // nearest pixel, ties toward smaller index
    std::vector<int> pixel_y;
    Window roi;                       // deposit support + blur reach
};

// Normalized discrete Gaussian blur taps on a size x size square.
struct BlurKernel {
    int size = 1;
    std::vector<double> taps;         // row-major, sums to 1
    int reach() const { return (size - 1) / 2; }
    double at(int a, int b) const {   // a,b in [-reach, reach]
        const int r = reach();
        return taps[static_cast<std::size_t>(b + r) * size + (a + r)];
    }
};

TrailLayout project_geometry(const SystemConfig& cfg, int led_index);

BlurKernel gaussian_kernel(int size, double sigma);

// Luminous energy swept by one segment's blink (deposit only, no blur).
Grid render_segment_blink(const SystemConfig& cfg, const TrailLayout& layout,
                          int segment);

// Canonical all-on annulus used as the exposure anchor. Rendered with a
// segmentation-independent sweep so the gain does not depend on J.
Grid render_ring_blink(const SystemConfig& cfg, const TrailLayout& layout);

// Sum of active segments' blinks, in ascending segment order.
Grid accumulate_blink_energy(const SystemConfig& cfg, const TrailLayout& layout,
                             const std::vector<int>& bits);

// Luminous -> radiometric shape conversion (divide by K * V(lambda)).
Grid radiometric_distribution(const Grid& blink, double luminous_efficacy,
                              double luminous_efficiency);

// Distribute a total transmit energy across pixels proportionally.
Grid allocate_power(const Grid& radiometric, double total);

// Line-of-sight channel gain at one pixel (Lambertian emitter, pinhole
// back-projection, incidence cutoff at the configured field of view).
double los_gain_at(const SystemConfig& cfg, double center_x, double center_y,
                   int x, int y);

// Per-pixel gain over a window; flat variant evaluates the center once.
Grid los_gain_grid(const SystemConfig& cfg, const TrailLayout& layout,
                   bool flat = false);

// Received energy: per-pixel gain times blurred allocation (zero-padded).
Grid received_power(const Grid& allocated, const Grid& gain,
                    const BlurKernel& kernel);
double received_at(const Grid& allocated, const Grid& gain,
                   const BlurKernel& kernel, int x, int y);
// Received energy of the field at a continuous point: bilinear interpolation
// of the four surrounding pixel values. Linear in the allocation, so
// superposing per-segment responses reproduces a joint render exactly.
double received_at(const Grid& allocated, const Grid& gain,
                   const BlurKernel& kernel, double x, double y);

// Everything a scenario needs downstream: geometry, kernel, gain field and
// the exposure gain that pins the all-on ring at the configured fill level.
struct Scenario {
    SystemConfig cfg;
    TrailLayout layout;
    BlurKernel kernel;
    Grid gain;                        // los gain field over the ROI
    double exposure_gain = 1.0;       // dimensionless, 1 when auto_exposure off
    double ring_level = 0.0;          // mean received ring energy before gain
};

Scenario prepare_scenario(const SystemConfig& cfg, int led_index);

// Noise-free received energy for a bit pattern (direct render path).
Grid render_scene(const Scenario& sc, const std::vector<int>& bits);

// Kernel thread count control (0 = library default).
void set_thread_count(int n);
int thread_count();

namespace reference {
// Serial reference implementations; results are bitwise identical to the
// parallel kernels above.
Grid accumulate_blink_energy(const SystemConfig& cfg, const TrailLayout& layout,
                             const std::vector<int>& bits);
Grid received_power(const Grid& allocated, const Grid& gain,
                    const BlurKernel& kernel);
} // namespace reference

} // namespace trailsim

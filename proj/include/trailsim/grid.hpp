#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace trailsim {

// Stage tags for the rendering pipeline. Operations check these so a raw
// luminous-energy grid cannot be fed where an allocated or received grid is
// expected.
enum class GridRole {
    blink_energy,   // accumulated luminous energy Q
    radiometric,    // luminous -> radiometric conversion P
    allocated,      // per-pixel allocated transmit energy L
    gain_field,     // per-pixel line-of-sight channel gain H
    received,       // post-channel received energy R
    photons,        // photon counts I
    pixel_value     // PV in [0,255]
};

const char* to_string(GridRole role);

// Rectangular window of the sensor, in full-sensor pixel coordinates.
// Rendering works on a region of interest around the trail; x0/y0 anchor it.
struct Window {
    int x0 = 0;
    int y0 = 0;
    int width = 0;
    int height = 0;

    bool contains(int x, int y) const {
        return x >= x0 && y >= y0 && x < x0 + width && y < y0 + height;
    }
};

class Grid : public Window {
public:
    Grid() = default;
    Grid(Window w, GridRole r) : Window(w), role(r), cells_(static_cast<std::size_t>(w.width) * w.height, 0.0) {
        if (w.width <= 0 || w.height <= 0)
            throw std::invalid_argument("grid window must have positive size");
    }

    GridRole role = GridRole::blink_energy;

    double& at(int x, int y) {
        return cells_[static_cast<std::size_t>(y - y0) * width + (x - x0)];
    }
    double at(int x, int y) const {
        return cells_[static_cast<std::size_t>(y - y0) * width + (x - x0)];
    }
    // Zero-padded read used by the convolution border rule.
    double at_or_zero(int x, int y) const {
        return contains(x, y) ? at(x, y) : 0.0;
    }
    // Bilinear value at a continuous sensor coordinate, zero-padded outside.
    double sample(double x, double y) const {
        const double fx = std::floor(x), fy = std::floor(y);
        const int ix = static_cast<int>(fx), iy = static_cast<int>(fy);
        const double u = x - fx, v = y - fy;
        return (1.0 - u) * (1.0 - v) * at_or_zero(ix, iy) +
               u * (1.0 - v) * at_or_zero(ix + 1, iy) +
               (1.0 - u) * v * at_or_zero(ix, iy + 1) +
               u * v * at_or_zero(ix + 1, iy + 1);
    }

    std::vector<double>& cells() { return cells_; }
    const std::vector<double>& cells() const { return cells_; }

    double sum() const {
        double s = 0.0;
        for (double v : cells_) s += v;
        return s;
    }

    void require_role(GridRole expect, const std::string& op) const {
        if (role != expect)
            throw std::invalid_argument(op + ": expected grid role " +
                                        std::string(to_string(expect)) + ", got " +
                                        std::string(to_string(role)));
    }

private:
    std::vector<double> cells_;
};

inline const char* to_string(GridRole role) {
    switch (role) {
        case GridRole::blink_energy: return "blink_energy";
        case GridRole::radiometric: return "radiometric";
        case GridRole::allocated: return "allocated";
        case GridRole::gain_field: return "gain_field";
        case GridRole::received: return "received";
        case GridRole::photons: return "photons";
        case GridRole::pixel_value: return "pixel_value";
    }
    return "unknown";
}

} // namespace trailsim

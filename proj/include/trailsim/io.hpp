#pragma once

#include "trailsim/design.hpp"
#include "trailsim/grid.hpp"
#include "trailsim/isi.hpp"
#include "trailsim/mc.hpp"
#include "trailsim/render.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace trailsim::io {

// Shortest round-trip decimal form, stable across runs and thread counts.
std::string fmt_num(double v);

void write_text_file(const std::string& path, const std::string& content);

// 16-bit binary portable graymap (big-endian, maxval 65535); pixel values
// on 0..255 are scaled by 257. A comment records the sensor window.
void write_pgm16(const std::string& path, const Grid& pv);

std::string layout_csv(const TrailLayout& layout);
std::string histogram_csv(const McResult& mc);

struct ModeRow {
    int bit_class;
    double mode_bin;
    double nearest_mean;
    double offset;
};
std::string modes_csv(const std::vector<ModeRow>& rows);

struct BerRow {
    double distance = 0.0;
    std::string mode;
    double ber = 0.0;
    std::uint64_t n_bits = 0;     // 0 for closed-form rows
    std::uint64_t n_errors = 0;
    std::optional<double> ci_low;
    std::optional<double> ci_high;
};
std::string ber_csv(const std::vector<BerRow>& rows);

std::string design_csv(const std::vector<DesignPoint>& points);

struct ThroughputRow {
    double dtheta = 0.0;
    int segments = 0;
    double ber = 0.0;
    double throughput_bps = 0.0;
    bool feasible = false;
};
std::string throughput_csv(const std::vector<ThroughputRow>& rows);

std::string noise_report_csv(std::size_t n_frames, double estimate,
                             double generator_sigma);

// Run manifest: command, config hash, seed, every output path, tool
// version, wall-clock timestamp.
std::string manifest_json(const std::string& command, const SystemConfig& cfg,
                          std::optional<std::uint64_t> seed,
                          const std::vector<std::string>& outputs);

inline constexpr const char* kToolVersion = "0.1.0";

} // namespace trailsim::io

#include "trailsim/io.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace trailsim::io {

namespace {

void append_row(std::string& out, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        out += cells[i];
    }
    out += '\n';
}

} // namespace

std::string fmt_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << content;
    if (!f) throw std::runtime_error("write failed: " + path);
}

void write_pgm16(const std::string& path, const Grid& pv) {
    pv.require_role(GridRole::pixel_value, "write_pgm16");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << "P5\n# window " << pv.x0 << ' ' << pv.y0 << ' ' << pv.width << ' '
      << pv.height << "\n" << pv.width << ' ' << pv.height << "\n65535\n";
    std::string data;
    data.reserve(static_cast<std::size_t>(pv.width) * pv.height * 2);
    for (int y = pv.y0; y < pv.y0 + pv.height; ++y)
        for (int x = pv.x0; x < pv.x0 + pv.width; ++x) {
            const double v = std::min(255.0, std::max(0.0, pv.at(x, y)));
            const unsigned raw = static_cast<unsigned>(std::lround(v * 257.0));
            data += static_cast<char>((raw >> 8) & 0xFF);
            data += static_cast<char>(raw & 0xFF);
        }
    f << data;
    if (!f) throw std::runtime_error("write failed: " + path);
}

std::string layout_csv(const TrailLayout& layout) {
    std::string out = "segment,centroid_x,centroid_y,pixel_x,pixel_y\n";
    for (int j = 0; j < layout.segments; ++j)
        append_row(out, {std::to_string(j),
                         fmt_num(layout.centroid_x[static_cast<std::size_t>(j)]),
                         fmt_num(layout.centroid_y[static_cast<std::size_t>(j)]),
                         std::to_string(layout.pixel_x[static_cast<std::size_t>(j)]),
                         std::to_string(layout.pixel_y[static_cast<std::size_t>(j)])});
    return out;
}

std::string histogram_csv(const McResult& mc) {
    std::string out = "class,bin,count\n";
    for (int c = 0; c < 2; ++c)
        for (int b = 0; b < 256; ++b)
            append_row(out, {std::to_string(c), std::to_string(b),
                             std::to_string(mc.histogram[static_cast<std::size_t>(c)]
                                                        [static_cast<std::size_t>(b)])});
    return out;
}

std::string modes_csv(const std::vector<ModeRow>& rows) {
    std::string out = "class,mode_bin,nearest_mean,offset\n";
    for (const auto& r : rows)
        append_row(out, {std::to_string(r.bit_class), fmt_num(r.mode_bin),
                         fmt_num(r.nearest_mean), fmt_num(r.offset)});
    return out;
}

std::string ber_csv(const std::vector<BerRow>& rows) {
    std::string out = "distance_m,mode,ber,n_bits,n_errors,ci_low,ci_high\n";
    for (const auto& r : rows)
        append_row(out, {fmt_num(r.distance), r.mode, fmt_num(r.ber),
                         std::to_string(r.n_bits), std::to_string(r.n_errors),
                         r.ci_low ? fmt_num(*r.ci_low) : std::string(),
                         r.ci_high ? fmt_num(*r.ci_high) : std::string()});
    return out;
}

std::string design_csv(const std::vector<DesignPoint>& points) {
    std::string out = "led_index,r_i,D,J_star,dtheta_star,ber,throughput_bps,feasible,scaling_diag\n";
    for (const auto& p : points)
        append_row(out, {std::to_string(p.led_index), fmt_num(p.r_i),
                         fmt_num(p.distance), std::to_string(p.j_star),
                         fmt_num(p.dtheta_star),
                         fmt_num(p.feasible ? p.ber : p.best_ber),
                         fmt_num(p.throughput_bps),
                         p.feasible ? "1" : "0", fmt_num(p.scaling_diag)});
    return out;
}

std::string throughput_csv(const std::vector<ThroughputRow>& rows) {
    std::string out = "dtheta,J,ber,throughput_bps,feasible\n";
    for (const auto& r : rows)
        append_row(out, {fmt_num(r.dtheta), std::to_string(r.segments),
                         fmt_num(r.ber), fmt_num(r.throughput_bps),
                         r.feasible ? "1" : "0"});
    return out;
}

std::string noise_report_csv(std::size_t n_frames, double estimate,
                             double generator_sigma) {
    std::string out = "n_frames,estimate,generator_sigma\n";
    append_row(out, {std::to_string(n_frames), fmt_num(estimate),
                     fmt_num(generator_sigma)});
    return out;
}

std::string manifest_json(const std::string& command, const SystemConfig& cfg,
                          std::optional<std::uint64_t> seed,
                          const std::vector<std::string>& outputs) {
    nlohmann::json j;
    j["command"] = command;
    j["config_hash"] = config_hash_hex(cfg);
    if (seed)
        j["seed"] = *seed;
    else
        j["seed"] = nullptr;
    j["outputs"] = outputs;
    j["version"] = kToolVersion;
    char stamp[32];
    const std::time_t now = std::time(nullptr);
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    j["timestamp"] = stamp;
    return j.dump(2) + "\n";
}

} // namespace trailsim::io

#include "trailsim/config.hpp"

#include "trailsim/constants.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace trailsim {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

// Accepts plain floats plus "pi", "pi/5", "2.5*pi", "2*pi/29".
double parse_double(const std::string& key, const std::string& raw) {
    std::string v = trim(raw);
    double mult = 1.0;
    bool has_pi = false;
    auto star = v.find('*');
    if (star != std::string::npos) {
        mult = parse_double(key, v.substr(0, star));
        v = trim(v.substr(star + 1));
    }
    if (v.rfind("pi", 0) == 0) {
        has_pi = true;
        v = trim(v.substr(2));
        if (v.empty()) return mult * kPi;
    }
    double denom = 1.0;
    if (has_pi) {
        if (v[0] != '/')
            throw std::invalid_argument("malformed value for '" + key + "': " + raw);
        v = trim(v.substr(1));
    }
    char* end = nullptr;
    const double num = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0')
        throw std::invalid_argument("malformed value for '" + key + "': " + raw);
    if (has_pi) { denom = num; return mult * kPi / denom; }
    return mult * num;
}

bool parse_bool(const std::string& key, const std::string& raw) {
    const std::string v = trim(raw);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw std::invalid_argument("malformed value for '" + key + "': " + raw);
}

int parse_int(const std::string& key, const std::string& raw) {
    const double d = parse_double(key, raw);
    const int i = static_cast<int>(std::lround(d));
    if (std::abs(d - i) > 1e-9)
        throw std::invalid_argument("malformed value for '" + key + "': expected integer");
    return i;
}

std::vector<double> parse_list(const std::string& key, const std::string& raw) {
    std::vector<double> out;
    std::stringstream ss(raw);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        out.push_back(parse_double(key, item));
    }
    if (out.empty())
        throw std::invalid_argument("malformed value for '" + key + "': empty list");
    return out;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

int SystemConfig::segments_per_rotation() const {
    return static_cast<int>(std::lround(2.0 * kPi / tx.control_angle));
}

double SystemConfig::exposure_time() const {
    return 1.0 / tx.rotations_per_second;
}

double SystemConfig::photon_energy() const {
    return trailsim::photon_energy(camera.wavelength);
}

double SystemConfig::pupil_area_effective() const {
    if (channel.pupil_area > 0.0) return channel.pupil_area;
    const double r = camera.focal_length / 5.6; // f/2.8 aperture radius
    return kPi * r * r;
}

double SystemConfig::led_radius_m(int led_index) const {
    if (led_index < 1 || led_index > static_cast<int>(tx.rotation_radii.size()))
        throw std::invalid_argument("led_index out of range");
    return tx.rotation_radii[static_cast<std::size_t>(led_index) - 1];
}

double SystemConfig::image_radius_px(int led_index) const {
    return led_radius_m(led_index) * camera.focal_length /
           (channel.distance * camera.pixel_pitch);
}

double SystemConfig::footprint_radius_px() const {
    return tx.led_radius * camera.focal_length /
           (channel.distance * camera.pixel_pitch);
}

double SystemConfig::transmit_energy(int active_segments) const {
    const int j = segments_per_rotation();
    return static_cast<double>(active_segments) * tx.total_power / j * exposure_time();
}

double SystemConfig::full_well_photons() const {
    return camera.v_ref / (camera.quantum_efficiency * camera.sense_node_gain);
}

void SystemConfig::validate() const {
    auto fail = [](const std::string& msg) { throw std::invalid_argument(msg); };

    if (tx.led_radius <= 0) fail("led_radius must be positive");
    if (tx.rotation_radii.empty()) fail("rotation_radii must be non-empty");
    double prev = 0.0;
    for (double r : tx.rotation_radii) {
        if (r <= prev) fail("rotation_radii must be positive and ascending");
        prev = r;
    }
    if (tx.control_angle <= 0 || tx.control_angle > kPi)
        fail("control_angle must lie in (0, pi]");
    const double j_real = 2.0 * kPi / tx.control_angle;
    const int j = static_cast<int>(std::lround(j_real));
    if (j < 2) fail("control_angle must yield at least 2 segments");
    if (std::abs(j * tx.control_angle - 2.0 * kPi) > 1e-9 * 2.0 * kPi)
        fail("control_angle must divide the full circle (J*dtheta = 2*pi within 1e-9)");
    if (tx.total_power <= 0) fail("total_power must be positive");
    if (tx.rotations_per_second <= 0) fail("rotations_per_second must be positive");

    if (channel.distance <= 0) fail("distance must be positive");
    if (channel.path_loss_exponent <= 0) fail("path_loss_exponent must be positive");
    if (channel.filter_transmittance <= 0 || channel.filter_transmittance > 1)
        fail("filter_transmittance must lie in (0, 1]");
    if (channel.fov <= 0 || channel.fov > kPi / 2) fail("fov must lie in (0, pi/2]");
    if (channel.lens_gain <= 0) fail("lens_gain must be positive");
    if (channel.lambertian_order < 0) fail("lambertian_order must be non-negative");
    if (channel.blur_sigma <= 0) fail("blur_sigma must be positive");
    if (channel.kernel_size < 1 || channel.kernel_size % 2 == 0)
        fail("kernel_size must be odd and >= 1");

    if (camera.resolution_x <= 0 || camera.resolution_y <= 0)
        fail("resolution must be positive");
    if (camera.pixel_pitch <= 0) fail("pixel_pitch must be positive");
    if (camera.focal_length <= 0) fail("focal_length must be positive");
    if (camera.quantum_efficiency <= 0 || camera.quantum_efficiency > 1)
        fail("quantum_efficiency must lie in (0, 1]");
    if (camera.v_ref <= 0) fail("v_ref must be positive");
    if (camera.sense_node_gain <= 0) fail("sense_node_gain must be positive");
    if (camera.source_follower_gain <= 0) fail("source_follower_gain must be positive");
    if (camera.v_a_ref <= 0) fail("v_a_ref must be positive");
    if (camera.adc_gain <= 0) fail("adc_gain must be positive");
    if (camera.cds_gain <= 0) fail("cds_gain must be positive");
    if (camera.raw_max <= 0) fail("raw_max must be positive");
    if (camera.pixel_gamma <= 0) fail("pixel_gamma must be positive");
    if (camera.wavelength <= 0) fail("wavelength must be positive");
    if (camera.luminous_efficacy <= 0) fail("luminous_efficacy must be positive");
    if (camera.luminous_efficiency <= 0 || camera.luminous_efficiency > 1)
        fail("luminous_efficiency must lie in (0, 1]");
    if (camera.sigma_n_pixel < 0) fail("sigma_n_pixel must be non-negative");
    if (camera.exposure_target <= 0) fail("exposure_target must be positive");

    if (analysis.prior_one < 0 || analysis.prior_one > 1)
        fail("prior_one must lie in [0, 1]");
    double psum = 0.0;
    for (double p : analysis.neighbor_priors) {
        if (p < 0) fail("neighbor priors must be non-negative");
        psum += p;
    }
    if (std::abs(psum - 1.0) > 1e-12) fail("neighbor priors must sum to 1");
    if (analysis.target_ber <= 0 || analysis.target_ber >= 0.5)
        fail("target_ber must lie in (0, 0.5)");
    if (analysis.isi_neighborhood < 0) fail("isi_neighborhood must be non-negative");
    if (analysis.lambda2_tolerance <= 0) fail("lambda2_tolerance must be positive");
    if (analysis.led_index < 1 ||
        analysis.led_index > static_cast<int>(tx.rotation_radii.size()))
        fail("led_index out of range");

    // Trail must fit on the sensor with room for footprint and blur.
    const double margin = footprint_radius_px() + (channel.kernel_size - 1) / 2 + 2.0;
    const double r_img = image_radius_px(static_cast<int>(tx.rotation_radii.size()));
    const double cx = (camera.resolution_x - 1) / 2.0;
    const double cy = (camera.resolution_y - 1) / 2.0;
    if (r_img + margin >= cx || r_img + margin >= cy)
        fail("projected trail exceeds sensor bounds");
}

SystemConfig parse_config(const std::string& text) {
    SystemConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("line " + std::to_string(lineno) +
                                        ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (val.empty())
            throw std::invalid_argument("malformed value for '" + key + "': empty");

        if (key == "led_radius") cfg.tx.led_radius = parse_double(key, val);
        else if (key == "rotation_radii") cfg.tx.rotation_radii = parse_list(key, val);
        else if (key == "control_angle") cfg.tx.control_angle = parse_double(key, val);
        else if (key == "total_power") cfg.tx.total_power = parse_double(key, val);
        else if (key == "rotations_per_second") cfg.tx.rotations_per_second = parse_double(key, val);
        else if (key == "distance") cfg.channel.distance = parse_double(key, val);
        else if (key == "path_loss_exponent") cfg.channel.path_loss_exponent = parse_double(key, val);
        else if (key == "filter_transmittance") cfg.channel.filter_transmittance = parse_double(key, val);
        else if (key == "fov") cfg.channel.fov = parse_double(key, val);
        else if (key == "lens_gain") cfg.channel.lens_gain = parse_double(key, val);
        else if (key == "lambertian_order") cfg.channel.lambertian_order = parse_double(key, val);
        else if (key == "blur_sigma") cfg.channel.blur_sigma = parse_double(key, val);
        else if (key == "kernel_size") cfg.channel.kernel_size = parse_int(key, val);
        else if (key == "pupil_area") cfg.channel.pupil_area = parse_double(key, val);
        else if (key == "resolution_x") cfg.camera.resolution_x = parse_int(key, val);
        else if (key == "resolution_y") cfg.camera.resolution_y = parse_int(key, val);
        else if (key == "pixel_pitch") cfg.camera.pixel_pitch = parse_double(key, val);
        else if (key == "focal_length") cfg.camera.focal_length = parse_double(key, val);
        else if (key == "quantum_efficiency") cfg.camera.quantum_efficiency = parse_double(key, val);
        else if (key == "v_ref") cfg.camera.v_ref = parse_double(key, val);
        else if (key == "sense_node_gain") cfg.camera.sense_node_gain = parse_double(key, val);
        else if (key == "source_follower_gain") cfg.camera.source_follower_gain = parse_double(key, val);
        else if (key == "v_a_ref") cfg.camera.v_a_ref = parse_double(key, val);
        else if (key == "adc_gain") cfg.camera.adc_gain = parse_double(key, val);
        else if (key == "cds_gain") cfg.camera.cds_gain = parse_double(key, val);
        else if (key == "raw_max") cfg.camera.raw_max = parse_double(key, val);
        else if (key == "pixel_gamma") cfg.camera.pixel_gamma = parse_double(key, val);
        else if (key == "wavelength") cfg.camera.wavelength = parse_double(key, val);
        else if (key == "luminous_efficacy") cfg.camera.luminous_efficacy = parse_double(key, val);
        else if (key == "luminous_efficiency") cfg.camera.luminous_efficiency = parse_double(key, val);
        else if (key == "sigma_n_pixel") cfg.camera.sigma_n_pixel = parse_double(key, val);
        else if (key == "sigma_n_power") cfg.camera.sigma_n_power = parse_double(key, val);
        else if (key == "normalize_adc") cfg.camera.normalize_adc = parse_bool(key, val);
        else if (key == "auto_exposure") cfg.camera.auto_exposure = parse_bool(key, val);
        else if (key == "exposure_target") cfg.camera.exposure_target = parse_double(key, val);
        else if (key == "noise_domain") {
            if (val == "pixel") cfg.camera.noise_domain = NoiseDomain::pixel;
            else if (val == "power") cfg.camera.noise_domain = NoiseDomain::power;
            else throw std::invalid_argument("malformed value for 'noise_domain': " + val);
        }
        else if (key == "prior_one") cfg.analysis.prior_one = parse_double(key, val);
        else if (key == "neighbor_prior_00") cfg.analysis.neighbor_priors[0] = parse_double(key, val);
        else if (key == "neighbor_prior_01") cfg.analysis.neighbor_priors[1] = parse_double(key, val);
        else if (key == "neighbor_prior_10") cfg.analysis.neighbor_priors[2] = parse_double(key, val);
        else if (key == "neighbor_prior_11") cfg.analysis.neighbor_priors[3] = parse_double(key, val);
        else if (key == "target_ber") cfg.analysis.target_ber = parse_double(key, val);
        else if (key == "isi_neighborhood") cfg.analysis.isi_neighborhood = parse_int(key, val);
        else if (key == "lambda2_tolerance") cfg.analysis.lambda2_tolerance = parse_double(key, val);
        else if (key == "led_index") cfg.analysis.led_index = parse_int(key, val);
        else throw std::invalid_argument("unknown key '" + key + "'");
    }
    cfg.validate();
    return cfg;
}

SystemConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("cannot open config file: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

std::string serialize(const SystemConfig& cfg) {
    std::ostringstream o;
    o << "led_radius = " << fmt(cfg.tx.led_radius) << "\n";
    o << "rotation_radii = ";
    for (std::size_t i = 0; i < cfg.tx.rotation_radii.size(); ++i)
        o << (i ? ", " : "") << fmt(cfg.tx.rotation_radii[i]);
    o << "\n";
    o << "control_angle = " << fmt(cfg.tx.control_angle) << "\n";
    o << "total_power = " << fmt(cfg.tx.total_power) << "\n";
    o << "rotations_per_second = " << fmt(cfg.tx.rotations_per_second) << "\n";
    o << "distance = " << fmt(cfg.channel.distance) << "\n";
    o << "path_loss_exponent = " << fmt(cfg.channel.path_loss_exponent) << "\n";
    o << "filter_transmittance = " << fmt(cfg.channel.filter_transmittance) << "\n";
    o << "fov = " << fmt(cfg.channel.fov) << "\n";
    o << "lens_gain = " << fmt(cfg.channel.lens_gain) << "\n";
    o << "lambertian_order = " << fmt(cfg.channel.lambertian_order) << "\n";
    o << "blur_sigma = " << fmt(cfg.channel.blur_sigma) << "\n";
    o << "kernel_size = " << cfg.channel.kernel_size << "\n";
    o << "pupil_area = " << fmt(cfg.channel.pupil_area) << "\n";
    o << "resolution_x = " << cfg.camera.resolution_x << "\n";
    o << "resolution_y = " << cfg.camera.resolution_y << "\n";
    o << "pixel_pitch = " << fmt(cfg.camera.pixel_pitch) << "\n";
    o << "focal_length = " << fmt(cfg.camera.focal_length) << "\n";
    o << "quantum_efficiency = " << fmt(cfg.camera.quantum_efficiency) << "\n";
    o << "v_ref = " << fmt(cfg.camera.v_ref) << "\n";
    o << "sense_node_gain = " << fmt(cfg.camera.sense_node_gain) << "\n";
    o << "source_follower_gain = " << fmt(cfg.camera.source_follower_gain) << "\n";
    o << "v_a_ref = " << fmt(cfg.camera.v_a_ref) << "\n";
    o << "adc_gain = " << fmt(cfg.camera.adc_gain) << "\n";
    o << "cds_gain = " << fmt(cfg.camera.cds_gain) << "\n";
    o << "raw_max = " << fmt(cfg.camera.raw_max) << "\n";
    o << "pixel_gamma = " << fmt(cfg.camera.pixel_gamma) << "\n";
    o << "wavelength = " << fmt(cfg.camera.wavelength) << "\n";
    o << "luminous_efficacy = " << fmt(cfg.camera.luminous_efficacy) << "\n";
    o << "luminous_efficiency = " << fmt(cfg.camera.luminous_efficiency) << "\n";
    o << "sigma_n_pixel = " << fmt(cfg.camera.sigma_n_pixel) << "\n";
    o << "sigma_n_power = " << fmt(cfg.camera.sigma_n_power) << "\n";
    o << "normalize_adc = " << (cfg.camera.normalize_adc ? "true" : "false") << "\n";
    o << "auto_exposure = " << (cfg.camera.auto_exposure ? "true" : "false") << "\n";
    o << "exposure_target = " << fmt(cfg.camera.exposure_target) << "\n";
    o << "noise_domain = " << (cfg.camera.noise_domain == NoiseDomain::pixel ? "pixel" : "power") << "\n";
    o << "prior_one = " << fmt(cfg.analysis.prior_one) << "\n";
    o << "neighbor_prior_00 = " << fmt(cfg.analysis.neighbor_priors[0]) << "\n";
    o << "neighbor_prior_01 = " << fmt(cfg.analysis.neighbor_priors[1]) << "\n";
    o << "neighbor_prior_10 = " << fmt(cfg.analysis.neighbor_priors[2]) << "\n";
    o << "neighbor_prior_11 = " << fmt(cfg.analysis.neighbor_priors[3]) << "\n";
    o << "target_ber = " << fmt(cfg.analysis.target_ber) << "\n";
    o << "isi_neighborhood = " << cfg.analysis.isi_neighborhood << "\n";
    o << "lambda2_tolerance = " << fmt(cfg.analysis.lambda2_tolerance) << "\n";
    o << "led_index = " << cfg.analysis.led_index << "\n";
    return o.str();
}

std::uint64_t config_hash(const SystemConfig& cfg) {
    const std::string s = serialize(cfg);
    std::uint64_t h = 1469598103934665603ull; // FNV-1a 64
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string config_hash_hex(const SystemConfig& cfg) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(config_hash(cfg)));
    return buf;
}

} // namespace trailsim

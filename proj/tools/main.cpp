#include <CLI11.hpp>

#include "trailsim/constants.hpp"
#include "trailsim/design.hpp"
#include "trailsim/io.hpp"
#include "trailsim/mc.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

namespace ts = trailsim;
namespace fs = std::filesystem;

namespace {

ts::SystemConfig load_or_default(const std::string& path) {
    if (path.empty()) {
        ts::SystemConfig cfg;
        cfg.validate();
        return cfg;
    }
    return ts::load_config(path);
}

// "a:b:step" inclusive range or a comma-separated list.
std::vector<double> parse_distances(const std::string& text) {
    std::vector<double> out;
    if (text.find(':') != std::string::npos) {
        double a = 0, b = 0, step = 0;
        char c1 = 0, c2 = 0;
        std::istringstream in(text);
        if (!(in >> a >> c1 >> b >> c2 >> step) || c1 != ':' || c2 != ':' ||
            step <= 0.0 || b < a)
            throw std::invalid_argument("bad distance range: " + text);
        for (double d = a; d <= b + 1e-9; d += step) out.push_back(d);
        return out;
    }
    std::istringstream in(text);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        if (tok.empty()) continue;
        out.push_back(std::stod(tok));
    }
    if (out.empty()) throw std::invalid_argument("empty distance list");
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::string> parse_modes(const std::string& text) {
    static const std::vector<std::string> canonical = {
        "analytic", "no_isi", "k2", "all_segment", "mc"};
    std::vector<std::string> requested;
    std::istringstream in(text);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        if (tok.empty()) continue;
        if (std::find(canonical.begin(), canonical.end(), tok) == canonical.end())
            throw std::invalid_argument("unknown mode '" + tok + "'");
        requested.push_back(tok);
    }
    if (requested.empty()) throw std::invalid_argument("empty mode list");
    // Canonical output order regardless of how modes were listed.
    std::vector<std::string> out;
    for (const auto& m : canonical)
        if (std::find(requested.begin(), requested.end(), m) != requested.end())
            out.push_back(m);
    return out;
}

std::uint64_t round_up_to_frames(std::uint64_t n_bits, int segments) {
    const std::uint64_t j = static_cast<std::uint64_t>(segments);
    const std::uint64_t frames = (std::max<std::uint64_t>(n_bits, 1) + j - 1) / j;
    return frames * j;
}

std::string out_path(const std::string& dir, const char* name) {
    return (fs::path(dir) / name).string();
}

// Segment-averaged noise-free means per transmitted class, for the three
// adjacent-neighbor states (00), (01)/(10), (11).
std::array<std::array<double, 3>, 2> class_reference_means(
    const std::vector<ts::TripletTable>& tables) {
    std::array<std::array<double, 3>, 2> ref{};
    for (const auto& t : tables)
        for (int b = 0; b < 2; ++b) {
            ref[static_cast<std::size_t>(b)][0] +=
                t.pv[static_cast<std::size_t>(ts::triplet_index(0, b, 0))];
            ref[static_cast<std::size_t>(b)][1] +=
                0.5 * (t.pv[static_cast<std::size_t>(ts::triplet_index(0, b, 1))] +
                       t.pv[static_cast<std::size_t>(ts::triplet_index(1, b, 0))]);
            ref[static_cast<std::size_t>(b)][2] +=
                t.pv[static_cast<std::size_t>(ts::triplet_index(1, b, 1))];
        }
    for (auto& row : ref)
        for (auto& v : row) v /= static_cast<double>(tables.size());
    return ref;
}

int cmd_render(const ts::SystemConfig& cfg, const std::string& bits_str,
               bool random, std::optional<std::uint64_t> seed,
               const std::string& out_dir) {
    if (!seed) throw std::invalid_argument("render needs --seed for the noisy frame");
    const int j_count = cfg.segments_per_rotation();
    std::vector<int> bits;
    if (random) {
        bits = ts::random_payload(*seed, 0, j_count);
    } else {
        if (static_cast<int>(bits_str.size()) != j_count)
            throw std::invalid_argument("bit string length " +
                                        std::to_string(bits_str.size()) +
                                        " does not match segment count " +
                                        std::to_string(j_count));
        for (char c : bits_str) {
            if (c != '0' && c != '1')
                throw std::invalid_argument("bit string must contain only 0 and 1");
            bits.push_back(c - '0');
        }
    }

    const ts::Scenario sc = ts::prepare_scenario(cfg, cfg.analysis.led_index);
    const ts::Grid received = ts::render_scene(sc, bits);
    ts::NoiseModel clean = ts::noise_model_from(cfg, 0);
    clean.sigma = 0.0;
    const ts::SensorFrame frame_clean =
        ts::capture_frame(received, sc.exposure_gain, cfg, clean, 0);
    const ts::SensorFrame frame_noisy = ts::capture_frame(
        received, sc.exposure_gain, cfg, ts::noise_model_from(cfg, *seed), 0);

    fs::create_directories(out_dir);
    ts::io::write_pgm16(out_path(out_dir, "frame_clean.pgm"), frame_clean.pv);
    ts::io::write_pgm16(out_path(out_dir, "frame_noisy.pgm"), frame_noisy.pv);
    ts::io::write_text_file(out_path(out_dir, "layout.csv"),
                            ts::io::layout_csv(sc.layout));
    ts::io::write_text_file(
        out_path(out_dir, "manifest.json"),
        ts::io::manifest_json("render", cfg, seed,
                              {"frame_clean.pgm", "frame_noisy.pgm", "layout.csv"}));
    std::cout << "rendered " << j_count << " segments at distance "
              << cfg.channel.distance << " m -> " << out_dir << "\n";
    return 0;
}

int cmd_histogram(const ts::SystemConfig& cfg, std::uint64_t n_bits,
                  std::optional<std::uint64_t> seed, const std::string& out_dir) {
    if (!seed) throw std::invalid_argument("histogram needs --seed");
    const ts::Scenario sc = ts::prepare_scenario(cfg, cfg.analysis.led_index);
    const ts::TrailAnalysis an = ts::analyze_trail(sc);
    const std::uint64_t n = round_up_to_frames(n_bits, sc.layout.segments);
    if (n != n_bits)
        std::cerr << "note: n-bits rounded up to " << n
                  << " (whole frames of " << sc.layout.segments << " bits)\n";
    const ts::McResult mc = ts::run_mc(sc, an, n, *seed);

    const auto ref = class_reference_means(an.tables);
    std::vector<ts::io::ModeRow> rows;
    for (int c = 0; c < 2; ++c) {
        std::uint64_t mass = 0;
        for (auto v : mc.histogram[static_cast<std::size_t>(c)]) mass += v;
        if (mass == 0) {
            std::cerr << "note: class " << c << " empty, skipping mode detection\n";
            continue;
        }
        const auto modes = ts::histogram_modes(mc.histogram[static_cast<std::size_t>(c)]);
        std::cout << "class " << c << ": " << modes.size() << " mode(s) at";
        for (double m : modes) {
            double best = ref[static_cast<std::size_t>(c)][0];
            for (double r : ref[static_cast<std::size_t>(c)])
                if (std::abs(r - m) < std::abs(best - m)) best = r;
            rows.push_back({c, m, best, m - best});
            std::cout << ' ' << m;
        }
        std::cout << "\n";
    }

    fs::create_directories(out_dir);
    ts::io::write_text_file(out_path(out_dir, "histogram.csv"),
                            ts::io::histogram_csv(mc));
    ts::io::write_text_file(out_path(out_dir, "modes.csv"), ts::io::modes_csv(rows));
    ts::io::write_text_file(
        out_path(out_dir, "manifest.json"),
        ts::io::manifest_json("histogram", cfg, seed, {"histogram.csv", "modes.csv"}));
    return 0;
}

int cmd_ber(const ts::SystemConfig& cfg, const std::vector<double>& distances,
            const std::vector<std::string>& modes, std::uint64_t n_bits,
            std::optional<std::uint64_t> seed, const std::string& out_dir) {
    const bool wants_mc = std::find(modes.begin(), modes.end(), "mc") != modes.end();
    if (wants_mc && !seed)
        throw std::invalid_argument("ber with the mc mode needs --seed");

    std::vector<ts::io::BerRow> rows;
    for (double d : distances) {
        ts::SystemConfig c = cfg;
        c.channel.distance = d;
        c.validate();
        const ts::Scenario sc = ts::prepare_scenario(c, c.analysis.led_index);
        const ts::ResponseMatrix matrix = ts::compute_response_matrix(sc);
        const int j_count = sc.layout.segments;
        for (const auto& mode : modes) {
            ts::io::BerRow row;
            row.distance = d;
            row.mode = mode;
            if (mode == "mc") {
                ts::TrailAnalysis an;
                an.matrix = matrix;
                for (int j = 0; j < j_count; ++j)
                    an.tables.push_back(ts::triplet_means(
                        ts::component_responses(matrix, j, 1), c, sc.exposure_gain));
                an.pv_th = ts::trail_threshold(an.tables);
                an.sigma_prime = ts::effective_sigma(sc, an.pv_th);
                const std::uint64_t n = round_up_to_frames(n_bits, j_count);
                const ts::McResult mc = ts::run_mc(sc, an, n, *seed);
                row.ber = mc.ber_hat;
                row.n_bits = mc.n_bits;
                row.n_errors = mc.n_errors;
                row.ci_low = mc.ci_low;
                row.ci_high = mc.ci_high;
            } else {
                int k = 1;
                if (mode == "no_isi") k = 0;
                else if (mode == "k2") k = 2;
                else if (mode == "all_segment") k = (j_count - 1) / 2;
                row.ber = ts::k_neighbor_ber(sc, matrix, k).ber;
            }
            rows.push_back(std::move(row));
        }
    }

    fs::create_directories(out_dir);
    ts::io::write_text_file(out_path(out_dir, "ber.csv"), ts::io::ber_csv(rows));
    ts::io::write_text_file(out_path(out_dir, "manifest.json"),
                            ts::io::manifest_json("ber", cfg, seed, {"ber.csv"}));
    std::cout << "wrote " << rows.size() << " rows -> "
              << out_path(out_dir, "ber.csv") << "\n";
    return 0;
}

int cmd_optimize(const ts::SystemConfig& cfg, const std::string& out_dir,
                 std::optional<int> led, const std::vector<double>& distances,
                 bool throughput_table) {
    fs::create_directories(out_dir);
    if (throughput_table) {
        const int led_index = led.value_or(cfg.analysis.led_index);
        const int j_max = ts::max_even_segments(cfg, led_index, cfg.channel.distance);
        std::vector<ts::io::ThroughputRow> rows;
        for (int j = 2; j <= j_max; j += 2) {
            ts::SystemConfig c = cfg;
            c.tx.control_angle = 2.0 * ts::kPi / j;
            c.analysis.led_index = led_index;
            c.validate();
            const ts::Scenario sc = ts::prepare_scenario(c, led_index);
            const double ber = ts::analytic_ber(sc).ber;
            rows.push_back({c.tx.control_angle, j, ber,
                            ts::throughput(c.tx.control_angle, c.tx.rotations_per_second),
                            ber <= cfg.analysis.target_ber});
        }
        ts::io::write_text_file(out_path(out_dir, "throughput.csv"),
                                ts::io::throughput_csv(rows));
        ts::io::write_text_file(
            out_path(out_dir, "manifest.json"),
            ts::io::manifest_json("optimize", cfg, std::nullopt, {"throughput.csv"}));
        std::cout << "wrote " << rows.size() << " rows -> "
                  << out_path(out_dir, "throughput.csv") << "\n";
        return 0;
    }

    std::vector<int> leds;
    if (led)
        leds.push_back(*led);
    else
        for (int i = 1; i <= static_cast<int>(cfg.tx.rotation_radii.size()); ++i)
            leds.push_back(i);
    const auto points = ts::design_sweep(cfg, distances, leds);
    ts::io::write_text_file(out_path(out_dir, "design.csv"),
                            ts::io::design_csv(points));
    ts::io::write_text_file(
        out_path(out_dir, "manifest.json"),
        ts::io::manifest_json("optimize", cfg, std::nullopt, {"design.csv"}));
    std::cout << "wrote " << points.size() << " design points -> "
              << out_path(out_dir, "design.csv") << "\n";
    return 0;
}

int cmd_validate(const ts::SystemConfig& cfg) {
    int failures = 0;
    auto report = [&](const char* name, bool ok, const std::string& detail) {
        std::cout << (ok ? "[ ok ] " : "[FAIL] ") << name;
        if (!ok && !detail.empty()) std::cout << ": " << detail;
        std::cout << "\n";
        if (!ok) ++failures;
    };

    const ts::BlurKernel kernel =
        ts::gaussian_kernel(cfg.channel.kernel_size, cfg.channel.blur_sigma);
    double tap_sum = 0.0;
    for (double t : kernel.taps) tap_sum += t;
    report("kernel_normalization", std::abs(tap_sum - 1.0) <= 1e-12,
           "kernel taps sum to " + ts::io::fmt_num(tap_sum));

    const ts::Scenario sc = ts::prepare_scenario(cfg, cfg.analysis.led_index);
    const std::vector<int> all_on(static_cast<std::size_t>(sc.layout.segments), 1);
    const ts::Grid blink = ts::accumulate_blink_energy(cfg, sc.layout, all_on);
    const ts::Grid radio = ts::radiometric_distribution(
        blink, cfg.camera.luminous_efficacy, cfg.camera.luminous_efficiency);
    const double e_total = cfg.transmit_energy(sc.layout.segments);
    const ts::Grid alloc = ts::allocate_power(radio, e_total);
    const double alloc_err = std::abs(alloc.sum() - e_total) / e_total;
    report("energy_conservation", alloc_err <= 1e-12,
           "relative allocation error " + ts::io::fmt_num(alloc_err));

    ts::Grid unit_gain(static_cast<ts::Window>(alloc), ts::GridRole::gain_field);
    for (double& v : unit_gain.cells()) v = 1.0;
    const ts::Grid conv = ts::received_power(alloc, unit_gain, kernel);
    const double conv_err = std::abs(conv.sum() - alloc.sum()) / alloc.sum();
    report("convolution_energy", conv_err <= 1e-12,
           "relative energy error " + ts::io::fmt_num(conv_err));

    const ts::TrailAnalysis an = ts::analyze_trail(sc);
    bool ordering_ok = true;
    std::string ordering_detail;
    for (const auto& t : an.tables) {
        const auto rep = ts::verify_worst_case(t, an.pv_th, an.sigma_prime);
        if (!rep.ok) {
            ordering_ok = false;
            ordering_detail = rep.detail;
            break;
        }
    }
    report("worst_case_ordering", ordering_ok, ordering_detail);

    // Closed-form BER against direct enumeration of the 8 bit triplets.
    const ts::BerBreakdown ber = ts::k_neighbor_ber(sc, an.matrix, 1);
    double enumerated = 0.0;
    for (int j = 0; j < sc.layout.segments; ++j) {
        const auto& t = an.tables[static_cast<std::size_t>(j)];
        for (int p = 0; p < 2; ++p)
            for (int b = 0; b < 2; ++b)
                for (int n = 0; n < 2; ++n) {
                    const double pi_b = b ? cfg.analysis.prior_one
                                          : 1.0 - cfg.analysis.prior_one;
                    const double pi_nb =
                        cfg.analysis.neighbor_priors[static_cast<std::size_t>(p * 2 + n)];
                    enumerated += pi_b * pi_nb *
                        ts::conditional_error_signed(
                            an.pv_th,
                            t.pv[static_cast<std::size_t>(ts::triplet_index(p, b, n))],
                            an.sigma_prime, b);
                }
    }
    enumerated /= static_cast<double>(sc.layout.segments);
    report("oracle_equivalence", std::abs(ber.ber - enumerated) <= 1e-12,
           "analytic " + ts::io::fmt_num(ber.ber) + " vs enumerated " +
               ts::io::fmt_num(enumerated));

    double lambda2_max = 0.0;
    for (const auto& seg : ber.segments) lambda2_max = std::max(lambda2_max, seg.lambda2);
    report("leakage_ratio", lambda2_max <= cfg.analysis.lambda2_tolerance,
           "max lambda2 " + ts::io::fmt_num(lambda2_max) + " exceeds " +
               ts::io::fmt_num(cfg.analysis.lambda2_tolerance) +
               "; K-neighbor model recommended");

    return failures == 0 ? 0 : 2;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rotating-LED light-trail link simulator and BER analyzer"};
    app.require_subcommand(1);

    std::string config_path;
    int threads = 0;
    app.add_option("--config", config_path, "Config file (key = value lines)");
    app.add_option("--threads", threads, "Worker thread cap (0 = library default)");

    std::optional<std::uint64_t> seed;
    std::string out_dir = "out";
    std::string bits_str;
    bool random_bits = false;
    std::uint64_t hist_bits = 5000;
    std::uint64_t mc_bits = 1000000;
    std::string distances_str = "46:62:2";
    std::string modes_str = "analytic,mc";
    std::optional<int> led;
    std::optional<double> target_ber;
    bool throughput_table = false;

    auto add_seed = [&](CLI::App* cmd) {
        cmd->add_option("--seed", seed, "Random seed (required for noisy output)");
    };
    auto add_out = [&](CLI::App* cmd) {
        cmd->add_option("--out", out_dir, "Output directory");
    };
    auto add_led = [&](CLI::App* cmd) {
        cmd->add_option("--led", led, "LED index override (1 = innermost)");
    };

    CLI::App* render = app.add_subcommand("render", "Render one frame pair and the layout");
    render->add_option("--bits", bits_str, "Explicit bit pattern, one char per segment");
    render->add_flag("--random", random_bits, "Draw the payload from --seed");
    add_seed(render);
    add_out(render);
    add_led(render);

    CLI::App* histogram = app.add_subcommand("histogram", "Centroid pixel-value histograms by class");
    histogram->add_option("--n-bits", hist_bits, "Payload size (rounded up to whole frames)")
        ->capture_default_str();
    add_seed(histogram);
    add_out(histogram);
    add_led(histogram);

    CLI::App* ber = app.add_subcommand("ber", "BER versus distance tables");
    ber->add_option("--distances", distances_str, "start:end:step or comma list");
    ber->add_option("--modes", modes_str, "analytic,no_isi,k2,all_segment,mc");
    ber->add_option("--n-bits", mc_bits, "Monte Carlo payload size")->capture_default_str();
    add_seed(ber);
    add_out(ber);
    add_led(ber);

    CLI::App* optimize = app.add_subcommand("optimize", "Control-angle selection under the target BER");
    optimize->add_option("--distances", distances_str, "start:end:step or comma list");
    optimize->add_option("--target-ber", target_ber, "Feasibility threshold");
    optimize->add_flag("--throughput", throughput_table,
                       "Emit the throughput-vs-control-angle table for one LED");
    add_out(optimize);
    add_led(optimize);

    CLI::App* validate = app.add_subcommand("validate", "Run the invariant suite on a config");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        ts::SystemConfig cfg = load_or_default(config_path);
        if (threads > 0) ts::set_thread_count(threads);
        if (led) {
            cfg.analysis.led_index = *led;
            cfg.validate();
        }
        if (target_ber) {
            cfg.analysis.target_ber = *target_ber;
            cfg.validate();
        }

        if (render->parsed()) {
            if (!random_bits && bits_str.empty())
                throw std::invalid_argument("render needs --bits or --random");
            if (random_bits && !bits_str.empty())
                throw std::invalid_argument("--bits and --random are exclusive");
            return cmd_render(cfg, bits_str, random_bits, seed, out_dir);
        }
        if (histogram->parsed()) return cmd_histogram(cfg, hist_bits, seed, out_dir);
        if (ber->parsed())
            return cmd_ber(cfg, parse_distances(distances_str),
                           parse_modes(modes_str), mc_bits, seed, out_dir);
        if (optimize->parsed())
            return cmd_optimize(cfg, out_dir, led, parse_distances(distances_str),
                                throughput_table);
        if (validate->parsed()) return cmd_validate(cfg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "trailsim/camera.hpp"
#include "trailsim/philox.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <vector>

using namespace trailsim;

namespace {

Grid received_grid(Window w, double value) {
    Grid g(w, GridRole::received);
    for (double& v : g.cells()) v = value;
    return g;
}

} // namespace

TEST_CASE("photon count floors at zero") {
    const double q_p = 3.2e-19;
    CHECK(photon_count(3.2e-16, 0.0, q_p) == doctest::Approx(1000.0).epsilon(1e-12));
    CHECK(photon_count(3.2e-16, -3.2e-16, q_p) == 0.0);
    CHECK(photon_count(1.0e-18, -5.0e-18, q_p) == 0.0);
    CHECK(photon_count(0.0, 6.4e-19, q_p) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK_THROWS_AS(photon_count(1.0, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("pixel response has a dead zone, a linear-gamma region and a ceiling") {
    const CameraConfig cam;
    // Dark until the sense voltage drop reaches the amplifier offset:
    // (v_ref - v_a_ref) / (QE * sense node gain) photons.
    CHECK(response_floor_photons(cam) ==
          doctest::Approx(4285.714285714287).epsilon(1e-12));
    CHECK(pixel_response(0.0, cam) == 0.0);
    CHECK(pixel_response(3000.0, cam) == 0.0);
    CHECK(pixel_response(response_floor_photons(cam), cam) ==
          doctest::Approx(0.0).scale(1.0).epsilon(1e-6));
    CHECK(pixel_response(response_floor_photons(cam) + 1.0, cam) ==
          doctest::Approx(2.977819534260349).epsilon(1e-9));

    // Interior of the transfer curve.
    CHECK(pixel_response(10000.0, cam) ==
          doctest::Approx(151.91769151381678).epsilon(1e-12));
    CHECK(pixel_response(13000.0, cam) ==
          doctest::Approx(184.04025519569248).epsilon(1e-12));

    // Full well saturates exactly at 255 when the ADC is normalized.
    CHECK(response_ceiling_photons(cam) ==
          doctest::Approx(22142.857142857145).epsilon(1e-12));
    CHECK(pixel_response(response_ceiling_photons(cam), cam) ==
          doctest::Approx(255.0).epsilon(1e-12));
    CHECK(pixel_response(30000.0, cam) == 255.0);

    // Monotone nondecreasing throughout.
    double prev = -1.0;
    for (double i = 0.0; i <= 30000.0; i += 250.0) {
        const double pv = pixel_response(i, cam);
        CHECK(pv >= prev);
        prev = pv;
    }
}

TEST_CASE("unnormalized adc leaves the raw scale to adc_gain") {
    CameraConfig cam;
    cam.normalize_adc = false;  // adc_gain stays 1 count per volt
    CHECK(pixel_response(22142.857142857145, cam) ==
          doctest::Approx(8.820402605683325).epsilon(1e-9));
    CHECK(pixel_response(22142.857142857145, CameraConfig{}) ==
          doctest::Approx(255.0).epsilon(1e-12));
}

TEST_CASE("response inverse and derivative are consistent with the curve") {
    const CameraConfig cam;
    CHECK(response_inverse_photons(128.0, cam) ==
          doctest::Approx(8205.709251336928).epsilon(1e-12));
    for (double pv : {10.0, 64.0, 128.0, 200.0, 250.0}) {
        const double photons = response_inverse_photons(pv, cam);
        CHECK(pixel_response(photons, cam) == doctest::Approx(pv).epsilon(1e-10));
    }
    CHECK_THROWS_AS(response_inverse_photons(0.0, cam), std::domain_error);
    CHECK_THROWS_AS(response_inverse_photons(255.0, cam), std::domain_error);

    // Frozen value plus a central finite difference.
    CHECK(response_derivative(10000.0, cam) ==
          doctest::Approx(0.012084361824962699).epsilon(1e-12));
    for (double i : {6000.0, 10000.0, 18000.0}) {
        const double h = 1.0e-2;
        const double fd = (pixel_response(i + h, cam) - pixel_response(i - h, cam)) / (2 * h);
        CHECK(response_derivative(i, cam) == doctest::Approx(fd).epsilon(1e-6));
    }
    CHECK_THROWS_WITH_AS(response_derivative(1000.0, cam),
                         "operating point saturated", std::domain_error);
    CHECK_THROWS_WITH_AS(response_derivative(25000.0, cam),
                         "operating point saturated", std::domain_error);
}

TEST_CASE("power sigma maps a pixel sigma through the local slope") {
    SystemConfig cfg;
    const double op = 10000.0;
    const double sig = power_sigma_from_pixel(cfg, 4.065, op);
    CHECK(sig * response_derivative(op, cfg.camera) / cfg.photon_energy() ==
          doctest::Approx(4.065).epsilon(1e-12));
}

TEST_CASE("noise model picks sigma by domain") {
    SystemConfig cfg;
    CHECK(noise_model_from(cfg, 9).domain == NoiseDomain::pixel);
    CHECK(noise_model_from(cfg, 9).sigma == 4.065);
    CHECK(noise_model_from(cfg, 9).seed == 9);
    cfg.camera.noise_domain = NoiseDomain::power;
    cfg.camera.sigma_n_power = 2.5e-17;
    CHECK(noise_model_from(cfg, 9).domain == NoiseDomain::power);
    CHECK(noise_model_from(cfg, 9).sigma == 2.5e-17);
}

TEST_CASE("pixel-domain capture adds noise after the response and clips") {
    SystemConfig cfg;
    const Window w{100, 200, 3, 3};
    // Mid-range operating point: response(13000 photons) ~ 184 PV.
    const double r = 13000.0 * cfg.photon_energy();
    const Grid received = received_grid(w, r);
    NoiseModel nm{NoiseDomain::pixel, 4.065, 42};
    const SensorFrame f = capture_frame(received, 1.0, cfg, nm, 7);
    CHECK(f.pv.role == GridRole::pixel_value);
    CHECK(f.seed == 42);
    CHECK(f.frame_id == 7);
    CHECK(f.config_hash == config_hash(cfg));

    for (int y = 200; y < 203; ++y)
        for (int x = 100; x < 103; ++x) {
            const std::uint64_t cell =
                static_cast<std::uint64_t>(y) * cfg.camera.resolution_x + x;
            double expect = pixel_response(13000.0, cfg.camera) +
                            4.065 * normal_at(42, kNoiseStream, 7, cell);
            expect = std::min(255.0, std::max(0.0, expect));
            CHECK(f.pv.at(x, y) == doctest::Approx(expect).epsilon(1e-12));
        }

    // All-dark grid: negative draws clip at zero, so values sit in [0, 255].
    const Grid dark = received_grid(w, 0.0);
    const SensorFrame fd = capture_frame(dark, 1.0, cfg, nm, 8);
    for (double v : fd.pv.cells()) {
        CHECK(v >= 0.0);
        CHECK(v <= 255.0);
    }
}

TEST_CASE("power-domain capture perturbs the energy before the response") {
    SystemConfig cfg;
    cfg.camera.noise_domain = NoiseDomain::power;
    const Window w{10, 10, 2, 2};
    const double r = 13000.0 * cfg.photon_energy();
    const Grid received = received_grid(w, r);
    const double sigma_n = 500.0 * cfg.photon_energy();  // 500 photons rms
    NoiseModel nm{NoiseDomain::power, sigma_n, 11};
    const SensorFrame f = capture_frame(received, 1.0, cfg, nm, 3);
    for (int y = 10; y < 12; ++y)
        for (int x = 10; x < 12; ++x) {
            const std::uint64_t cell =
                static_cast<std::uint64_t>(y) * cfg.camera.resolution_x + x;
            const double n = sigma_n * normal_at(11, kNoiseStream, 3, cell);
            const double expect =
                pixel_response(photon_count(r, n, cfg.photon_energy()), cfg.camera);
            CHECK(f.pv.at(x, y) == doctest::Approx(expect).epsilon(1e-12));
        }
}

TEST_CASE("capture rejects mis-staged grids and negative sigma") {
    SystemConfig cfg;
    Grid wrong(Window{0, 0, 2, 2}, GridRole::allocated);
    NoiseModel nm{NoiseDomain::pixel, 1.0, 1};
    CHECK_THROWS_AS(capture_frame(wrong, 1.0, cfg, nm, 0), std::invalid_argument);
    const Grid ok = received_grid(Window{0, 0, 2, 2}, 0.0);
    NoiseModel bad{NoiseDomain::pixel, -1.0, 1};
    CHECK_THROWS_AS(capture_frame(ok, 1.0, cfg, bad, 0), std::invalid_argument);
}

TEST_CASE("noise draws are addressed by seed, frame and absolute pixel") {
    SystemConfig cfg;
    const double r = 13000.0 * cfg.photon_energy();
    NoiseModel nm{NoiseDomain::pixel, 4.065, 5};

    // Same inputs, same frame: identical output.
    const Grid a = received_grid(Window{100, 200, 4, 4}, r);
    const SensorFrame f1 = capture_frame(a, 1.0, cfg, nm, 2);
    const SensorFrame f2 = capture_frame(a, 1.0, cfg, nm, 2);
    CHECK(std::memcmp(f1.pv.cells().data(), f2.pv.cells().data(),
                      f1.pv.cells().size() * sizeof(double)) == 0);

    // Different frame or seed: different noise.
    const SensorFrame f3 = capture_frame(a, 1.0, cfg, nm, 3);
    CHECK(f1.pv.at(100, 200) != f3.pv.at(100, 200));
    NoiseModel nm2{NoiseDomain::pixel, 4.065, 6};
    const SensorFrame f4 = capture_frame(a, 1.0, cfg, nm2, 2);
    CHECK(f1.pv.at(100, 200) != f4.pv.at(100, 200));

    // A pixel's draw does not depend on the ROI that contains it.
    const Grid b = received_grid(Window{98, 197, 8, 8}, r);
    const SensorFrame f5 = capture_frame(b, 1.0, cfg, nm, 2);
    for (int y = 200; y < 204; ++y)
        for (int x = 100; x < 104; ++x)
            CHECK(f1.pv.at(x, y) == f5.pv.at(x, y));
}

TEST_CASE("parallel and serial capture agree bitwise") {
    SystemConfig cfg;
    const double r = 9000.0 * cfg.photon_energy();
    const Grid g = received_grid(Window{50, 60, 32, 24}, r);
    NoiseModel nm{NoiseDomain::pixel, 4.065, 77};
    const SensorFrame par = capture_frame(g, 1.3, cfg, nm, 12);
    const SensorFrame ser = reference::capture_frame(g, 1.3, cfg, nm, 12);
    CHECK(std::memcmp(par.pv.cells().data(), ser.pv.cells().data(),
                      par.pv.cells().size() * sizeof(double)) == 0);
}

TEST_CASE("exposure gain scales the received energy before conversion") {
    SystemConfig cfg;
    const Window w{0, 0, 1, 1};
    const Grid g = received_grid(w, 6500.0 * cfg.photon_energy());
    NoiseModel off{NoiseDomain::pixel, 0.0, 0};
    const SensorFrame f1 = capture_frame(g, 1.0, cfg, off, 0);
    const SensorFrame f2 = capture_frame(g, 2.0, cfg, off, 0);
    CHECK(f1.pv.at(0, 0) == doctest::Approx(pixel_response(6500.0, cfg.camera)).epsilon(1e-12));
    CHECK(f2.pv.at(0, 0) == doctest::Approx(pixel_response(13000.0, cfg.camera)).epsilon(1e-12));
}

TEST_CASE("max-bright noise estimate recovers the generator sigma") {
    SystemConfig cfg;
    // One bright pixel dominates every frame's maximum; the rest stay near
    // zero, far below bright minus any plausible draw.
    Grid g(Window{1000, 1000, 3, 3}, GridRole::received);
    g.at(1001, 1001) = 13000.0 * cfg.photon_energy();
    NoiseModel nm{NoiseDomain::pixel, 4.065, 2024};
    std::vector<SensorFrame> frames;
    frames.reserve(2000);
    for (std::uint64_t fid = 0; fid < 2000; ++fid)
        frames.push_back(capture_frame(g, 1.0, cfg, nm, fid));
    const double est = estimate_sigma_maxbright(frames);
    CHECK(est == doctest::Approx(4.065).epsilon(0.06));
    CHECK_THROWS_AS(estimate_sigma_maxbright({frames[0]}), std::invalid_argument);
}

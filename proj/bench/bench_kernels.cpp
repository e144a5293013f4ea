// Times the parallel kernels against their serial reference
// implementations and checks the outputs agree bitwise.

#include "trailsim/camera.hpp"
#include "trailsim/mc.hpp"
#include "trailsim/render.hpp"

#include <chrono>
#include <cstdio>
#include <vector>

namespace ts = trailsim;

namespace {

using clock_type = std::chrono::steady_clock;

template <typename F>
double time_ms(F&& fn, int reps) {
    // One warmup, then best of reps.
    fn();
    double best = 1e300;
    for (int i = 0; i < reps; ++i) {
        const auto t0 = clock_type::now();
        fn();
        const auto t1 = clock_type::now();
        best = std::min(best,
                        std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    return best;
}

bool grids_equal(const ts::Grid& a, const ts::Grid& b) {
    return a.cells() == b.cells();
}

} // namespace

int main() {
    ts::SystemConfig cfg;
    cfg.validate();
    const ts::Scenario sc = ts::prepare_scenario(cfg, cfg.analysis.led_index);
    const std::vector<int> bits = ts::random_payload(42, 0, sc.layout.segments);

    std::printf("threads: %d\n", ts::thread_count());
    std::printf("%-22s %12s %12s %8s %s\n", "kernel", "serial ms", "parallel ms",
                "speedup", "bitwise");

    const ts::Grid blink_ref = ts::reference::accumulate_blink_energy(cfg, sc.layout, bits);
    const ts::Grid blink_par = ts::accumulate_blink_energy(cfg, sc.layout, bits);
    {
        const double s = time_ms([&] { (void)ts::reference::accumulate_blink_energy(cfg, sc.layout, bits); }, 5);
        const double p = time_ms([&] { (void)ts::accumulate_blink_energy(cfg, sc.layout, bits); }, 5);
        std::printf("%-22s %12.3f %12.3f %8.2f %s\n", "accumulate_blink", s, p,
                    s / p, grids_equal(blink_ref, blink_par) ? "yes" : "NO");
    }

    const ts::Grid radio = ts::radiometric_distribution(
        blink_ref, cfg.camera.luminous_efficacy, cfg.camera.luminous_efficiency);
    int active = 0;
    for (int b : bits) active += b;
    const ts::Grid alloc = ts::allocate_power(radio, cfg.transmit_energy(active));
    {
        const ts::Grid r_ref = ts::reference::received_power(alloc, sc.gain, sc.kernel);
        const ts::Grid r_par = ts::received_power(alloc, sc.gain, sc.kernel);
        const double s = time_ms([&] { (void)ts::reference::received_power(alloc, sc.gain, sc.kernel); }, 5);
        const double p = time_ms([&] { (void)ts::received_power(alloc, sc.gain, sc.kernel); }, 5);
        std::printf("%-22s %12.3f %12.3f %8.2f %s\n", "received_power", s, p,
                    s / p, grids_equal(r_ref, r_par) ? "yes" : "NO");
    }

    const ts::Grid received = ts::render_scene(sc, bits);
    const ts::NoiseModel noise = ts::noise_model_from(cfg, 7);
    {
        const ts::SensorFrame f_ref =
            ts::reference::capture_frame(received, sc.exposure_gain, cfg, noise, 0);
        const ts::SensorFrame f_par =
            ts::capture_frame(received, sc.exposure_gain, cfg, noise, 0);
        const double s = time_ms([&] { (void)ts::reference::capture_frame(received, sc.exposure_gain, cfg, noise, 0); }, 5);
        const double p = time_ms([&] { (void)ts::capture_frame(received, sc.exposure_gain, cfg, noise, 0); }, 5);
        std::printf("%-22s %12.3f %12.3f %8.2f %s\n", "capture_frame", s, p,
                    s / p, grids_equal(f_ref.pv, f_par.pv) ? "yes" : "NO");
    }

    return 0;
}

#pragma once

namespace trailsim {

// Physical constants (exact SI values).
inline constexpr double kPlanck = 6.62607015e-34;      // J*s
inline constexpr double kLightSpeed = 299792458.0;     // m/s
inline constexpr double kPi = 3.14159265358979323846;

// Photon energy at wavelength lambda [m] -> J.
inline constexpr double photon_energy(double lambda_m) {
    return kPlanck * kLightSpeed / lambda_m;
}

} // namespace trailsim

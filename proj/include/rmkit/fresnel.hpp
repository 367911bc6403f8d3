#pragma once

#include <cmath>
#include <complex>
#include <numbers>

#include "rmkit/errors.hpp"
#include "rmkit/material.hpp"

namespace rmkit {

inline constexpr double kSpeedOfLight = 299792458.0;
inline constexpr double kVacuumPermittivity = 8.8541878128e-12;

/// Complex amplitude coefficients of a homogeneous slab in free space,
/// including the multiple internal reflections.
struct SlabAmplitudes {
    std::complex<double> r_te, t_te, r_tm, t_tm;
};

/// Polarization-averaged power coefficients.
struct SlabPower {
    double reflection = 0.0;
    double transmission = 0.0;
};

inline std::complex<double> complex_permittivity(const Material& m, double frequency_hz) {
    const double omega = 2.0 * std::numbers::pi * frequency_hz;
    return {m.rel_permittivity, -m.conductivity / (omega * kVacuumPermittivity)};
}

/// TE/TM slab amplitudes for a plane wave incident at `angle` (radians from the normal).
inline SlabAmplitudes slab_amplitudes(const Material& m, double angle, double frequency_hz) {
    if (!(angle >= 0.0 && angle < std::numbers::pi / 2)) {
        throw DomainError("incidence angle must lie in [0, pi/2)");
    }
    using cd = std::complex<double>;
    const cd eps = complex_permittivity(m, frequency_hz);
    const double cos_i = std::cos(angle);
    const double sin_i = std::sin(angle);
    // Normal wavenumber ratio inside the slab; principal root has Re >= 0, Im <= 0
    // for a passive medium, so exp(-j*delta) decays.
    const cd root = std::sqrt(eps - sin_i * sin_i);

    const cd r_te = (cos_i - root) / (cos_i + root);
    const cd r_tm = (eps * cos_i - root) / (eps * cos_i + root);

    const double k0 = 2.0 * std::numbers::pi * frequency_hz / kSpeedOfLight;
    const cd delta = k0 * m.thickness * root;
    const cd one_way = std::exp(cd(0.0, -1.0) * delta);
    const cd round_trip = one_way * one_way;

    auto slab = [&](cd r, cd& refl, cd& trans) {
        const cd denom = 1.0 - r * r * round_trip;
        refl = r * (1.0 - round_trip) / denom;
        trans = (1.0 - r * r) * one_way / denom;
    };
    SlabAmplitudes a;
    slab(r_te, a.r_te, a.t_te);
    slab(r_tm, a.r_tm, a.t_tm);
    return a;
}

/// Reflectance/transmittance averaged over TE and TM power.
inline SlabPower fresnel_slab_coefficients(const Material& m, double angle, double frequency_hz) {
    const SlabAmplitudes a = slab_amplitudes(m, angle, frequency_hz);
    SlabPower p;
    p.reflection = 0.5 * (std::norm(a.r_te) + std::norm(a.r_tm));
    p.transmission = 0.5 * (std::norm(a.t_te) + std::norm(a.t_tm));
    // Rounding can push a lossless sum a hair past one.
    p.reflection = std::min(p.reflection, 1.0);
    p.transmission = std::min(p.transmission, 1.0);
    return p;
}

/// Single knife-edge loss J(nu) in dB (ITU-R P.526 approximation).
inline double knife_edge_loss_db(double nu) {
    if (nu <= -0.78) return 0.0;
    const double a = nu - 0.1;
    return 6.9 + 20.0 * std::log10(std::sqrt(a * a + 1.0) + a);
}

/// Fresnel-Kirchhoff parameter from the excess path length over the direct ray.
inline double fresnel_parameter(double excess_path_m, double wavelength_m, bool obstructed) {
    const double nu = 2.0 * std::sqrt(std::max(excess_path_m, 0.0) / wavelength_m);
    return obstructed ? nu : -nu;
}

}  // namespace rmkit

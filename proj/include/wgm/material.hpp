#pragma once

#include <array>
#include <string>

namespace wgm {

/// One Sellmeier resonance term: n^2(lambda) = 1 + sum_i B_i lambda^2 / (lambda^2 - C_i).
struct SellmeierTerm {
    double b = 0.0;       // dimensionless oscillator strength
    double c_um2 = 0.0;   // resonance wavelength squared, um^2
};

/**
 * Optical, thermal, elastic and photoelastic constants of the resonator glass.
 *
 * The default set (fused_silica()) uses the Malitson Sellmeier coefficients
 * and standard fused-silica elasto-optic constants. dn_dT is a calibrated
 * default chosen so that the thermal tuning coefficient of a 375 THz mode is
 * -2.5 GHz/K.  The two photoelastic gains rescale the raw strain-optic tensor
 * response per polarization; they are calibrated so that the rigid-cylinder
 * tuning model yields 5 GHz/V (TE) and a TM/TE slope ratio of exactly 1.75 at
 * the reference strain of 6e-5 per volt (see tuning.hpp).  Every field can be
 * overridden from the JSON config.
 */
struct OpticalMaterial {
    std::string name = "fused-silica";
    std::array<SellmeierTerm, 3> sellmeier{};
    double dn_dT = 0.0;               // 1/K
    double thermal_expansion = 0.0;   // 1/K
    double poisson_ratio = 0.0;
    double photoelastic_p11 = 0.0;
    double photoelastic_p12 = 0.0;
    double elastic_limit_strain = 0.0;
    double plastic_onset_strain = 0.0;
    double photoelastic_gain_te = 1.0;
    double photoelastic_gain_tm = 1.0;
};

/// Wavelength range over which the dispersion model is trusted, in um.
inline constexpr double kMinWavelengthUm = 0.4;
inline constexpr double kMaxWavelengthUm = 2.0;

/// Default fused-silica constants (see struct doc).
OpticalMaterial fused_silica();

/**
 * Refractive index n(lambda) from the Sellmeier expansion.
 *
 * @param wavelength_um  vacuum wavelength, must lie in [0.4, 2.0] um
 * @throws DomainError   outside the supported dispersion range
 */
double refractive_index(const OpticalMaterial& material, double wavelength_um);

/// Check the type invariants (index in (1,2) over the supported range,
/// poisson_ratio in (0, 0.5), strain limits ordered).  Throws DomainError.
void validate_material(const OpticalMaterial& material);

}  // namespace wgm

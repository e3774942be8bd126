#include "wgm/material.hpp"

#include <cmath>
#include <sstream>

#include "wgm/errors.hpp"

namespace wgm {

OpticalMaterial fused_silica() {
    OpticalMaterial m;
    m.name = "fused-silica";
    // Malitson (1965) fused-silica coefficients; C_i stored as um^2.
    m.sellmeier = {SellmeierTerm{0.6961663, 0.0684043 * 0.0684043},
                   SellmeierTerm{0.4079426, 0.1162414 * 0.1162414},
                   SellmeierTerm{0.8974794, 9.896161 * 9.896161}};
    m.dn_dT = 8.9e-6;              // calibrated: -2.5 GHz/K at 375 THz
    m.thermal_expansion = 5.5e-7;
    m.poisson_ratio = 0.17;
    m.photoelastic_p11 = 0.121;
    m.photoelastic_p12 = 0.270;
    m.elastic_limit_strain = 2.5e-3;   // calibrated: budget voltage ~42 V at 6e-5/V
    m.plastic_onset_strain = 2.52e-3;
    // Calibrated against the cylinder tuning anchors (5 GHz/V TE, ratio 1.75);
    // derivation in tuning.cpp.
    m.photoelastic_gain_te = 1.693486087033072;
    m.photoelastic_gain_tm = 1.018367240236323;
    return m;
}

double refractive_index(const OpticalMaterial& material, double wavelength_um) {
    if (!(wavelength_um >= kMinWavelengthUm && wavelength_um <= kMaxWavelengthUm)) {
        std::ostringstream os;
        os << "refractive_index: wavelength " << wavelength_um
           << " um outside supported range [" << kMinWavelengthUm << ", "
           << kMaxWavelengthUm << "]";
        throw DomainError(os.str());
    }
    const double l2 = wavelength_um * wavelength_um;
    double n2 = 1.0;
    for (const auto& term : material.sellmeier) {
        n2 += term.b * l2 / (l2 - term.c_um2);
    }
    if (!(n2 > 0.0) || !std::isfinite(n2)) {
        throw NumericError("refractive_index: Sellmeier expansion not positive/finite");
    }
    return std::sqrt(n2);
}

void validate_material(const OpticalMaterial& material) {
    if (!(material.poisson_ratio > 0.0 && material.poisson_ratio < 0.5)) {
        throw DomainError("material: poisson_ratio must be in (0, 0.5)");
    }
    if (!(material.elastic_limit_strain > 0.0)) {
        throw DomainError("material: elastic_limit_strain must be > 0");
    }
    if (!(material.plastic_onset_strain >= material.elastic_limit_strain)) {
        throw DomainError("material: plastic_onset_strain must be >= elastic_limit_strain");
    }
    if (!(material.photoelastic_gain_te > 0.0 && material.photoelastic_gain_tm > 0.0)) {
        throw DomainError("material: photoelastic gains must be > 0");
    }
    // index finite and in (1,2) across the supported band
    for (double lam = kMinWavelengthUm; lam <= kMaxWavelengthUm + 1e-12; lam += 0.05) {
        const double n = refractive_index(material, std::min(lam, kMaxWavelengthUm));
        if (!(n > 1.0 && n < 2.0)) {
            std::ostringstream os;
            os << "material: refractive index " << n << " at " << lam
               << " um outside (1, 2)";
            throw DomainError(os.str());
        }
    }
}

}  // namespace wgm

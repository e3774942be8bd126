#include "wgm/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "wgm/constants.hpp"
#include "wgm/errors.hpp"

namespace wgm {

namespace {

// Index evaluated at the tuning reference line (375 THz ~ 799 nm).
double reference_index(const OpticalMaterial& material) {
    return refractive_index(material, kSpeedOfLightThzUm / kTuningReferenceThz);
}

// Raw strain-optic combinations per unit axial strain, before the calibrated
// channel gains.  d(n)/n = -(n^2/2) d(1/n^2).
//
// Calibration of the channel gains (see fused_silica()): with the default
// constants (p11 = 0.121, p12 = 0.270, sigma = 0.17, n at 800 nm) the gains
// are fixed by the two cylinder-model anchors
//   slope_TE = 5 GHz/V  and  slope_TM/slope_TE = 1.75
// at the reference strain 6e-5 per volt on a 375 THz line, i.e. total
// responses  sigma + gain*combo  equal to 2/9 (TE) and 7/18 (TM).
double raw_combo_te(const OpticalMaterial& m, double n) {
    return 0.5 * n * n *
           (m.photoelastic_p11 - 2.0 * m.poisson_ratio * m.photoelastic_p12);
}

double raw_combo_tm(const OpticalMaterial& m, double n) {
    return 0.5 * n * n *
           (m.photoelastic_p12 * (1.0 - m.poisson_ratio) -
            m.poisson_ratio * m.photoelastic_p11);
}

}  // namespace

void validate_assembly(const ActuatorAssembly& assembly) {
    if (!(assembly.pzt_um_per_volt > 0.0)) {
        throw DomainError("assembly: pzt_um_per_volt must be > 0");
    }
    if (!(assembly.voltage_min <= assembly.voltage_max)) {
        throw DomainError("assembly: voltage_min must be <= voltage_max");
    }
    if (!(assembly.compliance_fraction_sphere > 0.0 &&
          assembly.compliance_fraction_sphere <= 1.0)) {
        throw DomainError("assembly: compliance_fraction_sphere must be in (0, 1]");
    }
    if (!(assembly.gauge_length_um > 0.0)) {
        throw DomainError("assembly: gauge_length_um must be > 0");
    }
    if (!(assembly.tm_te_ratio_correction > 0.0)) {
        throw DomainError("assembly: tm_te_ratio_correction must be > 0");
    }
}

double strain_tuning_response(const OpticalMaterial& material, Polarization polarization,
                              double tm_te_ratio_correction) {
    const double n = reference_index(material);
    const double sigma = material.poisson_ratio;
    if (polarization == Polarization::TE) {
        return sigma + material.photoelastic_gain_te * raw_combo_te(material, n);
    }
    return tm_te_ratio_correction *
           (sigma + material.photoelastic_gain_tm * raw_combo_tm(material, n));
}

double photoelastic_index_shift(const OpticalMaterial& material, double epsilon_z,
                                Polarization polarization,
                                double tm_te_ratio_correction) {
    if (std::abs(epsilon_z) > material.plastic_onset_strain) {
        std::ostringstream os;
        os << "photoelastic_index_shift: |strain| " << std::abs(epsilon_z)
           << " beyond plastic onset " << material.plastic_onset_strain;
        throw DomainError(os.str());
    }
    // dN/N carries everything except the Poisson part, which lives in da/a
    const double total =
        strain_tuning_response(material, polarization, tm_te_ratio_correction);
    return -(total - material.poisson_ratio) * epsilon_z;
}

StrainState strain_from_voltage(const ActuatorAssembly& assembly,
                                const OpticalMaterial& material, double voltage) {
    validate_assembly(assembly);
    if (voltage < assembly.voltage_min || voltage > assembly.voltage_max) {
        std::ostringstream os;
        os << "strain_from_voltage: voltage " << voltage << " outside ["
           << assembly.voltage_min << ", " << assembly.voltage_max << "]";
        throw DomainError(os.str());
    }
    StrainState st;
    st.axial_strain = voltage * assembly.pzt_um_per_volt *
                      assembly.compliance_fraction_sphere / assembly.gauge_length_um;
    st.equatorial_radius_strain = -material.poisson_ratio * st.axial_strain;
    st.index_strain_te = photoelastic_index_shift(material, st.axial_strain,
                                                  Polarization::TE);
    st.index_strain_tm = photoelastic_index_shift(material, st.axial_strain,
                                                  Polarization::TM,
                                                  assembly.tm_te_ratio_correction);
    return st;
}

double tuned_frequency_shift(const ModeLine& line, const StrainState& strain) {
    const double dn_over_n = line.mode.polarization == Polarization::TE
                                 ? strain.index_strain_te
                                 : strain.index_strain_tm;
    const double rel = -strain.equatorial_radius_strain - dn_over_n;
    return line.frequency_thz * 1e3 * rel;
}

double thermal_shift(const ModeLine& line, const ThermalState& thermal,
                     const OpticalMaterial& material) {
    if (std::abs(thermal.delta_T) > 100.0) {
        throw DomainError("thermal_shift: |delta_T| must be <= 100 K");
    }
    const double n = reference_index(material);
    const double coeff = material.thermal_expansion + material.dn_dT / n;
    return -line.frequency_thz * 1e3 * coeff * thermal.delta_T;
}

double tuning_slope(const SpheroidGeometry& geometry, const OpticalMaterial& material,
                    const ActuatorAssembly& assembly, Polarization polarization) {
    validate_geometry(geometry);
    validate_assembly(assembly);
    ModeLine ref;
    ref.mode.polarization = polarization;
    ref.frequency_thz = kTuningReferenceThz;
    const double v_probe = 1.0;  // model is linear in V
    StrainState st;
    st.axial_strain = v_probe * assembly.pzt_um_per_volt *
                      assembly.compliance_fraction_sphere / assembly.gauge_length_um;
    st.equatorial_radius_strain = -material.poisson_ratio * st.axial_strain;
    st.index_strain_te =
        photoelastic_index_shift(material, st.axial_strain, Polarization::TE);
    st.index_strain_tm = photoelastic_index_shift(
        material, st.axial_strain, Polarization::TM, assembly.tm_te_ratio_correction);
    return tuned_frequency_shift(ref, st) / v_probe;
}

ElasticBudget elastic_budget(const SpheroidGeometry& geometry,
                             const OpticalMaterial& material,
                             const ActuatorAssembly& assembly) {
    validate_assembly(assembly);
    const double strain_per_volt = assembly.pzt_um_per_volt *
                                   assembly.compliance_fraction_sphere /
                                   assembly.gauge_length_um;
    const double v_elastic = material.elastic_limit_strain / strain_per_volt;
    ElasticBudget budget;
    budget.max_voltage = std::min(v_elastic, assembly.voltage_max);
    const double eps_max = budget.max_voltage * strain_per_volt;

    StrainState st;
    st.axial_strain = eps_max;
    st.equatorial_radius_strain = -material.poisson_ratio * eps_max;
    st.index_strain_te = photoelastic_index_shift(material, eps_max, Polarization::TE);
    st.index_strain_tm = photoelastic_index_shift(material, eps_max, Polarization::TM,
                                                  assembly.tm_te_ratio_correction);
    ModeLine te, tm;
    te.mode.polarization = Polarization::TE;
    tm.mode.polarization = Polarization::TM;
    te.frequency_thz = tm.frequency_thz = kTuningReferenceThz;
    budget.max_shift_te_ghz = tuned_frequency_shift(te, st);
    budget.max_shift_tm_ghz = tuned_frequency_shift(tm, st);
    const double fsr =
        free_spectral_range(geometry, material, kSpeedOfLightThzUm / kTuningReferenceThz);
    budget.fsr_fraction = budget.max_shift_te_ghz / fsr;
    return budget;
}

FullFsrStrain strain_required_for_full_fsr(const SpheroidGeometry& geometry,
                                           const OpticalMaterial& material,
                                           const ModeId& mode) {
    validate_geometry(geometry);
    if (mode.angular_l < kMinAngularL) {
        throw DomainError("strain_required_for_full_fsr: l below validity floor");
    }
    const double response_te = strain_tuning_response(material, Polarization::TE);
    FullFsrStrain out;
    out.axial_strain = (1.0 / mode.angular_l) / response_te;
    out.equatorial_deformation = material.poisson_ratio * out.axial_strain;
    return out;
}

}  // namespace wgm

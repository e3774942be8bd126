#pragma once

#include "wgm/geometry.hpp"
#include "wgm/material.hpp"
#include "wgm/modes.hpp"

namespace wgm {

/**
 * Piezo actuator + stems + sphere compliance chain.  Voltage maps to axial
 * strain of the gauge section (sphere diameter plus both stems):
 *   eps_z = V * pzt_um_per_volt * compliance_fraction_sphere / gauge_length_um.
 *
 * tm_te_ratio_correction rescales the TM strain response; it models the
 * reduction of the TM/TE slope ratio caused by a strongly elliptical
 * resonator (1.0 = rigid-cylinder value 1.75; the device-2 preset uses 0.914,
 * which reproduces the measured ratio 1.6).
 */
struct ActuatorAssembly {
    double pzt_um_per_volt = 0.0;
    double voltage_min = 0.0;
    double voltage_max = 0.0;
    double compliance_fraction_sphere = 1.0;  // in (0, 1]
    double gauge_length_um = 0.0;
    double tm_te_ratio_correction = 1.0;
};

/// Strain state of the resonator for a given axial stem strain.
struct StrainState {
    double axial_strain = 0.0;             // eps_z, positive = stretch
    double equatorial_radius_strain = 0.0; // da/a = -sigma * eps_z
    double index_strain_te = 0.0;          // dN/N seen by TE modes
    double index_strain_tm = 0.0;          // dN/N seen by TM modes
};

struct ThermalState {
    double delta_T = 0.0;  // K
};

struct ElasticBudget {
    double max_voltage = 0.0;
    double max_shift_te_ghz = 0.0;
    double max_shift_tm_ghz = 0.0;
    double fsr_fraction = 0.0;  // max TE shift / FSR at the reference line
};

struct FullFsrStrain {
    double axial_strain = 0.0;
    double equatorial_deformation = 0.0;  // |da/a|
};

/// Reference frequency (THz) at which tuning slopes and budgets are quoted.
inline constexpr double kTuningReferenceThz = 375.0;

void validate_assembly(const ActuatorAssembly& assembly);

/**
 * dN/N for axial strain eps_z (transverse strains -sigma eps_z) from the
 * strain-optic tensor: p11 couples to the field component along the strain
 * axis, p12 to the transverse ones.
 *   TE (E along stem axis):  d(1/n^2) = (p11 - 2 sigma p12) eps_z
 *   TM (E radial):           d(1/n^2) = (p12 (1-sigma) - sigma p11) eps_z
 * Each channel is rescaled by the material's calibrated photoelastic gain,
 * chosen so the rigid-cylinder slope ratio is exactly 1.75 with the default
 * constants.  For TM, tm_te_ratio_correction rescales the full tuning
 * response (Poisson part included) so the slope ratio becomes
 * 1.75 * correction.
 *
 * @throws DomainError |eps_z| beyond the plastic onset
 */
double photoelastic_index_shift(const OpticalMaterial& material, double epsilon_z,
                                Polarization polarization,
                                double tm_te_ratio_correction = 1.0);

/**
 * Axial strain and derived Poisson/photoelastic components for a PZT voltage.
 *
 * @throws DomainError voltage outside the assembly range
 */
StrainState strain_from_voltage(const ActuatorAssembly& assembly,
                                const OpticalMaterial& material, double voltage);

/// First-order tuning relation: dnu = nu * (-da/a - dN/N), in GHz.  The dN/N
/// channel follows the line's polarization.  Positive stretch shifts up.
double tuned_frequency_shift(const ModeLine& line, const StrainState& strain);

/// Thermal shift dnu = -nu (alpha + (1/N) dN/dT) dT, in GHz.  |dT| <= 100 K.
double thermal_shift(const ModeLine& line, const ThermalState& thermal,
                     const OpticalMaterial& material);

/// Linear tuning slope of a reference 375 THz line, GHz per volt.
double tuning_slope(const SpheroidGeometry& geometry, const OpticalMaterial& material,
                    const ActuatorAssembly& assembly, Polarization polarization);

/// Largest voltage keeping eps_z within the elastic limit, the corresponding
/// TE/TM shifts and the covered fraction of an FSR (TE, at 375 THz).
ElasticBudget elastic_budget(const SpheroidGeometry& geometry,
                             const OpticalMaterial& material,
                             const ActuatorAssembly& assembly);

/// Axial strain solving dnu/nu = 1/l under the TE model, plus |da/a|.
/// Independent of m and of actuator parameters.
FullFsrStrain strain_required_for_full_fsr(const SpheroidGeometry& geometry,
                                           const OpticalMaterial& material,
                                           const ModeId& mode);

/// Total frequency response (dnu/nu) per unit axial strain for the given
/// polarization: Poisson part plus the calibrated photoelastic channel.
/// This is the quantity a measured tuning slope divides by when inverting
/// for strain per volt.
double strain_tuning_response(const OpticalMaterial& material, Polarization polarization,
                              double tm_te_ratio_correction = 1.0);

}  // namespace wgm

#pragma once

#include <vector>

#include "wgm/geometry.hpp"
#include "wgm/material.hpp"

namespace wgm {

enum class Polarization { TE, TM };

/// Quantum numbers of a whispering-gallery mode.
struct ModeId {
    int radial_order_q = 1;
    int angular_l = 0;
    int azimuthal_m = 0;   // |m| <= l; frequencies depend on m^2 only
    Polarization polarization = Polarization::TE;
};

/// A resonance line: mode id, center frequency, loaded quality factor and the
/// phenomenological dip depth it produces in a transmission scan.
struct ModeLine {
    ModeId mode;
    double frequency_thz = 0.0;
    double loaded_q = 0.0;
    double dip_depth = 0.0;   // in [0, 1]
};

/// Enumeration bounds and line dressing used by spectrum_window.
struct ModeFilter {
    int q_max = 1;
    int delta_m_max = 0;        // include m = l - dm for dm in [0, delta_m_max]
    bool include_te = true;
    bool include_tm = true;
    double loaded_q = 1.0e8;    // phenomenological defaults for emitted lines
    double dip_depth = 0.3;
};

/// Asymptotic validity floor for the angular order.
inline constexpr int kMinAngularL = 20;
/// Stability bound for the exact characteristic-equation solver.
inline constexpr int kMaxAngularLExact = 2000;
/// Radial orders supported by the Airy-zero table.
inline constexpr int kMaxRadialOrder = 10;

/// Negative of the q-th zero of the Airy function Ai (q in [1, 10]).
double airy_zero(int q);

/**
 * Resonance frequency of mode (q, l, m, pol) in THz.
 *
 * Combines (i) the q-th Airy-zero radial term, (ii) the TE/TM polarization
 * term, and (iii) the quadrupole ellipticity shift in m.  The expansion is
 * evaluated self-consistently in n(lambda) by fixed-point iteration seeded
 * with seed_wavelength_um (at most 8 iterations to relative 1e-10).
 *
 * Polarization-term convention: P = N for TE, P = 1/N for TM, which places
 * TM above TE at equal (q, l, m); the sign was fixed against exact_mie_root.
 *
 * The ellipticity shift is referenced to the equatorial mode: modes with
 * |m| = l sit at the equivalent-sphere frequency of radius a, and
 *   f(q,l,m) = f_sph(q,l,pol) - f_sph(q,l,TE) * (eps/2)(l^2 - m^2)/(l(l+1)),
 * so a ladder of |m| < l modes hangs below it with the standard quadrupole
 * spacing.  This keeps the measured FSR and TE-TM splitting at their sphere
 * values, as observed for strongly elliptical resonators.
 *
 * @throws DomainError  l below the validity floor, |m| > l, q out of range,
 *                      or mode outside the supported dispersion band
 * @throws NumericError fixed point failed to converge
 */
double mode_frequency(const SpheroidGeometry& geometry, const OpticalMaterial& material,
                      const ModeId& mode, double seed_wavelength_um = 0.8);

/**
 * Exact characteristic-equation root for a perfect sphere (ellipticity 0), in
 * THz.  Matches spherical Bessel/Neumann log-derivatives at the dielectric
 * boundary and refines the q-th root to relative 1e-12; self-consistent in
 * n(lambda) like mode_frequency.  This is the validation oracle for the
 * asymptotic expansion.
 *
 * @throws DomainError  ellipticity != 0, l > 2000 or q > 10
 * @throws NumericError root bracketing failure (message carries the bracket)
 */
double exact_mie_root(const SpheroidGeometry& geometry, const OpticalMaterial& material,
                      int q, int l, Polarization polarization);

/// l of the fundamental (q=1, m=l) TE mode closest in frequency to target_thz.
int nearest_angular_order(const SpheroidGeometry& geometry, const OpticalMaterial& material,
                          double target_thz, int q = 1,
                          Polarization polarization = Polarization::TE);

/// f(q=1, l*+1) - f(q=1, l*) in GHz for the fundamental TE ladder nearest to
/// the given wavelength; approximately c/(2 pi a N).
double free_spectral_range(const SpheroidGeometry& geometry, const OpticalMaterial& material,
                           double wavelength_um);

/// Delta_P = f_TM - f_TE at equal (q=1, l*, m=l*), in GHz; approximately
/// FSR * sqrt(N^2-1)/N.  Positive: TM above TE.
double polarization_splitting(const SpheroidGeometry& geometry, const OpticalMaterial& material,
                              double wavelength_um);

/// Delta_m = f(q1,l,|m|) - f(q1,l,|m|-1) in GHz from the quadrupole shift;
/// near |m| = l this is approximately eps * FSR.  Requires l >= 20, 1 <= |m| <= l.
double ellipticity_splitting(const SpheroidGeometry& geometry, const OpticalMaterial& material,
                             int l, int m, double wavelength_um);

/**
 * All modes with frequency in [f_lo_thz, f_hi_thz] subject to the filter
 * bounds, sorted by frequency.  m is reported as the non-negative value
 * l - dm (the +/-m pair is degenerate).  Window width is limited to 5 FSR.
 *
 * @throws DomainError  empty/oversized window
 */
std::vector<ModeLine> spectrum_window(const SpheroidGeometry& geometry,
                                      const OpticalMaterial& material,
                                      double f_lo_thz, double f_hi_thz,
                                      const ModeFilter& filter);

namespace detail {
/// N*x for the sphere mode (q, l, pol) at relative index n_rel: the uniform
/// asymptotic expansion through the nu^(-5/3) term.
double asymptotic_scaled_size(double nu, double n_rel, Polarization polarization, int q);
}  // namespace detail

}  // namespace wgm

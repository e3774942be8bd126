#pragma once

namespace wgm {

/**
 * Two-stem microsphere geometry.  The resonator is modeled as a spheroid with
 * equatorial radius a; ellipticity is signed, (r_polar - r_equatorial)/a,
 * positive for a prolate sphere (stretched along the stem axis).
 */
struct SpheroidGeometry {
    double equatorial_radius_um = 0.0;
    double ellipticity = 0.0;
    double stem_radius_um = 0.0;
    double stem_total_length_um = 0.0;  // both stems combined
};

/// Throws DomainError on invariant violation (a > 0, |eps| < 1, stems thinner
/// than the sphere).
void validate_geometry(const SpheroidGeometry& geometry);

}  // namespace wgm

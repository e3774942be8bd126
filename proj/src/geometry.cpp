#include "wgm/geometry.hpp"

#include <cmath>

#include "wgm/errors.hpp"

namespace wgm {

void validate_geometry(const SpheroidGeometry& geometry) {
    if (!(geometry.equatorial_radius_um > 0.0)) {
        throw DomainError("geometry: equatorial_radius_um must be > 0");
    }
    if (!(std::abs(geometry.ellipticity) < 1.0)) {
        throw DomainError("geometry: |ellipticity| must be < 1");
    }
    if (!(geometry.stem_radius_um >= 0.0) ||
        geometry.stem_radius_um >= geometry.equatorial_radius_um) {
        throw DomainError("geometry: stem_radius_um must be in [0, equatorial_radius_um)");
    }
    if (!(geometry.stem_total_length_um >= 0.0)) {
        throw DomainError("geometry: stem_total_length_um must be >= 0");
    }
}

}  // namespace wgm

#pragma once

namespace wgm {

/// Speed of light in the unit system used throughout: frequencies in THz,
/// lengths in micrometers.  c = 299.792458 THz*um.
inline constexpr double kSpeedOfLightThzUm = 299.792458;

/// Same constant with frequency in GHz.
inline constexpr double kSpeedOfLightGhzUm = 299792.458;

inline constexpr double kPi = 3.14159265358979323846;

}  // namespace wgm

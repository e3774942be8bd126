#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "wgm/geometry.hpp"
#include "wgm/material.hpp"
#include "wgm/modes.hpp"
#include "wgm/spectroscopy.hpp"
#include "wgm/tuning.hpp"

namespace wgm {

/// Spectrum-window request (cmd spectrum and mode enumeration).
struct WindowConfig {
    double f_lo_thz = 0.0;
    double f_hi_thz = 0.0;
    ModeFilter filter;
};

/// Scan parameters plus the synthesis knobs that ride along with them.
struct ScanConfig {
    LaserScan scan;
    double noise_rms = 0.0;
    double drift_ghz_per_s = 0.0;
    double duration_s = 1.0;
};

/// Fully resolved run configuration (preset + overrides applied).
struct RunConfig {
    std::string preset;   // "", "device1" or "device2"
    OpticalMaterial material;
    SpheroidGeometry geometry;
    ActuatorAssembly assembly;
    WindowConfig window;
    ScanConfig scan;
    std::vector<double> sweep_voltages;
    std::uint64_t seed = 1;
    std::string out_dir = "out";
};

/// 200 um sphere in the squeezer-style mount (30 GHz grating-laser window).
RunConfig device1_preset();
/// 80 um sphere, calibrated to the measured tuning curves (DBR-laser window).
RunConfig device2_preset();

/// Named preset lookup ("device1" / "device2").
/// @throws ConfigError unknown name
RunConfig preset_by_name(const std::string& name);

/**
 * Load a JSON config file.  `preset` selects a base configuration; any other
 * present key overrides it.  Unknown keys and malformed values raise
 * ConfigError with the offending field in the message; units are validated
 * on load (material/geometry/assembly invariants).
 */
RunConfig load_config(const std::filesystem::path& path);

/// Parse from a JSON string (same semantics as load_config).
RunConfig parse_config(const std::string& text, const std::string& origin = "<config>");

/// Canonical JSON rendering of a resolved config.
std::string config_to_json(const RunConfig& config);

/// FNV-1a 64-bit hash of the canonical JSON rendering; embedded in reports.
std::uint64_t config_hash(const RunConfig& config);

}  // namespace wgm

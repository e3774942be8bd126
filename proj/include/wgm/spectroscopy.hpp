#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "wgm/modes.hpp"
#include "wgm/tuning.hpp"

namespace wgm {

/// Laser scan window: frequencies from start to start + span on a uniform grid.
struct LaserScan {
    double start_thz = 0.0;
    double span_ghz = 0.0;
    int points = 0;
    double laser_linewidth_mhz = 0.0;
};

struct TraceMetadata {
    double voltage_v = 0.0;
    double delta_t_k = 0.0;
    std::uint64_t seed = 0;
};

/// Sampled transmission vs optical frequency, uniform strictly increasing grid.
struct TransmissionTrace {
    Eigen::ArrayXd frequencies_thz;
    Eigen::ArrayXd transmission;
    TraceMetadata metadata;
};

void validate_scan(const LaserScan& scan);

/**
 * Lorentzian dip transmission of a single line at frequency f:
 *   T(f) = 1 - depth (g/2)^2 / ((f - f0)^2 + (g/2)^2),  g = f0 / Q_loaded.
 */
double lorentzian_transmission(double f_thz, const ModeLine& line);

/**
 * Synthesize a laser-scan trace.
 *
 * Dip profiles of all lines multiply (independent loss channels).  Line
 * centers drift linearly at drift_ghz_per_s across the scan (sample i is
 * taken at time i/(points-1) * scan_duration_s).  The laser linewidth is
 * folded in analytically (Lorentzian (x) Lorentzian) per line whenever it
 * exceeds gamma/10, else ignored.  Additive white Gaussian noise of rms
 * noise_rms is generated from the seed with mt19937_64 + Box-Muller, so
 * traces are bit-identical across platforms for equal inputs.
 */
TransmissionTrace synthesize_trace(const std::vector<ModeLine>& spectrum,
                                   const LaserScan& scan, double noise_rms,
                                   double drift_ghz_per_s, double scan_duration_s,
                                   std::uint64_t seed);

/**
 * One trace per voltage, on a shared grid; every mode center is shifted by
 * the tuning model before synthesis.  Lines are enumerated once at rest over
 * the scan window extended by the maximal sweep shift.  Trace i uses
 * seed + i.
 *
 * @throws DomainError voltage outside the assembly range
 */
std::vector<TransmissionTrace> voltage_sweep_experiment(
    const SpheroidGeometry& geometry, const OpticalMaterial& material,
    const ActuatorAssembly& assembly, const LaserScan& scan,
    const std::vector<double>& voltages, const ModeFilter& filter, double noise_rms,
    double drift_ghz_per_s, double scan_duration_s, std::uint64_t seed);

}  // namespace wgm

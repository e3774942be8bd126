#include "wgm/spectroscopy.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "wgm/constants.hpp"
#include "wgm/errors.hpp"

namespace wgm {

namespace {

/// Standard-normal deviate via Box-Muller on mt19937_64 output; implemented
/// explicitly (not std::normal_distribution) so that sequences are identical
/// across standard libraries.
class GaussianSource {
public:
    explicit GaussianSource(std::uint64_t seed) : rng_(seed) {}

    double next() {
        // uniforms in (0, 1]; 53-bit mantissa
        const double u1 =
            (static_cast<double>(rng_() >> 11) + 1.0) * (1.0 / 9007199254740992.0);
        const double u2 =
            static_cast<double>(rng_() >> 11) * (1.0 / 9007199254740992.0);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }

private:
    std::mt19937_64 rng_;
};

struct EffectiveLine {
    double f0_thz;
    double gamma_thz;
    double depth;
};

EffectiveLine effective_line(const ModeLine& line, double laser_linewidth_mhz) {
    if (!(line.frequency_thz > 0.0) || !(line.loaded_q > 0.0)) {
        throw DomainError("lorentzian line: frequency and loaded_Q must be > 0");
    }
    if (!(line.dip_depth >= 0.0 && line.dip_depth <= 1.0)) {
        throw DomainError("lorentzian line: dip_depth must be in [0, 1]");
    }
    EffectiveLine eff{line.frequency_thz, line.frequency_thz / line.loaded_q,
                      line.dip_depth};
    const double laser_width_thz = laser_linewidth_mhz * 1e-6;
    // fold in the laser line only when it is not negligible against gamma;
    // Lorentzian (x) Lorentzian stays Lorentzian with summed widths and
    // area-preserving depth scaling.
    if (laser_width_thz > eff.gamma_thz / 10.0) {
        eff.depth *= eff.gamma_thz / (eff.gamma_thz + laser_width_thz);
        eff.gamma_thz += laser_width_thz;
    }
    return eff;
}

double dip_factor(double f_thz, const EffectiveLine& line) {
    const double hg = 0.5 * line.gamma_thz;
    const double df = f_thz - line.f0_thz;
    return 1.0 - line.depth * hg * hg / (df * df + hg * hg);
}

}  // namespace

void validate_scan(const LaserScan& scan) {
    if (!(scan.start_thz > 0.0)) {
        throw DomainError("scan: start_thz must be > 0");
    }
    if (!(scan.span_ghz > 0.0)) {
        throw DomainError("scan: span_ghz must be > 0");
    }
    if (scan.points < 2) {
        throw DomainError("scan: points must be >= 2");
    }
    if (!(scan.laser_linewidth_mhz >= 0.0)) {
        throw DomainError("scan: laser_linewidth_mhz must be >= 0");
    }
}

double lorentzian_transmission(double f_thz, const ModeLine& line) {
    return dip_factor(f_thz, effective_line(line, 0.0));
}

TransmissionTrace synthesize_trace(const std::vector<ModeLine>& spectrum,
                                   const LaserScan& scan, double noise_rms,
                                   double drift_ghz_per_s, double scan_duration_s,
                                   std::uint64_t seed) {
    validate_scan(scan);
    if (!(noise_rms >= 0.0)) {
        throw DomainError("synthesize_trace: noise_rms must be >= 0");
    }
    const int n = scan.points;
    const double span_thz = scan.span_ghz * 1e-3;
    const double drift_thz_per_s = drift_ghz_per_s * 1e-3;

    std::vector<EffectiveLine> lines;
    lines.reserve(spectrum.size());
    for (const auto& ml : spectrum) {
        lines.push_back(effective_line(ml, scan.laser_linewidth_mhz));
    }

    TransmissionTrace trace;
    trace.frequencies_thz.resize(n);
    trace.transmission.resize(n);
    trace.metadata.seed = seed;

    GaussianSource noise(seed);
    for (int i = 0; i < n; ++i) {
        const double frac = static_cast<double>(i) / (n - 1);
        const double f = scan.start_thz + span_thz * frac;
        const double t_s = scan_duration_s * frac;
        double transmission = 1.0;
        for (const auto& line : lines) {
            EffectiveLine shifted = line;
            shifted.f0_thz += drift_thz_per_s * t_s;
            transmission *= dip_factor(f, shifted);
        }
        if (noise_rms > 0.0) {
            transmission += noise_rms * noise.next();
        }
        trace.frequencies_thz[i] = f;
        trace.transmission[i] = transmission;
    }
    return trace;
}

std::vector<TransmissionTrace> voltage_sweep_experiment(
    const SpheroidGeometry& geometry, const OpticalMaterial& material,
    const ActuatorAssembly& assembly, const LaserScan& scan,
    const std::vector<double>& voltages, const ModeFilter& filter, double noise_rms,
    double drift_ghz_per_s, double scan_duration_s, std::uint64_t seed) {
    validate_scan(scan);
    validate_assembly(assembly);

    // enumerate rest-position lines over the window extended by the largest
    // possible tuning shift, so modes entering the window are not missed
    double max_abs_shift_ghz = 0.0;
    for (const double v : voltages) {
        if (v < assembly.voltage_min || v > assembly.voltage_max) {
            std::ostringstream os;
            os << "voltage_sweep_experiment: voltage " << v << " outside assembly range";
            throw DomainError(os.str());
        }
        const StrainState st = strain_from_voltage(assembly, material, v);
        ModeLine probe_te, probe_tm;
        probe_te.frequency_thz = probe_tm.frequency_thz = scan.start_thz;
        probe_te.mode.polarization = Polarization::TE;
        probe_tm.mode.polarization = Polarization::TM;
        max_abs_shift_ghz = std::max({max_abs_shift_ghz,
                                      std::abs(tuned_frequency_shift(probe_te, st)),
                                      std::abs(tuned_frequency_shift(probe_tm, st))});
    }
    const double margin_thz = (max_abs_shift_ghz + 2.0) * 1e-3;
    const double f_lo = scan.start_thz - margin_thz;
    const double f_hi = scan.start_thz + scan.span_ghz * 1e-3 + margin_thz;
    const std::vector<ModeLine> rest = spectrum_window(geometry, material, f_lo, f_hi, filter);

    std::vector<TransmissionTrace> traces;
    traces.reserve(voltages.size());
    for (std::size_t i = 0; i < voltages.size(); ++i) {
        const StrainState st = strain_from_voltage(assembly, material, voltages[i]);
        std::vector<ModeLine> shifted = rest;
        for (auto& line : shifted) {
            line.frequency_thz += tuned_frequency_shift(line, st) * 1e-3;
        }
        TransmissionTrace tr = synthesize_trace(shifted, scan, noise_rms, drift_ghz_per_s,
                                                scan_duration_s, seed + i);
        tr.metadata.voltage_v = voltages[i];
        traces.push_back(std::move(tr));
    }
    return traces;
}

}  // namespace wgm

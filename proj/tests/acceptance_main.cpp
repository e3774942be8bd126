// Acceptance suite: quantitative reproduction targets for the two measured
// devices.  Each criterion prints one PASS/FAIL line; the process exits
// with the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "wgm/analysis.hpp"
#include "wgm/config.hpp"
#include "wgm/constants.hpp"
#include "wgm/modes.hpp"
#include "wgm/spectroscopy.hpp"
#include "wgm/tuning.hpp"

using namespace wgm;

namespace {

int g_failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
    std::printf("[%s] C%-2d %s: %s\n", pass ? "PASS" : "FAIL", id, name.c_str(),
                detail.c_str());
    if (!pass) ++g_failures;
}

bool within(double value, double target, double rel_tol) {
    return std::abs(value - target) <= rel_tol * std::abs(target);
}

std::string fmt(const char* format, ...) {
    char buf[256];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof(buf), format, args);
    va_end(args);
    return buf;
}

double elapsed_s(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// C1: FSR of the device-2 preset, 810 GHz +-3%, under one second.
void criterion_1() {
    const auto t0 = std::chrono::steady_clock::now();
    const RunConfig cfg = device2_preset();
    const double fsr = free_spectral_range(cfg.geometry, cfg.material, 0.8);
    const double dt = elapsed_s(t0);
    const bool pass = within(fsr, 810.0, 0.03) && dt < 1.0;
    report(1, "FSR reproduction", pass,
           fmt("FSR = %.2f GHz (target 810 +-3%%), %.3f s", fsr, dt));
}

// C2: TE-TM splitting 580 GHz +-5% on the same preset.
void criterion_2() {
    const RunConfig cfg = device2_preset();
    const double dp = polarization_splitting(cfg.geometry, cfg.material, 0.8);
    report(2, "TE-TM splitting", within(dp, 580.0, 0.05),
           fmt("Delta_P = %.2f GHz (target 580 +-5%%)", dp));
}

// C3: azimuthal splitting 375 GHz +-5% at eps = 0.46, and interval inversion
// recovers the ellipticity within +-0.05.
void criterion_3() {
    const RunConfig cfg = device2_preset();
    SpheroidGeometry g = cfg.geometry;
    g.ellipticity = 0.46;
    const int l = nearest_angular_order(g, cfg.material, kSpeedOfLightThzUm / 0.8);
    const double dm = ellipticity_splitting(g, cfg.material, l, l, 0.8);
    const bool pass_dm = within(dm, 375.0, 0.05);

    const SpheroidGeometry prior{40.0, 0.0, 13.0, 160.0};
    const double f0 = 374.584;
    const std::vector<double> dips{f0, f0 - 0.375, f0 + 0.580, f0 + 0.810};
    const ModeAssignment inv = assign_modes(dips, prior, cfg.material);
    const bool pass_inv = inv.assigned && std::abs(inv.fitted_ellipticity - 0.46) <= 0.05;
    report(3, "azimuthal splitting + inversion", pass_dm && pass_inv,
           fmt("Delta_m = %.2f GHz (target 375 +-5%%), inverted eps = %.3f (target "
               "0.46 +-0.05)",
               dm, inv.fitted_ellipticity));
}

// C4: tuning slopes 5 (TE) and 8 (TM) GHz/V +-15%; slope ratio 1.75 +-0.02
// for the cylinder model and 1.6 +-0.05 with the ellipticity-corrected preset.
void criterion_4() {
    const RunConfig cfg = device2_preset();
    const double te = tuning_slope(cfg.geometry, cfg.material, cfg.assembly,
                                   Polarization::TE);
    const double tm = tuning_slope(cfg.geometry, cfg.material, cfg.assembly,
                                   Polarization::TM);
    ActuatorAssembly cylinder = cfg.assembly;
    cylinder.tm_te_ratio_correction = 1.0;
    const double tm_cyl = tuning_slope(cfg.geometry, cfg.material, cylinder,
                                       Polarization::TM);
    const bool pass = within(te, 5.0, 0.15) && within(tm, 8.0, 0.15) &&
                      std::abs(tm_cyl / te - 1.75) <= 0.02 &&
                      std::abs(tm / te - 1.6) <= 0.05;
    report(4, "tuning slopes", pass,
           fmt("TE %.3f, TM %.3f GHz/V; ratio %.4f (cylinder %.4f)", te, tm, tm / te,
               tm_cyl / te));
}

// C5: synthetic sweep -> calibrate_device recovers 6e-5 per volt +-10%.
void criterion_5() {
    const RunConfig cfg = device2_preset();
    const auto sweep = voltage_sweep_experiment(
        cfg.geometry, cfg.material, cfg.assembly, cfg.scan.scan, cfg.sweep_voltages,
        cfg.window.filter, 1e-3, 0.0, cfg.scan.duration_s, 2024);
    const CalibrationResult cal = calibrate_device(sweep, cfg.geometry, cfg.material);
    report(5, "strain calibration round trip", within(cal.strain_per_volt, 6e-5, 0.10),
           fmt("strain/V = %.3e (target 6e-5 +-10%%), slope ratio %.3f",
               cal.strain_per_volt, cal.ratio));
}

// C6: thermal coefficient -2.5 GHz/K +-10% at 375 THz.
void criterion_6() {
    const OpticalMaterial silica = fused_silica();
    ModeLine line{{1, 443, 443, Polarization::TE}, 375.0, 1e8, 0.3};
    const double shift = thermal_shift(line, ThermalState{1.0}, silica);
    report(6, "thermal coefficient", within(shift, -2.5, 0.10),
           fmt("%.3f GHz/K (target -2.5 +-10%%)", shift));
}

// C7: device-1 elastic budget about 150 GHz, about half an FSR.
void criterion_7() {
    const RunConfig cfg = device1_preset();
    const ElasticBudget budget = elastic_budget(cfg.geometry, cfg.material, cfg.assembly);
    const bool pass = within(budget.max_shift_te_ghz, 150.0, 0.10) &&
                      budget.fsr_fraction >= 0.40 && budget.fsr_fraction <= 0.55;
    report(7, "device-1 budget", pass,
           fmt("max shift %.1f GHz (target ~150), %.3f FSR (target ~0.5)",
               budget.max_shift_te_ghz, budget.fsr_fraction));
}

// C8: full-FSR strain for a 50 um sphere: ~1% axial, ~0.2% equatorial
// (order of magnitude, factor-2 tolerance).
void criterion_8() {
    const OpticalMaterial silica = fused_silica();
    const SpheroidGeometry g{25.0, 0.0, 8.0, 100.0};
    const int l = nearest_angular_order(g, silica, kSpeedOfLightThzUm / 0.8);
    const FullFsrStrain req =
        strain_required_for_full_fsr(g, silica, {1, l, l, Polarization::TE});
    const bool pass = req.axial_strain >= 0.005 && req.axial_strain <= 0.02 &&
                      req.equatorial_deformation >= 0.001 &&
                      req.equatorial_deformation <= 0.004;
    report(8, "full-FSR strain estimate", pass,
           fmt("axial %.2f%%, equatorial %.3f%% (targets ~1%% / ~0.2%%, factor 2)",
               req.axial_strain * 100.0, req.equatorial_deformation * 100.0));
}

// C9: asymptotic expansion vs exact characteristic-equation roots, 1e-4
// relative over q in {1,2}, l in {100,200,400,600}, both polarizations,
// under 30 seconds.
void criterion_9() {
    const auto t0 = std::chrono::steady_clock::now();
    const OpticalMaterial silica = fused_silica();
    double worst = 0.0;
    for (const int q : {1, 2}) {
        for (const int l : {100, 200, 400, 600}) {
            for (const auto pol : {Polarization::TE, Polarization::TM}) {
                const double nu = l + 0.5;
                const double x_est =
                    detail::asymptotic_scaled_size(nu, 1.4533, pol, q) / 1.4533;
                const double a_um = 0.8 * x_est / (2.0 * kPi);
                const SpheroidGeometry g{a_um, 0.0, a_um / 3.0, a_um};
                const double f_asym = mode_frequency(g, silica, {q, l, l, pol});
                const double f_exact = exact_mie_root(g, silica, q, l, pol);
                worst = std::max(worst, std::abs(f_asym - f_exact) / f_exact);
            }
        }
    }
    const double dt = elapsed_s(t0);
    report(9, "oracle equivalence", worst < 1e-4 && dt < 30.0,
           fmt("worst relative deviation %.3e (limit 1e-4), %.2f s", worst, dt));
}

// C10: round-trip fitting. Noiseless synthetic traces recovered to relative
// 1e-6 over 50 random line configurations; with 1e-3 rms noise the fitted
// center scatters by less than gamma/10 over 100 seeds.
void criterion_10() {
    std::mt19937_64 rng(31415);
    std::uniform_real_distribution<double> fd(370.0, 380.0);
    std::uniform_real_distribution<double> logq(6.0, 8.0);
    std::uniform_real_distribution<double> dd(0.05, 0.9);
    bool clean_ok = true;
    double worst_rel = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
        const double f0 = fd(rng);
        const double q = std::pow(10.0, logq(rng));
        const double depth = dd(rng);
        const ModeLine planted{{1, 443, 443, Polarization::TE}, f0, q, depth};
        const double gamma_thz = f0 / q;
        LaserScan scan{f0 - 20.0 * gamma_thz, 40.0 * gamma_thz * 1e3, 4001, 0.0};
        const TransmissionTrace tr =
            synthesize_trace({planted}, scan, 0.0, 0.0, 1.0, 100 + rep);
        const auto windows = detect_dips(tr, depth / 2.0);
        if (windows.size() != 1) {
            clean_ok = false;
            continue;
        }
        const DipFit fit = fit_lorentzian(tr, windows[0]);
        const double err = std::max({std::abs(fit.center_thz - f0) / (gamma_thz),
                                     std::abs(fit.loaded_q - q) / q,
                                     std::abs(fit.depth - depth) / depth});
        worst_rel = std::max(worst_rel, err);
        clean_ok = clean_ok && err < 1e-6;
    }

    const ModeLine planted{{1, 443, 443, Polarization::TE}, 375.0, 1e7, 0.3};
    const double gamma_ghz = 375.0 / 1e7 * 1e3;
    LaserScan scan{375.0 - 0.5e-3, 1.0, 2001, 0.0};
    std::vector<double> centers;
    for (int seed = 0; seed < 100; ++seed) {
        const TransmissionTrace tr =
            synthesize_trace({planted}, scan, 1e-3, 0.0, 1.0, 5000 + seed);
        const auto windows = detect_dips(tr, 0.15);
        if (windows.size() != 1) continue;
        centers.push_back(fit_lorentzian(tr, windows[0]).center_thz);
    }
    double mean = 0.0;
    for (const double c : centers) mean += c;
    mean /= static_cast<double>(centers.size());
    double var = 0.0;
    for (const double c : centers) var += (c - mean) * (c - mean);
    var /= static_cast<double>(centers.size() - 1);
    const double std_ghz = std::sqrt(var) * 1e3;
    const bool noisy_ok = centers.size() == 100 && std_ghz < gamma_ghz / 10.0;

    report(10, "round-trip fitting", clean_ok && noisy_ok,
           fmt("noiseless worst rel err %.2e (limit 1e-6); center scatter %.2e GHz "
               "(limit %.2e)",
               worst_rel, std_ghz, gamma_ghz / 10.0));
}

}  // namespace

int main() {
    std::printf("== acceptance criteria ==\n");
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    std::printf("== %d of 10 criteria passed ==\n", 10 - g_failures);
    return g_failures;
}

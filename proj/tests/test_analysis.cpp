#include <doctest.h>

#include <cmath>
#include <random>

#include "test_helpers.hpp"
#include "wgm/analysis.hpp"
#include "wgm/config.hpp"
#include "wgm/constants.hpp"
#include "wgm/spectroscopy.hpp"

using namespace wgm;
using wgm::test::rel_close;

namespace {

ModeLine line_at(double f_thz, double q = 1e7, double depth = 0.3,
                 Polarization pol = Polarization::TE) {
    return ModeLine{{1, 443, 443, pol}, f_thz, q, depth};
}

TransmissionTrace flat_trace(int n = 101) {
    LaserScan scan{375.0, 10.0, n, 0.0};
    return synthesize_trace({}, scan, 0.0, 0.0, 1.0, 1);
}

}  // namespace

TEST_CASE("flat traces contain no dips") {
    CHECK(detect_dips(flat_trace(), 0.1).empty());
}

TEST_CASE("two planted dips are detected at their centers") {
    LaserScan scan{374.997, 11.0, 22001, 0.0};
    const ModeLine a = line_at(375.0, 2e7, 0.3);
    const ModeLine b = line_at(375.005, 2e7, 0.3, Polarization::TM);  // 5 GHz apart
    const TransmissionTrace tr = synthesize_trace({a, b}, scan, 0.0, 0.0, 1.0, 1);
    const auto windows = detect_dips(tr, 0.15);
    REQUIRE(windows.size() == 2);
    const double step_thz = 11.0e-3 / 22000.0;
    for (std::size_t i = 0; i < 2; ++i) {
        Eigen::Index imin = windows[i].begin;
        double best = 2.0;
        for (Eigen::Index j = windows[i].begin; j < windows[i].end; ++j) {
            if (tr.transmission[j] < best) {
                best = tr.transmission[j];
                imin = j;
            }
        }
        const double planted = i == 0 ? a.frequency_thz : b.frequency_thz;
        CHECK(std::abs(tr.frequencies_thz[imin] - planted) <= 1.5 * step_thz);
    }
}

TEST_CASE("dips below the prominence threshold are excluded") {
    LaserScan scan{374.999, 2.0, 4001, 0.0};
    const TransmissionTrace tr =
        synthesize_trace({line_at(375.0, 1e7, 0.08)}, scan, 0.0, 0.0, 1.0, 1);
    CHECK(detect_dips(tr, 0.1).empty());
    CHECK(detect_dips(tr, 0.05).size() == 1);
}

TEST_CASE("detection windows are invariant under positive rescaling") {
    LaserScan scan{374.999, 2.0, 4001, 0.0};
    TransmissionTrace tr = synthesize_trace({line_at(375.0, 1e7, 0.4)}, scan, 0.0, 0.0, 1.0, 1);
    const auto w1 = detect_dips(tr, 0.2);
    TransmissionTrace scaled = tr;
    scaled.transmission *= 37.5;
    const auto w2 = detect_dips(scaled, 0.2);
    REQUIRE(w1.size() == w2.size());
    for (std::size_t i = 0; i < w1.size(); ++i) {
        CHECK(w1[i].begin == w2[i].begin);
        CHECK(w1[i].end == w2[i].end);
    }
}

TEST_CASE("noiseless dip fit recovers the planted parameters to 1e-6") {
    const ModeLine planted = line_at(375.0, 1e8, 0.3);
    const double gamma_ghz = 375.0 / 1e8 * 1e3;
    LaserScan scan{375.0 - 20.0 * gamma_ghz * 1e-3, 40.0 * gamma_ghz, 4001, 0.0};
    const TransmissionTrace tr = synthesize_trace({planted}, scan, 0.0, 0.0, 1.0, 1);
    const auto windows = detect_dips(tr, 0.15);
    REQUIRE(windows.size() == 1);
    const DipFit fit = fit_lorentzian(tr, windows[0]);
    CHECK(std::abs(fit.center_thz - planted.frequency_thz) <= 1e-6 * gamma_ghz * 1e-3);
    CHECK(rel_close(fit.loaded_q, planted.loaded_q, 1e-6));
    CHECK(rel_close(fit.depth, planted.dip_depth, 1e-6));
    CHECK(fit.residual_rms < 1e-8);
}

TEST_CASE("center scatter under 1e-3 noise stays below a tenth of the linewidth") {
    const ModeLine planted = line_at(375.0, 1e7, 0.3);
    const double gamma_ghz = 375.0 / 1e7 * 1e3;  // 37.5 MHz
    LaserScan scan{375.0 - 0.5e-3, 1.0, 2001, 0.0};
    std::vector<double> centers;
    for (int seed = 0; seed < 100; ++seed) {
        const TransmissionTrace tr =
            synthesize_trace({planted}, scan, 1e-3, 0.0, 1.0, 1000 + seed);
        const auto windows = detect_dips(tr, 0.15);
        REQUIRE(windows.size() == 1);
        centers.push_back(fit_lorentzian(tr, windows[0]).center_thz);
    }
    double mean = 0.0;
    for (const double c : centers) mean += c;
    mean /= static_cast<double>(centers.size());
    double var = 0.0;
    for (const double c : centers) var += (c - mean) * (c - mean);
    var /= static_cast<double>(centers.size() - 1);
    const double std_ghz = std::sqrt(var) * 1e3;
    CHECK(std_ghz < gamma_ghz / 10.0);
}

TEST_CASE("a window without a dip raises a fit error, not a bogus result") {
    const TransmissionTrace tr = flat_trace(101);
    CHECK_THROWS_AS(fit_lorentzian(tr, IndexRange{10, 60}), FitError);
    CHECK_THROWS_AS(fit_lorentzian(tr, IndexRange{0, 5}), DomainError);  // < 7 samples
}

TEST_CASE("slope fit is exact on exact lines") {
    std::vector<std::pair<double, double>> pts;
    for (int v = 0; v <= 6; ++v) {
        pts.emplace_back(v, 375.0 + 8.0 * v * 1e-3);  // slope 8 GHz/V
    }
    const SlopeFit fit = fit_tuning_slope(pts);
    CHECK(fit.slope_ghz_per_v == doctest::Approx(8.0).epsilon(1e-12));
    CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fit.intercept_ghz == doctest::Approx(375000.0).epsilon(1e-12));
}

TEST_CASE("slope fit classifies polarizations against a TE reference") {
    std::vector<std::pair<double, double>> te, tm, odd;
    for (int v = 0; v <= 4; ++v) {
        te.emplace_back(v, 375.0 + 5.1 * v * 1e-3);
        tm.emplace_back(v, 375.0 + 8.2 * v * 1e-3);
        odd.emplace_back(v, 375.0 + 14.0 * v * 1e-3);
    }
    CHECK(fit_tuning_slope(te, 5.0).polarization_guess == PolarizationGuess::TE);
    CHECK(fit_tuning_slope(tm, 5.0).polarization_guess == PolarizationGuess::TM);
    CHECK(fit_tuning_slope(odd, 5.0).polarization_guess == PolarizationGuess::Unknown);
    CHECK(fit_tuning_slope(te).polarization_guess == PolarizationGuess::Unknown);
}

TEST_CASE("degenerate voltage sets are rejected") {
    std::vector<std::pair<double, double>> pts{{1.0, 375.0}, {1.0, 375.1}, {1.0, 375.2}};
    CHECK_THROWS_AS(fit_tuning_slope(pts), DomainError);
    CHECK_THROWS_AS(fit_tuning_slope({{0.0, 375.0}, {1.0, 375.1}}), DomainError);
}

TEST_CASE("mode assignment inverts the measured interval triple") {
    const OpticalMaterial silica = fused_silica();
    const SpheroidGeometry prior{40.0, 0.0, 13.0, 160.0};
    // a spectrum exhibiting FSR = 810, Delta_P = 580, Delta_m = 375 (GHz)
    const double f0 = 374.584;
    const std::vector<double> dips{f0, f0 - 0.375, f0 + 0.580, f0 + 0.810};
    const ModeAssignment result = assign_modes(dips, prior, silica);
    CHECK(result.assigned);
    CHECK(rel_close(result.fitted_radius_um, 40.0, 0.02));
    CHECK(std::abs(result.fitted_ellipticity - 0.46) <= 0.05);
    // structural labels: dips 0 and 2 share (l, m) and differ in polarization
    CHECK(result.labels[0].angular_l == result.labels[2].angular_l);
    CHECK(result.labels[0].azimuthal_m == result.labels[2].azimuthal_m);
    CHECK(result.labels[0].polarization == Polarization::TE);
    CHECK(result.labels[2].polarization == Polarization::TM);
    // dip 1 is one m-step below dip 0; dip 3 is the next angular order
    CHECK(result.labels[1].azimuthal_m == result.labels[0].azimuthal_m - 1);
    CHECK(result.labels[3].angular_l == result.labels[0].angular_l + 1);
}

TEST_CASE("a lone pair split by Delta_P is labeled TE/TM with equal (l, m)") {
    const OpticalMaterial silica = fused_silica();
    const SpheroidGeometry prior{40.0, 0.0, 13.0, 160.0};
    const double dp_thz = polarization_splitting(prior, silica, 0.8) * 1e-3;
    const std::vector<double> dips{374.584, 374.584 + dp_thz};
    const ModeAssignment result = assign_modes(dips, prior, silica);
    CHECK(result.assigned);
    CHECK(result.labels[0].polarization == Polarization::TE);
    CHECK(result.labels[1].polarization == Polarization::TM);
    CHECK(result.labels[0].angular_l == result.labels[1].angular_l);
    CHECK(result.labels[0].azimuthal_m == result.labels[1].azimuthal_m);
}

TEST_CASE("assignment is stable under 1 GHz perturbations of the centers") {
    const OpticalMaterial silica = fused_silica();
    const SpheroidGeometry prior{40.0, 0.0, 13.0, 160.0};
    const double f0 = 374.584;
    const std::vector<double> dips{f0, f0 - 0.375, f0 + 0.580, f0 + 0.810};
    const ModeAssignment clean = assign_modes(dips, prior, silica);
    std::mt19937_64 rng(7);
    std::normal_distribution<double> jitter(0.0, 1e-3);  // 1 GHz in THz
    std::vector<double> noisy = dips;
    for (auto& d : noisy) d += jitter(rng);
    const ModeAssignment perturbed = assign_modes(noisy, prior, silica);
    REQUIRE(clean.labels.size() == perturbed.labels.size());
    // the interval objective leaves the absolute l a gauge choice; the
    // discrete structure (relative l, ladder index, polarization) must hold
    for (std::size_t i = 0; i < clean.labels.size(); ++i) {
        CHECK(clean.labels[i].angular_l - clean.labels[0].angular_l ==
              perturbed.labels[i].angular_l - perturbed.labels[0].angular_l);
        CHECK(clean.labels[i].angular_l - clean.labels[i].azimuthal_m ==
              perturbed.labels[i].angular_l - perturbed.labels[i].azimuthal_m);
        CHECK(clean.labels[i].polarization == perturbed.labels[i].polarization);
    }
}

TEST_CASE("assignment preconditions") {
    const OpticalMaterial silica = fused_silica();
    const SpheroidGeometry prior{40.0, 0.0, 13.0, 160.0};
    CHECK_THROWS_AS(assign_modes({375.0}, prior, silica), DomainError);
    // span below 0.3 FSR
    CHECK_THROWS_AS(assign_modes({375.0, 375.05, 375.1}, prior, silica), DomainError);
}

namespace {

std::vector<TransmissionTrace> device2_sweep(double noise, double drift,
                                             std::uint64_t seed) {
    const RunConfig cfg = device2_preset();
    return voltage_sweep_experiment(cfg.geometry, cfg.material, cfg.assembly,
                                    cfg.scan.scan, cfg.sweep_voltages, cfg.window.filter,
                                    noise, drift, cfg.scan.duration_s, seed);
}

}  // namespace

TEST_CASE("device-2 sweep calibration recovers 6e-5 strain per volt and ratio 1.6") {
    const OpticalMaterial silica = fused_silica();
    const SpheroidGeometry prior{40.0, 0.46, 15.0, 336.6666666666667};
    const auto sweep = device2_sweep(1e-3, 0.0, 77);
    const CalibrationResult cal = calibrate_device(sweep, prior, silica);
    CHECK(rel_close(cal.strain_per_volt, 6e-5, 0.10));
    CHECK(rel_close(cal.slope_te_ghz_per_v, 5.0, 0.02));
    CHECK(rel_close(cal.slope_tm_ghz_per_v, 8.0, 0.02));
    CHECK(std::abs(cal.ratio - 1.6) <= 0.05);
    CHECK(cal.warnings.empty());
}

TEST_CASE("synthetic TE sweep slope is 5 GHz/V with r^2 above 0.999") {
    const auto sweep = device2_sweep(0.0, 0.0, 5);
    // fit the TE track directly: first dip of each trace
    std::vector<std::pair<double, double>> pts;
    for (const auto& tr : sweep) {
        const auto windows = detect_dips(tr, 0.1);
        REQUIRE(!windows.empty());
        pts.emplace_back(tr.metadata.voltage_v, fit_lorentzian(tr, windows[0]).center_thz);
    }
    const SlopeFit fit = fit_tuning_slope(pts, 5.0);
    CHECK(rel_close(fit.slope_ghz_per_v, 5.0, 0.02));
    CHECK(fit.r_squared > 0.999);
    CHECK(fit.polarization_guess == PolarizationGuess::TE);
}

TEST_CASE("calibration needs at least three distinct voltages") {
    const OpticalMaterial silica = fused_silica();
    const SpheroidGeometry prior{40.0, 0.46, 15.0, 336.6666666666667};
    auto sweep = device2_sweep(0.0, 0.0, 5);
    std::vector<TransmissionTrace> repeated{sweep[0], sweep[0], sweep[0]};
    CHECK_THROWS_AS(calibrate_device(repeated, prior, silica), DomainError);
}

TEST_CASE("slow thermal drift does not bias the recovered slopes") {
    const OpticalMaterial silica = fused_silica();
    const SpheroidGeometry prior{40.0, 0.46, 15.0, 336.6666666666667};
    const double drift = 10.0 / 86400.0;  // 10 GHz per day, scans take a second
    const CalibrationResult quiet = calibrate_device(device2_sweep(0.0, 0.0, 3), prior, silica);
    const CalibrationResult drifty =
        calibrate_device(device2_sweep(0.0, drift, 3), prior, silica);
    CHECK(rel_close(drifty.slope_te_ghz_per_v, quiet.slope_te_ghz_per_v, 1e-3));
    CHECK(rel_close(drifty.slope_tm_ghz_per_v, quiet.slope_tm_ghz_per_v, 1e-3));
}

TEST_CASE("round trip: noiseless synthetic dips recovered to 1e-6 across random lines") {
    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> fd(370.0, 380.0);
    std::uniform_real_distribution<double> logq(6.0, 8.0);
    std::uniform_real_distribution<double> dd(0.05, 0.9);
    for (int rep = 0; rep < 10; ++rep) {
        const double f0 = fd(rng);
        const double q = std::pow(10.0, logq(rng));
        const double depth = dd(rng);
        const ModeLine planted = line_at(f0, q, depth);
        const double gamma_ghz = f0 / q * 1e3;
        LaserScan scan{f0 - 20.0 * gamma_ghz * 1e-3, 40.0 * gamma_ghz, 4001, 0.0};
        const TransmissionTrace tr = synthesize_trace({planted}, scan, 0.0, 0.0, 1.0, rep);
        const auto windows = detect_dips(tr, depth / 2.0);
        REQUIRE(windows.size() == 1);
        const DipFit fit = fit_lorentzian(tr, windows[0]);
        CHECK(std::abs(fit.center_thz - f0) <= 1e-6 * gamma_ghz * 1e-3);
        CHECK(rel_close(fit.loaded_q, q, 1e-6));
        CHECK(rel_close(fit.depth, depth, 1e-6));
    }
}

TEST_CASE("resolved dips fit back to their planted parameters within 1%") {
    const double q = 1e7;
    const double sep_thz = 375.0 / q * 20.0;  // 20 gamma
    const ModeLine a = line_at(375.0, q, 0.3);
    const ModeLine b = line_at(375.0 + sep_thz, q, 0.4, Polarization::TM);
    LaserScan scan{374.9993, 2.5, 50001, 0.0};
    const TransmissionTrace tr = synthesize_trace({a, b}, scan, 0.0, 0.0, 1.0, 3);
    const auto windows = detect_dips(tr, 0.1);
    REQUIRE(windows.size() == 2);
    const DipFit fa = fit_lorentzian(tr, windows[0]);
    const DipFit fb = fit_lorentzian(tr, windows[1]);
    CHECK(rel_close(fa.depth, 0.3, 0.01));
    CHECK(rel_close(fb.depth, 0.4, 0.01));
    CHECK(rel_close(fa.loaded_q, q, 0.01));
    CHECK(rel_close(fb.loaded_q, q, 0.01));
    CHECK(std::abs(fa.center_thz - a.frequency_thz) < 0.01 * (375.0 / q));
    CHECK(std::abs(fb.center_thz - b.frequency_thz) < 0.01 * (375.0 / q));
}

TEST_CASE("slope fit reproduces the model tuning slope to 1e-10") {
    const RunConfig cfg = device2_preset();
    const double slope = tuning_slope(cfg.geometry, cfg.material, cfg.assembly,
                                      Polarization::TM);
    std::vector<std::pair<double, double>> pts;
    for (int v = 0; v <= 8; v += 2) {
        pts.emplace_back(v, 375.0 + slope * v * 1e-3);
    }
    const SlopeFit fit = fit_tuning_slope(pts);
    CHECK(rel_close(fit.slope_ghz_per_v, slope, 1e-10));
}

TEST_CASE("assignment returns the generating labels for a model spectrum") {
    const OpticalMaterial silica = fused_silica();
    const SpheroidGeometry truth{40.0, 0.46, 15.0, 336.6666666666667};
    ModeFilter filter;
    filter.delta_m_max = 2;
    const auto lines = spectrum_window(truth, silica, 374.43, 375.10, filter);
    REQUIRE(lines.size() >= 4);
    REQUIRE(lines.size() <= 6);
    std::vector<double> dips;
    for (const auto& line : lines) dips.push_back(line.frequency_thz);
    const SpheroidGeometry prior{40.0, 0.0, 15.0, 336.6666666666667};
    const ModeAssignment result = assign_modes(dips, prior, silica);
    CHECK(result.assigned);
    CHECK(rel_close(result.fitted_radius_um, 40.0, 0.005));
    CHECK(std::abs(result.fitted_ellipticity - 0.46) <= 0.01);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        CHECK(result.labels[i].angular_l == lines[i].mode.angular_l);
        CHECK(result.labels[i].azimuthal_m == lines[i].mode.azimuthal_m);
        CHECK(result.labels[i].polarization == lines[i].mode.polarization);
    }
}

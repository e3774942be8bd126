// wgm - whispering-gallery-mode spectra, strain tuning and scan analysis.
//
// Subcommands: spectrum, tune-curve, scan, fit, assign, calibrate.
// Exit codes: 0 success, 2 configuration/input error, 3 fit non-convergence
// (a partial report is still written).

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "wgm/analysis.hpp"
#include "wgm/config.hpp"
#include "wgm/constants.hpp"
#include "wgm/errors.hpp"
#include "wgm/modes.hpp"
#include "wgm/spectroscopy.hpp"
#include "wgm/trace_io.hpp"
#include "wgm/tuning.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string preset;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path,
                    "JSON config file (default: $WGM_CONFIG if set)");
    cmd->add_option("--preset", opts.preset, "preset name: device1 or device2");
    cmd->add_option("--seed", opts.seed, "override the RNG seed");
    cmd->add_option("--out", opts.out_dir, "output directory");
}

wgm::RunConfig resolve_config(const CommonOpts& opts) {
    wgm::RunConfig cfg;
    std::string path = opts.config_path;
    if (path.empty()) {
        if (const char* env = std::getenv("WGM_CONFIG")) path = env;
    }
    if (!path.empty()) {
        cfg = wgm::load_config(path);
        if (!opts.preset.empty() && opts.preset != cfg.preset) {
            cfg = wgm::preset_by_name(opts.preset);  // explicit flag wins
        }
    } else if (!opts.preset.empty()) {
        cfg = wgm::preset_by_name(opts.preset);
    } else {
        cfg = wgm::device2_preset();
    }
    if (opts.seed) cfg.seed = *opts.seed;
    if (!opts.out_dir.empty()) cfg.out_dir = opts.out_dir;
    return cfg;
}

std::string hash_string(const wgm::RunConfig& cfg) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "0x%016llx",
                  static_cast<unsigned long long>(wgm::config_hash(cfg)));
    return buf;
}

json report_header(const wgm::RunConfig& cfg) {
    return json{{"config_hash", hash_string(cfg)},
                {"seed", cfg.seed},
                {"preset", cfg.preset}};
}

fs::path ensure_out_dir(const wgm::RunConfig& cfg) {
    fs::path dir(cfg.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw wgm::ConfigError("cannot create output directory " + dir.string());
    return dir;
}

int cmd_spectrum(const CommonOpts& opts) {
    const wgm::RunConfig cfg = resolve_config(opts);
    const auto lines = wgm::spectrum_window(cfg.geometry, cfg.material,
                                            cfg.window.f_lo_thz, cfg.window.f_hi_thz,
                                            cfg.window.filter);
    const fs::path dir = ensure_out_dir(cfg);
    wgm::write_spectrum_csv(dir / "spectrum.csv", lines);
    std::cout << "wrote " << (dir / "spectrum.csv").string() << " (" << lines.size()
              << " lines)\n";
    return 0;
}

int cmd_tune_curve(const CommonOpts& opts) {
    const wgm::RunConfig cfg = resolve_config(opts);
    if (cfg.sweep_voltages.empty()) {
        throw wgm::ConfigError("tune-curve: sweep voltage grid is empty");
    }
    const double slope_te = wgm::tuning_slope(cfg.geometry, cfg.material, cfg.assembly,
                                              wgm::Polarization::TE);
    const double slope_tm = wgm::tuning_slope(cfg.geometry, cfg.material, cfg.assembly,
                                              wgm::Polarization::TM);
    std::ostringstream csv;
    csv << "voltage_V,shift_TE_GHz,shift_TM_GHz\n";
    json xs = json::array(), te = json::array(), tm = json::array();
    for (const double v : cfg.sweep_voltages) {
        if (v < cfg.assembly.voltage_min || v > cfg.assembly.voltage_max) {
            throw wgm::ConfigError("tune-curve: sweep voltage outside assembly range");
        }
        csv << wgm::format_double(v) << ',' << wgm::format_double(slope_te * v) << ','
            << wgm::format_double(slope_tm * v) << '\n';
        xs.push_back(v);
        te.push_back(slope_te * v);
        tm.push_back(slope_tm * v);
    }
    const fs::path dir = ensure_out_dir(cfg);
    wgm::atomic_write_text(dir / "tune_curve.csv", csv.str());
    json plot = report_header(cfg);
    plot["title"] = "WGM frequency shift versus PZT voltage";
    plot["x_label"] = "voltage (V)";
    plot["y_label"] = "frequency shift (GHz)";
    plot["series"] = json::array({json{{"name", "TE"}, {"x", xs}, {"y", te}},
                                  json{{"name", "TM"}, {"x", xs}, {"y", tm}}});
    wgm::atomic_write_text(dir / "tune_curve_plot.json", plot.dump(2) + "\n");
    std::cout << "wrote " << (dir / "tune_curve.csv").string() << " and plot data\n";
    return 0;
}

int cmd_scan(const CommonOpts& opts) {
    const wgm::RunConfig cfg = resolve_config(opts);
    const fs::path dir = ensure_out_dir(cfg);
    const auto traces = wgm::voltage_sweep_experiment(
        cfg.geometry, cfg.material, cfg.assembly, cfg.scan.scan, cfg.sweep_voltages,
        cfg.window.filter, cfg.scan.noise_rms, cfg.scan.drift_ghz_per_s,
        cfg.scan.duration_s, cfg.seed);
    json files = json::array();
    for (std::size_t i = 0; i < traces.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "trace_%03zu.csv", i);
        wgm::write_trace_csv(dir / name, traces[i]);
        files.push_back((dir / name).string());
    }
    json report = report_header(cfg);
    report["files"] = files;
    wgm::atomic_write_text(dir / "scan_report.json", report.dump(2) + "\n");
    std::cout << "wrote " << traces.size() << " traces and scan_report.json to "
              << dir.string() << "\n";
    return 0;
}

json dipfit_to_json(const wgm::DipFit& fit) {
    return json{{"center_THz", fit.center_thz},
                {"loaded_Q", fit.loaded_q},
                {"depth", fit.depth},
                {"residual_rms", fit.residual_rms},
                {"covariance_diag",
                 {fit.covariance_diag[0], fit.covariance_diag[1], fit.covariance_diag[2]}}};
}

int cmd_fit(const CommonOpts& opts, const std::vector<std::string>& files,
            double prominence) {
    const wgm::RunConfig cfg = resolve_config(opts);
    const fs::path dir = ensure_out_dir(cfg);
    json report = report_header(cfg);
    report["traces"] = json::array();
    bool any_fit_failed = false;
    for (const auto& file : files) {
        const wgm::TransmissionTrace trace = wgm::read_trace_csv(file);
        json entry{{"file", file}, {"voltage_V", trace.metadata.voltage_v}};
        entry["dips"] = json::array();
        for (const auto& window : wgm::detect_dips(trace, prominence)) {
            try {
                entry["dips"].push_back(dipfit_to_json(wgm::fit_lorentzian(trace, window)));
            } catch (const wgm::FitError& e) {
                any_fit_failed = true;
                json bad = dipfit_to_json(e.last_iterate());
                bad["error"] = e.what();
                entry["dips"].push_back(bad);
            }
        }
        report["traces"].push_back(entry);
    }
    report["converged"] = !any_fit_failed;
    wgm::atomic_write_text(dir / "fit_report.json", report.dump(2) + "\n");
    std::cout << "wrote " << (dir / "fit_report.json").string() << "\n";
    return any_fit_failed ? 3 : 0;
}

int cmd_assign(const CommonOpts& opts, const std::string& file, double prominence) {
    const wgm::RunConfig cfg = resolve_config(opts);
    const fs::path dir = ensure_out_dir(cfg);
    const wgm::TransmissionTrace trace = wgm::read_trace_csv(file);
    std::vector<double> centers;
    for (const auto& window : wgm::detect_dips(trace, prominence)) {
        centers.push_back(wgm::fit_lorentzian(trace, window).center_thz);
    }
    const wgm::ModeAssignment assignment =
        wgm::assign_modes(centers, cfg.geometry, cfg.material);
    json report = report_header(cfg);
    report["file"] = file;
    report["dip_centers_THz"] = centers;
    report["assigned"] = assignment.assigned;
    report["fitted_radius_um"] = assignment.fitted_radius_um;
    report["fitted_ellipticity"] = assignment.fitted_ellipticity;
    report["objective_GHz2"] = assignment.objective_ghz2;
    report["labels"] = json::array();
    for (const auto& id : assignment.labels) {
        report["labels"].push_back(
            json{{"q", id.radial_order_q},
                 {"l", id.angular_l},
                 {"m", id.azimuthal_m},
                 {"pol", id.polarization == wgm::Polarization::TE ? "TE" : "TM"}});
    }
    wgm::atomic_write_text(dir / "assign_report.json", report.dump(2) + "\n");
    std::cout << "wrote " << (dir / "assign_report.json").string() << "\n";
    return 0;
}

int cmd_calibrate(const CommonOpts& opts, const std::vector<std::string>& files,
                  double prominence) {
    const wgm::RunConfig cfg = resolve_config(opts);
    const fs::path dir = ensure_out_dir(cfg);
    std::vector<wgm::TransmissionTrace> sweep;
    sweep.reserve(files.size());
    for (const auto& file : files) {
        sweep.push_back(wgm::read_trace_csv(file));
    }
    wgm::CalibrateOptions cal;
    cal.prominence = prominence;
    const wgm::CalibrationResult result =
        wgm::calibrate_device(sweep, cfg.geometry, cfg.material, cal);
    json report = report_header(cfg);
    report["strain_per_volt"] = result.strain_per_volt;
    report["slope_TE_GHz_per_V"] = result.slope_te_ghz_per_v;
    report["slope_TM_GHz_per_V"] = result.slope_tm_ghz_per_v;
    report["ratio"] = result.ratio;
    report["warnings"] = result.warnings;
    wgm::atomic_write_text(dir / "calibrate_report.json", report.dump(2) + "\n");
    std::cout << "wrote " << (dir / "calibrate_report.json").string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"whispering-gallery-mode spectra, strain tuning and scan analysis"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::vector<std::string> files;
    std::string file;
    double prominence = 0.1;

    auto* spectrum = app.add_subcommand("spectrum", "mode lines in the config window -> CSV");
    add_common(spectrum, opts);

    auto* tune = app.add_subcommand("tune-curve", "TE/TM shift vs voltage -> CSV + plot data");
    add_common(tune, opts);

    auto* scan = app.add_subcommand("scan", "synthesize voltage-sweep traces -> CSV files");
    add_common(scan, opts);

    auto* fit = app.add_subcommand("fit", "detect and fit dips in trace files -> JSON");
    add_common(fit, opts);
    fit->add_option("files", files, "trace CSV files")->required();
    fit->add_option("--prominence", prominence, "dip detection prominence (0,1)");

    auto* assign = app.add_subcommand("assign", "label dips with mode ids -> JSON");
    add_common(assign, opts);
    assign->add_option("file", file, "trace CSV file")->required();
    assign->add_option("--prominence", prominence, "dip detection prominence (0,1)");

    auto* calibrate =
        app.add_subcommand("calibrate", "recover strain per volt from a sweep -> JSON");
    add_common(calibrate, opts);
    calibrate->add_option("files", files, "trace CSV files of one sweep")->required();
    calibrate->add_option("--prominence", prominence, "dip detection prominence (0,1)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (spectrum->parsed()) return cmd_spectrum(opts);
        if (tune->parsed()) return cmd_tune_curve(opts);
        if (scan->parsed()) return cmd_scan(opts);
        if (fit->parsed()) return cmd_fit(opts, files, prominence);
        if (assign->parsed()) return cmd_assign(opts, file, prominence);
        if (calibrate->parsed()) return cmd_calibrate(opts, files, prominence);
    } catch (const wgm::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const wgm::DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const wgm::FitError& e) {
        std::cerr << "fit error: " << e.what() << "\n";
        return 3;
    } catch (const wgm::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

#include "wgm/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "wgm/errors.hpp"

namespace wgm {

using nlohmann::json;

namespace {

void require_known_keys(const json& obj, const std::set<std::string>& known,
                        const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (!known.count(key)) {
            throw ConfigError("config: unknown key \"" + key + "\" in " + where);
        }
    }
}

double get_num(const json& obj, const std::string& key, const std::string& where) {
    const auto& v = obj.at(key);
    if (!v.is_number()) {
        throw ConfigError("config: " + where + "." + key + " must be a number");
    }
    return v.get<double>();
}

void override_num(const json& obj, const std::string& key, const std::string& where,
                  double& target) {
    if (obj.contains(key)) target = get_num(obj, key, where);
}

void apply_material(const json& j, OpticalMaterial& m) {
    require_known_keys(j, {"name", "sellmeier", "dn_dT_per_K", "thermal_expansion_per_K",
                           "poisson_ratio", "photoelastic_p11", "photoelastic_p12",
                           "elastic_limit_strain", "plastic_onset_strain",
                           "photoelastic_gain_te", "photoelastic_gain_tm"},
                       "material");
    if (j.contains("name")) m.name = j.at("name").get<std::string>();
    if (j.contains("sellmeier")) {
        const auto& s = j.at("sellmeier");
        require_known_keys(s, {"b", "c_um2"}, "material.sellmeier");
        const auto& b = s.at("b");
        const auto& c = s.at("c_um2");
        if (!b.is_array() || !c.is_array() || b.size() != 3 || c.size() != 3) {
            throw ConfigError("config: material.sellmeier.b and .c_um2 must be arrays of 3");
        }
        for (std::size_t i = 0; i < 3; ++i) {
            m.sellmeier[i].b = b[i].get<double>();
            m.sellmeier[i].c_um2 = c[i].get<double>();
        }
    }
    override_num(j, "dn_dT_per_K", "material", m.dn_dT);
    override_num(j, "thermal_expansion_per_K", "material", m.thermal_expansion);
    override_num(j, "poisson_ratio", "material", m.poisson_ratio);
    override_num(j, "photoelastic_p11", "material", m.photoelastic_p11);
    override_num(j, "photoelastic_p12", "material", m.photoelastic_p12);
    override_num(j, "elastic_limit_strain", "material", m.elastic_limit_strain);
    override_num(j, "plastic_onset_strain", "material", m.plastic_onset_strain);
    override_num(j, "photoelastic_gain_te", "material", m.photoelastic_gain_te);
    override_num(j, "photoelastic_gain_tm", "material", m.photoelastic_gain_tm);
}

void apply_geometry(const json& j, SpheroidGeometry& g) {
    require_known_keys(j, {"equatorial_radius_um", "ellipticity", "stem_radius_um",
                           "stem_total_length_um"},
                       "geometry");
    override_num(j, "equatorial_radius_um", "geometry", g.equatorial_radius_um);
    override_num(j, "ellipticity", "geometry", g.ellipticity);
    override_num(j, "stem_radius_um", "geometry", g.stem_radius_um);
    override_num(j, "stem_total_length_um", "geometry", g.stem_total_length_um);
}

void apply_assembly(const json& j, ActuatorAssembly& a) {
    require_known_keys(j, {"pzt_um_per_volt", "voltage_range_v",
                           "compliance_fraction_sphere", "gauge_length_um",
                           "tm_te_ratio_correction"},
                       "assembly");
    override_num(j, "pzt_um_per_volt", "assembly", a.pzt_um_per_volt);
    if (j.contains("voltage_range_v")) {
        const auto& r = j.at("voltage_range_v");
        if (!r.is_array() || r.size() != 2) {
            throw ConfigError("config: assembly.voltage_range_v must be [min, max]");
        }
        a.voltage_min = r[0].get<double>();
        a.voltage_max = r[1].get<double>();
    }
    override_num(j, "compliance_fraction_sphere", "assembly", a.compliance_fraction_sphere);
    override_num(j, "gauge_length_um", "assembly", a.gauge_length_um);
    override_num(j, "tm_te_ratio_correction", "assembly", a.tm_te_ratio_correction);
}

void apply_window(const json& j, WindowConfig& w) {
    require_known_keys(j, {"f_lo_thz", "f_hi_thz", "q_max", "delta_m_max",
                           "polarizations", "loaded_q", "dip_depth"},
                       "window");
    override_num(j, "f_lo_thz", "window", w.f_lo_thz);
    override_num(j, "f_hi_thz", "window", w.f_hi_thz);
    if (j.contains("q_max")) w.filter.q_max = j.at("q_max").get<int>();
    if (j.contains("delta_m_max")) w.filter.delta_m_max = j.at("delta_m_max").get<int>();
    if (j.contains("polarizations")) {
        w.filter.include_te = false;
        w.filter.include_tm = false;
        for (const auto& p : j.at("polarizations")) {
            const std::string name = p.get<std::string>();
            if (name == "TE") {
                w.filter.include_te = true;
            } else if (name == "TM") {
                w.filter.include_tm = true;
            } else {
                throw ConfigError("config: window.polarizations entries must be TE or TM");
            }
        }
    }
    override_num(j, "loaded_q", "window", w.filter.loaded_q);
    override_num(j, "dip_depth", "window", w.filter.dip_depth);
}

void apply_scan(const json& j, ScanConfig& s) {
    require_known_keys(j, {"start_thz", "span_ghz", "points", "laser_linewidth_mhz",
                           "noise_rms", "drift_ghz_per_s", "duration_s"},
                       "scan");
    override_num(j, "start_thz", "scan", s.scan.start_thz);
    override_num(j, "span_ghz", "scan", s.scan.span_ghz);
    if (j.contains("points")) s.scan.points = j.at("points").get<int>();
    override_num(j, "laser_linewidth_mhz", "scan", s.scan.laser_linewidth_mhz);
    override_num(j, "noise_rms", "scan", s.noise_rms);
    override_num(j, "drift_ghz_per_s", "scan", s.drift_ghz_per_s);
    override_num(j, "duration_s", "scan", s.duration_s);
}

std::vector<double> sweep_from_json(const json& j) {
    require_known_keys(j, {"start_v", "stop_v", "step_v", "voltages"}, "sweep");
    if (j.contains("voltages")) {
        std::vector<double> v = j.at("voltages").get<std::vector<double>>();
        if (v.empty()) throw ConfigError("config: sweep.voltages must not be empty");
        return v;
    }
    const double start = get_num(j, "start_v", "sweep");
    const double stop = get_num(j, "stop_v", "sweep");
    const double step = get_num(j, "step_v", "sweep");
    if (!(step > 0.0) || stop < start) {
        throw ConfigError("config: sweep needs step_v > 0 and stop_v >= start_v");
    }
    std::vector<double> v;
    for (double x = start; x <= stop + 1e-9 * step; x += step) v.push_back(x);
    return v;
}

}  // namespace

RunConfig device2_preset() {
    RunConfig c;
    c.preset = "device2";
    c.material = fused_silica();
    c.geometry = {40.0, 0.46, 15.0, 336.6666666666667};
    // calibrated to eps = 6e-5 per volt and 0.25 um of gauge travel at 10 V
    c.assembly = {0.05, 0.0, 50.0, 0.5, 416.6666666666667, 0.914};
    c.window.f_lo_thz = 374.3;
    c.window.f_hi_thz = 375.5;
    c.window.filter.q_max = 1;
    c.window.filter.delta_m_max = 2;
    c.window.filter.loaded_q = 1e7;
    c.window.filter.dip_depth = 0.3;
    c.scan.scan = {374.55, 350.0, 70001, 0.3};
    c.scan.noise_rms = 0.0;
    c.scan.drift_ghz_per_s = 0.0;
    c.scan.duration_s = 1.0;
    c.sweep_voltages = {0.0, 2.0, 4.0, 6.0, 8.0, 10.0};
    return c;
}

RunConfig device1_preset() {
    RunConfig c;
    c.preset = "device1";
    c.material = fused_silica();
    c.geometry = {100.0, 0.01, 40.0, 800.0};
    c.assembly = {0.05, 0.0, 120.0, 0.3, 1000.0, 1.0};
    c.window.f_lo_thz = 374.6;
    c.window.f_hi_thz = 375.4;
    c.window.filter.q_max = 1;
    c.window.filter.delta_m_max = 1;
    c.window.filter.loaded_q = 1e7;
    c.window.filter.dip_depth = 0.3;
    c.scan.scan = {374.745, 30.0, 6001, 0.3};
    c.scan.noise_rms = 0.0;
    c.scan.drift_ghz_per_s = 0.0;
    c.scan.duration_s = 1.0;
    c.sweep_voltages = {0, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100, 110, 120};
    return c;
}

RunConfig preset_by_name(const std::string& name) {
    if (name == "device1") return device1_preset();
    if (name == "device2") return device2_preset();
    throw ConfigError("config: unknown preset \"" + name + "\" (expected device1 or device2)");
}

RunConfig parse_config(const std::string& text, const std::string& origin) {
    json j;
    try {
        j = json::parse(text, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw ConfigError(origin + ": " + e.what());
    }
    if (!j.is_object()) {
        throw ConfigError(origin + ": top level must be a JSON object");
    }
    require_known_keys(j, {"preset", "seed", "out_dir", "material", "geometry", "assembly",
                           "window", "scan", "sweep"},
                       "top level");

    RunConfig c = j.contains("preset")
                      ? preset_by_name(j.at("preset").get<std::string>())
                      : device2_preset();
    if (!j.contains("preset")) c.preset = "device2";

    try {
        if (j.contains("material")) apply_material(j.at("material"), c.material);
        if (j.contains("geometry")) apply_geometry(j.at("geometry"), c.geometry);
        if (j.contains("assembly")) apply_assembly(j.at("assembly"), c.assembly);
        if (j.contains("window")) apply_window(j.at("window"), c.window);
        if (j.contains("scan")) apply_scan(j.at("scan"), c.scan);
        if (j.contains("sweep")) c.sweep_voltages = sweep_from_json(j.at("sweep"));
        if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();
    } catch (const json::exception& e) {
        throw ConfigError(origin + ": " + e.what());
    }

    // validate units/invariants up front so commands never half-run
    try {
        validate_material(c.material);
        validate_geometry(c.geometry);
        validate_assembly(c.assembly);
    } catch (const DomainError& e) {
        throw ConfigError(origin + ": " + e.what());
    }
    if (c.window.f_lo_thz >= c.window.f_hi_thz) {
        throw ConfigError(origin + ": window.f_lo_thz must be < window.f_hi_thz");
    }
    validate_scan(c.scan.scan);
    if (c.scan.noise_rms < 0.0) {
        throw ConfigError(origin + ": scan.noise_rms must be >= 0");
    }
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("config: cannot open " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.string());
}

std::string config_to_json(const RunConfig& c) {
    json j;
    j["preset"] = c.preset;
    j["seed"] = c.seed;
    j["out_dir"] = c.out_dir;
    j["material"] = {
        {"name", c.material.name},
        {"sellmeier",
         {{"b", {c.material.sellmeier[0].b, c.material.sellmeier[1].b,
                 c.material.sellmeier[2].b}},
          {"c_um2", {c.material.sellmeier[0].c_um2, c.material.sellmeier[1].c_um2,
                     c.material.sellmeier[2].c_um2}}}},
        {"dn_dT_per_K", c.material.dn_dT},
        {"thermal_expansion_per_K", c.material.thermal_expansion},
        {"poisson_ratio", c.material.poisson_ratio},
        {"photoelastic_p11", c.material.photoelastic_p11},
        {"photoelastic_p12", c.material.photoelastic_p12},
        {"elastic_limit_strain", c.material.elastic_limit_strain},
        {"plastic_onset_strain", c.material.plastic_onset_strain},
        {"photoelastic_gain_te", c.material.photoelastic_gain_te},
        {"photoelastic_gain_tm", c.material.photoelastic_gain_tm}};
    j["geometry"] = {{"equatorial_radius_um", c.geometry.equatorial_radius_um},
                     {"ellipticity", c.geometry.ellipticity},
                     {"stem_radius_um", c.geometry.stem_radius_um},
                     {"stem_total_length_um", c.geometry.stem_total_length_um}};
    j["assembly"] = {{"pzt_um_per_volt", c.assembly.pzt_um_per_volt},
                     {"voltage_range_v", {c.assembly.voltage_min, c.assembly.voltage_max}},
                     {"compliance_fraction_sphere", c.assembly.compliance_fraction_sphere},
                     {"gauge_length_um", c.assembly.gauge_length_um},
                     {"tm_te_ratio_correction", c.assembly.tm_te_ratio_correction}};
    std::vector<std::string> pols;
    if (c.window.filter.include_te) pols.push_back("TE");
    if (c.window.filter.include_tm) pols.push_back("TM");
    j["window"] = {{"f_lo_thz", c.window.f_lo_thz},
                   {"f_hi_thz", c.window.f_hi_thz},
                   {"q_max", c.window.filter.q_max},
                   {"delta_m_max", c.window.filter.delta_m_max},
                   {"polarizations", pols},
                   {"loaded_q", c.window.filter.loaded_q},
                   {"dip_depth", c.window.filter.dip_depth}};
    j["scan"] = {{"start_thz", c.scan.scan.start_thz},
                 {"span_ghz", c.scan.scan.span_ghz},
                 {"points", c.scan.scan.points},
                 {"laser_linewidth_mhz", c.scan.scan.laser_linewidth_mhz},
                 {"noise_rms", c.scan.noise_rms},
                 {"drift_ghz_per_s", c.scan.drift_ghz_per_s},
                 {"duration_s", c.scan.duration_s}};
    j["sweep"] = {{"voltages", c.sweep_voltages}};
    return j.dump(2);
}

std::uint64_t config_hash(const RunConfig& config) {
    const std::string dump = config_to_json(config);
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a 64
    for (const unsigned char ch : dump) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace wgm

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "test_helpers.hpp"
#include "wgm/config.hpp"
#include "wgm/errors.hpp"
#include "wgm/spectroscopy.hpp"
#include "wgm/trace_io.hpp"

using namespace wgm;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("wgm_test_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

}  // namespace

TEST_CASE("trace CSV round trip is bit exact") {
    TempDir dir;
    TransmissionTrace trace;
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> td(0.0, 1.0);
    const int n = 257;
    trace.frequencies_thz.resize(n);
    trace.transmission.resize(n);
    for (int i = 0; i < n; ++i) {
        trace.frequencies_thz[i] = 374.123456789 + i * 1.234567e-5;
        trace.transmission[i] = td(rng);
    }
    trace.metadata.voltage_v = 7.25;
    trace.metadata.delta_t_k = -0.125;
    trace.metadata.seed = 1234567890123456789ull;

    const fs::path file = dir.path / "trace.csv";
    write_trace_csv(file, trace);
    const TransmissionTrace back = read_trace_csv(file);
    REQUIRE(back.frequencies_thz.size() == trace.frequencies_thz.size());
    CHECK((back.frequencies_thz == trace.frequencies_thz).all());
    CHECK((back.transmission == trace.transmission).all());
    CHECK(back.metadata.voltage_v == trace.metadata.voltage_v);
    CHECK(back.metadata.delta_t_k == trace.metadata.delta_t_k);
    CHECK(back.metadata.seed == trace.metadata.seed);
}

TEST_CASE("trace parser reports malformed content with line context") {
    TempDir dir;
    const fs::path bad1 = dir.path / "bad1.csv";
    atomic_write_text(bad1, "frequency_THz,transmission\n1,2\n");
    CHECK_THROWS_AS(read_trace_csv(bad1), ConfigError);

    const fs::path bad2 = dir.path / "bad2.csv";
    atomic_write_text(bad2, "# wgm-trace v1\nfrequency_THz,transmission\n374.9,abc\n");
    try {
        read_trace_csv(bad2);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find(":3:") != std::string::npos);
    }

    const fs::path bad3 = dir.path / "bad3.csv";
    atomic_write_text(bad3,
                      "# wgm-trace v1\nfrequency_THz,transmission\n375.0,0.5\n374.9,0.5\n");
    CHECK_THROWS_AS(read_trace_csv(bad3), ConfigError);  // non-increasing grid
}

TEST_CASE("spectrum CSV columns") {
    TempDir dir;
    std::vector<ModeLine> lines{{{1, 443, 443, Polarization::TE}, 374.584, 1e8, 0.3},
                                {{1, 443, 443, Polarization::TM}, 375.168, 1e8, 0.3}};
    const fs::path file = dir.path / "spectrum.csv";
    write_spectrum_csv(file, lines);
    std::ifstream in(file);
    std::string header, row1;
    std::getline(in, header);
    std::getline(in, row1);
    CHECK(header == "q,l,m,pol,frequency_THz,Q,depth");
    CHECK(row1.rfind("1,443,443,TE,374.584", 0) == 0);
}

TEST_CASE("atomic writes leave no temp droppings") {
    TempDir dir;
    const fs::path file = dir.path / "x.txt";
    atomic_write_text(file, "hello\n");
    CHECK(fs::exists(file));
    CHECK_FALSE(fs::exists(dir.path / "x.txt.tmp"));
}

TEST_CASE("config parsing: preset plus overrides, strict keys, validation") {
    const std::string text = R"({
        // comments are allowed in config files
        "preset": "device2",
        "seed": 42,
        "geometry": {"ellipticity": 0.5},
        "scan": {"points": 1001}
    })";
    const RunConfig cfg = parse_config(text);
    CHECK(cfg.preset == "device2");
    CHECK(cfg.seed == 42);
    CHECK(cfg.geometry.ellipticity == 0.5);
    CHECK(cfg.geometry.equatorial_radius_um == 40.0);  // from the preset
    CHECK(cfg.scan.scan.points == 1001);

    CHECK_THROWS_AS(parse_config(R"({"preset": "device9"})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"tpyo": 1})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"geometry": {"radius": 40}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"sweep": {"start_v": 0, "stop_v": -5, "step_v": 1}})"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config("not json at all"), ConfigError);
    // invariant violation caught on load
    CHECK_THROWS_AS(parse_config(R"({"material": {"poisson_ratio": 0.9}})"), ConfigError);
}

TEST_CASE("config hash is stable and sensitive") {
    const RunConfig a = device2_preset();
    const RunConfig b = device2_preset();
    CHECK(config_hash(a) == config_hash(b));
    RunConfig c = device2_preset();
    c.seed = 2;
    CHECK(config_hash(a) != config_hash(c));
}

TEST_CASE("shipped preset files match the built-in presets") {
    const fs::path data_dir = fs::path(WGM_TEST_DATA_DIR);
    const RunConfig d1 = load_config(data_dir / "presets" / "device1.json");
    CHECK(config_hash(d1) == config_hash(device1_preset()));
    const RunConfig d2 = load_config(data_dir / "presets" / "device2.json");
    CHECK(config_hash(d2) == config_hash(device2_preset()));
}

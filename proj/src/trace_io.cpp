#include "wgm/trace_io.hpp"

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <system_error>

#include "wgm/errors.hpp"

namespace wgm {

namespace fs = std::filesystem;

std::string format_double(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

void atomic_write_text(const fs::path& path, const std::string& content) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw ConfigError("cannot open for writing: " + tmp.string());
        }
        out << content;
        if (!out.flush()) {
            std::error_code ec;
            fs::remove(tmp, ec);
            throw ConfigError("write failed: " + tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw ConfigError("rename failed for " + path.string());
    }
}

void write_trace_csv(const fs::path& path, const TransmissionTrace& trace) {
    if (trace.frequencies_thz.size() != trace.transmission.size()) {
        throw DomainError("write_trace_csv: array size mismatch");
    }
    std::ostringstream os;
    os << "# wgm-trace v1\n";
    os << "# voltage_V=" << format_double(trace.metadata.voltage_v) << "\n";
    os << "# delta_T_K=" << format_double(trace.metadata.delta_t_k) << "\n";
    os << "# seed=" << trace.metadata.seed << "\n";
    os << "frequency_THz,transmission\n";
    for (Eigen::Index i = 0; i < trace.frequencies_thz.size(); ++i) {
        os << format_double(trace.frequencies_thz[i]) << ','
           << format_double(trace.transmission[i]) << '\n';
    }
    atomic_write_text(path, os.str());
}

TransmissionTrace read_trace_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open trace file: " + path.string());
    }
    std::string line;
    int lineno = 0;
    if (!std::getline(in, line)) {
        throw ConfigError(path.string() + ": empty file");
    }
    ++lineno;
    if (line.rfind("# wgm-trace v1", 0) != 0) {
        throw ConfigError(path.string() + ":1: missing `# wgm-trace v1` header");
    }
    TransmissionTrace trace;
    std::vector<double> freqs, trans;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            std::string key = line.substr(1, eq - 1);
            const std::string value = line.substr(eq + 1);
            key.erase(0, key.find_first_not_of(" \t"));
            key.erase(key.find_last_not_of(" \t") + 1);
            try {
                if (key == "voltage_V") {
                    trace.metadata.voltage_v = std::stod(value);
                } else if (key == "delta_T_K") {
                    trace.metadata.delta_t_k = std::stod(value);
                } else if (key == "seed") {
                    trace.metadata.seed = std::stoull(value);
                }
            } catch (const std::exception&) {
                std::ostringstream os;
                os << path.string() << ":" << lineno << ": bad metadata value for " << key;
                throw ConfigError(os.str());
            }
            continue;
        }
        // skip a column-header row
        if (line.rfind("frequency_THz", 0) == 0) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            std::ostringstream os;
            os << path.string() << ":" << lineno << ": expected `frequency,transmission`";
            throw ConfigError(os.str());
        }
        char* endp = nullptr;
        errno = 0;
        const std::string fs_str = line.substr(0, comma);
        const std::string ts_str = line.substr(comma + 1);
        const double f = std::strtod(fs_str.c_str(), &endp);
        if (endp == fs_str.c_str() || errno == ERANGE) {
            std::ostringstream os;
            os << path.string() << ":" << lineno << ": bad frequency field";
            throw ConfigError(os.str());
        }
        errno = 0;
        const double t = std::strtod(ts_str.c_str(), &endp);
        if (endp == ts_str.c_str() || errno == ERANGE) {
            std::ostringstream os;
            os << path.string() << ":" << lineno << ": bad transmission field";
            throw ConfigError(os.str());
        }
        freqs.push_back(f);
        trans.push_back(t);
    }
    if (freqs.size() < 2) {
        throw ConfigError(path.string() + ": fewer than 2 samples");
    }
    trace.frequencies_thz =
        Eigen::Map<Eigen::ArrayXd>(freqs.data(), static_cast<Eigen::Index>(freqs.size()));
    trace.transmission =
        Eigen::Map<Eigen::ArrayXd>(trans.data(), static_cast<Eigen::Index>(trans.size()));
    for (Eigen::Index i = 1; i < trace.frequencies_thz.size(); ++i) {
        if (!(trace.frequencies_thz[i] > trace.frequencies_thz[i - 1])) {
            throw ConfigError(path.string() + ": frequency grid not strictly increasing");
        }
    }
    return trace;
}

void write_spectrum_csv(const fs::path& path, const std::vector<ModeLine>& lines) {
    std::ostringstream os;
    os << "q,l,m,pol,frequency_THz,Q,depth\n";
    for (const auto& line : lines) {
        os << line.mode.radial_order_q << ',' << line.mode.angular_l << ','
           << line.mode.azimuthal_m << ','
           << (line.mode.polarization == Polarization::TE ? "TE" : "TM") << ','
           << format_double(line.frequency_thz) << ',' << format_double(line.loaded_q)
           << ',' << format_double(line.dip_depth) << '\n';
    }
    atomic_write_text(path, os.str());
}

}  // namespace wgm

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "wgm/modes.hpp"
#include "wgm/spectroscopy.hpp"

namespace wgm {

/**
 * Trace CSV, format `wgm-trace v1`:
 *
 *   # wgm-trace v1
 *   # voltage_V=<value>
 *   # delta_T_K=<value>
 *   # seed=<value>
 *   frequency_THz,transmission
 *   <f>,<t>
 *   ...
 *
 * Doubles are printed with 17 significant digits, so write -> read is
 * bit-exact.  Files are written atomically (temp file + rename).
 */
void write_trace_csv(const std::filesystem::path& path, const TransmissionTrace& trace);

/// Parse a `wgm-trace v1` file (also accepts real-data CSV with the same
/// schema).  Unknown `# key=value` lines are ignored.
/// @throws ConfigError on malformed content (message carries the line number)
TransmissionTrace read_trace_csv(const std::filesystem::path& path);

/// Spectrum CSV with header `q,l,m,pol,frequency_THz,Q,depth`.
void write_spectrum_csv(const std::filesystem::path& path,
                        const std::vector<ModeLine>& lines);

/// Atomically write arbitrary text (temp file in the same directory + rename).
void atomic_write_text(const std::filesystem::path& path, const std::string& content);

/// Render a double with enough digits to round-trip exactly.
std::string format_double(double value);

}  // namespace wgm

#pragma once

#include "sdl/analysis.hpp"

#include <string>
#include <vector>

namespace sdl {

inline constexpr const char* kToolName = "sdlsim";
inline constexpr const char* kToolVersion = "0.1.0";

/// Comment block opening every emitted file.
std::string file_header(const std::string& config_digest, const std::string& description);

/// frequency_hz, then re/im of every S entry in row-major [out][in] order.
std::string sweep_csv(const SParamGrid& grid, const std::string& header);
/// key,value rows.
std::string metrics_csv(const CirculatorMetrics& m, const std::string& header);
/// port,frequency_hz,power_dbm,order rows; port 1 is the incident wave.
std::string spectrum_csv(const SpectrumReport& r, const std::string& header);
/// f_mod_hz,il_db,iso_db,requested_f_mod_hz,f0_hz,status rows.
std::string modsweep_csv(const std::vector<ModPoint>& points, const std::string& header);
/// Both lines' 2-port S-parameters and through group delay.
std::string linecheck_csv(const LineCheck& lc, const std::string& header);

struct PlotSeries {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

struct Plot {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<PlotSeries> series;
    bool stems = false; // vertical lines from the floor instead of a polyline
};

/// Self-contained SVG line chart.
std::string render_svg(const Plot& plot);

} // namespace sdl

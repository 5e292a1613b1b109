#pragma once

#include <array>
#include <complex>
#include <string>
#include <string_view>
#include <vector>

namespace sdl {

/// 2x2 scattering matrix, indexed [out][in] (zero-based: s[1][0] is S21).
using SMatrix2 = std::array<std::array<std::complex<double>, 2>, 2>;

enum class FrequencyUnit { hz, khz, mhz, ghz };
enum class DataFormat { ri, ma, db };

double unit_scale(FrequencyUnit unit) noexcept;

/// Version-1, two-port Touchstone content normalized to Hz and rectangular form.
struct TouchstoneData {
    std::vector<double> frequencies;
    std::vector<SMatrix2> s;
    double reference_impedance = 50.0;
    FrequencyUnit unit = FrequencyUnit::ghz; // as found in the source
    DataFormat format = DataFormat::ma;
    std::vector<std::string> comments;
};

/// Parses `# <unit> S <RI|MA|DB> R <z0>` files with rows `f s11 s21 s12 s22`.
/// Throws ParseError carrying the offending line number.
TouchstoneData parse_touchstone(std::string_view text);

std::string write_touchstone(const TouchstoneData& data, FrequencyUnit unit, DataFormat format);

TouchstoneData read_touchstone_file(const std::string& path);

} // namespace sdl

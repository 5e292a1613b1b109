#include "sdl/touchstone.hpp"

#include "sdl/errors.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

namespace sdl {

namespace {

std::string upper(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return out;
}

std::vector<std::string_view> split_ws(std::string_view s)
{
    std::vector<std::string_view> tokens;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i])))
            ++i;
        std::size_t j = i;
        while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j])))
            ++j;
        if (j > i)
            tokens.push_back(s.substr(i, j - i));
        i = j;
    }
    return tokens;
}

bool to_double(std::string_view tok, double& out)
{
    // from_chars for double is available in libstdc++ 11.
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    if (first != last && *first == '+')
        ++first;
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last && std::isfinite(out);
}

std::complex<double> decode(double a, double b, DataFormat fmt)
{
    const double deg = std::numbers::pi / 180.0;
    switch (fmt) {
    case DataFormat::ri:
        return {a, b};
    case DataFormat::ma:
        return std::polar(a, b * deg);
    case DataFormat::db:
        return std::polar(std::pow(10.0, a / 20.0), b * deg);
    }
    return {};
}

std::pair<double, double> encode(std::complex<double> v, DataFormat fmt)
{
    const double deg = 180.0 / std::numbers::pi;
    switch (fmt) {
    case DataFormat::ri:
        return {v.real(), v.imag()};
    case DataFormat::ma:
        return {std::abs(v), std::arg(v) * deg};
    case DataFormat::db:
        return {20.0 * std::log10(std::abs(v)), std::arg(v) * deg};
    }
    return {};
}

const char* unit_token(FrequencyUnit u)
{
    switch (u) {
    case FrequencyUnit::hz:
        return "Hz";
    case FrequencyUnit::khz:
        return "kHz";
    case FrequencyUnit::mhz:
        return "MHz";
    case FrequencyUnit::ghz:
        return "GHz";
    }
    return "Hz";
}

const char* format_token(DataFormat f)
{
    switch (f) {
    case DataFormat::ri:
        return "RI";
    case DataFormat::ma:
        return "MA";
    case DataFormat::db:
        return "DB";
    }
    return "RI";
}

} // namespace

double unit_scale(FrequencyUnit unit) noexcept
{
    switch (unit) {
    case FrequencyUnit::hz:
        return 1.0;
    case FrequencyUnit::khz:
        return 1e3;
    case FrequencyUnit::mhz:
        return 1e6;
    case FrequencyUnit::ghz:
        return 1e9;
    }
    return 1.0;
}

TouchstoneData parse_touchstone(std::string_view text)
{
    TouchstoneData data;
    bool have_options = false;
    std::size_t line_no = 0;
    std::size_t pos = 0;

    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos)
            eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.remove_suffix(1);

        if (const auto bang = line.find('!'); bang != std::string_view::npos) {
            auto comment = line.substr(bang + 1);
            if (!comment.empty() && comment.front() == ' ')
                comment.remove_prefix(1);
            data.comments.emplace_back(comment);
            line = line.substr(0, bang);
        }
        const auto tokens = split_ws(line);
        if (tokens.empty())
            continue;

        if (tokens.front().front() == '#') {
            if (have_options)
                continue; // only the first option line counts
            have_options = true;
            std::vector<std::string> opts;
            if (tokens.front().size() > 1)
                opts.push_back(upper(tokens.front().substr(1)));
            for (std::size_t i = 1; i < tokens.size(); ++i)
                opts.push_back(upper(tokens[i]));
            for (std::size_t i = 0; i < opts.size(); ++i) {
                const auto& t = opts[i];
                if (t == "HZ")
                    data.unit = FrequencyUnit::hz;
                else if (t == "KHZ")
                    data.unit = FrequencyUnit::khz;
                else if (t == "MHZ")
                    data.unit = FrequencyUnit::mhz;
                else if (t == "GHZ")
                    data.unit = FrequencyUnit::ghz;
                else if (t == "S")
                    ;
                else if (t == "Y" || t == "Z" || t == "H" || t == "G")
                    throw ParseError("only S parameters are supported, found '" + t + "'", line_no);
                else if (t == "RI")
                    data.format = DataFormat::ri;
                else if (t == "MA")
                    data.format = DataFormat::ma;
                else if (t == "DB")
                    data.format = DataFormat::db;
                else if (t == "R") {
                    if (i + 1 >= opts.size() || !to_double(opts[i + 1], data.reference_impedance)
                        || !(data.reference_impedance > 0.0))
                        throw ParseError("option 'R' needs a positive impedance", line_no);
                    ++i;
                } else {
                    throw ParseError("unknown option token '" + t + "'", line_no);
                }
            }
            continue;
        }

        if (tokens.size() != 9)
            throw ParseError("expected 9 values per 2-port row, found " + std::to_string(tokens.size()),
                             line_no);
        double v[9];
        for (std::size_t i = 0; i < 9; ++i)
            if (!to_double(tokens[i], v[i]))
                throw ParseError("malformed number '" + std::string(tokens[i]) + "'", line_no);

        const double f = v[0] * unit_scale(data.unit);
        if (!data.frequencies.empty() && !(f > data.frequencies.back()))
            throw ParseError("frequencies must be strictly increasing", line_no);

        SMatrix2 m;
        m[0][0] = decode(v[1], v[2], data.format);
        m[1][0] = decode(v[3], v[4], data.format);
        m[0][1] = decode(v[5], v[6], data.format);
        m[1][1] = decode(v[7], v[8], data.format);
        data.frequencies.push_back(f);
        data.s.push_back(m);
    }

    if (data.frequencies.empty())
        throw ParseError("no data rows", line_no);
    return data;
}

std::string write_touchstone(const TouchstoneData& data, FrequencyUnit unit, DataFormat format)
{
    if (data.frequencies.size() != data.s.size())
        throw DataError("write_touchstone: frequency/matrix count mismatch");

    std::ostringstream os;
    for (const auto& c : data.comments)
        os << "! " << c << '\n';
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", data.reference_impedance);
    os << "# " << unit_token(unit) << " S " << format_token(format) << " R " << buf << '\n';

    const double scale = unit_scale(unit);
    for (std::size_t k = 0; k < data.frequencies.size(); ++k) {
        if (!std::isfinite(data.frequencies[k]))
            throw DataError("write_touchstone: non-finite frequency");
        std::snprintf(buf, sizeof buf, "%.17g", data.frequencies[k] / scale);
        os << buf;
        const auto& m = data.s[k];
        for (const auto& v : {m[0][0], m[1][0], m[0][1], m[1][1]}) {
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
                throw DataError("write_touchstone: non-finite S value");
            const auto [a, b] = encode(v, format);
            if (!std::isfinite(a))
                throw DataError("write_touchstone: zero magnitude is not representable in DB format");
            std::snprintf(buf, sizeof buf, " %.17g %.17g", a, b);
            os << buf;
        }
        os << '\n';
    }
    return os.str();
}

TouchstoneData read_touchstone_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw DataError("cannot open Touchstone file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_touchstone(ss.str());
}

} // namespace sdl

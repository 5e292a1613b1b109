#include "sdl/config.hpp"

#include "sdl/errors.hpp"
#include "sdl/schedule.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <fstream>
#include <sstream>

namespace sdl {

using nlohmann::json;

namespace {

json db_value(double v)
{
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    return v;
}

// Collects every violation instead of stopping at the first one.
class Reader {
public:
    Reader(const json& j, std::string where, std::vector<std::string>& errors)
        : j_(j), where_(std::move(where)), errors_(errors)
    {
    }

    bool has(const char* key) const { return j_.is_object() && j_.contains(key); }

    double number(const char* key, std::optional<double> fallback) const
    {
        if (!has(key)) {
            if (!fallback)
                errors_.push_back("missing key '" + path(key) + "'");
            return fallback.value_or(0.0);
        }
        const auto& v = j_.at(key);
        if (v.is_number())
            return v.get<double>();
        if (v.is_string()) {
            const auto s = v.get<std::string>();
            if (s == "inf")
                return INFINITY;
            if (s == "-inf")
                return -INFINITY;
        }
        errors_.push_back("key '" + path(key) + "' must be a number");
        return fallback.value_or(0.0);
    }

    std::size_t count(const char* key, std::size_t fallback) const
    {
        if (!has(key))
            return fallback;
        const auto& v = j_.at(key);
        if (!v.is_number_integer() || v.get<long long>() < 0) {
            errors_.push_back("key '" + path(key) + "' must be a non-negative integer");
            return fallback;
        }
        return v.get<std::size_t>();
    }

    bool boolean(const char* key, bool fallback) const
    {
        if (!has(key))
            return fallback;
        if (!j_.at(key).is_boolean()) {
            errors_.push_back("key '" + path(key) + "' must be true or false");
            return fallback;
        }
        return j_.at(key).get<bool>();
    }

    std::string text(const char* key, const std::string& fallback) const
    {
        if (!has(key))
            return fallback;
        if (!j_.at(key).is_string()) {
            errors_.push_back("key '" + path(key) + "' must be a string");
            return fallback;
        }
        return j_.at(key).get<std::string>();
    }

    std::optional<Reader> child(const char* key, bool required) const
    {
        if (!has(key)) {
            if (required)
                errors_.push_back("missing section '" + path(key) + "'");
            return std::nullopt;
        }
        if (!j_.at(key).is_object()) {
            errors_.push_back("'" + path(key) + "' must be an object");
            return std::nullopt;
        }
        return Reader(j_.at(key), path(key), errors_);
    }

    const json& raw() const { return j_; }
    std::string path(const char* key) const { return where_.empty() ? key : where_ + "." + key; }
    std::vector<std::string>& errors() const { return errors_; }

private:
    const json& j_;
    std::string where_;
    std::vector<std::string>& errors_;
};

json line_to_json(const LineModel& line)
{
    if (const auto* ts = std::get_if<TouchstoneLine>(&line)) {
        return {{"touchstone", ts->path},
                {"ir_len", ts->ir_len},
                {"f_center_hz", ts->band_center},
                {"bandwidth_hz", ts->band_width}};
    }
    const auto& d = std::get<DelayLineSpec>(line);
    json echoes = json::array();
    for (const auto& e : d.echoes)
        echoes.push_back({{"transit_multiple", e.transit_multiple}, {"level_db", e.level_db}});
    return {{"tau_s", d.tau},
            {"il_db", db_value(d.il_db)},
            {"f_center_hz", d.f_center},
            {"bandwidth_hz", d.bandwidth},
            {"band_order", d.band_order},
            {"port_return_db", db_value(d.port_return_db)},
            {"echoes", echoes}};
}

LineModel line_from_json(const Reader& r, const std::string& base_dir)
{
    if (r.has("touchstone")) {
        TouchstoneLine ts;
        ts.path = r.text("touchstone", "");
        ts.ir_len = r.count("ir_len", ts.ir_len);
        ts.band_center = r.number("f_center_hz", ts.band_center);
        ts.band_width = r.number("bandwidth_hz", ts.band_width);
        std::filesystem::path p(ts.path);
        if (p.is_relative())
            p = std::filesystem::path(base_dir) / p;
        try {
            ts.data = read_touchstone_file(p.string());
        } catch (const Error& e) {
            r.errors().push_back(r.path("touchstone") + ": " + e.what());
        }
        return ts;
    }
    DelayLineSpec d;
    d.tau = r.number("tau_s", std::nullopt);
    d.il_db = r.number("il_db", d.il_db);
    d.f_center = r.number("f_center_hz", d.f_center);
    d.bandwidth = r.number("bandwidth_hz", d.bandwidth);
    if (r.has("band_order")) {
        const auto& v = r.raw().at("band_order");
        if (v.is_number_integer())
            d.band_order = v.get<int>();
        else
            r.errors().push_back("key '" + r.path("band_order") + "' must be an integer");
    }
    d.port_return_db = r.number("port_return_db", d.port_return_db);
    if (r.has("echoes")) {
        const auto& arr = r.raw().at("echoes");
        if (!arr.is_array()) {
            r.errors().push_back("key '" + r.path("echoes") + "' must be an array");
        } else {
            for (std::size_t i = 0; i < arr.size(); ++i) {
                Reader e(arr[i], r.path("echoes") + "[" + std::to_string(i) + "]", r.errors());
                Echo echo;
                echo.transit_multiple = static_cast<int>(e.count("transit_multiple", 0));
                echo.level_db = e.number("level_db", std::nullopt);
                d.echoes.push_back(echo);
            }
        }
    }
    return d;
}

std::uint64_t fnv1a(const std::string& s)
{
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

} // namespace

double CirculatorConfig::band_center() const
{
    if (const auto* d = std::get_if<DelayLineSpec>(&line_a))
        return d->f_center;
    return std::get<TouchstoneLine>(line_a).band_center;
}

double CirculatorConfig::line_tau() const
{
    if (const auto* d = std::get_if<DelayLineSpec>(&line_a))
        return d->tau;
    // Tabulated lines carry no nominal delay; use the phase slope at the band centre.
    const auto& ts = std::get<TouchstoneLine>(line_a).data;
    std::size_t k = 0;
    while (k + 1 < ts.frequencies.size() && ts.frequencies[k + 1] < band_center())
        ++k;
    if (k + 1 >= ts.frequencies.size())
        return 0.0;
    double dphi = std::arg(ts.s[k + 1][1][0] / ts.s[k][1][0]);
    return -dphi / (2.0 * std::numbers::pi * (ts.frequencies[k + 1] - ts.frequencies[k]));
}

std::string config_to_json(const CirculatorConfig& c)
{
    json j;
    j["sample_rate_hz"] = c.sample_rate;
    j["line_a"] = line_to_json(c.line_a);
    j["line_b"] = line_to_json(c.line_b);
    j["switch"] = {{"il_on_db", db_value(c.switch_spec.il_on_db)},
                   {"iso_off_db", db_value(c.switch_spec.iso_off_db)},
                   {"t_transition_s", c.switch_spec.t_transition},
                   {"gamma_off", c.switch_spec.gamma_off}};
    j["schedule"] = {{"period_s", c.schedule.period},
                     {"duty", c.schedule.duty},
                     {"offset_fraction", c.schedule.offset_fraction},
                     {"frozen", c.schedule.frozen}};
    if (c.matching) {
        if (c.matching_z_load) {
            j["matching"] = {{"z_load_ohm", {c.matching_z_load->real(), c.matching_z_load->imag()}},
                             {"z0_ohm", c.matching->z0}};
        } else {
            j["matching"] = {{"series_l_h", c.matching->series_l},
                             {"shunt_c_f", c.matching->shunt_c},
                             {"orientation", c.matching->orientation == MatchOrientation::l_toward_line
                                                 ? "L-toward-line"
                                                 : "L-toward-port"},
                             {"z0_ohm", c.matching->z0}};
        }
    }
    const auto& a = c.analysis;
    j["analysis"] = {{"f_start_hz", a.f_start},
                     {"f_stop_hz", a.f_stop},
                     {"points", a.points},
                     {"settle_periods", a.settle_periods},
                     {"measure_periods", a.measure_periods},
                     {"drive_dbm", a.drive_dbm},
                     {"iso_threshold_db", a.iso_threshold_db},
                     {"sidebands", a.sidebands},
                     {"spectrum_f0_hz", a.spectrum_f0},
                     {"spectrum_periods", a.spectrum_periods},
                     {"fmod_start_hz", a.fmod_start},
                     {"fmod_stop_hz", a.fmod_stop},
                     {"fmod_points", a.fmod_points}};
    return j.dump(2) + "\n";
}

CirculatorConfig config_from_json(const std::string& text, const std::string& base_dir)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError({std::string("malformed JSON: ") + e.what()});
    }
    if (!j.is_object())
        throw ConfigError({"top level must be an object"});

    std::vector<std::string> errors;
    Reader root(j, "", errors);
    CirculatorConfig c;
    c.sample_rate = root.number("sample_rate_hz", std::nullopt);
    if (auto r = root.child("line_a", true))
        c.line_a = line_from_json(*r, base_dir);
    if (auto r = root.child("line_b", true))
        c.line_b = line_from_json(*r, base_dir);
    if (auto r = root.child("switch", true)) {
        c.switch_spec.il_on_db = r->number("il_on_db", c.switch_spec.il_on_db);
        c.switch_spec.iso_off_db = r->number("iso_off_db", c.switch_spec.iso_off_db);
        c.switch_spec.t_transition = r->number("t_transition_s", c.switch_spec.t_transition);
        c.switch_spec.gamma_off = r->number("gamma_off", c.switch_spec.gamma_off);
    }
    if (auto r = root.child("schedule", true)) {
        c.schedule.period = r->number("period_s", std::nullopt);
        c.schedule.duty = r->number("duty", c.schedule.duty);
        c.schedule.offset_fraction = r->number("offset_fraction", c.schedule.offset_fraction);
        c.schedule.frozen = r->boolean("frozen", c.schedule.frozen);
    }
    if (auto r = root.child("matching", false)) {
        MatchSpec m;
        m.z0 = r->number("z0_ohm", 50.0);
        if (r->has("z_load_ohm")) {
            const auto& z = r->raw().at("z_load_ohm");
            if (!z.is_array() || z.size() != 2 || !z[0].is_number() || !z[1].is_number()) {
                errors.push_back("key 'matching.z_load_ohm' must be [re, im]");
            } else {
                const std::complex<double> zl{z[0].get<double>(), z[1].get<double>()};
                c.matching_z_load = zl;
                try {
                    m = synth_lmatch(zl, m.z0, c.band_center());
                } catch (const Error& e) {
                    errors.push_back(std::string("matching: ") + e.what());
                }
            }
        } else {
            m.series_l = r->number("series_l_h", std::nullopt);
            m.shunt_c = r->number("shunt_c_f", std::nullopt);
            const auto o = r->text("orientation", "L-toward-line");
            if (o == "L-toward-line")
                m.orientation = MatchOrientation::l_toward_line;
            else if (o == "L-toward-port")
                m.orientation = MatchOrientation::l_toward_port;
            else
                errors.push_back("key 'matching.orientation' must be L-toward-line or L-toward-port");
        }
        c.matching = m;
    }
    if (auto r = root.child("analysis", false)) {
        auto& a = c.analysis;
        a.f_start = r->number("f_start_hz", a.f_start);
        a.f_stop = r->number("f_stop_hz", a.f_stop);
        a.points = r->count("points", a.points);
        a.settle_periods = r->count("settle_periods", a.settle_periods);
        a.measure_periods = r->count("measure_periods", a.measure_periods);
        a.drive_dbm = r->number("drive_dbm", a.drive_dbm);
        a.iso_threshold_db = r->number("iso_threshold_db", a.iso_threshold_db);
        a.sidebands = r->count("sidebands", a.sidebands);
        a.spectrum_f0 = r->number("spectrum_f0_hz", a.spectrum_f0);
        a.spectrum_periods = r->count("spectrum_periods", a.spectrum_periods);
        a.fmod_start = r->number("fmod_start_hz", a.fmod_start);
        a.fmod_stop = r->number("fmod_stop_hz", a.fmod_stop);
        a.fmod_points = r->count("fmod_points", a.fmod_points);
    }

    if (errors.empty()) {
        auto more = config_violations(c);
        errors.insert(errors.end(), more.begin(), more.end());
    }
    if (!errors.empty())
        throw ConfigError(std::move(errors));
    return c;
}

std::vector<std::string> config_violations(const CirculatorConfig& c)
{
    std::vector<std::string> v;
    if (!(c.sample_rate > 0.0)) {
        v.push_back("sample_rate_hz must be positive");
        return v;
    }
    auto check_line = [&](const LineModel& line, const char* name) {
        double fc = 0.0, bw = 0.0;
        if (const auto* d = std::get_if<DelayLineSpec>(&line)) {
            fc = d->f_center;
            bw = d->band_order > 0 ? d->bandwidth : 0.0;
            try {
                DelayLine probe(*d, c.sample_rate);
            } catch (const Error& e) {
                v.push_back(std::string(name) + ": " + e.what());
            }
        } else {
            const auto& ts = std::get<TouchstoneLine>(line);
            fc = ts.band_center;
            bw = ts.band_width;
            if (ts.ir_len == 0)
                v.push_back(std::string(name) + ": ir_len must be positive");
            if (!ts.data.frequencies.empty()
                && (ts.data.frequencies.front() > fc - bw / 2 || ts.data.frequencies.back() < fc + bw / 2))
                v.push_back(std::string(name) + ": Touchstone data does not cover the simulation band");
        }
        if (c.sample_rate < 2.0 * fc)
            v.push_back(std::string(name) + ": Nyquist violation, sample_rate below 2 x f_center");
        else if (fc + bw / 2.0 >= c.sample_rate / 2.0)
            v.push_back(std::string(name) + ": band edge beyond Nyquist");
    };
    check_line(c.line_a, "line_a");
    check_line(c.line_b, "line_b");

    try {
        Crossbar probe(c.switch_spec);
    } catch (const Error& e) {
        v.push_back(e.what());
    }
    try {
        if (!c.schedule.frozen)
            build_schedule(c.schedule.period, c.switch_spec.t_transition, c.schedule.duty, c.sample_rate,
                           c.schedule.offset_fraction);
        else
            frozen_schedule(c.schedule.period, c.sample_rate);
    } catch (const Error& e) {
        v.push_back(e.what());
    }
    if (c.matching) {
        try {
            MatchingNetwork probe(*c.matching, c.sample_rate, c.band_center());
        } catch (const Error& e) {
            v.push_back(e.what());
        }
    }
    const auto& a = c.analysis;
    if (!(a.f_start > 0.0 && a.f_stop >= a.f_start && a.f_stop < c.sample_rate / 2.0))
        v.push_back("analysis: need 0 < f_start_hz <= f_stop_hz < sample_rate/2");
    if (a.points == 0)
        v.push_back("analysis: points must be positive");
    if (a.measure_periods == 0)
        v.push_back("analysis: measure_periods must be positive");
    if (!(a.spectrum_f0 > 0.0 && a.spectrum_f0 < c.sample_rate / 2.0))
        v.push_back("analysis: spectrum_f0_hz outside the Nyquist band");
    if (!(a.fmod_start > 0.0 && a.fmod_stop >= a.fmod_start))
        v.push_back("analysis: need 0 < fmod_start_hz <= fmod_stop_hz");
    return v;
}

std::vector<std::string> config_warnings(const CirculatorConfig& c)
{
    std::vector<std::string> w;
    auto collect = [&](const LineModel& line, const char* name) {
        if (const auto* d = std::get_if<DelayLineSpec>(&line)) {
            DelayLine probe(*d, c.sample_rate);
            for (const auto& s : probe.warnings())
                w.push_back(std::string(name) + ": " + s);
        } else {
            const auto& ts = std::get<TouchstoneLine>(line);
            TouchstoneImportOptions o{c.sample_rate, ts.ir_len, ts.band_center, ts.band_width};
            FirTwoPort probe(ts.data, o);
            for (const auto& s : probe.warnings())
                w.push_back(std::string(name) + ": " + s);
        }
    };
    collect(c.line_a, "line_a");
    collect(c.line_b, "line_b");
    if (!c.schedule.frozen) {
        const auto s = build_schedule(c.schedule.period, c.switch_spec.t_transition, c.schedule.duty,
                                      c.sample_rate, c.schedule.offset_fraction);
        // Each traversal crosses two links, four with matching sections.
        const double links = c.matching ? 4.0 : 2.0;
        const auto report = validate_schedule(s, c.line_tau(), links / c.sample_rate);
        if (report.isolation_degradation || std::abs(report.period_residue) > 1e-9)
            for (const auto& n : report.notes)
                w.push_back("schedule: " + n);
    }
    return w;
}

std::string config_digest(const CirculatorConfig& config)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(config_to_json(config))));
    return buf;
}

CirculatorConfig load_config(const std::string& path, std::vector<std::string>* warnings)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError({"cannot read config file '" + path + "'"});
    std::ostringstream ss;
    ss << in.rdbuf();
    const auto base = std::filesystem::path(path).parent_path().string();
    auto c = config_from_json(ss.str(), base.empty() ? "." : base);
    if (warnings) {
        auto w = config_warnings(c);
        warnings->insert(warnings->end(), w.begin(), w.end());
    }
    return c;
}

CirculatorConfig paper_config()
{
    CirculatorConfig c;
    c.sample_rate = 4e9;
    DelayLineSpec line;
    line.tau = 280e-9;
    line.il_db = 4.0;
    line.f_center = 155e6;
    line.bandwidth = 30e6;
    line.band_order = 2;
    line.port_return_db = 20.0;
    line.echoes = {{2, -20.2}, {3, -46.0}};
    c.line_a = line;
    c.line_b = line;
    c.switch_spec = SwitchSpec{0.8, 32.0, 2e-9, 0.9};
    c.schedule.period = 1.14e-6;
    return c;
}

CirculatorConfig ideal_config()
{
    CirculatorConfig c;
    c.sample_rate = 4e9;
    DelayLineSpec line;
    line.tau = 280e-9;
    line.il_db = 0.0;
    line.band_order = 0;
    line.port_return_db = kInfiniteDb;
    c.line_a = line;
    c.line_b = line;
    c.switch_spec = SwitchSpec{0.0, kInfiniteDb, 0.0, 0.9};
    // 1120-sample transit plus two one-sample links.
    c.schedule.period = 4.0 * 1122.0 / c.sample_rate;
    return c;
}

} // namespace sdl

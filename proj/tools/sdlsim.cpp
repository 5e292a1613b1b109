// sdlsim: batch front-end for the switched-delay-line circulator model.

#include "sdl/analysis.hpp"
#include "sdl/config.hpp"
#include "sdl/engine.hpp"
#include "sdl/errors.hpp"
#include "sdl/io.hpp"
#include "sdl/schedule.hpp"
#include "sdl/signal.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <tuple>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace sdl;

namespace {

enum Exit { ok = 0, config_error = 1, runtime_error = 2 };

struct Options {
    std::string config_path;
    std::string out_dir = ".";
    std::optional<double> freq_start, freq_stop;
    std::optional<std::size_t> freq_points;
    std::optional<double> fmod;
    std::optional<double> fmod_start, fmod_stop;
    std::optional<std::size_t> fmod_points;
    std::optional<double> threshold_db;
    std::optional<double> il_window_db;
    std::optional<double> drive_dbm;
    std::optional<double> f0;
    std::optional<std::size_t> sidebands;
    std::optional<std::size_t> window_periods;
    std::size_t periods = 2;
    int port = 1;
    std::string stimulus = "burst";
    std::size_t threads = 0;
    bool svg = true;
};

class OutputError : public Error {
public:
    using Error::Error;
};

void write_file(const fs::path& path, const std::string& text)
{
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw OutputError("cannot write " + path.string());
    f << text;
    if (!f)
        throw OutputError("write failed for " + path.string());
    std::cout << "wrote " << path.string() << "\n";
}

double db(std::complex<double> v) { return 20.0 * std::log10(std::abs(v)); }

std::vector<double> sweep_frequencies(const CirculatorConfig& c, const Options& o)
{
    return linspace(o.freq_start.value_or(c.analysis.f_start), o.freq_stop.value_or(c.analysis.f_stop),
                    o.freq_points.value_or(c.analysis.points));
}

SweepOptions sweep_options(const CirculatorConfig& c, const Options& o)
{
    SweepOptions s;
    s.settle_periods = c.analysis.settle_periods;
    s.measure_periods = c.analysis.measure_periods;
    s.drive_dbm = o.drive_dbm.value_or(c.analysis.drive_dbm);
    s.threads = o.threads;
    return s;
}

std::string describe(const std::string& command, const std::vector<std::string>& warnings)
{
    std::string d = "command " + command;
    for (const auto& w : warnings)
        d += "\nconfig warning: " + w;
    return d;
}

int cmd_sweep(const CirculatorConfig& c, const Options& o, const std::string& header, const fs::path& out)
{
    const auto grid = sparams_sweep(c, sweep_frequencies(c, o), sweep_options(c, o));
    for (const auto& w : grid.warnings)
        std::cerr << "warning: " << w << "\n";
    const auto m = metrics(grid, o.threshold_db.value_or(c.analysis.iso_threshold_db), o.il_window_db);
    write_file(out / "sweep.csv", sweep_csv(grid, header));
    write_file(out / "metrics.csv", metrics_csv(m, header));
    std::printf("IL %.2f dB  worst isolation %.2f dB  bandwidth %.3f MHz (fbw %.4f)  best contrast %.2f dB\n",
                *std::max_element(m.il_db.begin(), m.il_db.end()), m.worst_iso_db, m.bandwidth / 1e6, m.fbw,
                m.best_directivity_db);
    if (o.svg) {
        Plot p{"Circulator S-parameters", "frequency (MHz)", "|S| (dB)", {}, false};
        std::vector<double> mhz;
        for (double f : grid.frequencies)
            mhz.push_back(f / 1e6);
        auto add = [&](int out_port, int in_port) {
            PlotSeries s{"S" + std::to_string(out_port) + std::to_string(in_port), mhz, {}};
            for (std::size_t k = 0; k < grid.size(); ++k)
                s.y.push_back(db(grid.at(k, static_cast<std::size_t>(out_port), static_cast<std::size_t>(in_port))));
            p.series.push_back(std::move(s));
        };
        for (auto [a, b] : kForwardPaths)
            add(a, b);
        for (auto [a, b] : kReversePaths)
            add(a, b);
        write_file(out / "sweep.svg", render_svg(p));
    }
    return ok;
}

int cmd_spectrum(const CirculatorConfig& c, const Options& o, const std::string& header, const fs::path& out)
{
    const auto r = spectrum_probe(c, o.f0.value_or(c.analysis.spectrum_f0), o.drive_dbm.value_or(c.analysis.drive_dbm),
                                  o.window_periods.value_or(c.analysis.spectrum_periods),
                                  o.sidebands.value_or(c.analysis.sidebands), c.analysis.settle_periods);
    write_file(out / "spectrum.csv", spectrum_csv(r, header));
    std::printf("port 2 IL %.2f dB  port 3 isolation %.2f dB  port 4 isolation %.2f dB\n", r.il_port2_db,
                r.iso_port3_db, r.iso_port4_db);
    if (o.svg) {
        Plot p{"Spectral lines, single tone into port 1", "offset from f0 (MHz)", "power (dBm)", {}, true};
        for (const auto& ps : r.ports) {
            PlotSeries s{ps.port == 1 ? std::string("port 1 (input)") : "port " + std::to_string(ps.port), {}, {}};
            for (const auto& l : ps.lines) {
                // Small per-port offset keeps coincident stems apart.
                s.x.push_back((l.frequency - r.f0) / 1e6 + 0.04 * (ps.port - 2.5));
                s.y.push_back(l.power_dbm);
            }
            p.series.push_back(std::move(s));
        }
        write_file(out / "spectrum.svg", render_svg(p));
    }
    return ok;
}

int cmd_modsweep(const CirculatorConfig& c, const Options& o, const std::string& header, const fs::path& out)
{
    std::vector<double> values;
    if (o.fmod)
        values = {*o.fmod};
    else
        values = linspace(o.fmod_start.value_or(c.analysis.fmod_start), o.fmod_stop.value_or(c.analysis.fmod_stop),
                          o.fmod_points.value_or(c.analysis.fmod_points));
    const auto pts = modfreq_sweep(c, values, o.f0.value_or(c.analysis.spectrum_f0), sweep_options(c, o));
    write_file(out / "modsweep.csv", modsweep_csv(pts, header));
    bool any_error = false;
    for (const auto& p : pts)
        if (!p.ok) {
            any_error = true;
            std::cerr << "f_mod " << p.requested_f_mod << " Hz: " << p.error << "\n";
        }
    if (auto best = modfreq_optimum(pts))
        std::printf("isolation optimum %.2f dB at f_mod %.4f kHz\n", pts[*best].iso_db, pts[*best].f_mod / 1e3);
    if (o.svg) {
        Plot p{"Modulation-frequency sweep", "f_mod (kHz)", "dB", {}, false};
        PlotSeries il{"insertion loss", {}, {}}, iso{"isolation", {}, {}};
        for (const auto& pt : pts)
            if (pt.ok) {
                il.x.push_back(pt.f_mod / 1e3);
                il.y.push_back(pt.il_db);
                iso.x.push_back(pt.f_mod / 1e3);
                iso.y.push_back(pt.iso_db);
            }
        p.series = {il, iso};
        write_file(out / "modsweep.svg", render_svg(p));
    }
    return any_error ? runtime_error : ok;
}

int cmd_linecheck(const CirculatorConfig& c, const Options& o, const std::string& header, const fs::path& out)
{
    const auto lc = linecheck(c, sweep_frequencies(c, o), o.threads);
    for (const auto* d : {&lc.delay_a, &lc.delay_b})
        for (const auto& w : d->warnings)
            std::cerr << "warning: " << w << "\n";
    write_file(out / "linecheck.csv", linecheck_csv(lc, header));
    const std::size_t mid = lc.line_a.size() / 2;
    std::printf("line A: |S21| %.2f dB, group delay %.3f ns at %.4f MHz\n", db(lc.line_a.at(mid, 2, 1)),
                lc.delay_a.points[mid].delay * 1e9, lc.line_a.frequencies[mid] / 1e6);
    if (o.svg) {
        std::vector<double> mhz;
        for (double f : lc.line_a.frequencies)
            mhz.push_back(f / 1e6);
        Plot p{"Delay lines", "frequency (MHz)", "|S| (dB)", {}, false};
        Plot d{"Delay-line group delay", "frequency (MHz)", "group delay (ns)", {}, false};
        for (auto [g, gd, name] : {std::tuple{&lc.line_a, &lc.delay_a, "A"}, {&lc.line_b, &lc.delay_b, "B"}}) {
            PlotSeries s21{std::string(name) + " S21", mhz, {}}, s11{std::string(name) + " S11", mhz, {}};
            PlotSeries t{std::string(name), mhz, {}};
            for (std::size_t k = 0; k < g->size(); ++k) {
                s21.y.push_back(db(g->at(k, 2, 1)));
                s11.y.push_back(db(g->at(k, 1, 1)));
                t.y.push_back(gd->points[k].delay * 1e9);
            }
            p.series.push_back(std::move(s21));
            p.series.push_back(std::move(s11));
            d.series.push_back(std::move(t));
        }
        write_file(out / "linecheck.svg", render_svg(p));
        write_file(out / "linecheck_delay.svg", render_svg(d));
    }
    return ok;
}

int cmd_schedule(const CirculatorConfig& c, const Options& o, std::string header, const fs::path& out)
{
    const auto s = schedule_from_config(c);
    const double links = c.matching ? 4.0 : 2.0;
    const auto report = validate_schedule(s, c.line_tau(), links * kLinkLatencySamples / c.sample_rate);
    for (const auto& n : report.notes)
        header += "# " + n + "\n";
    const std::size_t n = o.periods * s.period_samples;
    write_file(out / "schedule.csv", schedule_csv(s, n, header));
    std::printf("period %.6g s (%zu samples), switching frequency %.4f kHz, delta %.6g s\n", s.period,
                s.period_samples, s.switching_frequency() / 1e3, s.delta);
    if (o.svg) {
        Plot p{"Switch control signals", "time (us)", "conduction", {}, false};
        const char* names[4] = {"c1 left bar", "c2 left cross", "c3 right bar", "c4 right cross"};
        for (int k = 0; k < 4; ++k) {
            PlotSeries ser{names[k], {}, {}};
            const std::size_t step = std::max<std::size_t>(1, n / 4000);
            for (std::size_t i = 0; i < n; i += step) {
                const double g = bar_fraction(s, k < 2 ? Side::left : Side::right, static_cast<std::int64_t>(i));
                const double on = std::pow(std::sin(std::numbers::pi * g / 2.0), 2);
                ser.x.push_back(static_cast<double>(i) / c.sample_rate * 1e6);
                // Stacked so the four traces stay readable.
                ser.y.push_back((k % 2 == 0 ? on : 1.0 - on) + 1.5 * (3 - k));
            }
            p.series.push_back(std::move(ser));
        }
        write_file(out / "schedule.svg", render_svg(p));
    }
    return ok;
}

int cmd_run(const CirculatorConfig& c, const Options& o, const std::string& header, const fs::path& out)
{
    if (o.port < 1 || o.port > 4)
        throw RangeError("--port must be 1..4");
    auto net = build_circulator(c);
    const std::size_t n = o.periods * net.schedule().period_samples;
    const double f0 = o.f0.value_or(c.analysis.spectrum_f0);
    const double a = dbm_to_wave(o.drive_dbm.value_or(c.analysis.drive_dbm));
    std::array<SampleBuffer, 4> stim;
    for (auto& b : stim)
        b.sample_rate = c.sample_rate;
    auto& drive = stim[static_cast<std::size_t>(o.port - 1)];
    if (o.stimulus == "tone")
        drive = make_tone(f0, a, 0.0, n, c.sample_rate);
    else {
        // Burst centred in the first bar interval of the driven side.
        const auto& s = net.schedule();
        const double bar = static_cast<double>(s.bar_samples) / c.sample_rate;
        const bool right = o.port == 2 || o.port == 4;
        const double start = (right ? s.delta : 0.0) + 0.25 * bar;
        drive = make_burst(f0, a, start, 10e-9, 0.5 * bar - 20e-9, c.sample_rate);
        if (drive.size() > n)
            drive.samples.resize(n);
    }
    const auto rec = run(net, stim, n);
    write_file(out / "run.csv", run_record_csv(rec, header));
    double e_in = 0.0, e_out = 0.0;
    for (std::size_t k = 0; k < 4; ++k) {
        e_in += rec.incident[k].energy();
        e_out += rec.emitted[k].energy();
    }
    std::printf("%zu samples; emitted/incident energy %.6f\n", n, e_in > 0 ? e_out / e_in : 0.0);
    if (o.svg) {
        Plot p{"Time-domain record", "time (us)", "wave (sqrt W)", {}, false};
        const std::size_t step = std::max<std::size_t>(1, n / 6000);
        PlotSeries in{"port " + std::to_string(o.port) + " in", {}, {}};
        for (std::size_t i = 0; i < n; i += step) {
            in.x.push_back(static_cast<double>(i) / c.sample_rate * 1e6);
            in.y.push_back(rec.incident[static_cast<std::size_t>(o.port - 1)].samples[i]);
        }
        p.series.push_back(std::move(in));
        for (int k = 1; k <= 4; ++k) {
            PlotSeries s{"port " + std::to_string(k) + " out", {}, {}};
            for (std::size_t i = 0; i < n; i += step) {
                s.x.push_back(static_cast<double>(i) / c.sample_rate * 1e6);
                s.y.push_back(rec.emitted[static_cast<std::size_t>(k - 1)].samples[i]);
            }
            p.series.push_back(std::move(s));
        }
        write_file(out / "run.svg", render_svg(p));
    }
    return ok;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Switched delay-line circulator simulator"};
    app.require_subcommand(1);
    Options o;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config_path, "configuration file")->required();
        sub->add_option("--out", o.out_dir, "output directory (created if missing)");
        sub->add_option("--fmod", o.fmod, "switching frequency override, Hz");
        sub->add_option("--threads", o.threads, "worker threads (default: SDLSIM_THREADS or all cores)");
        sub->add_flag("!--no-svg", o.svg, "skip SVG plots");
        sub->add_option("--drive-dbm", o.drive_dbm, "stimulus level, dBm");
    };
    auto freq = [&](CLI::App* sub) {
        sub->add_option("--freq-start", o.freq_start, "first frequency, Hz");
        sub->add_option("--freq-stop", o.freq_stop, "last frequency, Hz");
        sub->add_option("--freq-points", o.freq_points, "number of frequencies");
    };

    auto* sweep = app.add_subcommand("sweep", "S-parameter grid and circulator metrics");
    common(sweep);
    freq(sweep);
    sweep->add_option("--threshold-db", o.threshold_db, "isolation threshold for the bandwidth");
    sweep->add_option("--il-window-db", o.il_window_db,
                      "also bound the band to forward loss within this many dB of its best");

    auto* spectrum = app.add_subcommand("spectrum", "spectral lines for a single tone into port 1");
    common(spectrum);
    spectrum->add_option("--f0", o.f0, "tone frequency, Hz");
    spectrum->add_option("--sidebands", o.sidebands, "sidebands per side");
    spectrum->add_option("--window-periods", o.window_periods, "analysis window in schedule periods");

    auto* modsweep = app.add_subcommand("modsweep", "isolation versus switching frequency");
    common(modsweep);
    modsweep->add_option("--f0", o.f0, "test frequency, Hz");
    modsweep->add_option("--fmod-start", o.fmod_start, "first switching frequency, Hz");
    modsweep->add_option("--fmod-stop", o.fmod_stop, "last switching frequency, Hz");
    modsweep->add_option("--fmod-points", o.fmod_points, "number of switching frequencies");

    auto* linechk = app.add_subcommand("linecheck", "delay lines alone: S-parameters and group delay");
    common(linechk);
    freq(linechk);

    auto* sched = app.add_subcommand("schedule", "switch control traces");
    common(sched);
    sched->add_option("--periods", o.periods, "periods to emit");

    auto* runc = app.add_subcommand("run", "raw time-domain record");
    common(runc);
    runc->add_option("--periods", o.periods, "periods to simulate");
    runc->add_option("--port", o.port, "driven port 1..4");
    runc->add_option("--f0", o.f0, "carrier frequency, Hz");
    runc->add_option("--stimulus", o.stimulus, "burst or tone")->check(CLI::IsMember({"burst", "tone"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : config_error;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        std::vector<std::string> warnings;
        CirculatorConfig config;
        try {
            config = load_config(o.config_path, &warnings);
            if (o.fmod) {
                if (!(*o.fmod > 0.0))
                    throw ConfigError({"--fmod must be positive"});
                if (command != "modsweep")
                    config.schedule.period = nearest_valid_period(1.0 / *o.fmod, config.sample_rate);
            }
            if (auto v = config_violations(config); !v.empty())
                throw ConfigError(v);
        } catch (const Error& e) {
            std::cerr << "error: " << e.what() << "\n";
            return config_error;
        }
        for (const auto& w : warnings)
            std::cerr << "warning: " << w << "\n";

        const fs::path out(o.out_dir);
        std::error_code ec;
        fs::create_directories(out, ec);
        if (ec || !fs::is_directory(out)) {
            std::cerr << "error: cannot create output directory " << out.string() << "\n";
            return runtime_error;
        }
        const std::string header = file_header(config_digest(config), describe(command, warnings));

        if (command == "sweep")
            return cmd_sweep(config, o, header, out);
        if (command == "spectrum")
            return cmd_spectrum(config, o, header, out);
        if (command == "modsweep")
            return cmd_modsweep(config, o, header, out);
        if (command == "linecheck")
            return cmd_linecheck(config, o, header, out);
        if (command == "schedule")
            return cmd_schedule(config, o, header, out);
        return cmd_run(config, o, header, out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return runtime_error;
    }
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sdl/analysis.hpp"
#include "sdl/engine.hpp"
#include "sdl/errors.hpp"
#include "sdl/signal.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

using namespace sdl;
using doctest::Approx;

namespace {

constexpr double pi = std::numbers::pi;

double db(std::complex<double> s)
{
    return -20.0 * std::log10(std::abs(s));
}

SParamGrid pure_delay(double delay, double f0, double f1, std::size_t n)
{
    auto g = SParamGrid::zeros(2, linspace(f0, f1, n));
    for (std::size_t k = 0; k < g.size(); ++k)
        g.at(k, 2, 1) = std::polar(0.7, -2 * pi * g.frequencies[k] * delay);
    return g;
}

// Paper-like line with its group delay shifted so that delta - tau = mismatch.
CirculatorConfig mismatched(double mismatch, double t_transition)
{
    auto c = paper_config();
    c.switch_spec.t_transition = t_transition;
    const double target = 1.14e-6 / 4 - 2.0 / c.sample_rate - mismatch;
    for (auto* l : {&c.line_a, &c.line_b})
        std::get<DelayLineSpec>(*l).tau = target;
    return c;
}

} // namespace

TEST_CASE("group delay of a pure delay")
{
    const auto r = group_delay(pure_delay(1120 / 4e9, 150e6, 160e6, 21), 2, 1, 280e-9);
    CHECK_FALSE(r.aliasing);
    REQUIRE(r.points.size() == 21);
    for (const auto& p : r.points)
        CHECK(std::abs(p.delay - 280e-9) < 0.1e-9);
}

TEST_CASE("coarse grids flag aliasing")
{
    // 1 / (2 * 280 ns) = 1.79 MHz
    for (double step : {1.8e6, 2.0e6, 3.0e6}) {
        CAPTURE(step);
        const auto r = group_delay(pure_delay(280e-9, 150e6, 150e6 + 10 * step, 11), 2, 1, 280e-9);
        CHECK(r.aliasing);
        CHECK_FALSE(r.warnings.empty());
    }
    const auto fine = group_delay(pure_delay(280e-9, 150e6, 160e6, 11), 2, 1, 280e-9);
    CHECK_FALSE(fine.aliasing);
    // Without a hint the wrapped phase step itself gives the grid away.
    CHECK(group_delay(pure_delay(280e-9, 150e6, 170e6, 11), 2, 1).aliasing);
}

TEST_CASE("group delay needs two points")
{
    CHECK_THROWS_AS(group_delay(pure_delay(1e-7, 1e8, 1e8, 1), 2, 1), RangeError);
}

TEST_CASE("metrics on a hand-computable grid")
{
    auto g = SParamGrid::zeros(4, linspace(150e6, 160e6, 11));
    for (std::size_t k = 0; k < g.size(); ++k) {
        for (std::size_t i = 0; i < 4; ++i) {
            const auto [fo, fi] = kForwardPaths[i];
            const auto [ro, ri] = kReversePaths[i];
            g.at(k, fo, fi) = 0.5;
            g.at(k, ro, ri) = 0.05;
            g.at(k, i + 1, i + 1) = 0.1;
        }
    }
    const auto m = metrics(g, 20.0);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(m.il_db[i] == Approx(6.0206).epsilon(1e-4));
        CHECK(m.iso_db[i] == Approx(26.0206).epsilon(1e-4));
        CHECK(m.directivity_db[i] == Approx(20.0).epsilon(1e-12));
        CHECK(m.rl_db[i] == Approx(20.0).epsilon(1e-12));
    }
    CHECK(m.bandwidth == Approx(10e6));
    CHECK(m.center_frequency == Approx(155e6));
    CHECK(m.fbw == Approx(10.0 / 155.0));
    CHECK(m.worst_iso_db == Approx(26.0206).epsilon(1e-4));
}

TEST_CASE("metrics of identity matrices")
{
    auto g = SParamGrid::zeros(4, linspace(150e6, 160e6, 5));
    for (std::size_t k = 0; k < g.size(); ++k)
        for (std::size_t p = 1; p <= 4; ++p)
            g.at(k, p, p) = 1.0;
    const auto m = metrics(g, 27.0);
    for (double il : m.il_db)
        CHECK(std::isinf(il));
    CHECK(m.bandwidth == 0.0);
    CHECK_FALSE(m.flags.empty());
}

TEST_CASE("bandwidth is the widest contiguous qualifying run")
{
    auto g = SParamGrid::zeros(4, linspace(100e6, 200e6, 11));
    for (std::size_t k = 0; k < g.size(); ++k)
        for (std::size_t i = 0; i < 4; ++i) {
            const auto [fo, fi] = kForwardPaths[i];
            const auto [ro, ri] = kReversePaths[i];
            g.at(k, fo, fi) = 0.5;
            // qualifying at k = 1..2 and k = 5..8
            const bool good = (k >= 1 && k <= 2) || (k >= 5 && k <= 8);
            g.at(k, ro, ri) = good ? 0.01 : 0.1;
        }
    const auto m = metrics(g, 27.0);
    CHECK(m.band_start == Approx(150e6));
    CHECK(m.band_stop == Approx(180e6));
    CHECK(m.bandwidth == Approx(30e6));
    CHECK(m.worst_iso_db == Approx(40.0));
}

TEST_CASE("S-parameters do not depend on drive level")
{
    const auto c = paper_config();
    const auto f = linspace(150e6, 160e6, 3);
    SweepOptions lo, hi;
    lo.drive_dbm = -10.0;
    hi.drive_dbm = 0.0;
    const auto a = sparams_sweep(c, f, lo);
    const auto b = sparams_sweep(c, f, hi);
    double worst = 0;
    for (std::size_t k = 0; k < a.size(); ++k)
        for (std::size_t o = 1; o <= 4; ++o)
            for (std::size_t i = 1; i <= 4; ++i)
                worst = std::max(worst, std::abs(a.at(k, o, i) - b.at(k, o, i)) / std::abs(a.at(k, o, i)));
    CHECK(worst <= 1e-9);
}

TEST_CASE("ideal circulator S-parameters")
{
    const auto g = sparams_sweep(ideal_config(), {155e6});
    for (std::size_t i = 0; i < 4; ++i) {
        const auto [fo, fi] = kForwardPaths[i];
        const auto [ro, ri] = kReversePaths[i];
        CHECK(std::abs(g.at(0, fo, fi)) == Approx(1.0).epsilon(0.01));
        CHECK(std::abs(g.at(0, ro, ri)) <= 1e-3);
    }
    CHECK(g.frequencies[0] != g.requested_frequencies[0]);
    CHECK(std::abs(g.frequencies[0] - 155e6) <= 4e9 / (2.0 * 10 * 4488));
}

TEST_CASE("zero side offset restores reciprocity")
{
    auto c = paper_config();
    c.schedule.offset_fraction = 0.0;
    const auto g = sparams_sweep(c, linspace(150e6, 160e6, 5));
    double worst = 0;
    for (std::size_t k = 0; k < g.size(); ++k)
        for (std::size_t o = 1; o <= 4; ++o)
            for (std::size_t i = 1; i <= 4; ++i)
                worst = std::max(worst, std::abs(g.at(k, o, i) - g.at(k, i, o)));
    CHECK(worst <= 0.01);
    // while the staggered schedule is strongly non-reciprocal
    const auto p = sparams_sweep(paper_config(), {155e6});
    CHECK(std::abs(p.at(0, 2, 1) - p.at(0, 1, 2)) > 0.3);
}

TEST_CASE("static switches give a reciprocal network")
{
    const auto c = paper_config();
    const auto g = sparams_sweep(c, frozen_schedule(c.schedule.period, c.sample_rate), {152e6, 155e6});
    for (std::size_t k = 0; k < g.size(); ++k)
        for (std::size_t o = 1; o <= 4; ++o)
            for (std::size_t i = 1; i <= 4; ++i)
                CHECK(std::abs(g.at(k, o, i) - g.at(k, i, o)) < 1e-9);
    const auto pts = modfreq_sweep(c, {0.0}, 155e6);
    REQUIRE(pts.size() == 1);
    REQUIRE(pts[0].ok);
    CHECK(pts[0].f_mod == 0.0);
    // Each through path is matched by an equally strong reverse path: no contrast left.
    CHECK(pts[0].iso_db == Approx(db(g.at(1, 2, 1))).epsilon(1e-6));
}

TEST_CASE("calibrated config is symmetric across ports")
{
    const auto g = sparams_sweep(paper_config(), {155e6});
    double il_lo = 1e9, il_hi = -1e9, iso_lo = 1e9, iso_hi = -1e9;
    for (std::size_t i = 0; i < 4; ++i) {
        const double il = db(g.at(0, kForwardPaths[i].first, kForwardPaths[i].second));
        const double iso = db(g.at(0, kReversePaths[i].first, kReversePaths[i].second));
        il_lo = std::min(il_lo, il);
        il_hi = std::max(il_hi, il);
        iso_lo = std::min(iso_lo, iso);
        iso_hi = std::max(iso_hi, iso);
    }
    CHECK(il_hi - il_lo <= 0.2);
    CHECK(iso_hi - iso_lo <= 2.0);
}

TEST_CASE("single-tone output only holds lines at f0 + k f_mod")
{
    const auto c = paper_config();
    auto net = build_circulator(c);
    const auto p = net.schedule().period_samples;
    const std::size_t w = 16 * p, settle = 30 * p;
    // f0 on the window's bin grid
    const double bin = c.sample_rate / static_cast<double>(w);
    const auto b0 = static_cast<std::size_t>(std::llround(155e6 / bin));
    std::array<SampleBuffer, 4> st;
    for (auto& b : st)
        b.sample_rate = c.sample_rate;
    st[0] = make_tone(static_cast<double>(b0) * bin, dbm_to_wave(-10.0), 0.3, settle + w, c.sample_rate);
    const auto rec = run(net, st, settle + w);

    std::vector<double> x(rec.emitted[1].samples.begin() + static_cast<std::ptrdiff_t>(settle),
                          rec.emitted[1].samples.end());
    std::vector<std::complex<double>> y(w / 2 + 1);
    auto plan = fftw_plan_dft_r2c_1d(static_cast<int>(w), x.data(), reinterpret_cast<fftw_complex*>(y.data()),
                                     FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);

    const double carrier = std::norm(y[b0]);
    double stray = 0;
    for (std::size_t k = 1; k < y.size(); ++k) {
        const auto r = k % 16;
        if (r == b0 % 16 || r == (16 - b0 % 16) % 16)
            continue;
        stray = std::max(stray, std::norm(y[k]));
    }
    CHECK(10 * std::log10(stray / carrier) < -100.0);
}

TEST_CASE("spectrum window must resolve the modulation")
{
    CHECK_THROWS_AS(spectrum_probe(paper_config(), 155e6, -10.0, kMinSpectrumPeriods - 1), ResolutionError);
}

TEST_CASE("seamless commutation leaves no sidebands")
{
    const auto r = spectrum_probe(ideal_config(), 155e6, -10.0, 16);
    CHECK(r.il_port2_db == Approx(0.0).epsilon(1e-6));
    for (const auto& l : r.ports[1].lines)
        if (l.order != 0)
            CHECK(l.power_dbm - r.ports[1].main_dbm <= -80.0);
}

TEST_CASE("delay mismatch with finite transitions raises sidebands")
{
    const auto r = spectrum_probe(mismatched(5e-9, 2e-9), 155e6, -10.0, 16);
    double strongest = -1e9;
    for (const auto& l : r.ports[1].lines)
        if (l.order != 0)
            strongest = std::max(strongest, l.power_dbm - r.ports[1].main_dbm);
    CHECK(strongest > -40.0);
}

TEST_CASE("spectrum report bookkeeping")
{
    const auto r = spectrum_probe(paper_config(), 155e6, -10.0, 16, 3);
    CHECK(r.window_periods == 16);
    CHECK(r.f_mod == Approx(4e9 / 4560));
    for (const auto& port : r.ports) {
        CHECK(port.lines.size() == 7);
        for (const auto& l : port.lines)
            CHECK(l.frequency == Approx(r.f0 + l.order * r.f_mod));
    }
    CHECK(r.ports[0].main_dbm == Approx(-10.0).epsilon(1e-6));
    CHECK(r.il_port2_db == Approx(r.ports[0].main_dbm - r.ports[1].main_dbm));
}

TEST_CASE("modulation sweep reports quantization and optimum")
{
    const auto c = paper_config();
    const auto pts = modfreq_sweep(c, {0.8e6, 0.9e6}, 155e6);
    REQUIRE(pts.size() == 2);
    for (const auto& p : pts) {
        CHECK(p.ok);
        // achieved period is a multiple of 4 samples
        const double samples = c.sample_rate / p.f_mod;
        CHECK(std::abs(samples / 4 - std::round(samples / 4)) < 1e-9);
        CHECK(std::abs(p.f_mod - p.requested_f_mod) < p.f_mod * p.f_mod * 4 / c.sample_rate);
    }
    CHECK(modfreq_optimum(pts) == 1u);
    CHECK_FALSE(modfreq_optimum({}).has_value());
}

TEST_CASE("delay lines measured alone show the nominal group delay")
{
    const auto lc = linecheck(paper_config(), linspace(150e6, 160e6, 21));
    CHECK_FALSE(lc.delay_a.aliasing);
    for (const auto* d : {&lc.delay_a, &lc.delay_b}) {
        const auto& mid = d->points[d->points.size() / 2];
        CHECK(mid.frequency == Approx(155e6).epsilon(1e-3));
        CHECK(std::abs(mid.delay - 280e-9) <= 5e-9);
    }
    CHECK(db(lc.line_a.at(10, 2, 1)) == Approx(4.0).epsilon(0.1));
}

TEST_CASE("optional flatness bound narrows the band")
{
    auto g = SParamGrid::zeros(4, linspace(100e6, 200e6, 11));
    for (std::size_t k = 0; k < g.size(); ++k)
        for (std::size_t i = 0; i < 4; ++i) {
            const auto [fo, fi] = kForwardPaths[i];
            const auto [ro, ri] = kReversePaths[i];
            const double off = std::abs(static_cast<double>(k) - 5.0);
            g.at(k, fo, fi) = 0.5 * std::pow(10.0, -off / 20.0); // 1 dB per step from the centre
            g.at(k, ro, ri) = 1e-3;
        }
    CHECK(metrics(g, 27.0).bandwidth == Approx(100e6));
    const auto m = metrics(g, 27.0, 2.5);
    CHECK(m.band_start == Approx(130e6));
    CHECK(m.band_stop == Approx(170e6));
    REQUIRE(m.il_window_db);
    CHECK(*m.il_window_db == 2.5);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sdl/elements.hpp"
#include "sdl/errors.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <random>

using namespace sdl;
using doctest::Approx;

constexpr double fs = 4e9;
constexpr double pi = std::numbers::pi;

namespace {

// Steady-state response of a two-port element, driving `in` and reading `out`.
std::complex<double> stepped_response(ScatteringElement& e, double f, int out, int in)
{
    e.reset();
    const std::size_t settle = 40000, n = 20000;
    std::complex<double> acc{};
    std::array<double, 2> x{}, y{};
    for (std::size_t i = 0; i < settle + n; ++i) {
        const double w = 2 * pi * f * static_cast<double>(i) / fs;
        x = {0.0, 0.0};
        x[static_cast<std::size_t>(in)] = std::cos(w);
        e.step(x, 0.0, y);
        if (i >= settle)
            acc += y[static_cast<std::size_t>(out)] * std::polar(1.0, -w);
    }
    return acc * (2.0 / static_cast<double>(n));
}

double group_delay_at(const DelayLine& d, double f)
{
    const double df = 1e3;
    const double p1 = std::arg(d.response(f + df)[1][0]);
    const double p0 = std::arg(d.response(f - df)[1][0]);
    double dp = p1 - p0;
    while (dp > pi)
        dp -= 2 * pi;
    while (dp < -pi)
        dp += 2 * pi;
    return -dp / (2 * pi * 2 * df);
}

double largest_singular(const std::array<std::array<double, 4>, 4>& m)
{
    // Power iteration on m^T m.
    std::array<double, 4> v{1, 0.3, -0.2, 0.7};
    double lambda = 0;
    for (int it = 0; it < 500; ++it) {
        std::array<double, 4> u{}, w{};
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                u[i] += m[i][j] * v[j];
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                w[i] += m[j][i] * u[j];
        double norm = 0;
        for (double x : w)
            norm += x * x;
        norm = std::sqrt(norm);
        for (int i = 0; i < 4; ++i)
            v[i] = w[i] / norm;
        lambda = norm;
    }
    return std::sqrt(lambda);
}

} // namespace

TEST_CASE("db_loss_to_gain")
{
    CHECK(db_loss_to_gain(0.0) == 1.0);
    CHECK(db_loss_to_gain(20.0) == Approx(0.1));
    CHECK(db_loss_to_gain(kInfiniteDb) == 0.0);
}

TEST_CASE("flat delay line: taps land where the spec puts them")
{
    DelayLineSpec s;
    s.band_order = 0;
    s.il_db = 4.0;
    s.port_return_db = 15.0;
    s.echoes = {{2, -20.0}, {3, -30.0}};
    DelayLine d(s, fs);
    REQUIRE(d.delay_samples() == 1120);
    const double g = std::pow(10.0, -4.0 / 20), rho = std::pow(10.0, -15.0 / 20);

    std::vector<std::array<double, 2>> out(3500);
    for (std::size_t n = 0; n < out.size(); ++n) {
        std::array<double, 2> in{n == 0 ? 1.0 : 0.0, 0.0};
        d.step(in, 0.0, out[n]);
    }
    CHECK(out[0][0] == Approx(-rho));
    CHECK(out[1120][1] == Approx(g));
    CHECK(out[2240][0] == Approx(g * 0.1));
    CHECK(out[3360][1] == Approx(g * std::pow(10.0, -1.5)));
    double other = 0;
    for (std::size_t n = 0; n < out.size(); ++n)
        if (n != 0 && n != 1120 && n != 2240 && n != 3360)
            other += std::abs(out[n][0]) + std::abs(out[n][1]);
    CHECK(other == 0.0);
}

TEST_CASE("band-shaped line keeps 280 ns group delay at centre")
{
    DelayLineSpec s; // defaults: 280 ns, 4 dB, 155 MHz, 30 MHz, order 2
    DelayLine d(s, fs);
    CHECK(d.delay_samples() < 1120);
    CHECK(group_delay_at(d, 155e6) == Approx(280e-9).epsilon(0.1e-9 / 280e-9));
    CHECK(std::abs(d.response(155e6)[1][0]) == Approx(std::pow(10.0, -0.2)).epsilon(1e-9));
    CHECK(d.quantization_error() <= 0.5 / fs + 1e-15);
}

TEST_CASE("delay line stepping matches its analytic response")
{
    DelayLineSpec s;
    s.echoes = {{2, -18.0}, {3, -35.0}};
    DelayLine d(s, fs);
    for (double f : {145e6, 155e6, 163e6}) {
        const auto r = d.response(f);
        CHECK(std::abs(stepped_response(d, f, 1, 0) - r[1][0]) < 1e-6);
        CHECK(std::abs(stepped_response(d, f, 0, 0) - r[0][0]) < 1e-6);
    }
}

TEST_CASE("delay line argument checks")
{
    DelayLineSpec s;
    s.band_order = 3;
    CHECK_THROWS_AS(DelayLine(s, fs), RangeError);
    s = {};
    s.tau = 0;
    CHECK_THROWS_AS(DelayLine(s, fs), RangeError);
    s = {};
    s.echoes = {{1, -10}};
    CHECK_THROWS_AS(DelayLine(s, fs), RangeError);
    s = {};
    s.il_db = -1;
    CHECK_THROWS_AS(DelayLine(s, fs), RangeError);
}

TEST_CASE("crossbar states")
{
    Crossbar x(SwitchSpec{0.8, 30.0, 2e-9, 0.9});
    const double s_on = std::pow(10.0, -0.04), leak = std::pow(10.0, -1.5);
    const auto bar = x.gains(1.0);
    CHECK(bar.bar == Approx(s_on));
    CHECK(bar.cross == Approx(leak));
    CHECK(bar.reflect == 0.0);
    const auto cross = x.gains(0.0);
    CHECK(cross.bar == Approx(leak));
    CHECK(cross.cross == Approx(s_on));
}

TEST_CASE("ideal crossbar half way through a transition")
{
    Crossbar x(SwitchSpec{0.0, kInfiniteDb, 2e-9, 0.9});
    const auto g = x.gains(0.5);
    CHECK(g.reflect == Approx(0.45));
    CHECK(g.bar == Approx(0.5 * std::sqrt(0.55)));
    CHECK(g.cross == Approx(0.5 * std::sqrt(0.55)));
}

TEST_CASE("crossbar is passive for every control value, including coherent drive")
{
    for (auto spec : {SwitchSpec{0.0, kInfiniteDb, 2e-9, 0.9}, SwitchSpec{0.8, 30.0, 2e-9, 0.9},
                      SwitchSpec{0.8, 30.0, 2e-9, -1.0}, SwitchSpec{1.0, 20.0, 2e-9, 1.0}}) {
        Crossbar x(spec);
        for (int i = 0; i <= 200; ++i) {
            const double g = i / 200.0;
            std::array<std::array<double, 4>, 4> m{};
            for (int col = 0; col < 4; ++col) {
                std::array<double, 4> in{}, out{};
                in[static_cast<std::size_t>(col)] = 1.0;
                x.step(in, g, out);
                for (int row = 0; row < 4; ++row)
                    m[static_cast<std::size_t>(row)][static_cast<std::size_t>(col)] = out[static_cast<std::size_t>(row)];
            }
            CHECK(largest_singular(m) <= 1.0 + 1e-12);
        }
    }
}

TEST_CASE("crossbar contract and spec checks")
{
    Crossbar x(SwitchSpec{});
    std::array<double, 4> in{}, out{};
    CHECK_THROWS_AS(x.step(in, 1.5, out), ContractViolation);
    CHECK_THROWS_AS(x.step(in, -0.1, out), ContractViolation);
    CHECK_THROWS_AS(Crossbar(SwitchSpec{0.0, 20.0, 0.0, 0.9}), RangeError); // 1 + 0.1 > 1
    CHECK_THROWS_AS(Crossbar(SwitchSpec{0.8, 30.0, 0.0, 1.5}), RangeError);
}

TEST_CASE("matching section: digital response equals the analog one at the warp frequency")
{
    const MatchSpec m{80e-9, 12e-12, MatchOrientation::l_toward_line, 50.0};
    MatchingNetwork net(m, fs, 155e6);
    const auto d = net.response(155e6);
    const auto a = match_analog_response(m, 155e6);
    for (int o = 0; o < 2; ++o)
        for (int i = 0; i < 2; ++i)
            CHECK(std::abs(d[o][i] - a[o][i]) < 1e-12);
    // Lossless at every frequency.
    for (double f : {50e6, 155e6, 400e6}) {
        const auto r = net.response(f);
        CHECK(std::norm(r[0][0]) + std::norm(r[1][0]) == Approx(1.0).epsilon(1e-12));
        CHECK(std::norm(r[1][1]) + std::norm(r[0][1]) == Approx(1.0).epsilon(1e-12));
    }
    CHECK(std::abs(stepped_response(net, 150e6, 1, 0) - net.response(150e6)[1][0]) < 1e-6);
    CHECK(std::abs(stepped_response(net, 150e6, 0, 0) - net.response(150e6)[0][0]) < 1e-6);
}

TEST_CASE("analog section agrees with an ABCD cascade")
{
    const double z0 = 50, f = 155e6, w = 2 * pi * f;
    const double L = 60e-9, C = 15e-12;
    const std::complex<double> zl{0, w * L}, yc{0, w * C};
    using M = std::array<std::array<std::complex<double>, 2>, 2>;
    auto mul = [](const M& a, const M& b) {
        M r{};
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                r[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        return r;
    };
    const M series{{{1.0, zl}, {0.0, 1.0}}};
    const M shunt{{{1.0, 0.0}, {yc, 1.0}}};
    for (auto orient : {MatchOrientation::l_toward_line, MatchOrientation::l_toward_port}) {
        // Port 1 on the left: L toward the line means shunt C first.
        const M abcd = orient == MatchOrientation::l_toward_line ? mul(shunt, series) : mul(series, shunt);
        const auto A = abcd[0][0], B = abcd[0][1], Cc = abcd[1][0], D = abcd[1][1];
        const auto den = A + B / z0 + Cc * z0 + D;
        const auto s11 = (A + B / z0 - Cc * z0 - D) / den;
        const auto s21 = 2.0 / den;
        const auto s22 = (-A + B / z0 - Cc * z0 + D) / den;
        const auto got = match_analog_response({L, C, orient, z0}, f);
        CHECK(std::abs(got[0][0] - s11) < 1e-12);
        CHECK(std::abs(got[1][0] - s21) < 1e-12);
        CHECK(std::abs(got[1][1] - s22) < 1e-12);
    }
}

TEST_CASE("L-match synthesis presents z0 at f0")
{
    for (std::complex<double> zload : {std::complex<double>{20, -30}, {12, 10}, {150, -60}, {300, 80}}) {
        const auto m = synth_lmatch(zload, 50.0, 155e6);
        CHECK(m.series_l >= 0.0);
        CHECK(m.shunt_c >= 0.0);
        const auto s = match_analog_response(m, 155e6);
        const auto gl = (zload - 50.0) / (zload + 50.0);
        const auto gin = s[0][0] + s[0][1] * s[1][0] * gl / (1.0 - s[1][1] * gl);
        CHECK(std::abs(gin) < 1e-9);
    }
    CHECK_THROWS(synth_lmatch({-5, 0}, 50.0, 155e6));
    // Series reactance would have to be capacitive.
    CHECK_THROWS(synth_lmatch({12, 40}, 50.0, 155e6));
}

TouchstoneData synthetic_delay(double tau, double mag, double f_lo, double f_hi, std::size_t n,
                               double reflect_delay = 40e-9)
{
    TouchstoneData d;
    for (std::size_t k = 0; k < n; ++k) {
        const double f = f_lo + (f_hi - f_lo) * static_cast<double>(k) / static_cast<double>(n - 1);
        d.frequencies.push_back(f);
        SMatrix2 m{};
        m[1][0] = m[0][1] = mag * std::polar(1.0, -2 * pi * f * tau);
        m[0][0] = m[1][1] = 0.1 * std::polar(1.0, -2 * pi * f * reflect_delay);
        d.s.push_back(m);
    }
    return d;
}

TEST_CASE("imported synthetic delay line keeps 280 ns within one sample")
{
    const auto data = synthetic_delay(280e-9, 0.631, 100e6, 210e6, 881);
    FirTwoPort fir(data, {fs, 4096, 155e6, 30e6});
    CHECK(fir.truncation_energy_loss() < 1e-3);
    const double df = 50e3;
    const double gd = -std::arg(fir.response(155e6 + df)[1][0] / fir.response(155e6 - df)[1][0]) / (2 * pi * 2 * df);
    CHECK(std::abs(gd - 280e-9) <= 1.0 / fs);
    CHECK(std::abs(fir.response(155e6)[1][0]) == Approx(0.631).epsilon(1e-3));
    const auto& h = fir.impulse_response(1, 0);
    std::size_t peak = 0;
    for (std::size_t i = 0; i < h.size(); ++i)
        if (std::abs(h[i]) > std::abs(h[peak]))
            peak = i;
    CHECK(std::abs(static_cast<double>(peak) - 1120.0) <= 30.0);
    CHECK(std::abs(stepped_response(fir, 152e6, 1, 0) - fir.response(152e6)[1][0]) < 1e-6);
}

TEST_CASE("an acausal response is reported as truncation loss")
{
    // Zero-delay reflection: the band-limited pulse straddles t = 0.
    const auto data = synthetic_delay(280e-9, 0.631, 100e6, 210e6, 221, 0.0);
    FirTwoPort fir(data, {fs, 4096, 155e6, 30e6});
    CHECK(fir.truncation_energy_loss() > 0.1);
    bool warned = false;
    for (const auto& w : fir.warnings())
        warned = warned || w.find("truncated") != std::string::npos;
    CHECK(warned);
}

TEST_CASE("non-passive tabulated data draws a warning")
{
    const auto data = synthetic_delay(280e-9, 1.2, 100e6, 210e6, 221);
    FirTwoPort fir(data, {fs, 4096, 155e6, 30e6});
    bool warned = false;
    for (const auto& w : fir.warnings())
        warned = warned || w.find("passive") != std::string::npos;
    CHECK(warned);
}

TEST_CASE("import needs data covering the band")
{
    const auto data = synthetic_delay(280e-9, 0.631, 160e6, 210e6, 101);
    CHECK_THROWS_AS(FirTwoPort(data, {fs, 4096, 155e6, 30e6}), CoverageError);
}

#include "sdl/elements.hpp"

#include "sdl/errors.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

namespace sdl {

namespace {

constexpr double kPi = std::numbers::pi;

std::mutex g_fir_plan_mutex;

std::size_t next_pow2(std::size_t n)
{
    std::size_t p = 1;
    while (p < n)
        p <<= 1;
    return p;
}

double largest_singular_value(const SMatrix2& m)
{
    // Eigenvalues of the Hermitian product S^H S.
    double a = 0.0, d = 0.0;
    std::complex<double> b{0.0, 0.0};
    for (int k = 0; k < 2; ++k) {
        a += std::norm(m[k][0]);
        d += std::norm(m[k][1]);
        b += std::conj(m[k][0]) * m[k][1];
    }
    const double tr = a + d;
    const double det = a * d - std::norm(b);
    const double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
    return std::sqrt(tr / 2.0 + disc);
}

} // namespace

double db_loss_to_gain(double loss_db) noexcept
{
    if (std::isinf(loss_db) && loss_db > 0.0)
        return 0.0;
    return std::pow(10.0, -loss_db / 20.0);
}

// ---------------------------------------------------------------- delay line

DelayLine::DelayLine(const DelayLineSpec& spec, double sample_rate)
    : spec_(spec), sample_rate_(sample_rate)
{
    if (!(sample_rate > 0.0))
        throw RangeError("delay line: sample_rate must be positive");
    if (!(spec.tau > 0.0))
        throw RangeError("delay line: tau must be positive");
    if (spec.tau * sample_rate < 1.0)
        throw RangeError("delay line: tau shorter than one sample");
    if (!(spec.il_db >= 0.0))
        throw RangeError("delay line: il_db must be >= 0");
    if (!(spec.port_return_db >= 0.0))
        throw RangeError("delay line: port_return_db must be >= 0");
    if (spec.band_order < 0 || spec.band_order % 2 != 0)
        throw RangeError("delay line: band_order must be 0 (flat) or a positive even integer");
    for (const auto& e : spec.echoes) {
        if (e.transit_multiple < 2)
            throw RangeError("delay line: echo transit multiple must be >= 2");
        if (!(e.level_db <= 0.0))
            throw RangeError("delay line: echo level must be <= 0 dB");
    }

    if (spec.band_order > 0) {
        if (!(spec.bandwidth > 0.0 && spec.bandwidth < spec.f_center))
            throw RangeError("delay line: need 0 < bandwidth < f_center");
        for (auto& b : band_)
            b = butterworth_bandpass(spec.f_center, spec.bandwidth, spec.band_order, sample_rate);
        band_delay_ = band_[0].group_delay(2.0 * kPi * spec.f_center / sample_rate) / sample_rate;
    }

    const double integer_part = (spec.tau - band_delay_) * sample_rate;
    auto d = static_cast<long long>(std::llround(integer_part));
    if (d < 1) {
        warnings_.push_back("band-shape group delay exceeds tau; transit clamped to one sample");
        d = 1;
    }
    delay_ = static_cast<std::size_t>(d);
    quantization_error_ = std::abs(static_cast<double>(delay_) / sample_rate + band_delay_ - spec.tau);
    if (quantization_error_ > 0.5 / sample_rate + 1e-15)
        warnings_.push_back("delay quantization error " + std::to_string(quantization_error_ * 1e12)
                            + " ps exceeds half a sample");

    const double g = db_loss_to_gain(spec.il_db);
    through_taps_.push_back({delay_, g});
    const double rho = db_loss_to_gain(spec.port_return_db);
    if (rho > 0.0)
        return_taps_.push_back({0, -rho});
    std::size_t longest = delay_;
    for (const auto& e : spec.echoes) {
        const std::size_t k = static_cast<std::size_t>(e.transit_multiple);
        const Tap tap{k * delay_, g * std::pow(10.0, e.level_db / 20.0)};
        (k % 2 == 1 ? through_taps_ : return_taps_).push_back(tap);
        longest = std::max(longest, tap.delay);
    }
    // |S11| + |S21| bounds the largest singular value of the symmetric 2x2 response.
    double bound = 0.0;
    for (const auto& t : through_taps_)
        bound += std::abs(t.gain);
    for (const auto& t : return_taps_)
        bound += std::abs(t.gain);
    if (bound > 1.0 + 1e-12)
        warnings_.push_back("tap gains sum to " + std::to_string(bound) + " > 1: the line may not be passive");

    history_len_ = longest + 1;
    for (auto& h : history_)
        h.assign(history_len_, 0.0);
}

void DelayLine::step(std::span<const double> incident, double, std::span<double> emitted)
{
    head_ = head_ + 1 == history_len_ ? 0 : head_ + 1;
    history_[0][head_] = incident[0];
    history_[1][head_] = incident[1];

    auto at = [this](const std::vector<double>& h, std::size_t delay) {
        const std::size_t i = head_ >= delay ? head_ - delay : head_ + history_len_ - delay;
        return h[i];
    };

    for (std::size_t p = 0; p < 2; ++p) {
        const auto& same = history_[p];
        const auto& other = history_[1 - p];
        double acc = 0.0;
        for (const auto& t : through_taps_)
            acc += t.gain * at(other, t.delay);
        for (const auto& t : return_taps_)
            acc += t.gain * at(same, t.delay);
        emitted[p] = band_[p].empty() ? acc : band_[p].process(acc);
    }
}

void DelayLine::reset()
{
    for (auto& h : history_)
        std::fill(h.begin(), h.end(), 0.0);
    head_ = 0;
    for (auto& b : band_)
        b.reset();
}

SMatrix2 DelayLine::response(double f) const
{
    const double w = 2.0 * kPi * f / sample_rate_;
    const std::complex<double> h = band_[0].empty() ? std::complex<double>{1.0, 0.0} : band_[0].response(w);
    std::complex<double> through{0.0, 0.0}, ret{0.0, 0.0};
    for (const auto& t : through_taps_)
        through += t.gain * std::polar(1.0, -w * static_cast<double>(t.delay));
    for (const auto& t : return_taps_)
        ret += t.gain * std::polar(1.0, -w * static_cast<double>(t.delay));
    SMatrix2 m;
    m[0][0] = m[1][1] = h * ret;
    m[1][0] = m[0][1] = h * through;
    return m;
}

// ---------------------------------------------------------------- crossbar

Crossbar::Crossbar(const SwitchSpec& spec) : spec_(spec)
{
    if (!(spec.il_on_db >= 0.0))
        throw RangeError("switch: il_on_db must be >= 0");
    if (!(spec.iso_off_db > spec.il_on_db))
        throw RangeError("switch: iso_off_db must exceed il_on_db");
    if (!(spec.t_transition >= 0.0))
        throw RangeError("switch: t_transition must be >= 0");
    if (!(spec.gamma_off >= -1.0 && spec.gamma_off <= 1.0))
        throw RangeError("switch: gamma_off must lie in [-1, 1]");
    s_on_ = db_loss_to_gain(spec.il_on_db);
    leak_ = db_loss_to_gain(spec.iso_off_db);
    // The steady-state crossbar matrix has singular value s_on + leak.
    if (s_on_ + leak_ > 1.0 + 1e-12)
        throw RangeError("switch: on-state gain plus off-state leakage exceeds unity (not passive); "
                         "raise il_on_db or iso_off_db");
}

Crossbar::Gains Crossbar::gains(double g) const
{
    if (!(g >= 0.0 && g <= 1.0))
        throw ContractViolation("crossbar: control value outside [0, 1]");
    double w, wc;
    if (g == 1.0) {
        w = 1.0;
        wc = 0.0;
    } else if (g == 0.0) {
        w = 0.0;
        wc = 1.0;
    } else {
        const double sn = std::sin(kPi * g / 2.0);
        const double cs = std::cos(kPi * g / 2.0);
        w = sn * sn;
        wc = cs * cs;
    }
    const double r = spec_.gamma_off * (1.0 - std::max(w, wc));
    // Power reflected by a partially open throw is taken from the through paths.
    const double k = std::sqrt(1.0 - std::abs(r));
    return {k * (s_on_ * w + leak_ * wc), k * (s_on_ * wc + leak_ * w), r};
}

void Crossbar::step(std::span<const double> in, double control, std::span<double> out)
{
    if (control != last_g_) {
        cached_ = gains(control);
        last_g_ = control;
    }
    const auto& c = cached_;
    out[port_top] = c.bar * in[line_a] + c.cross * in[line_b];
    out[port_bot] = c.cross * in[line_a] + c.bar * in[line_b];
    out[line_a] = c.bar * in[port_top] + c.cross * in[port_bot] + c.reflect * in[line_a];
    out[line_b] = c.cross * in[port_top] + c.bar * in[port_bot] + c.reflect * in[line_b];
}

// ---------------------------------------------------------------- matching network

namespace {

struct MatchPolys {
    std::array<double, 3> den;
    std::array<double, 3> s11, s21, s22;
};

MatchPolys match_polynomials(const MatchSpec& m)
{
    const double a = m.series_l / m.z0;
    const double b = m.shunt_c * m.z0;
    const double lc = m.series_l * m.shunt_c;
    MatchPolys p;
    p.den = {2.0, a + b, lc};
    p.s21 = {2.0, 0.0, 0.0};
    // Shunt C facing port 1 with L toward the line; the mirrored section swaps S11/S22.
    std::array<double, 3> near_c{0.0, a - b, -lc};
    std::array<double, 3> near_l{0.0, a - b, lc};
    if (m.orientation == MatchOrientation::l_toward_line) {
        p.s11 = near_c;
        p.s22 = near_l;
    } else {
        p.s11 = near_l;
        p.s22 = near_c;
    }
    return p;
}

std::complex<double> eval_poly(const std::array<double, 3>& c, std::complex<double> s)
{
    return c[0] + s * (c[1] + s * c[2]);
}

} // namespace

MatchingNetwork::MatchingNetwork(const MatchSpec& spec, double sample_rate, double f_warp)
    : spec_(spec), sample_rate_(sample_rate)
{
    if (!std::isfinite(spec.series_l) || !std::isfinite(spec.shunt_c) || spec.series_l < 0.0
        || spec.shunt_c < 0.0)
        throw RangeError("matching: component values must be finite and non-negative");
    if (!(spec.z0 > 0.0))
        throw RangeError("matching: z0 must be positive");
    if (!(f_warp > 0.0 && f_warp < sample_rate / 2.0))
        throw RangeError("matching: pre-warp frequency outside (0, fs/2)");
    const double k = prewarp_constant(f_warp, sample_rate);
    const auto p = match_polynomials(spec);
    s_[0][0] = bilinear(p.s11, p.den, k);
    s_[1][0] = bilinear(p.s21, p.den, k);
    s_[0][1] = bilinear(p.s21, p.den, k);
    s_[1][1] = bilinear(p.s22, p.den, k);
}

void MatchingNetwork::step(std::span<const double> in, double, std::span<double> out)
{
    out[0] = s_[0][0].process(in[0]) + s_[0][1].process(in[1]);
    out[1] = s_[1][0].process(in[0]) + s_[1][1].process(in[1]);
}

void MatchingNetwork::reset()
{
    for (auto& row : s_)
        for (auto& q : row)
            q.reset();
}

SMatrix2 MatchingNetwork::response(double f) const
{
    const double w = 2.0 * kPi * f / sample_rate_;
    SMatrix2 m;
    for (int j = 0; j < 2; ++j)
        for (int i = 0; i < 2; ++i)
            m[j][i] = s_[j][i].response(w);
    return m;
}

SMatrix2 match_analog_response(const MatchSpec& spec, double f)
{
    const auto p = match_polynomials(spec);
    const std::complex<double> s{0.0, 2.0 * kPi * f};
    const auto den = eval_poly(p.den, s);
    SMatrix2 m;
    m[0][0] = eval_poly(p.s11, s) / den;
    m[1][0] = m[0][1] = eval_poly(p.s21, s) / den;
    m[1][1] = eval_poly(p.s22, s) / den;
    return m;
}

MatchSpec synth_lmatch(std::complex<double> z_load, double z0, double f0)
{
    if (!(z0 > 0.0) || !(f0 > 0.0))
        throw DomainError("synth_lmatch: z0 and f0 must be positive");
    const double r = z_load.real();
    const double x = z_load.imag();
    if (!(r > 0.0))
        throw DomainError("synth_lmatch: load resistance must be positive");

    MatchSpec m;
    m.z0 = z0;
    if (r == z0 && x == 0.0)
        return m;

    const double w = 2.0 * kPi * f0;
    if (r < z0) {
        // Series L next to the load, shunt C on the source side.
        const double q = std::sqrt(z0 / r - 1.0);
        const double x_series = q * r - x;
        if (x_series < 0.0)
            throw DomainError("synth_lmatch: load too inductive for a series-L/shunt-C section");
        m.series_l = x_series / w;
        m.shunt_c = q / z0 / w;
        m.orientation = MatchOrientation::l_toward_line;
    } else {
        // Shunt C across the load, series L toward the source.
        const double g = r / (r * r + x * x);
        const double b_load = -x / (r * r + x * x);
        const double q = std::sqrt(1.0 / (g * z0) - 1.0);
        const double b_shunt = q * g - b_load;
        if (b_shunt < 0.0)
            throw DomainError("synth_lmatch: load too capacitive for a series-L/shunt-C section");
        m.shunt_c = b_shunt / w;
        m.series_l = q * z0 / w;
        m.orientation = MatchOrientation::l_toward_port;
    }
    return m;
}

// ---------------------------------------------------------------- Touchstone FIR

FirTwoPort::FirTwoPort(const TouchstoneData& data, const TouchstoneImportOptions& opt)
    : sample_rate_(opt.sample_rate)
{
    if (data.frequencies.empty() || data.frequencies.size() != data.s.size())
        throw DataError("touchstone import: no data");
    if (!(opt.sample_rate > 0.0) || opt.ir_len == 0)
        throw RangeError("touchstone import: sample_rate and ir_len must be positive");
    const double f_lo = data.frequencies.front();
    const double f_hi = data.frequencies.back();
    const double pass_lo = opt.band_center - opt.band_width / 2.0;
    const double pass_hi = opt.band_center + opt.band_width / 2.0;
    if (f_lo > pass_lo || f_hi < pass_hi)
        throw CoverageError("touchstone import: measured band does not cover the simulation band");
    if (pass_hi >= opt.sample_rate / 2.0)
        throw RangeError("touchstone import: simulation band beyond Nyquist");

    for (const auto& m : data.s)
        if (largest_singular_value(m) > 1.0 + 1e-6) {
            warnings_.push_back("touchstone data is not passive (singular value > 1)");
            break;
        }

    // Magnitude and unwrapped phase per path, for interpolation.
    const std::size_t nf = data.frequencies.size();
    std::vector<double> mag[2][2], ph[2][2];
    for (int j = 0; j < 2; ++j)
        for (int i = 0; i < 2; ++i) {
            mag[j][i].resize(nf);
            ph[j][i].resize(nf);
            for (std::size_t k = 0; k < nf; ++k) {
                mag[j][i][k] = std::abs(data.s[k][j][i]);
                double p = std::arg(data.s[k][j][i]);
                if (k > 0)
                    p += 2.0 * kPi * std::round((ph[j][i][k - 1] - p) / (2.0 * kPi));
                ph[j][i][k] = p;
            }
        }

    auto taper = [&](double f) {
        if (f < f_lo || f > f_hi)
            return 0.0;
        if (f < pass_lo)
            return 0.5 - 0.5 * std::cos(kPi * (f - f_lo) / (pass_lo - f_lo));
        if (f > pass_hi)
            return 0.5 - 0.5 * std::cos(kPi * (f_hi - f) / (f_hi - pass_hi));
        return 1.0;
    };

    const std::size_t n = std::max<std::size_t>(next_pow2(4 * opt.ir_len), 4096);
    const std::size_t nbins = n / 2 + 1;
    auto* spec = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * nbins));
    auto* time = static_cast<double*>(fftw_malloc(sizeof(double) * n));
    fftw_plan plan;
    {
        std::lock_guard lock(g_fir_plan_mutex);
        plan = fftw_plan_dft_c2r_1d(static_cast<int>(n), spec, time, FFTW_ESTIMATE);
    }

    double worst_loss = 0.0;
    std::vector<double> full[2][2];
    for (int j = 0; j < 2; ++j)
        for (int i = 0; i < 2; ++i) {
            for (std::size_t k = 0; k < nbins; ++k) {
                const double f = static_cast<double>(k) * opt.sample_rate / static_cast<double>(n);
                const double wgt = (k == n / 2) ? 0.0 : taper(f);
                std::complex<double> v{0.0, 0.0};
                if (wgt > 0.0) {
                    const auto it = std::upper_bound(data.frequencies.begin(), data.frequencies.end(), f);
                    std::size_t hi = static_cast<std::size_t>(it - data.frequencies.begin());
                    hi = std::clamp<std::size_t>(hi, 1, nf - 1);
                    const std::size_t lo = hi - 1;
                    double t = nf == 1 ? 0.0
                                       : (f - data.frequencies[lo])
                                             / (data.frequencies[hi] - data.frequencies[lo]);
                    t = std::clamp(t, 0.0, 1.0);
                    const double a = mag[j][i][lo] + t * (mag[j][i][hi] - mag[j][i][lo]);
                    const double p = ph[j][i][lo] + t * (ph[j][i][hi] - ph[j][i][lo]);
                    v = wgt * std::polar(a, p);
                }
                spec[k][0] = v.real();
                spec[k][1] = v.imag();
            }
            fftw_execute(plan);
            auto& h = full[j][i];
            h.assign(time, time + n);
            double total = 0.0, kept = 0.0;
            for (std::size_t t = 0; t < n; ++t) {
                h[t] /= static_cast<double>(n);
                total += h[t] * h[t];
                if (t < opt.ir_len)
                    kept += h[t] * h[t];
            }
            if (total > 0.0)
                worst_loss = std::max(worst_loss, 1.0 - kept / total);
            ir_[j][i].assign(h.begin(), h.begin() + static_cast<std::ptrdiff_t>(opt.ir_len));
        }
    {
        std::lock_guard lock(g_fir_plan_mutex);
        fftw_destroy_plan(plan);
    }
    fftw_free(spec);
    fftw_free(time);

    energy_loss_ = worst_loss;
    if (energy_loss_ > 1e-3)
        warnings_.push_back("impulse response truncated to " + std::to_string(opt.ir_len)
                            + " taps loses " + std::to_string(100.0 * energy_loss_) + "% of its energy");

    double peak = 0.0;
    for (auto& row : ir_)
        for (auto& h : row)
            for (double v : h)
                peak = std::max(peak, std::abs(v));
    first_tap_ = opt.ir_len;
    last_tap_ = 0;
    for (std::size_t t = 0; t < opt.ir_len; ++t) {
        double m = 0.0;
        for (auto& row : ir_)
            for (auto& h : row)
                m = std::max(m, std::abs(h[t]));
        if (m > 1e-12 * peak) {
            first_tap_ = std::min(first_tap_, t);
            last_tap_ = t;
        }
    }
    if (first_tap_ > last_tap_)
        first_tap_ = last_tap_ = 0;

    for (auto& h : history_)
        h.assign(2 * opt.ir_len, 0.0);
}

void FirTwoPort::step(std::span<const double> in, double, std::span<double> out)
{
    const std::size_t len = ir_[0][0].size();
    head_ = head_ == 0 ? len - 1 : head_ - 1;
    for (int p = 0; p < 2; ++p) {
        history_[p][head_] = in[p];
        history_[p][head_ + len] = in[p];
    }
    // x[n - t] == history[head + t]
    const double* x0 = history_[0].data() + head_;
    const double* x1 = history_[1].data() + head_;
    for (int j = 0; j < 2; ++j) {
        const double* h0 = ir_[j][0].data();
        const double* h1 = ir_[j][1].data();
        double acc = 0.0;
        for (std::size_t t = first_tap_; t <= last_tap_; ++t)
            acc += h0[t] * x0[t] + h1[t] * x1[t];
        out[j] = acc;
    }
}

void FirTwoPort::reset()
{
    for (auto& h : history_)
        std::fill(h.begin(), h.end(), 0.0);
    head_ = 0;
}

SMatrix2 FirTwoPort::response(double f) const
{
    const double w = 2.0 * kPi * f / sample_rate_;
    SMatrix2 m{};
    for (int j = 0; j < 2; ++j)
        for (int i = 0; i < 2; ++i) {
            std::complex<double> acc{0.0, 0.0};
            const auto& h = ir_[j][i];
            for (std::size_t t = first_tap_; t <= last_tap_ && t < h.size(); ++t)
                acc += h[t] * std::polar(1.0, -w * static_cast<double>(t));
            m[j][i] = acc;
        }
    return m;
}

// ---------------------------------------------------------------- factories

std::unique_ptr<DelayLine> delay_line_element(const DelayLineSpec& spec, double sample_rate)
{
    return std::make_unique<DelayLine>(spec, sample_rate);
}

std::unique_ptr<Crossbar> crossbar_element(const SwitchSpec& spec) { return std::make_unique<Crossbar>(spec); }

std::unique_ptr<MatchingNetwork> matching_element(const MatchSpec& spec, double sample_rate, double f_warp)
{
    return std::make_unique<MatchingNetwork>(spec, sample_rate, f_warp);
}

std::unique_ptr<FirTwoPort> element_from_touchstone(const TouchstoneData& data,
                                                    const TouchstoneImportOptions& options)
{
    return std::make_unique<FirTwoPort>(data, options);
}

} // namespace sdl

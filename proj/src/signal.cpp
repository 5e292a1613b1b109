#include "sdl/signal.hpp"

#include "sdl/errors.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>

namespace sdl {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// FFTW's planner is not re-entrant.
std::mutex g_fftw_plan_mutex;

// exp(-j 2 pi f n / fs) with the cycle count reduced before the trig call,
// so long simulations keep full phase precision.
std::complex<double> carrier_conjugate(double cycles_per_sample, std::int64_t n)
{
    const double x = cycles_per_sample * static_cast<double>(n);
    const double frac = x - std::floor(x);
    return std::polar(1.0, -kTwoPi * frac);
}

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::vector<double> window_coefficients(Window window, std::size_t n)
{
    std::vector<double> w(n, 1.0);
    if (window == Window::rectangular)
        return w;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = kTwoPi * static_cast<double>(i) / static_cast<double>(n);
        if (window == Window::hann) {
            w[i] = 0.5 - 0.5 * std::cos(x);
        } else {
            // Five-term flat top (peak amplitude error < 0.01 dB).
            w[i] = 0.21557895 - 0.41663158 * std::cos(x) + 0.277263158 * std::cos(2 * x)
                   - 0.083578947 * std::cos(3 * x) + 0.006947368 * std::cos(4 * x);
        }
    }
    return w;
}

} // namespace

double SampleBuffer::energy() const noexcept
{
    double e = 0.0;
    for (double v : samples)
        e += v * v;
    return e;
}

Phasor Phasor::from_complex(double frequency, std::complex<double> c)
{
    Phasor p;
    p.frequency = frequency;
    p.amplitude = std::abs(c);
    p.phase = p.amplitude > 0.0 ? wrap_phase(std::arg(c)) : 0.0;
    return p;
}

double wrap_phase(double radians) noexcept
{
    double r = std::remainder(radians, kTwoPi); // [-pi, pi]
    if (r <= -std::numbers::pi)
        r += kTwoPi;
    return r;
}

double wave_to_dbm(double amplitude) noexcept
{
    const double watts = 0.5 * amplitude * amplitude;
    if (!(watts > 0.0))
        return kPowerFloorDbm;
    return std::max(kPowerFloorDbm, 10.0 * std::log10(watts / 1e-3));
}

double dbm_to_wave(double dbm) noexcept { return std::sqrt(2.0 * 1e-3 * std::pow(10.0, dbm / 10.0)); }

SampleBuffer make_tone(double frequency, double amplitude, double phase, std::size_t n_samples,
                       double sample_rate)
{
    if (!(sample_rate > 0.0))
        throw RangeError("make_tone: sample_rate must be positive");
    if (!(frequency > 0.0 && frequency < sample_rate / 2.0))
        throw RangeError("make_tone: frequency outside (0, sample_rate/2)");

    SampleBuffer buf;
    buf.sample_rate = sample_rate;
    buf.samples.resize(n_samples);
    const double r = frequency / sample_rate;
    for (std::size_t n = 0; n < n_samples; ++n) {
        const double x = r * static_cast<double>(n);
        buf.samples[n] = amplitude * std::cos(kTwoPi * (x - std::floor(x)) + phase);
    }
    return buf;
}

SampleBuffer make_burst(double frequency, double amplitude, double t_start, double t_rise,
                        double t_hold, double sample_rate)
{
    if (!(sample_rate > 0.0))
        throw RangeError("make_burst: sample_rate must be positive");
    if (!(frequency > 0.0 && frequency < sample_rate / 2.0))
        throw RangeError("make_burst: frequency outside (0, sample_rate/2)");
    if (t_start < 0.0 || t_rise < 0.0 || !(t_hold > 0.0))
        throw RangeError("make_burst: durations must satisfy t_start >= 0, t_rise >= 0, t_hold > 0");

    const double t_end = t_start + 2.0 * t_rise + t_hold;
    const auto n_samples = static_cast<std::size_t>(std::ceil(t_end * sample_rate)) + 1;

    SampleBuffer buf;
    buf.sample_rate = sample_rate;
    buf.samples.assign(n_samples, 0.0);
    const double r = frequency / sample_rate;
    for (std::size_t n = 0; n < n_samples; ++n) {
        const double t = static_cast<double>(n) / sample_rate - t_start;
        double env = 0.0;
        if (t < 0.0 || t >= 2.0 * t_rise + t_hold) {
            env = 0.0;
        } else if (t < t_rise) {
            env = 0.5 - 0.5 * std::cos(std::numbers::pi * t / t_rise);
        } else if (t < t_rise + t_hold) {
            env = 1.0;
        } else {
            const double tf = t - t_rise - t_hold;
            env = 0.5 + 0.5 * std::cos(std::numbers::pi * tf / t_rise);
        }
        if (env == 0.0)
            continue;
        const double x = r * static_cast<double>(n);
        buf.samples[n] = amplitude * env * std::cos(kTwoPi * (x - std::floor(x)));
    }
    return buf;
}

std::complex<double> coherent_phasor(const SampleBuffer& buffer, double frequency,
                                     std::size_t window_start, std::size_t window_len)
{
    if (window_len == 0 || window_start + window_len > buffer.size())
        throw RangeError("extract_phasor: window exceeds buffer");
    const double r = frequency / buffer.sample_rate;

    // Rotate incrementally and re-anchor periodically to bound drift.
    std::complex<double> acc{0.0, 0.0};
    const std::complex<double> step = std::polar(1.0, -kTwoPi * r);
    std::complex<double> rot;
    for (std::size_t i = 0; i < window_len; ++i) {
        const std::size_t idx = window_start + i;
        if (i % 1024 == 0)
            rot = carrier_conjugate(r, buffer.start_index + static_cast<std::int64_t>(idx));
        const double v = buffer.samples[idx];
        if (!std::isfinite(v))
            throw DataError("extract_phasor: non-finite sample at index " + std::to_string(idx));
        acc += v * rot;
        rot *= step;
    }
    return acc * (2.0 / static_cast<double>(window_len));
}

PhasorMeasurement extract_phasor(const SampleBuffer& buffer, double frequency,
                                 std::size_t window_start, std::size_t window_len)
{
    if (!(buffer.sample_rate > 0.0))
        throw DataError("extract_phasor: buffer has no sample rate");
    if (!(frequency > 0.0 && frequency < buffer.sample_rate / 2.0))
        throw RangeError("extract_phasor: frequency outside (0, sample_rate/2)");
    if (window_start + window_len > buffer.size())
        throw RangeError("extract_phasor: window exceeds buffer");

    const double samples_per_cycle = buffer.sample_rate / frequency;
    const double cycles = std::floor(static_cast<double>(window_len) / samples_per_cycle + 1e-9);
    if (cycles < 1.0)
        throw MeasurementError("extract_phasor: window shorter than one cycle");
    auto adjusted = static_cast<std::size_t>(std::llround(cycles * samples_per_cycle));
    adjusted = std::min(adjusted, window_len);

    PhasorMeasurement m;
    m.window_len = adjusted;
    m.phasor = Phasor::from_complex(frequency, coherent_phasor(buffer, frequency, window_start, adjusted));
    return m;
}

std::vector<SpectrumBin> power_spectrum(const SampleBuffer& buffer, Window window,
                                        std::size_t fft_len, FftFit fit)
{
    if (buffer.empty())
        throw DataError("power_spectrum: empty buffer");
    if (!is_power_of_two(fft_len))
        throw RangeError("power_spectrum: fft_len must be a power of two");
    if (buffer.size() < fft_len && fit == FftFit::truncate)
        throw RangeError("power_spectrum: buffer shorter than fft_len (use zero padding)");
    for (double v : buffer.samples)
        if (!std::isfinite(v))
            throw DataError("power_spectrum: non-finite sample");

    const std::size_t n_data = std::min(buffer.size(), fft_len);
    const auto w = window_coefficients(window, n_data);
    double coherent_gain = 0.0;
    for (double c : w)
        coherent_gain += c;

    auto in = std::unique_ptr<double, decltype(&fftw_free)>(
        static_cast<double*>(fftw_malloc(sizeof(double) * fft_len)), &fftw_free);
    const std::size_t n_out = fft_len / 2 + 1;
    auto out = std::unique_ptr<fftw_complex, decltype(&fftw_free)>(
        static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n_out)), &fftw_free);

    fftw_plan plan;
    {
        std::lock_guard lock(g_fftw_plan_mutex);
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(fft_len), in.get(), out.get(), FFTW_ESTIMATE);
    }
    std::fill(in.get(), in.get() + fft_len, 0.0);
    for (std::size_t i = 0; i < n_data; ++i)
        in.get()[i] = buffer.samples[i] * w[i];
    fftw_execute(plan);
    {
        std::lock_guard lock(g_fftw_plan_mutex);
        fftw_destroy_plan(plan);
    }

    std::vector<SpectrumBin> bins(n_out);
    const double norm = 1.0 / (coherent_gain * coherent_gain);
    for (std::size_t k = 0; k < n_out; ++k) {
        const double re = out.get()[k][0];
        const double im = out.get()[k][1];
        const double one_sided = (k == 0 || k == fft_len / 2) ? 1.0 : 2.0;
        const double watts = one_sided * (re * re + im * im) * norm;
        bins[k].frequency = static_cast<double>(k) * buffer.sample_rate / static_cast<double>(fft_len);
        bins[k].power_dbm =
            watts > 0.0 ? std::max(kPowerFloorDbm, 10.0 * std::log10(watts / 1e-3)) : kPowerFloorDbm;
    }
    return bins;
}

} // namespace sdl

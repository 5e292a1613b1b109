#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace sdl {

/// Uniformly sampled real traveling-wave record, in root-watt units (Z0 = 50 ohm).
/// Sample i sits at absolute index start_index + i of the simulation clock.
struct SampleBuffer {
    double sample_rate = 0.0;
    std::vector<double> samples;
    std::int64_t start_index = 0;

    std::size_t size() const noexcept { return samples.size(); }
    bool empty() const noexcept { return samples.empty(); }

    /// Sample at absolute index n, zero outside the record.
    double at_absolute(std::int64_t n) const noexcept
    {
        const std::int64_t i = n - start_index;
        if (i < 0 || i >= static_cast<std::int64_t>(samples.size()))
            return 0.0;
        return samples[static_cast<std::size_t>(i)];
    }

    double energy() const noexcept;
};

struct Phasor {
    double frequency = 0.0;
    double amplitude = 0.0;
    double phase = 0.0; // (-pi, pi]

    std::complex<double> value() const { return std::polar(amplitude, phase); }
    static Phasor from_complex(double frequency, std::complex<double> c);
};

struct PhasorMeasurement {
    Phasor phasor;
    std::size_t window_len = 0; // after integer-cycle adjustment
};

enum class Window { rectangular, hann, flattop };

/// How power_spectrum reconciles a buffer whose length differs from fft_len.
enum class FftFit { truncate, zero_pad };

struct SpectrumBin {
    double frequency;
    double power_dbm;
};

/// Reported level of an empty bin.
inline constexpr double kPowerFloorDbm = -300.0;

/// Wrap an angle to (-pi, pi].
double wrap_phase(double radians) noexcept;

/// Peak wave amplitude (root-watt) to dBm: 10 log10(a^2 / 2 / 1 mW).
double wave_to_dbm(double amplitude) noexcept;
double dbm_to_wave(double dbm) noexcept;

SampleBuffer make_tone(double frequency, double amplitude, double phase, std::size_t n_samples,
                       double sample_rate);

/// Raised-cosine gated tone: silent before t_start, rises over t_rise, holds for t_hold,
/// falls over t_rise. The carrier phase is referenced to the simulation origin.
SampleBuffer make_burst(double frequency, double amplitude, double t_start, double t_rise,
                        double t_hold, double sample_rate);

/// Complex Fourier coefficient at `frequency`, scaled so that A cos(2 pi f n / fs + phi)
/// yields (A, phi). The window is shortened to the nearest whole number of cycles.
PhasorMeasurement extract_phasor(const SampleBuffer& buffer, double frequency,
                                 std::size_t window_start, std::size_t window_len);

/// Same as extract_phasor but without window adjustment; the caller guarantees coherence.
std::complex<double> coherent_phasor(const SampleBuffer& buffer, double frequency,
                                     std::size_t window_start, std::size_t window_len);

/// One-sided power spectrum in dBm. fft_len must be a power of two.
std::vector<SpectrumBin> power_spectrum(const SampleBuffer& buffer, Window window,
                                        std::size_t fft_len, FftFit fit = FftFit::truncate);

} // namespace sdl

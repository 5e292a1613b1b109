#pragma once

#include <array>
#include <complex>
#include <vector>

namespace sdl {

/// Second-order section, transposed direct form II.
/// H(z) = (b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2)
struct Biquad {
    double b0 = 1.0, b1 = 0.0, b2 = 0.0;
    double a1 = 0.0, a2 = 0.0;

    double s1 = 0.0, s2 = 0.0;

    double process(double x) noexcept
    {
        const double y = b0 * x + s1;
        s1 = b1 * x - a1 * y + s2;
        s2 = b2 * x - a2 * y;
        return y;
    }

    void reset() noexcept { s1 = s2 = 0.0; }

    /// Response at normalized angular frequency omega (radians/sample).
    std::complex<double> response(double omega) const;
};

class BiquadCascade {
public:
    BiquadCascade() = default;
    BiquadCascade(std::vector<Biquad> sections, double gain);

    double process(double x) noexcept
    {
        double y = x * gain_;
        for (auto& s : sections_)
            y = s.process(y);
        return y;
    }

    void reset() noexcept;
    bool empty() const noexcept { return sections_.empty(); }
    std::size_t order() const noexcept { return 2 * sections_.size(); }

    std::complex<double> response(double omega) const;

    /// Group delay in samples at omega, by symmetric phase difference.
    double group_delay(double omega) const;

private:
    std::vector<Biquad> sections_;
    double gain_ = 1.0;
};

/// Bilinear map s = k (1 - z^-1)/(1 + z^-1) of a rational function with
/// numerator/denominator coefficients given in ascending powers of s.
Biquad bilinear(const std::array<double, 3>& num_s, const std::array<double, 3>& den_s, double k);

/// Bilinear constant that maps analog frequency f_warp exactly onto digital f_warp.
double prewarp_constant(double f_warp, double sample_rate);

/// Butterworth band-pass of total order `order` (even), unity gain and zero phase at
/// f_center, -3 dB edges bandwidth apart. The analog edges are chosen so that the
/// geometric centre survives the bilinear map at exactly f_center.
BiquadCascade butterworth_bandpass(double f_center, double bandwidth, int order, double sample_rate);

} // namespace sdl

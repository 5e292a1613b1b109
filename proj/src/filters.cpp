#include "sdl/filters.hpp"

#include "sdl/errors.hpp"

#include <cmath>
#include <numbers>

namespace sdl {

std::complex<double> Biquad::response(double omega) const
{
    const std::complex<double> z1 = std::polar(1.0, -omega);
    const std::complex<double> z2 = z1 * z1;
    return (b0 + b1 * z1 + b2 * z2) / (1.0 + a1 * z1 + a2 * z2);
}

BiquadCascade::BiquadCascade(std::vector<Biquad> sections, double gain)
    : sections_(std::move(sections)), gain_(gain)
{
}

void BiquadCascade::reset() noexcept
{
    for (auto& s : sections_)
        s.reset();
}

std::complex<double> BiquadCascade::response(double omega) const
{
    std::complex<double> h = gain_;
    for (const auto& s : sections_)
        h *= s.response(omega);
    return h;
}

double BiquadCascade::group_delay(double omega) const
{
    const double h = 1e-6;
    const auto ratio = response(omega + h) / response(omega - h);
    return -std::arg(ratio) / (2.0 * h);
}

Biquad bilinear(const std::array<double, 3>& num_s, const std::array<double, 3>& den_s, double k)
{
    // c0 + c1 s + c2 s^2 with s = k(1-z)/(1+z), multiplied through by (1+z)^2:
    // c0 (1 + 2z + z^2) + c1 k (1 - z^2) + c2 k^2 (1 - 2z + z^2)
    auto map = [k](const std::array<double, 3>& c) {
        const double k2 = k * k;
        return std::array<double, 3>{c[0] + c[1] * k + c[2] * k2, 2.0 * c[0] - 2.0 * c[2] * k2,
                                     c[0] - c[1] * k + c[2] * k2};
    };
    const auto b = map(num_s);
    const auto a = map(den_s);
    if (a[0] == 0.0)
        throw DomainError("bilinear: degenerate denominator");
    Biquad q;
    q.b0 = b[0] / a[0];
    q.b1 = b[1] / a[0];
    q.b2 = b[2] / a[0];
    q.a1 = a[1] / a[0];
    q.a2 = a[2] / a[0];
    return q;
}

double prewarp_constant(double f_warp, double sample_rate)
{
    const double w = 2.0 * std::numbers::pi * f_warp;
    return w / std::tan(w / (2.0 * sample_rate));
}

BiquadCascade butterworth_bandpass(double f_center, double bandwidth, int order, double sample_rate)
{
    if (order <= 0 || order % 2 != 0)
        throw RangeError("butterworth_bandpass: order must be a positive even integer");
    if (!(bandwidth > 0.0 && bandwidth < f_center))
        throw RangeError("butterworth_bandpass: need 0 < bandwidth < f_center");
    if (!(f_center + bandwidth / 2.0 < sample_rate / 2.0))
        throw RangeError("butterworth_bandpass: upper band edge beyond Nyquist");

    const double pi = std::numbers::pi;
    auto warp = [&](double f) { return std::tan(pi * f / sample_rate); };
    const double target = warp(f_center) * warp(f_center);

    // Lower edge f1 with warp(f1) * warp(f1 + bandwidth) == warp(f_center)^2.
    double lo = std::max(0.0, f_center - bandwidth);
    double hi = f_center;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (warp(mid) * warp(mid + bandwidth) < target)
            lo = mid;
        else
            hi = mid;
    }
    const double f1 = 0.5 * (lo + hi);
    const double w1 = warp(f1);
    const double w2 = warp(f1 + bandwidth);
    const double w0sq = w1 * w2;
    const double bw = w2 - w1;

    // Low-pass prototype poles, then s^2 - p B s + w0^2 = 0 for each.
    const int n = order / 2;
    std::vector<std::complex<double>> upper;
    for (int k = 0; k < n; ++k) {
        const auto p = std::polar(1.0, pi * (2.0 * k + n + 1.0) / (2.0 * n));
        const auto disc = std::sqrt(p * p * bw * bw - 4.0 * w0sq);
        for (const auto& q : {(p * bw + disc) / 2.0, (p * bw - disc) / 2.0})
            if (q.imag() > 0.0)
                upper.push_back(q);
    }
    if (static_cast<int>(upper.size()) != n)
        throw DomainError("butterworth_bandpass: band too wide for a pole-pair realization");

    std::vector<Biquad> sections;
    sections.reserve(upper.size());
    for (const auto& q : upper) {
        // bw s / (s^2 - 2 Re(q) s + |q|^2), with k = 1 since the edges are already warped.
        sections.push_back(bilinear({0.0, bw, 0.0}, {std::norm(q), -2.0 * q.real(), 1.0}, 1.0));
    }
    const auto h = BiquadCascade(sections, 1.0).response(2.0 * pi * f_center / sample_rate);
    const double gain = (h.real() >= 0.0 ? 1.0 : -1.0) / std::abs(h);
    return BiquadCascade(std::move(sections), gain);
}

} // namespace sdl

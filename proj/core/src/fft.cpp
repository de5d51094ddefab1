#include "sitqc/fft.hpp"

#include <numbers>
#include <stdexcept>

namespace sitqc {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t next_power_of_two(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

namespace {

void fft_inplace(std::vector<std::complex<double>>& a, bool inverse) {
    const std::size_t n = a.size();
    if (!is_power_of_two(n)) throw std::invalid_argument("fft: size must be a power of two");

    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }

    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = 2.0 * std::numbers::pi / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t j = 0; j < len / 2; ++j) {
                // Refresh the twiddle periodically to keep accumulation error
                // negligible for large transforms.
                if ((j & 63u) == 0 && j != 0) {
                    const double a2 = ang * static_cast<double>(j);
                    w = {std::cos(a2), std::sin(a2)};
                }
                const std::complex<double> u = a[i + j];
                const std::complex<double> v = a[i + j + len / 2] * w;
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
                w *= wlen;
            }
        }
    }

    if (inverse) {
        const double inv = 1.0 / static_cast<double>(n);
        for (auto& x : a) x *= inv;
    }
}

}  // namespace

void fft(std::vector<std::complex<double>>& a) { fft_inplace(a, false); }
void ifft(std::vector<std::complex<double>>& a) { fft_inplace(a, true); }

std::vector<double> power_spectrum(std::span<const double> x, std::size_t nfft) {
    if (nfft == 0) nfft = next_power_of_two(x.size());
    if (!is_power_of_two(nfft) || nfft < x.size())
        throw std::invalid_argument("power_spectrum: nfft must be a power of two >= signal length");

    std::vector<std::complex<double>> buf(nfft);
    for (std::size_t i = 0; i < x.size(); ++i) buf[i] = x[i];
    fft(buf);

    std::vector<double> p(nfft / 2 + 1);
    for (std::size_t k = 0; k < p.size(); ++k) p[k] = std::norm(buf[k]);
    return p;
}

}  // namespace sitqc

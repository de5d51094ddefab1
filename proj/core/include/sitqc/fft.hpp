#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace sitqc {

bool is_power_of_two(std::size_t n);
std::size_t next_power_of_two(std::size_t n);

/// In-place radix-2 FFT; a.size() must be a power of two.
void fft(std::vector<std::complex<double>>& a);
void ifft(std::vector<std::complex<double>>& a);

/// |X_k|^2 for k = 0..nfft/2 of the zero-padded (rectangular-window) signal.
/// nfft must be a power of two >= x.size(); nfft == 0 picks the next power
/// of two automatically.
std::vector<double> power_spectrum(std::span<const double> x, std::size_t nfft = 0);

}  // namespace sitqc

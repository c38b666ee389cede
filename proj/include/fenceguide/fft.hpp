#ifndef FENCEGUIDE_FFT_HPP
#define FENCEGUIDE_FFT_HPP

#include <complex>
#include <vector>

namespace fenceguide {

/// In-place iterative radix-2 FFT. Size must be a power of two.
/// Forward transform, no normalization.
void fft_inplace(std::vector<std::complex<double>>& values);

/// Row-major 2D forward FFT over a width x height grid (both powers of two).
void fft2d_inplace(std::vector<std::complex<double>>& grid, int width, int height);

int next_pow2(int n);

} // namespace fenceguide

#endif

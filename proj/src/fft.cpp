#include "fenceguide/fft.hpp"

#include <cmath>

#include "fenceguide/error.hpp"

namespace fenceguide {

int next_pow2(int n) {
    int p = 1;
    while (p < n) p <<= 1;
    return p;
}

void fft_inplace(std::vector<std::complex<double>>& values) {
    const std::size_t n = values.size();
    if (n == 0 || (n & (n - 1)) != 0)
        raise(ErrorKind::InvalidArgument, "FFT size must be a power of two");
    if (n == 1) return;

    // Bit-reversal permutation.
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(values[i], values[j]);
    }

    for (std::size_t len = 2; len <= n; len <<= 1) {
        double angle = -2.0 * M_PI / static_cast<double>(len);
        std::complex<double> wlen(std::cos(angle), std::sin(angle));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                std::complex<double> u = values[i + k];
                std::complex<double> v = values[i + k + len / 2] * w;
                values[i + k] = u + v;
                values[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

void fft2d_inplace(std::vector<std::complex<double>>& grid, int width, int height) {
    if (grid.size() != static_cast<std::size_t>(width) * height)
        raise(ErrorKind::InvalidArgument, "grid size does not match dimensions");

    std::vector<std::complex<double>> line;
    line.resize(width);
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) line[c] = grid[static_cast<std::size_t>(r) * width + c];
        fft_inplace(line);
        for (int c = 0; c < width; ++c) grid[static_cast<std::size_t>(r) * width + c] = line[c];
    }
    line.resize(height);
    for (int c = 0; c < width; ++c) {
        for (int r = 0; r < height; ++r) line[r] = grid[static_cast<std::size_t>(r) * width + c];
        fft_inplace(line);
        for (int r = 0; r < height; ++r) grid[static_cast<std::size_t>(r) * width + c] = line[r];
    }
}

} // namespace fenceguide

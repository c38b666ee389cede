// Independent reference implementations the tests compare against. Each is
// written the dumbest possible way (direct summation, brute-force scans) so
// agreement with the library actually means something.
#ifndef TESTS_ORACLES_HPP
#define TESTS_ORACLES_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "fenceguide/dcl.hpp"
#include "fenceguide/image.hpp"
#include "fenceguide/segmenter.hpp"

namespace oracle {

// Pixelwise AND of two equally sized masks.
fenceguide::BinaryMask and_masks(const fenceguide::BinaryMask& a, const fenceguide::BinaryMask& b);

// O(N^4) direct-summation DFT magnitude with the same conventions as the
// library: zero-pad to the next power of two per axis, DC moved to
// (width/2, height/2). Returns row-major magnitudes of the padded size.
struct DirectSpectrum {
    int width = 0;
    int height = 0;
    std::vector<double> mag;

    double at(int x, int y) const { return mag[static_cast<std::size_t>(y) * width + x]; }
};
DirectSpectrum dft_direct(const fenceguide::BinaryMask& mask);

// Brute-force directional connectivity: per pixel, every feature response
// via direct 5x5 summation with zero padding; winner is the lowest argmax.
struct BruteConnectivity {
    int width = 0;
    int height = 0;
    std::vector<double> values;
    std::vector<std::uint8_t> winner;
};
BruteConnectivity brute_connectivity(const std::vector<double>& y, int width, int height);

// Whole-network forward pass re-derived from the model weights alone:
// conv3x3 (zero-padded) + ReLU twice, conv3x3 + sigmoid. Returns the
// output plane row-major.
std::vector<double> naive_forward(const fenceguide::SegModel& model, const fenceguide::Tensor& x);

// Writes a minimal 8-bit RGB PNG (color type 2), for exercising the
// color-to-luma load path. pixels is row-major RGBRGB...
void write_rgb_png(const std::string& path, int width, int height,
                   const std::vector<std::uint8_t>& pixels);

} // namespace oracle

#endif

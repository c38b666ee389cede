#ifndef FENCEGUIDE_EDGES_HPP
#define FENCEGUIDE_EDGES_HPP

#include <cstdint>
#include <vector>

#include "fenceguide/image.hpp"

namespace fenceguide {

struct CannyParams {
    double sigma = 1.4; // Gaussian pre-smoothing, pixels
    double low = 30.0;  // hysteresis thresholds on the [0,255] L2 gradient scale
    double high = 90.0;

    void validate() const {
        if (sigma <= 0.0) raise(ErrorKind::InvalidArgument, "sigma must be positive");
        if (low <= 0.0 || low > high)
            raise(ErrorKind::InvalidArgument, "thresholds must satisfy 0 < low <= high");
    }
};

struct SobelResult {
    FloatImage gx;
    FloatImage gy;
    FloatImage magnitude;             // L2 norm
    std::vector<std::uint8_t> orientation; // per pixel, quantized: 0=0deg 1=45 2=90 3=135
};

/// Separable Gaussian convolution, kernel radius ceil(3*sigma), borders
/// handled by clamp-to-edge replication. Kernel is normalized to sum 1.
FloatImage gaussian_blur(const GrayImage& img, double sigma);
FloatImage gaussian_blur(const FloatImage& img, double sigma);

/// 3x3 Sobel gradients. Border pixels carry zero gradient. Requires
/// at least a 3x3 input.
SobelResult sobel_gradients(const FloatImage& img);
SobelResult sobel_gradients(const GrayImage& img);

/// Full detector: blur, gradients, non-maximum suppression along the
/// quantized orientation, then double-threshold hysteresis where weak
/// pixels survive iff 8-connected (transitively) to a strong pixel.
BinaryMask canny(const GrayImage& img, const CannyParams& params);

} // namespace fenceguide

#endif

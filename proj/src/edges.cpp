#include "fenceguide/edges.hpp"

#include <cmath>
#include <vector>

namespace fenceguide {

namespace {

std::vector<double> gaussian_kernel(double sigma) {
    int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int j = -radius; j <= radius; ++j) {
        double v = std::exp(-(static_cast<double>(j) * j) / (2.0 * sigma * sigma));
        k[j + radius] = v;
        sum += v;
    }
    for (double& v : k) v /= sum;
    return k;
}

inline int clamp_index(int i, int n) { return i < 0 ? 0 : (i >= n ? n - 1 : i); }

FloatImage blur_impl(const FloatImage& img, double sigma) {
    if (sigma <= 0.0) raise(ErrorKind::InvalidArgument, "sigma must be positive");
    const std::vector<double> k = gaussian_kernel(sigma);
    const int radius = static_cast<int>(k.size() / 2);
    const int w = img.width();
    const int h = img.height();

    FloatImage horiz(w, h);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            double acc = 0.0;
            for (int j = -radius; j <= radius; ++j)
                acc += k[j + radius] * img.at(r, clamp_index(c + j, w));
            horiz.at(r, c) = acc;
        }
    }
    FloatImage out(w, h);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            double acc = 0.0;
            for (int j = -radius; j <= radius; ++j)
                acc += k[j + radius] * horiz.at(clamp_index(r + j, h), c);
            out.at(r, c) = acc;
        }
    }
    return out;
}

FloatImage to_float(const GrayImage& img) {
    FloatImage out(img.width(), img.height());
    for (int r = 0; r < img.height(); ++r)
        for (int c = 0; c < img.width(); ++c)
            out.at(r, c) = static_cast<double>(img.at(r, c));
    return out;
}

std::uint8_t quantize_orientation(double gx, double gy) {
    double deg = std::atan2(gy, gx) * 180.0 / M_PI;
    if (deg < 0.0) deg += 180.0;
    if (deg >= 180.0) deg -= 180.0;
    if (deg < 22.5 || deg >= 157.5) return 0;
    if (deg < 67.5) return 1;
    if (deg < 112.5) return 2;
    return 3;
}

} // namespace

FloatImage gaussian_blur(const FloatImage& img, double sigma) { return blur_impl(img, sigma); }

FloatImage gaussian_blur(const GrayImage& img, double sigma) {
    return blur_impl(to_float(img), sigma);
}

SobelResult sobel_gradients(const FloatImage& img) {
    const int w = img.width();
    const int h = img.height();
    if (w < 3 || h < 3)
        raise(ErrorKind::ImageTooSmall, "sobel needs at least a 3x3 image");

    SobelResult res{FloatImage(w, h), FloatImage(w, h), FloatImage(w, h),
                    std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h, 0)};
    for (int r = 1; r < h - 1; ++r) {
        for (int c = 1; c < w - 1; ++c) {
            double gx = -img.at(r - 1, c - 1) + img.at(r - 1, c + 1)
                        - 2.0 * img.at(r, c - 1) + 2.0 * img.at(r, c + 1)
                        - img.at(r + 1, c - 1) + img.at(r + 1, c + 1);
            double gy = -img.at(r - 1, c - 1) - 2.0 * img.at(r - 1, c) - img.at(r - 1, c + 1)
                        + img.at(r + 1, c - 1) + 2.0 * img.at(r + 1, c) + img.at(r + 1, c + 1);
            res.gx.at(r, c) = gx;
            res.gy.at(r, c) = gy;
            res.magnitude.at(r, c) = std::hypot(gx, gy);
            res.orientation[static_cast<std::size_t>(r) * w + c] = quantize_orientation(gx, gy);
        }
    }
    return res;
}

SobelResult sobel_gradients(const GrayImage& img) { return sobel_gradients(to_float(img)); }

BinaryMask canny(const GrayImage& img, const CannyParams& params) {
    params.validate();
    const int w = img.width();
    const int h = img.height();

    FloatImage blurred = gaussian_blur(img, params.sigma);
    SobelResult grad = sobel_gradients(blurred);

    // Sobel on a [0,255] image reaches magnitudes up to ~1443; rescale by 1/4
    // so thresholds live on the conventional [0,255]-ish scale of a single
    // derivative step.
    const double scale = 0.25;

    // Non-maximum suppression. Ties across the edge are broken toward the
    // smaller (row, col) neighbor so plateaus thin to one pixel.
    FloatImage thin(w, h, 0.0);
    for (int r = 1; r < h - 1; ++r) {
        for (int c = 1; c < w - 1; ++c) {
            double m = grad.magnitude.at(r, c);
            if (m <= 0.0) continue;
            int dr1, dc1, dr2, dc2;
            switch (grad.orientation[static_cast<std::size_t>(r) * w + c]) {
                case 0: dr1 = 0;  dc1 = -1; dr2 = 0; dc2 = 1;  break; // horizontal gradient
                case 1: dr1 = -1; dc1 = -1; dr2 = 1; dc2 = 1;  break;
                case 2: dr1 = -1; dc1 = 0;  dr2 = 1; dc2 = 0;  break; // vertical gradient
                default: dr1 = -1; dc1 = 1; dr2 = 1; dc2 = -1; break;
            }
            double m1 = grad.magnitude.at(r + dr1, c + dc1);
            double m2 = grad.magnitude.at(r + dr2, c + dc2);
            if (m > m1 && m >= m2) thin.at(r, c) = m * scale;
        }
    }

    // Double threshold + hysteresis as a flood fill seeded at strong pixels.
    std::vector<std::uint8_t> state(static_cast<std::size_t>(w) * h, 0); // 1 weak, 2 strong
    std::vector<int> stack;
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            double m = thin.at(r, c);
            if (m >= params.high) {
                state[static_cast<std::size_t>(r) * w + c] = 2;
                stack.push_back(r * w + c);
            } else if (m >= params.low) {
                state[static_cast<std::size_t>(r) * w + c] = 1;
            }
        }
    }

    BinaryMask out(w, h);
    while (!stack.empty()) {
        int p = stack.back();
        stack.pop_back();
        int r = p / w, c = p % w;
        if (out.at(r, c)) continue;
        out.set(r, c, 1);
        for (int dr = -1; dr <= 1; ++dr) {
            for (int dc = -1; dc <= 1; ++dc) {
                int nr = r + dr, nc = c + dc;
                if (nr < 0 || nr >= h || nc < 0 || nc >= w) continue;
                if (state[static_cast<std::size_t>(nr) * w + nc] >= 1 && !out.at(nr, nc))
                    stack.push_back(nr * w + nc);
            }
        }
    }
    return out;
}

} // namespace fenceguide

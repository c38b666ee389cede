#include "oracles.hpp"

#include <cmath>
#include <complex>
#include <cstdio>
#include <stdexcept>

#include <zlib.h>

namespace oracle {

using fenceguide::BinaryMask;
using fenceguide::SegModel;
using fenceguide::Tensor;

BinaryMask and_masks(const BinaryMask& a, const BinaryMask& b) {
    if (a.width() != b.width() || a.height() != b.height())
        throw std::runtime_error("and_masks: size mismatch");
    BinaryMask out(a.width(), a.height());
    for (int r = 0; r < a.height(); ++r)
        for (int c = 0; c < a.width(); ++c)
            out.set(r, c, a.at(r, c) && b.at(r, c) ? 1 : 0);
    return out;
}

DirectSpectrum dft_direct(const BinaryMask& mask) {
    int pw = 1, ph = 1;
    while (pw < mask.width()) pw <<= 1;
    while (ph < mask.height()) ph <<= 1;

    DirectSpectrum out;
    out.width = pw;
    out.height = ph;
    out.mag.assign(static_cast<std::size_t>(pw) * ph, 0.0);

    const double two_pi = 8.0 * std::atan(1.0);
    for (int ky = 0; ky < ph; ++ky) {
        for (int kx = 0; kx < pw; ++kx) {
            std::complex<double> acc(0.0, 0.0);
            for (int y = 0; y < mask.height(); ++y) {
                for (int x = 0; x < mask.width(); ++x) {
                    if (!mask.at(y, x)) continue;
                    const double phase = -two_pi * (static_cast<double>(kx) * x / pw +
                                                    static_cast<double>(ky) * y / ph);
                    acc += std::complex<double>(std::cos(phase), std::sin(phase));
                }
            }
            // DC belongs at (pw/2, ph/2) after the shift.
            const int sx = (kx + pw / 2) % pw;
            const int sy = (ky + ph / 2) % ph;
            out.mag[static_cast<std::size_t>(sy) * pw + sx] = std::abs(acc);
        }
    }
    return out;
}

BruteConnectivity brute_connectivity(const std::vector<double>& y, int width, int height) {
    const auto& features = fenceguide::directional_features();
    BruteConnectivity out;
    out.width = width;
    out.height = height;
    out.values.assign(static_cast<std::size_t>(width) * height, 0.0);
    out.winner.assign(static_cast<std::size_t>(width) * height, 0);

    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            double best = -1e300;
            std::uint8_t best_idx = 0;
            for (std::size_t f = 0; f < features.size(); ++f) {
                double sum = 0.0;
                for (int i = 0; i < 5; ++i) {
                    for (int j = 0; j < 5; ++j) {
                        if (!features[f].cells[i][j]) continue;
                        const int rr = r + i - 2;
                        const int cc = c + j - 2;
                        if (rr < 0 || rr >= height || cc < 0 || cc >= width) continue;
                        sum += y[static_cast<std::size_t>(rr) * width + cc];
                    }
                }
                if (sum > best) {
                    best = sum;
                    best_idx = static_cast<std::uint8_t>(f);
                }
            }
            out.values[static_cast<std::size_t>(r) * width + c] = best;
            out.winner[static_cast<std::size_t>(r) * width + c] = best_idx;
        }
    }
    return out;
}

namespace {

std::vector<double> conv3x3(const std::vector<double>& in, int channels, int height, int width,
                            const std::vector<double>& w, const std::vector<double>& b,
                            int out_ch) {
    std::vector<double> out(static_cast<std::size_t>(out_ch) * height * width, 0.0);
    for (int o = 0; o < out_ch; ++o) {
        for (int r = 0; r < height; ++r) {
            for (int c = 0; c < width; ++c) {
                double acc = b[o];
                for (int i = 0; i < channels; ++i) {
                    for (int dr = 0; dr < 3; ++dr) {
                        for (int dc = 0; dc < 3; ++dc) {
                            const int rr = r + dr - 1;
                            const int cc = c + dc - 1;
                            if (rr < 0 || rr >= height || cc < 0 || cc >= width) continue;
                            const double wv =
                                w[((static_cast<std::size_t>(o) * channels + i) * 3 + dr) * 3 + dc];
                            acc += wv * in[(static_cast<std::size_t>(i) * height + rr) * width + cc];
                        }
                    }
                }
                out[(static_cast<std::size_t>(o) * height + r) * width + c] = acc;
            }
        }
    }
    return out;
}

} // namespace

std::vector<double> naive_forward(const SegModel& model, const Tensor& x) {
    const int h = x.height;
    const int w = x.width;

    std::vector<double> a = conv3x3(x.v, model.layers[0].in_ch, h, w, model.layers[0].w,
                                    model.layers[0].b, model.layers[0].out_ch);
    for (double& v : a) v = v > 0.0 ? v : 0.0;
    a = conv3x3(a, model.layers[1].in_ch, h, w, model.layers[1].w, model.layers[1].b,
                model.layers[1].out_ch);
    for (double& v : a) v = v > 0.0 ? v : 0.0;
    a = conv3x3(a, model.layers[2].in_ch, h, w, model.layers[2].w, model.layers[2].b,
                model.layers[2].out_ch);
    for (double& v : a) v = 1.0 / (1.0 + std::exp(-v));
    return a;
}

namespace {

void push_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

void push_chunk(std::vector<std::uint8_t>& out, const char type[4],
                const std::vector<std::uint8_t>& data) {
    push_be32(out, static_cast<std::uint32_t>(data.size()));
    std::vector<std::uint8_t> body(type, type + 4);
    body.insert(body.end(), data.begin(), data.end());
    out.insert(out.end(), body.begin(), body.end());
    push_be32(out, static_cast<std::uint32_t>(
                       crc32(0L, body.data(), static_cast<uInt>(body.size()))));
}

} // namespace

void write_rgb_png(const std::string& path, int width, int height,
                   const std::vector<std::uint8_t>& pixels) {
    if (pixels.size() != static_cast<std::size_t>(width) * height * 3)
        throw std::runtime_error("write_rgb_png: bad buffer size");

    std::vector<std::uint8_t> raw;
    raw.reserve(static_cast<std::size_t>(height) * (1 + 3 * width));
    for (int r = 0; r < height; ++r) {
        raw.push_back(0); // filter: none
        const std::uint8_t* row = pixels.data() + static_cast<std::size_t>(r) * width * 3;
        raw.insert(raw.end(), row, row + static_cast<std::size_t>(width) * 3);
    }
    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> compressed(bound);
    if (compress2(compressed.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 9) != Z_OK)
        throw std::runtime_error("write_rgb_png: deflate failed");
    compressed.resize(bound);

    std::vector<std::uint8_t> png = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
    std::vector<std::uint8_t> ihdr;
    push_be32(ihdr, static_cast<std::uint32_t>(width));
    push_be32(ihdr, static_cast<std::uint32_t>(height));
    ihdr.push_back(8); // bit depth
    ihdr.push_back(2); // RGB
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);
    push_chunk(png, "IHDR", ihdr);
    push_chunk(png, "IDAT", compressed);
    push_chunk(png, "IEND", {});

    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("write_rgb_png: cannot open " + path);
    std::fwrite(png.data(), 1, png.size(), f);
    std::fclose(f);
}

} // namespace oracle

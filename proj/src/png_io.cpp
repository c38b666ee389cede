// Minimal PNG reader/writer for the formats this project needs: 8-bit
// grayscale output, and 8-bit gray/RGB/RGBA/gray+alpha input (color is
// collapsed with the fixed luma weights). Compression is delegated to zlib;
// the chunk and filter layers are implemented here so file bytes stay
// deterministic across runs.

#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

#include <zlib.h>

#include "fenceguide/image.hpp"

namespace fenceguide {
namespace detail {

namespace {

constexpr int kCompressionLevel = 6; // fixed so identical pixels give identical files

std::uint32_t be32(const std::uint8_t* p) {
    return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
           (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

void push_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

void push_chunk(std::vector<std::uint8_t>& out, const char type[4],
                const std::vector<std::uint8_t>& data) {
    push_be32(out, static_cast<std::uint32_t>(data.size()));
    std::size_t type_pos = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), data.begin(), data.end());
    std::uint32_t crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, out.data() + type_pos, static_cast<uInt>(4 + data.size()));
    push_be32(out, crc);
}

int paeth_predictor(int a, int b, int c) {
    int p = a + b - c;
    int pa = std::abs(p - a);
    int pb = std::abs(p - b);
    int pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

} // namespace

std::vector<std::uint8_t> encode_png_gray8(const GrayImage& img) {
    const int w = img.width();
    const int h = img.height();

    // Filter type None on every scanline.
    std::vector<std::uint8_t> raw;
    raw.reserve(static_cast<std::size_t>(h) * (w + 1));
    for (int r = 0; r < h; ++r) {
        raw.push_back(0);
        const std::uint8_t* row = img.data().data() + static_cast<std::size_t>(r) * w;
        raw.insert(raw.end(), row, row + w);
    }

    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> compressed(bound);
    if (compress2(compressed.data(), &bound, raw.data(), static_cast<uLong>(raw.size()),
                  kCompressionLevel) != Z_OK)
        raise(ErrorKind::Io, "PNG compression failed");
    compressed.resize(bound);

    std::vector<std::uint8_t> out = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
    std::vector<std::uint8_t> ihdr;
    push_be32(ihdr, static_cast<std::uint32_t>(w));
    push_be32(ihdr, static_cast<std::uint32_t>(h));
    ihdr.push_back(8); // bit depth
    ihdr.push_back(0); // color type: grayscale
    ihdr.push_back(0); // compression
    ihdr.push_back(0); // filter method
    ihdr.push_back(0); // no interlace
    push_chunk(out, "IHDR", ihdr);
    push_chunk(out, "IDAT", compressed);
    push_chunk(out, "IEND", {});
    return out;
}

GrayImage decode_png(const std::vector<std::uint8_t>& bytes, const std::string& path) {
    std::size_t pos = 8;
    bool have_ihdr = false;
    std::uint32_t width = 0, height = 0;
    int color_type = -1;
    int channels = 0;
    std::vector<std::uint8_t> idat;

    while (pos + 12 <= bytes.size()) {
        std::uint32_t length = be32(&bytes[pos]);
        if (pos + 12 + static_cast<std::size_t>(length) > bytes.size())
            raise(ErrorKind::FileMalformed, "truncated PNG chunk: " + path);
        const std::uint8_t* type = &bytes[pos + 4];
        const std::uint8_t* data = &bytes[pos + 8];

        std::uint32_t crc = crc32(0L, Z_NULL, 0);
        crc = crc32(crc, type, 4 + length);
        if (crc != be32(data + length))
            raise(ErrorKind::FileMalformed, "PNG chunk CRC mismatch: " + path);

        std::string name(reinterpret_cast<const char*>(type), 4);
        if (!have_ihdr && name != "IHDR")
            raise(ErrorKind::FileMalformed, "PNG missing IHDR: " + path);

        if (name == "IHDR") {
            if (length != 13) raise(ErrorKind::FileMalformed, "bad IHDR length: " + path);
            width = be32(data);
            height = be32(data + 4);
            int bit_depth = data[8];
            color_type = data[9];
            int interlace = data[12];
            if (width == 0 || height == 0 || width > (1u << 24) || height > (1u << 24))
                raise(ErrorKind::FileMalformed, "bad PNG dimensions: " + path);
            if (data[10] != 0 || data[11] != 0)
                raise(ErrorKind::FileMalformed, "bad PNG compression/filter method: " + path);
            if (bit_depth != 8)
                raise(ErrorKind::FileFormat,
                      "only 8-bit PNGs are supported (" + std::to_string(bit_depth) + "-bit): " + path);
            if (interlace != 0)
                raise(ErrorKind::FileFormat, "interlaced PNGs are not supported: " + path);
            switch (color_type) {
                case 0: channels = 1; break;
                case 2: channels = 3; break;
                case 4: channels = 2; break;
                case 6: channels = 4; break;
                default:
                    raise(ErrorKind::FileFormat,
                          "unsupported PNG color type " + std::to_string(color_type) + ": " + path);
            }
            have_ihdr = true;
        } else if (name == "IDAT") {
            idat.insert(idat.end(), data, data + length);
        } else if (name == "IEND") {
            break;
        }
        // Ancillary chunks are skipped.
        pos += 12 + length;
    }

    if (!have_ihdr) raise(ErrorKind::FileMalformed, "PNG missing IHDR: " + path);
    if (idat.empty()) raise(ErrorKind::FileMalformed, "PNG missing IDAT: " + path);

    const std::size_t stride = static_cast<std::size_t>(width) * channels;
    const std::size_t raw_size = height * (stride + 1);
    std::vector<std::uint8_t> raw(raw_size);
    uLongf dest_len = static_cast<uLongf>(raw_size);
    int zrc = uncompress(raw.data(), &dest_len, idat.data(), static_cast<uLong>(idat.size()));
    if (zrc != Z_OK || dest_len != raw_size)
        raise(ErrorKind::FileMalformed, "PNG inflate failed: " + path);

    // Undo scanline filters in place.
    const int bpp = channels;
    std::vector<std::uint8_t> prior(stride, 0);
    std::vector<std::uint8_t> pixels;
    pixels.reserve(static_cast<std::size_t>(width) * height);

    for (std::uint32_t r = 0; r < height; ++r) {
        std::uint8_t* line = raw.data() + r * (stride + 1);
        std::uint8_t filter = line[0];
        std::uint8_t* cur = line + 1;
        switch (filter) {
            case 0:
                break;
            case 1: // Sub
                for (std::size_t i = bpp; i < stride; ++i) cur[i] = static_cast<std::uint8_t>(cur[i] + cur[i - bpp]);
                break;
            case 2: // Up
                for (std::size_t i = 0; i < stride; ++i) cur[i] = static_cast<std::uint8_t>(cur[i] + prior[i]);
                break;
            case 3: // Average
                for (std::size_t i = 0; i < stride; ++i) {
                    int left = i >= static_cast<std::size_t>(bpp) ? cur[i - bpp] : 0;
                    cur[i] = static_cast<std::uint8_t>(cur[i] + ((left + prior[i]) >> 1));
                }
                break;
            case 4: // Paeth
                for (std::size_t i = 0; i < stride; ++i) {
                    int left = i >= static_cast<std::size_t>(bpp) ? cur[i - bpp] : 0;
                    int up_left = i >= static_cast<std::size_t>(bpp) ? prior[i - bpp] : 0;
                    cur[i] = static_cast<std::uint8_t>(cur[i] + paeth_predictor(left, prior[i], up_left));
                }
                break;
            default:
                raise(ErrorKind::FileMalformed,
                      "bad PNG filter type " + std::to_string(filter) + ": " + path);
        }
        std::memcpy(prior.data(), cur, stride);

        for (std::uint32_t c = 0; c < width; ++c) {
            const std::uint8_t* px = cur + static_cast<std::size_t>(c) * channels;
            switch (color_type) {
                case 0: pixels.push_back(px[0]); break;
                case 4: pixels.push_back(px[0]); break; // gray + alpha: alpha dropped
                case 2: pixels.push_back(luma_from_rgb(px[0], px[1], px[2])); break;
                case 6: pixels.push_back(luma_from_rgb(px[0], px[1], px[2])); break;
            }
        }
    }

    return GrayImage(static_cast<int>(width), static_cast<int>(height), std::move(pixels));
}

} // namespace detail
} // namespace fenceguide

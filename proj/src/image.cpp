#include "fenceguide/image.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>

namespace fenceguide {

namespace detail {
GrayImage decode_png(const std::vector<std::uint8_t>& bytes, const std::string& path);
std::vector<std::uint8_t> encode_png_gray8(const GrayImage& img);
} // namespace detail

BinaryMask shift_horizontal(const BinaryMask& mask, int shift) {
    if (std::abs(shift) >= mask.width())
        raise(ErrorKind::InvalidShift,
              "shift magnitude " + std::to_string(std::abs(shift)) +
                  " must be smaller than width " + std::to_string(mask.width()));
    BinaryMask out(mask.width(), mask.height());
    for (int r = 0; r < mask.height(); ++r) {
        for (int c = 0; c < mask.width(); ++c) {
            int src = c - shift;
            if (src >= 0 && src < mask.width()) out.set(r, c, mask.at(r, src));
        }
    }
    return out;
}

GrayImage shift_horizontal(const GrayImage& img, int shift) {
    if (std::abs(shift) >= img.width())
        raise(ErrorKind::InvalidShift,
              "shift magnitude " + std::to_string(std::abs(shift)) +
                  " must be smaller than width " + std::to_string(img.width()));
    GrayImage out(img.width(), img.height());
    for (int r = 0; r < img.height(); ++r) {
        for (int c = 0; c < img.width(); ++c) {
            int src = c - shift;
            if (src >= 0 && src < img.width()) out.at(r, c) = img.at(r, src);
        }
    }
    return out;
}

BinaryMask binarize(const GrayImage& img, int threshold) {
    BinaryMask out(img.width(), img.height());
    for (int r = 0; r < img.height(); ++r)
        for (int c = 0; c < img.width(); ++c)
            if (img.at(r, c) > threshold) out.set(r, c, 1);
    return out;
}

std::uint8_t luma_from_rgb(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    double y = 0.299 * r + 0.587 * g + 0.114 * b;
    long v = std::lround(y);
    if (v < 0) v = 0;
    if (v > 255) v = 255;
    return static_cast<std::uint8_t>(v);
}

GrayImage mask_to_image(const BinaryMask& mask) {
    GrayImage img(mask.width(), mask.height());
    for (int r = 0; r < mask.height(); ++r)
        for (int c = 0; c < mask.width(); ++c)
            img.at(r, c) = mask.at(r, c) ? 255 : 0;
    return img;
}

BinaryMask image_to_mask(const GrayImage& img) {
    BinaryMask mask(img.width(), img.height());
    for (int r = 0; r < img.height(); ++r)
        for (int c = 0; c < img.width(); ++c)
            if (img.at(r, c) > 127) mask.set(r, c, 1);
    return mask;
}

namespace {

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::error_code ec;
    if (!std::filesystem::exists(path, ec))
        raise(ErrorKind::FileMissing, "no such file: " + path);
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorKind::Io, "cannot open for reading: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (in.bad()) raise(ErrorKind::Io, "read failed: " + path);
    return bytes;
}

void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) raise(ErrorKind::Io, "cannot open for writing: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) raise(ErrorKind::Io, "write failed: " + path);
}

bool has_png_signature(const std::vector<std::uint8_t>& bytes) {
    static const std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
    if (bytes.size() < 8) return false;
    for (int i = 0; i < 8; ++i)
        if (bytes[i] != sig[i]) return false;
    return true;
}

// --- PGM (binary, P5) ---

struct PgmHeaderCursor {
    const std::vector<std::uint8_t>& bytes;
    std::size_t pos = 0;

    // Skips whitespace and '#' comments between header tokens.
    void skip_separators() {
        while (pos < bytes.size()) {
            std::uint8_t c = bytes[pos];
            if (c == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                ++pos;
            } else {
                return;
            }
        }
    }

    long next_int(const std::string& path) {
        skip_separators();
        if (pos >= bytes.size() || bytes[pos] < '0' || bytes[pos] > '9')
            raise(ErrorKind::FileMalformed, "bad PGM header: " + path);
        long v = 0;
        while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') {
            v = v * 10 + (bytes[pos] - '0');
            if (v > 1'000'000'000) raise(ErrorKind::FileMalformed, "bad PGM header: " + path);
            ++pos;
        }
        return v;
    }
};

GrayImage decode_pgm(const std::vector<std::uint8_t>& bytes, const std::string& path) {
    PgmHeaderCursor cur{bytes};
    cur.pos = 2; // past "P5"
    long w = cur.next_int(path);
    long h = cur.next_int(path);
    long maxval = cur.next_int(path);
    if (w < 1 || h < 1) raise(ErrorKind::FileMalformed, "bad PGM dimensions: " + path);
    if (maxval > 255) raise(ErrorKind::FileFormat, "16-bit PGM not supported: " + path);
    if (maxval < 1) raise(ErrorKind::FileMalformed, "bad PGM maxval: " + path);
    // Exactly one whitespace byte separates the header from the raster.
    if (cur.pos >= bytes.size()) raise(ErrorKind::FileMalformed, "truncated PGM: " + path);
    ++cur.pos;
    std::size_t need = static_cast<std::size_t>(w) * h;
    if (bytes.size() - cur.pos < need)
        raise(ErrorKind::FileMalformed, "truncated PGM raster: " + path);
    std::vector<std::uint8_t> pixels(bytes.begin() + cur.pos, bytes.begin() + cur.pos + need);
    return GrayImage(static_cast<int>(w), static_cast<int>(h), std::move(pixels));
}

std::vector<std::uint8_t> encode_pgm(const GrayImage& img) {
    std::string header = "P5\n" + std::to_string(img.width()) + " " +
                         std::to_string(img.height()) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), img.data().begin(), img.data().end());
    return out;
}

std::string lower_extension(const std::string& path) {
    std::string ext = std::filesystem::path(path).extension().string();
    for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return ext;
}

} // namespace

GrayImage load_image(const std::string& path) {
    std::vector<std::uint8_t> bytes = read_file_bytes(path);
    if (has_png_signature(bytes)) return detail::decode_png(bytes, path);
    if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') return decode_pgm(bytes, path);
    raise(ErrorKind::FileFormat, "not a PNG or binary PGM file: " + path);
}

void save_image(const GrayImage& img, const std::string& path) {
    std::string ext = lower_extension(path);
    if (ext == ".png") {
        write_file_bytes(path, detail::encode_png_gray8(img));
    } else if (ext == ".pgm") {
        write_file_bytes(path, encode_pgm(img));
    } else {
        raise(ErrorKind::FileFormat, "unsupported save format (use .png or .pgm): " + path);
    }
}

BinaryMask load_mask(const std::string& path) {
    return image_to_mask(load_image(path));
}

void save_mask(const BinaryMask& mask, const std::string& path) {
    save_image(mask_to_image(mask), path);
}

} // namespace fenceguide

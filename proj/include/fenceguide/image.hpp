#ifndef FENCEGUIDE_IMAGE_HPP
#define FENCEGUIDE_IMAGE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "fenceguide/error.hpp"

namespace fenceguide {

/// 8-bit grayscale image, row-major.
class GrayImage {
public:
    GrayImage() = default;
    GrayImage(int width, int height, std::uint8_t fill = 0)
        : width_(width), height_(height),
          data_(static_cast<std::size_t>(check_dims(width, height)), fill) {}
    GrayImage(int width, int height, std::vector<std::uint8_t> data)
        : width_(width), height_(height), data_(std::move(data)) {
        if (data_.size() != static_cast<std::size_t>(check_dims(width, height)))
            raise(ErrorKind::InvalidArgument, "pixel buffer size does not match dimensions");
    }

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return data_.size(); }

    std::uint8_t at(int row, int col) const { return data_[idx(row, col)]; }
    std::uint8_t& at(int row, int col) { return data_[idx(row, col)]; }

    const std::vector<std::uint8_t>& data() const { return data_; }
    std::vector<std::uint8_t>& data() { return data_; }

    bool operator==(const GrayImage& other) const = default;

private:
    static long long check_dims(int width, int height) {
        if (width < 1 || height < 1)
            raise(ErrorKind::InvalidArgument, "image dimensions must be at least 1x1");
        return static_cast<long long>(width) * height;
    }
    std::size_t idx(int row, int col) const {
        return static_cast<std::size_t>(row) * width_ + col;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> data_;
};

/// Binary mask, row-major, every element 0 or 1.
class BinaryMask {
public:
    BinaryMask() = default;
    BinaryMask(int width, int height, std::uint8_t fill = 0)
        : width_(width), height_(height),
          data_(static_cast<std::size_t>(check_dims(width, height)), check_value(fill)) {}
    BinaryMask(int width, int height, std::vector<std::uint8_t> data)
        : width_(width), height_(height), data_(std::move(data)) {
        if (data_.size() != static_cast<std::size_t>(check_dims(width, height)))
            raise(ErrorKind::InvalidArgument, "mask buffer size does not match dimensions");
        for (std::uint8_t v : data_) check_value(v);
    }

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return data_.size(); }

    std::uint8_t at(int row, int col) const { return data_[idx(row, col)]; }
    void set(int row, int col, std::uint8_t v) { data_[idx(row, col)] = check_value(v); }

    const std::vector<std::uint8_t>& data() const { return data_; }

    std::size_t count_ones() const {
        std::size_t n = 0;
        for (std::uint8_t v : data_) n += v;
        return n;
    }

    bool operator==(const BinaryMask& other) const = default;

private:
    static long long check_dims(int width, int height) {
        if (width < 1 || height < 1)
            raise(ErrorKind::InvalidArgument, "mask dimensions must be at least 1x1");
        return static_cast<long long>(width) * height;
    }
    static std::uint8_t check_value(std::uint8_t v) {
        if (v > 1) raise(ErrorKind::InvalidArgument, "mask values must be 0 or 1");
        return v;
    }
    std::size_t idx(int row, int col) const {
        return static_cast<std::size_t>(row) * width_ + col;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> data_;
};

/// Real-valued image used by filter pipelines between integer stages.
class FloatImage {
public:
    FloatImage() = default;
    FloatImage(int width, int height, double fill = 0.0)
        : width_(width), height_(height),
          data_(static_cast<std::size_t>(width) * height, fill) {
        if (width < 1 || height < 1)
            raise(ErrorKind::InvalidArgument, "image dimensions must be at least 1x1");
    }

    int width() const { return width_; }
    int height() const { return height_; }

    double at(int row, int col) const { return data_[static_cast<std::size_t>(row) * width_ + col]; }
    double& at(int row, int col) { return data_[static_cast<std::size_t>(row) * width_ + col]; }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<double> data_;
};

/// x when x > 0, else 0.
inline int clip_nonneg(int x) { return x > 0 ? x : 0; }
inline double clip_nonneg(double x) { return x > 0.0 ? x : 0.0; }

/// Horizontal shift by `shift` pixels (positive moves content right).
/// Vacated columns are zero-filled; no wraparound.
BinaryMask shift_horizontal(const BinaryMask& mask, int shift);
GrayImage shift_horizontal(const GrayImage& img, int shift);

/// Pixel becomes 1 iff its intensity is strictly above `threshold`.
BinaryMask binarize(const GrayImage& img, int threshold);

/// Fixed luma weights used when loading color inputs.
std::uint8_t luma_from_rgb(std::uint8_t r, std::uint8_t g, std::uint8_t b);

// File I/O. Formats: 8-bit grayscale PNG and binary PGM (P5), selected by
// content on load and by extension on save. Color PNGs are converted to
// grayscale with the luma weights above. Masks are stored on disk as
// {0, 255} grayscale.
GrayImage load_image(const std::string& path);
void save_image(const GrayImage& img, const std::string& path);

BinaryMask load_mask(const std::string& path);
void save_mask(const BinaryMask& mask, const std::string& path);

GrayImage mask_to_image(const BinaryMask& mask);   // {0,1} -> {0,255}
BinaryMask image_to_mask(const GrayImage& img);    // >127 -> 1

} // namespace fenceguide

#endif

#include "fenceguide/guidance.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <vector>

#include "fenceguide/fft.hpp"
#include "fenceguide/parallel.hpp"

namespace fenceguide {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

void MasCurve::write_csv(const std::string& path) const {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) raise(ErrorKind::Io, "cannot open " + path + " for writing");
    std::fputs("shift,mas\n", f);
    for (int i = shift_min; i <= shift_max; ++i)
        std::fprintf(f, "%d,%.17g\n", i, score_at(i));
    if (std::fclose(f) != 0) raise(ErrorKind::Io, "write failed for " + path);
}

BinaryMask dual_subtract(const BinaryMask& cr, const BinaryMask& cl_shifted) {
    if (cr.width() != cl_shifted.width() || cr.height() != cl_shifted.height())
        raise(ErrorKind::DimensionMismatch, "dual_subtract operands differ in size");
    const auto& r = cr.data();
    const auto& l = cl_shifted.data();
    std::vector<std::uint8_t> out(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
        const int inner = clip_nonneg(static_cast<int>(r[i]) - static_cast<int>(l[i]));
        out[i] = static_cast<std::uint8_t>(clip_nonneg(static_cast<int>(r[i]) - inner));
    }
    return BinaryMask(cr.width(), cr.height(), std::move(out));
}

double auto_tau(const BinaryMask& cr) {
    // Harmonic peaks of an aligned repeated structure scale with the number
    // of participating edge pixels; a threshold at a fixed fraction of the
    // reference edge count keeps only coherent ridges and tracks image size.
    // The fraction was calibrated on the synthetic corpus: much below it the
    // per-angle buckets saturate and the curve goes flat.
    return std::max(4.0, 0.075 * static_cast<double>(cr.count_ones()));
}

Spectrum magnitude_spectrum(const BinaryMask& fm) {
    const int pw = next_pow2(fm.width());
    const int ph = next_pow2(fm.height());

    std::vector<std::complex<double>> field(static_cast<std::size_t>(pw) * ph, {0.0, 0.0});
    for (int y = 0; y < fm.height(); ++y)
        for (int x = 0; x < fm.width(); ++x)
            field[static_cast<std::size_t>(y) * pw + x] = {static_cast<double>(fm.at(y, x)), 0.0};

    fft2d_inplace(field, pw, ph);

    Spectrum spec;
    spec.width = pw;
    spec.height = ph;
    spec.source_width = fm.width();
    spec.source_height = fm.height();
    spec.mag.resize(field.size());
    // Quadrant swap so DC lands at (pw/2, ph/2).
    const int hx = pw / 2;
    const int hy = ph / 2;
    for (int y = 0; y < ph; ++y) {
        const int sy = (y + hy) % ph;
        for (int x = 0; x < pw; ++x) {
            const int sx = (x + hx) % pw;
            spec.at(x, y) = std::abs(field[static_cast<std::size_t>(sy) * pw + sx]);
        }
    }
    return spec;
}

Spectrum bandpass(const Spectrum& spec, double inner, double outer) {
    if (inner < 0.0 || inner >= outer)
        raise(ErrorKind::InvalidArgument, "bandpass radii must satisfy 0 <= inner < outer");
    Spectrum out = spec;
    const int cx = spec.center_x();
    const int cy = spec.center_y();
    for (int y = 0; y < spec.height; ++y) {
        for (int x = 0; x < spec.width; ++x) {
            const double d = std::hypot(static_cast<double>(x - cx), static_cast<double>(y - cy));
            if (d < inner || d > outer) out.at(x, y) = 0.0;
        }
    }
    return out;
}

std::vector<double> alignment_angles(const Spectrum& spec, double tau) {
    std::vector<double> angles;
    const int cx = spec.center_x();
    const int cy = spec.center_y();
    for (int y = 1; y < spec.height; ++y) {
        for (int x = 1; x < spec.width; ++x) {
            if (spec.at(x, y) <= tau) continue;
            if (x == cx) {
                angles.push_back(90.0);
                continue;
            }
            const double dy = std::abs(static_cast<double>(y - cy));
            const double dx = std::abs(static_cast<double>(x - cx));
            angles.push_back(180.0 / kPi * std::atan(dy / dx));
        }
    }
    return angles;
}

int mas(const std::vector<double>& angles, int num_buckets) {
    if (num_buckets < 1) raise(ErrorKind::InvalidArgument, "num_buckets must be at least 1");
    if (angles.empty()) return 0;
    std::vector<int> hist(static_cast<std::size_t>(num_buckets), 0);
    const double scale = num_buckets / 90.0;
    for (double a : angles) {
        int b = static_cast<int>(a * scale);
        if (b >= num_buckets) b = num_buckets - 1; // closes the top bucket at 90
        ++hist[static_cast<std::size_t>(b)];
    }
    return *std::max_element(hist.begin(), hist.end());
}

namespace {

double score_one_shift(const BinaryMask& cl, const BinaryMask& cr, int shift,
                       const GuidanceParams& params) {
    const BinaryMask shifted = shift_horizontal(cl, shift);
    const BinaryMask fm = dual_subtract(cr, shifted);
    Spectrum spec = magnitude_spectrum(fm);
    const double outer = params.bandpass_outer > 0.0
                             ? params.bandpass_outer
                             : std::min(spec.width, spec.height) / 2.0;
    spec = bandpass(spec, params.bandpass_inner, outer);
    return mas(alignment_angles(spec, params.tau), params.num_buckets);
}

} // namespace

MasCurve estimate_shift(const BinaryMask& cl, const BinaryMask& cr, const GuidanceParams& params) {
    params.validate();
    if (cl.width() != cr.width() || cl.height() != cr.height())
        raise(ErrorKind::DimensionMismatch, "stereo masks differ in size");

    MasCurve curve;
    curve.shift_min = params.shift_min;
    curve.shift_max = params.shift_max;
    if (curve.shift_min == 0 && curve.shift_max == -1) { // auto: [0, width/4]
        curve.shift_max = cl.width() / 4;
    } else if (curve.shift_max < curve.shift_min) {
        raise(ErrorKind::EmptyInput, "empty shift search range");
    }
    if (std::abs(curve.shift_min) >= cl.width() || std::abs(curve.shift_max) >= cl.width())
        raise(ErrorKind::InvalidShift, "shift range exceeds image width");

    const int n = curve.shift_max - curve.shift_min + 1;
    curve.scores.assign(static_cast<std::size_t>(n), 0.0);
    parallel_for(n, params.threads, [&](int k) {
        curve.scores[static_cast<std::size_t>(k)] =
            score_one_shift(cl, cr, curve.shift_min + k, params);
    });

    int best = curve.shift_min;
    double best_score = curve.scores[0];
    for (int i = curve.shift_min + 1; i <= curve.shift_max; ++i) {
        const double s = curve.score_at(i);
        const bool better =
            s > best_score ||
            (s == best_score &&
             (std::abs(i) < std::abs(best) || (std::abs(i) == std::abs(best) && i < best)));
        if (better) {
            best = i;
            best_score = s;
        }
    }
    curve.best_shift = best;
    curve.best_score = best_score;

    std::vector<double> sorted = curve.scores;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t m = sorted.size();
    const double median =
        (m % 2 == 1) ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
    curve.low_confidence = best_score == 0.0 || best_score < 2.0 * median;
    return curve;
}

GuidanceResult guidance_mask(const GrayImage& left, const GrayImage& right,
                             const CannyParams& canny_params, const GuidanceParams& params) {
    const BinaryMask cl = canny(left, canny_params);
    const BinaryMask cr = canny(right, canny_params);
    GuidanceResult result;
    result.curve = estimate_shift(cl, cr, params);
    result.fm = dual_subtract(cr, shift_horizontal(cl, result.curve.best_shift));
    return result;
}

GrayImage render_spectrum(const Spectrum& spec) {
    GrayImage img(spec.width, spec.height);
    double peak = 0.0;
    for (double v : spec.mag) peak = std::max(peak, v);
    const double denom = peak > 0.0 ? std::log1p(peak) : 1.0;
    for (int y = 0; y < spec.height; ++y)
        for (int x = 0; x < spec.width; ++x)
            img.at(y, x) =
                static_cast<std::uint8_t>(std::lround(255.0 * std::log1p(spec.at(x, y)) / denom));
    return img;
}

} // namespace fenceguide

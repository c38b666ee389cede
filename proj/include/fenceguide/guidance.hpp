#ifndef FENCEGUIDE_GUIDANCE_HPP
#define FENCEGUIDE_GUIDANCE_HPP

#include <string>
#include <vector>

#include "fenceguide/edges.hpp"
#include "fenceguide/image.hpp"

namespace fenceguide {

/// DC-centered magnitude spectrum of a binary mask. Dimensions are the
/// power-of-two padded transform size; the pre-padding mask size is kept
/// alongside. The DC bin sits at (width/2, height/2).
struct Spectrum {
    int width = 0;
    int height = 0;
    int source_width = 0;
    int source_height = 0;
    std::vector<double> mag; // row-major, non-negative

    double at(int x, int y) const { return mag[static_cast<std::size_t>(y) * width + x]; }
    double& at(int x, int y) { return mag[static_cast<std::size_t>(y) * width + x]; }
    int center_x() const { return width / 2; }
    int center_y() const { return height / 2; }
};

/// Alignment-score curve over the searched shifts. scores[i - shift_min]
/// is the score at shift i; best_shift maximizes it, ties broken by
/// smallest |i| and then smallest i.
struct MasCurve {
    int shift_min = 0;
    int shift_max = 0;
    std::vector<double> scores;
    int best_shift = 0;
    double best_score = 0.0;
    bool low_confidence = false; // flat curve: max < 2 * median, or no score at all

    double score_at(int shift) const { return scores[static_cast<std::size_t>(shift - shift_min)]; }
    void write_csv(const std::string& path) const;
};

struct GuidanceParams {
    double tau = 100.0;       // magnitude threshold; calibrated for roughly VGA-sized inputs
    int num_buckets = 90;
    double bandpass_inner = 3.0;
    double bandpass_outer = 0.0; // <= 0 selects min(width, height) / 2 of the spectrum
    int shift_min = 0;
    int shift_max = -1;          // the pair (0, -1) selects the default range [0, width / 4]
    int threads = 1;

    void validate() const {
        if (tau <= 0.0) raise(ErrorKind::InvalidArgument, "tau must be positive");
        if (num_buckets < 1) raise(ErrorKind::InvalidArgument, "num_buckets must be at least 1");
        if (bandpass_inner < 0.0 ||
            (bandpass_outer > 0.0 && bandpass_inner >= bandpass_outer))
            raise(ErrorKind::InvalidArgument, "bandpass radii must satisfy 0 <= inner < outer");
    }
};

/// Clipped double difference of two equally sized binary masks; keeps
/// exactly the pixels present in both. Equivalent to pixelwise AND on
/// binary inputs.
BinaryMask dual_subtract(const BinaryMask& cr, const BinaryMask& cl_shifted);

/// Magnitude threshold scaled to the reference edge map's density, for
/// inputs much smaller than the VGA scale the fixed default assumes.
double auto_tau(const BinaryMask& cr);

/// Unnormalized DFT magnitude of a {0,1} field, zero-padded to the next
/// power of two per axis, quadrant-swapped so DC sits at the center bin.
Spectrum magnitude_spectrum(const BinaryMask& fm);

/// Zeroes all bins closer to the center than `inner` or farther than
/// `outer` (Euclidean bin distance); the rest pass through unchanged.
Spectrum bandpass(const Spectrum& spec, double inner, double outer);

/// Angles (degrees, in [0, 90]) between each above-threshold bin and the
/// spectrum center. Bins on the x_p = 0 or y_p = 0 border are excluded;
/// bins directly above or below the center report exactly 90.
std::vector<double> alignment_angles(const Spectrum& spec, double tau);

/// Maximum bucket count of the angle histogram over [0, 90] degrees.
/// Buckets are half-open [k, k+1) except the last, which closes at 90.
int mas(const std::vector<double>& angles, int num_buckets = 90);

/// Scores every shift in the configured range and picks the argmax.
MasCurve estimate_shift(const BinaryMask& cl, const BinaryMask& cr, const GuidanceParams& params);

/// Full pipeline: edge maps of both frames, shift estimation, then the
/// dual subtraction at the winning shift.
struct GuidanceResult {
    BinaryMask fm;
    MasCurve curve;
};
GuidanceResult guidance_mask(const GrayImage& left, const GrayImage& right,
                             const CannyParams& canny_params, const GuidanceParams& params);

/// Log-scaled spectrum rendering for diagnostics; peak maps to 255.
GrayImage render_spectrum(const Spectrum& spec);

} // namespace fenceguide

#endif

#ifndef FENCEGUIDE_DCL_HPP
#define FENCEGUIDE_DCL_HPP

#include <array>
#include <cstdint>
#include <vector>

#include "fenceguide/image.hpp"

namespace fenceguide {

/// One directional line feature: a 5x5 binary stencil with exactly five
/// ones forming a discrete line through the center cell (2,2).
struct DirectionalFeature {
    std::array<std::array<std::uint8_t, 5>, 5> cells; // [row][col]
    double angle_deg;
};

/// The fixed bank of 8 features at 0, 26.6, 45, 63.4, 90, 116.6, 135 and
/// 153.4 degrees. The axis-aligned and diagonal lines are exact; the four
/// intermediate angles rasterize slopes +-1/2 and +-2 through the center
/// (rounding half away from zero), kept point-symmetric about (2,2).
const std::array<DirectionalFeature, 8>& directional_features();

/// Per-pixel best directional response of a soft mask: for each pixel,
/// dot the 5x5 neighborhood (zero-padded) with each feature and keep the
/// max. `winner` records the argmax feature index, lowest index on ties —
/// the same choice the gradient follows.
struct ConnectivityMap {
    int width = 0;
    int height = 0;
    std::vector<double> values;
    std::vector<std::uint8_t> winner;

    double at(int row, int col) const { return values[static_cast<std::size_t>(row) * width + col]; }
};

ConnectivityMap connectivity_map(const std::vector<double>& y, int width, int height, int threads = 1);
ConnectivityMap connectivity_map(const BinaryMask& mask, int threads = 1);

/// Directional connectivity loss: negative mean of the prediction-weighted
/// connectivity map, -1/(W*H) * sum_p y(p) * map(p).  Activations on a line
/// collect the whole line's support; isolated activations collect only their
/// own value, so connected layouts always score strictly lower (better).
/// In [-5, 0] for y in [0,1]; 0 iff y is all-zero.
double dcl_value(const std::vector<double>& y, int width, int height, int threads = 1);
double dcl_value(const BinaryMask& mask, int threads = 1);

/// Subgradient of dcl_value: pixel q picks up -1/(W*H) times its own map
/// response, plus -y(p)/(W*H) from every pixel p whose winning stencil
/// covers q. Consistent with the forward tie-break, so it is a valid
/// subgradient of the computed value.
std::vector<double> dcl_gradient(const std::vector<double>& y, int width, int height, int threads = 1);

/// Central-finite-difference audit of dcl_gradient on one field.
struct GradCheckReport {
    int checked = 0;       // coordinates tested
    int passed = 0;        // within rel_tol
    double max_rel_err = 0.0;
    double pass_fraction() const { return checked > 0 ? static_cast<double>(passed) / checked : 1.0; }
};

GradCheckReport dcl_gradcheck(const std::vector<double>& y, int width, int height,
                              double epsilon = 1e-4, double rel_tol = 1e-5);

/// Randomized gradcheck suite. Fields are uniform(0,1) draws, redrawn
/// until the feature argmax is strict by a margin > 2.5 * epsilon at
/// every pixel, so the loss is locally linear around each probe.
struct GradCheckSuite {
    int fields = 20;
    int width = 16;
    int height = 16;
    double epsilon = 1e-4;
    double rel_tol = 1e-5;
    double min_pass_fraction = 0.99;
};

struct GradCheckSuiteReport {
    int fields_run = 0;
    long long checked = 0;
    long long passed = 0;
    double max_rel_err = 0.0;
    bool ok = false;
};

GradCheckSuiteReport dcl_gradcheck_suite(std::uint64_t seed, const GradCheckSuite& cfg = {});

/// Normalized rendering of the map (5.0 -> 255) for the CLI report.
GrayImage render_connectivity(const ConnectivityMap& map);

} // namespace fenceguide

#endif

#include "fenceguide/dcl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fenceguide/parallel.hpp"
#include "fenceguide/rng.hpp"

namespace fenceguide {

namespace {

// Cell offsets {dr, dc} of each feature's five ones, center included.
// dr grows downward, so the nominal angle is the screen angle of the line.
struct FeatureSpec {
    double angle;
    std::array<std::array<int, 2>, 5> offsets;
};

// Offsets are kept in row-major order so feature sums accumulate exactly
// like a straight scan over the 5x5 window.
constexpr std::array<FeatureSpec, 8> kFeatures = {{
    {0.0, {{{0, -2}, {0, -1}, {0, 0}, {0, 1}, {0, 2}}}},
    {26.6, {{{-1, 1}, {-1, 2}, {0, 0}, {1, -2}, {1, -1}}}},
    {45.0, {{{-2, 2}, {-1, 1}, {0, 0}, {1, -1}, {2, -2}}}},
    {63.4, {{{-2, 1}, {-1, 1}, {0, 0}, {1, -1}, {2, -1}}}},
    {90.0, {{{-2, 0}, {-1, 0}, {0, 0}, {1, 0}, {2, 0}}}},
    {116.6, {{{-2, -1}, {-1, -1}, {0, 0}, {1, 1}, {2, 1}}}},
    {135.0, {{{-2, -2}, {-1, -1}, {0, 0}, {1, 1}, {2, 2}}}},
    {153.4, {{{-1, -2}, {-1, -1}, {0, 0}, {1, 1}, {1, 2}}}},
}};

void check_field(const std::vector<double>& y, int width, int height) {
    if (width < 1 || height < 1)
        raise(ErrorKind::InvalidArgument, "field dimensions must be at least 1x1");
    if (y.size() != static_cast<std::size_t>(width) * height)
        raise(ErrorKind::DimensionMismatch, "field buffer size does not match dimensions");
}

double feature_sum(const std::vector<double>& y, int width, int height, int r, int c,
                   const FeatureSpec& spec) {
    double s = 0.0;
    for (const auto& off : spec.offsets) {
        const int rr = r + off[0];
        const int cc = c + off[1];
        if (rr >= 0 && rr < height && cc >= 0 && cc < width)
            s += y[static_cast<std::size_t>(rr) * width + cc];
    }
    return s;
}

std::vector<double> mask_to_field(const BinaryMask& mask) {
    std::vector<double> y(mask.size());
    const auto& d = mask.data();
    for (std::size_t i = 0; i < d.size(); ++i) y[i] = d[i];
    return y;
}

} // namespace

const std::array<DirectionalFeature, 8>& directional_features() {
    static const std::array<DirectionalFeature, 8> bank = [] {
        std::array<DirectionalFeature, 8> b{};
        for (std::size_t f = 0; f < 8; ++f) {
            b[f].angle_deg = kFeatures[f].angle;
            for (auto& row : b[f].cells) row.fill(0);
            for (const auto& off : kFeatures[f].offsets)
                b[f].cells[static_cast<std::size_t>(off[0] + 2)][static_cast<std::size_t>(off[1] + 2)] = 1;
        }
        return b;
    }();
    return bank;
}

ConnectivityMap connectivity_map(const std::vector<double>& y, int width, int height, int threads) {
    check_field(y, width, height);
    ConnectivityMap map;
    map.width = width;
    map.height = height;
    map.values.resize(y.size());
    map.winner.resize(y.size());
    parallel_for(height, threads, [&](int r) {
        for (int c = 0; c < width; ++c) {
            double best = -std::numeric_limits<double>::infinity();
            int win = 0;
            for (int f = 0; f < 8; ++f) {
                const double s = feature_sum(y, width, height, r, c, kFeatures[f]);
                if (s > best) {
                    best = s;
                    win = f;
                }
            }
            const std::size_t i = static_cast<std::size_t>(r) * width + c;
            map.values[i] = best;
            map.winner[i] = static_cast<std::uint8_t>(win);
        }
    });
    return map;
}

ConnectivityMap connectivity_map(const BinaryMask& mask, int threads) {
    return connectivity_map(mask_to_field(mask), mask.width(), mask.height(), threads);
}

double dcl_value(const std::vector<double>& y, int width, int height, int threads) {
    // Connectivity is scored where the prediction is active: each pixel
    // contributes its own activation times the best directional response
    // through it.  Isolated activations earn the minimum (their own value),
    // while activations lying on a line earn the full line support.
    const ConnectivityMap map = connectivity_map(y, width, height, threads);
    double sum = 0.0;
    for (std::size_t i = 0; i < map.values.size(); ++i) sum += y[i] * map.values[i];
    return -sum / static_cast<double>(map.values.size());
}

double dcl_value(const BinaryMask& mask, int threads) {
    return dcl_value(mask_to_field(mask), mask.width(), mask.height(), threads);
}

std::vector<double> dcl_gradient(const std::vector<double>& y, int width, int height, int threads) {
    // d/dy_q of -1/N * sum_p y_p * max-response_p splits into the response at
    // q itself plus every activation whose winning stencil touches q.  The
    // winner index is held fixed, which is the usual subgradient away from
    // argmax ties.
    const ConnectivityMap map = connectivity_map(y, width, height, threads);
    std::vector<double> grad(y.size(), 0.0);
    const double g = -1.0 / static_cast<double>(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) grad[i] = g * map.values[i];
    // The scatter is cheap next to the forward pass; doing it sequentially
    // keeps the result independent of the thread count.
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            const std::size_t i = static_cast<std::size_t>(r) * width + c;
            const double w = g * y[i];
            const auto& spec = kFeatures[map.winner[i]];
            for (const auto& off : spec.offsets) {
                const int rr = r + off[0];
                const int cc = c + off[1];
                if (rr >= 0 && rr < height && cc >= 0 && cc < width)
                    grad[static_cast<std::size_t>(rr) * width + cc] += w;
            }
        }
    }
    return grad;
}

GradCheckReport dcl_gradcheck(const std::vector<double>& y, int width, int height,
                              double epsilon, double rel_tol) {
    check_field(y, width, height);
    const std::vector<double> analytic = dcl_gradient(y, width, height);
    std::vector<double> work = y;
    GradCheckReport report;
    report.checked = static_cast<int>(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double orig = work[i];
        work[i] = orig + epsilon;
        const double fp = dcl_value(work, width, height);
        work[i] = orig - epsilon;
        const double fm = dcl_value(work, width, height);
        work[i] = orig;
        const double fd = (fp - fm) / (2.0 * epsilon);
        const double abs_err = std::abs(fd - analytic[i]);
        const double denom = std::max({std::abs(fd), std::abs(analytic[i]), 1e-12});
        const double rel = abs_err / denom;
        report.max_rel_err = std::max(report.max_rel_err, rel);
        if (abs_err <= 1e-12 || rel <= rel_tol) ++report.passed;
    }
    return report;
}

namespace {

// Smallest winner-vs-runner-up gap over all pixels; the field is locally
// linear under single-coordinate probes of size eps iff this exceeds eps.
double min_argmax_margin(const std::vector<double>& y, int width, int height) {
    double margin = std::numeric_limits<double>::infinity();
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            double best = -std::numeric_limits<double>::infinity();
            double second = -std::numeric_limits<double>::infinity();
            for (int f = 0; f < 8; ++f) {
                const double s = feature_sum(y, width, height, r, c, kFeatures[f]);
                if (s > best) {
                    second = best;
                    best = s;
                } else if (s > second) {
                    second = s;
                }
            }
            margin = std::min(margin, best - second);
        }
    }
    return margin;
}

} // namespace

GradCheckSuiteReport dcl_gradcheck_suite(std::uint64_t seed, const GradCheckSuite& cfg) {
    if (cfg.fields < 1 || cfg.width < 1 || cfg.height < 1)
        raise(ErrorKind::InvalidArgument, "gradcheck suite needs at least one field");
    GradCheckSuiteReport report;
    const std::size_t n = static_cast<std::size_t>(cfg.width) * cfg.height;
    for (int k = 0; k < cfg.fields; ++k) {
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(k)));
        std::vector<double> y(n);
        for (;;) {
            for (double& v : y) v = rng.uniform01();
            if (min_argmax_margin(y, cfg.width, cfg.height) > 2.5 * cfg.epsilon) break;
        }
        const GradCheckReport r = dcl_gradcheck(y, cfg.width, cfg.height, cfg.epsilon, cfg.rel_tol);
        report.fields_run += 1;
        report.checked += r.checked;
        report.passed += r.passed;
        report.max_rel_err = std::max(report.max_rel_err, r.max_rel_err);
    }
    report.ok = report.checked > 0 &&
                static_cast<double>(report.passed) >=
                    cfg.min_pass_fraction * static_cast<double>(report.checked);
    return report;
}

GrayImage render_connectivity(const ConnectivityMap& map) {
    GrayImage img(map.width, map.height);
    for (int r = 0; r < map.height; ++r) {
        for (int c = 0; c < map.width; ++c) {
            const double v = std::clamp(map.at(r, c) / 5.0, 0.0, 1.0);
            img.at(r, c) = static_cast<std::uint8_t>(std::lround(255.0 * v));
        }
    }
    return img;
}

} // namespace fenceguide

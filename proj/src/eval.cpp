#include "fenceguide/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "fenceguide/parallel.hpp"

namespace fs = std::filesystem;

namespace fenceguide {

ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& gt) {
    if (pred.width() != gt.width() || pred.height() != gt.height())
        raise(ErrorKind::DimensionMismatch, "prediction and ground truth differ in size");
    ConfusionCounts c;
    const auto& p = pred.data();
    const auto& g = gt.data();
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] && g[i]) ++c.tp;
        else if (p[i] && !g[i]) ++c.fp;
        else if (!p[i] && g[i]) ++c.fn;
        else ++c.tn;
    }
    return c;
}

double f_measure(double precision, double recall) {
    const double denom = precision + recall;
    return denom > 0.0 ? 2.0 * precision * recall / denom : 0.0;
}

Prf prf(const ConfusionCounts& counts) {
    Prf out;
    if (counts.tp + counts.fp > 0)
        out.precision = static_cast<double>(counts.tp) / static_cast<double>(counts.tp + counts.fp);
    else
        out.degenerate = true;
    if (counts.tp + counts.fn > 0)
        out.recall = static_cast<double>(counts.tp) / static_cast<double>(counts.tp + counts.fn);
    else
        out.degenerate = true;
    if (out.precision + out.recall == 0.0) out.degenerate = true;
    out.f = f_measure(out.precision, out.recall);
    return out;
}

MetricSummary aggregate(const std::vector<Prf>& items) {
    if (items.empty()) raise(ErrorKind::EmptyInput, "nothing to aggregate");
    MetricSummary s;
    s.count = static_cast<int>(items.size());
    for (const Prf& m : items) {
        s.mean_precision += m.precision;
        s.mean_recall += m.recall;
        s.mean_f += m.f;
    }
    const double n = static_cast<double>(items.size());
    s.mean_precision /= n;
    s.mean_recall /= n;
    s.mean_f /= n;
    double vp = 0.0, vr = 0.0, vf = 0.0;
    for (const Prf& m : items) {
        vp += (m.precision - s.mean_precision) * (m.precision - s.mean_precision);
        vr += (m.recall - s.mean_recall) * (m.recall - s.mean_recall);
        vf += (m.f - s.mean_f) * (m.f - s.mean_f);
    }
    s.std_precision = std::sqrt(vp / n); // population sigma
    s.std_recall = std::sqrt(vr / n);
    s.std_f = std::sqrt(vf / n);
    return s;
}

MetricSummary aggregate_folds(const std::vector<Prf>& items, int folds) {
    if (items.empty()) raise(ErrorKind::EmptyInput, "nothing to aggregate");
    if (folds < 1 || folds > static_cast<int>(items.size()))
        raise(ErrorKind::InvalidArgument, "fold count must be between 1 and the item count");
    std::vector<Prf> fold_means;
    const int n = static_cast<int>(items.size());
    int start = 0;
    for (int k = 0; k < folds; ++k) {
        // First n % folds groups take one extra item.
        const int size = n / folds + (k < n % folds ? 1 : 0);
        Prf mean;
        for (int i = start; i < start + size; ++i) {
            mean.precision += items[static_cast<std::size_t>(i)].precision;
            mean.recall += items[static_cast<std::size_t>(i)].recall;
            mean.f += items[static_cast<std::size_t>(i)].f;
        }
        mean.precision /= size;
        mean.recall /= size;
        mean.f /= size;
        fold_means.push_back(mean);
        start += size;
    }
    return aggregate(fold_means);
}

BinaryMask dilate(const BinaryMask& mask, int radius) {
    if (radius < 0) raise(ErrorKind::InvalidArgument, "dilation radius must be non-negative");
    if (radius == 0) return mask;
    BinaryMask out(mask.width(), mask.height());
    for (int r = 0; r < mask.height(); ++r) {
        for (int c = 0; c < mask.width(); ++c) {
            if (!mask.at(r, c)) continue;
            const int r0 = std::max(0, r - radius);
            const int r1 = std::min(mask.height() - 1, r + radius);
            const int c0 = std::max(0, c - radius);
            const int c1 = std::min(mask.width() - 1, c + radius);
            for (int rr = r0; rr <= r1; ++rr)
                for (int cc = c0; cc <= c1; ++cc) out.set(rr, cc, 1);
        }
    }
    return out;
}

namespace {

ConfusionCounts confusion_with_tolerance(const BinaryMask& pred, const BinaryMask& gt,
                                         int tolerance) {
    if (tolerance == 0) return confusion(pred, gt);
    // A predicted pixel is a hit if ground truth lies within the radius;
    // a ground-truth pixel is missed only if no prediction is that close.
    const BinaryMask gt_d = dilate(gt, tolerance);
    const BinaryMask pred_d = dilate(pred, tolerance);
    ConfusionCounts c;
    const auto& p = pred.data();
    const auto& g = gt.data();
    const auto& pd = pred_d.data();
    const auto& gd = gt_d.data();
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] && gd[i]) ++c.tp;
        if (p[i] && !gd[i]) ++c.fp;
        if (g[i] && !pd[i]) ++c.fn;
    }
    c.tn = static_cast<long long>(p.size()) - c.tp - c.fp - c.fn;
    return c;
}

} // namespace

EvalReport evaluate_dirs(const std::string& pred_dir, const std::string& gt_dir, int tolerance,
                         int folds, int threads) {
    if (!fs::is_directory(pred_dir))
        raise(ErrorKind::FileMissing, "prediction directory not found: " + pred_dir);
    if (!fs::is_directory(gt_dir))
        raise(ErrorKind::FileMissing, "ground-truth directory not found: " + gt_dir);

    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(pred_dir)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (ext == ".png" || ext == ".pgm") names.push_back(entry.path().filename().string());
    }
    std::sort(names.begin(), names.end());
    if (names.empty()) raise(ErrorKind::EmptyInput, "no mask files in " + pred_dir);

    EvalReport report;
    report.folds = folds;
    report.tolerance = tolerance;
    report.items.resize(names.size());
    parallel_for(static_cast<int>(names.size()), threads, [&](int i) {
        const std::string& name = names[static_cast<std::size_t>(i)];
        const std::string gt_path = (fs::path(gt_dir) / name).string();
        if (!fs::exists(gt_path))
            raise(ErrorKind::FileMissing, "no ground truth for " + name + " in " + gt_dir);
        const BinaryMask pred = load_mask((fs::path(pred_dir) / name).string());
        const BinaryMask gt = load_mask(gt_path);
        report.items[static_cast<std::size_t>(i)] =
            EvalItem{name, prf(confusion_with_tolerance(pred, gt, tolerance))};
    });

    std::vector<Prf> metrics;
    metrics.reserve(report.items.size());
    for (const EvalItem& item : report.items) metrics.push_back(item.metrics);
    report.summary = folds > 1 ? aggregate_folds(metrics, folds) : aggregate(metrics);
    return report;
}

void write_report_csv(const EvalReport& report, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) raise(ErrorKind::Io, "cannot open " + path + " for writing");
    std::fputs("image,precision,recall,f_measure\n", f);
    for (const EvalItem& item : report.items)
        std::fprintf(f, "%s,%.6f,%.6f,%.6f\n", item.name.c_str(), item.metrics.precision,
                     item.metrics.recall, item.metrics.f);
    std::fprintf(f, "mean,%.6f,%.6f,%.6f\n", report.summary.mean_precision,
                 report.summary.mean_recall, report.summary.mean_f);
    std::fprintf(f, "stddev,%.6f,%.6f,%.6f\n", report.summary.std_precision,
                 report.summary.std_recall, report.summary.std_f);
    if (std::fclose(f) != 0) raise(ErrorKind::Io, "write failed for " + path);
}

} // namespace fenceguide

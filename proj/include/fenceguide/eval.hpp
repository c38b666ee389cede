#ifndef FENCEGUIDE_EVAL_HPP
#define FENCEGUIDE_EVAL_HPP

#include <string>
#include <vector>

#include "fenceguide/image.hpp"

namespace fenceguide {

struct ConfusionCounts {
    long long tp = 0;
    long long fp = 0;
    long long fn = 0;
    long long tn = 0;
};

/// Pixelwise comparison; positive class is 1 (fence).
ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& gt);

/// Precision, recall and F-measure. Any 0/0 ratio yields 0 and sets the
/// degenerate flag instead of erroring.
struct Prf {
    double precision = 0.0;
    double recall = 0.0;
    double f = 0.0;
    bool degenerate = false;
};
Prf prf(const ConfusionCounts& counts);

/// Harmonic mean of precision and recall; 0 when both are 0.
double f_measure(double precision, double recall);

/// Mean and population standard deviation of each metric.
struct MetricSummary {
    int count = 0;
    double mean_precision = 0.0;
    double mean_recall = 0.0;
    double mean_f = 0.0;
    double std_precision = 0.0;
    double std_recall = 0.0;
    double std_f = 0.0;
};
MetricSummary aggregate(const std::vector<Prf>& items);

/// Splits the items into `folds` contiguous groups, averages each group,
/// then summarizes the group means (the cross-validation protocol).
MetricSummary aggregate_folds(const std::vector<Prf>& items, int folds);

/// Chebyshev (box) dilation, used by the exploratory boundary tolerance.
BinaryMask dilate(const BinaryMask& mask, int radius);

struct EvalItem {
    std::string name;
    Prf metrics;
};

struct EvalReport {
    std::vector<EvalItem> items; // sorted by name
    MetricSummary summary;       // over images, or over fold means when folds > 1
    int folds = 1;
    int tolerance = 0;
};

/// Compares same-named mask files between the two directories. tolerance
/// N > 0 relaxes matching: a predicted pixel counts as a hit within N
/// pixels (Chebyshev) of the ground truth and vice versa.
EvalReport evaluate_dirs(const std::string& pred_dir, const std::string& gt_dir,
                         int tolerance = 0, int folds = 1, int threads = 1);

/// CSV with one row per image plus trailing mean and stddev rows.
void write_report_csv(const EvalReport& report, const std::string& path);

} // namespace fenceguide

#endif

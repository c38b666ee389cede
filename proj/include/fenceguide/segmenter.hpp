#ifndef FENCEGUIDE_SEGMENTER_HPP
#define FENCEGUIDE_SEGMENTER_HPP

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fenceguide/image.hpp"
#include "fenceguide/synth.hpp"

namespace fenceguide {

/// Channel-major real-valued stack (channels x height x width).
struct Tensor {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> v;

    Tensor() = default;
    Tensor(int c, int h, int w)
        : channels(c), height(h), width(w), v(static_cast<std::size_t>(c) * h * w, 0.0) {}

    double at(int c, int r, int col) const { return v[idx(c, r, col)]; }
    double& at(int c, int r, int col) { return v[idx(c, r, col)]; }
    std::size_t idx(int c, int r, int col) const {
        return (static_cast<std::size_t>(c) * height + r) * width + col;
    }
};

struct ConvLayer {
    int in_ch = 0;
    int out_ch = 0;
    std::vector<double> w; // [out][in][3][3]
    std::vector<double> b; // [out]
};

/// Fixed stack: conv3x3(C_in->8)+ReLU, conv3x3(8->8)+ReLU,
/// conv3x3(8->1)+sigmoid, all zero-padded to keep the spatial size.
/// C_in is 1 (image only) or 2 (image + guidance-mask channel).
struct SegModel {
    int c_in = 2;
    std::array<ConvLayer, 3> layers;

    std::size_t param_count() const;
};

/// Weights uniform in +-1/sqrt(in_ch*9), biases zero, deterministic per seed.
SegModel init_model(int c_in, std::uint64_t seed);

/// Plain forward pass; output is a 1-channel tensor of sigmoid values.
Tensor forward(const SegModel& model, const Tensor& x);

/// Forward pass keeping every intermediate needed by the backward pass.
struct ForwardCache {
    Tensor x, z1, a1, z2, a2, z3, y;
};
void forward_cached(const SegModel& model, const Tensor& x, ForwardCache& cache);

struct LossConfig {
    double lambda_l1 = 1.0;
    double lambda_dcl = 0.1;
};

struct LossBreakdown {
    double total = 0.0;
    double l1 = 0.0;  // mean |y - target|, pre-weighting
    double dcl = 0.0; // connectivity loss, pre-weighting
};

/// Parameter gradients with the same shapes as the model's layers.
struct ParamGrads {
    std::array<std::vector<double>, 3> w;
    std::array<std::vector<double>, 3> b;

    static ParamGrads zeros_like(const SegModel& model);
    void scale(double s);
};

/// Loss of one sample against a soft target in [0,1] (row-major, same
/// spatial size), with gradients accumulated into `grads`.
LossBreakdown loss_and_grads(const SegModel& model, const Tensor& x,
                             const std::vector<double>& target, const LossConfig& cfg,
                             ParamGrads& grads);

/// Loss value alone (no backward pass).
LossBreakdown loss_value(const SegModel& model, const Tensor& x,
                         const std::vector<double>& target, const LossConfig& cfg);

struct TrainConfig {
    int channels = 2;
    int epochs = 30;
    int batch_size = 32; // clamped to the dataset size
    double learning_rate = 0.0002;
    double lambda_l1 = 1.0;
    double lambda_dcl = 0.1;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 7;
    double threshold = 0.5; // for the per-epoch validation F-measure

    void validate() const;
};

struct EpochStats {
    int epoch = 0;    // 1-based
    double loss = 0.0; // epoch mean of the weighted total
    double l1 = 0.0;
    double dcl = 0.0;
    double val_f = 0.0;
};

struct TrainResult {
    SegModel model;
    std::vector<EpochStats> history;
};

/// Adam training over the manifest's train split; the test split (when
/// present, else the train split) provides the validation F-measure.
/// Deterministic for a fixed (manifest, seed): batches are re-shuffled
/// each epoch from a seed derived of (seed, epoch), accumulation is
/// sequential. When checkpoint_path is non-empty the current model is
/// written there after every epoch.
TrainResult train(const DatasetManifest& manifest, const TrainConfig& cfg,
                  const std::string& checkpoint_path = "",
                  const std::function<void(const EpochStats&)>& on_epoch = nullptr);

void write_history_csv(const std::vector<EpochStats>& history, const std::string& path);

/// Builds the model input: channel 0 is the image scaled to [0,1],
/// channel 1 (two-channel models) the guidance mask as {0,1}.
Tensor make_input(const GrayImage& image, const BinaryMask* fm, int c_in);

/// Thresholded forward pass: mask pixel = 1 iff y strictly exceeds
/// `threshold`.
BinaryMask predict(const SegModel& model, const GrayImage& image, const BinaryMask* fm,
                   double threshold = 0.5);

void save_model(const SegModel& model, const std::string& path);
SegModel load_model(const std::string& path);

/// Central finite differences over every parameter, against the analytic
/// gradients. A coordinate passes when |fd - grad| is within rel_tol
/// relatively or under the absolute floor.
struct ModelGradCheckReport {
    int checked = 0;
    int passed = 0;
    double max_rel_err = 0.0;
};
ModelGradCheckReport model_gradcheck(const SegModel& model, const Tensor& x,
                                     const std::vector<double>& target, const LossConfig& cfg,
                                     double epsilon = 1e-4, double rel_tol = 1e-4,
                                     double abs_floor = 1e-9);

} // namespace fenceguide

#endif

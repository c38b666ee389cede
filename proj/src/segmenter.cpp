#include "fenceguide/segmenter.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>

#include "fenceguide/dcl.hpp"
#include "fenceguide/eval.hpp"
#include "fenceguide/rng.hpp"

namespace fenceguide {

namespace {

constexpr int kHidden = 8;

void check_layer_input(const ConvLayer& layer, const Tensor& in) {
    if (in.channels != layer.in_ch)
        raise(ErrorKind::ChannelMismatch, "conv layer expects " + std::to_string(layer.in_ch) +
                                              " channels, got " + std::to_string(in.channels));
    if (in.height < 3 || in.width < 3)
        raise(ErrorKind::ImageTooSmall, "conv input must be at least 3x3");
}

// Zero-padded same-size 3x3 convolution.
Tensor conv_forward(const ConvLayer& layer, const Tensor& in) {
    check_layer_input(layer, in);
    Tensor out(layer.out_ch, in.height, in.width);
    for (int o = 0; o < layer.out_ch; ++o) {
        for (int r = 0; r < in.height; ++r) {
            for (int c = 0; c < in.width; ++c) {
                double acc = layer.b[static_cast<std::size_t>(o)];
                for (int i = 0; i < layer.in_ch; ++i) {
                    const std::size_t wbase = ((static_cast<std::size_t>(o) * layer.in_ch) + i) * 9;
                    for (int kr = 0; kr < 3; ++kr) {
                        const int rr = r + kr - 1;
                        if (rr < 0 || rr >= in.height) continue;
                        for (int kc = 0; kc < 3; ++kc) {
                            const int cc = c + kc - 1;
                            if (cc < 0 || cc >= in.width) continue;
                            acc += layer.w[wbase + static_cast<std::size_t>(kr) * 3 + kc] *
                                   in.at(i, rr, cc);
                        }
                    }
                }
                out.at(o, r, c) = acc;
            }
        }
    }
    return out;
}

// Gradients of a conv layer: fills dw/db and returns dx.
Tensor conv_backward(const ConvLayer& layer, const Tensor& in, const Tensor& dz,
                     std::vector<double>& dw, std::vector<double>& db) {
    Tensor dx(in.channels, in.height, in.width);
    for (int o = 0; o < layer.out_ch; ++o) {
        double bsum = 0.0;
        for (int r = 0; r < in.height; ++r)
            for (int c = 0; c < in.width; ++c) bsum += dz.at(o, r, c);
        db[static_cast<std::size_t>(o)] += bsum;
        for (int i = 0; i < layer.in_ch; ++i) {
            const std::size_t wbase = ((static_cast<std::size_t>(o) * layer.in_ch) + i) * 9;
            for (int kr = 0; kr < 3; ++kr) {
                for (int kc = 0; kc < 3; ++kc) {
                    const double wv = layer.w[wbase + static_cast<std::size_t>(kr) * 3 + kc];
                    double wgrad = 0.0;
                    for (int r = 0; r < in.height; ++r) {
                        const int rr = r + kr - 1;
                        if (rr < 0 || rr >= in.height) continue;
                        for (int c = 0; c < in.width; ++c) {
                            const int cc = c + kc - 1;
                            if (cc < 0 || cc >= in.width) continue;
                            const double g = dz.at(o, r, c);
                            wgrad += g * in.at(i, rr, cc);
                            dx.at(i, rr, cc) += g * wv;
                        }
                    }
                    dw[wbase + static_cast<std::size_t>(kr) * 3 + kc] += wgrad;
                }
            }
        }
    }
    return dx;
}

void relu_inplace(Tensor& t) {
    for (double& v : t.v) v = v > 0.0 ? v : 0.0;
}

void sigmoid_inplace(Tensor& t) {
    for (double& v : t.v) v = 1.0 / (1.0 + std::exp(-v));
}

void check_model_shape(const SegModel& model) {
    if (model.c_in != 1 && model.c_in != 2)
        raise(ErrorKind::ChannelMismatch, "model input channels must be 1 or 2");
    const std::array<std::array<int, 2>, 3> want = {{{model.c_in, kHidden}, {kHidden, kHidden}, {kHidden, 1}}};
    for (std::size_t l = 0; l < 3; ++l) {
        const ConvLayer& layer = model.layers[l];
        if (layer.in_ch != want[l][0] || layer.out_ch != want[l][1] ||
            layer.w.size() != static_cast<std::size_t>(layer.in_ch) * layer.out_ch * 9 ||
            layer.b.size() != static_cast<std::size_t>(layer.out_ch))
            raise(ErrorKind::InvalidArgument, "model layer shapes corrupt");
    }
}

} // namespace

std::size_t SegModel::param_count() const {
    std::size_t n = 0;
    for (const ConvLayer& layer : layers) n += layer.w.size() + layer.b.size();
    return n;
}

SegModel init_model(int c_in, std::uint64_t seed) {
    if (c_in != 1 && c_in != 2)
        raise(ErrorKind::ChannelMismatch, "model input channels must be 1 or 2");
    SegModel model;
    model.c_in = c_in;
    const std::array<std::array<int, 2>, 3> shapes = {{{c_in, kHidden}, {kHidden, kHidden}, {kHidden, 1}}};
    Rng rng(seed);
    for (std::size_t l = 0; l < 3; ++l) {
        ConvLayer& layer = model.layers[l];
        layer.in_ch = shapes[l][0];
        layer.out_ch = shapes[l][1];
        layer.w.resize(static_cast<std::size_t>(layer.in_ch) * layer.out_ch * 9);
        layer.b.assign(static_cast<std::size_t>(layer.out_ch), 0.0);
        const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in_ch) * 9.0);
        for (double& w : layer.w) w = rng.uniform(-bound, bound);
    }
    return model;
}

void forward_cached(const SegModel& model, const Tensor& x, ForwardCache& cache) {
    check_model_shape(model);
    cache.x = x;
    cache.z1 = conv_forward(model.layers[0], cache.x);
    cache.a1 = cache.z1;
    relu_inplace(cache.a1);
    cache.z2 = conv_forward(model.layers[1], cache.a1);
    cache.a2 = cache.z2;
    relu_inplace(cache.a2);
    cache.z3 = conv_forward(model.layers[2], cache.a2);
    cache.y = cache.z3;
    sigmoid_inplace(cache.y);
}

Tensor forward(const SegModel& model, const Tensor& x) {
    ForwardCache cache;
    forward_cached(model, x, cache);
    return cache.y;
}

ParamGrads ParamGrads::zeros_like(const SegModel& model) {
    ParamGrads g;
    for (std::size_t l = 0; l < 3; ++l) {
        g.w[l].assign(model.layers[l].w.size(), 0.0);
        g.b[l].assign(model.layers[l].b.size(), 0.0);
    }
    return g;
}

void ParamGrads::scale(double s) {
    for (auto& vec : w)
        for (double& v : vec) v *= s;
    for (auto& vec : b)
        for (double& v : vec) v *= s;
}

namespace {

LossBreakdown loss_of_output(const Tensor& y, const std::vector<double>& target,
                             const LossConfig& cfg, std::vector<double>* dy_out) {
    const std::size_t n = y.v.size();
    if (target.size() != n)
        raise(ErrorKind::DimensionMismatch, "target size does not match model output");
    LossBreakdown loss;
    for (std::size_t i = 0; i < n; ++i) loss.l1 += std::abs(y.v[i] - target[i]);
    loss.l1 /= static_cast<double>(n);
    loss.dcl = cfg.lambda_dcl != 0.0 ? dcl_value(y.v, y.width, y.height) : 0.0;
    loss.total = cfg.lambda_l1 * loss.l1 + cfg.lambda_dcl * loss.dcl;
    if (!std::isfinite(loss.total))
        raise(ErrorKind::NonFiniteLoss, "loss is not finite");

    if (dy_out) {
        std::vector<double>& dy = *dy_out;
        dy.assign(n, 0.0);
        const double w_l1 = cfg.lambda_l1 / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double d = y.v[i] - target[i];
            if (d > 0.0) dy[i] = w_l1;
            else if (d < 0.0) dy[i] = -w_l1;
        }
        if (cfg.lambda_dcl != 0.0) {
            const std::vector<double> dgrad = dcl_gradient(y.v, y.width, y.height);
            for (std::size_t i = 0; i < n; ++i) dy[i] += cfg.lambda_dcl * dgrad[i];
        }
    }
    return loss;
}

} // namespace

LossBreakdown loss_value(const SegModel& model, const Tensor& x, const std::vector<double>& target,
                         const LossConfig& cfg) {
    ForwardCache cache;
    forward_cached(model, x, cache);
    return loss_of_output(cache.y, target, cfg, nullptr);
}

LossBreakdown loss_and_grads(const SegModel& model, const Tensor& x,
                             const std::vector<double>& target, const LossConfig& cfg,
                             ParamGrads& grads) {
    ForwardCache cache;
    forward_cached(model, x, cache);
    std::vector<double> dy;
    const LossBreakdown loss = loss_of_output(cache.y, target, cfg, &dy);

    // Sigmoid backward: dz3 = dy * y * (1 - y).
    Tensor dz3(1, cache.y.height, cache.y.width);
    for (std::size_t i = 0; i < dy.size(); ++i)
        dz3.v[i] = dy[i] * cache.y.v[i] * (1.0 - cache.y.v[i]);

    Tensor da2 = conv_backward(model.layers[2], cache.a2, dz3, grads.w[2], grads.b[2]);
    for (std::size_t i = 0; i < da2.v.size(); ++i)
        if (cache.z2.v[i] <= 0.0) da2.v[i] = 0.0; // ReLU gate
    Tensor da1 = conv_backward(model.layers[1], cache.a1, da2, grads.w[1], grads.b[1]);
    for (std::size_t i = 0; i < da1.v.size(); ++i)
        if (cache.z1.v[i] <= 0.0) da1.v[i] = 0.0;
    conv_backward(model.layers[0], cache.x, da1, grads.w[0], grads.b[0]);
    return loss;
}

void TrainConfig::validate() const {
    if (channels != 1 && channels != 2)
        raise(ErrorKind::ChannelMismatch, "channels must be 1 or 2");
    if (epochs < 1) raise(ErrorKind::InvalidArgument, "epochs must be at least 1");
    if (batch_size < 1) raise(ErrorKind::InvalidArgument, "batch size must be at least 1");
    if (learning_rate <= 0.0) raise(ErrorKind::InvalidArgument, "learning rate must be positive");
    if (lambda_l1 < 0.0 || lambda_dcl < 0.0)
        raise(ErrorKind::InvalidArgument, "loss weights must be non-negative");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0 || adam_eps <= 0.0)
        raise(ErrorKind::InvalidArgument, "adam parameters out of range");
    if (threshold < 0.0 || threshold > 1.0)
        raise(ErrorKind::InvalidArgument, "threshold must be in [0, 1]");
}

namespace {

struct Sample {
    Tensor x;
    std::vector<double> target;
    BinaryMask gt;
};

Sample load_sample(const DatasetManifest& manifest, const ManifestRecord& rec, int c_in) {
    Sample s;
    const GrayImage image = load_image(manifest.resolve(rec.right));
    BinaryMask fm;
    if (c_in == 2) fm = load_mask(manifest.resolve(rec.fm));
    s.x = make_input(image, c_in == 2 ? &fm : nullptr, c_in);
    s.gt = load_mask(manifest.resolve(rec.gt));
    if (s.gt.width() != image.width() || s.gt.height() != image.height())
        raise(ErrorKind::DimensionMismatch, "ground truth size differs from image: " + rec.gt);
    s.target.resize(s.gt.size());
    for (std::size_t i = 0; i < s.target.size(); ++i) s.target[i] = s.gt.data()[i];
    return s;
}

struct AdamState {
    std::array<std::vector<double>, 3> mw, vw, mb, vb;
    long long t = 0;

    static AdamState zeros_like(const SegModel& model) {
        AdamState s;
        for (std::size_t l = 0; l < 3; ++l) {
            s.mw[l].assign(model.layers[l].w.size(), 0.0);
            s.vw[l].assign(model.layers[l].w.size(), 0.0);
            s.mb[l].assign(model.layers[l].b.size(), 0.0);
            s.vb[l].assign(model.layers[l].b.size(), 0.0);
        }
        return s;
    }
};

void adam_update(std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m,
                 std::vector<double>& v, const TrainConfig& cfg, double bias1, double bias2) {
    for (std::size_t i = 0; i < p.size(); ++i) {
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
        const double mhat = m[i] / bias1;
        const double vhat = v[i] / bias2;
        p[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_eps);
    }
}

double validation_f(const SegModel& model, const std::vector<Sample>& samples, double threshold) {
    if (samples.empty()) return 0.0;
    std::vector<Prf> metrics;
    metrics.reserve(samples.size());
    for (const Sample& s : samples) {
        const Tensor y = forward(model, s.x);
        std::vector<std::uint8_t> bits(y.v.size());
        for (std::size_t i = 0; i < y.v.size(); ++i) bits[i] = y.v[i] > threshold ? 1 : 0;
        const BinaryMask pred(y.width, y.height, std::move(bits));
        metrics.push_back(prf(confusion(pred, s.gt)));
    }
    return aggregate(metrics).mean_f;
}

} // namespace

TrainResult train(const DatasetManifest& manifest, const TrainConfig& cfg,
                  const std::string& checkpoint_path,
                  const std::function<void(const EpochStats&)>& on_epoch) {
    cfg.validate();
    std::vector<Sample> train_set;
    std::vector<Sample> val_set;
    for (const ManifestRecord& rec : manifest.records) {
        if (rec.split == "train") train_set.push_back(load_sample(manifest, rec, cfg.channels));
        else val_set.push_back(load_sample(manifest, rec, cfg.channels));
    }
    if (train_set.empty()) raise(ErrorKind::EmptyInput, "manifest has no train records");
    const std::vector<Sample>& val_ref = val_set.empty() ? train_set : val_set;

    TrainResult result;
    result.model = init_model(cfg.channels, cfg.seed);
    AdamState adam = AdamState::zeros_like(result.model);
    const LossConfig loss_cfg{cfg.lambda_l1, cfg.lambda_dcl};
    const int n = static_cast<int>(train_set.size());
    const int batch = std::min(cfg.batch_size, n);

    std::vector<int> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        Rng shuffle_rng(mix_seed(cfg.seed, 0x45504F43ULL + static_cast<std::uint64_t>(epoch)));
        for (int i = n - 1; i > 0; --i)
            std::swap(order[static_cast<std::size_t>(i)],
                      order[static_cast<std::size_t>(shuffle_rng.uniform_int(0, i))]);

        EpochStats stats;
        stats.epoch = epoch;
        for (int start = 0; start < n; start += batch) {
            const int count = std::min(batch, n - start);
            ParamGrads grads = ParamGrads::zeros_like(result.model);
            for (int k = 0; k < count; ++k) {
                const Sample& s = train_set[static_cast<std::size_t>(order[static_cast<std::size_t>(start + k)])];
                const LossBreakdown loss =
                    loss_and_grads(result.model, s.x, s.target, loss_cfg, grads);
                stats.loss += loss.total;
                stats.l1 += loss.l1;
                stats.dcl += loss.dcl;
            }
            grads.scale(1.0 / count);
            adam.t += 1;
            const double bias1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(adam.t));
            const double bias2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(adam.t));
            for (std::size_t l = 0; l < 3; ++l) {
                adam_update(result.model.layers[l].w, grads.w[l], adam.mw[l], adam.vw[l], cfg,
                            bias1, bias2);
                adam_update(result.model.layers[l].b, grads.b[l], adam.mb[l], adam.vb[l], cfg,
                            bias1, bias2);
            }
        }
        stats.loss /= n;
        stats.l1 /= n;
        stats.dcl /= n;
        stats.val_f = validation_f(result.model, val_ref, cfg.threshold);
        result.history.push_back(stats);
        if (!checkpoint_path.empty()) save_model(result.model, checkpoint_path);
        if (on_epoch) on_epoch(stats);
    }
    return result;
}

void write_history_csv(const std::vector<EpochStats>& history, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) raise(ErrorKind::Io, "cannot open " + path + " for writing");
    std::fputs("epoch,loss,l1,dcl,val_f\n", f);
    for (const EpochStats& e : history)
        std::fprintf(f, "%d,%.17g,%.17g,%.17g,%.17g\n", e.epoch, e.loss, e.l1, e.dcl, e.val_f);
    if (std::fclose(f) != 0) raise(ErrorKind::Io, "write failed for " + path);
}

Tensor make_input(const GrayImage& image, const BinaryMask* fm, int c_in) {
    if (c_in != 1 && c_in != 2)
        raise(ErrorKind::ChannelMismatch, "model input channels must be 1 or 2");
    if (c_in == 2) {
        if (!fm) raise(ErrorKind::ChannelMismatch, "two-channel model needs a guidance mask");
        if (fm->width() != image.width() || fm->height() != image.height())
            raise(ErrorKind::DimensionMismatch, "guidance mask size differs from image");
    }
    Tensor x(c_in, image.height(), image.width());
    for (int r = 0; r < image.height(); ++r)
        for (int c = 0; c < image.width(); ++c) x.at(0, r, c) = image.at(r, c) / 255.0;
    if (c_in == 2)
        for (int r = 0; r < image.height(); ++r)
            for (int c = 0; c < image.width(); ++c) x.at(1, r, c) = fm->at(r, c);
    return x;
}

BinaryMask predict(const SegModel& model, const GrayImage& image, const BinaryMask* fm,
                   double threshold) {
    const Tensor y = forward(model, make_input(image, fm, model.c_in));
    std::vector<std::uint8_t> bits(y.v.size());
    for (std::size_t i = 0; i < y.v.size(); ++i) bits[i] = y.v[i] > threshold ? 1 : 0;
    return BinaryMask(y.width, y.height, std::move(bits));
}

namespace {

constexpr char kMagic[4] = {'F', 'G', 'S', 'M'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::string& out, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, sizeof bits);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

struct ByteReader {
    const std::string& buf;
    std::size_t pos = 0;

    std::uint32_t u32() {
        if (pos + 4 > buf.size()) raise(ErrorKind::FileMalformed, "model file truncated");
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
        pos += 4;
        return v;
    }
    double f64() {
        if (pos + 8 > buf.size()) raise(ErrorKind::FileMalformed, "model file truncated");
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
        pos += 8;
        double d;
        std::memcpy(&d, &v, sizeof d);
        return d;
    }
};

} // namespace

void save_model(const SegModel& model, const std::string& path) {
    check_model_shape(model);
    std::string out;
    out.append(kMagic, 4);
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(model.c_in));
    put_u32(out, 3);
    for (const ConvLayer& layer : model.layers) {
        put_u32(out, static_cast<std::uint32_t>(layer.in_ch));
        put_u32(out, static_cast<std::uint32_t>(layer.out_ch));
        put_u32(out, 3); // kernel
    }
    for (const ConvLayer& layer : model.layers) {
        for (double w : layer.w) put_f64(out, w);
        for (double b : layer.b) put_f64(out, b);
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) raise(ErrorKind::Io, "cannot open " + path + " for writing");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    f.close();
    if (!f) raise(ErrorKind::Io, "write failed for " + path);
}

SegModel load_model(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) raise(ErrorKind::FileMissing, "model file not found: " + path);
    std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    if (buf.size() < 4 || std::memcmp(buf.data(), kMagic, 4) != 0)
        raise(ErrorKind::FileFormat, "not a segmenter model file: " + path);
    ByteReader reader{buf, 4};
    const std::uint32_t version = reader.u32();
    if (version != kVersion)
        raise(ErrorKind::FileFormat, "unsupported model version " + std::to_string(version));
    const std::uint32_t c_in = reader.u32();
    const std::uint32_t layer_count = reader.u32();
    if ((c_in != 1 && c_in != 2) || layer_count != 3)
        raise(ErrorKind::FileMalformed, "model header out of range in " + path);

    SegModel model;
    model.c_in = static_cast<int>(c_in);
    for (std::size_t l = 0; l < 3; ++l) {
        ConvLayer& layer = model.layers[l];
        layer.in_ch = static_cast<int>(reader.u32());
        layer.out_ch = static_cast<int>(reader.u32());
        const std::uint32_t kernel = reader.u32();
        if (kernel != 3) raise(ErrorKind::FileMalformed, "unexpected kernel size in " + path);
        layer.w.resize(static_cast<std::size_t>(layer.in_ch) * layer.out_ch * 9);
        layer.b.resize(static_cast<std::size_t>(layer.out_ch));
    }
    for (ConvLayer& layer : model.layers) {
        for (double& w : layer.w) w = reader.f64();
        for (double& b : layer.b) b = reader.f64();
    }
    if (reader.pos != buf.size())
        raise(ErrorKind::FileMalformed, "trailing bytes in model file " + path);
    check_model_shape(model);
    for (const ConvLayer& layer : model.layers) {
        for (double w : layer.w)
            if (!std::isfinite(w)) raise(ErrorKind::FileMalformed, "non-finite weight in " + path);
        for (double b : layer.b)
            if (!std::isfinite(b)) raise(ErrorKind::FileMalformed, "non-finite bias in " + path);
    }
    return model;
}

ModelGradCheckReport model_gradcheck(const SegModel& model, const Tensor& x,
                                     const std::vector<double>& target, const LossConfig& cfg,
                                     double epsilon, double rel_tol, double abs_floor) {
    ParamGrads grads = ParamGrads::zeros_like(model);
    loss_and_grads(model, x, target, cfg, grads);

    SegModel probe = model;
    ModelGradCheckReport report;
    auto check_span = [&](std::vector<double>& params, const std::vector<double>& analytic) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            const double orig = params[i];
            params[i] = orig + epsilon;
            const double fp = loss_value(probe, x, target, cfg).total;
            params[i] = orig - epsilon;
            const double fm = loss_value(probe, x, target, cfg).total;
            params[i] = orig;
            const double fd = (fp - fm) / (2.0 * epsilon);
            const double abs_err = std::abs(fd - analytic[i]);
            const double denom = std::max({std::abs(fd), std::abs(analytic[i]), 1e-12});
            const double rel = abs_err / denom;
            report.max_rel_err = std::max(report.max_rel_err, rel);
            ++report.checked;
            if (abs_err <= abs_floor || rel <= rel_tol) ++report.passed;
        }
    };
    for (std::size_t l = 0; l < 3; ++l) {
        check_span(probe.layers[l].w, grads.w[l]);
        check_span(probe.layers[l].b, grads.b[l]);
    }
    return report;
}

} // namespace fenceguide

#include "fenceguide.h"

#include <cstring>
#include <exception>
#include <new>
#include <string>
#include <vector>

#include "fenceguide/dcl.hpp"
#include "fenceguide/edges.hpp"
#include "fenceguide/error.hpp"
#include "fenceguide/eval.hpp"
#include "fenceguide/guidance.hpp"
#include "fenceguide/image.hpp"
#include "fenceguide/segmenter.hpp"
#include "fenceguide/synth.hpp"

namespace {

thread_local std::string g_last_error;

fenceguide::GrayImage* ToImage(fg_image* h) { return reinterpret_cast<fenceguide::GrayImage*>(h); }
const fenceguide::GrayImage* ToImage(const fg_image* h) {
    return reinterpret_cast<const fenceguide::GrayImage*>(h);
}
fg_image* FromImage(fenceguide::GrayImage* p) { return reinterpret_cast<fg_image*>(p); }

fenceguide::BinaryMask* ToMask(fg_mask* h) { return reinterpret_cast<fenceguide::BinaryMask*>(h); }
const fenceguide::BinaryMask* ToMask(const fg_mask* h) {
    return reinterpret_cast<const fenceguide::BinaryMask*>(h);
}
fg_mask* FromMask(fenceguide::BinaryMask* p) { return reinterpret_cast<fg_mask*>(p); }

fenceguide::MasCurve* ToCurve(fg_curve* h) { return reinterpret_cast<fenceguide::MasCurve*>(h); }
const fenceguide::MasCurve* ToCurve(const fg_curve* h) {
    return reinterpret_cast<const fenceguide::MasCurve*>(h);
}
fg_curve* FromCurve(fenceguide::MasCurve* p) { return reinterpret_cast<fg_curve*>(p); }

fenceguide::SegModel* ToModel(fg_model* h) { return reinterpret_cast<fenceguide::SegModel*>(h); }
const fenceguide::SegModel* ToModel(const fg_model* h) {
    return reinterpret_cast<const fenceguide::SegModel*>(h);
}
fg_model* FromModel(fenceguide::SegModel* p) { return reinterpret_cast<fg_model*>(p); }

fg_status StatusFrom(fenceguide::ErrorKind kind) {
    using fenceguide::ErrorKind;
    switch (kind) {
        case ErrorKind::InvalidArgument: return FG_ERR_INVALID_ARGUMENT;
        case ErrorKind::DimensionMismatch: return FG_ERR_DIMENSION_MISMATCH;
        case ErrorKind::InvalidShift: return FG_ERR_INVALID_SHIFT;
        case ErrorKind::ImageTooSmall: return FG_ERR_IMAGE_TOO_SMALL;
        case ErrorKind::FileMissing: return FG_ERR_FILE_MISSING;
        case ErrorKind::FileFormat: return FG_ERR_FILE_FORMAT;
        case ErrorKind::FileMalformed: return FG_ERR_FILE_MALFORMED;
        case ErrorKind::Io: return FG_ERR_IO;
        case ErrorKind::EmptyInput: return FG_ERR_EMPTY_INPUT;
        case ErrorKind::CropBounds: return FG_ERR_CROP_BOUNDS;
        case ErrorKind::ChannelMismatch: return FG_ERR_CHANNEL_MISMATCH;
        case ErrorKind::NonFiniteLoss: return FG_ERR_NON_FINITE_LOSS;
    }
    return FG_ERR_UNKNOWN;
}

template <typename Fn>
fg_status Guarded(Fn&& fn) {
    try {
        fn();
        return FG_OK;
    } catch (const fenceguide::Error& e) {
        g_last_error = e.what();
        return StatusFrom(e.kind());
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return FG_ERR_UNKNOWN;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return FG_ERR_UNKNOWN;
    }
}

fg_status Fail(fg_status status, const char* message) {
    g_last_error = message;
    return status;
}

fenceguide::CannyParams CannyFrom(const fg_canny_params* p) {
    fenceguide::CannyParams cp;
    if (p) {
        cp.sigma = p->sigma;
        cp.low = p->low;
        cp.high = p->high;
    }
    return cp;
}

fenceguide::GuidanceParams GuidanceFrom(const fg_guidance_params* p) {
    fenceguide::GuidanceParams gp;
    if (p) {
        gp.tau = p->tau;
        gp.num_buckets = p->num_buckets;
        gp.bandpass_inner = p->bandpass_inner;
        gp.bandpass_outer = p->bandpass_outer;
        gp.shift_min = p->shift_min;
        gp.shift_max = p->shift_max;
        gp.threads = p->threads;
    }
    return gp;
}

fenceguide::SynthConfig SynthFrom(const fg_synth_config* c) {
    fenceguide::SynthConfig sc;
    sc.width = c->width;
    sc.height = c->height;
    sc.train_count = c->train_count;
    sc.test_count = c->test_count;
    sc.seed = c->seed;
    sc.background_dir.assign(c->background_dir,
                             strnlen(c->background_dir, sizeof c->background_dir));
    sc.fg_shift_min = c->fg_shift_min;
    sc.fg_shift_max = c->fg_shift_max;
    sc.wire_min = c->wire_min;
    sc.wire_max = c->wire_max;
    sc.cell_min = c->cell_min;
    sc.cell_max = c->cell_max;
    sc.rotation_max = c->rotation_max;
    sc.scale_min = c->scale_min;
    sc.scale_max = c->scale_max;
    sc.translate_max = c->translate_max;
    sc.brightness_max = c->brightness_max;
    sc.contrast_min = c->contrast_min;
    sc.contrast_max = c->contrast_max;
    sc.noise_p = c->noise_p;
    sc.tau = c->tau;
    sc.canny_sigma = c->canny_sigma;
    sc.canny_low = c->canny_low;
    sc.canny_high = c->canny_high;
    sc.threads = c->threads;
    return sc;
}

void SynthInto(const fenceguide::SynthConfig& sc, fg_synth_config* c) {
    c->width = sc.width;
    c->height = sc.height;
    c->train_count = sc.train_count;
    c->test_count = sc.test_count;
    c->seed = sc.seed;
    if (sc.background_dir.size() >= sizeof c->background_dir)
        fenceguide::raise(fenceguide::ErrorKind::InvalidArgument, "background_dir path too long");
    std::memset(c->background_dir, 0, sizeof c->background_dir);
    std::memcpy(c->background_dir, sc.background_dir.data(), sc.background_dir.size());
    c->fg_shift_min = sc.fg_shift_min;
    c->fg_shift_max = sc.fg_shift_max;
    c->wire_min = sc.wire_min;
    c->wire_max = sc.wire_max;
    c->cell_min = sc.cell_min;
    c->cell_max = sc.cell_max;
    c->rotation_max = sc.rotation_max;
    c->scale_min = sc.scale_min;
    c->scale_max = sc.scale_max;
    c->translate_max = sc.translate_max;
    c->brightness_max = sc.brightness_max;
    c->contrast_min = sc.contrast_min;
    c->contrast_max = sc.contrast_max;
    c->noise_p = sc.noise_p;
    c->tau = sc.tau;
    c->canny_sigma = sc.canny_sigma;
    c->canny_low = sc.canny_low;
    c->canny_high = sc.canny_high;
    c->threads = sc.threads;
}

fenceguide::TrainConfig TrainFrom(const fg_train_config* c) {
    fenceguide::TrainConfig tc;
    tc.channels = c->channels;
    tc.epochs = c->epochs;
    tc.batch_size = c->batch_size;
    tc.learning_rate = c->learning_rate;
    tc.lambda_l1 = c->lambda_l1;
    tc.lambda_dcl = c->lambda_dcl;
    tc.beta1 = c->beta1;
    tc.beta2 = c->beta2;
    tc.adam_eps = c->adam_eps;
    tc.seed = c->seed;
    tc.threshold = c->threshold;
    return tc;
}

} // namespace

extern "C" {

const char* fg_version_string(void) { return "0.1.0"; }

const char* fg_last_error(void) { return g_last_error.c_str(); }

const char* fg_status_name(fg_status status) {
    switch (status) {
        case FG_OK: return "ok";
        case FG_ERR_INVALID_ARGUMENT: return "invalid_argument";
        case FG_ERR_DIMENSION_MISMATCH: return "dimension_mismatch";
        case FG_ERR_INVALID_SHIFT: return "invalid_shift";
        case FG_ERR_IMAGE_TOO_SMALL: return "image_too_small";
        case FG_ERR_FILE_MISSING: return "file_missing";
        case FG_ERR_FILE_FORMAT: return "file_format";
        case FG_ERR_FILE_MALFORMED: return "file_malformed";
        case FG_ERR_IO: return "io";
        case FG_ERR_EMPTY_INPUT: return "empty_input";
        case FG_ERR_CROP_BOUNDS: return "crop_bounds";
        case FG_ERR_CHANNEL_MISMATCH: return "channel_mismatch";
        case FG_ERR_NON_FINITE_LOSS: return "non_finite_loss";
        case FG_ERR_UNKNOWN: break;
    }
    return "unknown";
}

// ---- images and masks -------------------------------------------------

fg_status fg_image_create(int width, int height, const uint8_t* pixels, fg_image** out) {
    if (!out) return Fail(FG_ERR_INVALID_ARGUMENT, "out is null");
    *out = nullptr;
    return Guarded([&] {
        if (pixels) {
            std::vector<uint8_t> data(pixels,
                                      pixels + static_cast<size_t>(width) * height);
            *out = FromImage(new fenceguide::GrayImage(width, height, std::move(data)));
        } else {
            *out = FromImage(new fenceguide::GrayImage(width, height));
        }
    });
}

fg_status fg_image_load(const char* path, fg_image** out) {
    if (!path || !out) return Fail(FG_ERR_INVALID_ARGUMENT, "path or out is null");
    *out = nullptr;
    return Guarded([&] { *out = FromImage(new fenceguide::GrayImage(fenceguide::load_image(path))); });
}

fg_status fg_image_save(const fg_image* image, const char* path) {
    if (!image || !path) return Fail(FG_ERR_INVALID_ARGUMENT, "image or path is null");
    return Guarded([&] { fenceguide::save_image(*ToImage(image), path); });
}

int fg_image_width(const fg_image* image) { return image ? ToImage(image)->width() : 0; }
int fg_image_height(const fg_image* image) { return image ? ToImage(image)->height() : 0; }

const uint8_t* fg_image_pixels(const fg_image* image) {
    return image ? ToImage(image)->data().data() : nullptr;
}

void fg_image_free(fg_image* image) { delete ToImage(image); }

fg_status fg_mask_create(int width, int height, const uint8_t* values, fg_mask** out) {
    if (!out) return Fail(FG_ERR_INVALID_ARGUMENT, "out is null");
    *out = nullptr;
    return Guarded([&] {
        if (values) {
            std::vector<uint8_t> data(values,
                                      values + static_cast<size_t>(width) * height);
            *out = FromMask(new fenceguide::BinaryMask(width, height, std::move(data)));
        } else {
            *out = FromMask(new fenceguide::BinaryMask(width, height));
        }
    });
}

fg_status fg_mask_load(const char* path, fg_mask** out) {
    if (!path || !out) return Fail(FG_ERR_INVALID_ARGUMENT, "path or out is null");
    *out = nullptr;
    return Guarded([&] { *out = FromMask(new fenceguide::BinaryMask(fenceguide::load_mask(path))); });
}

fg_status fg_mask_save(const fg_mask* mask, const char* path) {
    if (!mask || !path) return Fail(FG_ERR_INVALID_ARGUMENT, "mask or path is null");
    return Guarded([&] { fenceguide::save_mask(*ToMask(mask), path); });
}

int fg_mask_width(const fg_mask* mask) { return mask ? ToMask(mask)->width() : 0; }
int fg_mask_height(const fg_mask* mask) { return mask ? ToMask(mask)->height() : 0; }

const uint8_t* fg_mask_values(const fg_mask* mask) {
    return mask ? ToMask(mask)->data().data() : nullptr;
}

int64_t fg_mask_count_ones(const fg_mask* mask) {
    return mask ? static_cast<int64_t>(ToMask(mask)->count_ones()) : 0;
}

void fg_mask_free(fg_mask* mask) { delete ToMask(mask); }

// ---- edge detection ----------------------------------------------------

void fg_canny_params_default(fg_canny_params* params) {
    if (!params) return;
    fenceguide::CannyParams cp;
    params->sigma = cp.sigma;
    params->low = cp.low;
    params->high = cp.high;
}

fg_status fg_canny(const fg_image* image, const fg_canny_params* params, fg_mask** out) {
    if (!image || !out) return Fail(FG_ERR_INVALID_ARGUMENT, "image or out is null");
    *out = nullptr;
    return Guarded([&] {
        *out = FromMask(
            new fenceguide::BinaryMask(fenceguide::canny(*ToImage(image), CannyFrom(params))));
    });
}

// ---- guidance ----------------------------------------------------------

void fg_guidance_params_default(fg_guidance_params* params) {
    if (!params) return;
    fenceguide::GuidanceParams gp;
    params->tau = gp.tau;
    params->num_buckets = gp.num_buckets;
    params->bandpass_inner = gp.bandpass_inner;
    params->bandpass_outer = gp.bandpass_outer;
    params->shift_min = gp.shift_min;
    params->shift_max = gp.shift_max;
    params->threads = gp.threads;
}

fg_status fg_dual_subtract(const fg_mask* cr, const fg_mask* cl_shifted, fg_mask** out) {
    if (!cr || !cl_shifted || !out) return Fail(FG_ERR_INVALID_ARGUMENT, "mask or out is null");
    *out = nullptr;
    return Guarded([&] {
        *out = FromMask(
            new fenceguide::BinaryMask(fenceguide::dual_subtract(*ToMask(cr), *ToMask(cl_shifted))));
    });
}

fg_status fg_mask_shift(const fg_mask* mask, int shift, fg_mask** out) {
    if (!mask || !out) return Fail(FG_ERR_INVALID_ARGUMENT, "mask or out is null");
    *out = nullptr;
    return Guarded([&] {
        *out = FromMask(new fenceguide::BinaryMask(fenceguide::shift_horizontal(*ToMask(mask), shift)));
    });
}

fg_status fg_estimate_shift(const fg_mask* cl, const fg_mask* cr,
                            const fg_guidance_params* params, fg_curve** out) {
    if (!cl || !cr || !out) return Fail(FG_ERR_INVALID_ARGUMENT, "mask or out is null");
    *out = nullptr;
    return Guarded([&] {
        fenceguide::GuidanceParams gp = GuidanceFrom(params);
        if (gp.tau <= 0.0) gp.tau = fenceguide::auto_tau(*ToMask(cr));
        *out = FromCurve(
            new fenceguide::MasCurve(fenceguide::estimate_shift(*ToMask(cl), *ToMask(cr), gp)));
    });
}

fg_status fg_guidance_mask(const fg_image* left, const fg_image* right,
                           const fg_canny_params* canny_params,
                           const fg_guidance_params* params, fg_mask** fm_out,
                           fg_curve** curve_out) {
    if (!left || !right || !fm_out)
        return Fail(FG_ERR_INVALID_ARGUMENT, "image or fm_out is null");
    *fm_out = nullptr;
    if (curve_out) *curve_out = nullptr;
    return Guarded([&] {
        fenceguide::CannyParams cp = CannyFrom(canny_params);
        fenceguide::GuidanceParams gp = GuidanceFrom(params);
        if (gp.tau <= 0.0) gp.tau = fenceguide::auto_tau(fenceguide::canny(*ToImage(right), cp));
        fenceguide::GuidanceResult res =
            fenceguide::guidance_mask(*ToImage(left), *ToImage(right), cp, gp);
        *fm_out = FromMask(new fenceguide::BinaryMask(std::move(res.fm)));
        if (curve_out) *curve_out = FromCurve(new fenceguide::MasCurve(std::move(res.curve)));
    });
}

int fg_curve_shift_min(const fg_curve* curve) { return curve ? ToCurve(curve)->shift_min : 0; }
int fg_curve_shift_max(const fg_curve* curve) { return curve ? ToCurve(curve)->shift_max : 0; }

double fg_curve_score_at(const fg_curve* curve, int shift) {
    if (!curve) return 0.0;
    const fenceguide::MasCurve* c = ToCurve(curve);
    if (shift < c->shift_min || shift > c->shift_max) return 0.0;
    return c->score_at(shift);
}

int fg_curve_best_shift(const fg_curve* curve) { return curve ? ToCurve(curve)->best_shift : 0; }

double fg_curve_best_score(const fg_curve* curve) {
    return curve ? ToCurve(curve)->best_score : 0.0;
}

int fg_curve_low_confidence(const fg_curve* curve) {
    return curve && ToCurve(curve)->low_confidence ? 1 : 0;
}

fg_status fg_curve_write_csv(const fg_curve* curve, const char* path) {
    if (!curve || !path) return Fail(FG_ERR_INVALID_ARGUMENT, "curve or path is null");
    return Guarded([&] { ToCurve(curve)->write_csv(path); });
}

void fg_curve_free(fg_curve* curve) { delete ToCurve(curve); }

fg_status fg_spectrum_render(const fg_mask* fm, double bandpass_inner, double bandpass_outer,
                             fg_image** out) {
    if (!fm || !out) return Fail(FG_ERR_INVALID_ARGUMENT, "mask or out is null");
    *out = nullptr;
    return Guarded([&] {
        fenceguide::Spectrum spec = fenceguide::magnitude_spectrum(*ToMask(fm));
        double outer = bandpass_outer > 0.0 ? bandpass_outer
                                            : std::min(spec.width, spec.height) / 2.0;
        spec = fenceguide::bandpass(spec, bandpass_inner, outer);
        *out = FromImage(new fenceguide::GrayImage(fenceguide::render_spectrum(spec)));
    });
}

// ---- directional connectivity loss --------------------------------------

fg_status fg_dcl_value(const fg_mask* mask, double* out) {
    if (!mask || !out) return Fail(FG_ERR_INVALID_ARGUMENT, "mask or out is null");
    return Guarded([&] { *out = fenceguide::dcl_value(*ToMask(mask)); });
}

fg_status fg_dcl_connectivity_image(const fg_mask* mask, fg_image** out) {
    if (!mask || !out) return Fail(FG_ERR_INVALID_ARGUMENT, "mask or out is null");
    *out = nullptr;
    return Guarded([&] {
        fenceguide::ConnectivityMap map = fenceguide::connectivity_map(*ToMask(mask));
        *out = FromImage(new fenceguide::GrayImage(fenceguide::render_connectivity(map)));
    });
}

fg_status fg_dcl_gradcheck(uint64_t seed, int fields, int* ok_out, double* pass_fraction_out,
                           double* max_rel_err_out) {
    if (fields < 1) return Fail(FG_ERR_INVALID_ARGUMENT, "fields must be at least 1");
    return Guarded([&] {
        fenceguide::GradCheckSuite cfg;
        cfg.fields = fields;
        fenceguide::GradCheckSuiteReport rep = fenceguide::dcl_gradcheck_suite(seed, cfg);
        if (ok_out) *ok_out = rep.ok ? 1 : 0;
        if (pass_fraction_out)
            *pass_fraction_out =
                rep.checked > 0 ? static_cast<double>(rep.passed) / rep.checked : 1.0;
        if (max_rel_err_out) *max_rel_err_out = rep.max_rel_err;
    });
}

// ---- synthetic dataset ---------------------------------------------------

void fg_synth_config_default(fg_synth_config* config) {
    if (!config) return;
    SynthInto(fenceguide::SynthConfig{}, config);
}

fg_status fg_synth_config_load(const char* path, fg_synth_config* config) {
    if (!path || !config) return Fail(FG_ERR_INVALID_ARGUMENT, "path or config is null");
    return Guarded([&] { SynthInto(fenceguide::SynthConfig::from_file(path), config); });
}

fg_status fg_synth_generate(const fg_synth_config* config, const char* out_dir) {
    if (!config || !out_dir) return Fail(FG_ERR_INVALID_ARGUMENT, "config or out_dir is null");
    return Guarded([&] { fenceguide::generate_dataset(SynthFrom(config), out_dir); });
}

// ---- segmenter -----------------------------------------------------------

void fg_train_config_default(fg_train_config* config) {
    if (!config) return;
    fenceguide::TrainConfig tc;
    config->channels = tc.channels;
    config->epochs = tc.epochs;
    config->batch_size = tc.batch_size;
    config->learning_rate = tc.learning_rate;
    config->lambda_l1 = tc.lambda_l1;
    config->lambda_dcl = tc.lambda_dcl;
    config->beta1 = tc.beta1;
    config->beta2 = tc.beta2;
    config->adam_eps = tc.adam_eps;
    config->seed = tc.seed;
    config->threshold = tc.threshold;
}

fg_status fg_train(const char* manifest_path, const fg_train_config* config,
                   const char* model_out, const char* history_csv, fg_epoch_callback on_epoch,
                   void* user) {
    if (!manifest_path || !config || !model_out)
        return Fail(FG_ERR_INVALID_ARGUMENT, "manifest_path, config or model_out is null");
    return Guarded([&] {
        fenceguide::DatasetManifest manifest = fenceguide::load_manifest(manifest_path);
        fenceguide::TrainConfig tc = TrainFrom(config);
        auto forward_epoch = [&](const fenceguide::EpochStats& s) {
            if (on_epoch) on_epoch(s.epoch, s.loss, s.l1, s.dcl, s.val_f, user);
        };
        fenceguide::TrainResult result = fenceguide::train(manifest, tc, model_out, forward_epoch);
        if (history_csv) fenceguide::write_history_csv(result.history, history_csv);
    });
}

fg_status fg_model_load(const char* path, fg_model** out) {
    if (!path || !out) return Fail(FG_ERR_INVALID_ARGUMENT, "path or out is null");
    *out = nullptr;
    return Guarded([&] { *out = FromModel(new fenceguide::SegModel(fenceguide::load_model(path))); });
}

fg_status fg_model_save(const fg_model* model, const char* path) {
    if (!model || !path) return Fail(FG_ERR_INVALID_ARGUMENT, "model or path is null");
    return Guarded([&] { fenceguide::save_model(*ToModel(model), path); });
}

int fg_model_channels(const fg_model* model) { return model ? ToModel(model)->c_in : 0; }

void fg_model_free(fg_model* model) { delete ToModel(model); }

fg_status fg_predict(const fg_model* model, const fg_image* image, const fg_mask* fm,
                     double threshold, fg_mask** out) {
    if (!model || !image || !out) return Fail(FG_ERR_INVALID_ARGUMENT, "model, image or out is null");
    *out = nullptr;
    return Guarded([&] {
        *out = FromMask(new fenceguide::BinaryMask(
            fenceguide::predict(*ToModel(model), *ToImage(image), ToMask(fm), threshold)));
    });
}

// ---- evaluation ------------------------------------------------------------

fg_status fg_eval_pair(const fg_mask* pred, const fg_mask* gt, double* precision_out,
                       double* recall_out, double* f_out, int* degenerate_out) {
    if (!pred || !gt) return Fail(FG_ERR_INVALID_ARGUMENT, "pred or gt is null");
    return Guarded([&] {
        fenceguide::Prf m = fenceguide::prf(fenceguide::confusion(*ToMask(pred), *ToMask(gt)));
        if (precision_out) *precision_out = m.precision;
        if (recall_out) *recall_out = m.recall;
        if (f_out) *f_out = m.f;
        if (degenerate_out) *degenerate_out = m.degenerate ? 1 : 0;
    });
}

fg_status fg_eval_dirs(const char* pred_dir, const char* gt_dir, int tolerance, int folds,
                       int threads, const char* report_csv, fg_eval_summary* summary_out) {
    if (!pred_dir || !gt_dir) return Fail(FG_ERR_INVALID_ARGUMENT, "pred_dir or gt_dir is null");
    return Guarded([&] {
        fenceguide::EvalReport report =
            fenceguide::evaluate_dirs(pred_dir, gt_dir, tolerance, folds, threads);
        if (report_csv) fenceguide::write_report_csv(report, report_csv);
        if (summary_out) {
            summary_out->count = report.summary.count;
            summary_out->mean_precision = report.summary.mean_precision;
            summary_out->mean_recall = report.summary.mean_recall;
            summary_out->mean_f = report.summary.mean_f;
            summary_out->std_precision = report.summary.std_precision;
            summary_out->std_recall = report.summary.std_recall;
            summary_out->std_f = report.summary.std_f;
        }
    });
}

} // extern "C"

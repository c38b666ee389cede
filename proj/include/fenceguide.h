/* C API for the fenceguide library: stereo-guided fence segmentation.
 *
 * Every function that can fail returns an fg_status; FG_OK is 0. On
 * failure a human-readable message is available from fg_last_error()
 * (thread-local, overwritten by the next failing call on that thread).
 * Objects returned through fg_*** out-parameters are owned by the caller
 * and released with the matching fg_*_free().
 */
#ifndef FENCEGUIDE_H
#define FENCEGUIDE_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fg_status {
    FG_OK = 0,
    FG_ERR_INVALID_ARGUMENT = 1,
    FG_ERR_DIMENSION_MISMATCH = 2,
    FG_ERR_INVALID_SHIFT = 3,
    FG_ERR_IMAGE_TOO_SMALL = 4,
    FG_ERR_FILE_MISSING = 5,
    FG_ERR_FILE_FORMAT = 6,
    FG_ERR_FILE_MALFORMED = 7,
    FG_ERR_IO = 8,
    FG_ERR_EMPTY_INPUT = 9,
    FG_ERR_CROP_BOUNDS = 10,
    FG_ERR_CHANNEL_MISMATCH = 11,
    FG_ERR_NON_FINITE_LOSS = 12,
    FG_ERR_UNKNOWN = 13
} fg_status;

typedef struct fg_image_t fg_image; /* 8-bit grayscale image */
typedef struct fg_mask_t fg_mask;   /* binary mask, values 0 or 1 */
typedef struct fg_curve_t fg_curve; /* per-shift alignment-score curve */
typedef struct fg_model_t fg_model; /* trained segmenter */

const char* fg_version_string(void);
const char* fg_last_error(void);
const char* fg_status_name(fg_status status);

/* ---- images and masks -------------------------------------------------- */

/* pixels may be NULL for a zero-filled image; otherwise width*height
 * row-major bytes are copied. */
fg_status fg_image_create(int width, int height, const uint8_t* pixels, fg_image** out);
fg_status fg_image_load(const char* path, fg_image** out);
fg_status fg_image_save(const fg_image* image, const char* path);
int fg_image_width(const fg_image* image);
int fg_image_height(const fg_image* image);
const uint8_t* fg_image_pixels(const fg_image* image);
void fg_image_free(fg_image* image);

/* values: width*height bytes, each 0 or 1; NULL for all-zero. On disk a
 * mask is {0,255} grayscale; loading maps >127 to 1. */
fg_status fg_mask_create(int width, int height, const uint8_t* values, fg_mask** out);
fg_status fg_mask_load(const char* path, fg_mask** out);
fg_status fg_mask_save(const fg_mask* mask, const char* path);
int fg_mask_width(const fg_mask* mask);
int fg_mask_height(const fg_mask* mask);
const uint8_t* fg_mask_values(const fg_mask* mask);
int64_t fg_mask_count_ones(const fg_mask* mask);
void fg_mask_free(fg_mask* mask);

/* ---- edge detection ---------------------------------------------------- */

typedef struct fg_canny_params {
    double sigma; /* Gaussian pre-smoothing */
    double low;   /* hysteresis thresholds on the [0,255] gradient scale */
    double high;
} fg_canny_params;
void fg_canny_params_default(fg_canny_params* params);

fg_status fg_canny(const fg_image* image, const fg_canny_params* params, fg_mask** out);

/* ---- guidance ---------------------------------------------------------- */

typedef struct fg_guidance_params {
    double tau;            /* alignment threshold; <= 0 scales with edge density */
    int num_buckets;       /* angle histogram resolution */
    double bandpass_inner; /* bins */
    double bandpass_outer; /* bins; <= 0 selects min(w,h)/2 */
    int shift_min;         /* the pair (0,-1) selects [0, width/4] */
    int shift_max;
    int threads;
} fg_guidance_params;
void fg_guidance_params_default(fg_guidance_params* params);

fg_status fg_dual_subtract(const fg_mask* cr, const fg_mask* cl_shifted, fg_mask** out);
fg_status fg_mask_shift(const fg_mask* mask, int shift, fg_mask** out);
fg_status fg_estimate_shift(const fg_mask* cl, const fg_mask* cr,
                            const fg_guidance_params* params, fg_curve** out);
/* curve_out may be NULL when only the mask is wanted. */
fg_status fg_guidance_mask(const fg_image* left, const fg_image* right,
                           const fg_canny_params* canny_params,
                           const fg_guidance_params* params, fg_mask** fm_out,
                           fg_curve** curve_out);

int fg_curve_shift_min(const fg_curve* curve);
int fg_curve_shift_max(const fg_curve* curve);
double fg_curve_score_at(const fg_curve* curve, int shift);
int fg_curve_best_shift(const fg_curve* curve);
double fg_curve_best_score(const fg_curve* curve);
int fg_curve_low_confidence(const fg_curve* curve);
fg_status fg_curve_write_csv(const fg_curve* curve, const char* path);
void fg_curve_free(fg_curve* curve);

/* Log-scaled magnitude spectrum of a mask after the bandpass, for
 * diagnostics. outer <= 0 selects min(w,h)/2. */
fg_status fg_spectrum_render(const fg_mask* fm, double bandpass_inner, double bandpass_outer,
                             fg_image** out);

/* ---- directional connectivity loss ------------------------------------- */

fg_status fg_dcl_value(const fg_mask* mask, double* out);
fg_status fg_dcl_connectivity_image(const fg_mask* mask, fg_image** out);
/* Runs `fields` random finite-difference audits (16x16 soft fields).
 * ok_out receives 1 when at least 99% of coordinates agree within 1e-5
 * relative. Outputs may be NULL. */
fg_status fg_dcl_gradcheck(uint64_t seed, int fields, int* ok_out, double* pass_fraction_out,
                           double* max_rel_err_out);

/* ---- synthetic dataset ------------------------------------------------- */

typedef struct fg_synth_config {
    int width;
    int height;
    int train_count;
    int test_count;
    uint64_t seed;
    char background_dir[1024]; /* empty: procedural backgrounds */
    int fg_shift_min;
    int fg_shift_max;
    int wire_min;
    int wire_max;
    double cell_min;
    double cell_max;
    double rotation_max;
    double scale_min;
    double scale_max;
    double translate_max;
    double brightness_max;
    double contrast_min;
    double contrast_max;
    double noise_p;
    double tau;
    double canny_sigma; /* edge detector used for the guidance pass */
    double canny_low;
    double canny_high;
    int threads;
} fg_synth_config;
void fg_synth_config_default(fg_synth_config* config);
/* Loads a flat key=value file over the defaults. */
fg_status fg_synth_config_load(const char* path, fg_synth_config* config);
fg_status fg_synth_generate(const fg_synth_config* config, const char* out_dir);

/* ---- segmenter --------------------------------------------------------- */

typedef struct fg_train_config {
    int channels; /* 1: image only, 2: image + guidance mask */
    int epochs;
    int batch_size;
    double learning_rate;
    double lambda_l1;
    double lambda_dcl;
    double beta1;
    double beta2;
    double adam_eps;
    uint64_t seed;
    double threshold; /* validation F-measure threshold */
} fg_train_config;
void fg_train_config_default(fg_train_config* config);

typedef void (*fg_epoch_callback)(int epoch, double loss, double l1, double dcl, double val_f,
                                  void* user);
/* Trains on the manifest's train split; writes the model to model_out
 * after every epoch. history_csv and the callback may be NULL. */
fg_status fg_train(const char* manifest_path, const fg_train_config* config,
                   const char* model_out, const char* history_csv, fg_epoch_callback on_epoch,
                   void* user);

fg_status fg_model_load(const char* path, fg_model** out);
fg_status fg_model_save(const fg_model* model, const char* path);
int fg_model_channels(const fg_model* model);
void fg_model_free(fg_model* model);

/* fm is required for two-channel models and ignored by one-channel
 * models. A pixel becomes 1 iff the soft output strictly exceeds the
 * threshold. */
fg_status fg_predict(const fg_model* model, const fg_image* image, const fg_mask* fm,
                     double threshold, fg_mask** out);

/* ---- evaluation --------------------------------------------------------- */

typedef struct fg_eval_summary {
    int count; /* images, or folds when folds > 1 */
    double mean_precision;
    double mean_recall;
    double mean_f;
    double std_precision;
    double std_recall;
    double std_f;
} fg_eval_summary;

/* degenerate_out (nullable) receives 1 when any ratio was 0/0. */
fg_status fg_eval_pair(const fg_mask* pred, const fg_mask* gt, double* precision_out,
                       double* recall_out, double* f_out, int* degenerate_out);
/* Compares same-named mask files; report_csv may be NULL to skip the
 * file, summary_out may be NULL. */
fg_status fg_eval_dirs(const char* pred_dir, const char* gt_dir, int tolerance, int folds,
                       int threads, const char* report_csv, fg_eval_summary* summary_out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* FENCEGUIDE_H */

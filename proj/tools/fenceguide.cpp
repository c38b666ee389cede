// fenceguide command-line front end. Talks to the library exclusively
// through the C API so it doubles as a smoke test of that surface.
#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fenceguide.h"

namespace {

using nlohmann::json;

bool g_json_logs = false;

// One report line: `k=v k=v ...`, or a single JSON object with --json.
void log_line(std::initializer_list<std::pair<std::string, json>> fields) {
    if (g_json_logs) {
        json obj = json::object();
        for (const auto& [key, value] : fields) obj[key] = value;
        std::fputs(obj.dump().c_str(), stdout);
        std::fputc('\n', stdout);
        return;
    }
    bool first = true;
    for (const auto& [key, value] : fields) {
        std::string rendered = value.is_string() ? value.get<std::string>() : value.dump();
        std::fprintf(stdout, "%s%s=%s", first ? "" : " ", key.c_str(), rendered.c_str());
        first = false;
    }
    std::fputc('\n', stdout);
    std::fflush(stdout);
}

int runtime_error_exit(fg_status status) {
    std::fprintf(stderr, "error: %s (%s)\n", fg_last_error(), fg_status_name(status));
    return 2;
}

#define FG_CHECK(call)                                       \
    do {                                                     \
        fg_status fg_check_status_ = (call);                 \
        if (fg_check_status_ != FG_OK)                       \
            return runtime_error_exit(fg_check_status_);     \
    } while (0)

size_t levenshtein(const std::string& a, const std::string& b) {
    std::vector<size_t> row(b.size() + 1);
    for (size_t j = 0; j <= b.size(); ++j) row[j] = j;
    for (size_t i = 1; i <= a.size(); ++i) {
        size_t diag = row[0];
        row[0] = i;
        for (size_t j = 1; j <= b.size(); ++j) {
            size_t up = row[j];
            row[j] = std::min({row[j] + 1, row[j - 1] + 1,
                               diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
            diag = up;
        }
    }
    return row[b.size()];
}

// RAII so error paths inside the subcommands cannot leak handles.
struct ImagePtr {
    fg_image* p = nullptr;
    ~ImagePtr() { fg_image_free(p); }
};
struct MaskPtr {
    fg_mask* p = nullptr;
    ~MaskPtr() { fg_mask_free(p); }
};
struct CurvePtr {
    fg_curve* p = nullptr;
    ~CurvePtr() { fg_curve_free(p); }
};
struct ModelPtr {
    fg_model* p = nullptr;
    ~ModelPtr() { fg_model_free(p); }
};

// ---- edges ---------------------------------------------------------------

struct EdgesArgs {
    std::string in;
    std::string out;
    fg_canny_params canny{};
};

int run_edges(const EdgesArgs& args) {
    log_line({{"cmd", "edges"}, {"in", args.in}, {"out", args.out},
              {"sigma", args.canny.sigma}, {"low", args.canny.low}, {"high", args.canny.high}});
    ImagePtr image;
    FG_CHECK(fg_image_load(args.in.c_str(), &image.p));
    MaskPtr edges;
    FG_CHECK(fg_canny(image.p, &args.canny, &edges.p));
    FG_CHECK(fg_mask_save(edges.p, args.out.c_str()));
    log_line({{"cmd", "edges"}, {"written", args.out},
              {"edge_pixels", fg_mask_count_ones(edges.p)}});
    return 0;
}

// ---- guidance --------------------------------------------------------------

struct GuidanceArgs {
    std::string left;
    std::string right;
    std::string out;
    std::string dump_curve;
    std::string dump_spectrum;
    std::string shift_dir = "right";
    int max_shift = 0; // 0: width / 4
    fg_canny_params canny{};
    fg_guidance_params params{};
};

int run_guidance(const GuidanceArgs& args) {
    ImagePtr left, right;
    FG_CHECK(fg_image_load(args.left.c_str(), &left.p));
    FG_CHECK(fg_image_load(args.right.c_str(), &right.p));

    fg_guidance_params params = args.params;
    int width = fg_image_width(right.p);
    int reach = args.max_shift > 0 ? args.max_shift : width / 4;
    if (args.shift_dir == "right") {
        params.shift_min = 0;
        params.shift_max = reach;
    } else if (args.shift_dir == "left") {
        params.shift_min = -reach;
        params.shift_max = 0;
    } else {
        params.shift_min = -reach;
        params.shift_max = reach;
    }
    log_line({{"cmd", "guidance"}, {"left", args.left}, {"right", args.right},
              {"out", args.out}, {"tau", params.tau}, {"shift_dir", args.shift_dir},
              {"shift_min", params.shift_min}, {"shift_max", params.shift_max},
              {"threads", params.threads}});

    MaskPtr fm;
    CurvePtr curve;
    FG_CHECK(fg_guidance_mask(left.p, right.p, &args.canny, &params, &fm.p, &curve.p));
    FG_CHECK(fg_mask_save(fm.p, args.out.c_str()));

    if (!args.dump_curve.empty()) FG_CHECK(fg_curve_write_csv(curve.p, args.dump_curve.c_str()));
    if (!args.dump_spectrum.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(args.dump_spectrum, ec);
        if (ec) {
            std::fprintf(stderr, "error: cannot create %s: %s (io)\n",
                         args.dump_spectrum.c_str(), ec.message().c_str());
            return 2;
        }
        ImagePtr spec;
        FG_CHECK(fg_spectrum_render(fm.p, args.params.bandpass_inner,
                                    args.params.bandpass_outer, &spec.p));
        std::string path = (std::filesystem::path(args.dump_spectrum) /
                            ("spectrum_shift_" + std::to_string(fg_curve_best_shift(curve.p)) +
                             ".png"))
                               .string();
        FG_CHECK(fg_image_save(spec.p, path.c_str()));
    }

    log_line({{"cmd", "guidance"}, {"written", args.out},
              {"best_shift", fg_curve_best_shift(curve.p)},
              {"best_score", fg_curve_best_score(curve.p)},
              {"low_confidence", fg_curve_low_confidence(curve.p) != 0},
              {"fm_pixels", fg_mask_count_ones(fm.p)}});
    return 0;
}

// ---- dcl ---------------------------------------------------------------------

struct DclArgs {
    std::string mask;
    std::string out;
    bool report = false;
};

int run_dcl(const DclArgs& args) {
    MaskPtr mask;
    FG_CHECK(fg_mask_load(args.mask.c_str(), &mask.p));
    double value = 0.0;
    FG_CHECK(fg_dcl_value(mask.p, &value));
    if (args.report) {
        std::string out = args.out;
        if (out.empty()) {
            std::filesystem::path p(args.mask);
            out = (p.parent_path() / (p.stem().string() + "_connectivity.png")).string();
        }
        ImagePtr map;
        FG_CHECK(fg_dcl_connectivity_image(mask.p, &map.p));
        FG_CHECK(fg_image_save(map.p, out.c_str()));
        log_line({{"cmd", "dcl"}, {"mask", args.mask}, {"dcl", value},
                  {"connectivity_map", out}});
    } else {
        log_line({{"cmd", "dcl"}, {"mask", args.mask}, {"dcl", value}});
    }
    return 0;
}

struct GradcheckArgs {
    std::uint64_t seed = 1;
    int fields = 20;
};

int run_dcl_gradcheck(const GradcheckArgs& args) {
    int ok = 0;
    double pass_fraction = 0.0;
    double max_rel_err = 0.0;
    FG_CHECK(fg_dcl_gradcheck(args.seed, args.fields, &ok, &pass_fraction, &max_rel_err));
    log_line({{"cmd", "dcl-gradcheck"}, {"seed", args.seed}, {"fields", args.fields},
              {"pass_fraction", pass_fraction}, {"max_rel_err", max_rel_err},
              {"ok", ok != 0}});
    return ok ? 0 : 2;
}

// ---- synth ----------------------------------------------------------------------

struct SynthArgs {
    CLI::App* cmd = nullptr;
    std::string config_path;
    std::string out_dir;
    std::string background_dir;
    fg_synth_config config{};
};

int run_synth(SynthArgs& args) {
    fg_synth_config effective;
    fg_synth_config_default(&effective);
    if (!args.config_path.empty())
        FG_CHECK(fg_synth_config_load(args.config_path.c_str(), &effective));

    // CLI flags win over the config file.
    auto passed = [&](const char* name) { return args.cmd->count(name) > 0; };
    if (passed("--seed")) effective.seed = args.config.seed;
    if (passed("--train")) effective.train_count = args.config.train_count;
    if (passed("--test")) effective.test_count = args.config.test_count;
    if (passed("--width")) effective.width = args.config.width;
    if (passed("--height")) effective.height = args.config.height;
    if (passed("--tau")) effective.tau = args.config.tau;
    if (passed("--noise-p")) effective.noise_p = args.config.noise_p;
    if (passed("--fg-min")) effective.fg_shift_min = args.config.fg_shift_min;
    if (passed("--fg-max")) effective.fg_shift_max = args.config.fg_shift_max;
    if (passed("--cell-min")) effective.cell_min = args.config.cell_min;
    if (passed("--cell-max")) effective.cell_max = args.config.cell_max;
    if (passed("--threads")) effective.threads = args.config.threads;
    if (passed("--background-dir")) {
        if (args.background_dir.size() >= sizeof effective.background_dir) {
            std::fprintf(stderr, "error: background dir path too long\n");
            return 2;
        }
        std::snprintf(effective.background_dir, sizeof effective.background_dir, "%s",
                      args.background_dir.c_str());
    }

    log_line({{"cmd", "synth"}, {"out", args.out_dir}, {"config", args.config_path},
              {"width", effective.width}, {"height", effective.height},
              {"train", effective.train_count}, {"test", effective.test_count},
              {"seed", effective.seed}, {"noise_p", effective.noise_p},
              {"tau", effective.tau}, {"threads", effective.threads},
              {"background_dir", std::string(effective.background_dir)}});
    FG_CHECK(fg_synth_generate(&effective, args.out_dir.c_str()));
    log_line({{"cmd", "synth"}, {"written", args.out_dir},
              {"records", effective.train_count + effective.test_count}});
    return 0;
}

// ---- train -----------------------------------------------------------------------

struct TrainArgs {
    std::string manifest;
    std::string out;
    std::string history;
    fg_train_config config{};
};

void epoch_logger(int epoch, double loss, double l1, double dcl, double val_f, void*) {
    log_line({{"cmd", "train"}, {"epoch", epoch}, {"loss", loss}, {"l1", l1},
              {"dcl", dcl}, {"val_f", val_f}});
}

int run_train(const TrainArgs& args) {
    log_line({{"cmd", "train"}, {"manifest", args.manifest}, {"out", args.out},
              {"channels", args.config.channels}, {"epochs", args.config.epochs},
              {"batch_size", args.config.batch_size},
              {"learning_rate", args.config.learning_rate},
              {"lambda_l1", args.config.lambda_l1}, {"lambda_dcl", args.config.lambda_dcl},
              {"seed", args.config.seed}});
    FG_CHECK(fg_train(args.manifest.c_str(), &args.config, args.out.c_str(),
                      args.history.empty() ? nullptr : args.history.c_str(), epoch_logger,
                      nullptr));
    log_line({{"cmd", "train"}, {"written", args.out}});
    return 0;
}

// ---- predict ------------------------------------------------------------------------

struct PredictArgs {
    std::string model;
    std::string image;
    std::string fm;
    std::string out;
    double threshold = 0.5;
};

int run_predict(const PredictArgs& args) {
    ModelPtr model;
    FG_CHECK(fg_model_load(args.model.c_str(), &model.p));
    ImagePtr image;
    FG_CHECK(fg_image_load(args.image.c_str(), &image.p));
    MaskPtr fm;
    if (!args.fm.empty()) FG_CHECK(fg_mask_load(args.fm.c_str(), &fm.p));
    MaskPtr pred;
    FG_CHECK(fg_predict(model.p, image.p, fm.p, args.threshold, &pred.p));
    FG_CHECK(fg_mask_save(pred.p, args.out.c_str()));
    log_line({{"cmd", "predict"}, {"model", args.model}, {"image", args.image},
              {"channels", fg_model_channels(model.p)}, {"threshold", args.threshold},
              {"written", args.out}, {"positives", fg_mask_count_ones(pred.p)}});
    return 0;
}

// ---- eval ------------------------------------------------------------------------------

struct EvalArgs {
    std::string pred_dir;
    std::string gt_dir;
    std::string report;
    int tolerance = 0;
    int folds = 1;
    int threads = 1;
};

int run_eval(const EvalArgs& args) {
    fg_eval_summary summary{};
    FG_CHECK(fg_eval_dirs(args.pred_dir.c_str(), args.gt_dir.c_str(), args.tolerance, args.folds,
                          args.threads, args.report.empty() ? nullptr : args.report.c_str(),
                          &summary));
    log_line({{"cmd", "eval"}, {"pred_dir", args.pred_dir}, {"gt_dir", args.gt_dir},
              {"tolerance", args.tolerance}, {"folds", args.folds}, {"count", summary.count},
              {"mean_precision", summary.mean_precision}, {"mean_recall", summary.mean_recall},
              {"mean_f", summary.mean_f}, {"std_precision", summary.std_precision},
              {"std_recall", summary.std_recall}, {"std_f", summary.std_f},
              {"report", args.report}});
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"stereo-guided fence segmentation toolkit", "fenceguide"};
    app.set_version_flag("--version", fg_version_string());
    app.require_subcommand(1);
    app.add_flag("--json", g_json_logs, "emit one JSON object per report line");

    EdgesArgs edges;
    fg_canny_params_default(&edges.canny);
    CLI::App* edges_cmd = app.add_subcommand("edges", "detect edges in one image");
    edges_cmd->add_option("--in", edges.in, "input image (PNG or PGM)")->required();
    edges_cmd->add_option("--out", edges.out, "output edge mask")->required();
    edges_cmd->add_option("--sigma", edges.canny.sigma, "Gaussian smoothing sigma");
    edges_cmd->add_option("--low", edges.canny.low, "weak hysteresis threshold");
    edges_cmd->add_option("--high", edges.canny.high, "strong hysteresis threshold");

    GuidanceArgs guidance;
    fg_canny_params_default(&guidance.canny);
    fg_guidance_params_default(&guidance.params);
    CLI::App* guidance_cmd =
        app.add_subcommand("guidance", "estimate the fence shift and write the guidance mask");
    guidance_cmd->add_option("--left", guidance.left, "left frame")->required();
    guidance_cmd->add_option("--right", guidance.right, "right (reference) frame")->required();
    guidance_cmd->add_option("--out", guidance.out, "output guidance mask")->required();
    guidance_cmd->add_option("--tau", guidance.params.tau,
                             "spectrum magnitude threshold; <= 0 scales with edge density");
    guidance_cmd->add_option("--max-shift", guidance.max_shift,
                             "search reach in pixels (default width / 4)");
    guidance_cmd->add_option("--shift-dir", guidance.shift_dir, "search direction")
        ->check(CLI::IsMember({"left", "right", "both"}));
    guidance_cmd->add_option("--sigma", guidance.canny.sigma, "edge detector sigma");
    guidance_cmd->add_option("--low", guidance.canny.low, "edge detector weak threshold");
    guidance_cmd->add_option("--high", guidance.canny.high, "edge detector strong threshold");
    guidance_cmd->add_option("--threads", guidance.params.threads, "worker threads");
    guidance_cmd->add_option("--dump-curve", guidance.dump_curve,
                             "also write the per-shift score curve as CSV");
    guidance_cmd->add_option("--dump-spectrum", guidance.dump_spectrum,
                             "also write the winning spectrum into this directory");

    DclArgs dcl;
    CLI::App* dcl_cmd = app.add_subcommand("dcl", "directional connectivity loss of a mask");
    dcl_cmd->add_option("--mask", dcl.mask, "input mask")->required();
    dcl_cmd->add_flag("--report", dcl.report, "also write the connectivity map image");
    dcl_cmd->add_option("--out", dcl.out,
                        "connectivity map path (default <mask>_connectivity.png)");

    GradcheckArgs gradcheck;
    CLI::App* gradcheck_cmd =
        app.add_subcommand("dcl-gradcheck", "finite-difference audit of the loss gradient");
    gradcheck_cmd->add_option("--seed", gradcheck.seed, "RNG seed for the test fields");
    gradcheck_cmd->add_option("--fields", gradcheck.fields, "number of random fields");

    SynthArgs synth;
    fg_synth_config_default(&synth.config);
    CLI::App* synth_cmd = app.add_subcommand("synth", "generate a pseudo-stereo fence dataset");
    synth.cmd = synth_cmd;
    synth_cmd->add_option("--config", synth.config_path, "key=value config file");
    synth_cmd->add_option("--out", synth.out_dir, "output dataset directory")->required();
    synth_cmd->add_option("--seed", synth.config.seed, "master seed");
    synth_cmd->add_option("--train", synth.config.train_count, "training scenes");
    synth_cmd->add_option("--test", synth.config.test_count, "test scenes");
    synth_cmd->add_option("--width", synth.config.width, "scene width");
    synth_cmd->add_option("--height", synth.config.height, "scene height");
    synth_cmd->add_option("--tau", synth.config.tau,
                          "guidance threshold; <= 0 scales with edge density");
    synth_cmd->add_option("--noise-p", synth.config.noise_p,
                          "salt-and-pepper rate on guidance masks");
    synth_cmd->add_option("--fg-min", synth.config.fg_shift_min, "smallest fence shift");
    synth_cmd->add_option("--fg-max", synth.config.fg_shift_max, "largest fence shift");
    synth_cmd->add_option("--cell-min", synth.config.cell_min, "smallest mesh cell, px");
    synth_cmd->add_option("--cell-max", synth.config.cell_max, "largest mesh cell, px");
    synth_cmd->add_option("--background-dir", synth.background_dir,
                          "photo backgrounds (default procedural)");
    synth_cmd->add_option("--threads", synth.config.threads, "worker threads");

    TrainArgs train;
    fg_train_config_default(&train.config);
    CLI::App* train_cmd = app.add_subcommand("train", "train the segmenter on a dataset");
    train_cmd->add_option("--manifest", train.manifest, "dataset manifest")->required();
    train_cmd->add_option("--out", train.out, "output model file")->required();
    train_cmd->add_option("--channels", train.config.channels, "1 image only, 2 image + guidance")
        ->check(CLI::IsMember({1, 2}));
    train_cmd->add_option("--epochs", train.config.epochs, "training epochs");
    train_cmd->add_option("--batch", train.config.batch_size, "batch size");
    train_cmd->add_option("--lr", train.config.learning_rate, "Adam learning rate");
    train_cmd->add_option("--lambda-l1", train.config.lambda_l1, "L1 term weight");
    train_cmd->add_option("--lambda-dcl", train.config.lambda_dcl, "connectivity term weight");
    train_cmd->add_option("--seed", train.config.seed, "init and shuffle seed");
    train_cmd->add_option("--threshold", train.config.threshold, "validation mask threshold");
    train_cmd->add_option("--history", train.history, "also write per-epoch stats as CSV");

    PredictArgs predict;
    CLI::App* predict_cmd = app.add_subcommand("predict", "segment one image with a trained model");
    predict_cmd->add_option("--model", predict.model, "model file")->required();
    predict_cmd->add_option("--image", predict.image, "input image")->required();
    predict_cmd->add_option("--fm", predict.fm, "guidance mask (two-channel models)");
    predict_cmd->add_option("--out", predict.out, "output mask")->required();
    predict_cmd->add_option("--threshold", predict.threshold, "binarization threshold");

    EvalArgs eval;
    CLI::App* eval_cmd = app.add_subcommand("eval", "score predicted masks against ground truth");
    eval_cmd->add_option("--pred-dir", eval.pred_dir, "predicted masks")->required();
    eval_cmd->add_option("--gt-dir", eval.gt_dir, "ground-truth masks")->required();
    eval_cmd->add_option("--report", eval.report, "output CSV report");
    eval_cmd->add_option("--tolerance", eval.tolerance, "boundary tolerance in pixels");
    eval_cmd->add_option("--folds", eval.folds, "aggregate over contiguous folds");
    eval_cmd->add_option("--threads", eval.threads, "worker threads");

    const std::vector<std::string> names = {"edges",  "guidance", "dcl",     "dcl-gradcheck",
                                            "synth",  "train",    "predict", "eval"};
    if (argc > 1 && argv[1][0] != '-' &&
        std::find(names.begin(), names.end(), argv[1]) == names.end()) {
        std::string best = names.front();
        size_t best_d = levenshtein(argv[1], best);
        for (const std::string& n : names) {
            size_t d = levenshtein(argv[1], n);
            if (d < best_d) {
                best = n;
                best_d = d;
            }
        }
        std::fprintf(stderr, "error: unknown subcommand '%s', did you mean '%s'?\n\n%s", argv[1],
                     best.c_str(), app.help().c_str());
        return 1;
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (edges_cmd->parsed()) return run_edges(edges);
    if (guidance_cmd->parsed()) return run_guidance(guidance);
    if (dcl_cmd->parsed()) return run_dcl(dcl);
    if (gradcheck_cmd->parsed()) return run_dcl_gradcheck(gradcheck);
    if (synth_cmd->parsed()) return run_synth(synth);
    if (train_cmd->parsed()) return run_train(train);
    if (predict_cmd->parsed()) return run_predict(predict);
    if (eval_cmd->parsed()) return run_eval(eval);
    return 1;
}

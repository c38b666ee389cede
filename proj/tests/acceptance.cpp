// Acceptance checks for the full toolkit. Each scenario prints one
// PASS/FAIL line; the exit code is the number of failures. Tolerances and
// budgets are pinned here on purpose — do not loosen them to make a run
// green.
#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "fenceguide/dcl.hpp"
#include "fenceguide/edges.hpp"
#include "fenceguide/eval.hpp"
#include "fenceguide/guidance.hpp"
#include "fenceguide/rng.hpp"
#include "fenceguide/segmenter.hpp"
#include "fenceguide/synth.hpp"

#ifndef FENCEGUIDE_CLI_PATH
#error "FENCEGUIDE_CLI_PATH must point at the built binary"
#endif

namespace fs = std::filesystem;
using namespace fenceguide;

namespace {

struct Outcome {
    bool ok = false;
    std::string detail;
};

std::string format(const char* fmt, ...) {
    va_list args;
    va_start(args, fmt);
    char buf[512];
    std::vsnprintf(buf, sizeof buf, fmt, args);
    va_end(args);
    return buf;
}

int g_failures = 0;

void run_criterion(int index, const char* name, const std::function<Outcome()>& fn) {
    using clock = std::chrono::steady_clock;
    const auto start = clock::now();
    Outcome outcome;
    try {
        outcome = fn();
    } catch (const std::exception& e) {
        outcome.ok = false;
        outcome.detail = std::string("unexpected error: ") + e.what();
    }
    const double seconds = std::chrono::duration<double>(clock::now() - start).count();
    std::printf("[%d/9] %s %s (%s, %.1fs)\n", index, outcome.ok ? "PASS" : "FAIL", name,
                outcome.detail.c_str(), seconds);
    std::fflush(stdout);
    if (!outcome.ok) ++g_failures;
}

int worker_threads() {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    return static_cast<int>(hw > 8 ? 8 : hw);
}

BinaryMask mask_from_bits(int width, int height, unsigned bits) {
    BinaryMask m(width, height, 0);
    for (int i = 0; i < width * height; ++i)
        if (bits & (1u << i)) m.set(i / width, i % width, 1);
    return m;
}

bool equals_and(const BinaryMask& got, const BinaryMask& a, const BinaryMask& b) {
    for (int r = 0; r < a.height(); ++r)
        for (int c = 0; c < a.width(); ++c)
            if (got.at(r, c) != (a.at(r, c) & b.at(r, c))) return false;
    return true;
}

// ---- 1: dual subtraction --------------------------------------------------

Outcome check_dual_subtract() {
    const auto start = std::chrono::steady_clock::now();
    long long pairs = 0;
    for (int h = 1; h <= 3; ++h) {
        for (int w = 1; w <= 3; ++w) {
            const unsigned combos = 1u << (w * h);
            for (unsigned a = 0; a < combos; ++a) {
                const BinaryMask cl = mask_from_bits(w, h, a);
                for (unsigned b = 0; b < combos; ++b) {
                    const BinaryMask cr = mask_from_bits(w, h, b);
                    if (!equals_and(dual_subtract(cr, cl), cr, cl))
                        return {false, format("mismatch on exhaustive %dx%d pair", w, h)};
                    ++pairs;
                }
            }
        }
    }
    Rng rng(1);
    for (int k = 0; k < 1000; ++k) {
        BinaryMask cl(64, 64, 0), cr(64, 64, 0);
        for (int r = 0; r < 64; ++r) {
            for (int c = 0; c < 64; ++c) {
                if (rng.bernoulli(0.5)) cl.set(r, c, 1);
                if (rng.bernoulli(0.5)) cr.set(r, c, 1);
            }
        }
        if (!equals_and(dual_subtract(cr, cl), cr, cl))
            return {false, format("mismatch on random pair %d", k)};
        ++pairs;
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (seconds >= 5.0) return {false, format("over budget: %.1fs >= 5s", seconds)};
    return {true, format("%lld pairs, all exact", pairs)};
}

// ---- 2: shift recovery -----------------------------------------------------

Outcome check_shift_recovery() {
    const auto start = std::chrono::steady_clock::now();
    SynthConfig cfg; // default mesh ranges: cells 8..40 px, wires 1..3 px
    cfg.width = 256;
    cfg.height = 256;
    const CannyParams edge_params{cfg.canny_sigma, cfg.canny_low, cfg.canny_high};
    const int threads = worker_threads();

    int hits = 0;
    for (int k = 0; k < 100; ++k) {
        Rng rng(mix_seed(20260816ULL, static_cast<std::uint64_t>(k)));
        SceneRecipe recipe;
        recipe.fg_shift = rng.uniform_int(3, 20);
        recipe.bg_shift = rng.uniform_int(0, recipe.fg_shift - 1);
        const FenceSpec spec = cfg.random_fence_spec(rng);
        const GrayImage canvas =
            procedural_background(cfg.width + recipe.bg_shift, cfg.height, rng);
        const BinaryMask fence = render_fence(cfg.width, cfg.height, spec);
        const GrayImage texture = fence_texture_for(cfg.width, cfg.height, canvas, rng);
        const StereoPair pair = compose_pair(canvas, fence, texture, recipe);

        const BinaryMask cl = canny(pair.left, edge_params);
        const BinaryMask cr = canny(pair.right, edge_params);
        GuidanceParams params; // default range sentinel: [0, width / 4]
        params.tau = auto_tau(cr);
        params.threads = threads;
        const MasCurve curve = estimate_shift(cl, cr, params);
        if (std::abs(curve.best_shift - recipe.fg_shift) <= 1) ++hits;
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (seconds >= 120.0)
        return {false, format("over budget: %.1fs >= 120s, hits=%d/100", seconds, hits)};
    if (hits < 95) return {false, format("hits=%d/100, need >= 95", hits)};
    return {true, format("within +-1 px on %d/100 scenes", hits)};
}

// ---- 3: spectrum vs direct DFT ---------------------------------------------

Outcome check_spectrum_oracle() {
    double worst_bin = 0.0;
    double worst_parseval = 0.0;
    Rng rng(3);
    for (int k = 0; k < 50; ++k) {
        BinaryMask mask(32, 32, 0);
        std::vector<std::pair<int, int>> ones; // (x, y)
        for (int r = 0; r < 32; ++r)
            for (int c = 0; c < 32; ++c)
                if (rng.bernoulli(0.3)) {
                    mask.set(r, c, 1);
                    ones.emplace_back(c, r);
                }
        const Spectrum spec = magnitude_spectrum(mask);
        if (spec.width != 32 || spec.height != 32)
            return {false, "unexpected padded size for 32x32 input"};

        double energy = 0.0;
        for (int ky = 0; ky < 32; ++ky) {
            for (int kx = 0; kx < 32; ++kx) {
                std::complex<double> acc(0.0, 0.0);
                for (const auto& [x, y] : ones) {
                    const double phase = -2.0 * M_PI * (kx * x / 32.0 + ky * y / 32.0);
                    acc += std::complex<double>(std::cos(phase), std::sin(phase));
                }
                const double want = std::abs(acc);
                const double got = spec.at((kx + 16) % 32, (ky + 16) % 32);
                const double rel = std::abs(got - want) / std::max(1.0, want);
                worst_bin = std::max(worst_bin, rel);
                if (rel > 1e-6)
                    return {false, format("bin (%d,%d) of mask %d off by %.2e", kx, ky, k, rel)};
                energy += got * got;
            }
        }
        const double expected = 32.0 * 32.0 * static_cast<double>(mask.count_ones());
        const double parseval = std::abs(energy - expected) / std::max(1.0, expected);
        worst_parseval = std::max(worst_parseval, parseval);
        if (parseval > 1e-6)
            return {false, format("energy identity off by %.2e on mask %d", parseval, k)};
    }
    return {true, format("50 masks, worst bin err %.1e, worst energy err %.1e", worst_bin,
                         worst_parseval)};
}

// ---- 4: f-measure reference points -----------------------------------------

Outcome check_f_measure_points() {
    const long a = std::lround(f_measure(0.500, 0.163) * 1000.0);
    const long b = std::lround(f_measure(0.910, 0.959) * 1000.0);
    if (a != 246) return {false, format("f(0.500, 0.163) rounds to 0.%03ld, want 0.246", a)};
    if (b != 934) return {false, format("f(0.910, 0.959) rounds to 0.%03ld, want 0.934", b)};
    return {true, "f(0.500,0.163)=0.246 and f(0.910,0.959)=0.934 at 3 decimals"};
}

// ---- 5: connectivity loss gradient ------------------------------------------

Outcome check_dcl_gradient() {
    GradCheckSuite suite; // 20 fields, 16x16, eps 1e-4, rel tol 1e-5, >= 99%
    const GradCheckSuiteReport report = dcl_gradcheck_suite(11, suite);
    if (!report.ok)
        return {false, format("gradients: %lld/%lld coords passed, max rel err %.2e",
                              report.passed, report.checked, report.max_rel_err)};

    const auto& bank = directional_features();
    for (int field = 0; field < 20; ++field) {
        Rng rng(mix_seed(99, static_cast<std::uint64_t>(field)));
        std::vector<double> y(16 * 16);
        for (double& v : y) v = rng.uniform01();
        const ConnectivityMap lib = connectivity_map(y, 16, 16);
        for (int r = 0; r < 16; ++r) {
            for (int c = 0; c < 16; ++c) {
                double best = -std::numeric_limits<double>::infinity();
                int win = 0;
                for (int f = 0; f < 8; ++f) {
                    double s = 0.0;
                    for (int i = 0; i < 5; ++i) {
                        for (int j = 0; j < 5; ++j) {
                            if (!bank[f].cells[i][j]) continue;
                            const int rr = r + i - 2;
                            const int cc = c + j - 2;
                            if (rr >= 0 && rr < 16 && cc >= 0 && cc < 16) s += y[rr * 16 + cc];
                        }
                    }
                    if (s > best) {
                        best = s;
                        win = f;
                    }
                }
                if (lib.at(r, c) != best || lib.winner[static_cast<std::size_t>(r) * 16 + c] != win)
                    return {false, format("map disagrees with direct scan at (%d,%d), field %d",
                                          r, c, field)};
            }
        }
    }
    return {true, format("%lld/%lld gradient coords, max rel err %.1e; 20 maps exact",
                         report.passed, report.checked, report.max_rel_err)};
}

// ---- 6: line vs scattered pixels ---------------------------------------------

Outcome check_line_preference() {
    Rng rng(606);
    for (int k = 0; k < 100; ++k) {
        BinaryMask line(16, 16, 0);
        const int row = rng.uniform_int(0, 15);
        const int col = rng.uniform_int(0, 11);
        for (int c = col; c < col + 5; ++c) line.set(row, c, 1);

        BinaryMask scatter(16, 16, 0);
        std::vector<std::pair<int, int>> pts;
        int attempts = 0;
        while (pts.size() < 5) {
            const int r = rng.uniform_int(0, 15);
            const int c = rng.uniform_int(0, 15);
            bool ok = true;
            for (const auto& [pr, pc] : pts)
                if (std::max(std::abs(pr - r), std::abs(pc - c)) <= 2) ok = false;
            if (ok) pts.emplace_back(r, c);
            if (++attempts > 100000) return {false, "could not place scattered pixels"};
        }
        for (const auto& [r, c] : pts) scatter.set(r, c, 1);

        const double line_loss = dcl_value(line);
        const double scatter_loss = dcl_value(scatter);
        if (!(line_loss < scatter_loss))
            return {false, format("placement %d: line %.6f vs scatter %.6f", k, line_loss,
                                  scatter_loss)};
    }
    return {true, "line strictly better on all 100 placements"};
}

// ---- 7: guidance channel and connectivity term -------------------------------

Outcome check_ablation() {
    const auto start = std::chrono::steady_clock::now();
    const fs::path root = fs::temp_directory_path() / "fg_acceptance" / "ablation";
    fs::remove_all(root);
    fs::create_directories(root);

    // Mean-absolute error against a sigmoid output only trains when the two
    // classes are near balance: otherwise Adam walks the output bias to the
    // target median (a constant predictor) faster than features can form.
    // Cell 7-12 with 2-3 px wires puts the fence fraction near one half.
    SynthConfig data_cfg;
    data_cfg.width = 64;
    data_cfg.height = 64;
    data_cfg.train_count = 200;
    data_cfg.test_count = 50;
    data_cfg.seed = 2024;
    data_cfg.fg_shift_min = 3;
    data_cfg.fg_shift_max = 12;
    data_cfg.cell_min = 7.0;
    data_cfg.cell_max = 12.0;
    data_cfg.wire_min = 2;
    data_cfg.wire_max = 3;
    data_cfg.threads = 1;
    const DatasetManifest manifest = generate_dataset(data_cfg, root.string());

    TrainConfig base;
    base.epochs = 30;
    base.batch_size = 8;
    base.learning_rate = 1e-3;
    base.seed = 5;

    // The guidance-channel comparison runs both arms on the plain L1
    // objective so the only difference is the input; the connectivity-term
    // comparison then reuses the two-channel L1 arm as its lambda=0 side.
    TrainConfig with_fm = base;
    with_fm.channels = 2;
    with_fm.lambda_dcl = 0.0;
    TrainConfig image_only = base;
    image_only.channels = 1;
    image_only.lambda_dcl = 0.0;
    TrainConfig with_dcl = base;
    with_dcl.channels = 2;
    with_dcl.lambda_dcl = 0.1;

    const auto evaluate = [&](const SegModel& model) {
        std::vector<Prf> items;
        for (const ManifestRecord& rec : manifest.records) {
            if (rec.split != "test") continue;
            const GrayImage image = load_image(manifest.resolve(rec.right));
            const BinaryMask fm = load_mask(manifest.resolve(rec.fm));
            const BinaryMask gt = load_mask(manifest.resolve(rec.gt));
            const BinaryMask pred =
                predict(model, image, model.c_in == 2 ? &fm : nullptr, 0.5);
            items.push_back(prf(confusion(pred, gt)));
        }
        return aggregate(items);
    };

    const MetricSummary fm_scores = evaluate(train(manifest, with_fm).model);
    const MetricSummary image_scores = evaluate(train(manifest, image_only).model);
    const MetricSummary dcl_scores = evaluate(train(manifest, with_dcl).model);

    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const std::string detail =
        format("F %.3f (guided) vs %.3f (image only); recall %.3f (dcl 0.1) vs %.3f (dcl 0)",
               fm_scores.mean_f, image_scores.mean_f, dcl_scores.mean_recall,
               fm_scores.mean_recall);
    if (seconds >= 900.0) return {false, detail + format("; over budget: %.0fs >= 900s", seconds)};
    if (fm_scores.mean_f < image_scores.mean_f + 0.02)
        return {false, detail + "; guidance gain under 0.02"};
    if (dcl_scores.mean_recall < fm_scores.mean_recall)
        return {false, detail + "; connectivity term lost recall"};
    return {true, detail};
}

// ---- 8: segmenter parameter gradients ------------------------------------------

Outcome check_model_gradients() {
    // Central differences are only meaningful away from the ReLU kinks: the
    // probe moves each pre-activation by up to ~eps, so the fixed seed is
    // chosen to keep every |z| several times larger than that (seed 144
    // gives min |z| = 8.2e-4 against eps = 1e-4).
    const SegModel model = init_model(2, 144);
    GrayImage image(9, 9, 0);
    BinaryMask fm(9, 9, 0);
    std::vector<double> target(81, 0.0);
    for (int r = 0; r < 9; ++r) {
        for (int c = 0; c < 9; ++c) {
            image.at(r, c) = static_cast<std::uint8_t>((r * 29 + c * 13) % 251);
            fm.set(r, c, (r + c) % 3 == 0 ? 1 : 0);
            target[static_cast<std::size_t>(r) * 9 + c] = (r * 7 + c * 3) % 5 < 2 ? 1.0 : 0.0;
        }
    }
    const Tensor x = make_input(image, &fm, 2);
    const ModelGradCheckReport report =
        model_gradcheck(model, x, target, LossConfig{1.0, 0.1}, 1e-4, 1e-4);
    if (report.checked != 809)
        return {false, format("checked %d parameters, expected 809", report.checked)};
    if (report.passed != report.checked)
        return {false, format("%d/%d parameters passed, max rel err %.2e", report.passed,
                              report.checked, report.max_rel_err)};
    return {true, format("809/809 parameters, max rel err %.1e", report.max_rel_err)};
}

// ---- 9: pipeline determinism ------------------------------------------------------

bool run_cli(const std::string& args, const fs::path& log) {
    const std::string cmd = std::string("\"") + FENCEGUIDE_CLI_PATH + "\" " + args + " >>\"" +
                            log.string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    return status != -1 && WIFEXITED(status) && WEXITSTATUS(status) == 0;
}

std::vector<char> file_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    return std::vector<char>((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
}

Outcome check_rerun_determinism() {
    const fs::path root = fs::temp_directory_path() / "fg_acceptance";
    const auto quoted = [](const fs::path& p) { return "\"" + p.string() + "\""; };

    for (const char* run : {"rerun_a", "rerun_b"}) {
        const fs::path dir = root / run;
        fs::remove_all(dir);
        fs::create_directories(dir / "pred");
        fs::create_directories(dir / "gt");
        const fs::path log = root / (std::string(run) + ".log");
        fs::remove(log);

        const fs::path data = dir / "data";
        if (!run_cli("synth --out " + quoted(data) +
                         " --train 3 --test 1 --width 64 --height 64 --seed 42"
                         " --fg-min 3 --fg-max 9 --cell-min 8 --cell-max 20 --threads 1",
                     log))
            return {false, std::string("synth failed in ") + run};
        if (!run_cli("guidance --left " + quoted(data / "train" / "rec_00000_L.png") +
                         " --right " + quoted(data / "train" / "rec_00000_R.png") + " --out " +
                         quoted(dir / "fm.png") +
                         " --sigma 1.0 --low 10 --high 25 --tau 0 --max-shift 16 --threads 1"
                         " --dump-curve " +
                         quoted(dir / "curve.csv"),
                     log))
            return {false, std::string("guidance failed in ") + run};
        if (!run_cli("train --manifest " + quoted(data / "manifest.jsonl") + " --out " +
                         quoted(dir / "model.bin") +
                         " --channels 2 --epochs 3 --batch 2 --seed 7 --history " +
                         quoted(dir / "history.csv"),
                     log))
            return {false, std::string("train failed in ") + run};
        if (!run_cli("predict --model " + quoted(dir / "model.bin") + " --image " +
                         quoted(data / "test" / "rec_00003_R.png") + " --fm " +
                         quoted(data / "test" / "rec_00003_FM.png") + " --out " +
                         quoted(dir / "pred" / "rec_00003.png"),
                     log))
            return {false, std::string("predict failed in ") + run};
        fs::copy_file(data / "test" / "rec_00003_GT.png", dir / "gt" / "rec_00003.png");
        if (!run_cli("eval --pred-dir " + quoted(dir / "pred") + " --gt-dir " +
                         quoted(dir / "gt") + " --report " + quoted(dir / "report.csv") +
                         " --tolerance 1 --threads 1",
                     log))
            return {false, std::string("eval failed in ") + run};
    }

    int compared = 0;
    for (const auto& entry : fs::recursive_directory_iterator(root / "rerun_a")) {
        if (!entry.is_regular_file()) continue;
        const fs::path rel = fs::relative(entry.path(), root / "rerun_a");
        const fs::path other = root / "rerun_b" / rel;
        if (!fs::exists(other)) return {false, "missing in rerun: " + rel.string()};
        if (file_bytes(entry.path()) != file_bytes(other))
            return {false, "differs across reruns: " + rel.string()};
        ++compared;
    }
    return {true, format("%d files byte-identical across reruns", compared)};
}

} // namespace

int main() {
    run_criterion(1, "dual subtraction equals pixelwise AND", check_dual_subtract);
    run_criterion(2, "shift recovery on synthetic scenes", check_shift_recovery);
    run_criterion(3, "spectrum matches direct DFT and energy identity", check_spectrum_oracle);
    run_criterion(4, "f-measure reference points", check_f_measure_points);
    run_criterion(5, "connectivity loss gradient and map", check_dcl_gradient);
    run_criterion(6, "connected line beats scattered pixels", check_line_preference);
    run_criterion(7, "guidance channel and connectivity term help", check_ablation);
    run_criterion(8, "segmenter parameter gradients", check_model_gradients);
    run_criterion(9, "pipeline rerun is byte-identical", check_rerun_determinism);

    std::printf("acceptance: %d/9 passed\n", 9 - g_failures);
    return g_failures;
}

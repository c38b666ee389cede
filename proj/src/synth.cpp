#include "fenceguide/synth.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fenceguide/config.hpp"
#include "fenceguide/edges.hpp"
#include "fenceguide/guidance.hpp"
#include "fenceguide/parallel.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace fenceguide {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::uint8_t clamp_u8(double v) {
    const long r = std::lround(v);
    return static_cast<std::uint8_t>(std::clamp(r, 0L, 255L));
}

double bilinear_clamped(const GrayImage& img, double x, double y) {
    const int w = img.width();
    const int h = img.height();
    const double fx = std::floor(x);
    const double fy = std::floor(y);
    const double ax = x - fx;
    const double ay = y - fy;
    const int x0 = std::clamp(static_cast<int>(fx), 0, w - 1);
    const int x1 = std::clamp(static_cast<int>(fx) + 1, 0, w - 1);
    const int y0 = std::clamp(static_cast<int>(fy), 0, h - 1);
    const int y1 = std::clamp(static_cast<int>(fy) + 1, 0, h - 1);
    const double top = (1.0 - ax) * img.at(y0, x0) + ax * img.at(y0, x1);
    const double bot = (1.0 - ax) * img.at(y1, x0) + ax * img.at(y1, x1);
    return (1.0 - ay) * top + ay * bot;
}

} // namespace

GrayImage augment(const GrayImage& img, const AffineParams& affine, const CropRect& crop,
                  const ColorJitter& jitter) {
    if (affine.scale <= 0.0) raise(ErrorKind::InvalidArgument, "affine scale must be positive");

    // Forward map: p = center + t + scale * R(theta) * (q - center). Output
    // pixels are filled by sampling the inverse at p.
    GrayImage warped(img.width(), img.height());
    const double cx = 0.5 * (img.width() - 1);
    const double cy = 0.5 * (img.height() - 1);
    const double theta = affine.rotation_deg * kPi / 180.0;
    const double cos_t = std::cos(-theta);
    const double sin_t = std::sin(-theta);
    for (int r = 0; r < img.height(); ++r) {
        for (int c = 0; c < img.width(); ++c) {
            const double px = (c - cx - affine.translate_x) / affine.scale;
            const double py = (r - cy - affine.translate_y) / affine.scale;
            const double qx = cx + cos_t * px - sin_t * py;
            const double qy = cy + sin_t * px + cos_t * py;
            warped.at(r, c) = clamp_u8(bilinear_clamped(img, qx, qy));
        }
    }

    if (crop.width < 1 || crop.height < 1 || crop.x < 0 || crop.y < 0 ||
        crop.x + crop.width > warped.width() || crop.y + crop.height > warped.height())
        raise(ErrorKind::CropBounds, "crop rectangle exceeds image bounds");
    GrayImage out(crop.width, crop.height);
    for (int r = 0; r < crop.height; ++r)
        for (int c = 0; c < crop.width; ++c)
            out.at(r, c) = warped.at(crop.y + r, crop.x + c);

    if (jitter.brightness != 0.0 || jitter.contrast != 1.0) {
        for (int r = 0; r < out.height(); ++r)
            for (int c = 0; c < out.width(); ++c)
                out.at(r, c) = clamp_u8(jitter.contrast * (out.at(r, c) - 128.0) + 128.0 +
                                        jitter.brightness);
    }
    return out;
}

BinaryMask salt_pepper(const BinaryMask& mask, double p, std::uint64_t seed) {
    if (p < 0.0 || p > 0.5) raise(ErrorKind::InvalidArgument, "noise probability must be in [0, 0.5]");
    Rng rng(seed);
    std::vector<std::uint8_t> out = mask.data();
    for (auto& v : out)
        if (rng.bernoulli(p)) v = static_cast<std::uint8_t>(1 - v);
    return BinaryMask(mask.width(), mask.height(), std::move(out));
}

StereoPair compose_pair(const GrayImage& bg, const BinaryMask& fence_mask,
                        const GrayImage& fence_texture, const SceneRecipe& recipe) {
    if (fence_mask.width() != fence_texture.width() || fence_mask.height() != fence_texture.height())
        raise(ErrorKind::DimensionMismatch, "fence mask and texture differ in size");
    if (recipe.bg_shift < 0 || recipe.fg_shift < recipe.bg_shift)
        raise(ErrorKind::InvalidShift, "shifts must satisfy fg_shift >= bg_shift >= 0");
    const int w = fence_mask.width();
    const int h = fence_mask.height();
    if (w > bg.width() || h > bg.height())
        raise(ErrorKind::ImageTooSmall, "fence larger than background");
    if (w + recipe.bg_shift > bg.width())
        raise(ErrorKind::ImageTooSmall, "background too narrow for bg_shift margin");

    StereoPair pair{GrayImage(w, h), GrayImage(w, h), fence_mask};
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            pair.right.at(r, c) = fence_mask.at(r, c) ? fence_texture.at(r, c) : bg.at(r, c);
            const int fc = c + recipe.fg_shift; // fence sits fg_shift further left
            if (fc < w && fence_mask.at(r, fc))
                pair.left.at(r, c) = fence_texture.at(r, fc);
            else
                pair.left.at(r, c) = bg.at(r, c + recipe.bg_shift);
        }
    }
    return pair;
}

GrayImage procedural_background(int width, int height, Rng& rng, std::string* kind) {
    GrayImage img(width, height);
    const int which = rng.uniform_int(0, 2);

    if (which == 0) {
        // Smooth linear gradient plus a few filled shapes for edge content.
        const double angle = rng.uniform(0.0, 2.0 * kPi);
        const double nx = std::cos(angle);
        const double ny = std::sin(angle);
        const double lo = rng.uniform(40.0, 110.0);
        const double hi = rng.uniform(150.0, 220.0);
        const double diag = std::hypot(width, height);
        for (int r = 0; r < height; ++r)
            for (int c = 0; c < width; ++c) {
                const double t = 0.5 + (nx * c + ny * r) / (2.0 * diag);
                img.at(r, c) = clamp_u8(lo + (hi - lo) * t);
            }
        const int shapes = rng.uniform_int(2, 5);
        for (int s = 0; s < shapes; ++s) {
            const int sw = rng.uniform_int(width / 8, width / 3);
            const int sh = rng.uniform_int(height / 8, height / 3);
            const int sx = rng.uniform_int(0, std::max(0, width - sw));
            const int sy = rng.uniform_int(0, std::max(0, height - sh));
            const std::uint8_t v = static_cast<std::uint8_t>(rng.uniform_int(30, 225));
            for (int r = sy; r < sy + sh && r < height; ++r)
                for (int c = sx; c < sx + sw && c < width; ++c) img.at(r, c) = v;
        }
        if (kind) *kind = "procedural:gradient";
    } else if (which == 1) {
        // Value noise: random lattice, bilinear interpolation between knots.
        const int cell = rng.uniform_int(12, 32);
        const int gw = width / cell + 2;
        const int gh = height / cell + 2;
        std::vector<double> lattice(static_cast<std::size_t>(gw) * gh);
        for (double& v : lattice) v = rng.uniform(30.0, 225.0);
        for (int r = 0; r < height; ++r) {
            const double gy = static_cast<double>(r) / cell;
            const int y0 = static_cast<int>(gy);
            const double ay = gy - y0;
            for (int c = 0; c < width; ++c) {
                const double gx = static_cast<double>(c) / cell;
                const int x0 = static_cast<int>(gx);
                const double ax = gx - x0;
                const double v00 = lattice[static_cast<std::size_t>(y0) * gw + x0];
                const double v01 = lattice[static_cast<std::size_t>(y0) * gw + x0 + 1];
                const double v10 = lattice[static_cast<std::size_t>(y0 + 1) * gw + x0];
                const double v11 = lattice[static_cast<std::size_t>(y0 + 1) * gw + x0 + 1];
                const double top = (1.0 - ax) * v00 + ax * v01;
                const double bot = (1.0 - ax) * v10 + ax * v11;
                img.at(r, c) = clamp_u8((1.0 - ay) * top + ay * bot);
            }
        }
        if (kind) *kind = "procedural:noise";
    } else {
        // Shape clutter: base fill plus rectangles and ellipses.
        const std::uint8_t base = static_cast<std::uint8_t>(rng.uniform_int(60, 190));
        for (int r = 0; r < height; ++r)
            for (int c = 0; c < width; ++c) img.at(r, c) = base;
        const int shapes = rng.uniform_int(6, 14);
        for (int s = 0; s < shapes; ++s) {
            const bool ellipse = rng.bernoulli(0.5);
            const int sw = rng.uniform_int(width / 10, width / 3);
            const int sh = rng.uniform_int(height / 10, height / 3);
            const int sx = rng.uniform_int(0, std::max(0, width - sw));
            const int sy = rng.uniform_int(0, std::max(0, height - sh));
            const std::uint8_t v = static_cast<std::uint8_t>(rng.uniform_int(20, 235));
            const double ecx = sx + 0.5 * sw;
            const double ecy = sy + 0.5 * sh;
            for (int r = sy; r < sy + sh && r < height; ++r)
                for (int c = sx; c < sx + sw && c < width; ++c) {
                    if (ellipse) {
                        const double dx = (c - ecx) / (0.5 * sw);
                        const double dy = (r - ecy) / (0.5 * sh);
                        if (dx * dx + dy * dy > 1.0) continue;
                    }
                    img.at(r, c) = v;
                }
        }
        if (kind) *kind = "procedural:shapes";
    }
    return img;
}

std::string FenceSpec::descriptor() const {
    std::ostringstream os;
    os << "procedural:" << (diamond ? "diamond" : "rect") << ":cell=" << cell_u << "x" << cell_v
       << ":wire=" << wire << ":rot=" << rotation_deg << ":jit=" << jitter;
    return os.str();
}

BinaryMask render_fence(int width, int height, const FenceSpec& spec) {
    if (spec.cell_u < 2.0 || spec.cell_v < 2.0)
        raise(ErrorKind::InvalidArgument, "fence cell spacing must be at least 2 px");
    if (spec.wire < 1) raise(ErrorKind::InvalidArgument, "wire width must be at least 1 px");

    const double base = spec.rotation_deg * kPi / 180.0;
    // Two line families: perpendicular for a rectangular mesh, +-45 degrees
    // off the base for a diamond mesh.
    const double a1 = spec.diamond ? base + kPi / 4.0 : base;
    const double a2 = spec.diamond ? base - kPi / 4.0 : base + kPi / 2.0;
    const double half = 0.5 * spec.wire;

    // Wire k of a family sits at k*period + offset(k); the offset is a hash
    // of (jitter_seed, family, k) so the same spec always renders the same
    // mesh.
    auto wire_offset = [&spec](std::uint64_t family, long long k, double period) {
        const std::uint64_t mixed =
            mix_seed(spec.jitter_seed ^ (family * 0x9E3779B97F4A7C15ULL),
                     static_cast<std::uint64_t>(k) + 0x8000000000000000ULL);
        const double unit = static_cast<double>(mixed >> 11) * 0x1.0p-53; // [0, 1)
        return spec.jitter * period * (2.0 * unit - 1.0);
    };
    auto grid_dist = [&wire_offset](double t, double period, std::uint64_t family) {
        const long long k0 = static_cast<long long>(std::floor(t / period));
        double best = period;
        for (long long k = k0 - 1; k <= k0 + 2; ++k) {
            const double center = static_cast<double>(k) * period + wire_offset(family, k, period);
            best = std::min(best, std::abs(t - center));
        }
        return best;
    };

    BinaryMask mask(width, height);
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            const double u = c * std::cos(a1) + r * std::sin(a1) + spec.phase_u;
            const double v = c * std::cos(a2) + r * std::sin(a2) + spec.phase_v;
            if (grid_dist(u, spec.cell_u, 1) <= half || grid_dist(v, spec.cell_v, 2) <= half)
                mask.set(r, c, 1);
        }
    }
    return mask;
}

GrayImage fence_texture_for(int width, int height, const GrayImage& bg, Rng& rng) {
    long long sum = 0;
    for (std::uint8_t v : bg.data()) sum += v;
    const double mean = static_cast<double>(sum) / bg.size();
    // Dark wire over a bright scene and vice versa keeps the edges visible.
    const int intensity = mean > 128.0 ? rng.uniform_int(5, 45) : rng.uniform_int(210, 250);
    return GrayImage(width, height, static_cast<std::uint8_t>(intensity));
}

SynthConfig SynthConfig::from_file(const std::string& path) {
    const KeyValueFile kv = KeyValueFile::parse_file(path);
    SynthConfig cfg;
    cfg.width = kv.get_int("width", cfg.width);
    cfg.height = kv.get_int("height", cfg.height);
    cfg.train_count = kv.get_int("train", cfg.train_count);
    cfg.test_count = kv.get_int("test", cfg.test_count);
    cfg.seed = kv.get_u64("seed", cfg.seed);
    cfg.background_dir = kv.get_string("background_dir", cfg.background_dir);
    cfg.fg_shift_min = kv.get_int("fg_shift_min", cfg.fg_shift_min);
    cfg.fg_shift_max = kv.get_int("fg_shift_max", cfg.fg_shift_max);
    cfg.wire_min = kv.get_int("wire_min", cfg.wire_min);
    cfg.wire_max = kv.get_int("wire_max", cfg.wire_max);
    cfg.cell_min = kv.get_double("cell_min", cfg.cell_min);
    cfg.cell_max = kv.get_double("cell_max", cfg.cell_max);
    cfg.rotation_max = kv.get_double("rotation_max", cfg.rotation_max);
    cfg.scale_min = kv.get_double("scale_min", cfg.scale_min);
    cfg.scale_max = kv.get_double("scale_max", cfg.scale_max);
    cfg.translate_max = kv.get_double("translate_max", cfg.translate_max);
    cfg.brightness_max = kv.get_double("brightness_max", cfg.brightness_max);
    cfg.contrast_min = kv.get_double("contrast_min", cfg.contrast_min);
    cfg.contrast_max = kv.get_double("contrast_max", cfg.contrast_max);
    cfg.noise_p = kv.get_double("noise_p", cfg.noise_p);
    cfg.tau = kv.get_double("tau", cfg.tau);
    cfg.canny_sigma = kv.get_double("canny_sigma", cfg.canny_sigma);
    cfg.canny_low = kv.get_double("canny_low", cfg.canny_low);
    cfg.canny_high = kv.get_double("canny_high", cfg.canny_high);
    cfg.threads = kv.get_int("threads", cfg.threads);
    kv.reject_unknown_keys();
    cfg.validate();
    return cfg;
}

void SynthConfig::validate() const {
    if (width < 32 || height < 32)
        raise(ErrorKind::InvalidArgument, "output size must be at least 32x32");
    if (train_count < 0 || test_count < 0 || train_count + test_count < 1)
        raise(ErrorKind::InvalidArgument, "need at least one record");
    if (fg_shift_min < 1 || fg_shift_max < fg_shift_min)
        raise(ErrorKind::InvalidArgument, "fg_shift range must satisfy 1 <= min <= max");
    if (fg_shift_max > width / 4)
        raise(ErrorKind::InvalidShift, "fg_shift_max beyond the default search range width/4");
    if (wire_min < 1 || wire_max < wire_min)
        raise(ErrorKind::InvalidArgument, "wire width range must satisfy 1 <= min <= max");
    if (cell_min < 4.0 || cell_max < cell_min)
        raise(ErrorKind::InvalidArgument, "cell range must satisfy 4 <= min <= max");
    if (scale_min <= 0.0 || scale_max < scale_min)
        raise(ErrorKind::InvalidArgument, "scale range must satisfy 0 < min <= max");
    if (contrast_min <= 0.0 || contrast_max < contrast_min)
        raise(ErrorKind::InvalidArgument, "contrast range must satisfy 0 < min <= max");
    if (noise_p < 0.0 || noise_p > 0.5)
        raise(ErrorKind::InvalidArgument, "noise_p must be in [0, 0.5]");
    CannyParams{canny_sigma, canny_low, canny_high}.validate();
    if (threads < 1) raise(ErrorKind::InvalidArgument, "threads must be at least 1");
}

FenceSpec SynthConfig::random_fence_spec(Rng& rng) const {
    FenceSpec spec;
    spec.diamond = rng.bernoulli(0.5);
    spec.cell_u = rng.uniform(cell_min, cell_max);
    spec.cell_v = rng.uniform(cell_min, cell_max);
    spec.wire = rng.uniform_int(wire_min, wire_max);
    spec.rotation_deg = rng.uniform(-30.0, 30.0);
    spec.phase_u = rng.uniform(0.0, spec.cell_u);
    spec.phase_v = rng.uniform(0.0, spec.cell_v);
    spec.jitter = rng.uniform(0.10, 0.22);
    spec.jitter_seed = rng.next_u64();
    return spec;
}

std::string DatasetManifest::resolve(const std::string& rel_path) const {
    if (root.empty()) return rel_path;
    return (fs::path(root) / rel_path).string();
}

namespace {

std::vector<std::string> list_background_files(const std::string& dir) {
    std::vector<std::string> files;
    if (!fs::is_directory(dir)) raise(ErrorKind::FileMissing, "background directory not found: " + dir);
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (ext == ".png" || ext == ".pgm") files.push_back(entry.path().string());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) raise(ErrorKind::EmptyInput, "background directory has no png/pgm files: " + dir);
    return files;
}

struct RecordOutput {
    ManifestRecord record;
    json recipe_json;
};

RecordOutput generate_record(const SynthConfig& cfg, const std::vector<std::string>& bg_files,
                             int index, const std::string& split, const fs::path& out_dir) {
    const std::uint64_t record_seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(index));
    Rng rng(record_seed);

    SceneRecipe recipe;
    recipe.rng_seed = record_seed;
    recipe.noise_p = cfg.noise_p;
    recipe.fg_shift = rng.uniform_int(cfg.fg_shift_min, cfg.fg_shift_max);
    recipe.bg_shift = rng.uniform_int(0, recipe.fg_shift - 1);

    const FenceSpec fence_spec = cfg.random_fence_spec(rng);
    recipe.fence = fence_spec.descriptor();

    // The background canvas carries bg_shift extra columns so the left
    // frame's window fits.
    const int canvas_w = cfg.width + recipe.bg_shift;
    const int canvas_h = cfg.height;

    GrayImage canvas;
    if (bg_files.empty()) {
        canvas = procedural_background(canvas_w, canvas_h, rng, &recipe.background);
        recipe.affine = AffineParams{};
        recipe.crop = CropRect{0, 0, canvas_w, canvas_h};
    } else {
        recipe.background = bg_files[static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<int>(bg_files.size()) - 1))];
        const GrayImage source = load_image(recipe.background);
        recipe.affine.rotation_deg = rng.uniform(-cfg.rotation_max, cfg.rotation_max);
        recipe.affine.scale = rng.uniform(cfg.scale_min, cfg.scale_max);
        recipe.affine.translate_x = rng.uniform(-cfg.translate_max, cfg.translate_max);
        recipe.affine.translate_y = rng.uniform(-cfg.translate_max, cfg.translate_max);
        if (source.width() < canvas_w || source.height() < canvas_h)
            raise(ErrorKind::ImageTooSmall,
                  "background image smaller than canvas: " + recipe.background);
        recipe.crop.width = canvas_w;
        recipe.crop.height = canvas_h;
        recipe.crop.x = rng.uniform_int(0, source.width() - canvas_w);
        recipe.crop.y = rng.uniform_int(0, source.height() - canvas_h);
        canvas = augment(source, recipe.affine, recipe.crop, ColorJitter{});
    }
    recipe.jitter.brightness = rng.uniform(-cfg.brightness_max, cfg.brightness_max);
    recipe.jitter.contrast = rng.uniform(cfg.contrast_min, cfg.contrast_max);
    canvas = augment(canvas, AffineParams{}, CropRect{0, 0, canvas_w, canvas_h}, recipe.jitter);

    const BinaryMask fence_mask = render_fence(cfg.width, cfg.height, fence_spec);
    const GrayImage texture = fence_texture_for(cfg.width, cfg.height, canvas, rng);
    const StereoPair pair = compose_pair(canvas, fence_mask, texture, recipe);

    // Guidance mask from the real pipeline, then the configured noise.
    const CannyParams canny_params{cfg.canny_sigma, cfg.canny_low, cfg.canny_high};
    GuidanceParams gp;
    gp.tau = cfg.tau;
    if (gp.tau <= 0.0) gp.tau = auto_tau(canny(pair.right, canny_params));
    const GuidanceResult guidance = guidance_mask(pair.left, pair.right, canny_params, gp);
    const std::uint64_t noise_seed = rng.next_u64();
    const BinaryMask fm = salt_pepper(guidance.fm, recipe.noise_p, noise_seed);

    char stem[32];
    std::snprintf(stem, sizeof stem, "rec_%05d", index);
    RecordOutput out;
    out.record.index = index;
    out.record.split = split;
    out.record.left = split + "/" + stem + "_L.png";
    out.record.right = split + "/" + stem + "_R.png";
    out.record.fm = split + "/" + stem + "_FM.png";
    out.record.gt = split + "/" + stem + "_GT.png";
    out.record.fg_shift = recipe.fg_shift;
    out.record.bg_shift = recipe.bg_shift;
    out.record.rng_seed = record_seed;

    save_image(pair.left, (out_dir / out.record.left).string());
    save_image(pair.right, (out_dir / out.record.right).string());
    save_mask(fm, (out_dir / out.record.fm).string());
    save_mask(pair.gt, (out_dir / out.record.gt).string());

    out.recipe_json = json{{"background", recipe.background},
                           {"fence", recipe.fence},
                           {"fg_shift", recipe.fg_shift},
                           {"bg_shift", recipe.bg_shift},
                           {"rotation", recipe.affine.rotation_deg},
                           {"scale", recipe.affine.scale},
                           {"translate_x", recipe.affine.translate_x},
                           {"translate_y", recipe.affine.translate_y},
                           {"crop_x", recipe.crop.x},
                           {"crop_y", recipe.crop.y},
                           {"crop_w", recipe.crop.width},
                           {"crop_h", recipe.crop.height},
                           {"brightness", recipe.jitter.brightness},
                           {"contrast", recipe.jitter.contrast},
                           {"noise_p", recipe.noise_p},
                           {"noise_seed", noise_seed},
                           {"rng_seed", recipe.rng_seed},
                           {"tau", gp.tau},
                           {"estimated_shift", guidance.curve.best_shift},
                           {"low_confidence", guidance.curve.low_confidence}};
    return out;
}

} // namespace

DatasetManifest generate_dataset(const SynthConfig& config, const std::string& out_dir) {
    config.validate();
    std::vector<std::string> bg_files;
    if (!config.background_dir.empty()) bg_files = list_background_files(config.background_dir);

    const fs::path root(out_dir);
    std::error_code ec;
    fs::create_directories(root / "train", ec);
    fs::create_directories(root / "test", ec);
    if (!fs::is_directory(root / "train") || !fs::is_directory(root / "test"))
        raise(ErrorKind::Io, "cannot create output directories under " + out_dir);

    const int total = config.train_count + config.test_count;
    std::vector<RecordOutput> outputs(static_cast<std::size_t>(total));
    parallel_for(total, config.threads, [&](int i) {
        const std::string split = i < config.train_count ? "train" : "test";
        outputs[static_cast<std::size_t>(i)] = generate_record(config, bg_files, i, split, root);
    });

    DatasetManifest manifest;
    manifest.train_count = config.train_count;
    manifest.test_count = config.test_count;
    manifest.width = config.width;
    manifest.height = config.height;
    manifest.seed = config.seed;
    manifest.root = out_dir;

    std::ofstream mf(root / "manifest.jsonl", std::ios::binary);
    if (!mf) raise(ErrorKind::Io, "cannot open manifest for writing under " + out_dir);
    const json meta{{"type", "meta"},
                    {"train_count", config.train_count},
                    {"test_count", config.test_count},
                    {"width", config.width},
                    {"height", config.height},
                    {"seed", config.seed}};
    mf << meta.dump() << "\n";
    for (const RecordOutput& out : outputs) {
        manifest.records.push_back(out.record);
        const json line{{"type", "record"},          {"index", out.record.index},
                        {"split", out.record.split}, {"left", out.record.left},
                        {"right", out.record.right}, {"fm", out.record.fm},
                        {"gt", out.record.gt},       {"recipe", out.recipe_json}};
        mf << line.dump() << "\n";
    }
    mf.close();
    if (!mf) raise(ErrorKind::Io, "manifest write failed under " + out_dir);
    return manifest;
}

DatasetManifest load_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorKind::FileMissing, "manifest not found: " + path);
    DatasetManifest manifest;
    manifest.root = fs::path(path).parent_path().string();

    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::exception& e) {
            raise(ErrorKind::FileMalformed,
                  "manifest line " + std::to_string(line_no) + ": " + e.what());
        }
        try {
            const std::string type = obj.at("type").get<std::string>();
            if (type == "meta") {
                manifest.train_count = obj.at("train_count").get<int>();
                manifest.test_count = obj.at("test_count").get<int>();
                manifest.width = obj.at("width").get<int>();
                manifest.height = obj.at("height").get<int>();
                manifest.seed = obj.at("seed").get<std::uint64_t>();
            } else if (type == "record") {
                ManifestRecord rec;
                rec.index = obj.at("index").get<int>();
                rec.split = obj.at("split").get<std::string>();
                rec.left = obj.at("left").get<std::string>();
                rec.right = obj.at("right").get<std::string>();
                rec.fm = obj.at("fm").get<std::string>();
                rec.gt = obj.at("gt").get<std::string>();
                const json& recipe = obj.at("recipe");
                rec.fg_shift = recipe.at("fg_shift").get<int>();
                rec.bg_shift = recipe.at("bg_shift").get<int>();
                rec.rng_seed = recipe.at("rng_seed").get<std::uint64_t>();
                manifest.records.push_back(std::move(rec));
            } else {
                raise(ErrorKind::FileMalformed,
                      "manifest line " + std::to_string(line_no) + ": unknown type " + type);
            }
        } catch (const json::exception& e) {
            raise(ErrorKind::FileMalformed,
                  "manifest line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (manifest.records.empty())
        raise(ErrorKind::EmptyInput, "manifest has no records: " + path);
    return manifest;
}

} // namespace fenceguide

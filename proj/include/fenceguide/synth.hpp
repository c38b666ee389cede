#ifndef FENCEGUIDE_SYNTH_HPP
#define FENCEGUIDE_SYNTH_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "fenceguide/image.hpp"
#include "fenceguide/rng.hpp"

namespace fenceguide {

struct AffineParams {
    double rotation_deg = 0.0;
    double scale = 1.0;
    double translate_x = 0.0;
    double translate_y = 0.0;
};

struct CropRect {
    int x = 0;
    int y = 0;
    int width = 0;
    int height = 0;
};

struct ColorJitter {
    double brightness = 0.0; // additive, intensity levels
    double contrast = 1.0;   // multiplicative about mid-gray 128
};

/// Everything needed to rebuild one scene deterministically. fg_shift is
/// the fence parallax between the frames, bg_shift the background's;
/// emitted recipes always satisfy fg_shift > bg_shift >= 0.
struct SceneRecipe {
    std::string background; // source path or procedural descriptor
    std::string fence;      // procedural descriptor
    int fg_shift = 0;
    int bg_shift = 0;
    AffineParams affine;    // background preparation
    CropRect crop;
    ColorJitter jitter;
    double noise_p = 0.0;   // salt-and-pepper on the guidance mask
    std::uint64_t rng_seed = 0;
};

/// Rotation/scale/translation with bilinear sampling (clamp-to-border),
/// then crop, then brightness/contrast. The identity recipe is bit-exact.
GrayImage augment(const GrayImage& img, const AffineParams& affine, const CropRect& crop,
                  const ColorJitter& jitter);

/// Flips each pixel independently with probability p. p in [0, 0.5].
BinaryMask salt_pepper(const BinaryMask& mask, double p, std::uint64_t seed);

/// Composite the fence over two windows of a shared background canvas:
/// the right frame's window starts at column 0, the left frame's at
/// bg_shift, and the fence sits fg_shift further left in the left frame —
/// so shifting the left frame's content right by fg_shift re-aligns the
/// fence. Output size equals the fence size; the canvas must be at least
/// fence width + bg_shift wide. gt is the fence mask as placed in the
/// right frame.
struct StereoPair {
    GrayImage left;
    GrayImage right;
    BinaryMask gt;
};
StereoPair compose_pair(const GrayImage& bg, const BinaryMask& fence_mask,
                        const GrayImage& fence_texture, const SceneRecipe& recipe);

/// Procedural background: smooth gradient with a few shapes, value noise,
/// or a clutter of filled shapes. `kind` (optional) receives a descriptor.
GrayImage procedural_background(int width, int height, Rng& rng, std::string* kind = nullptr);

/// Procedural wire mesh: two line families, either perpendicular (rect)
/// or at +-45 degrees (diamond), with continuous cell spacing and phase
/// so the pattern is not pixel-periodic. Each wire is additionally offset
/// by `jitter * cell` at most (deterministic in jitter_seed), the way real
/// meshes sag — which also keeps the mesh from matching itself one cell
/// over.
struct FenceSpec {
    bool diamond = true;
    double cell_u = 16.0; // spacing of the two line families, pixels
    double cell_v = 16.0;
    int wire = 2;         // wire thickness, pixels
    double rotation_deg = 0.0;
    double phase_u = 0.0;
    double phase_v = 0.0;
    double jitter = 0.0;  // per-wire offset bound, fraction of the cell
    std::uint64_t jitter_seed = 0;

    std::string descriptor() const;
};
BinaryMask render_fence(int width, int height, const FenceSpec& spec);

/// Constant wire intensity chosen to contrast with the background.
GrayImage fence_texture_for(int width, int height, const GrayImage& bg, Rng& rng);

struct SynthConfig {
    int width = 256;
    int height = 256;
    int train_count = 8;
    int test_count = 2;
    std::uint64_t seed = 42;
    std::string background_dir; // empty: procedural backgrounds

    int fg_shift_min = 3;
    int fg_shift_max = 20;
    int wire_min = 1;
    int wire_max = 3;
    double cell_min = 8.0;
    double cell_max = 40.0;

    double rotation_max = 15.0; // background affine ranges
    double scale_min = 0.8;
    double scale_max = 1.2;
    double translate_max = 10.0;
    double brightness_max = 25.0;
    double contrast_min = 0.8;
    double contrast_max = 1.25;

    double noise_p = 0.02; // salt-and-pepper on emitted guidance masks
    double tau = 0.0;      // alignment threshold; <= 0 scales with edge density

    // Edge detector tuning for the guidance pass. Thin wires lose most of
    // their amplitude to the photo-oriented defaults, so the generator
    // smooths less and thresholds lower.
    double canny_sigma = 1.0;
    double canny_low = 10.0;
    double canny_high = 25.0;

    int threads = 1;

    static SynthConfig from_file(const std::string& path);
    FenceSpec random_fence_spec(Rng& rng) const;
    void validate() const;
};

struct ManifestRecord {
    int index = 0;
    std::string split; // "train" or "test"
    std::string left;  // paths relative to the manifest's directory
    std::string right;
    std::string fm;
    std::string gt;
    int fg_shift = 0;
    int bg_shift = 0;
    std::uint64_t rng_seed = 0;
};

struct DatasetManifest {
    int train_count = 0;
    int test_count = 0;
    int width = 0;
    int height = 0;
    std::uint64_t seed = 0;
    std::string root; // directory the relative paths resolve against
    std::vector<ManifestRecord> records;

    std::string resolve(const std::string& rel_path) const;
};

/// Writes train/ and test/ image tuples plus manifest.jsonl under
/// out_dir. Each record derives its own RNG stream from (seed, index),
/// so generation is order-independent and reruns are byte-identical.
DatasetManifest generate_dataset(const SynthConfig& config, const std::string& out_dir);

DatasetManifest load_manifest(const std::string& path);

} // namespace fenceguide

#endif

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "fenceguide/dcl.hpp"
#include "fenceguide/rng.hpp"
#include "fenceguide/segmenter.hpp"
#include "fenceguide/synth.hpp"
#include "oracles.hpp"

using namespace fenceguide;
using doctest::Approx;

namespace fs = std::filesystem;

namespace {

Tensor random_input(int c, int h, int w, Rng& rng) {
    Tensor x(c, h, w);
    for (double& v : x.v) v = rng.uniform01();
    return x;
}

SegModel zero_model(int c_in) {
    SegModel m = init_model(c_in, 1);
    for (auto& layer : m.layers) {
        std::fill(layer.w.begin(), layer.w.end(), 0.0);
        std::fill(layer.b.begin(), layer.b.end(), 0.0);
    }
    return m;
}

bool models_equal(const SegModel& a, const SegModel& b) {
    if (a.c_in != b.c_in) return false;
    for (int l = 0; l < 3; ++l)
        if (a.layers[l].w != b.layers[l].w || a.layers[l].b != b.layers[l].b) return false;
    return true;
}

SynthConfig tiny_config() {
    SynthConfig cfg;
    cfg.width = 32;
    cfg.height = 32;
    cfg.train_count = 3;
    cfg.test_count = 2;
    cfg.seed = 11;
    cfg.fg_shift_min = 3;
    cfg.fg_shift_max = 7;
    cfg.cell_min = 6.0;
    cfg.cell_max = 10.0;
    cfg.wire_min = 1;
    cfg.wire_max = 2;
    cfg.translate_max = 4.0;
    return cfg;
}

} // namespace

TEST_CASE("parameter counts for both input widths") {
    CHECK(init_model(2, 3).param_count() == 809);
    CHECK(init_model(1, 3).param_count() == 737);
}

TEST_CASE("initialization: shapes, bounds, determinism") {
    SegModel m = init_model(2, 42);
    CHECK(m.c_in == 2);
    CHECK(m.layers[0].in_ch == 2);
    CHECK(m.layers[0].out_ch == 8);
    CHECK(m.layers[1].in_ch == 8);
    CHECK(m.layers[1].out_ch == 8);
    CHECK(m.layers[2].in_ch == 8);
    CHECK(m.layers[2].out_ch == 1);
    CHECK(m.layers[0].w.size() == 2u * 8 * 9);
    CHECK(m.layers[0].b.size() == 8);

    for (const auto& layer : m.layers) {
        const double bound = 1.0 / std::sqrt(9.0 * layer.in_ch);
        for (double w : layer.w) {
            CHECK(w >= -bound);
            CHECK(w <= bound);
        }
        for (double b : layer.b) CHECK(b == 0.0);
    }

    CHECK(models_equal(init_model(2, 42), m));
    CHECK_FALSE(models_equal(init_model(2, 43), m));
    CHECK_THROWS_AS(init_model(3, 1), Error);
}

TEST_CASE("forward pass matches the naive reimplementation") {
    Rng rng(55);
    for (int c_in : {1, 2}) {
        SegModel m = init_model(c_in, 100 + c_in);
        Tensor x = random_input(c_in, 11, 9, rng);
        Tensor y = forward(m, x);
        REQUIRE(y.channels == 1);
        REQUIRE(y.height == 11);
        REQUIRE(y.width == 9);

        std::vector<double> ref = oracle::naive_forward(m, x);
        REQUIRE(ref.size() == y.v.size());
        for (std::size_t i = 0; i < ref.size(); ++i)
            CHECK(y.v[i] == Approx(ref[i]).epsilon(1e-12));
        for (double v : y.v) {
            CHECK(v > 0.0);
            CHECK(v < 1.0);
        }
    }
}

TEST_CASE("cached forward agrees with the plain one") {
    Rng rng(60);
    SegModel m = init_model(2, 5);
    Tensor x = random_input(2, 8, 8, rng);
    ForwardCache cache;
    forward_cached(m, x, cache);
    Tensor y = forward(m, x);
    CHECK(cache.y.v == y.v);
    // ReLU really clips: a1 = max(z1, 0)
    for (std::size_t i = 0; i < cache.z1.v.size(); ++i)
        CHECK(cache.a1.v[i] == std::max(cache.z1.v[i], 0.0));
}

TEST_CASE("loss breakdown composes mean-abs and connectivity terms") {
    Rng rng(70);
    SegModel m = init_model(1, 9);
    Tensor x = random_input(1, 10, 10, rng);
    std::vector<double> target(100);
    for (double& t : target) t = rng.bernoulli(0.3) ? 1.0 : 0.0;

    Tensor y = forward(m, x);
    double l1 = 0.0;
    for (std::size_t i = 0; i < y.v.size(); ++i) l1 += std::abs(y.v[i] - target[i]);
    l1 /= static_cast<double>(y.v.size());
    const double dcl = dcl_value(y.v, 10, 10);

    LossConfig cfg{1.0, 0.1};
    LossBreakdown got = loss_value(m, x, target, cfg);
    CHECK(got.l1 == Approx(l1).epsilon(1e-12));
    CHECK(got.dcl == Approx(dcl).epsilon(1e-12));
    CHECK(got.total == Approx(1.0 * l1 + 0.1 * dcl).epsilon(1e-12));

    LossConfig plain{2.0, 0.0};
    LossBreakdown noreg = loss_value(m, x, target, plain);
    CHECK(noreg.total == Approx(2.0 * noreg.l1).epsilon(1e-12));

    std::vector<double> short_target(50);
    CHECK_THROWS_AS(loss_value(m, x, short_target, cfg), Error);
}

TEST_CASE("analytic parameter gradients survive finite differences") {
    Rng rng(80);
    SegModel m = init_model(2, 12);
    Tensor x = random_input(2, 7, 7, rng);
    std::vector<double> target(49);
    for (double& t : target) t = rng.bernoulli(0.4) ? 1.0 : 0.0;

    ModelGradCheckReport report = model_gradcheck(m, x, target, LossConfig{1.0, 0.1});
    CHECK(report.checked == 809);
    CHECK(report.passed == report.checked);
    CHECK(report.max_rel_err < 1e-4);
}

TEST_CASE("model input layout and validation") {
    GrayImage img(6, 4);
    img.at(1, 2) = 255;
    img.at(0, 0) = 51;
    BinaryMask fm(6, 4);
    fm.set(2, 3, 1);

    Tensor two = make_input(img, &fm, 2);
    CHECK(two.channels == 2);
    CHECK(two.at(0, 1, 2) == Approx(1.0));
    CHECK(two.at(0, 0, 0) == Approx(0.2));
    CHECK(two.at(1, 2, 3) == 1.0);
    CHECK(two.at(1, 0, 0) == 0.0);

    Tensor one = make_input(img, nullptr, 1);
    CHECK(one.channels == 1);

    try {
        make_input(img, nullptr, 2);
        FAIL("expected a throw");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ChannelMismatch);
    }
    BinaryMask wrong(5, 4);
    CHECK_THROWS_AS(make_input(img, &wrong, 2), Error);
    CHECK_THROWS_AS(make_input(img, &fm, 3), Error);
}

TEST_CASE("prediction thresholds strictly") {
    // Zero weights make the network output exactly sigmoid(0) = 0.5.
    SegModel m = zero_model(1);
    GrayImage img(5, 5, 90);
    BinaryMask at_half = predict(m, img, nullptr, 0.5);
    CHECK(at_half.count_ones() == 0); // 0.5 > 0.5 is false

    BinaryMask below = predict(m, img, nullptr, 0.4999);
    CHECK(below.count_ones() == 25);

    SegModel two = init_model(2, 4);
    BinaryMask fm(5, 5);
    CHECK_NOTHROW(predict(two, img, &fm, 0.5));
    CHECK_THROWS_AS(predict(two, img, nullptr, 0.5), Error);
}

TEST_CASE("model files round trip and reject damage") {
    SegModel m = init_model(2, 77);
    fs::path dir = fs::temp_directory_path();
    const std::string path = (dir / "fg_model_test.bin").string();
    save_model(m, path);
    SegModel back = load_model(path);
    CHECK(models_equal(m, back));

    // wrong magic
    const std::string bad = (dir / "fg_model_bad.bin").string();
    {
        std::ofstream out(bad, std::ios::binary);
        out << "NOPE this is not a model";
    }
    try {
        load_model(bad);
        FAIL("expected a throw");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::FileFormat);
    }

    // truncation
    std::vector<char> bytes;
    {
        std::ifstream in(path, std::ios::binary);
        bytes.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    }
    const std::string cut = (dir / "fg_model_cut.bin").string();
    {
        std::ofstream out(cut, std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
    }
    try {
        load_model(cut);
        FAIL("expected a throw");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::FileMalformed);
    }

    try {
        load_model((dir / "fg_model_missing.bin").string());
        FAIL("expected a throw");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::FileMissing);
    }

    std::remove(path.c_str());
    std::remove(bad.c_str());
    std::remove(cut.c_str());
}

TEST_CASE("training config validation") {
    TrainConfig cfg;
    CHECK_NOTHROW(cfg.validate());

    TrainConfig ch = cfg;
    ch.channels = 3;
    try {
        ch.validate();
        FAIL("expected a throw");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ChannelMismatch);
    }

    TrainConfig e0 = cfg;
    e0.epochs = 0;
    CHECK_THROWS_AS(e0.validate(), Error);
    TrainConfig lr = cfg;
    lr.learning_rate = 0.0;
    CHECK_THROWS_AS(lr.validate(), Error);
    TrainConfig b = cfg;
    b.beta1 = 1.0;
    CHECK_THROWS_AS(b.validate(), Error);
    TrainConfig lam = cfg;
    lam.lambda_dcl = -0.5;
    CHECK_THROWS_AS(lam.validate(), Error);
    TrainConfig th = cfg;
    th.threshold = 1.5;
    CHECK_THROWS_AS(th.validate(), Error);
}

TEST_CASE("tiny training run: deterministic, checkpointed, logged") {
    fs::path dir = fs::temp_directory_path() / "fg_train_unit";
    fs::remove_all(dir);
    DatasetManifest manifest = generate_dataset(tiny_config(), dir.string());

    TrainConfig cfg;
    cfg.channels = 2;
    cfg.epochs = 2;
    cfg.batch_size = 2;
    cfg.seed = 3;

    const std::string ckpt = (dir / "model.bin").string();
    std::vector<int> seen_epochs;
    TrainResult a = train(manifest, cfg, ckpt,
                          [&](const EpochStats& s) { seen_epochs.push_back(s.epoch); });
    CHECK(seen_epochs == std::vector<int>{1, 2});
    REQUIRE(a.history.size() == 2);
    CHECK(a.history[1].epoch == 2);
    for (const EpochStats& s : a.history) {
        CHECK(std::isfinite(s.loss));
        CHECK(s.l1 >= 0.0);
        CHECK(s.dcl <= 0.0);
        CHECK(s.val_f >= 0.0);
        CHECK(s.val_f <= 1.0);
    }

    // checkpoint carries the final model
    CHECK(models_equal(load_model(ckpt), a.model));

    // rerun is bit-identical
    TrainResult b = train(manifest, cfg);
    CHECK(models_equal(a.model, b.model));
    for (std::size_t i = 0; i < a.history.size(); ++i) {
        CHECK(a.history[i].loss == b.history[i].loss);
        CHECK(a.history[i].val_f == b.history[i].val_f);
    }

    // a different seed trains a different model
    TrainConfig other = cfg;
    other.seed = 4;
    CHECK_FALSE(models_equal(train(manifest, other).model, a.model));

    // history csv
    const std::string csv = (dir / "history.csv").string();
    write_history_csv(a.history, csv);
    std::ifstream in(csv);
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "epoch,loss,l1,dcl,val_f");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 2);

    fs::remove_all(dir);
}

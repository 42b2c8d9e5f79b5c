#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "pamic/error.hpp"
#include "pamic/kernels.hpp"
#include "pamic/training.hpp"
#include "tmpdir.hpp"

using namespace pamic;

namespace {

/// 3 x 1 x 3 x 3 x 5 x 5 tuples per class on the restricted grid, normalized.
const Dataset& small_normalized() {
    static const Dataset d = [] {
        auto specs = default_grid_specs();
        for (auto& s : specs) {
            s.f2_values = {s.f2_values[1]};
            s.f3_count = s.f4_count = 3;
            s.xi_values = {0.015, 0.06, 0.2, 0.5, 0.99};
        }
        Dataset raw = build_dataset(specs, FrequencyGrid::standard_restricted());
        raw.seed = 5;
        return normalize(raw, compute_norm_stats(raw));
    }();
    return d;
}

TrainConfig quick_config() {
    TrainConfig c;
    c.learning_rate = 3e-3;
    c.epochs = 15;
    c.batch_size = 32;
    c.seed = 5;
    return c;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST(Batches, DefaultCount) {
    EXPECT_EQ(batches_per_epoch(182250, 128), 1424u);
    EXPECT_EQ(182250u - 1423u * 128u, 106u);
    EXPECT_EQ(batches_per_epoch(128, 128), 1u);
    EXPECT_THROW(batches_per_epoch(10, 0), InvalidParameter);
}

TEST(EpochOrder, ReproducibleAndVaries) {
    EXPECT_EQ(epoch_order(500, 3, 1), epoch_order(500, 3, 1));
    EXPECT_NE(epoch_order(500, 3, 1), epoch_order(500, 3, 2));
    EXPECT_NE(epoch_order(500, 3, 1), epoch_order(500, 4, 1));
}

TEST(Train, HistoryAndImprovement) {
    const SplitSet s = shuffle_split(small_normalized(), 5);
    const TrainResult r = train(s, quick_config());
    ASSERT_EQ(r.history.epochs.size(), 15u);
    for (std::size_t i = 0; i < r.history.epochs.size(); ++i) {
        const auto& e = r.history.epochs[i];
        EXPECT_EQ(e.epoch, i + 1);
        EXPECT_GE(e.train_loss, 0.0);
        EXPECT_GE(e.dev_loss, 0.0);
        EXPECT_GE(e.train_accuracy, 0.0);
        EXPECT_LE(e.train_accuracy, 1.0);
        EXPECT_LE(e.dev_accuracy, 1.0);
    }
    EXPECT_LT(r.history.epochs.back().train_loss, r.history.epochs.front().train_loss);
    EXPECT_GT(r.history.final_metrics.test_accuracy, 0.8);
    EXPECT_EQ(r.history.final_test_accuracy(), r.history.final_metrics.test_accuracy);
    EXPECT_EQ(r.history.seed, 5u);
    EXPECT_EQ(r.history.config, quick_config());
    ASSERT_TRUE(r.model.norm.has_value());
    EXPECT_EQ(*r.model.norm, *small_normalized().norm);
    EXPECT_EQ(*r.model.grid, FrequencyGrid::standard_restricted());
    EXPECT_EQ(r.model.dims, default_dims(140));
    // Final metrics are a full re-evaluation of the returned model.
    const LossAccuracy te = evaluate_epoch(r.model, s.test);
    EXPECT_EQ(te.accuracy, r.history.final_metrics.test_accuracy);
    EXPECT_EQ(te.loss, r.history.final_metrics.test_loss);
}

TEST(Train, DeterministicOnBothPaths) {
    const SplitSet s = shuffle_split(small_normalized(), 5);
    TrainConfig c = quick_config();
    c.epochs = 3;
    TrainOptions serial;
    serial.serial_reference = true;
    const TrainResult a = train(s, c, serial);
    const TrainResult b = train(s, c, serial);
    EXPECT_EQ(a.model, b.model);
    const TrainResult x = train(s, c);
    const TrainResult y = train(s, c);
    EXPECT_EQ(x.model, y.model);
    // The two paths differ only by summation order.
    for (std::size_t l = 0; l < kNumLayers; ++l) {
        for (std::size_t i = 0; i < a.model.params.layers[l].weights.size(); ++i) {
            EXPECT_NEAR(a.model.params.layers[l].weights[i], x.model.params.layers[l].weights[i], 1e-9);
        }
    }
}

TEST(Train, OmpPathIndependentOfThreadCount) {
    const int saved = kernels::max_threads();
    const SplitSet s = shuffle_split(small_normalized(), 5);
    TrainConfig c = quick_config();
    c.epochs = 2;
    kernels::set_threads(1);
    const TrainResult a = train(s, c);
    kernels::set_threads(4);
    const TrainResult b = train(s, c);
    kernels::set_threads(saved);
    EXPECT_EQ(a.model, b.model);
    EXPECT_EQ(a.history.final_metrics, b.history.final_metrics);
}

TEST(Train, RejectsBadInputBeforeUpdating) {
    SplitSet s = shuffle_split(small_normalized(), 5);
    TrainConfig c = quick_config();
    c.epochs = 0;
    EXPECT_THROW(train(s, c), InvalidParameter);
    SplitSet raw = s;
    raw.train.normalized = false;
    EXPECT_THROW(train(raw, quick_config()), InvalidParameter);
    SplitSet mixed = s;
    mixed.dev.norm->max_abs[0] *= 2.0;
    EXPECT_THROW(train(mixed, quick_config()), InvalidParameter);
    SplitSet empty = s;
    empty.dev = empty.dev.subset({});
    EXPECT_THROW(train(empty, quick_config()), InvalidParameter);
    SplitSet wrong_grid = s;
    for (Dataset* d : {&wrong_grid.train, &wrong_grid.dev, &wrong_grid.test}) {
        d->grid = FrequencyGrid::standard_full();
    }
    EXPECT_THROW(train(wrong_grid, quick_config()), DimensionError);
}

TEST(Train, DivergenceIsNumericalError) {
    const SplitSet s = shuffle_split(small_normalized(), 5);
    TrainConfig c = quick_config();
    c.learning_rate = 1e308;
    c.epochs = 1;
    EXPECT_THROW(train(s, c), NumericalError);
}

TEST(EvaluateEpoch, UntrainedModelsSitAtChanceOnAverage) {
    // A single untrained model tends to favor one class, so its accuracy
    // ranges roughly 0.1 to 0.5 by seed; the median over seeds is at chance.
    Dataset d = build_dataset(default_grid_specs(), FrequencyGrid::standard_restricted());
    normalize_in_place(d, compute_norm_stats(d));
    std::vector<double> acc;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        acc.push_back(evaluate_epoch(xavier_init(default_dims(140), seed), d).accuracy);
    }
    std::sort(acc.begin(), acc.end());
    EXPECT_NEAR((acc[9] + acc[10]) / 2.0, 1.0 / 3.0, 0.05);
}

TEST(EvaluateEpoch, EdgeCases) {
    const Dataset& d = small_normalized();

    MlpModel uniform = xavier_init(default_dims(140), 1);
    uniform.params.set_zero();
    EXPECT_NEAR(evaluate_epoch(uniform, d).loss, std::log(3.0), 1e-9);

    MlpModel zero_first = uniform;
    zero_first.params.layers[2].biases = {5.0, 0.0, 0.0};
    std::vector<std::size_t> class0;
    for (std::size_t r = 0; r < d.size(); ++r) {
        if (d.labels[r] == 0) class0.push_back(r);
    }
    EXPECT_EQ(evaluate_epoch(zero_first, d.subset(class0)).accuracy, 1.0);
    EXPECT_DOUBLE_EQ(evaluate_epoch(zero_first, d).accuracy, 1.0 / 3.0);
    EXPECT_THROW(evaluate_epoch(zero_first, d.subset({})), InvalidParameter);
}

TEST(Checkpoint, RoundTripPredictsIdentically) {
    TempDir tmp;
    const SplitSet s = shuffle_split(small_normalized(), 5);
    TrainConfig c = quick_config();
    c.epochs = 2;
    const TrainResult r = train(s, c);
    save_checkpoint(r.model, r.history, tmp / "m.json");
    const Checkpoint cp = load_checkpoint(tmp / "m.json");
    EXPECT_EQ(cp.model, r.model);
    EXPECT_EQ(cp.config, c);
    EXPECT_EQ(cp.final_metrics, r.history.final_metrics);
    EXPECT_EQ(cp.split_seed, 5u);

    std::mt19937_64 g(1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> x(140);
    for (int i = 0; i < 1000; ++i) {
        for (double& v : x) v = u(g);
        const Prediction a = predict(r.model, x);
        const Prediction b = predict(cp.model, x);
        ASSERT_EQ(a.label, b.label);
        for (std::size_t k = 0; k < 3; ++k) ASSERT_NEAR(a.probabilities[k], b.probabilities[k], 1e-15);
    }
    const std::vector<double> narrow(300, 0.1);
    EXPECT_THROW(predict(cp.model, narrow), DimensionError);

    save_checkpoint(cp.model, r.history, tmp / "m2.json");
    EXPECT_EQ(slurp(tmp / "m.json"), slurp(tmp / "m2.json"));
}

TEST(Checkpoint, SchemaAndIoErrors) {
    TempDir tmp;
    EXPECT_THROW(load_checkpoint(tmp / "none.json"), IoError);
    const MlpModel m = xavier_init({6, 5, 4, 3}, 1);
    TrainHistory h;
    save_checkpoint(m, h, tmp / "m.json");
    std::string text = slurp(tmp / "m.json");
    const auto at = text.find("\"dims\"");
    ASSERT_NE(at, std::string::npos);
    const auto six = text.find('6', at);
    text[six] = '7';
    std::ofstream(tmp / "bad.json") << text;
    EXPECT_THROW(load_checkpoint(tmp / "bad.json"), SchemaError);
    std::ofstream(tmp / "junk.json") << "[1, 2";
    EXPECT_THROW(load_checkpoint(tmp / "junk.json"), ParseError);
    std::ofstream(tmp / "empty.json") << "{}";
    EXPECT_THROW(load_checkpoint(tmp / "empty.json"), SchemaError);
    EXPECT_THROW(save_checkpoint(m, h, tmp / "missing-dir" / "m.json"), IoError);
}

TEST(History, CsvLayout) {
    TempDir tmp;
    TrainHistory h;
    h.epochs.push_back({1, 0.5, 0.75, 0.25, 0.875, 12.5});
    h.epochs.push_back({2, 0.125, 1.0, 0.0625, 1.0, 3.0});
    save_history_csv(h, tmp / "h.csv", false);
    EXPECT_EQ(slurp(tmp / "h.csv"),
              "epoch,train_loss,train_acc,dev_loss,dev_acc,seconds\n"
              "1,0.5,0.75,0.25,0.875,0\n"
              "2,0.125,1,0.0625,1,0\n");
    save_history_csv(h, tmp / "t.csv", true);
    EXPECT_NE(slurp(tmp / "t.csv").find("0.875,12.5\n"), std::string::npos);
}

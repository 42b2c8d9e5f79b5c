#include "pamic/training.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <string>

#include "json_util.hpp"
#include "pamic/dataset_io.hpp"
#include "pamic/error.hpp"
#include "pamic/kernels.hpp"
#include "pamic/rng.hpp"

namespace pamic {

using detail::json;

std::size_t batches_per_epoch(std::size_t records, std::size_t batch_size) {
    if (batch_size == 0) throw InvalidParameter("batch size must be at least 1");
    return (records + batch_size - 1) / batch_size;
}

std::vector<std::size_t> epoch_order(std::size_t records, std::uint64_t seed, std::size_t epoch) {
    return shuffled_order(records, mix_seed(seed, epoch));
}

LossAccuracy evaluate_epoch(const MlpModel& m, const Dataset& d) {
    if (d.empty()) throw InvalidParameter("cannot evaluate on an empty dataset");
    const auto totals = kernels::omp::evaluate(m, as_matrix(d), d.labels);
    const auto n = static_cast<double>(totals.count);
    return {totals.loss_sum / n, static_cast<double>(totals.correct) / n};
}

namespace {

void check_splits(const SplitSet& s, const TrainConfig& cfg) {
    cfg.validate();
    for (const Dataset* d : {&s.train, &s.dev, &s.test}) {
        if (d->empty()) throw InvalidParameter("train, dev and test splits must be non-empty");
        if (!d->normalized || !d->norm) {
            throw InvalidParameter("splits must be normalized before training");
        }
        if (d->feature_count != s.train.feature_count) {
            throw DimensionError("splits disagree on feature count");
        }
        if (*d->norm != *s.train.norm) {
            throw InvalidParameter("splits were normalized with different stats");
        }
    }
    if (s.train.feature_count != 2 * s.train.grid.count()) {
        throw DimensionError("feature count " + std::to_string(s.train.feature_count) +
                             " does not match a " + std::to_string(s.train.grid.count()) +
                             "-point grid");
    }
}

}  // namespace

TrainResult train(const SplitSet& splits, const TrainConfig& cfg, const TrainOptions& options) {
    check_splits(splits, cfg);
    const Dataset& tr = splits.train;
    const Dims dims = default_dims(tr.feature_count);

    TrainResult result;
    MlpModel& model = result.model;
    model = xavier_init(dims, mix_seed(cfg.seed, 0));
    model.norm = tr.norm;
    model.grid = tr.grid;
    AdamState adam = AdamState::zeros_for(model);

    TrainHistory& hist = result.history;
    hist.config = cfg;
    hist.seed = splits.seed;

    const std::size_t n = tr.size();
    const std::size_t width = tr.feature_count;
    std::vector<double> xb(cfg.batch_size * width);
    std::vector<std::uint8_t> yb(cfg.batch_size);
    ParamSet grad = ParamSet::zeros(dims);
    kernels::GradientWorkspace ws;

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto order = epoch_order(n, cfg.seed, epoch);
        double loss_sum = 0.0;
        std::size_t correct = 0;

        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t b = std::min(cfg.batch_size, n - start);
            for (std::size_t k = 0; k < b; ++k) {
                const auto src = tr.row(order[start + k]);
                std::copy(src.begin(), src.end(), xb.begin() + static_cast<std::ptrdiff_t>(k * width));
                yb[k] = tr.labels[order[start + k]];
            }
            const MatrixView x(std::span<const double>(xb.data(), b * width), b, width);
            const std::span<const std::uint8_t> y(yb.data(), b);
            const kernels::BatchStats st = options.serial_reference
                                               ? kernels::serial::batch_gradient(model, x, y, grad)
                                               : kernels::omp::batch_gradient(model, x, y, grad, ws);
            loss_sum += st.loss_sum;
            correct += st.correct;
            adam_step(model, grad, adam, cfg);
        }

        if (!model.params.all_finite()) {
            throw NumericalError("non-finite parameters after epoch " + std::to_string(epoch));
        }
        EpochMetrics em;
        em.epoch = epoch;
        em.train_loss = loss_sum / static_cast<double>(n);
        em.train_accuracy = static_cast<double>(correct) / static_cast<double>(n);
        const LossAccuracy dev = evaluate_epoch(model, splits.dev);
        em.dev_loss = dev.loss;
        em.dev_accuracy = dev.accuracy;
        em.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        hist.epochs.push_back(em);
        if (options.on_epoch) options.on_epoch(em);
    }

    const LossAccuracy ftr = evaluate_epoch(model, splits.train);
    const LossAccuracy fdev = evaluate_epoch(model, splits.dev);
    const LossAccuracy fte = evaluate_epoch(model, splits.test);
    hist.final_metrics = {ftr.loss, ftr.accuracy, fdev.loss, fdev.accuracy, fte.loss, fte.accuracy};
    return result;
}

namespace {

json config_to_json(const TrainConfig& c) {
    return {{"learning_rate", c.learning_rate}, {"batch_size", c.batch_size},
            {"epochs", c.epochs},               {"beta1", c.beta1},
            {"beta2", c.beta2},                 {"epsilon", c.epsilon},
            {"seed", c.seed}};
}

TrainConfig config_from_json(const json& j) {
    TrainConfig c;
    c.learning_rate = detail::get_field<double>(j, "learning_rate");
    c.batch_size = detail::get_field<std::size_t>(j, "batch_size");
    c.epochs = detail::get_field<std::size_t>(j, "epochs");
    c.beta1 = detail::get_field<double>(j, "beta1");
    c.beta2 = detail::get_field<double>(j, "beta2");
    c.epsilon = detail::get_field<double>(j, "epsilon");
    c.seed = detail::get_field<std::uint64_t>(j, "seed");
    return c;
}

json metrics_to_json(const FinalMetrics& m) {
    return {{"train_loss", m.train_loss}, {"train_accuracy", m.train_accuracy},
            {"dev_loss", m.dev_loss},     {"dev_accuracy", m.dev_accuracy},
            {"test_loss", m.test_loss},   {"test_accuracy", m.test_accuracy}};
}

FinalMetrics metrics_from_json(const json& j) {
    FinalMetrics m;
    m.train_loss = detail::get_field<double>(j, "train_loss");
    m.train_accuracy = detail::get_field<double>(j, "train_accuracy");
    m.dev_loss = detail::get_field<double>(j, "dev_loss");
    m.dev_accuracy = detail::get_field<double>(j, "dev_accuracy");
    m.test_loss = detail::get_field<double>(j, "test_loss");
    m.test_accuracy = detail::get_field<double>(j, "test_accuracy");
    return m;
}

}  // namespace

void save_checkpoint(const MlpModel& m, const TrainHistory& history,
                     const std::filesystem::path& path) {
    m.validate();
    json weights = json::array();
    json biases = json::array();
    for (const auto& layer : m.params.layers) {
        json rows = json::array();
        for (std::size_t o = 0; o < layer.fan_out; ++o) {
            rows.push_back(std::vector<double>(
                layer.weights.begin() + static_cast<std::ptrdiff_t>(o * layer.fan_in),
                layer.weights.begin() + static_cast<std::ptrdiff_t>((o + 1) * layer.fan_in)));
        }
        weights.push_back(rows);
        biases.push_back(layer.biases);
    }
    json j;
    j["schema_version"] = kCheckpointSchemaVersion;
    j["dims"] = m.dims;
    j["weights"] = weights;
    j["biases"] = biases;
    j["norm_max_abs"] = m.norm ? json(m.norm->max_abs) : json(nullptr);
    j["grid"] = m.grid ? detail::grid_to_json(*m.grid) : json(nullptr);
    j["train_config"] = config_to_json(history.config);
    j["split_seed"] = history.seed;
    j["final_metrics"] = metrics_to_json(history.final_metrics);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << j.dump(1) << '\n';
    if (!out) throw IoError("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    if (detail::get_field<int>(j, "schema_version") != kCheckpointSchemaVersion) {
        throw SchemaError("unsupported checkpoint schema version");
    }
    Checkpoint cp;
    MlpModel& m = cp.model;
    const auto dims = detail::get_field<std::vector<std::size_t>>(j, "dims");
    if (dims.size() != 4) throw SchemaError("'dims' must have 4 entries");
    std::copy(dims.begin(), dims.end(), m.dims.begin());
    try {
        validate_dims(m.dims);
    } catch (const DimensionError& e) {
        throw SchemaError(e.what());
    }
    const auto weights = detail::get_field<std::vector<std::vector<std::vector<double>>>>(j, "weights");
    const auto biases = detail::get_field<std::vector<std::vector<double>>>(j, "biases");
    if (weights.size() != kNumLayers || biases.size() != kNumLayers) {
        throw SchemaError("checkpoint must hold 3 layers");
    }
    m.params = ParamSet::zeros(m.dims);
    for (std::size_t l = 0; l < kNumLayers; ++l) {
        auto& layer = m.params.layers[l];
        if (weights[l].size() != layer.fan_out || biases[l].size() != layer.fan_out) {
            throw SchemaError("layer " + std::to_string(l + 1) + " shape disagrees with 'dims'");
        }
        for (std::size_t o = 0; o < layer.fan_out; ++o) {
            if (weights[l][o].size() != layer.fan_in) {
                throw SchemaError("layer " + std::to_string(l + 1) + " shape disagrees with 'dims'");
            }
            std::copy(weights[l][o].begin(), weights[l][o].end(),
                      layer.weights.begin() + static_cast<std::ptrdiff_t>(o * layer.fan_in));
        }
        layer.biases = biases[l];
    }
    if (!j.at("norm_max_abs").is_null()) {
        m.norm = NormStats{detail::get_field<std::vector<double>>(j, "norm_max_abs")};
    }
    if (j.contains("grid") && !j.at("grid").is_null()) m.grid = detail::grid_from_json(j.at("grid"));
    try {
        m.validate();
    } catch (const DimensionError& e) {
        throw SchemaError(e.what());
    }
    cp.config = config_from_json(detail::get_field<json>(j, "train_config"));
    cp.final_metrics = metrics_from_json(detail::get_field<json>(j, "final_metrics"));
    cp.split_seed = detail::get_field<std::uint64_t>(j, "split_seed");
    return cp;
}

void save_history_csv(const TrainHistory& h, const std::filesystem::path& path,
                      bool include_timing) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << "epoch,train_loss,train_acc,dev_loss,dev_acc,seconds\n";
    for (const auto& e : h.epochs) {
        out << e.epoch << ',' << format_double(e.train_loss) << ','
            << format_double(e.train_accuracy) << ',' << format_double(e.dev_loss) << ','
            << format_double(e.dev_accuracy) << ','
            << (include_timing ? format_double(e.seconds) : std::string("0")) << '\n';
    }
    if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace pamic

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "crn/errors.hpp"
#include "crn/evaluate.hpp"
#include "crn/model.hpp"
#include "crn/optim.hpp"
#include "crn/rng.hpp"

namespace crn {

struct TrainConfig {
    Real learning_rate = Real(1e-3);
    Real weight_decay = Real(5e-4);
    std::size_t batch_size = 32;
    std::size_t max_epochs = 100;
    std::size_t patience = 20;
    std::uint64_t seed = 1;
    Real beta1 = Real(0.9);
    Real beta2 = Real(0.999);
    Real epsilon = Real(1e-8);

    AdamConfig adam() const {
        return AdamConfig{learning_rate, weight_decay, beta1, beta2, epsilon};
    }

    void validate() const {
        adam().validate();
        if (batch_size == 0) throw ConfigError("batch_size must be positive");
        if (max_epochs == 0) throw ConfigError("max_epochs must be positive");
        if (patience >= max_epochs) {
            throw ConfigError("patience must be smaller than max_epochs");
        }
    }
};

// Stop once `patience` epochs pass without a new strict validation-loss
// minimum. Epochs are counted from 1 in observation order.
class EarlyStopper {
  public:
    explicit EarlyStopper(std::size_t patience) : patience_(patience) {}

    // Returns true when training should stop after this epoch.
    bool observe(double val_loss) {
        seen_ += 1;
        if (val_loss < best_loss_) {
            best_loss_ = val_loss;
            best_epoch_ = seen_;
            improved_ = true;
            return false;
        }
        improved_ = false;
        return seen_ - best_epoch_ >= patience_;
    }

    bool improved() const { return improved_; }
    std::size_t best_epoch() const { return best_epoch_; }
    double best_loss() const { return best_loss_; }

  private:
    std::size_t patience_;
    std::size_t seen_ = 0;
    std::size_t best_epoch_ = 0;
    double best_loss_ = std::numeric_limits<double>::infinity();
    bool improved_ = false;
};

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;
    std::vector<double> val_metrics;
};

inline std::vector<std::string> metric_names(const ModelConfig& config) {
    if (config.head == ModelConfig::Head::categorical) {
        return {"val_accuracy", "val_weighted_f1", "val_macro_f1"};
    }
    std::vector<std::string> names;
    for (std::size_t a = 0; a < config.n_attributes; ++a) {
        names.push_back("val_mae_" + std::to_string(a));
    }
    return names;
}

struct TrainResult {
    std::vector<EpochRecord> history;
    std::size_t best_epoch = 0;  // 1-based; best parameters are restored into the model
    double best_val_loss = 0.0;
    OptimizerSnapshot optimizer;  // state as of the best epoch
};

namespace detail {

inline std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::vector<double> epoch_metrics(const Model& model, const EvalResult& val) {
    if (model.config.head == ModelConfig::Head::categorical) {
        return {val.report.accuracy, val.report.weighted_f1, val.report.macro_f1};
    }
    return val.regression.mae;
}

}  // namespace detail

inline void write_history_csv(std::ostream& os, const std::vector<EpochRecord>& history,
                              const std::vector<std::string>& names) {
    os << "epoch,train_loss,val_loss";
    for (const auto& n : names) os << "," << n;
    os << "\n";
    for (const auto& rec : history) {
        os << rec.epoch << "," << detail::format_g17(rec.train_loss) << ","
           << detail::format_g17(rec.val_loss);
        for (double m : rec.val_metrics) os << "," << detail::format_g17(m);
        os << "\n";
    }
}

// Epochs shuffle whole conversations with a seeded permutation; each epoch
// evaluates the validation split, and the parameters (plus optimizer state)
// of the best validation loss are restored before returning.
inline TrainResult train_model(Model& model, const std::vector<Conversation>& train_set,
                               const std::vector<Conversation>& val_set, const TrainConfig& cfg,
                               std::ostream* log = nullptr) {
    cfg.validate();
    model.config.validate();
    if (train_set.empty()) throw ConfigError("training split is empty");
    if (val_set.empty()) throw ConfigError("validation split is empty");

    Rng root(cfg.seed);
    Rng shuffle_rng = root.fork(1);
    Rng dropout_rng = root.fork(2);
    Adam adam(cfg.adam());
    auto params = model.named_params();
    bool categorical = model.config.head == ModelConfig::Head::categorical;
    std::size_t units_per_utt = categorical ? 1 : model.config.n_attributes;

    EarlyStopper stopper(cfg.patience);
    TrainResult result;
    std::vector<std::vector<Real>> best_values;

    std::vector<std::size_t> order(train_set.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double loss_num = 0.0;
        std::size_t loss_den = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            std::size_t stop = std::min(start + cfg.batch_size, order.size());
            std::vector<Conversation> batch;
            batch.reserve(stop - start);
            std::size_t batch_units = 0;
            for (std::size_t k = start; k < stop; ++k) {
                batch.push_back(train_set[order[k]]);
                batch_units += train_set[order[k]].size() * units_per_utt;
            }
            for (auto& [name, p] : params) {
                p.ensure_grad();
                p.zero_grad();
            }
            Tape tape;
            Tensor loss = categorical ? model.batch_loss(batch, &dropout_rng)
                                      : model.regression_loss(batch, &dropout_rng);
            double lv = static_cast<double>(loss.value());
            if (!std::isfinite(lv)) {
                throw NonFiniteLossError("loss became non-finite at epoch " +
                                         std::to_string(epoch));
            }
            tape.backward(loss);
            adam.update(params);
            loss_num += lv * static_cast<double>(batch_units);
            loss_den += batch_units;
        }

        EvalResult val = evaluate_model(model, val_set);
        if (!std::isfinite(val.loss)) {
            throw NonFiniteLossError("validation loss became non-finite at epoch " +
                                     std::to_string(epoch));
        }
        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss_num / static_cast<double>(loss_den);
        rec.val_loss = val.loss;
        rec.val_metrics = detail::epoch_metrics(model, val);
        result.history.push_back(rec);
        if (log) {
            *log << "epoch " << epoch << " train_loss " << rec.train_loss << " val_loss "
                 << rec.val_loss << "\n";
        }

        bool stop = stopper.observe(val.loss);
        if (stopper.improved()) {
            best_values.clear();
            for (const auto& [name, p] : params) {
                auto vals = p.values();
                best_values.emplace_back(vals.begin(), vals.end());
            }
            result.optimizer = snapshot_optimizer(adam, params);
        }
        if (stop) break;
    }

    result.best_epoch = stopper.best_epoch();
    result.best_val_loss = stopper.best_loss();
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto dst = params[i].second.values();
        const auto& src = best_values[i];
        for (std::size_t j = 0; j < src.size(); ++j) dst[j] = src[j];
    }
    return result;
}

}  // namespace crn

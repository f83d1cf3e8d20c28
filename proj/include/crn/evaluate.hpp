#pragma once

#include <cstddef>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#include "crn/corpus.hpp"
#include "crn/errors.hpp"
#include "crn/metrics.hpp"
#include "crn/model.hpp"

namespace crn {

// Evaluation parallelism cap: CRN_THREADS when set and sane, otherwise the
// hardware count. Training never parallelizes; only read-only eval does.
inline std::size_t eval_thread_cap() {
    if (const char* env = std::getenv("CRN_THREADS")) {
        char* end = nullptr;
        unsigned long long v = std::strtoull(env, &end, 10);
        if (end && *end == '\0' && v >= 1) return static_cast<std::size_t>(v);
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

namespace detail {

struct ConvEval {
    double loss_sum = 0.0;  // summed per-utterance loss terms
    std::size_t units = 0;  // loss denominator contribution
    std::vector<int> preds, golds;
    std::vector<std::vector<double>> pred_attrs, gold_attrs;
};

inline ConvEval eval_conversation(const Model& model, const Conversation& conv) {
    ForwardGraph graph = model.forward_graph(conv);
    ConvEval out;
    bool categorical = model.config.head == ModelConfig::Head::categorical;
    for (std::size_t i = 0; i < conv.utterances.size(); ++i) {
        std::span<const Real> row = graph.outputs[i].values();
        if (categorical) {
            const Utterance& utt = conv.utterances[i];
            if (utt.label < 0 || static_cast<std::size_t>(utt.label) >= row.size()) {
                throw SchemaError("conversation " + conv.id + " utterance " + std::to_string(i) +
                                  " has label " + std::to_string(utt.label) + ", model expects [0, " +
                                  std::to_string(row.size()) + ")");
            }
            std::size_t best = 0;
            for (std::size_t c = 1; c < row.size(); ++c) {
                if (row[c] > row[best]) best = c;
            }
            out.preds.push_back(static_cast<int>(best));
            out.golds.push_back(utt.label);
            out.loss_sum += -static_cast<double>(row[static_cast<std::size_t>(utt.label)]);
            out.units += 1;
        } else {
            const auto& target = conv.utterances[i].attrs;
            if (target.size() != row.size()) {
                throw DimensionError("conversation " + conv.id + " utterance " + std::to_string(i) +
                                     " has " + std::to_string(target.size()) +
                                     " attributes, model expects " + std::to_string(row.size()));
            }
            std::vector<double> pred(row.size()), gold(row.size());
            for (std::size_t a = 0; a < row.size(); ++a) {
                pred[a] = static_cast<double>(row[a]);
                gold[a] = static_cast<double>(target[a]);
                double d = pred[a] - gold[a];
                out.loss_sum += d < 0 ? -d : d;
            }
            out.pred_attrs.push_back(std::move(pred));
            out.gold_attrs.push_back(std::move(gold));
            out.units += row.size();
        }
    }
    return out;
}

}  // namespace detail

struct EvalResult {
    double loss = 0.0;  // mean per-utterance loss (categorical) or overall MAE (regression)
    std::vector<int> preds, golds;                      // categorical, conversation order
    std::vector<std::vector<double>> pred_attrs, gold_attrs;  // regression
    ClassificationReport report;
    RegressionReport regression;
};

// Forward passes are read-only on the parameters, so conversations can be
// evaluated on worker threads; aggregation stays in corpus order, which keeps
// the result independent of the thread count.
inline EvalResult evaluate_model(const Model& model, const std::vector<Conversation>& convs) {
    if (convs.empty()) throw EmptyInputError("evaluate_model: no conversations");
    std::vector<detail::ConvEval> per_conv(convs.size());
    std::size_t threads = std::min(eval_thread_cap(), convs.size());
    if (threads <= 1) {
        for (std::size_t i = 0; i < convs.size(); ++i) {
            per_conv[i] = detail::eval_conversation(model, convs[i]);
        }
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (std::size_t t = 0; t < threads; ++t) {
            pool.emplace_back([&, t] {
                for (std::size_t i = t; i < convs.size(); i += threads) {
                    per_conv[i] = detail::eval_conversation(model, convs[i]);
                }
            });
        }
        for (auto& th : pool) th.join();
    }

    EvalResult out;
    double loss_sum = 0.0;
    std::size_t units = 0;
    for (auto& ce : per_conv) {
        loss_sum += ce.loss_sum;
        units += ce.units;
        out.preds.insert(out.preds.end(), ce.preds.begin(), ce.preds.end());
        out.golds.insert(out.golds.end(), ce.golds.begin(), ce.golds.end());
        for (auto& row : ce.pred_attrs) out.pred_attrs.push_back(std::move(row));
        for (auto& row : ce.gold_attrs) out.gold_attrs.push_back(std::move(row));
    }
    out.loss = loss_sum / static_cast<double>(units);
    if (model.config.head == ModelConfig::Head::categorical) {
        out.report = classification_metrics(out.preds, out.golds, model.config.n_classes);
    } else {
        out.regression = regression_metrics(out.pred_attrs, out.gold_attrs);
    }
    return out;
}

}  // namespace crn

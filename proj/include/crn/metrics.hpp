#pragma once

#include <cstddef>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "crn/errors.hpp"

namespace crn {

struct ClassificationReport {
    double accuracy = 0.0;
    std::vector<double> precision;  // per class
    std::vector<double> recall;
    std::vector<double> f1;
    std::vector<std::size_t> support;  // gold count per class
    double weighted_f1 = 0.0;          // support-weighted mean of per-class F1
    double macro_f1 = 0.0;             // unweighted mean over all classes
    std::vector<std::vector<std::size_t>> confusion;  // [gold][pred]
    std::size_t total = 0;
};

struct RegressionReport {
    std::vector<double> mae;  // per attribute
    std::size_t count = 0;    // rows evaluated
};

inline ClassificationReport classification_metrics(const std::vector<int>& preds,
                                                   const std::vector<int>& golds,
                                                   std::size_t n_classes) {
    if (preds.size() != golds.size()) {
        throw DimensionError("classification_metrics: " + std::to_string(preds.size()) +
                             " predictions vs " + std::to_string(golds.size()) + " golds");
    }
    if (preds.empty()) throw EmptyInputError("classification_metrics: empty input");
    if (n_classes == 0) throw DimensionError("classification_metrics: zero classes");

    ClassificationReport rep;
    rep.total = preds.size();
    rep.confusion.assign(n_classes, std::vector<std::size_t>(n_classes, 0));
    for (std::size_t i = 0; i < preds.size(); ++i) {
        int g = golds[i], p = preds[i];
        if (g < 0 || static_cast<std::size_t>(g) >= n_classes ||
            p < 0 || static_cast<std::size_t>(p) >= n_classes) {
            throw SchemaError("classification_metrics: label out of range at index " +
                              std::to_string(i));
        }
        rep.confusion[static_cast<std::size_t>(g)][static_cast<std::size_t>(p)] += 1;
    }

    rep.precision.assign(n_classes, 0.0);
    rep.recall.assign(n_classes, 0.0);
    rep.f1.assign(n_classes, 0.0);
    rep.support.assign(n_classes, 0);

    std::size_t correct = 0;
    double weighted_sum = 0.0, macro_sum = 0.0;
    for (std::size_t c = 0; c < n_classes; ++c) {
        std::size_t tp = rep.confusion[c][c];
        std::size_t gold_c = 0, pred_c = 0;
        for (std::size_t k = 0; k < n_classes; ++k) {
            gold_c += rep.confusion[c][k];
            pred_c += rep.confusion[k][c];
        }
        rep.support[c] = gold_c;
        correct += tp;
        double p = pred_c == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(pred_c);
        double r = gold_c == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(gold_c);
        double f = (p + r) == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
        rep.precision[c] = p;
        rep.recall[c] = r;
        rep.f1[c] = f;
        weighted_sum += f * static_cast<double>(gold_c);
        macro_sum += f;
    }
    rep.accuracy = static_cast<double>(correct) / static_cast<double>(rep.total);
    rep.weighted_f1 = weighted_sum / static_cast<double>(rep.total);
    rep.macro_f1 = macro_sum / static_cast<double>(n_classes);
    return rep;
}

inline RegressionReport regression_metrics(const std::vector<std::vector<double>>& preds,
                                           const std::vector<std::vector<double>>& golds) {
    if (preds.size() != golds.size()) {
        throw DimensionError("regression_metrics: " + std::to_string(preds.size()) +
                             " predictions vs " + std::to_string(golds.size()) + " golds");
    }
    if (preds.empty()) throw EmptyInputError("regression_metrics: empty input");
    std::size_t k = preds[0].size();
    RegressionReport rep;
    rep.mae.assign(k, 0.0);
    rep.count = preds.size();
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (preds[i].size() != k || golds[i].size() != k) {
            throw DimensionError("regression_metrics: ragged row at index " + std::to_string(i));
        }
        for (std::size_t a = 0; a < k; ++a) {
            double d = preds[i][a] - golds[i][a];
            rep.mae[a] += d < 0 ? -d : d;
        }
    }
    for (std::size_t a = 0; a < k; ++a) rep.mae[a] /= static_cast<double>(rep.count);
    return rep;
}

inline std::string format_report(const ClassificationReport& rep) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(4);
    os << "utterances: " << rep.total << "\n";
    os << "accuracy:    " << rep.accuracy << "\n";
    os << "weighted_f1: " << rep.weighted_f1 << "\n";
    os << "macro_f1:    " << rep.macro_f1 << "\n";
    os << "class  precision  recall  f1      support\n";
    for (std::size_t c = 0; c < rep.f1.size(); ++c) {
        os << std::left << std::setw(7) << c << std::setw(11) << rep.precision[c]
           << std::setw(8) << rep.recall[c] << std::setw(8) << rep.f1[c] << rep.support[c]
           << "\n";
    }
    return os.str();
}

inline std::string format_report(const RegressionReport& rep) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(4);
    os << "utterances: " << rep.count << "\n";
    for (std::size_t a = 0; a < rep.mae.size(); ++a) {
        os << "mae[" << a << "]: " << rep.mae[a] << "\n";
    }
    return os.str();
}

}  // namespace crn

#pragma once

#include <cstddef>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "crn/corpus.hpp"
#include "crn/errors.hpp"
#include "crn/evaluate.hpp"
#include "crn/model.hpp"
#include "crn/train.hpp"

namespace crn {

struct AblationSpec {
    std::string name;
    bool cog_s, cog_v, per_s, per_v;
};

// Fixed canonical order: full model, cognition knocked out one level at a
// time then entirely, then perception on top of that, then everything.
inline std::vector<AblationSpec> canonical_ablation_rows() {
    return {
        {"full", true, true, true, true},
        {"-cog_s", false, true, true, true},
        {"-cog_v", true, false, true, true},
        {"-cog", false, false, true, true},
        {"-cog-per_s", false, false, false, true},
        {"-cog-per_v", false, false, true, false},
        {"-all", false, false, false, false},
    };
}

// Rows whose disabled switches all come from `switches`; the full row is
// always included as the baseline. An empty subset means the whole grid.
inline std::vector<AblationSpec> ablation_rows_for(const std::vector<std::string>& switches) {
    auto all = canonical_ablation_rows();
    if (switches.empty()) return all;
    auto allowed = [&](const std::string& name) {
        for (const auto& s : switches) {
            if (s == name) return true;
        }
        return false;
    };
    std::vector<AblationSpec> rows;
    for (const auto& row : all) {
        bool ok = true;
        if (!row.cog_s && !allowed("cog_s")) ok = false;
        if (!row.cog_v && !allowed("cog_v")) ok = false;
        if (!row.per_s && !allowed("per_s")) ok = false;
        if (!row.per_v && !allowed("per_v")) ok = false;
        if (ok) rows.push_back(row);
    }
    return rows;
}

struct AblationRow {
    AblationSpec spec;
    TrainResult train;
    EvalResult val;  // at the restored best epoch
};

inline AblationRow run_ablation_row(const AblationSpec& spec, const ModelConfig& base,
                                    const TrainConfig& tcfg,
                                    const std::vector<Conversation>& train_set,
                                    const std::vector<Conversation>& val_set,
                                    std::shared_ptr<const EmbeddingTable> embeddings,
                                    std::ostream* log = nullptr) {
    ModelConfig cfg = base;
    cfg.cog_s = spec.cog_s;
    cfg.cog_v = spec.cog_v;
    cfg.per_s = spec.per_s;
    cfg.per_v = spec.per_v;
    Model model = Model::create(cfg, tcfg.seed, std::move(embeddings));
    AblationRow row;
    row.spec = spec;
    row.train = train_model(model, train_set, val_set, tcfg, log);
    row.val = evaluate_model(model, val_set);
    return row;
}

// One model per configuration row over a shared, already-made split.
inline std::vector<AblationRow> run_ablation_grid(
    const ModelConfig& base, const TrainConfig& tcfg, const std::vector<Conversation>& train_set,
    const std::vector<Conversation>& val_set, std::shared_ptr<const EmbeddingTable> embeddings,
    const std::vector<AblationSpec>& rows, std::ostream* log = nullptr) {
    std::vector<AblationRow> out;
    out.reserve(rows.size());
    for (const auto& spec : rows) {
        if (log) *log << "ablation row " << spec.name << "\n";
        out.push_back(run_ablation_row(spec, base, tcfg, train_set, val_set, embeddings, log));
    }
    return out;
}

inline std::string ablation_csv(const std::vector<AblationRow>& rows) {
    std::ostringstream os;
    os << "name,cog_s,cog_v,per_s,per_v,best_epoch,val_loss,accuracy,weighted_f1,macro_f1\n";
    for (const auto& row : rows) {
        os << row.spec.name << "," << (row.spec.cog_s ? 1 : 0) << "," << (row.spec.cog_v ? 1 : 0)
           << "," << (row.spec.per_s ? 1 : 0) << "," << (row.spec.per_v ? 1 : 0) << ","
           << row.train.best_epoch << "," << detail::format_g17(row.val.loss) << ","
           << detail::format_g17(row.val.report.accuracy) << ","
           << detail::format_g17(row.val.report.weighted_f1) << ","
           << detail::format_g17(row.val.report.macro_f1) << "\n";
    }
    return os.str();
}

struct SweepCell {
    std::size_t t_s = 0, t_v = 0;
    std::size_t best_epoch = 0;
    double val_loss = 0.0;
    double accuracy = 0.0;
};

// Trains one model per (T_s, T_v) cell on a shared split. Cells come back
// row-major: t_s outer, t_v inner.
inline std::vector<SweepCell> run_turn_sweep(const ModelConfig& base, const TrainConfig& tcfg,
                                             const std::vector<Conversation>& train_set,
                                             const std::vector<Conversation>& val_set,
                                             std::shared_ptr<const EmbeddingTable> embeddings,
                                             const std::vector<std::size_t>& ts_values,
                                             const std::vector<std::size_t>& tv_values,
                                             std::ostream* log = nullptr) {
    if (ts_values.empty() || tv_values.empty()) {
        throw ConfigError("turn sweep needs at least one value per axis");
    }
    std::vector<SweepCell> cells;
    cells.reserve(ts_values.size() * tv_values.size());
    for (std::size_t ts : ts_values) {
        for (std::size_t tv : tv_values) {
            ModelConfig cfg = base;
            cfg.t_s = ts;
            cfg.t_v = tv;
            if (log) *log << "sweep cell t_s=" << ts << " t_v=" << tv << "\n";
            Model model = Model::create(cfg, tcfg.seed, embeddings);
            TrainResult tr = train_model(model, train_set, val_set, tcfg, log);
            EvalResult val = evaluate_model(model, val_set);
            SweepCell cell;
            cell.t_s = ts;
            cell.t_v = tv;
            cell.best_epoch = tr.best_epoch;
            cell.val_loss = val.loss;
            cell.accuracy = val.report.accuracy;
            cells.push_back(cell);
        }
    }
    return cells;
}

// Accuracy matrix with t_s down the rows and t_v across the columns, the
// shape heatmap tools expect.
inline std::string sweep_matrix_csv(const std::vector<SweepCell>& cells,
                                    const std::vector<std::size_t>& ts_values,
                                    const std::vector<std::size_t>& tv_values) {
    std::ostringstream os;
    os << "t_s\\t_v";
    for (std::size_t tv : tv_values) os << "," << tv;
    os << "\n";
    std::size_t idx = 0;
    for (std::size_t ts : ts_values) {
        os << ts;
        for (std::size_t k = 0; k < tv_values.size(); ++k) {
            os << "," << detail::format_g17(cells[idx].accuracy);
            ++idx;
        }
        os << "\n";
    }
    return os.str();
}

inline std::string sweep_cells_csv(const std::vector<SweepCell>& cells) {
    std::ostringstream os;
    os << "t_s,t_v,best_epoch,val_loss,accuracy\n";
    for (const auto& c : cells) {
        os << c.t_s << "," << c.t_v << "," << c.best_epoch << ","
           << detail::format_g17(c.val_loss) << "," << detail::format_g17(c.accuracy) << "\n";
    }
    return os.str();
}

}  // namespace crn

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "crn/errors.hpp"
#include "crn/init.hpp"
#include "crn/lstm.hpp"
#include "crn/tensor.hpp"

namespace crn {

// One cognition instance: a query projection 2d_u -> 4d_u plus, when the
// turn count is positive, a unidirectional reasoning LSTM (input 4d_u,
// working memory 2d_u). turns == 0 means the instance is removed and the
// loop returns the initial query untouched.
struct CognitionLevel {
    std::size_t turns = 0;
    Tensor query_w;  // [4d_u x 2d_u]
    Tensor query_b;  // [4d_u]
    LstmParams reason;

    static CognitionLevel create(std::size_t turns, std::size_t d_u, Rng& rng) {
        CognitionLevel level;
        level.turns = turns;
        level.query_w = make_weight(4 * d_u, 2 * d_u, rng);
        level.query_b = make_bias(4 * d_u);
        if (turns > 0) level.reason = LstmParams::create(4 * d_u, 2 * d_u, rng);
        return level;
    }

    void collect(const std::string& prefix,
                 std::vector<std::pair<std::string, Tensor>>& out) const {
        out.emplace_back(prefix + ".query.weight", query_w);
        out.emplace_back(prefix + ".query.bias", query_b);
        if (turns > 0) reason.collect(prefix + ".reason", out);
    }
};

struct ReasonResult {
    Tensor q_tilde;   // hidden output, [2d_u]
    LstmState state;  // updated working memory
};

inline ReasonResult reason_step(const Tensor& q, const LstmState& state, const LstmParams& params) {
    LstmState next = lstm_cell(params, q, state);
    return {next.h, next};
}

struct Retrieval {
    Tensor r;      // readout, [2d_u]
    Tensor alpha;  // attention weights over N rows
};

// Dot-product scores against every global-memory row, masked softmax, and
// the convex readout of the rows.
inline Retrieval retrieve(const Tensor& q_tilde, const Tensor& g, const std::vector<bool>& mask) {
    Tensor scores = matvec(g, q_tilde);
    Tensor alpha = masked_softmax(scores, mask);
    Tensor r = matvec_t(g, alpha);
    return {r, alpha};
}

// T interleaved reason/retrieve turns. The returned query of turn t is
// [q_tilde; r], so extents stay 4d_u throughout and the final query feeds
// the classifier directly. With trace set, the per-turn attention vectors
// are appended in turn order.
inline Tensor cognition_loop(const Tensor& c, const Tensor& g, const CognitionLevel& level,
                             const std::vector<bool>& mask, std::vector<Tensor>* trace = nullptr) {
    Tensor q = affine(level.query_w, c, level.query_b);
    if (level.turns == 0) return q;
    LstmState state = lstm_zero_state(level.reason.hidden_dim());
    for (std::size_t t = 0; t < level.turns; ++t) {
        ReasonResult reasoned = reason_step(q, state, level.reason);
        state = reasoned.state;
        Retrieval got = retrieve(reasoned.q_tilde, g, mask);
        if (trace) trace->push_back(got.alpha);
        q = concat(reasoned.q_tilde, got.r);
    }
    return q;
}

inline Tensor fuse(const Tensor& q_s, const Tensor& q_v) {
    if (q_s.size() != q_v.size()) {
        throw DimensionError("fuse: extents " + std::to_string(q_s.size()) + " and " +
                             std::to_string(q_v.size()) + " differ");
    }
    return concat(q_s, q_v);
}

// One exported attention row: which global-memory rows utterance i looked
// at on a given turn of a given level.
struct AttentionRecord {
    std::string conversation_id;
    std::size_t utterance_index = 0;
    char level = 's';  // 's' or 'v'
    std::size_t turn = 1;
    std::vector<Real> weights;
};

}  // namespace crn

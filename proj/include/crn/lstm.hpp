#pragma once

#include <string>
#include <utility>
#include <vector>

#include "crn/init.hpp"
#include "crn/tensor.hpp"

namespace crn {

// Single LSTM cell. Gate pre-activations live in one 4H vector ordered
// [input, forget, cell, output]; the forget bias starts at +1 so early
// training keeps cell state around.
struct LstmParams {
    Tensor w_ih;  // [4H x D]
    Tensor w_hh;  // [4H x H]
    Tensor bias;  // [4H]

    static LstmParams create(std::size_t input_dim, std::size_t hidden_dim, Rng& rng) {
        LstmParams p;
        p.w_ih = make_weight(4 * hidden_dim, input_dim, rng);
        p.w_hh = make_weight(4 * hidden_dim, hidden_dim, rng);
        p.bias = make_bias(4 * hidden_dim);
        for (std::size_t i = hidden_dim; i < 2 * hidden_dim; ++i) p.bias.data()[i] = Real(1);
        return p;
    }

    std::size_t hidden_dim() const { return bias.size() / 4; }
    std::size_t input_dim() const { return w_ih.extent(1); }

    void collect(const std::string& prefix,
                 std::vector<std::pair<std::string, Tensor>>& out) const {
        out.emplace_back(prefix + ".w_ih", w_ih);
        out.emplace_back(prefix + ".w_hh", w_hh);
        out.emplace_back(prefix + ".bias", bias);
    }
};

struct LstmState {
    Tensor h;
    Tensor c;
};

inline LstmState lstm_zero_state(std::size_t hidden_dim) {
    return {Tensor(Shape{hidden_dim}), Tensor(Shape{hidden_dim})};
}

inline LstmState lstm_cell(const LstmParams& p, const Tensor& x, const LstmState& s) {
    const std::size_t h = p.hidden_dim();
    Tensor pre = add(add(matvec(p.w_ih, x), matvec(p.w_hh, s.h)), p.bias);
    Tensor gi = sigmoid(slice(pre, 0, h));
    Tensor gf = sigmoid(slice(pre, h, h));
    Tensor gg = tanh(slice(pre, 2 * h, h));
    Tensor go = sigmoid(slice(pre, 3 * h, h));
    Tensor c_next = add(mul(gf, s.c), mul(gi, gg));
    Tensor h_next = mul(go, tanh(c_next));
    return {h_next, c_next};
}

struct BiLstmLayerParams {
    LstmParams fw;
    LstmParams bw;
};

// Stacked bidirectional LSTM. Each layer emits concat(fw_h, bw_h) per
// position, so layers past the first consume 2H inputs.
struct BiLstmParams {
    std::vector<BiLstmLayerParams> layers;

    static BiLstmParams create(std::size_t input_dim, std::size_t hidden_dim,
                               std::size_t n_layers, Rng& rng) {
        BiLstmParams p;
        for (std::size_t l = 0; l < n_layers; ++l) {
            const std::size_t in = l == 0 ? input_dim : 2 * hidden_dim;
            BiLstmLayerParams layer;
            layer.fw = LstmParams::create(in, hidden_dim, rng);
            layer.bw = LstmParams::create(in, hidden_dim, rng);
            p.layers.push_back(std::move(layer));
        }
        return p;
    }

    std::size_t hidden_dim() const { return layers.front().fw.hidden_dim(); }

    void collect(const std::string& prefix,
                 std::vector<std::pair<std::string, Tensor>>& out) const {
        for (std::size_t l = 0; l < layers.size(); ++l) {
            const std::string base = prefix + ".l" + std::to_string(l);
            layers[l].fw.collect(base + ".fw", out);
            layers[l].bw.collect(base + ".bw", out);
        }
    }
};

// Runs the stack over a sequence from zero initial state in both
// directions; output t is concat(forward h_t, backward h_t).
inline std::vector<Tensor> bilstm_sequence(const BiLstmParams& p, std::vector<Tensor> xs) {
    for (const BiLstmLayerParams& layer : p.layers) {
        const std::size_t n = xs.size();
        const std::size_t h = layer.fw.hidden_dim();
        std::vector<Tensor> fwd(n), bwd(n);
        LstmState state = lstm_zero_state(h);
        for (std::size_t t = 0; t < n; ++t) {
            state = lstm_cell(layer.fw, xs[t], state);
            fwd[t] = state.h;
        }
        state = lstm_zero_state(h);
        for (std::size_t t = n; t-- > 0;) {
            state = lstm_cell(layer.bw, xs[t], state);
            bwd[t] = state.h;
        }
        for (std::size_t t = 0; t < n; ++t) xs[t] = concat(fwd[t], bwd[t]);
    }
    return xs;
}

}  // namespace crn

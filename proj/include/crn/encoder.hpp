#pragma once

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "crn/corpus.hpp"
#include "crn/errors.hpp"
#include "crn/init.hpp"
#include "crn/tensor.hpp"

namespace crn {

inline constexpr std::size_t kConvWidths[3] = {3, 4, 5};
inline constexpr std::size_t kConvMaps = 50;
inline constexpr std::size_t kConvPadLength = 5;  // widest filter

// Inverted dropout: kept entries scale by 1/(1-rate) so evaluation applies
// no correction. A null rng means evaluation mode.
inline Tensor apply_dropout(const Tensor& x, Real rate, Rng* rng) {
    if (!rng || rate <= Real(0)) return x;
    if (rate >= Real(1)) throw ConfigError("dropout rate must be below 1");
    Tensor mask(x.shape());
    const Real keep = Real(1) / (Real(1) - rate);
    for (Real& m : mask.values()) m = rng->next_unit() < rate ? Real(0) : keep;
    return mul(x, mask);
}

// Convolutional utterance reader: per filter width, slide over token
// embeddings, max-pool over time, ReLU, then one dense projection of the
// 150 concatenated activations down to d_u.
struct EncoderParams {
    std::vector<Tensor> conv_w;  // per width: [kConvMaps x width*dim]
    std::vector<Tensor> conv_b;  // per width: [kConvMaps]
    Tensor proj_w;               // [d_u x 3*kConvMaps]
    Tensor proj_b;               // [d_u]
    std::size_t embedding_dim = 0;
    Real dropout_rate = Real(0.2);

    static EncoderParams create(std::size_t embedding_dim, std::size_t d_u, Real dropout_rate,
                                Rng& rng) {
        if (embedding_dim == 0) throw ConfigError("encoder needs a positive embedding dimension");
        EncoderParams p;
        p.embedding_dim = embedding_dim;
        p.dropout_rate = dropout_rate;
        for (std::size_t w : kConvWidths) {
            p.conv_w.push_back(make_weight(kConvMaps, w * embedding_dim, rng));
            p.conv_b.push_back(make_bias(kConvMaps));
        }
        p.proj_w = make_weight(d_u, 3 * kConvMaps, rng);
        p.proj_b = make_bias(d_u);
        return p;
    }

    std::size_t output_dim() const { return proj_b.size(); }

    void collect(const std::string& prefix,
                 std::vector<std::pair<std::string, Tensor>>& out) const {
        for (std::size_t k = 0; k < conv_w.size(); ++k) {
            const std::string base = prefix + ".conv" + std::to_string(kConvWidths[k]);
            out.emplace_back(base + ".weight", conv_w[k]);
            out.emplace_back(base + ".bias", conv_b[k]);
        }
        out.emplace_back(prefix + ".proj.weight", proj_w);
        out.emplace_back(prefix + ".proj.bias", proj_b);
    }
};

// Short utterances are right-padded with zero vectors up to the widest
// filter so every width has at least one valid window.
inline Tensor encode_utterance(const std::vector<std::string>& tokens, const EmbeddingTable& table,
                               const EncoderParams& params, Rng* dropout_rng) {
    if (tokens.empty()) throw EmptyInputError("cannot encode an utterance with no tokens");
    if (table.dimension() != params.embedding_dim) {
        throw DimensionError("embedding table dimension " + std::to_string(table.dimension()) +
                             " does not match encoder input " +
                             std::to_string(params.embedding_dim));
    }
    const std::size_t dim = params.embedding_dim;
    const std::size_t len = std::max(tokens.size(), kConvPadLength);
    std::vector<Real> emb(len * dim, Real(0));
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const std::vector<Real> v = table.lookup(tokens[i]);
        std::copy(v.begin(), v.end(), emb.begin() + static_cast<std::ptrdiff_t>(i * dim));
    }

    std::vector<Tensor> features;
    for (std::size_t k = 0; k < 3; ++k) {
        const std::size_t w = kConvWidths[k];
        const std::size_t n_windows = len - w + 1;
        Tensor windows(Shape{n_windows, w * dim});
        for (std::size_t pos = 0; pos < n_windows; ++pos) {
            std::copy(emb.begin() + static_cast<std::ptrdiff_t>(pos * dim),
                      emb.begin() + static_cast<std::ptrdiff_t>((pos + w) * dim),
                      windows.data() + pos * w * dim);
        }
        Tensor acts = linear_rows(windows, params.conv_w[k], params.conv_b[k]);
        features.push_back(relu(max_over_rows(acts)));
    }

    Tensor cat = concat(features);
    Tensor out = affine(params.proj_w, cat, params.proj_b);
    return apply_dropout(out, params.dropout_rate, dropout_rng);
}

// Precomputed-feature utterances bypass the encoder; their extent must
// already be d_u.
inline std::vector<Tensor> encode_conversation(const Conversation& conv,
                                               const EmbeddingTable* table,
                                               const EncoderParams* params, std::size_t d_u,
                                               Rng* dropout_rng) {
    std::vector<Tensor> out;
    out.reserve(conv.size());
    for (const Utterance& u : conv.utterances) {
        if (u.has_feature) {
            if (u.feature.size() != d_u) {
                throw DimensionError("precomputed feature extent " +
                                     std::to_string(u.feature.size()) + " in conversation '" +
                                     conv.id + "', model wants " + std::to_string(d_u));
            }
            out.emplace_back(Shape{d_u}, u.feature);
        } else {
            if (!table || !params) {
                throw ConfigError("token utterance in conversation '" + conv.id +
                                  "' but no encoder is configured");
            }
            out.push_back(encode_utterance(u.tokens, *table, *params, dropout_rng));
        }
    }
    return out;
}

}  // namespace crn

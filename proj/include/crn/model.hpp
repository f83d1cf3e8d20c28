#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "crn/cognition.hpp"
#include "crn/corpus.hpp"
#include "crn/encoder.hpp"
#include "crn/errors.hpp"
#include "crn/perception.hpp"
#include "crn/tensor.hpp"

namespace crn {

struct ModelConfig {
    enum class Head { categorical, regression };

    std::size_t d_u = 100;
    std::size_t n_classes = 6;
    std::size_t n_attributes = 4;
    Head head = Head::categorical;
    std::size_t t_s = 2;
    std::size_t t_v = 2;
    std::size_t perception_layers = 2;
    bool cog_s = true;  // ablation switches; a disabled cognition level runs zero turns
    bool cog_v = true;
    bool per_s = true;
    bool per_v = true;
    Real dropout = Real(0.2);
    std::size_t embedding_dim = 300;  // 0 disables the token encoder (feature corpora)

    std::size_t output_dim() const {
        return head == Head::categorical ? n_classes : n_attributes;
    }
    std::size_t effective_t_s() const { return cog_s ? t_s : 0; }
    std::size_t effective_t_v() const { return cog_v ? t_v : 0; }

    void validate() const {
        if (d_u == 0) throw ConfigError("d_u must be positive");
        if (perception_layers == 0) throw ConfigError("perception needs at least one layer");
        if (head == Head::categorical && n_classes < 2) {
            throw ConfigError("categorical head needs at least two classes");
        }
        if (head == Head::regression && n_attributes == 0) {
            throw ConfigError("regression head needs at least one attribute");
        }
        if (dropout < Real(0) || dropout >= Real(1)) {
            throw ConfigError("dropout must lie in [0, 1)");
        }
    }
};

// Per-conversation forward products. outputs[i] is the log-probability
// vector (categorical) or the raw attribute vector (regression) of
// utterance i; padded positions of a masked forward stay undefined.
struct ForwardGraph {
    std::vector<Tensor> outputs;
    std::vector<AttentionRecord> trace;
};

// Plain-value view of a forward pass for callers outside training.
struct Prediction {
    std::vector<std::vector<Real>> probs;  // categorical: N x |Y|, rows sum to 1
    std::vector<std::vector<Real>> attrs;  // regression: N x k
    std::vector<int> labels;               // categorical argmax, lowest index on ties
    std::vector<AttentionRecord> trace;
};

struct Model {
    ModelConfig config;
    bool has_encoder = false;
    EncoderParams encoder;
    PerceptionParams perception;
    CognitionLevel cognition_s;
    CognitionLevel cognition_v;
    Tensor cls_w;  // [out x 8d_u]
    Tensor cls_b;  // [out]
    std::shared_ptr<const EmbeddingTable> embeddings;

    static Model create(const ModelConfig& config, Rng& rng,
                        std::shared_ptr<const EmbeddingTable> embeddings = nullptr) {
        config.validate();
        Model m;
        m.config = config;
        m.embeddings = std::move(embeddings);
        m.has_encoder = config.embedding_dim > 0;
        if (m.has_encoder) {
            m.encoder = EncoderParams::create(config.embedding_dim, config.d_u, config.dropout,
                                              rng);
        }
        m.perception.situation =
            PerceptionLevel::create(config.per_s, config.d_u, config.perception_layers, rng);
        m.perception.speaker =
            PerceptionLevel::create(config.per_v, config.d_u, config.perception_layers, rng);
        m.cognition_s = CognitionLevel::create(config.effective_t_s(), config.d_u, rng);
        m.cognition_v = CognitionLevel::create(config.effective_t_v(), config.d_u, rng);
        m.cls_w = make_weight(config.output_dim(), 8 * config.d_u, rng);
        m.cls_b = make_bias(config.output_dim());
        return m;
    }

    static Model create(const ModelConfig& config, std::uint64_t seed,
                        std::shared_ptr<const EmbeddingTable> embeddings = nullptr) {
        Rng rng(seed);
        return create(config, rng, std::move(embeddings));
    }

    std::vector<std::pair<std::string, Tensor>> named_params() const {
        std::vector<std::pair<std::string, Tensor>> out;
        if (has_encoder) encoder.collect("encoder", out);
        perception.situation.collect("perception.situation", out);
        perception.speaker.collect("perception.speaker", out);
        cognition_s.collect("cognition.situation", out);
        cognition_v.collect("cognition.speaker", out);
        out.emplace_back("classifier.weight", cls_w);
        out.emplace_back("classifier.bias", cls_b);
        return out;
    }

    void zero_grads() const {
        for (auto& [name, t] : named_params()) {
            Tensor p = t;
            p.zero_grad();
        }
    }

    ForwardGraph forward_graph(const Conversation& conv, Rng* dropout_rng = nullptr,
                               bool want_trace = false) const {
        std::vector<Tensor> features =
            encode_conversation(conv, embeddings.get(), has_encoder ? &encoder : nullptr,
                                config.d_u, dropout_rng);
        const SpeakerPartition partition = partition_by_speaker(conv);
        const PerceptionOutput per = perceive(features, partition, perception);
        const std::vector<bool> mask(conv.size(), true);

        ForwardGraph out;
        out.outputs.reserve(conv.size());
        for (std::size_t i = 0; i < conv.size(); ++i) {
            std::vector<Tensor> trace_s, trace_v;
            Tensor q_s = cognition_loop(per.c_s[i], per.g_s, cognition_s, mask,
                                        want_trace ? &trace_s : nullptr);
            Tensor q_v = cognition_loop(per.c_v[i], per.g_v, cognition_v, mask,
                                        want_trace ? &trace_v : nullptr);
            Tensor fused = apply_dropout(fuse(q_s, q_v), config.dropout, dropout_rng);
            Tensor logits = affine(cls_w, fused, cls_b);
            out.outputs.push_back(config.head == ModelConfig::Head::categorical
                                      ? log_softmax(logits)
                                      : logits);
            if (want_trace) {
                for (std::size_t t = 0; t < trace_s.size(); ++t) {
                    AttentionRecord rec;
                    rec.conversation_id = conv.id;
                    rec.utterance_index = i;
                    rec.level = 's';
                    rec.turn = t + 1;
                    rec.weights.assign(trace_s[t].values().begin(), trace_s[t].values().end());
                    out.trace.push_back(std::move(rec));
                }
                for (std::size_t t = 0; t < trace_v.size(); ++t) {
                    AttentionRecord rec;
                    rec.conversation_id = conv.id;
                    rec.utterance_index = i;
                    rec.level = 'v';
                    rec.turn = t + 1;
                    rec.weights.assign(trace_v[t].values().begin(), trace_v[t].values().end());
                    out.trace.push_back(std::move(rec));
                }
            }
        }
        return out;
    }

    // Packed evaluation of a padded conversation: masked-off positions are
    // dropped before the forward pass and contribute to nothing; their
    // output slots stay undefined.
    ForwardGraph forward_graph_masked(const Conversation& conv, const std::vector<bool>& mask,
                                      Rng* dropout_rng = nullptr) const {
        if (mask.size() != conv.size()) {
            throw DimensionError("mask of " + std::to_string(mask.size()) + " entries for " +
                                 std::to_string(conv.size()) + " utterances");
        }
        Conversation packed;
        packed.id = conv.id;
        packed.roster = conv.roster;
        std::vector<std::size_t> where;
        for (std::size_t i = 0; i < conv.size(); ++i) {
            if (!mask[i]) continue;
            packed.utterances.push_back(conv.utterances[i]);
            where.push_back(i);
        }
        if (packed.utterances.empty()) {
            throw EmptySupportError("every utterance of '" + conv.id + "' is masked");
        }
        ForwardGraph packed_graph = forward_graph(packed, dropout_rng, false);
        ForwardGraph out;
        out.outputs.resize(conv.size());
        for (std::size_t j = 0; j < where.size(); ++j) {
            out.outputs[where[j]] = std::move(packed_graph.outputs[j]);
        }
        return out;
    }

    Prediction forward(const Conversation& conv, bool want_trace = false) const {
        TapePause no_tape;
        ForwardGraph graph = forward_graph(conv, nullptr, want_trace);
        Prediction pred;
        pred.trace = std::move(graph.trace);
        for (const Tensor& out : graph.outputs) {
            if (config.head == ModelConfig::Head::categorical) {
                std::vector<Real> probs(out.size());
                for (std::size_t k = 0; k < out.size(); ++k) probs[k] = std::exp(out.data()[k]);
                int best = 0;
                for (std::size_t k = 1; k < probs.size(); ++k) {
                    if (probs[k] > probs[static_cast<std::size_t>(best)]) {
                        best = static_cast<int>(k);
                    }
                }
                pred.probs.push_back(std::move(probs));
                pred.labels.push_back(best);
            } else {
                pred.attrs.emplace_back(out.values().begin(), out.values().end());
            }
        }
        return pred;
    }

    std::vector<int> predict(const Conversation& conv) const { return forward(conv).labels; }

    // Cross-entropy averaged over the total utterance count of the batch.
    Tensor batch_loss(const std::vector<Conversation>& batch, Rng* dropout_rng = nullptr) const {
        if (config.head != ModelConfig::Head::categorical) {
            throw HeadError("cross-entropy loss needs the categorical head");
        }
        if (batch.empty()) throw EmptyInputError("loss over an empty batch");
        std::vector<Tensor> terms;
        std::size_t total = 0;
        for (const Conversation& conv : batch) {
            ForwardGraph graph = forward_graph(conv, dropout_rng, false);
            for (std::size_t i = 0; i < conv.size(); ++i) {
                const int gold = conv.utterances[i].label;
                if (gold < 0 || static_cast<std::size_t>(gold) >= config.n_classes) {
                    throw SchemaError("conversation '" + conv.id + "' utterance " +
                                      std::to_string(i) + " has label " + std::to_string(gold) +
                                      " outside [0, " + std::to_string(config.n_classes) + ")");
                }
                terms.push_back(pick(graph.outputs[i], static_cast<std::size_t>(gold)));
                ++total;
            }
        }
        return scale(sum_of(terms), Real(-1) / static_cast<Real>(total));
    }

    // Mean absolute error over every utterance and attribute.
    Tensor regression_loss(const std::vector<Conversation>& batch,
                           Rng* dropout_rng = nullptr) const {
        if (config.head != ModelConfig::Head::regression) {
            throw HeadError("attribute loss needs the regression head");
        }
        if (batch.empty()) throw EmptyInputError("loss over an empty batch");
        std::vector<Tensor> terms;
        std::size_t total = 0;
        for (const Conversation& conv : batch) {
            ForwardGraph graph = forward_graph(conv, dropout_rng, false);
            for (std::size_t i = 0; i < conv.size(); ++i) {
                const Utterance& u = conv.utterances[i];
                if (u.attrs.size() != config.n_attributes) {
                    throw DimensionError("conversation '" + conv.id + "' utterance " +
                                         std::to_string(i) + " has " +
                                         std::to_string(u.attrs.size()) + " attrs, model wants " +
                                         std::to_string(config.n_attributes));
                }
                Tensor target(Shape{config.n_attributes}, u.attrs);
                terms.push_back(sum(abs(sub(graph.outputs[i], target))));
                ++total;
            }
        }
        return scale(sum_of(terms),
                     Real(1) / static_cast<Real>(total * config.n_attributes));
    }
};

}  // namespace crn

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "crn/corpus.hpp"
#include "crn/errors.hpp"
#include "crn/init.hpp"
#include "crn/lstm.hpp"
#include "crn/tensor.hpp"

namespace crn {

// One context level (situation or speaker): a stacked BiLSTM producing 2d_u
// contexts plus the global-memory projection. When the level is ablated the
// recurrence is replaced by a learned d_u -> 2d_u projection of the raw
// features so downstream extents stay fixed.
struct PerceptionLevel {
    bool enabled = true;
    BiLstmParams bilstm;   // when enabled
    Tensor proj_w, proj_b; // when disabled
    Tensor mem_w, mem_b;   // 2d_u -> 2d_u

    static PerceptionLevel create(bool enabled, std::size_t d_u, std::size_t layers, Rng& rng) {
        PerceptionLevel level;
        level.enabled = enabled;
        if (enabled) {
            level.bilstm = BiLstmParams::create(d_u, d_u, layers, rng);
        } else {
            level.proj_w = make_weight(2 * d_u, d_u, rng);
            level.proj_b = make_bias(2 * d_u);
        }
        level.mem_w = make_weight(2 * d_u, 2 * d_u, rng);
        level.mem_b = make_bias(2 * d_u);
        return level;
    }

    void collect(const std::string& prefix,
                 std::vector<std::pair<std::string, Tensor>>& out) const {
        if (enabled) {
            bilstm.collect(prefix, out);
        } else {
            out.emplace_back(prefix + ".proj.weight", proj_w);
            out.emplace_back(prefix + ".proj.bias", proj_b);
        }
        out.emplace_back(prefix + ".memory.weight", mem_w);
        out.emplace_back(prefix + ".memory.bias", mem_b);
    }
};

struct PerceptionParams {
    PerceptionLevel situation;
    PerceptionLevel speaker;
};

struct PerceptionOutput {
    std::vector<Tensor> c_s;  // N x [2d_u]
    std::vector<Tensor> c_v;
    Tensor g_s;  // [N x 2d_u]
    Tensor g_v;
};

inline std::vector<Tensor> situation_context(const std::vector<Tensor>& features,
                                             const BiLstmParams& params) {
    if (features.empty()) throw EmptyInputError("situation context needs at least one utterance");
    return bilstm_sequence(params, features);
}

// Per speaker: gather that speaker's utterances in order, run the shared
// recurrence from zero state, scatter the outputs back to global positions.
inline std::vector<Tensor> speaker_context(const std::vector<Tensor>& features,
                                           const SpeakerPartition& partition,
                                           const BiLstmParams& params) {
    if (features.empty()) throw EmptyInputError("speaker context needs at least one utterance");
    const std::size_t n = features.size();
    std::vector<Tensor> out(n);
    std::vector<bool> covered(n, false);
    for (std::size_t s = 0; s < partition.indices.size(); ++s) {
        const std::vector<std::size_t>& idx = partition.indices[s];
        if (idx.empty()) continue;
        std::vector<Tensor> gathered;
        gathered.reserve(idx.size());
        for (std::size_t i : idx) {
            if (i >= n) {
                throw PartitionError("partition index " + std::to_string(i) + " out of " +
                                     std::to_string(n) + " utterances");
            }
            if (covered[i]) {
                throw PartitionError("partition covers utterance " + std::to_string(i) + " twice");
            }
            covered[i] = true;
            gathered.push_back(features[i]);
        }
        std::vector<Tensor> ctx = bilstm_sequence(params, std::move(gathered));
        for (std::size_t j = 0; j < idx.size(); ++j) out[idx[j]] = std::move(ctx[j]);
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!covered[i]) {
            throw PartitionError("partition misses utterance " + std::to_string(i));
        }
    }
    return out;
}

inline Tensor global_memory(const std::vector<Tensor>& contexts, const Tensor& w,
                            const Tensor& b) {
    return linear_rows(stack_rows(contexts), w, b);
}

namespace detail {

inline std::vector<Tensor> project_features(const std::vector<Tensor>& features,
                                            const PerceptionLevel& level) {
    std::vector<Tensor> out;
    out.reserve(features.size());
    for (const Tensor& f : features) out.push_back(affine(level.proj_w, f, level.proj_b));
    return out;
}

inline std::vector<Tensor> level_context(const std::vector<Tensor>& features,
                                         const SpeakerPartition* partition,
                                         const PerceptionLevel& level) {
    if (!level.enabled) return project_features(features, level);
    if (partition) return speaker_context(features, *partition, level.bilstm);
    return situation_context(features, level.bilstm);
}

}  // namespace detail

inline PerceptionOutput perceive(const std::vector<Tensor>& features,
                                 const SpeakerPartition& partition,
                                 const PerceptionParams& params) {
    PerceptionOutput out;
    out.c_s = detail::level_context(features, nullptr, params.situation);
    out.c_v = detail::level_context(features, &partition, params.speaker);
    out.g_s = global_memory(out.c_s, params.situation.mem_w, params.situation.mem_b);
    out.g_v = global_memory(out.c_v, params.speaker.mem_w, params.speaker.mem_b);
    return out;
}

}  // namespace crn

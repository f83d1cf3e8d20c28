#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "crn/corpus.hpp"
#include "crn/errors.hpp"
#include "crn/rng.hpp"

namespace crn {

// Synthetic conversations where each label is readable only from context:
// every utterance plants one clue token, and the label of the following
// utterance (conversation order, or same-speaker order) is the class of
// that clue. An utterance's own tokens are drawn independently of its own
// label, so a context-free classifier can do no better than chance.
struct SynthSpec {
    std::size_t n_conversations = 10;
    std::size_t length = 12;
    std::size_t n_speakers = 2;
    enum class Clue { situation, speaker };
    Clue clue = Clue::situation;
    std::size_t vocab_size = 50;
    std::uint64_t seed = 7;
    std::size_t n_classes = 6;
    std::size_t min_tokens = 4;
    std::size_t max_tokens = 6;
};

inline std::string synth_word(std::size_t index) { return "w" + std::to_string(index); }
inline std::string synth_speaker(std::size_t index) { return "s" + std::to_string(index); }

// Clue token for class k is vocab word k; the rest of the vocabulary is
// filler.
inline std::vector<Conversation> synth_generate(const SynthSpec& spec) {
    if (spec.length < 2 || spec.n_speakers < 1) {
        throw GenerationError("need length >= 2 and at least one speaker");
    }
    if (spec.n_classes < 2) throw GenerationError("need at least two classes");
    if (spec.vocab_size <= spec.n_classes) {
        throw GenerationError("vocab of " + std::to_string(spec.vocab_size) +
                              " leaves no filler words beyond " +
                              std::to_string(spec.n_classes) + " clue words");
    }
    if (spec.min_tokens < 1 || spec.max_tokens < spec.min_tokens) {
        throw GenerationError("bad token count range");
    }
    if (spec.clue == SynthSpec::Clue::speaker && spec.length < 2 * spec.n_speakers) {
        throw GenerationError("speaker clue needs length >= " +
                              std::to_string(2 * spec.n_speakers) +
                              " so every speaker has a prior turn");
    }

    Rng rng(spec.seed);
    const std::size_t n_fillers = spec.vocab_size - spec.n_classes;
    std::vector<Conversation> corpus;
    corpus.reserve(spec.n_conversations);
    for (std::size_t c = 0; c < spec.n_conversations; ++c) {
        Conversation conv;
        conv.id = "synth-" + std::to_string(c);
        const std::size_t roster_size = std::min(spec.n_speakers, spec.length);
        for (std::size_t s = 0; s < roster_size; ++s) conv.roster.push_back(synth_speaker(s));

        std::vector<std::size_t> clue_class(spec.length);
        for (std::size_t i = 0; i < spec.length; ++i) {
            clue_class[i] = rng.below(spec.n_classes);
            Utterance utt;
            utt.speaker = synth_speaker(i % spec.n_speakers);

            const std::size_t len =
                spec.min_tokens + rng.below(spec.max_tokens - spec.min_tokens + 1);
            const std::size_t clue_pos = rng.below(len);
            for (std::size_t t = 0; t < len; ++t) {
                if (t == clue_pos) {
                    utt.tokens.push_back(synth_word(clue_class[i]));
                } else {
                    utt.tokens.push_back(synth_word(spec.n_classes + rng.below(n_fillers)));
                }
            }

            const bool has_prior = spec.clue == SynthSpec::Clue::situation
                                       ? i >= 1
                                       : i >= spec.n_speakers;
            if (has_prior) {
                const std::size_t prior =
                    spec.clue == SynthSpec::Clue::situation ? i - 1 : i - spec.n_speakers;
                utt.label = static_cast<int>(clue_class[prior]);
            } else {
                utt.label = static_cast<int>(rng.below(spec.n_classes));
            }
            conv.utterances.push_back(std::move(utt));
        }
        corpus.push_back(std::move(conv));
    }
    return corpus;
}

// Gaussian embedding vectors for the synthetic vocabulary.
inline void synth_embeddings(std::ostream& os, std::size_t vocab_size, std::size_t dimension,
                             std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::string> words;
    std::vector<std::vector<Real>> vectors;
    words.reserve(vocab_size);
    vectors.reserve(vocab_size);
    for (std::size_t i = 0; i < vocab_size; ++i) {
        words.push_back(synth_word(i));
        std::vector<Real> v(dimension);
        for (Real& x : v) x = static_cast<Real>(rng.normal());
        vectors.push_back(std::move(v));
    }
    save_embeddings(os, words, vectors);
}

}  // namespace crn

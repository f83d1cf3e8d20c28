// Acceptance gate: one binary, one line per criterion, nonzero exit on any
// failure. Tolerances and budgets are pinned here; every number printed is
// measured in this process.

#include <crn/crn.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

using namespace crn;

namespace {

double now_s() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

int g_failures = 0;

void report_line(int num, const std::string& name, bool pass, const std::string& detail) {
    if (!pass) ++g_failures;
    std::printf("[%s] %d %-22s %s\n", pass ? "PASS" : "FAIL", num, name.c_str(), detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

Tensor rand_param(std::vector<std::size_t> shape, Rng& rng, Real lo = Real(-1), Real hi = Real(1)) {
    std::size_t n = 1;
    for (std::size_t e : shape) n *= e;
    std::vector<Real> v(n);
    for (Real& x : v) x = Real(rng.uniform(double(lo), double(hi)));
    Tensor t(std::move(shape), std::move(v));
    t.set_requires_grad(true);
    return t;
}

// Keeps values away from zero so kinked ops (relu, abs, max) see a locally
// smooth neighborhood under the finite-difference step.
Tensor rand_param_off_zero(std::vector<std::size_t> shape, Rng& rng) {
    Tensor t = rand_param(std::move(shape), rng);
    for (Real& x : t.values()) x += (x >= 0 ? Real(0.25) : Real(-0.25));
    return t;
}

Tensor const_vector(std::size_t n, Rng& rng) {
    std::vector<Real> v(n);
    for (Real& x : v) x = Real(rng.uniform(-1.0, 1.0));
    return Tensor({n}, std::move(v));
}

std::shared_ptr<const EmbeddingTable> make_synth_table(std::size_t vocab, std::size_t dim,
                                                       std::uint64_t seed) {
    std::stringstream ss;
    synth_embeddings(ss, vocab, dim, seed);
    return std::make_shared<const EmbeddingTable>(load_embeddings(ss, dim));
}

// Mirrors the corpus file round trip of the command-line flow so accuracies
// measured here match a scripted rerun digit for digit.
std::vector<Conversation> roundtrip_corpus(const std::vector<Conversation>& convs,
                                           const LabelSchema& schema) {
    std::stringstream ss;
    save_corpus(ss, convs, schema);
    return load_corpus(ss, schema);
}

struct SynthSplit {
    std::vector<Conversation> train, val;
    std::shared_ptr<const EmbeddingTable> table;
};

SynthSplit make_split(SynthSpec spec, std::size_t n_train, std::size_t n_val,
                      std::size_t embedding_dim) {
    spec.n_conversations = n_train + n_val;
    std::vector<Conversation> convs = synth_generate(spec);
    LabelSchema schema = LabelSchema::categorical(spec.n_classes);
    SynthSplit out;
    out.train = roundtrip_corpus(
        {convs.begin(), convs.begin() + static_cast<std::ptrdiff_t>(n_train)}, schema);
    out.val = roundtrip_corpus({convs.begin() + static_cast<std::ptrdiff_t>(n_train), convs.end()},
                               schema);
    out.table = make_synth_table(spec.vocab_size, embedding_dim, spec.seed);
    return out;
}

// ---------------------------------------------------------------------------
// Criterion 1: finite-difference gradient checks, per operation and end to end.

struct GradCase {
    std::string name;
    Real max_rel_err = 0;
};

std::vector<GradCase> op_gradient_cases() {
    std::vector<GradCase> out;
    Rng rng(101);
    auto run = [&](const std::string& name, const std::function<Tensor()>& loss,
                   std::vector<std::pair<std::string, Tensor>> params) {
        GradCheckReport rep = check_gradients(loss, params, Real(1e-5));
        out.push_back({name, rep.max_rel_err});
    };

    {
        Tensor a = rand_param({5}, rng), b = rand_param({5}, rng);
        run("add", [&] { return sum(add(a, b)); }, {{"a", a}, {"b", b}});
    }
    {
        Tensor a = rand_param({5}, rng), b = rand_param({5}, rng);
        run("sub", [&] { return sum(sub(a, b)); }, {{"a", a}, {"b", b}});
    }
    {
        Tensor a = rand_param({5}, rng), b = rand_param({5}, rng);
        run("mul", [&] { return sum(mul(a, b)); }, {{"a", a}, {"b", b}});
    }
    {
        Tensor x = rand_param({6}, rng);
        run("scale", [&] { return sum(scale(x, Real(1.7))); }, {{"x", x}});
    }
    {
        Tensor x = rand_param({6}, rng);
        run("tanh", [&] { return sum(crn::tanh(x)); }, {{"x", x}});
    }
    {
        Tensor x = rand_param({6}, rng);
        run("sigmoid", [&] { return sum(sigmoid(x)); }, {{"x", x}});
    }
    {
        Tensor x = rand_param_off_zero({6}, rng);
        run("relu", [&] { return sum(relu(x)); }, {{"x", x}});
    }
    {
        Tensor x = rand_param_off_zero({6}, rng);
        run("abs", [&] { return sum(crn::abs(x)); }, {{"x", x}});
    }
    {
        Tensor a = rand_param({3, 4}, rng), b = rand_param({4, 2}, rng);
        run("matmul", [&] { return sum(matmul(a, b)); }, {{"a", a}, {"b", b}});
    }
    {
        Tensor a = rand_param({3, 4}, rng), x = rand_param({4}, rng);
        run("matvec", [&] { return sum(matvec(a, x)); }, {{"a", a}, {"x", x}});
    }
    {
        Tensor a = rand_param({3, 4}, rng), y = rand_param({3}, rng);
        run("matvec_t", [&] { return sum(matvec_t(a, y)); }, {{"a", a}, {"y", y}});
    }
    {
        Tensor x = rand_param({4, 6}, rng), w = rand_param({3, 6}, rng), b = rand_param({3}, rng);
        run("linear_rows", [&] { return sum(linear_rows(x, w, b)); },
            {{"x", x}, {"w", w}, {"b", b}});
    }
    {
        Tensor w = rand_param({3, 4}, rng), x = rand_param({4}, rng), b = rand_param({3}, rng);
        run("affine", [&] { return sum(affine(w, x, b)); }, {{"w", w}, {"x", x}, {"b", b}});
    }
    {
        Tensor r0 = rand_param({4}, rng), r1 = rand_param({4}, rng), r2 = rand_param({4}, rng);
        std::vector<Real> wv(12);
        for (Real& x : wv) x = Real(rng.uniform(-1.0, 1.0));
        Tensor weights({3, 4}, std::move(wv));
        run("stack_rows",
            [&] {
                std::vector<Tensor> rows{r0, r1, r2};
                return sum(mul(stack_rows(rows), weights));
            },
            {{"r0", r0}, {"r1", r1}, {"r2", r2}});
    }
    {
        Tensor x = rand_param({6}, rng);
        run("slice", [&] { return sum(slice(x, 1, 3)); }, {{"x", x}});
    }
    {
        Tensor a = rand_param({3}, rng), b = rand_param({4}, rng);
        run("concat", [&] { return sum(concat(a, b)); }, {{"a", a}, {"b", b}});
    }
    {
        Tensor x = rand_param({5}, rng);
        run("pick", [&] { return pick(x, 2); }, {{"x", x}});
    }
    {
        Tensor x = rand_param({5}, rng);
        run("sum", [&] { return sum(x); }, {{"x", x}});
    }
    {
        Tensor a = rand_param({4}, rng), b = rand_param({4}, rng), c = rand_param({4}, rng);
        run("sum_of",
            [&] {
                std::vector<Tensor> terms{sum(a), sum(b), sum(c)};
                return sum_of(terms);
            },
            {{"a", a}, {"b", b}, {"c", c}});
    }
    {
        Tensor x = rand_param_off_zero({3, 4}, rng);
        run("max_over_rows", [&] { return sum(max_over_rows(x)); }, {{"x", x}});
    }
    {
        Tensor x = rand_param({6}, rng);
        Tensor w = const_vector(6, rng);
        std::vector<bool> mask{true, false, true, true, false, true};
        run("masked_softmax", [&] { return sum(mul(masked_softmax(x, mask), w)); }, {{"x", x}});
    }
    {
        Tensor x = rand_param({5}, rng);
        Tensor w = const_vector(5, rng);
        run("softmax", [&] { return sum(mul(softmax(x), w)); }, {{"x", x}});
    }
    {
        Tensor x = rand_param({5}, rng);
        Tensor w = const_vector(5, rng);
        run("log_softmax", [&] { return sum(mul(log_softmax(x), w)); }, {{"x", x}});
    }
    {
        Rng init(7);
        LstmParams p = LstmParams::create(4, 3, init);
        Tensor x = rand_param({4}, rng);
        std::vector<std::pair<std::string, Tensor>> params{{"x", x}};
        p.collect("lstm", params);
        run("lstm_cell",
            [&] {
                LstmState s = lstm_cell(p, x, lstm_zero_state(3));
                LstmState s2 = lstm_cell(p, x, s);
                return sum(concat(s2.h, s2.c));
            },
            params);
    }
    {
        Rng init(8);
        BiLstmParams p = BiLstmParams::create(3, 2, 1, init);
        Tensor x0 = rand_param({3}, rng), x1 = rand_param({3}, rng), x2 = rand_param({3}, rng);
        std::vector<std::pair<std::string, Tensor>> params{{"x0", x0}, {"x1", x1}, {"x2", x2}};
        p.collect("bilstm", params);
        run("bilstm_sequence",
            [&] {
                std::vector<Tensor> outs = bilstm_sequence(p, {x0, x1, x2});
                std::vector<Tensor> terms;
                for (const Tensor& o : outs) terms.push_back(sum(o));
                return sum_of(terms);
            },
            params);
    }
    {
        Rng init(9);
        EncoderParams enc = EncoderParams::create(4, 6, Real(0), init);
        auto table = make_synth_table(10, 4, 3);
        std::vector<std::string> short_toks{synth_word(1), synth_word(2)};
        std::vector<std::string> long_toks;
        for (std::size_t i = 0; i < 7; ++i) long_toks.push_back(synth_word(i));
        std::vector<std::pair<std::string, Tensor>> params;
        enc.collect("encoder", params);
        // Freshly created biases are zero, which parks the all-zero padding
        // windows of the short utterance exactly on the relu kink where a
        // finite difference straddles two subgradients. Shift every bias off
        // zero so the probed neighborhood is smooth.
        for (auto& [name, p] : params) {
            if (name.find("bias") != std::string::npos) {
                for (Real& v : p.values()) v = Real(rng.uniform(0.05, 0.35));
            }
        }
        run("encode_utterance",
            [&] {
                Tensor a = encode_utterance(short_toks, *table, enc, nullptr);
                Tensor b = encode_utterance(long_toks, *table, enc, nullptr);
                return sum(add(a, b));
            },
            params);
    }
    {
        Tensor q = rand_param({4}, rng);
        Tensor g = rand_param({5, 4}, rng);
        Tensor w = const_vector(4, rng);
        std::vector<bool> mask{true, true, false, true, true};
        run("retrieve",
            [&] {
                Retrieval got = retrieve(q, g, mask);
                return sum(mul(got.r, w));
            },
            {{"q", q}, {"g", g}});
    }
    {
        Rng init(10);
        CognitionLevel level = CognitionLevel::create(2, 3, init);
        Tensor c = rand_param({6}, rng);
        Tensor g = rand_param({4, 6}, rng);
        std::vector<bool> mask(4, true);
        std::vector<std::pair<std::string, Tensor>> params{{"c", c}, {"g", g}};
        level.collect("cognition", params);
        run("cognition_loop", [&] { return sum(cognition_loop(c, g, level, mask, nullptr)); },
            params);
    }
    {
        Tensor x = rand_param({10}, rng);
        run("dropout_fixed_mask",
            [&] {
                Rng mask_rng(77);  // same mask on every probe evaluation
                return sum(apply_dropout(x, Real(0.4), &mask_rng));
            },
            {{"x", x}});
    }
    return out;
}

void criterion_1() {
    const double t0 = now_s();
    const Real tol = Real(1e-3);
    Real worst = 0;
    std::string worst_name;
    std::size_t n_ops = 0;

    std::vector<GradCase> cases = op_gradient_cases();
    for (const GradCase& c : cases) {
        ++n_ops;
        if (c.max_rel_err > worst) {
            worst = c.max_rel_err;
            worst_name = c.name;
        }
    }

    // End-to-end toy: 3 utterances, 2 speakers, T_s = T_v = 2, d_u = 8.
    Conversation toy;
    toy.id = "toy";
    toy.roster = {synth_speaker(0), synth_speaker(1)};
    auto utt = [](std::string speaker, std::vector<std::string> tokens, int label) {
        Utterance u;
        u.speaker = std::move(speaker);
        u.tokens = std::move(tokens);
        u.label = label;
        return u;
    };
    // Five or more tokens per utterance: every pooling window then covers at
    // least one real embedding row, so no pre-relu activation can sit exactly
    // on the kink where finite differences disagree with the subgradient.
    toy.utterances.push_back(utt(synth_speaker(0),
                                 {synth_word(0), synth_word(1), synth_word(6), synth_word(3),
                                  synth_word(7), synth_word(2)},
                                 0));
    toy.utterances.push_back(utt(synth_speaker(1),
                                 {synth_word(2), synth_word(3), synth_word(4), synth_word(0),
                                  synth_word(5)},
                                 2));
    toy.utterances.push_back(utt(synth_speaker(0),
                                 {synth_word(5), synth_word(4), synth_word(1), synth_word(7),
                                  synth_word(6), synth_word(3), synth_word(0)},
                                 1));

    ModelConfig mc;
    mc.d_u = 8;
    mc.n_classes = 3;
    mc.t_s = 2;
    mc.t_v = 2;
    mc.perception_layers = 1;
    mc.dropout = Real(0);  // the loss must be a deterministic function of the parameters
    mc.embedding_dim = 4;
    Model model = Model::create(mc, 11, make_synth_table(8, 4, 3));

    Rng probe_rng(555);
    GradCheckReport full = check_gradients(
        [&] { return model.batch_loss({toy}); }, model.named_params(), Real(1e-5), 24, &probe_rng);
    if (full.max_rel_err > worst) {
        worst = full.max_rel_err;
        worst_name = "full_model(" + full.worst.param + ")";
    }

    const double elapsed = now_s() - t0;
    const bool pass = worst < tol && elapsed < 60.0;
    report_line(1, "gradient-suite", pass,
                "max rel err " + fmt("%.2e", double(worst)) + " (tol 1e-3, worst: " + worst_name +
                    "; " + std::to_string(n_ops) + " ops + full model, " +
                    std::to_string(full.checked) + " end-to-end probes); " +
                    fmt("%.1f", elapsed) + "s (budget 60s)");
}

// ---------------------------------------------------------------------------
// Criterion 2: overfit 8 synthetic conversations.

void criterion_2() {
    const double t0 = now_s();
    SynthSpec sp;
    sp.length = 6;
    sp.n_speakers = 2;
    sp.clue = SynthSpec::Clue::speaker;
    sp.vocab_size = 30;
    sp.seed = 5;
    sp.n_classes = 6;
    SynthSplit data = make_split(sp, 8, 1, 25);

    ModelConfig mc;
    mc.d_u = 32;
    mc.n_classes = 6;
    mc.t_s = 1;
    mc.t_v = 1;
    mc.perception_layers = 1;
    mc.dropout = Real(0);
    mc.embedding_dim = 25;

    TrainConfig tc;
    tc.learning_rate = 1e-3;
    tc.weight_decay = 0;
    tc.batch_size = 8;
    tc.max_epochs = 200;
    tc.patience = 199;
    tc.seed = 5;

    Model model = Model::create(mc, tc.seed, data.table);
    TrainResult res = train_model(model, data.train, data.train, tc);
    const double acc = evaluate_model(model, data.train).report.accuracy;

    const double elapsed = now_s() - t0;
    const bool pass = acc >= 0.99 && elapsed < 120.0;
    report_line(2, "overfit", pass,
                "train acc " + fmt("%.4f", acc) + " (need >= 0.99) after " +
                    std::to_string(res.history.size()) + " epochs; " + fmt("%.1f", elapsed) +
                    "s (budget 120s)");
}

// ---------------------------------------------------------------------------
// Criteria 3-5 share the speaker-clue corpora and model settings.

struct AblationSetting {
    ModelConfig model;
    TrainConfig train;
};

AblationSetting ablation_setting(std::uint64_t seed) {
    AblationSetting s;
    s.model.d_u = 14;
    s.model.n_classes = 20;
    s.model.t_s = 2;
    s.model.t_v = 2;
    s.model.perception_layers = 1;
    s.model.dropout = Real(0.3);
    s.model.embedding_dim = 25;
    s.train.learning_rate = 3e-3;
    s.train.weight_decay = 0;
    s.train.batch_size = 8;
    s.train.max_epochs = 120;
    s.train.patience = 119;
    s.train.seed = seed;
    return s;
}

SynthSplit clue_split(SynthSpec::Clue clue, std::uint64_t seed) {
    SynthSpec sp;
    sp.length = 12;
    sp.n_speakers = 2;
    sp.clue = clue;
    sp.vocab_size = 60;
    sp.seed = seed;
    sp.n_classes = 20;
    return make_split(sp, 200, 50, 25);
}

double train_variant(const SynthSplit& data, const AblationSetting& s, bool cog_s, bool cog_v,
                     bool per_s, bool per_v) {
    ModelConfig mc = s.model;
    mc.cog_s = cog_s;
    mc.cog_v = cog_v;
    mc.per_s = per_s;
    mc.per_v = per_v;
    Model model = Model::create(mc, s.train.seed, data.table);
    train_model(model, data.train, data.val, s.train);
    return evaluate_model(model, data.val).report.accuracy;
}

const std::vector<std::uint64_t> kSeeds{1, 2, 3};

struct SpeakerCorpusRuns {
    std::vector<SynthSplit> splits;     // one per seed
    std::vector<double> full_acc;       // full model accuracy per seed
};

void criterion_3(SpeakerCorpusRuns& out) {
    const double t0 = now_s();
    int satisfied = 0;
    std::string detail;
    for (std::uint64_t seed : kSeeds) {
        SynthSplit data = clue_split(SynthSpec::Clue::speaker, seed);
        AblationSetting s = ablation_setting(seed);
        const double full = train_variant(data, s, true, true, true, true);
        const double nocog = train_variant(data, s, false, false, true, true);
        const double ctxfree = train_variant(data, s, false, false, false, false);
        const bool ok = (full - nocog >= 0.10) && (full - ctxfree >= 0.25);
        if (ok) ++satisfied;
        detail += " seed" + std::to_string(seed) + "(full " + fmt("%.3f", full) + ", -cog " +
                  fmt("%.3f", nocog) + ", -all " + fmt("%.3f", ctxfree) +
                  (ok ? ", ok)" : ", miss)");
        out.splits.push_back(std::move(data));
        out.full_acc.push_back(full);
    }
    const double elapsed = now_s() - t0;
    const bool pass = satisfied >= 2 && elapsed < 900.0;
    report_line(3, "cognition-ablation", pass,
                std::to_string(satisfied) + "/3 seeds meet gaps >= 0.10 over -cog and >= 0.25 "
                                            "over -all;" +
                    detail + "; " + fmt("%.0f", elapsed) + "s (budget 900s)");
}

void criterion_4(const SpeakerCorpusRuns& runs) {
    const double t0 = now_s();
    int speaker_ok = 0;
    std::string detail = " speaker-clue:";
    for (std::size_t i = 0; i < kSeeds.size(); ++i) {
        AblationSetting s = ablation_setting(kSeeds[i]);
        const double ablated = train_variant(runs.splits[i], s, true, false, true, false);
        const bool ok = runs.full_acc[i] - ablated >= 0.10;
        if (ok) ++speaker_ok;
        detail += " seed" + std::to_string(kSeeds[i]) + "(full " + fmt("%.3f", runs.full_acc[i]) +
                  " vs -spk " + fmt("%.3f", ablated) + (ok ? ", ok)" : ", miss)");
    }

    int situation_ok = 0;
    detail += "; situation-clue:";
    for (std::uint64_t seed : kSeeds) {
        SynthSplit data = clue_split(SynthSpec::Clue::situation, seed);
        AblationSetting s = ablation_setting(seed);
        const double full = train_variant(data, s, true, true, true, true);
        const double ablated = train_variant(data, s, false, true, false, true);
        const bool ok = full - ablated >= 0.10;
        if (ok) ++situation_ok;
        detail += " seed" + std::to_string(seed) + "(full " + fmt("%.3f", full) + " vs -sit " +
                  fmt("%.3f", ablated) + (ok ? ", ok)" : ", miss)");
    }

    const double elapsed = now_s() - t0;
    const bool pass = speaker_ok >= 2 && situation_ok >= 2;
    report_line(4, "level-specificity", pass,
                "speaker " + std::to_string(speaker_ok) + "/3, situation " +
                    std::to_string(situation_ok) + "/3 seeds degrade >= 0.10;" + detail + "; " +
                    fmt("%.0f", elapsed) + "s");
}

void criterion_5(const SpeakerCorpusRuns& runs) {
    const double t0 = now_s();
    int not_origin = 0;
    std::string detail;
    bool all_complete = true;
    for (std::size_t i = 0; i < kSeeds.size(); ++i) {
        AblationSetting s = ablation_setting(kSeeds[i]);
        s.train.max_epochs = 40;
        s.train.patience = 39;
        std::vector<SweepCell> cells =
            run_turn_sweep(s.model, s.train, runs.splits[i].train, runs.splits[i].val,
                           runs.splits[i].table, {0, 1, 2, 3}, {0, 1, 2, 3});
        if (cells.size() != 16) all_complete = false;
        double origin = 0, best = -1;
        std::size_t best_ts = 0, best_tv = 0;
        for (const SweepCell& c : cells) {
            if (!std::isfinite(c.accuracy)) all_complete = false;
            if (c.t_s == 0 && c.t_v == 0) origin = c.accuracy;
            if (c.accuracy > best) {
                best = c.accuracy;
                best_ts = c.t_s;
                best_tv = c.t_v;
            }
        }
        const bool ok = !(best_ts == 0 && best_tv == 0) && best > origin;
        if (ok) ++not_origin;
        detail += " seed" + std::to_string(kSeeds[i]) + "(best (" + std::to_string(best_ts) + "," +
                  std::to_string(best_tv) + ") " + fmt("%.3f", best) + " vs (0,0) " +
                  fmt("%.3f", origin) + (ok ? ", ok)" : ", miss)");
    }
    const double elapsed = now_s() - t0;
    const bool pass = all_complete && not_origin >= 2;
    report_line(5, "turn-sweep", pass,
                "16/16 cells per seed, best cell not (0,0) in " + std::to_string(not_origin) +
                    "/3 seeds (need >= 2);" + detail + "; " + fmt("%.0f", elapsed) + "s");
}

// ---------------------------------------------------------------------------
// Criterion 6: masking and normalization invariants.

void criterion_6() {
    const double t0 = now_s();
    bool pass = true;
    std::string detail;

    // Padding equivalence: appended OOV tokens embed to zero rows; with zero
    // conv biases the pooled activations cannot move.
    {
        Rng init(4);
        auto table = make_synth_table(30, 6, 5);
        EncoderParams params = EncoderParams::create(6, 9, Real(0), init);
        std::vector<std::string> base{synth_word(7)};
        Tensor plain = encode_utterance(base, *table, params, nullptr);
        double max_diff = 0;
        std::vector<std::string> padded = base;
        for (int extra = 0; extra < 3; ++extra) {
            padded.push_back("absent-token");
            Tensor out = encode_utterance(padded, *table, params, nullptr);
            for (std::size_t i = 0; i < out.size(); ++i) {
                max_diff = std::max(max_diff,
                                    std::fabs(double(out.data()[i]) - double(plain.data()[i])));
            }
        }
        pass = pass && max_diff <= 1e-6;
        detail += "padding diff " + fmt("%.1e", max_diff) + " (tol 1e-6)";
    }

    // Attention rows are probability vectors.
    {
        SynthSpec sp;
        sp.length = 6;
        sp.n_speakers = 2;
        sp.clue = SynthSpec::Clue::situation;
        sp.vocab_size = 20;
        sp.seed = 23;
        sp.n_classes = 4;
        sp.n_conversations = 1;
        Conversation conv = synth_generate(sp)[0];

        ModelConfig mc;
        mc.d_u = 6;
        mc.n_classes = 4;
        mc.t_s = 3;
        mc.t_v = 2;
        mc.perception_layers = 1;
        mc.dropout = Real(0);
        mc.embedding_dim = 8;
        Model model = Model::create(mc, 19, make_synth_table(20, 8, 23));
        Prediction pred = model.forward(conv, true);
        const std::size_t expected = conv.size() * (mc.t_s + mc.t_v);
        double worst = 0;
        for (const AttentionRecord& rec : pred.trace) {
            double s = 0;
            for (double w : rec.weights) {
                s += w;
                if (w < 0) pass = false;
            }
            worst = std::max(worst, std::fabs(s - 1.0));
        }
        pass = pass && pred.trace.size() == expected && worst <= 1e-6;
        detail += "; attention rows " + std::to_string(pred.trace.size()) + "/" +
                  std::to_string(expected) + ", worst |sum-1| " + fmt("%.1e", worst) +
                  " (tol 1e-6)";
    }

    // Duplicate-batch invariance: the loss averages per utterance, so a
    // duplicated conversation and a re-weighted union must change nothing.
    {
        SynthSpec sp;
        sp.length = 5;
        sp.n_speakers = 2;
        sp.clue = SynthSpec::Clue::situation;
        sp.vocab_size = 20;
        sp.seed = 29;
        sp.n_classes = 4;
        sp.n_conversations = 2;
        std::vector<Conversation> convs = synth_generate(sp);

        ModelConfig mc;
        mc.d_u = 6;
        mc.n_classes = 4;
        mc.t_s = 1;
        mc.t_v = 1;
        mc.perception_layers = 1;
        mc.dropout = Real(0);
        mc.embedding_dim = 8;
        Model model = Model::create(mc, 31, make_synth_table(20, 8, 29));

        TapePause quiet;
        const double la = double(model.batch_loss({convs[0]}).value());
        const double lb = double(model.batch_loss({convs[1]}).value());
        const double ldup = double(model.batch_loss({convs[0], convs[0]}).value());
        const double lmix = double(model.batch_loss({convs[0], convs[1]}).value());
        const double na = double(convs[0].size()), nb = double(convs[1].size());
        const double mix_expected = (na * la + nb * lb) / (na + nb);
        const double dup_diff = std::fabs(ldup - la);
        const double mix_diff = std::fabs(lmix - mix_expected);
        pass = pass && dup_diff <= 1e-9 && mix_diff <= 1e-9;
        detail += "; duplicate-batch diff " + fmt("%.1e", dup_diff) + ", weighted-union diff " +
                  fmt("%.1e", mix_diff) + " (tol 1e-9)";
    }

    const double elapsed = now_s() - t0;
    report_line(6, "masking-invariants", pass, detail + "; " + fmt("%.1f", elapsed) + "s");
}

// ---------------------------------------------------------------------------
// Criterion 7: metrics against brute-force oracles; uniform-prediction loss.

struct OracleReport {
    double accuracy = 0;
    std::vector<double> precision, recall, f1;
    std::vector<std::size_t> support;
    double weighted_f1 = 0, macro_f1 = 0;
};

OracleReport oracle_classification(const std::vector<int>& preds, const std::vector<int>& golds,
                                   std::size_t n_classes) {
    OracleReport r;
    const std::size_t n = preds.size();
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (preds[i] == golds[i]) ++hits;
    r.accuracy = double(hits) / double(n);
    r.precision.resize(n_classes);
    r.recall.resize(n_classes);
    r.f1.resize(n_classes);
    r.support.resize(n_classes);
    double weighted = 0, macro = 0;
    for (std::size_t c = 0; c < n_classes; ++c) {
        std::size_t tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const bool p = preds[i] == int(c), g = golds[i] == int(c);
            if (p && g) ++tp;
            if (p && !g) ++fp;
            if (!p && g) ++fn;
        }
        r.support[c] = tp + fn;
        r.precision[c] = (tp + fp) ? double(tp) / double(tp + fp) : 0.0;
        r.recall[c] = (tp + fn) ? double(tp) / double(tp + fn) : 0.0;
        r.f1[c] = (r.precision[c] + r.recall[c]) > 0
                      ? 2.0 * r.precision[c] * r.recall[c] / (r.precision[c] + r.recall[c])
                      : 0.0;
        weighted += r.f1[c] * double(r.support[c]);
        macro += r.f1[c];
    }
    r.weighted_f1 = weighted / double(n);
    r.macro_f1 = macro / double(n_classes);
    return r;
}

void criterion_7() {
    const double t0 = now_s();
    Rng rng(909);
    bool cls_exact = true, reg_exact = true;

    for (int rep = 0; rep < 100; ++rep) {
        const std::size_t n_classes = 2 + rng.below(6);
        const std::size_t n = 1 + rng.below(60);
        std::vector<int> preds(n), golds(n);
        for (std::size_t i = 0; i < n; ++i) {
            preds[i] = int(rng.below(n_classes));
            golds[i] = int(rng.below(n_classes));
        }
        ClassificationReport got = classification_metrics(preds, golds, n_classes);
        OracleReport want = oracle_classification(preds, golds, n_classes);
        if (got.accuracy != want.accuracy || got.weighted_f1 != want.weighted_f1 ||
            got.macro_f1 != want.macro_f1)
            cls_exact = false;
        for (std::size_t c = 0; c < n_classes; ++c) {
            if (got.precision[c] != want.precision[c] || got.recall[c] != want.recall[c] ||
                got.f1[c] != want.f1[c] || got.support[c] != want.support[c])
                cls_exact = false;
        }
    }

    for (int rep = 0; rep < 100; ++rep) {
        const std::size_t k = 1 + rng.below(4);
        const std::size_t n = 1 + rng.below(40);
        std::vector<std::vector<double>> preds(n, std::vector<double>(k));
        std::vector<std::vector<double>> golds(n, std::vector<double>(k));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < k; ++j) {
                preds[i][j] = rng.uniform(-3.0, 3.0);
                golds[i][j] = rng.uniform(-3.0, 3.0);
            }
        RegressionReport got = regression_metrics(preds, golds);
        for (std::size_t j = 0; j < k; ++j) {
            double acc = 0;
            for (std::size_t i = 0; i < n; ++i) acc += std::fabs(preds[i][j] - golds[i][j]);
            if (got.mae[j] != acc / double(n)) reg_exact = false;
        }
    }

    // A zeroed classifier emits identical logits, hence uniform probabilities.
    double uniform_diff = 0;
    {
        SynthSpec sp;
        sp.length = 6;
        sp.n_speakers = 2;
        sp.clue = SynthSpec::Clue::situation;
        sp.vocab_size = 20;
        sp.seed = 31;
        sp.n_classes = 5;
        sp.n_conversations = 20;
        std::vector<Conversation> convs = synth_generate(sp);

        ModelConfig mc;
        mc.d_u = 6;
        mc.n_classes = 5;
        mc.t_s = 1;
        mc.t_v = 1;
        mc.perception_layers = 1;
        mc.dropout = Real(0);
        mc.embedding_dim = 8;
        Model model = Model::create(mc, 41, make_synth_table(20, 8, 31));
        std::fill(model.cls_w.values().begin(), model.cls_w.values().end(), Real(0));
        std::fill(model.cls_b.values().begin(), model.cls_b.values().end(), Real(0));
        const double loss = evaluate_model(model, convs).loss;
        uniform_diff = std::fabs(loss - std::log(5.0));
    }

    const double elapsed = now_s() - t0;
    const bool pass = cls_exact && reg_exact && uniform_diff <= 1e-9;
    report_line(7, "metric-oracles", pass,
                std::string("classification ") + (cls_exact ? "exact" : "MISMATCH") +
                    ", regression " + (reg_exact ? "exact" : "MISMATCH") +
                    " on 100 cases each; |uniform loss - ln 5| = " + fmt("%.1e", uniform_diff) +
                    " (tol 1e-9); " + fmt("%.1f", elapsed) + "s");
}

// ---------------------------------------------------------------------------
// Criterion 8: bitwise determinism and checkpoint persistence.

void criterion_8() {
    const double t0 = now_s();

    SynthSpec sp;
    sp.length = 6;
    sp.n_speakers = 2;
    sp.clue = SynthSpec::Clue::speaker;
    sp.vocab_size = 30;
    sp.seed = 5;
    sp.n_classes = 6;
    SynthSplit data = make_split(sp, 8, 2, 25);

    ModelConfig mc;
    mc.d_u = 16;
    mc.n_classes = 6;
    mc.t_s = 1;
    mc.t_v = 1;
    mc.perception_layers = 1;
    mc.dropout = Real(0.2);  // exercises the seeded dropout stream
    mc.embedding_dim = 25;

    TrainConfig tc;
    tc.learning_rate = 1e-3;
    tc.batch_size = 4;
    tc.max_epochs = 30;
    tc.patience = 29;
    tc.seed = 17;

    auto run_once = [&](std::string* history_csv, std::vector<std::vector<Real>>* probs,
                        OptimizerSnapshot* opt) {
        Model model = Model::create(mc, tc.seed, data.table);
        TrainResult res = train_model(model, data.train, data.val, tc);
        std::ostringstream hist;
        write_history_csv(hist, res.history, metric_names(mc));
        *history_csv = hist.str();
        *probs = model.forward(data.val[0]).probs;
        if (opt) *opt = res.optimizer;
        return model;
    };

    std::string hist_a, hist_b;
    std::vector<std::vector<Real>> probs_a, probs_b;
    OptimizerSnapshot opt_a;
    Model model_a = run_once(&hist_a, &probs_a, &opt_a);
    run_once(&hist_b, &probs_b, nullptr);

    const bool history_bitwise = !hist_a.empty() && hist_a == hist_b;
    const bool probs_bitwise = probs_a == probs_b;

    // Checkpoint round trip: restore into a differently seeded model and
    // compare every evaluation output.
    Checkpoint ck = make_checkpoint(model_a, "acceptance", &opt_a);
    std::stringstream buf;
    save_checkpoint(buf, ck);
    Checkpoint back = load_checkpoint(buf);
    Model restored = Model::create(mc, 999, data.table);
    apply_checkpoint(restored, back);

    EvalResult ea = evaluate_model(model_a, data.val);
    EvalResult eb = evaluate_model(restored, data.val);
    bool ckpt_bitwise = ea.loss == eb.loss && ea.preds == eb.preds &&
                        ea.report.accuracy == eb.report.accuracy &&
                        ea.report.weighted_f1 == eb.report.weighted_f1;
    for (std::size_t i = 0; i < data.val.size() && ckpt_bitwise; ++i) {
        if (model_a.forward(data.val[i]).probs != restored.forward(data.val[i]).probs)
            ckpt_bitwise = false;
    }
    const bool opt_roundtrip = back.has_optimizer && back.optimizer.step == opt_a.step;

    const double elapsed = now_s() - t0;
    const bool pass = history_bitwise && probs_bitwise && ckpt_bitwise && opt_roundtrip;
    report_line(8, "determinism", pass,
                std::string("same-seed history ") + (history_bitwise ? "bitwise" : "DIFFERS") +
                    ", predictions " + (probs_bitwise ? "bitwise" : "DIFFERS") +
                    ", checkpoint round trip " + (ckpt_bitwise ? "bitwise" : "DIFFERS") +
                    ", optimizer state " + (opt_roundtrip ? "preserved" : "LOST") + "; " +
                    fmt("%.1f", elapsed) + "s");
}

}  // namespace

int main(int argc, char** argv) {
    // With no arguments every criterion runs; numeric arguments select a
    // subset (e.g. `acceptance 1 6 7`).
    bool selected[9] = {};
    bool any_selected = false;
    for (int i = 1; i < argc; ++i) {
        const int n = std::atoi(argv[i]);
        if (n >= 1 && n <= 8) {
            selected[n] = true;
            any_selected = true;
        }
    }
    auto wanted = [&](int n) { return !any_selected || selected[n]; };

    std::printf("acceptance gate, %s build, crn %s\n",
                sizeof(Real) == 8 ? "64-bit" : "32-bit", version_string);
    std::fflush(stdout);
    const double t0 = now_s();
    int n_run = 0;

    auto guarded = [&](int num, const char* name, const std::function<void()>& fn) {
        if (!wanted(num)) return;
        ++n_run;
        try {
            fn();
        } catch (const std::exception& e) {
            report_line(num, name, false, std::string("exception: ") + e.what());
        }
    };

    SpeakerCorpusRuns runs;
    guarded(1, "gradient-suite", [] { criterion_1(); });
    guarded(2, "overfit", [] { criterion_2(); });
    guarded(3, "cognition-ablation", [&] { criterion_3(runs); });
    if (wanted(4) || wanted(5)) {
        if (runs.splits.size() != kSeeds.size()) {
            // Criteria 4 and 5 reuse the criterion-3 corpora and full-model
            // accuracies; rebuild them if criterion 3 was filtered out or
            // died partway through.
            runs.splits.clear();
            runs.full_acc.clear();
            for (std::uint64_t seed : kSeeds) {
                SynthSplit data = clue_split(SynthSpec::Clue::speaker, seed);
                AblationSetting s = ablation_setting(seed);
                runs.full_acc.push_back(train_variant(data, s, true, true, true, true));
                runs.splits.push_back(std::move(data));
            }
        }
        guarded(4, "level-specificity", [&] { criterion_4(runs); });
        guarded(5, "turn-sweep", [&] { criterion_5(runs); });
    }
    guarded(6, "masking-invariants", [] { criterion_6(); });
    guarded(7, "metric-oracles", [] { criterion_7(); });
    guarded(8, "determinism", [] { criterion_8(); });

    std::printf("%d/%d criteria passed, total %.0fs\n", n_run - g_failures, n_run, now_s() - t0);
    return g_failures == 0 ? 0 : 1;
}

// Command-line front end: train, eval, ablate, sweep, trace, synth.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "crn/crn.hpp"

namespace fs = std::filesystem;
using crn::ConfigMap;
using crn::RunConfig;

namespace {

struct CliArgs {
    std::string config_path, train_path, val_path, test_path, out_dir;
    std::string checkpoint_path, export_path, clue, conv_id, level;
    std::string ts_range, tv_range;
    std::vector<std::string> sets;
    std::uint64_t seed = 0;
    bool seed_given = false, ts_given = false, tv_given = false;
};

// Everything lands inside --out; reject paths that would escape it.
fs::path out_file(const std::string& out_dir, const std::string& name) {
    fs::path p(name);
    if (p.is_absolute()) throw crn::ConfigError("output file must be relative to --out: " + name);
    for (const auto& part : p) {
        if (part == "..") throw crn::ConfigError("output file may not escape --out: " + name);
    }
    return fs::path(out_dir) / p;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw crn::ConfigError("cannot open for writing: " + path.string());
    os << text;
    if (!os) throw crn::Error("failed writing " + path.string());
}

void write_manifest(const std::string& out_dir, const std::string& command, ConfigMap map) {
    std::ostringstream os;
    os << "# command: " << command << "\n";
    os << "# tool: crn " << crn::version_string << "\n";
    os << crn::serialize_config(map);
    write_text(out_file(out_dir, "manifest.txt"), os.str());
}

ConfigMap gather_config(const CliArgs& args, const std::string* base_text = nullptr) {
    ConfigMap map;
    if (base_text) {
        std::istringstream is(*base_text);
        map = crn::parse_config(is);
    }
    if (!args.config_path.empty()) {
        ConfigMap from_file = crn::load_config(args.config_path);
        for (auto& [k, v] : from_file) map[k] = v;
    }
    for (const auto& assignment : args.sets) crn::set_key(map, assignment);
    if (args.seed_given) map["seed"] = std::to_string(args.seed);
    if (!args.train_path.empty()) map["train_path"] = args.train_path;
    if (!args.val_path.empty()) map["val_path"] = args.val_path;
    if (!args.test_path.empty()) map["test_path"] = args.test_path;
    if (!args.checkpoint_path.empty()) map["checkpoint_path"] = args.checkpoint_path;
    if (!args.export_path.empty()) map["export_path"] = args.export_path;
    if (args.ts_given) map["sweep_ts"] = args.ts_range;
    if (args.tv_given) map["sweep_tv"] = args.tv_range;
    if (!args.conv_id.empty()) map["trace_conversation"] = args.conv_id;
    if (!args.level.empty()) map["trace_level"] = args.level;
    return map;
}

std::shared_ptr<const crn::EmbeddingTable> load_table(const RunConfig& run) {
    if (run.embeddings_path.empty()) return nullptr;
    if (run.model.embedding_dim == 0) {
        throw crn::ConfigError("embeddings given but embedding_dim is 0");
    }
    auto table = crn::load_embeddings(run.embeddings_path, run.model.embedding_dim);
    return std::make_shared<const crn::EmbeddingTable>(std::move(table));
}

crn::LabelSchema schema_of(const RunConfig& run) {
    return run.model.head == crn::ModelConfig::Head::categorical
               ? crn::LabelSchema::categorical(run.model.n_classes)
               : crn::LabelSchema::continuous(run.model.n_attributes);
}

// Train/val corpora: an explicit val path wins, otherwise a seeded split.
std::pair<std::vector<crn::Conversation>, std::vector<crn::Conversation>> load_splits(
    const RunConfig& run) {
    if (run.train_path.empty()) throw crn::ConfigError("no training corpus given (--train)");
    crn::LabelSchema schema = schema_of(run);
    auto train_set = crn::load_corpus(run.train_path, schema);
    if (!run.val_path.empty()) {
        return {std::move(train_set), crn::load_corpus(run.val_path, schema)};
    }
    crn::Rng rng = crn::Rng(run.train.seed).fork(3);
    return crn::split_train_val(std::move(train_set), rng, run.val_fraction);
}

void export_predictions(const fs::path& path, const crn::Model& model,
                        const std::vector<crn::Conversation>& convs) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw crn::ConfigError("cannot open for writing: " + path.string());
    bool categorical = model.config.head == crn::ModelConfig::Head::categorical;
    for (const auto& conv : convs) {
        crn::Prediction pred = model.forward(conv);
        for (std::size_t i = 0; i < conv.size(); ++i) {
            nlohmann::json j;
            j["conversation"] = conv.id;
            j["utterance"] = i;
            if (categorical) {
                j["gold"] = conv.utterances[i].label;
                j["pred"] = pred.labels[i];
                j["probs"] = std::vector<double>(pred.probs[i].begin(), pred.probs[i].end());
            } else {
                j["gold"] = conv.utterances[i].attrs;
                j["pred"] = std::vector<double>(pred.attrs[i].begin(), pred.attrs[i].end());
            }
            os << j.dump() << "\n";
        }
    }
}

int cmd_train(const CliArgs& args) {
    ConfigMap map = gather_config(args);
    RunConfig run = crn::resolve_run_config(map);
    auto [train_set, val_set] = load_splits(run);
    auto table = load_table(run);

    fs::create_directories(args.out_dir);
    write_manifest(args.out_dir, "train", crn::to_config_map(run));

    crn::Model model = crn::Model::create(run.model, run.train.seed, table);
    crn::TrainResult result = crn::train_model(model, train_set, val_set, run.train, &std::cout);

    std::ostringstream history;
    crn::write_history_csv(history, result.history, crn::metric_names(run.model));
    write_text(out_file(args.out_dir, "history.csv"), history.str());

    crn::Checkpoint ckpt = crn::make_checkpoint(
        model, crn::serialize_config(crn::to_config_map(run)), &result.optimizer);
    crn::save_checkpoint(out_file(args.out_dir, "checkpoint.crn").string(), ckpt);

    crn::EvalResult val = crn::evaluate_model(model, val_set);
    std::string report = run.model.head == crn::ModelConfig::Head::categorical
                             ? crn::format_report(val.report)
                             : crn::format_report(val.regression);
    write_text(out_file(args.out_dir, "report.txt"), report);
    std::cout << "best epoch " << result.best_epoch << ", val loss " << result.best_val_loss
              << "\n"
              << report;
    return 0;
}

// Rebuilds the model a checkpoint was trained with; flags and --set may
// override paths but the architecture comes from the snapshot.
std::pair<crn::Model, RunConfig> model_from_checkpoint(const CliArgs& args) {
    if (args.checkpoint_path.empty()) throw crn::ConfigError("no checkpoint given (--checkpoint)");
    crn::Checkpoint ckpt = crn::load_checkpoint(args.checkpoint_path);
    ConfigMap map = gather_config(args, &ckpt.config_text);
    RunConfig run = crn::resolve_run_config(map);
    run.checkpoint_path = args.checkpoint_path;
    crn::Model model = crn::Model::create(run.model, run.train.seed, load_table(run));
    crn::apply_checkpoint(model, ckpt);
    return {std::move(model), std::move(run)};
}

int cmd_eval(const CliArgs& args) {
    auto [model, run] = model_from_checkpoint(args);
    if (run.test_path.empty()) throw crn::ConfigError("no test corpus given (--test)");
    auto test_set = crn::load_corpus(run.test_path, schema_of(run));
    crn::EvalResult result = crn::evaluate_model(model, test_set);
    std::string report = run.model.head == crn::ModelConfig::Head::categorical
                             ? crn::format_report(result.report)
                             : crn::format_report(result.regression);

    if (!args.out_dir.empty()) {
        fs::create_directories(args.out_dir);
        write_manifest(args.out_dir, "eval", crn::to_config_map(run));
        write_text(out_file(args.out_dir, "report.txt"), report);
        if (!run.export_path.empty()) {
            export_predictions(out_file(args.out_dir, run.export_path), model, test_set);
        }
    } else if (!run.export_path.empty()) {
        throw crn::ConfigError("--export needs --out");
    }
    std::cout << report;
    return 0;
}

int cmd_ablate(const CliArgs& args) {
    ConfigMap map = gather_config(args);
    RunConfig run = crn::resolve_run_config(map);
    auto [train_set, val_set] = load_splits(run);
    auto table = load_table(run);

    fs::create_directories(args.out_dir);
    write_manifest(args.out_dir, "ablate", crn::to_config_map(run));

    auto rows = crn::run_ablation_grid(run.model, run.train, train_set, val_set, table,
                                       crn::canonical_ablation_rows(), &std::cout);
    std::string csv = crn::ablation_csv(rows);
    write_text(out_file(args.out_dir, "ablation.csv"), csv);
    std::cout << csv;
    return 0;
}

int cmd_sweep(const CliArgs& args) {
    ConfigMap map = gather_config(args);
    RunConfig run = crn::resolve_run_config(map);
    auto ts_values = crn::parse_turn_range(run.sweep_ts);
    auto tv_values = crn::parse_turn_range(run.sweep_tv);
    auto [train_set, val_set] = load_splits(run);
    auto table = load_table(run);

    fs::create_directories(args.out_dir);
    write_manifest(args.out_dir, "sweep", crn::to_config_map(run));

    auto cells = crn::run_turn_sweep(run.model, run.train, train_set, val_set, table, ts_values,
                                     tv_values, &std::cout);
    write_text(out_file(args.out_dir, "sweep.csv"),
               crn::sweep_matrix_csv(cells, ts_values, tv_values));
    write_text(out_file(args.out_dir, "sweep_cells.csv"), crn::sweep_cells_csv(cells));
    std::cout << crn::sweep_matrix_csv(cells, ts_values, tv_values);
    return 0;
}

int cmd_trace(const CliArgs& args) {
    auto [model, run] = model_from_checkpoint(args);
    if (run.test_path.empty()) throw crn::ConfigError("no corpus given (--test)");
    if (run.trace_conversation.empty()) throw crn::ConfigError("no conversation given (--conv)");
    if (!run.trace_level.empty() && run.trace_level != "s" && run.trace_level != "v") {
        throw crn::ConfigError("--level must be s or v");
    }
    auto corpus = crn::load_corpus(run.test_path, schema_of(run));
    const crn::Conversation* conv = nullptr;
    for (const auto& c : corpus) {
        if (c.id == run.trace_conversation) conv = &c;
    }
    if (!conv) {
        throw crn::ConfigError("conversation '" + run.trace_conversation + "' not in corpus");
    }

    fs::create_directories(args.out_dir);
    write_manifest(args.out_dir, "trace", crn::to_config_map(run));

    crn::Prediction pred = model.forward(*conv, true);
    std::ostringstream os;
    std::size_t written = 0;
    for (const auto& rec : pred.trace) {
        if (!run.trace_level.empty() && std::string(1, rec.level) != run.trace_level) continue;
        nlohmann::json j;
        j["conversation"] = rec.conversation_id;
        j["utterance"] = rec.utterance_index;
        j["level"] = std::string(1, rec.level);
        j["turn"] = rec.turn;
        j["weights"] = std::vector<double>(rec.weights.begin(), rec.weights.end());
        os << j.dump() << "\n";
        ++written;
    }
    write_text(out_file(args.out_dir, "trace.jsonl"), os.str());
    std::cout << "wrote " << written << " attention records for " << conv->id << "\n";
    return 0;
}

int cmd_synth(const CliArgs& args) {
    ConfigMap map = gather_config(args);
    if (!args.clue.empty()) map["synth_clue"] = args.clue;
    crn::SynthSpec spec = crn::resolve_synth_spec(map);
    std::size_t n_val = 50;
    if (auto it = map.find("synth_val"); it != map.end()) {
        n_val = crn::detail::config_size(it->first, it->second);
    }
    std::size_t dim = 300;
    if (auto it = map.find("embedding_dim"); it != map.end()) {
        dim = crn::detail::config_size(it->first, it->second);
    }
    std::size_t n_train = spec.n_conversations;
    spec.n_conversations = n_train + n_val;

    fs::create_directories(args.out_dir);
    ConfigMap manifest;
    manifest["synth_conversations"] = std::to_string(n_train);
    manifest["synth_val"] = std::to_string(n_val);
    manifest["synth_length"] = std::to_string(spec.length);
    manifest["synth_speakers"] = std::to_string(spec.n_speakers);
    manifest["synth_vocab"] = std::to_string(spec.vocab_size);
    manifest["synth_min_tokens"] = std::to_string(spec.min_tokens);
    manifest["synth_max_tokens"] = std::to_string(spec.max_tokens);
    manifest["synth_clue"] =
        spec.clue == crn::SynthSpec::Clue::situation ? "situation" : "speaker";
    manifest["n_classes"] = std::to_string(spec.n_classes);
    manifest["seed"] = std::to_string(spec.seed);
    manifest["embedding_dim"] = std::to_string(dim);
    write_manifest(args.out_dir, "synth", manifest);

    auto convs = crn::synth_generate(spec);
    crn::LabelSchema schema = crn::LabelSchema::categorical(spec.n_classes);
    std::vector<crn::Conversation> train_set(convs.begin(),
                                             convs.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<crn::Conversation> val_set(convs.begin() + static_cast<std::ptrdiff_t>(n_train),
                                           convs.end());
    crn::save_corpus(out_file(args.out_dir, "train.jsonl").string(), train_set, schema);
    crn::save_corpus(out_file(args.out_dir, "val.jsonl").string(), val_set, schema);
    {
        std::ofstream os(out_file(args.out_dir, "embeddings.txt"), std::ios::binary);
        if (!os) throw crn::ConfigError("cannot open embeddings for writing");
        crn::synth_embeddings(os, spec.vocab_size, dim, spec.seed);
    }
    std::cout << "wrote " << train_set.size() << " train and " << val_set.size()
              << " val conversations\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CliArgs args;
    CLI::App app{"DialogueCRN: perception and multi-turn cognition for conversation labeling"};
    app.require_subcommand(1);

    auto add_common = [&](CLI::App* sub, bool out_required) {
        sub->add_option("--set", args.sets, "override a config key, key=value")
            ->type_name("KEY=VALUE");
        sub->add_option("--seed", args.seed, "random seed")->each([&](const std::string&) {
            args.seed_given = true;
        });
        auto* out = sub->add_option("--out", args.out_dir, "output directory");
        if (out_required) out->required();
    };

    CLI::App* train = app.add_subcommand("train", "train a model and keep the best checkpoint");
    train->add_option("--config", args.config_path, "config file")->required();
    train->add_option("--train", args.train_path, "training corpus (jsonl)");
    train->add_option("--val", args.val_path, "validation corpus (jsonl)");
    add_common(train, true);

    CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on a corpus");
    eval->add_option("--config", args.config_path, "config overrides");
    eval->add_option("--checkpoint", args.checkpoint_path, "checkpoint file")->required();
    eval->add_option("--test", args.test_path, "test corpus (jsonl)");
    eval->add_option("--export", args.export_path, "per-utterance predictions file, inside --out");
    add_common(eval, false);

    CLI::App* ablate = app.add_subcommand("ablate", "train the canonical ablation grid");
    ablate->add_option("--config", args.config_path, "config file")->required();
    ablate->add_option("--train", args.train_path, "training corpus (jsonl)");
    ablate->add_option("--val", args.val_path, "validation corpus (jsonl)");
    add_common(ablate, true);

    CLI::App* sweep = app.add_subcommand("sweep", "train a grid over cognition turn counts");
    sweep->add_option("--config", args.config_path, "config file")->required();
    sweep->add_option("--train", args.train_path, "training corpus (jsonl)");
    sweep->add_option("--val", args.val_path, "validation corpus (jsonl)");
    sweep->add_option("--ts", args.ts_range, "situation turn range, N or lo..hi")
        ->each([&](const std::string&) { args.ts_given = true; });
    sweep->add_option("--tv", args.tv_range, "speaker turn range, N or lo..hi")
        ->each([&](const std::string&) { args.tv_given = true; });
    add_common(sweep, true);

    CLI::App* trace = app.add_subcommand("trace", "dump per-turn attention for one conversation");
    trace->add_option("--config", args.config_path, "config overrides");
    trace->add_option("--checkpoint", args.checkpoint_path, "checkpoint file")->required();
    trace->add_option("--test", args.test_path, "corpus holding the conversation (jsonl)");
    trace->add_option("--conv", args.conv_id, "conversation id")->required();
    trace->add_option("--level", args.level, "s or v (both when omitted)");
    add_common(trace, true);

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic clue corpus");
    synth->add_option("--config", args.config_path, "config file");
    synth->add_option("--clue", args.clue, "situation or speaker");
    add_common(synth, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        auto parsed = app.get_subcommands();
        std::cerr << "\n" << (parsed.empty() ? app.help() : parsed.front()->help());
        return 2;
    }

    try {
        if (train->parsed()) return cmd_train(args);
        if (eval->parsed()) return cmd_eval(args);
        if (ablate->parsed()) return cmd_ablate(args);
        if (sweep->parsed()) return cmd_sweep(args);
        if (trace->parsed()) return cmd_trace(args);
        if (synth->parsed()) return cmd_synth(args);
        std::cerr << app.help();
        return 2;
    } catch (const crn::NonFiniteLossError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const crn::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const crn::SchemaError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const crn::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const crn::CheckpointError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const crn::GenerationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

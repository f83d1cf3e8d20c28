#pragma once

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>

#include "crn/errors.hpp"
#include "crn/model.hpp"
#include "crn/synth.hpp"
#include "crn/train.hpp"

namespace crn {

// Flat key=value text; '#' starts a comment line. std::map keeps
// serialization sorted and therefore byte-stable.
using ConfigMap = std::map<std::string, std::string>;

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

}  // namespace detail

inline ConfigMap parse_config(std::istream& is) {
    ConfigMap map;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        std::size_t eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) + " has no '=': " + t);
        }
        std::string key = detail::trim(t.substr(0, eq));
        std::string value = detail::trim(t.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError("config line " + std::to_string(line_no) + " has an empty key");
        }
        if (map.count(key)) {
            throw ConfigError("duplicate config key '" + key + "' at line " +
                              std::to_string(line_no));
        }
        map[key] = value;
    }
    return map;
}

inline ConfigMap load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file: " + path);
    return parse_config(is);
}

inline std::string serialize_config(const ConfigMap& map) {
    std::ostringstream os;
    for (const auto& [k, v] : map) os << k << " = " << v << "\n";
    return os.str();
}

// Applies one "key=value" assignment (the --set form); overriding is allowed.
inline void set_key(ConfigMap& map, const std::string& assignment) {
    std::size_t eq = assignment.find('=');
    if (eq == std::string::npos) {
        throw ConfigError("--set expects key=value, got: " + assignment);
    }
    std::string key = detail::trim(assignment.substr(0, eq));
    if (key.empty()) throw ConfigError("--set has an empty key: " + assignment);
    map[key] = detail::trim(assignment.substr(eq + 1));
}

namespace detail {

inline std::size_t config_size(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        long long n = std::stoll(v, &pos);
        if (pos != v.size() || n < 0) throw std::invalid_argument(v);
        return static_cast<std::size_t>(n);
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "' needs a non-negative integer, got '" + v + "'");
    }
}

inline std::uint64_t config_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        unsigned long long n = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return n;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "' needs an unsigned integer, got '" + v + "'");
    }
}

inline double config_real(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "' needs a number, got '" + v + "'");
    }
}

inline bool config_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "on") return true;
    if (v == "false" || v == "0" || v == "off") return false;
    throw ConfigError("config key '" + key + "' needs true/false, got '" + v + "'");
}

inline std::string real_str(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

// Everything a run needs beyond the raw corpus bytes.
struct RunConfig {
    ModelConfig model;
    TrainConfig train;
    std::string embeddings_path;  // empty: no token encoder inputs expected
    double val_fraction = 0.2;    // used when no validation split is given
    std::string train_path, val_path, test_path;
    std::string checkpoint_path;
    std::string export_path;            // relative to the output directory
    std::string sweep_ts = "0..3";      // turn ranges, "lo..hi" or a single value
    std::string sweep_tv = "0..3";
    std::string trace_conversation;
    std::string trace_level;  // empty, "s" or "v"
};

// "lo..hi" inclusive, or one bare value.
inline std::vector<std::size_t> parse_turn_range(const std::string& text) {
    std::size_t dots = text.find("..");
    try {
        if (dots == std::string::npos) {
            return {detail::config_size("turn range", text)};
        }
        std::size_t lo = detail::config_size("turn range", text.substr(0, dots));
        std::size_t hi = detail::config_size("turn range", text.substr(dots + 2));
        if (lo > hi) throw ConfigError("turn range is reversed: " + text);
        std::vector<std::size_t> values;
        for (std::size_t v = lo; v <= hi; ++v) values.push_back(v);
        return values;
    } catch (const ConfigError&) {
        throw ConfigError("cannot parse turn range '" + text + "', expected N or lo..hi");
    }
}

inline RunConfig resolve_run_config(const ConfigMap& map) {
    RunConfig run;
    for (const auto& [key, value] : map) {
        if (key == "d_u") run.model.d_u = detail::config_size(key, value);
        else if (key == "n_classes") run.model.n_classes = detail::config_size(key, value);
        else if (key == "n_attributes") run.model.n_attributes = detail::config_size(key, value);
        else if (key == "head") {
            if (value == "categorical") run.model.head = ModelConfig::Head::categorical;
            else if (value == "regression") run.model.head = ModelConfig::Head::regression;
            else throw ConfigError("config key 'head' must be categorical or regression, got '" +
                                   value + "'");
        } else if (key == "t_s") run.model.t_s = detail::config_size(key, value);
        else if (key == "t_v") run.model.t_v = detail::config_size(key, value);
        else if (key == "perception_layers")
            run.model.perception_layers = detail::config_size(key, value);
        else if (key == "cog_s") run.model.cog_s = detail::config_bool(key, value);
        else if (key == "cog_v") run.model.cog_v = detail::config_bool(key, value);
        else if (key == "per_s") run.model.per_s = detail::config_bool(key, value);
        else if (key == "per_v") run.model.per_v = detail::config_bool(key, value);
        else if (key == "dropout") run.model.dropout = static_cast<Real>(detail::config_real(key, value));
        else if (key == "embedding_dim") run.model.embedding_dim = detail::config_size(key, value);
        else if (key == "learning_rate")
            run.train.learning_rate = static_cast<Real>(detail::config_real(key, value));
        else if (key == "weight_decay")
            run.train.weight_decay = static_cast<Real>(detail::config_real(key, value));
        else if (key == "batch_size") run.train.batch_size = detail::config_size(key, value);
        else if (key == "max_epochs") run.train.max_epochs = detail::config_size(key, value);
        else if (key == "patience") run.train.patience = detail::config_size(key, value);
        else if (key == "seed") run.train.seed = detail::config_u64(key, value);
        else if (key == "beta1") run.train.beta1 = static_cast<Real>(detail::config_real(key, value));
        else if (key == "beta2") run.train.beta2 = static_cast<Real>(detail::config_real(key, value));
        else if (key == "epsilon")
            run.train.epsilon = static_cast<Real>(detail::config_real(key, value));
        else if (key == "embeddings") run.embeddings_path = value;
        else if (key == "val_fraction") run.val_fraction = detail::config_real(key, value);
        else if (key == "train_path") run.train_path = value;
        else if (key == "val_path") run.val_path = value;
        else if (key == "test_path") run.test_path = value;
        else if (key == "checkpoint_path") run.checkpoint_path = value;
        else if (key == "export_path") run.export_path = value;
        else if (key == "sweep_ts") run.sweep_ts = value;
        else if (key == "sweep_tv") run.sweep_tv = value;
        else if (key == "trace_conversation") run.trace_conversation = value;
        else if (key == "trace_level") run.trace_level = value;
        else throw ConfigError("unknown config key '" + key + "'");
    }
    if (run.val_fraction < 0.0 || run.val_fraction >= 1.0) {
        throw ConfigError("val_fraction must lie in [0, 1)");
    }
    run.model.validate();
    run.train.validate();
    return run;
}

inline ConfigMap to_config_map(const RunConfig& run) {
    ConfigMap map;
    map["d_u"] = std::to_string(run.model.d_u);
    map["n_classes"] = std::to_string(run.model.n_classes);
    map["n_attributes"] = std::to_string(run.model.n_attributes);
    map["head"] = run.model.head == ModelConfig::Head::categorical ? "categorical" : "regression";
    map["t_s"] = std::to_string(run.model.t_s);
    map["t_v"] = std::to_string(run.model.t_v);
    map["perception_layers"] = std::to_string(run.model.perception_layers);
    map["cog_s"] = run.model.cog_s ? "true" : "false";
    map["cog_v"] = run.model.cog_v ? "true" : "false";
    map["per_s"] = run.model.per_s ? "true" : "false";
    map["per_v"] = run.model.per_v ? "true" : "false";
    map["dropout"] = detail::real_str(static_cast<double>(run.model.dropout));
    map["embedding_dim"] = std::to_string(run.model.embedding_dim);
    map["learning_rate"] = detail::real_str(static_cast<double>(run.train.learning_rate));
    map["weight_decay"] = detail::real_str(static_cast<double>(run.train.weight_decay));
    map["batch_size"] = std::to_string(run.train.batch_size);
    map["max_epochs"] = std::to_string(run.train.max_epochs);
    map["patience"] = std::to_string(run.train.patience);
    map["seed"] = std::to_string(run.train.seed);
    map["beta1"] = detail::real_str(static_cast<double>(run.train.beta1));
    map["beta2"] = detail::real_str(static_cast<double>(run.train.beta2));
    map["epsilon"] = detail::real_str(static_cast<double>(run.train.epsilon));
    map["val_fraction"] = detail::real_str(run.val_fraction);
    if (!run.embeddings_path.empty()) map["embeddings"] = run.embeddings_path;
    if (!run.train_path.empty()) map["train_path"] = run.train_path;
    if (!run.val_path.empty()) map["val_path"] = run.val_path;
    if (!run.test_path.empty()) map["test_path"] = run.test_path;
    if (!run.checkpoint_path.empty()) map["checkpoint_path"] = run.checkpoint_path;
    if (!run.export_path.empty()) map["export_path"] = run.export_path;
    if (run.sweep_ts != "0..3") map["sweep_ts"] = run.sweep_ts;
    if (run.sweep_tv != "0..3") map["sweep_tv"] = run.sweep_tv;
    if (!run.trace_conversation.empty()) map["trace_conversation"] = run.trace_conversation;
    if (!run.trace_level.empty()) map["trace_level"] = run.trace_level;
    return map;
}

// Synthetic-corpus knobs share the config file format; the generator reuses
// n_classes and embedding_dim from the model block.
inline SynthSpec resolve_synth_spec(const ConfigMap& map) {
    SynthSpec spec;
    spec.n_conversations = 200;
    for (const auto& [key, value] : map) {
        if (key == "synth_conversations") spec.n_conversations = detail::config_size(key, value);
        else if (key == "synth_length") spec.length = detail::config_size(key, value);
        else if (key == "synth_speakers") spec.n_speakers = detail::config_size(key, value);
        else if (key == "synth_vocab") spec.vocab_size = detail::config_size(key, value);
        else if (key == "synth_min_tokens") spec.min_tokens = detail::config_size(key, value);
        else if (key == "synth_max_tokens") spec.max_tokens = detail::config_size(key, value);
        else if (key == "synth_clue") {
            if (value == "situation") spec.clue = SynthSpec::Clue::situation;
            else if (value == "speaker") spec.clue = SynthSpec::Clue::speaker;
            else throw ConfigError("config key 'synth_clue' must be situation or speaker");
        } else if (key == "n_classes") spec.n_classes = detail::config_size(key, value);
        else if (key == "seed") spec.seed = detail::config_u64(key, value);
        // other keys belong to the run config and are ignored here
    }
    return spec;
}

}  // namespace crn

#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "crn/errors.hpp"
#include "crn/rng.hpp"
#include "crn/tensor.hpp"

namespace crn {

// Either a categorical emotion label in [0, classes) or a continuous
// attribute vector of fixed extent.
struct LabelSchema {
    enum class Kind { categorical, continuous };
    Kind kind = Kind::categorical;
    std::size_t classes = 0;
    std::size_t attributes = 0;

    static LabelSchema categorical(std::size_t n_classes) {
        LabelSchema s;
        s.kind = Kind::categorical;
        s.classes = n_classes;
        return s;
    }
    static LabelSchema continuous(std::size_t n_attributes) {
        LabelSchema s;
        s.kind = Kind::continuous;
        s.attributes = n_attributes;
        return s;
    }
    bool is_categorical() const { return kind == Kind::categorical; }
};

struct Utterance {
    std::string speaker;
    std::vector<std::string> tokens;
    std::vector<Real> feature;  // precomputed vector, mutually exclusive with tokens
    bool has_feature = false;
    int label = -1;
    std::vector<Real> attrs;
};

struct Conversation {
    std::string id;
    std::vector<std::string> roster;  // distinct speaker ids
    std::vector<Utterance> utterances;

    std::size_t size() const { return utterances.size(); }
};

// Ordered global indices per roster speaker. Disjoint, strictly increasing,
// and jointly covering [0, N).
struct SpeakerPartition {
    std::vector<std::string> speakers;
    std::vector<std::vector<std::size_t>> indices;
};

inline SpeakerPartition partition_by_speaker(const Conversation& conv) {
    SpeakerPartition part;
    part.speakers = conv.roster;
    part.indices.resize(conv.roster.size());
    for (std::size_t i = 0; i < conv.utterances.size(); ++i) {
        const std::string& who = conv.utterances[i].speaker;
        const auto it = std::find(part.speakers.begin(), part.speakers.end(), who);
        if (it == part.speakers.end()) {
            throw PartitionError("conversation '" + conv.id + "': speaker '" + who +
                                 "' missing from roster");
        }
        part.indices[static_cast<std::size_t>(it - part.speakers.begin())].push_back(i);
    }
    return part;
}

// ASCII lowercase for embedding lookup; corpus text is stored verbatim.
inline std::string normalize_token(const std::string& word) {
    std::string out = word;
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

class EmbeddingTable {
public:
    explicit EmbeddingTable(std::size_t dimension) : dimension_(dimension) {
        if (dimension_ == 0) throw DimensionError("embedding dimension must be positive");
    }

    std::size_t dimension() const { return dimension_; }
    std::size_t size() const { return table_.size(); }

    // First insertion of a word wins; later duplicates are ignored.
    void insert(const std::string& word, std::vector<Real> vec) {
        if (vec.size() != dimension_) {
            throw DimensionError("embedding for '" + word + "' has extent " +
                                 std::to_string(vec.size()) + ", table dimension is " +
                                 std::to_string(dimension_));
        }
        table_.emplace(word, std::move(vec));
    }

    const std::vector<Real>* find(const std::string& word) const {
        const auto it = table_.find(word);
        return it == table_.end() ? nullptr : &it->second;
    }

    // OOV words map to the zero vector.
    std::vector<Real> lookup(const std::string& word) const {
        if (const std::vector<Real>* v = find(normalize_token(word))) return *v;
        return std::vector<Real>(dimension_, Real(0));
    }

private:
    std::size_t dimension_;
    std::unordered_map<std::string, std::vector<Real>> table_;
};

namespace detail {

inline const nlohmann::json& require_field(const nlohmann::json& obj, const char* name,
                                           std::size_t line) {
    const auto it = obj.find(name);
    if (it == obj.end()) {
        throw SchemaError("missing field '" + std::string(name) + "' (line " +
                          std::to_string(line) + ")");
    }
    return *it;
}

inline std::vector<Real> number_array(const nlohmann::json& arr, const char* name,
                                      std::size_t line) {
    if (!arr.is_array()) {
        throw SchemaError("field '" + std::string(name) + "' must be an array (line " +
                          std::to_string(line) + ")");
    }
    std::vector<Real> out;
    out.reserve(arr.size());
    for (const auto& v : arr) {
        if (!v.is_number()) {
            throw SchemaError("field '" + std::string(name) + "' must hold numbers (line " +
                              std::to_string(line) + ")");
        }
        out.push_back(static_cast<Real>(v.get<double>()));
    }
    return out;
}

inline Utterance parse_utterance(const nlohmann::json& rec, const LabelSchema& schema,
                                 std::size_t line) {
    if (!rec.is_object()) throw SchemaError("utterance must be an object (line " +
                                            std::to_string(line) + ")");
    Utterance utt;
    const nlohmann::json& speaker = require_field(rec, "speaker", line);
    if (!speaker.is_string()) {
        throw SchemaError("field 'speaker' must be a string (line " + std::to_string(line) + ")");
    }
    utt.speaker = speaker.get<std::string>();

    const bool has_tokens = rec.contains("tokens");
    const bool has_feature = rec.contains("feature");
    if (has_tokens == has_feature) {
        throw SchemaError("utterance needs exactly one of 'tokens' or 'feature' (line " +
                          std::to_string(line) + ")");
    }
    if (has_tokens) {
        const nlohmann::json& toks = rec["tokens"];
        if (!toks.is_array()) {
            throw SchemaError("field 'tokens' must be an array (line " + std::to_string(line) +
                              ")");
        }
        for (const auto& t : toks) {
            if (!t.is_string()) {
                throw SchemaError("field 'tokens' must hold strings (line " +
                                  std::to_string(line) + ")");
            }
            utt.tokens.push_back(t.get<std::string>());
        }
    } else {
        utt.feature = number_array(rec["feature"], "feature", line);
        utt.has_feature = true;
    }

    if (schema.is_categorical()) {
        const nlohmann::json& label = require_field(rec, "label", line);
        if (!label.is_number_integer()) {
            throw SchemaError("field 'label' must be an integer (line " + std::to_string(line) +
                              ")");
        }
        const long long v = label.get<long long>();
        if (v < 0 || static_cast<std::size_t>(v) >= schema.classes) {
            throw SchemaError("label " + std::to_string(v) + " out of range [0, " +
                              std::to_string(schema.classes) + ") (line " + std::to_string(line) +
                              ")");
        }
        utt.label = static_cast<int>(v);
    } else {
        utt.attrs = number_array(require_field(rec, "attrs", line), "attrs", line);
        if (utt.attrs.size() != schema.attributes) {
            throw SchemaError("field 'attrs' has extent " + std::to_string(utt.attrs.size()) +
                              ", schema wants " + std::to_string(schema.attributes) + " (line " +
                              std::to_string(line) + ")");
        }
    }
    return utt;
}

}  // namespace detail

inline Conversation parse_conversation(const std::string& text, const LabelSchema& schema,
                                       std::size_t line) {
    nlohmann::json rec;
    try {
        rec = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("malformed record: ") + e.what(), line);
    }
    if (!rec.is_object()) throw SchemaError("record must be an object (line " +
                                            std::to_string(line) + ")");

    Conversation conv;
    const nlohmann::json& id = detail::require_field(rec, "id", line);
    if (!id.is_string()) {
        throw SchemaError("field 'id' must be a string (line " + std::to_string(line) + ")");
    }
    conv.id = id.get<std::string>();

    const nlohmann::json& speakers = detail::require_field(rec, "speakers", line);
    if (!speakers.is_array() || speakers.empty()) {
        throw SchemaError("field 'speakers' must be a non-empty array (line " +
                          std::to_string(line) + ")");
    }
    for (const auto& s : speakers) {
        if (!s.is_string()) {
            throw SchemaError("field 'speakers' must hold strings (line " + std::to_string(line) +
                              ")");
        }
        conv.roster.push_back(s.get<std::string>());
    }

    const nlohmann::json& utts = detail::require_field(rec, "utterances", line);
    if (!utts.is_array() || utts.empty()) {
        throw SchemaError("field 'utterances' must be a non-empty array (line " +
                          std::to_string(line) + ")");
    }
    for (const auto& u : utts) conv.utterances.push_back(detail::parse_utterance(u, schema, line));

    for (const Utterance& u : conv.utterances) {
        if (std::find(conv.roster.begin(), conv.roster.end(), u.speaker) == conv.roster.end()) {
            throw SchemaError("speaker '" + u.speaker + "' not in roster (line " +
                              std::to_string(line) + ")");
        }
    }
    return conv;
}

inline std::vector<Conversation> load_corpus(std::istream& is, const LabelSchema& schema) {
    std::vector<Conversation> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        out.push_back(parse_conversation(line, schema, line_no));
    }
    return out;
}

inline std::vector<Conversation> load_corpus(const std::string& path, const LabelSchema& schema) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open corpus file: " + path);
    return load_corpus(in, schema);
}

inline nlohmann::json conversation_to_json(const Conversation& conv, const LabelSchema& schema) {
    nlohmann::json rec;
    rec["id"] = conv.id;
    rec["speakers"] = conv.roster;
    nlohmann::json utts = nlohmann::json::array();
    for (const Utterance& u : conv.utterances) {
        nlohmann::json j;
        j["speaker"] = u.speaker;
        if (u.has_feature) {
            j["feature"] = u.feature;
        } else {
            j["tokens"] = u.tokens;
        }
        if (schema.is_categorical()) {
            j["label"] = u.label;
        } else {
            j["attrs"] = u.attrs;
        }
        utts.push_back(std::move(j));
    }
    rec["utterances"] = std::move(utts);
    return rec;
}

inline void save_corpus(std::ostream& os, const std::vector<Conversation>& convs,
                        const LabelSchema& schema) {
    for (const Conversation& c : convs) os << conversation_to_json(c, schema).dump() << "\n";
}

inline void save_corpus(const std::string& path, const std::vector<Conversation>& convs,
                        const LabelSchema& schema) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write corpus file: " + path);
    save_corpus(out, convs, schema);
}

inline EmbeddingTable load_embeddings(std::istream& is, std::size_t dimension) {
    EmbeddingTable table(dimension);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream row(line);
        std::string word;
        row >> word;
        std::vector<Real> vec;
        vec.reserve(dimension);
        double v;
        while (row >> v) vec.push_back(static_cast<Real>(v));
        if (!row.eof()) throw ParseError("non-numeric embedding value for '" + word + "'", line_no);
        if (vec.size() != dimension) {
            throw ParseError("embedding for '" + word + "' has " + std::to_string(vec.size()) +
                                 " values, expected " + std::to_string(dimension),
                             line_no);
        }
        table.insert(word, std::move(vec));
    }
    return table;
}

inline EmbeddingTable load_embeddings(const std::string& path, std::size_t dimension) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open embedding file: " + path);
    return load_embeddings(in, dimension);
}

inline void save_embeddings(std::ostream& os, const std::vector<std::string>& words,
                            const std::vector<std::vector<Real>>& vectors) {
    os << std::setprecision(17);
    for (std::size_t i = 0; i < words.size(); ++i) {
        os << words[i];
        for (Real v : vectors[i]) os << " " << static_cast<double>(v);
        os << "\n";
    }
}

// Seeded hold-out split over whole conversations.
inline std::pair<std::vector<Conversation>, std::vector<Conversation>> split_train_val(
    std::vector<Conversation> convs, Rng& rng, double val_fraction = 0.2) {
    rng.shuffle(convs);
    std::size_t n_val = static_cast<std::size_t>(static_cast<double>(convs.size()) * val_fraction);
    if (n_val == 0 && convs.size() >= 2 && val_fraction > 0) n_val = 1;
    std::vector<Conversation> val(convs.end() - static_cast<std::ptrdiff_t>(n_val), convs.end());
    convs.resize(convs.size() - n_val);
    return {std::move(convs), std::move(val)};
}

}  // namespace crn

#include "seqforge/data.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

#include "seqforge/errors.hpp"

namespace seqforge {

using nlohmann::ordered_json;

int label_index(const std::string& name) {
    for (int i = 0; i < kNumClasses; ++i)
        if (name == kClassNames[i]) return i;
    throw DataError("unknown label '" + name + "'");
}

std::size_t FeatureSchema::encoded_width() const {
    std::size_t w = 0;
    for (const auto& f : features) w += f.encoded_width();
    return w;
}

std::vector<std::string> FeatureSchema::column_names() const {
    std::vector<std::string> names;
    for (const auto& f : features) {
        if (f.kind == FeatureKind::Categorical) {
            for (const auto& c : f.categories) names.push_back(f.name + "=" + c);
        } else {
            names.push_back(f.name);
        }
    }
    return names;
}

std::vector<bool> FeatureSchema::numeric_columns() const {
    std::vector<bool> out;
    for (const auto& f : features)
        for (std::size_t i = 0; i < f.encoded_width(); ++i)
            out.push_back(f.kind == FeatureKind::Numeric);
    return out;
}

namespace {

FeatureKind kind_from_string(const std::string& s) {
    if (s == "numeric") return FeatureKind::Numeric;
    if (s == "boolean") return FeatureKind::Boolean;
    if (s == "categorical") return FeatureKind::Categorical;
    throw DataError("unknown feature kind '" + s + "'");
}

const char* kind_to_string(FeatureKind k) {
    switch (k) {
        case FeatureKind::Numeric: return "numeric";
        case FeatureKind::Boolean: return "boolean";
        case FeatureKind::Categorical: return "categorical";
    }
    return "numeric";
}

}  // namespace

FeatureSchema FeatureSchema::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open schema file: " + path);
    ordered_json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw DataError("malformed schema file " + path + ": " + e.what());
    }
    FeatureSchema schema;
    if (!j.contains("features") || !j["features"].is_array())
        throw DataError("schema file missing 'features' array: " + path);
    for (const auto& jf : j["features"]) {
        FeatureSpec f;
        f.name = jf.at("name").get<std::string>();
        f.kind = kind_from_string(jf.at("kind").get<std::string>());
        if (f.kind == FeatureKind::Categorical) {
            if (!jf.contains("categories"))
                throw DataError("categorical feature '" + f.name + "' missing categories");
            for (const auto& c : jf["categories"]) f.categories.push_back(c.get<std::string>());
            if (f.categories.empty())
                throw DataError("categorical feature '" + f.name + "' has no categories");
        }
        schema.features.push_back(std::move(f));
    }
    return schema;
}

void FeatureSchema::save(const std::string& path) const {
    ordered_json j;
    j["features"] = ordered_json::array();
    for (const auto& f : features) {
        ordered_json jf;
        jf["name"] = f.name;
        jf["kind"] = kind_to_string(f.kind);
        if (f.kind == FeatureKind::Categorical) jf["categories"] = f.categories;
        j["features"].push_back(std::move(jf));
    }
    std::ofstream out(path);
    if (!out) throw DataError("cannot write schema file: " + path);
    out << j.dump(2) << "\n";
}

namespace {

std::vector<double> encode_game(const ordered_json& game, const FeatureSchema& schema,
                                std::size_t line_no) {
    std::vector<double> row;
    row.reserve(schema.encoded_width());
    for (const auto& f : schema.features) {
        if (!game.contains(f.name))
            throw DataError("line " + std::to_string(line_no) + ": missing feature '" + f.name +
                            "'");
        const auto& v = game.at(f.name);
        switch (f.kind) {
            case FeatureKind::Numeric: {
                if (!v.is_number())
                    throw DataError("line " + std::to_string(line_no) + ": feature '" + f.name +
                                    "' must be numeric");
                const double x = v.get<double>();
                if (!std::isfinite(x))
                    throw DataError("line " + std::to_string(line_no) + ": feature '" + f.name +
                                    "' is not finite");
                row.push_back(x);
                break;
            }
            case FeatureKind::Boolean: {
                if (v.is_boolean())
                    row.push_back(v.get<bool>() ? 1.0 : 0.0);
                else if (v.is_number())
                    row.push_back(v.get<double>() != 0.0 ? 1.0 : 0.0);
                else
                    throw DataError("line " + std::to_string(line_no) + ": feature '" + f.name +
                                    "' must be boolean");
                break;
            }
            case FeatureKind::Categorical: {
                if (!v.is_string())
                    throw DataError("line " + std::to_string(line_no) + ": feature '" + f.name +
                                    "' must be a category string");
                const std::string cat = v.get<std::string>();
                auto it = std::find(f.categories.begin(), f.categories.end(), cat);
                if (it == f.categories.end())
                    throw DataError("line " + std::to_string(line_no) + ": unknown category '" +
                                    cat + "' for feature '" + f.name + "'");
                for (const auto& c : f.categories) row.push_back(c == cat ? 1.0 : 0.0);
                break;
            }
        }
    }
    // Reject extra keys so typos surface as errors rather than silent drops.
    for (auto it = game.begin(); it != game.end(); ++it) {
        bool known = false;
        for (const auto& f : schema.features)
            if (f.name == it.key()) {
                known = true;
                break;
            }
        if (!known)
            throw DataError("line " + std::to_string(line_no) + ": unknown feature '" + it.key() +
                            "'");
    }
    return row;
}

}  // namespace

Dataset load_dataset(const std::string& path, const FeatureSchema& schema) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset file: " + path);
    Dataset dataset;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        ordered_json j;
        try {
            j = ordered_json::parse(line);
        } catch (const std::exception& e) {
            throw DataError("line " + std::to_string(line_no) + ": malformed JSON: " + e.what());
        }
        PlayerSample sample;
        if (!j.contains("player_id") || !j["player_id"].is_string())
            throw DataError("line " + std::to_string(line_no) + ": missing 'player_id'");
        sample.player_id = j["player_id"].get<std::string>();
        if (!j.contains("label") || !j["label"].is_string())
            throw DataError("line " + std::to_string(line_no) + ": missing 'label'");
        try {
            sample.label = label_index(j["label"].get<std::string>());
        } catch (const DataError& e) {
            throw DataError("line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!j.contains("sequences") || !j["sequences"].is_array())
            throw DataError("line " + std::to_string(line_no) + ": missing 'sequences'");
        for (const auto& jseq : j["sequences"]) {
            if (!jseq.is_array())
                throw DataError("line " + std::to_string(line_no) + ": sequence must be an array");
            GameSequence seq;
            for (const auto& jg : jseq) {
                GameRecord rec;
                rec.features = encode_game(jg, schema, line_no);
                seq.games.push_back(std::move(rec));
            }
            sample.sequences.push_back(std::move(seq));
        }
        if (j.contains("archetypes")) {
            for (const auto& a : j["archetypes"]) sample.archetypes.push_back(a.get<int>());
            if (sample.archetypes.size() != sample.sequences.size())
                throw DataError("line " + std::to_string(line_no) +
                                ": archetypes length differs from sequence count");
        }
        dataset.push_back(std::move(sample));
    }
    return dataset;
}

void save_dataset(const std::string& path, const Dataset& dataset, const FeatureSchema& schema) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write dataset file: " + path);
    for (const auto& sample : dataset) {
        ordered_json j;
        j["player_id"] = sample.player_id;
        j["label"] = kClassNames[sample.label];
        ordered_json seqs = ordered_json::array();
        for (const auto& seq : sample.sequences) {
            ordered_json jseq = ordered_json::array();
            for (const auto& game : seq.games) {
                ordered_json jg;
                std::size_t col = 0;
                for (const auto& f : schema.features) {
                    switch (f.kind) {
                        case FeatureKind::Numeric:
                            jg[f.name] = game.features[col];
                            col += 1;
                            break;
                        case FeatureKind::Boolean:
                            jg[f.name] = game.features[col] != 0.0;
                            col += 1;
                            break;
                        case FeatureKind::Categorical: {
                            std::size_t which = 0;
                            for (std::size_t i = 0; i < f.categories.size(); ++i)
                                if (game.features[col + i] != 0.0) which = i;
                            jg[f.name] = f.categories[which];
                            col += f.categories.size();
                            break;
                        }
                    }
                }
                jseq.push_back(std::move(jg));
            }
            seqs.push_back(std::move(jseq));
        }
        j["sequences"] = std::move(seqs);
        if (!sample.archetypes.empty()) j["archetypes"] = sample.archetypes;
        out << j.dump() << "\n";
    }
}

std::size_t compute_pad_length(const Dataset& dataset) {
    std::vector<std::size_t> lengths;
    for (const auto& s : dataset)
        for (const auto& seq : s.sequences) lengths.push_back(seq.raw_length());
    if (lengths.empty()) throw DataError("compute_pad_length: dataset has no sequences");
    bool any = false;
    for (auto l : lengths) any = any || l > 0;
    if (!any) throw DataError("compute_pad_length: all sequences are empty");
    std::sort(lengths.begin(), lengths.end());
    // nearest-rank: smallest value with >= 95% of lengths at or below it
    const std::size_t rank = static_cast<std::size_t>(
        std::ceil(0.95 * static_cast<double>(lengths.size())));
    return lengths[rank - 1];
}

void pad_truncate(GameSequence& sequence, std::size_t pad_length, std::size_t width) {
    sequence.padded = Tensor({pad_length, width});
    const std::size_t raw = sequence.games.size();
    const std::size_t keep = std::min(raw, pad_length);
    const std::size_t start = raw - keep;  // most recent `keep` games
    for (std::size_t t = 0; t < keep; ++t)
        for (std::size_t f = 0; f < width; ++f)
            sequence.padded.at(t, f) = sequence.games[start + t].features[f];
    sequence.valid_length = keep;
}

void enforce_sequence_count(Dataset& dataset, std::size_t seq_count, std::size_t pad_length,
                            std::size_t width) {
    for (auto& sample : dataset) {
        if (sample.sequences.size() > seq_count) {
            const std::size_t drop = sample.sequences.size() - seq_count;
            sample.sequences.erase(sample.sequences.begin(),
                                   sample.sequences.begin() + static_cast<long>(drop));
            if (!sample.archetypes.empty())
                sample.archetypes.erase(sample.archetypes.begin(),
                                        sample.archetypes.begin() + static_cast<long>(drop));
        }
        while (sample.sequences.size() < seq_count) {
            GameSequence pad;
            pad.padded = Tensor({pad_length, width});
            pad.valid_length = 0;
            sample.sequences.push_back(std::move(pad));
            if (!sample.archetypes.empty()) sample.archetypes.push_back(-1);
        }
    }
}

NormalizationStats compute_stats(const Dataset& dataset, const FeatureSchema& schema) {
    const std::size_t width = schema.encoded_width();
    NormalizationStats stats;
    stats.mean.assign(width, 0.0);
    stats.stddev.assign(width, 0.0);
    const std::vector<bool> numeric = schema.numeric_columns();
    stats.apply.assign(numeric.begin(), numeric.end());

    std::size_t n = 0;
    for (const auto& s : dataset)
        for (const auto& seq : s.sequences)
            for (const auto& g : seq.games) {
                ++n;
                for (std::size_t c = 0; c < width; ++c) stats.mean[c] += g.features[c];
            }
    if (n == 0) return stats;
    for (auto& m : stats.mean) m /= static_cast<double>(n);
    for (const auto& s : dataset)
        for (const auto& seq : s.sequences)
            for (const auto& g : seq.games)
                for (std::size_t c = 0; c < width; ++c) {
                    const double d = g.features[c] - stats.mean[c];
                    stats.stddev[c] += d * d;
                }
    for (std::size_t c = 0; c < width; ++c) {
        stats.stddev[c] = std::sqrt(stats.stddev[c] / static_cast<double>(n));
        if (stats.stddev[c] < 1e-12) stats.apply[c] = false;  // constant feature passes through
    }
    return stats;
}

void normalize(Dataset& dataset, const NormalizationStats& stats) {
    for (auto& sample : dataset)
        for (auto& seq : sample.sequences) {
            const std::size_t width = seq.padded.rank() == 2 ? seq.padded.dim(1) : 0;
            for (std::size_t t = 0; t < seq.valid_length; ++t)
                for (std::size_t c = 0; c < width; ++c)
                    if (stats.apply[c])
                        seq.padded.at(t, c) = (seq.padded.at(t, c) - stats.mean[c]) / stats.stddev[c];
        }
}

}  // namespace seqforge

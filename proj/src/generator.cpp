#include "seqforge/generator.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "seqforge/errors.hpp"
#include "seqforge/rng.hpp"

namespace seqforge {

using nlohmann::ordered_json;

void GeneratorSpec::validate() const {
    if (n_archetypes == 0) throw ConfigError("generator spec: n_archetypes must be positive");
    if (sequences_per_player == 0) throw ConfigError("generator spec: S must be positive");
    if (feature_names.empty()) throw ConfigError("generator spec: no features");
    if (archetypes.size() != n_archetypes)
        throw ConfigError("generator spec: archetype count mismatch");
    for (std::size_t a = 0; a < archetypes.size(); ++a) {
        const auto& ar = archetypes[a];
        if (ar.mean.size() != feature_names.size() || ar.stddev.size() != feature_names.size())
            throw ConfigError("generator spec: archetype " + std::to_string(a) +
                              " feature dimensions mismatch");
        for (double s : ar.stddev)
            if (s < 0.0)
                throw ConfigError("generator spec: archetype " + std::to_string(a) +
                                  " has negative stddev");
        if (ar.length_min < 1 || ar.length_max < ar.length_min)
            throw ConfigError("generator spec: archetype " + std::to_string(a) +
                              " has invalid length range");
    }
    if (class_transitions.size() != static_cast<std::size_t>(kNumClasses))
        throw ConfigError("generator spec: expected one transition matrix per class");
    for (int c = 0; c < kNumClasses; ++c) {
        const Tensor& m = class_transitions[c];
        if (m.rank() != 2 || m.dim(0) != n_archetypes || m.dim(1) != n_archetypes)
            throw ConfigError(std::string("generator spec: transition matrix for ") +
                              kClassNames[c] + " has wrong shape");
        for (std::size_t r = 0; r < n_archetypes; ++r) {
            double sum = 0.0;
            for (std::size_t j = 0; j < n_archetypes; ++j) {
                const double p = m.at(r, j);
                if (p < 0.0)
                    throw ConfigError(std::string("generator spec: negative entry in row ") +
                                      std::to_string(r) + " of " + kClassNames[c]);
                sum += p;
            }
            if (std::abs(sum - 1.0) > 1e-9)
                throw ConfigError(std::string("generator spec: row ") + std::to_string(r) +
                                  " of " + kClassNames[c] + " transition matrix sums to " +
                                  std::to_string(sum) + ", expected 1");
        }
    }
}

FeatureSchema GeneratorSpec::schema() const {
    FeatureSchema s;
    for (const auto& name : feature_names)
        s.features.push_back(FeatureSpec{name, FeatureKind::Numeric, {}});
    return s;
}

GeneratorSpec GeneratorSpec::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open generator spec: " + path);
    ordered_json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigError("malformed generator spec " + path + ": " + e.what());
    }
    GeneratorSpec spec;
    try {
        spec.n_archetypes = j.at("n_archetypes").get<std::size_t>();
        spec.sequences_per_player = j.at("S").get<std::size_t>();
        spec.seed = j.at("seed").get<std::uint64_t>();
        for (const auto& f : j.at("features")) spec.feature_names.push_back(f.get<std::string>());
        for (const auto& ja : j.at("archetypes")) {
            ArchetypeSpec a;
            for (const auto& v : ja.at("mean")) a.mean.push_back(v.get<double>());
            for (const auto& v : ja.at("std")) a.stddev.push_back(v.get<double>());
            a.length_min = ja.at("length_min").get<std::size_t>();
            a.length_max = ja.at("length_max").get<std::size_t>();
            spec.archetypes.push_back(std::move(a));
        }
        const auto& jt = j.at("class_transitions");
        for (int c = 0; c < kNumClasses; ++c) {
            const auto& rows = jt.at(kClassNames[c]);
            const std::size_t n = rows.size();
            Tensor m({n, n});
            for (std::size_t r = 0; r < n; ++r) {
                if (rows[r].size() != n)
                    throw ConfigError("generator spec: ragged transition matrix");
                for (std::size_t cc = 0; cc < n; ++cc) m.at(r, cc) = rows[r][cc].get<double>();
            }
            spec.class_transitions.push_back(std::move(m));
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError("generator spec " + path + ": " + e.what());
    }
    spec.validate();
    return spec;
}

void GeneratorSpec::save(const std::string& path) const {
    ordered_json j;
    j["n_archetypes"] = n_archetypes;
    j["S"] = sequences_per_player;
    j["seed"] = seed;
    j["features"] = feature_names;
    j["archetypes"] = ordered_json::array();
    for (const auto& a : archetypes) {
        ordered_json ja;
        ja["mean"] = a.mean;
        ja["std"] = a.stddev;
        ja["length_min"] = a.length_min;
        ja["length_max"] = a.length_max;
        j["archetypes"].push_back(std::move(ja));
    }
    ordered_json jt;
    for (int c = 0; c < kNumClasses; ++c) {
        const Tensor& m = class_transitions[c];
        ordered_json rows = ordered_json::array();
        for (std::size_t r = 0; r < m.dim(0); ++r) {
            ordered_json row = ordered_json::array();
            for (std::size_t cc = 0; cc < m.dim(1); ++cc) row.push_back(m.at(r, cc));
            rows.push_back(std::move(row));
        }
        jt[kClassNames[c]] = std::move(rows);
    }
    j["class_transitions"] = std::move(jt);
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write generator spec: " + path);
    out << j.dump(2) << "\n";
}

Dataset generate_synthetic(const GeneratorSpec& spec, std::size_t n_per_class) {
    spec.validate();
    const std::size_t width = spec.feature_names.size();
    Dataset dataset;
    dataset.reserve(n_per_class * kNumClasses);
    for (int c = 0; c < kNumClasses; ++c) {
        for (std::size_t p = 0; p < n_per_class; ++p) {
            // Independent per-player stream: generation order does not matter.
            Rng rng(Rng::mix(spec.seed, "player", static_cast<std::uint64_t>(c) * 1000003ULL + p));
            PlayerSample sample;
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%s_%04zu", kClassNames[c], p);
            for (char& ch : buf)
                if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
            sample.player_id = buf;
            sample.label = c;

            std::size_t arche = rng.uniform_index(spec.n_archetypes);
            const Tensor& trans = spec.class_transitions[c];
            for (std::size_t s = 0; s < spec.sequences_per_player; ++s) {
                if (s > 0) {
                    std::vector<double> row(spec.n_archetypes);
                    for (std::size_t j = 0; j < spec.n_archetypes; ++j) row[j] = trans.at(arche, j);
                    arche = rng.weighted_index(row);
                }
                const ArchetypeSpec& a = spec.archetypes[arche];
                const std::size_t len =
                    a.length_min + rng.uniform_index(a.length_max - a.length_min + 1);
                GameSequence seq;
                seq.games.reserve(len);
                for (std::size_t g = 0; g < len; ++g) {
                    GameRecord rec;
                    rec.features.resize(width);
                    for (std::size_t f = 0; f < width; ++f)
                        rec.features[f] = rng.normal(a.mean[f], a.stddev[f]);
                    seq.games.push_back(std::move(rec));
                }
                sample.sequences.push_back(std::move(seq));
                sample.archetypes.push_back(static_cast<int>(arche));
            }
            dataset.push_back(std::move(sample));
        }
    }
    return dataset;
}

}  // namespace seqforge

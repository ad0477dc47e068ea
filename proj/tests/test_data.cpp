#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "seqforge/data.hpp"
#include "seqforge/errors.hpp"
#include "seqforge/generator.hpp"
#include "seqforge/rng.hpp"

using namespace seqforge;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
    fs::path p = fs::temp_directory_path() / ("seqforge_" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p);
    out << content;
}

FeatureSchema mixed_schema() {
    FeatureSchema s;
    s.features.push_back({"stake", FeatureKind::Numeric, {}});
    s.features.push_back({"won", FeatureKind::Boolean, {}});
    s.features.push_back({"format", FeatureKind::Categorical, {"points", "pool", "deals"}});
    return s;
}

GeneratorSpec simple_spec(std::size_t n_archetypes, std::size_t S, std::uint64_t seed) {
    GeneratorSpec spec;
    spec.n_archetypes = n_archetypes;
    spec.sequences_per_player = S;
    spec.seed = seed;
    spec.feature_names = {"f0", "f1"};
    for (std::size_t a = 0; a < n_archetypes; ++a) {
        ArchetypeSpec ar;
        ar.mean = {static_cast<double>(a) * 10.0, 0.0};
        ar.stddev = {0.5, 0.5};
        ar.length_min = 2;
        ar.length_max = 4;
        spec.archetypes.push_back(ar);
    }
    for (int c = 0; c < kNumClasses; ++c) {
        Tensor m({n_archetypes, n_archetypes});
        for (std::size_t r = 0; r < n_archetypes; ++r)
            for (std::size_t j = 0; j < n_archetypes; ++j)
                m.at(r, j) = 1.0 / static_cast<double>(n_archetypes);
        spec.class_transitions.push_back(m);
    }
    return spec;
}

}  // namespace

TEST_CASE("schema: encoded width and column kinds") {
    FeatureSchema s = mixed_schema();
    CHECK(s.encoded_width() == 5);  // 1 + 1 + 3
    auto numeric = s.numeric_columns();
    CHECK(numeric == std::vector<bool>{true, false, false, false, false});
    auto names = s.column_names();
    CHECK(names[2] == "format=points");
}

TEST_CASE("load_dataset: single player with two sequences of three games") {
    auto dir = temp_dir("load_basic");
    const std::string game = R"({"stake": 5.0, "won": true, "format": "pool"})";
    std::string line = R"({"player_id": "p1", "label": "Burnout", "sequences": [[)" + game + "," +
                       game + "," + game + "],[" + game + "," + game + "," + game + "]]}";
    write_file(dir / "d.jsonl", line + "\n");
    auto ds = load_dataset((dir / "d.jsonl").string(), mixed_schema());
    REQUIRE(ds.size() == 1);
    CHECK(ds[0].player_id == "p1");
    CHECK(ds[0].label == 1);
    REQUIRE(ds[0].sequences.size() == 2);
    CHECK(ds[0].sequences[0].games.size() == 3);
    // encoding: stake, won, one-hot(points, pool, deals)
    CHECK(ds[0].sequences[0].games[0].features ==
          std::vector<double>{5.0, 1.0, 0.0, 1.0, 0.0});
}

TEST_CASE("load_dataset: empty file gives empty dataset") {
    auto dir = temp_dir("load_empty");
    write_file(dir / "d.jsonl", "");
    auto ds = load_dataset((dir / "d.jsonl").string(), mixed_schema());
    CHECK(ds.empty());
}

TEST_CASE("load_dataset: missing label names the line") {
    auto dir = temp_dir("load_nolabel");
    write_file(dir / "d.jsonl", R"({"player_id": "p1", "sequences": []})"
                                "\n");
    try {
        load_dataset((dir / "d.jsonl").string(), mixed_schema());
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("line 1") != std::string::npos);
    }
}

TEST_CASE("load_dataset: unknown feature and unknown category are rejected with line numbers") {
    auto dir = temp_dir("load_bad");
    write_file(dir / "unknown_feat.jsonl",
               "\n"
               R"({"player_id":"p","label":"Sustainer","sequences":[[{"stake":1,"won":0,"format":"pool","bogus":3}]]})"
               "\n");
    try {
        load_dataset((dir / "unknown_feat.jsonl").string(), mixed_schema());
        FAIL("expected DataError");
    } catch (const DataError& e) {
        std::string msg = e.what();
        CHECK(msg.find("line 2") != std::string::npos);
        CHECK(msg.find("bogus") != std::string::npos);
    }
    write_file(dir / "unknown_cat.jsonl",
               R"({"player_id":"p","label":"Sustainer","sequences":[[{"stake":1,"won":0,"format":"rumble"}]]})"
               "\n");
    CHECK_THROWS_AS(load_dataset((dir / "unknown_cat.jsonl").string(), mixed_schema()), DataError);
}

TEST_CASE("compute_pad_length: nearest-rank 95th percentile") {
    auto make = [](const std::vector<std::size_t>& lengths) {
        Dataset ds;
        PlayerSample p;
        p.player_id = "p";
        p.label = 0;
        for (auto l : lengths) {
            GameSequence s;
            for (std::size_t i = 0; i < l; ++i) s.games.push_back(GameRecord{{0.0}});
            p.sequences.push_back(std::move(s));
        }
        ds.push_back(std::move(p));
        return ds;
    };
    CHECK(compute_pad_length(make({10, 10, 10, 10})) == 10);
    std::vector<std::size_t> one_to_hundred;
    for (std::size_t i = 1; i <= 100; ++i) one_to_hundred.push_back(i);
    CHECK(compute_pad_length(make(one_to_hundred)) == 95);
    CHECK(compute_pad_length(make({5, 200})) == 200);
    CHECK_THROWS_AS(compute_pad_length(make({0, 0})), DataError);
    CHECK_THROWS_AS(compute_pad_length(Dataset{}), DataError);
}

TEST_CASE("pad_truncate: identity, empty, and truncation cases") {
    const std::size_t L = 4, F = 2;
    GameSequence seq;
    for (int i = 0; i < 4; ++i)
        seq.games.push_back(GameRecord{{double(i), double(i) + 0.5}});

    SUBCASE("raw length equals L: unchanged") {
        pad_truncate(seq, L, F);
        CHECK(seq.valid_length == 4);
        for (std::size_t t = 0; t < 4; ++t) CHECK(seq.padded.at(t, 0) == double(t));
    }
    SUBCASE("raw length zero: all-zero with valid_length 0") {
        GameSequence empty;
        pad_truncate(empty, L, F);
        CHECK(empty.valid_length == 0);
        for (double v : empty.padded.values()) CHECK(v == 0.0);
    }
    SUBCASE("raw length L+2: most recent L games kept") {
        seq.games.push_back(GameRecord{{100.0, 100.5}});
        seq.games.push_back(GameRecord{{101.0, 101.5}});
        pad_truncate(seq, L, F);
        CHECK(seq.valid_length == 4);
        CHECK(seq.padded.at(0, 0) == 2.0);    // oldest two dropped
        CHECK(seq.padded.at(3, 0) == 101.0);  // newest kept
    }
    SUBCASE("short sequence zero-padded at tail") {
        GameSequence s2;
        s2.games.push_back(GameRecord{{7.0, 8.0}});
        pad_truncate(s2, L, F);
        CHECK(s2.valid_length == 1);
        CHECK(s2.padded.at(0, 0) == 7.0);
        CHECK(s2.padded.at(1, 0) == 0.0);
        CHECK(s2.padded.at(3, 1) == 0.0);
    }
}

TEST_CASE("normalize: z-score on valid rows, constants passed through, padding untouched") {
    FeatureSchema s;
    s.features.push_back({"a", FeatureKind::Numeric, {}});
    s.features.push_back({"b", FeatureKind::Numeric, {}});

    Dataset ds;
    PlayerSample p;
    p.label = 0;
    GameSequence seq;
    // feature a: values 8,12 -> mean 10, population std 2; feature b constant
    seq.games.push_back(GameRecord{{8.0, 3.0}});
    seq.games.push_back(GameRecord{{12.0, 3.0}});
    p.sequences.push_back(seq);
    ds.push_back(p);

    for (auto& sample : ds)
        for (auto& q : sample.sequences) pad_truncate(q, 4, 2);

    auto stats = compute_stats(ds, s);
    CHECK(stats.mean[0] == doctest::Approx(10.0));
    CHECK(stats.stddev[0] == doctest::Approx(2.0));
    CHECK_FALSE(stats.apply[1]);  // constant feature excluded

    normalize(ds, stats);
    const auto& padded = ds[0].sequences[0].padded;
    CHECK(padded.at(1, 0) == doctest::Approx(1.0));   // (12-10)/2
    CHECK(padded.at(0, 1) == 3.0);                     // constant passes through
    CHECK(padded.at(2, 0) == 0.0);                     // padded row still zero
    CHECK(padded.at(3, 1) == 0.0);
}

TEST_CASE("enforce_sequence_count: exact S with zero-padding or oldest-dropped") {
    const std::size_t L = 3, F = 1;
    Dataset ds;
    PlayerSample p;
    p.label = 0;
    for (int i = 0; i < 5; ++i) {
        GameSequence s;
        s.games.push_back(GameRecord{{double(i)}});
        pad_truncate(s, L, F);
        p.sequences.push_back(s);
    }
    p.archetypes = {0, 1, 2, 3, 0};
    ds.push_back(p);

    SUBCASE("drop oldest when too many") {
        enforce_sequence_count(ds, 3, L, F);
        REQUIRE(ds[0].sequences.size() == 3);
        CHECK(ds[0].sequences[0].padded.at(0, 0) == 2.0);
        CHECK(ds[0].archetypes == std::vector<int>{2, 3, 0});
    }
    SUBCASE("append all-zero sequences when too few") {
        enforce_sequence_count(ds, 7, L, F);
        REQUIRE(ds[0].sequences.size() == 7);
        CHECK(ds[0].sequences[6].valid_length == 0);
        for (double v : ds[0].sequences[6].padded.values()) CHECK(v == 0.0);
        CHECK(ds[0].archetypes.back() == -1);
        // every padded tensor has shape (L, F)
        for (const auto& s : ds[0].sequences) {
            CHECK(s.padded.dim(0) == L);
            CHECK(s.padded.dim(1) == F);
        }
    }
}

TEST_CASE("generate_synthetic: single archetype makes a constant ground-truth chain") {
    auto spec = simple_spec(1, 5, 11);
    auto ds = generate_synthetic(spec, 2);
    REQUIRE(ds.size() == 6);
    for (const auto& p : ds)
        for (int a : p.archetypes) CHECK(a == 0);
}

TEST_CASE("generate_synthetic: identity transitions freeze each player's archetype") {
    auto spec = simple_spec(3, 6, 12);
    for (auto& m : spec.class_transitions) {
        m.fill(0.0);
        for (std::size_t i = 0; i < 3; ++i) m.at(i, i) = 1.0;
    }
    auto ds = generate_synthetic(spec, 4);
    for (const auto& p : ds) {
        REQUIRE(!p.archetypes.empty());
        for (int a : p.archetypes) CHECK(a == p.archetypes[0]);
    }
}

TEST_CASE("generate_synthetic: well-separated archetypes recoverable by nearest-mean oracle") {
    GeneratorSpec spec = simple_spec(3, 8, 21);
    spec.archetypes[0].mean = {0.0, 0.0};
    spec.archetypes[1].mean = {10.0, 10.0};
    spec.archetypes[2].mean = {-10.0, -10.0};
    for (auto& a : spec.archetypes) a.stddev = {0.5, 0.5};
    auto ds = generate_synthetic(spec, 30);

    std::size_t total = 0, correct = 0;
    for (const auto& p : ds) {
        for (std::size_t s = 0; s < p.sequences.size(); ++s) {
            const auto& games = p.sequences[s].games;
            double m0 = 0.0, m1 = 0.0;
            for (const auto& g : games) {
                m0 += g.features[0];
                m1 += g.features[1];
            }
            m0 /= double(games.size());
            m1 /= double(games.size());
            // brute-force nearest archetype mean
            int best = 0;
            double bestd = 1e300;
            for (int a = 0; a < 3; ++a) {
                const double d0 = m0 - spec.archetypes[a].mean[0];
                const double d1 = m1 - spec.archetypes[a].mean[1];
                if (d0 * d0 + d1 * d1 < bestd) {
                    bestd = d0 * d0 + d1 * d1;
                    best = a;
                }
            }
            ++total;
            if (best == p.archetypes[s]) ++correct;
        }
    }
    CHECK(double(correct) / double(total) > 0.99);
}

TEST_CASE("generate_synthetic: identical spec and seed are bit-identical") {
    auto spec = simple_spec(2, 4, 33);
    auto a = generate_synthetic(spec, 3);
    auto b = generate_synthetic(spec, 3);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].player_id == b[i].player_id);
        CHECK(a[i].archetypes == b[i].archetypes);
        REQUIRE(a[i].sequences.size() == b[i].sequences.size());
        for (std::size_t s = 0; s < a[i].sequences.size(); ++s) {
            REQUIRE(a[i].sequences[s].games.size() == b[i].sequences[s].games.size());
            for (std::size_t g = 0; g < a[i].sequences[s].games.size(); ++g)
                CHECK(a[i].sequences[s].games[g].features == b[i].sequences[s].games[g].features);
        }
    }
}

TEST_CASE("dataset round-trip: write then load reproduces identical values bit-for-bit") {
    auto spec = simple_spec(2, 3, 44);
    auto ds = generate_synthetic(spec, 2);
    auto dir = temp_dir("roundtrip");
    auto schema = spec.schema();
    save_dataset((dir / "d.jsonl").string(), ds, schema);
    auto loaded = load_dataset((dir / "d.jsonl").string(), schema);
    REQUIRE(loaded.size() == ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        CHECK(loaded[i].player_id == ds[i].player_id);
        CHECK(loaded[i].label == ds[i].label);
        CHECK(loaded[i].archetypes == ds[i].archetypes);
        for (std::size_t s = 0; s < ds[i].sequences.size(); ++s)
            for (std::size_t g = 0; g < ds[i].sequences[s].games.size(); ++g)
                CHECK(loaded[i].sequences[s].games[g].features ==
                      ds[i].sequences[s].games[g].features);
    }
}

TEST_CASE("generate_synthetic: empirical transition frequencies converge to the Markov matrix") {
    GeneratorSpec spec = simple_spec(3, 101, 55);  // 100 transitions per player
    Tensor m({3, 3}, {0.7, 0.2, 0.1,
                      0.3, 0.5, 0.2,
                      0.1, 0.1, 0.8});
    spec.class_transitions[0] = m;
    auto ds = generate_synthetic(spec, 120);  // class 0 alone has 12000 transitions

    Tensor counts({3, 3});
    Tensor row_totals({3});
    for (const auto& p : ds) {
        if (p.label != 0) continue;
        for (std::size_t s = 0; s + 1 < p.archetypes.size(); ++s) {
            counts.at(p.archetypes[s], p.archetypes[s + 1]) += 1.0;
            row_totals[p.archetypes[s]] += 1.0;
        }
    }
    for (std::size_t r = 0; r < 3; ++r) {
        REQUIRE(row_totals[r] > 0.0);
        for (std::size_t c = 0; c < 3; ++c) {
            const double freq = counts.at(r, c) / row_totals[r];
            CHECK(std::abs(freq - m.at(r, c)) < 0.05);
        }
    }
}

TEST_CASE("generator spec: save/load round-trip and validation") {
    auto dir = temp_dir("genspec");
    auto spec = simple_spec(2, 4, 99);
    spec.save((dir / "spec.json").string());
    auto loaded = GeneratorSpec::load((dir / "spec.json").string());
    CHECK(loaded.n_archetypes == 2);
    CHECK(loaded.sequences_per_player == 4);
    CHECK(loaded.seed == 99);
    CHECK(loaded.archetypes[1].mean == spec.archetypes[1].mean);
    CHECK(loaded.class_transitions[2].values() == spec.class_transitions[2].values());

    SUBCASE("bad row sum rejected") {
        spec.class_transitions[1].at(0, 0) += 0.5;
        CHECK_THROWS_AS(spec.validate(), ConfigError);
    }
    SUBCASE("negative entry rejected") {
        spec.class_transitions[0].at(0, 0) = -0.1;
        spec.class_transitions[0].at(0, 1) = 1.1;
        CHECK_THROWS_AS(spec.validate(), ConfigError);
    }
}

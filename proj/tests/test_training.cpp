#include <doctest.h>

#include <cmath>
#include <map>
#include <vector>

#include "seqforge/errors.hpp"
#include "seqforge/generator.hpp"
#include "seqforge/training.hpp"

using namespace seqforge;

namespace {

GeneratorSpec tiny_spec(std::uint64_t seed) {
    GeneratorSpec spec;
    spec.n_archetypes = 2;
    spec.sequences_per_player = 4;
    spec.seed = seed;
    spec.feature_names = {"f0", "f1", "f2"};
    spec.archetypes.push_back(ArchetypeSpec{{0.0, 0.0, 0.0}, {0.5, 0.5, 0.5}, 3, 6});
    spec.archetypes.push_back(ArchetypeSpec{{4.0, -4.0, 2.0}, {0.5, 0.5, 0.5}, 3, 6});
    Tensor sticky({2, 2}, {0.9, 0.1, 0.1, 0.9});
    Tensor hop({2, 2}, {0.2, 0.8, 0.8, 0.2});
    Tensor mixed({2, 2}, {0.5, 0.5, 0.5, 0.5});
    spec.class_transitions = {sticky, hop, mixed};
    return spec;
}

PreparedData tiny_data(std::uint64_t seed, std::size_t n_per_class = 4) {
    auto spec = tiny_spec(seed);
    auto ds = generate_synthetic(spec, n_per_class);
    return prepare_training_data(std::move(ds), spec.schema());
}

TrainingConfig tiny_config() {
    TrainingConfig cfg;
    cfg.K = 3;
    cfg.I = 2;
    cfg.collaborative_epochs = 3;
    cfg.interpreter_inner_epochs = 2;
    cfg.classifier_inner_epochs = 3;
    cfg.B2 = 4;
    cfg.seed = 11;
    cfg.m1 = 4;
    cfg.m2 = 3;
    cfg.m3 = 3;
    cfg.attention_dim = 3;
    cfg.conv_channels = 2;
    cfg.recurrent_hidden = 4;
    return cfg;
}

std::vector<double> history_values(const std::vector<EpochRecord>& h) {
    std::vector<double> out;
    for (const auto& r : h) out.push_back(r.value);
    return out;
}

}  // namespace

TEST_CASE("collaborative_train: identical config and seed give identical histories") {
    auto data = tiny_data(3);
    auto cfg = tiny_config();
    auto a = collaborative_train(data, cfg, ClassifierVariant::TransitionMatrix);
    auto b = collaborative_train(data, cfg, ClassifierVariant::TransitionMatrix);
    CHECK(history_values(a.state.history) == history_values(b.state.history));
    CHECK(a.interpreter->params().checksum() == b.interpreter->params().checksum());
    CHECK(a.classifier->params().checksum() == b.classifier->params().checksum());
    CHECK(a.state.entropy_trace == b.state.entropy_trace);
}

TEST_CASE("collaborative_train: epoch-1 interpreter loss is exactly recon + (lambda/2) trace") {
    auto data = tiny_data(4);
    auto cfg = tiny_config();
    cfg.collaborative_epochs = 1;
    auto res = collaborative_train(data, cfg, ClassifierVariant::TransitionMatrix);

    std::map<std::size_t, std::map<std::string, double>> rows;
    for (const auto& r : res.state.history)
        if (r.phase == "interpreter") rows[r.epoch][r.loss_name] = r.value;
    REQUIRE(!rows.empty());
    for (const auto& [epoch, vals] : rows) {
        CHECK(vals.count("bridge") == 0);  // bridge provably absent
        const double expect = vals.at("reconstruction") + (cfg.lambda / 2.0) * vals.at("trace");
        const double got = vals.at("total");
        CHECK(std::abs(got - expect) <= 1e-12 * std::max(1.0, std::abs(got)));
    }
}

TEST_CASE("collaborative_train: bridge loss rows appear from the second epoch on") {
    auto data = tiny_data(5);
    auto cfg = tiny_config();
    cfg.collaborative_epochs = 2;
    auto res = collaborative_train(data, cfg, ClassifierVariant::TransitionMatrix);
    bool epoch1_bridge = false, epoch2_bridge = false;
    for (const auto& r : res.state.history) {
        if (r.phase != "interpreter" || r.loss_name != "bridge") continue;
        if (r.epoch <= cfg.interpreter_inner_epochs) epoch1_bridge = true;
        else epoch2_bridge = true;
    }
    CHECK_FALSE(epoch1_bridge);
    CHECK(epoch2_bridge);
}

TEST_CASE("collaborative_train: freeze invariants hold across phases") {
    auto data = tiny_data(6);
    auto cfg = tiny_config();
    cfg.collaborative_epochs = 2;

    std::uint64_t clf_before = 0, interp_before = 0;
    bool clf_frozen = true, interp_frozen = true;
    TrainHooks hooks;
    hooks.phase_start = [&](const std::string& phase, std::size_t, const InterpreterModel& im,
                            const ClassifierModel& cm) {
        if (phase == "interpreter") clf_before = cm.params().checksum();
        else interp_before = im.params().checksum();
    };
    hooks.phase_end = [&](const std::string& phase, std::size_t, const InterpreterModel& im,
                          const ClassifierModel& cm) {
        if (phase == "interpreter") clf_frozen = clf_frozen && cm.params().checksum() == clf_before;
        else interp_frozen = interp_frozen && im.params().checksum() == interp_before;
    };
    collaborative_train(data, cfg, ClassifierVariant::TransitionMatrix, "", hooks);
    CHECK(clf_frozen);
    CHECK(interp_frozen);
}

TEST_CASE("collaborative_train: indicator refresh happens exactly every I iterations") {
    auto data = tiny_data(7);
    auto cfg = tiny_config();
    cfg.I = 3;
    cfg.collaborative_epochs = 2;
    auto res = collaborative_train(data, cfg, ClassifierVariant::TransitionMatrix);
    REQUIRE(!res.state.indicator_refresh_iters.empty());
    for (std::size_t i = 0; i < res.state.indicator_refresh_iters.size(); ++i)
        CHECK(res.state.indicator_refresh_iters[i] == i * cfg.I);
}

TEST_CASE("collaborative_train: all three variants run end to end") {
    auto data = tiny_data(8);
    auto cfg = tiny_config();
    cfg.collaborative_epochs = 2;
    for (auto v : {ClassifierVariant::TransitionMatrix, ClassifierVariant::Sequential,
                   ClassifierVariant::Frequency}) {
        auto res = collaborative_train(data, cfg, v);
        CHECK(res.state.entropy_trace.size() == 2);
        auto preds = predict(*res.interpreter, *res.classifier, res.state.clusters, data, v);
        CHECK(preds.size() == data.players());
        auto report = precision_recall(preds, data.labels);
        CHECK(report.macro_recall >= 0.0);
    }
}

TEST_CASE("run_ablation: the repeated classifier run reproduces its CCE trajectory exactly") {
    auto data = tiny_data(9);
    auto cfg = tiny_config();
    cfg.collaborative_epochs = 2;
    auto res = run_ablation(data, cfg, ClassifierVariant::TransitionMatrix);
    std::vector<double> pass1, pass2;
    for (const auto& r : res.state.history) {
        if (r.phase == "classifier_pass1") pass1.push_back(r.value);
        if (r.phase == "classifier_pass2") pass2.push_back(r.value);
    }
    REQUIRE(pass1.size() == cfg.classifier_inner_epochs);
    CHECK(pass1 == pass2);  // bit-identical repeat
}

TEST_CASE("run_ablation: never records a bridge loss") {
    auto data = tiny_data(10);
    auto cfg = tiny_config();
    auto res = run_ablation(data, cfg, ClassifierVariant::TransitionMatrix);
    for (const auto& r : res.state.history) CHECK(r.loss_name != "bridge");
}

TEST_CASE("run_ablation: zero classifier epochs leave uniform predictions") {
    auto data = tiny_data(11);
    auto cfg = tiny_config();
    cfg.collaborative_epochs = 1;
    cfg.classifier_inner_epochs = 0;
    auto res = run_ablation(data, cfg, ClassifierVariant::TransitionMatrix);
    Tensor input = Tensor::full({cfg.K, cfg.K}, 1.0 / double(cfg.K * cfg.K));
    auto act = res.classifier->activations(input);
    for (std::size_t c = 0; c < 3; ++c)
        CHECK(act.probabilities[c] == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("collaborative_train at one epoch matches the disconnected interpreter") {
    auto data = tiny_data(12);
    auto cfg = tiny_config();
    cfg.collaborative_epochs = 1;
    auto full = collaborative_train(data, cfg, ClassifierVariant::TransitionMatrix);
    auto ablation = run_ablation(data, cfg, ClassifierVariant::TransitionMatrix);
    // identical interpreter training: same seeds, same batch streams, no bridge
    CHECK(full.interpreter->params().checksum() == ablation.interpreter->params().checksum());
}

TEST_CASE("training: configuration errors are rejected") {
    auto data = tiny_data(13);
    auto cfg = tiny_config();

    SUBCASE("K larger than B1") {
        cfg.K = data.S * cfg.B2 + 1;
        CHECK_THROWS_AS(collaborative_train(data, cfg, ClassifierVariant::TransitionMatrix),
                        ConfigError);
    }
    SUBCASE("B2 larger than the player count") {
        cfg.B2 = data.players() + 1;
        CHECK_THROWS_AS(collaborative_train(data, cfg, ClassifierVariant::TransitionMatrix),
                        ConfigError);
    }
    SUBCASE("invalid beta") {
        cfg.beta = 0.0;
        CHECK_THROWS_AS(collaborative_train(data, cfg, ClassifierVariant::TransitionMatrix),
                        ConfigError);
    }
}

TEST_CASE("prepare pipelines: training derives dims, eval reuses them") {
    auto spec = tiny_spec(21);
    auto train_raw = generate_synthetic(spec, 3);
    auto data = prepare_training_data(train_raw, spec.schema());
    CHECK(data.S == 4);
    CHECK(data.F == 3);
    for (const auto& p : data.dataset)
        for (const auto& s : p.sequences) {
            CHECK(s.padded.dim(0) == data.L);
            CHECK(s.padded.dim(1) == data.F);
        }

    auto spec2 = tiny_spec(22);
    auto eval_raw = generate_synthetic(spec2, 2);
    auto eval = prepare_eval_data(eval_raw, data.schema, data.stats, data.S, data.L);
    CHECK(eval.S == data.S);
    CHECK(eval.L == data.L);
}

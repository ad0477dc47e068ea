#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "seqforge/grad_check.hpp"
#include "seqforge/interpreter.hpp"
#include "seqforge/rng.hpp"

using namespace seqforge;

namespace {

GameSequence make_sequence(const std::vector<std::vector<double>>& rows, std::size_t L) {
    GameSequence s;
    for (const auto& r : rows) s.games.push_back(GameRecord{r});
    pad_truncate(s, L, rows.empty() ? 2 : rows[0].size());
    return s;
}

SequenceBatch toy_batch(Rng& rng, std::size_t n_seqs, std::size_t L, std::size_t F,
                        const std::vector<std::size_t>& valids) {
    std::vector<GameSequence> seqs;
    for (std::size_t i = 0; i < n_seqs; ++i) {
        std::vector<std::vector<double>> rows;
        for (std::size_t t = 0; t < valids[i]; ++t) {
            std::vector<double> row(F);
            for (auto& v : row) v = rng.normal();
            rows.push_back(row);
        }
        GameSequence s;
        for (const auto& r : rows) s.games.push_back(GameRecord{r});
        pad_truncate(s, L, F);
        seqs.push_back(std::move(s));
    }
    std::vector<const GameSequence*> ptrs;
    static std::vector<GameSequence> keep_alive;  // keep pointed-to storage valid
    keep_alive = std::move(seqs);
    for (const auto& s : keep_alive) ptrs.push_back(&s);
    return make_batch(ptrs);
}

/// Hand-unrolled scalar LSTM oracle, independent of the graph ops.
struct HandLstm {
    const Tensor& W;  // (in, 4m)
    const Tensor& U;  // (m, 4m)
    const Tensor& b;  // (4m)
    std::size_t m;

    static double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

    void step(const std::vector<double>& x, std::vector<double>& h, std::vector<double>& c) const {
        std::vector<double> z(4 * m, 0.0);
        for (std::size_t j = 0; j < 4 * m; ++j) {
            double acc = b[j];
            for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * W.at(i, j);
            for (std::size_t i = 0; i < m; ++i) acc += h[i] * U.at(i, j);
            z[j] = acc;
        }
        std::vector<double> h_new(m), c_new(m);
        for (std::size_t i = 0; i < m; ++i) {
            const double ig = sigmoid(z[i]);
            const double fg = sigmoid(z[m + i]);
            const double gg = std::tanh(z[2 * m + i]);
            const double og = sigmoid(z[3 * m + i]);
            c_new[i] = fg * c[i] + ig * gg;
            h_new[i] = og * std::tanh(c_new[i]);
        }
        h = h_new;
        c = c_new;
    }
};

/// Adapts a model+graph builder into the grad_check interface.
GradCheckResult check_model_gradients(
    InterpreterModel& model,
    const std::function<NodeId(Graph&, const std::vector<NodeId>&)>& build, double eps = 1e-5) {
    std::vector<Tensor> init;
    for (std::size_t i = 0; i < model.params().size(); ++i)
        init.push_back(model.params().value(i));
    LossFn fn = [&model, &build](const std::vector<Tensor>& ps, std::vector<Tensor>* grads) {
        for (std::size_t i = 0; i < ps.size(); ++i) model.params().value(i) = ps[i];
        Graph g;
        auto bound = model.params().bind(g, true);
        NodeId loss = build(g, bound);
        const double v = g.value(loss).item();
        if (grads) {
            g.backward(loss);
            grads->clear();
            for (NodeId id : bound) grads->push_back(g.grad(id));
        }
        return v;
    };
    return grad_check(fn, std::move(init), eps);
}

}  // namespace

TEST_CASE("encode: zero weights give a zero latent matrix") {
    InterpreterConfig cfg{2, {3, 2, 2}, 2};
    InterpreterModel model(cfg, 1);
    for (std::size_t i = 0; i < model.params().size(); ++i) model.params().value(i).fill(0.0);

    Rng rng(5);
    auto batch = toy_batch(rng, 3, 4, 2, {4, 2, 4});
    Tensor latent = model.encode_values(batch);
    CHECK(latent.dim(0) == 3);
    CHECK(latent.dim(1) == cfg.latent_dim());
    for (double v : latent.values()) CHECK(v == 0.0);
}

TEST_CASE("encode: duplicate input rows produce identical latent rows") {
    InterpreterConfig cfg{2, {3, 2, 2}, 2};
    InterpreterModel model(cfg, 7);
    GameSequence a = make_sequence({{0.5, -1.0}, {1.5, 0.25}, {0.0, 2.0}}, 5);
    auto batch = make_batch({&a, &a});
    Tensor latent = model.encode_values(batch);
    for (std::size_t c = 0; c < latent.dim(1); ++c)
        CHECK(latent.at(0, c) == latent.at(1, c));
}

TEST_CASE("encode: matches hand-unrolled recurrent cell oracle to 1e-10") {
    InterpreterConfig cfg{2, {3, 2, 2}, 2};
    InterpreterModel model(cfg, 42);
    Rng rng(9);
    auto batch = toy_batch(rng, 3, 4, 2, {4, 2, 1});
    Tensor latent = model.encode_values(batch);

    const auto& ps = model.params();
    HandLstm l1{ps.value("enc1_W"), ps.value("enc1_U"), ps.value("enc1_b"), 3};
    HandLstm l2{ps.value("enc2_W"), ps.value("enc2_U"), ps.value("enc2_b"), 2};
    HandLstm l3{ps.value("enc3_W"), ps.value("enc3_U"), ps.value("enc3_b"), 2};

    for (std::size_t r = 0; r < batch.rows; ++r) {
        std::vector<double> h1(3, 0.0), c1(3, 0.0), h2(2, 0.0), c2(2, 0.0), h3(2, 0.0),
            c3(2, 0.0);
        const std::size_t last = std::max<std::size_t>(batch.valid[r], 1);
        for (std::size_t t = 0; t < last; ++t) {
            std::vector<double> x(2);
            for (std::size_t f = 0; f < 2; ++f) x[f] = batch.x[t].at(r, f);
            l1.step(x, h1, c1);
            l2.step(h1, h2, c2);
            l3.step(h2, h3, c3);
        }
        std::vector<double> expect;
        expect.insert(expect.end(), h1.begin(), h1.end());
        expect.insert(expect.end(), h2.begin(), h2.end());
        expect.insert(expect.end(), h3.begin(), h3.end());
        for (std::size_t c = 0; c < expect.size(); ++c)
            CHECK(std::abs(latent.at(r, c) - expect[c]) < 1e-10);
    }
}

TEST_CASE("decode: zero weights give zero reconstruction") {
    InterpreterConfig cfg{2, {3, 2, 2}, 2};
    InterpreterModel model(cfg, 3);
    for (std::size_t i = 0; i < model.params().size(); ++i) model.params().value(i).fill(0.0);
    Rng rng(5);
    auto batch = toy_batch(rng, 2, 3, 2, {3, 3});
    Graph g;
    auto bound = model.params().bind(g, false);
    auto enc = model.encode(g, bound, batch);
    auto outs = model.decode(g, bound, enc, batch);
    for (NodeId out : outs)
        for (double v : g.value(out).values()) CHECK(v == 0.0);
}

TEST_CASE("attention: a single unmasked timestep returns that timestep's output exactly") {
    Rng rng(12);
    Graph g;
    Tensor q({2, 3}), wq({3, 2}), b({2}), v({2});
    for (auto* t : {&q, &wq, &b, &v})
        for (auto& x : t->values()) x = rng.normal();
    Tensor proj({2, 2}), enc({2, 4});
    for (auto* t : {&proj, &enc})
        for (auto& x : t->values()) x = rng.normal();
    NodeId ctx = g.attention(g.leaf(q), g.leaf(wq), g.leaf(b), g.leaf(v), {g.leaf(proj)},
                             {g.leaf(enc)}, Tensor::full({2, 1}, 1.0));
    for (std::size_t i = 0; i < 8; ++i) CHECK(g.value(ctx)[i] == enc[i]);
}

TEST_CASE("decode: gradient of the reconstruction objective passes grad_check") {
    InterpreterConfig cfg{2, {2, 2, 2}, 2};
    InterpreterModel model(cfg, 21);
    Rng rng(31);
    auto batch = toy_batch(rng, 2, 3, 2, {3, 2});
    auto res = check_model_gradients(model, [&](Graph& g, const std::vector<NodeId>& bound) {
        auto enc = model.encode(g, bound, batch);
        auto outs = model.decode(g, bound, enc, batch);
        return reconstruction_loss(g, outs, batch);
    });
    CHECK(res.finite);
    CHECK(res.max_rel_error < 1e-4);
}

TEST_CASE("reconstruction_loss: identity, unit offset, and masking contract") {
    Rng rng(4);
    auto batch = toy_batch(rng, 2, 3, 2, {3, 2});

    SUBCASE("perfect reconstruction gives zero") {
        Graph g;
        std::vector<NodeId> outs;
        for (std::size_t t = 0; t < batch.steps; ++t) outs.push_back(g.constant(batch.x[t]));
        CHECK(g.value(reconstruction_loss(g, outs, batch)).item() == 0.0);
    }
    SUBCASE("all-zero target vs all-one output with full valid length gives 1") {
        SequenceBatch zb;
        zb.rows = 2;
        zb.steps = 3;
        zb.width = 2;
        zb.valid = {3, 3};
        for (std::size_t t = 0; t < 3; ++t) zb.x.push_back(Tensor({2, 2}));
        Graph g;
        std::vector<NodeId> outs;
        for (std::size_t t = 0; t < 3; ++t) outs.push_back(g.constant(Tensor::full({2, 2}, 1.0)));
        CHECK(g.value(reconstruction_loss(g, outs, zb)).item() == doctest::Approx(1.0));
    }
    SUBCASE("mangling reconstructions in the padded tail leaves the loss unchanged") {
        Graph g;
        std::vector<NodeId> clean, mangled;
        for (std::size_t t = 0; t < batch.steps; ++t) {
            clean.push_back(g.constant(batch.x[t]));
            Tensor bad = batch.x[t];
            // row 1 is only valid through t=1; wreck its padded region
            if (t >= batch.valid[1]) {
                for (std::size_t f = 0; f < 2; ++f) bad.at(1, f) = 1e6;
            }
            mangled.push_back(g.constant(bad));
        }
        const double a = g.value(reconstruction_loss(g, clean, batch)).item();
        const double b = g.value(reconstruction_loss(g, mangled, batch)).item();
        CHECK(a == b);
    }
}

TEST_CASE("trace_loss: zero residual when latent rank fits within K") {
    // latent (4, 2) has rank 2; with K=2 the top-2 eigenbasis captures it all
    Tensor lv({4, 2}, {1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 2.0, -1.0});
    Tensor gram({4, 4});
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) {
            double s = 0.0;
            for (std::size_t c = 0; c < 2; ++c) s += lv.at(i, c) * lv.at(j, c);
            gram.at(i, j) = s;
        }
    auto ind = top_k_eigenvectors(gram, 2);
    Graph g;
    NodeId latent = g.leaf(lv);
    CHECK(std::abs(g.value(trace_loss(g, latent, ind)).item()) < 1e-8);
}

TEST_CASE("trace_loss: diagonal Gram residual eigenvalue") {
    // latent diag(sqrt(5), sqrt(3), 1) gives Gram diag(5,3,1)
    Tensor lv({3, 3});
    lv.at(0, 0) = std::sqrt(5.0);
    lv.at(1, 1) = std::sqrt(3.0);
    lv.at(2, 2) = 1.0;
    Tensor gram({3, 3});
    gram.at(0, 0) = 5.0;
    gram.at(1, 1) = 3.0;
    gram.at(2, 2) = 1.0;
    auto ind = top_k_eigenvectors(gram, 2);
    Graph g;
    CHECK(g.value(trace_loss(g, g.leaf(lv), ind)).item() == doctest::Approx(1.0));
}

TEST_CASE("trace_loss: equals residual eigenvalue mass from the dense eigensolver oracle") {
    Rng rng(77);
    for (std::size_t k : {2u, 3u, 5u}) {
        Tensor lv({20, 8});
        for (auto& x : lv.values()) x = rng.normal();
        Tensor gram({20, 20});
        for (std::size_t i = 0; i < 20; ++i)
            for (std::size_t j = 0; j < 20; ++j) {
                double s = 0.0;
                for (std::size_t c = 0; c < 8; ++c) s += lv.at(i, c) * lv.at(j, c);
                gram.at(i, j) = s;
            }
        auto ind = top_k_eigenvectors(gram, k);
        Graph g;
        const double loss = g.value(trace_loss(g, g.leaf(lv), ind)).item();
        auto oracle = oracles::dense_symmetric_eig(gram);
        double residual = 0.0;
        for (std::size_t i = k; i < oracle.values.size(); ++i) residual += oracle.values[i];
        CHECK(std::abs(loss - residual) < 1e-8);
    }
}

TEST_CASE("trace_loss: gradient through the latent passes grad_check with indicator fixed") {
    InterpreterConfig cfg{2, {2, 2, 2}, 2};
    InterpreterModel model(cfg, 55);
    Rng rng(66);
    auto batch = toy_batch(rng, 4, 3, 2, {3, 3, 2, 3});

    // Freeze the indicator from the initial latent Gram.
    Tensor lv = model.encode_values(batch);
    Tensor gram({batch.rows, batch.rows});
    for (std::size_t i = 0; i < batch.rows; ++i)
        for (std::size_t j = 0; j < batch.rows; ++j) {
            double s = 0.0;
            for (std::size_t c = 0; c < lv.dim(1); ++c) s += lv.at(i, c) * lv.at(j, c);
            gram.at(i, j) = s;
        }
    auto ind = top_k_eigenvectors(gram, 2);

    auto res = check_model_gradients(model, [&](Graph& g, const std::vector<NodeId>& bound) {
        auto enc = model.encode(g, bound, batch);
        return trace_loss(g, enc.latent, ind);
    });
    CHECK(res.finite);
    CHECK(res.max_rel_error < 1e-4);
}

TEST_CASE("encode/decode: identical inputs and weights are bit-identical") {
    InterpreterConfig cfg{2, {3, 2, 2}, 2};
    InterpreterModel model(cfg, 10);
    Rng rng(20);
    auto batch = toy_batch(rng, 2, 4, 2, {4, 3});

    auto run = [&]() {
        Graph g;
        auto bound = model.params().bind(g, false);
        auto enc = model.encode(g, bound, batch);
        auto outs = model.decode(g, bound, enc, batch);
        std::vector<double> all = g.value(enc.latent).values();
        for (NodeId o : outs) {
            const auto& v = g.value(o).values();
            all.insert(all.end(), v.begin(), v.end());
        }
        return all;
    };
    CHECK(run() == run());
}

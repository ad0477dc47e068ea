#include <doctest.h>

#include <cmath>
#include <vector>

#include "seqforge/bridge.hpp"
#include "seqforge/grad_check.hpp"
#include "seqforge/interpreter.hpp"
#include "seqforge/rng.hpp"

using namespace seqforge;

TEST_CASE("magnitude: parallel, orthogonal, and mixed rows") {
    SUBCASE("identical nonzero rows give the all-ones matrix") {
        Tensor h({3, 2}, {1.0, 2.0, 1.0, 2.0, 1.0, 2.0});
        Graph g;
        const Tensor& mag = g.value(magnitude(g, g.constant(h)));
        for (double v : mag.values()) CHECK(v == doctest::Approx(1.0));
    }
    SUBCASE("orthogonal rows give the identity") {
        Tensor h({2, 2}, {1.0, 0.0, 0.0, 3.0});
        Graph g;
        const Tensor& mag = g.value(magnitude(g, g.constant(h)));
        CHECK(mag.at(0, 0) == 1.0);
        CHECK(mag.at(1, 1) == 1.0);
        CHECK(mag.at(0, 1) == doctest::Approx(0.0));
        CHECK(mag.at(1, 0) == doctest::Approx(0.0));
    }
    SUBCASE("hand dot products for (1,0), (0,1), (1,1)/sqrt(2)") {
        const double s = 1.0 / std::sqrt(2.0);
        Tensor h({3, 2}, {1.0, 0.0, 0.0, 1.0, s, s});
        Graph g;
        const Tensor& mag = g.value(magnitude(g, g.constant(h)));
        CHECK(mag.at(0, 1) == doctest::Approx(0.0));
        CHECK(mag.at(0, 2) == doctest::Approx(s));
        CHECK(mag.at(1, 2) == doctest::Approx(s));
        CHECK(mag.at(0, 0) == doctest::Approx(1.0));
    }
}

TEST_CASE("sign_matrix: direct application of the penalty/reward rule") {
    SUBCASE("ids [1,1,2]") {
        Tensor s = sign_matrix({1, 1, 2});
        const double expect[3][3] = {{-1, -1, 1}, {-1, -1, 1}, {1, 1, -1}};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) CHECK(s.at(i, j) == expect[i][j]);
    }
    SUBCASE("all ids equal rewards everything") {
        Tensor s = sign_matrix({4, 4, 4, 4});
        for (double v : s.values()) CHECK(v == -1.0);
    }
    SUBCASE("all ids distinct penalizes everything off-diagonal") {
        Tensor s = sign_matrix({0, 1, 2});
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) CHECK(s.at(i, j) == (i == j ? -1.0 : 1.0));
    }
}

TEST_CASE("IRL is the elementwise product of MAG and SIGN") {
    Rng rng(2);
    Tensor h({4, 3});
    for (auto& v : h.values()) v = rng.normal();
    Tensor sign = sign_matrix({0, 1, 0, 2});
    Graph g;
    NodeId mag = magnitude(g, g.constant(h));
    NodeId irl = g.mul(mag, g.constant(sign));
    for (std::size_t i = 0; i < 16; ++i)
        CHECK(g.value(irl)[i] == g.value(mag)[i] * sign[i]);
}

TEST_CASE("all-equal ids make every IRL entry non-positive") {
    Rng rng(5);
    Tensor h({4, 3});
    for (auto& v : h.values()) v = rng.normal();
    // make rows positively correlated so MAG is non-negative
    for (std::size_t r = 0; r < 4; ++r) h.at(r, 0) = 3.0 + std::abs(h.at(r, 0));
    Tensor sign = sign_matrix({1, 1, 1, 1});
    Graph g;
    NodeId irl = g.mul(magnitude(g, g.constant(h)), g.constant(sign));
    const Tensor& mag = g.value(magnitude(g, g.constant(h)));
    for (std::size_t i = 0; i < 16; ++i) {
        if (mag[i] >= 0.0) CHECK(g.value(irl)[i] <= 0.0);
    }
}

TEST_CASE("reduce_irl: softmax of the learned row scores") {
    SUBCASE("all-zero IRL gives the uniform vector") {
        Graph g;
        Tensor w({4}, {0.3, -0.2, 0.8, 0.1});
        NodeId reduced = reduce_irl(g, g.constant(Tensor({4, 4})), g.constant(w));
        for (double v : g.value(reduced).values()) CHECK(v == doctest::Approx(0.25));
    }
    SUBCASE("a dominant row score saturates toward one") {
        Graph g;
        Tensor irl({2, 2}, {50.0, 0.0, 0.0, 0.0});
        Tensor w({2}, {1.0, 0.0});
        NodeId reduced = reduce_irl(g, g.constant(irl), g.constant(w));
        CHECK(g.value(reduced)[0] > 0.99999);
    }
    SUBCASE("random 4x4 against a hand softmax to 1e-12") {
        Rng rng(9);
        Tensor irl({4, 4}), w({4});
        for (auto& v : irl.values()) v = rng.normal();
        for (auto& v : w.values()) v = rng.normal();
        Graph g;
        NodeId reduced = reduce_irl(g, g.constant(irl), g.constant(w));
        // hand computation
        double scores[4], mx = -1e300, denom = 0.0;
        for (int i = 0; i < 4; ++i) {
            scores[i] = 0.0;
            for (int j = 0; j < 4; ++j) scores[i] += irl.at(i, j) * w[j];
            mx = std::max(mx, scores[i]);
        }
        for (double& sc : scores) {
            sc = std::exp(sc - mx);
            denom += sc;
        }
        for (int i = 0; i < 4; ++i)
            CHECK(std::abs(g.value(reduced)[i] - scores[i] / denom) < 1e-12);
    }
}

TEST_CASE("bridge_loss: matching, hand arithmetic, and positivity") {
    SUBCASE("exact match gives zero") {
        Graph g;
        Tensor c({3}, {0.2, 0.5, 0.3});
        NodeId reduced = g.constant(c);
        CHECK(g.value(bridge_loss(g, c, reduced)).item() == 0.0);
    }
    SUBCASE("zero activations vs uniform quarter vector") {
        Graph g;
        Tensor c({4});  // zeros
        NodeId reduced = g.constant(Tensor::full({4}, 0.25));
        CHECK(g.value(bridge_loss(g, c, reduced)).item() == doctest::Approx(1.0 / 16.0));
    }
    SUBCASE("length mismatch rejected") {
        Graph g;
        Tensor c({3});
        NodeId reduced = g.constant(Tensor({4}));
        CHECK_THROWS(bridge_loss(g, c, reduced));
    }
    SUBCASE("non-negative in general") {
        Rng rng(4);
        Graph g;
        Tensor c({5}), r({5});
        for (auto& v : c.values()) v = std::abs(rng.normal());
        for (auto& v : r.values()) v = rng.uniform();
        CHECK(g.value(bridge_loss(g, c, g.constant(r))).item() >= 0.0);
    }
}

TEST_CASE("bridge gradient flows through MAG into encoder weights (grad_check)") {
    InterpreterConfig cfg{2, {2, 2, 2}, 2};
    InterpreterModel model(cfg, 31);
    const std::size_t S = 3;

    // one player's 3 sequences
    Rng rng(14);
    std::vector<GameSequence> seqs;
    for (std::size_t i = 0; i < S; ++i) {
        GameSequence s;
        for (int t = 0; t < 3; ++t) {
            GameRecord rec;
            rec.features = {rng.normal(), rng.normal()};
            s.games.push_back(rec);
        }
        pad_truncate(s, 3, 2);
        seqs.push_back(std::move(s));
    }
    std::vector<const GameSequence*> ptrs;
    for (const auto& s : seqs) ptrs.push_back(&s);
    auto batch = make_batch(ptrs);

    Tensor sign = sign_matrix({0, 1, 0});
    Tensor c_relu({S}, {0.1, 0.7, 0.2});
    Tensor reducer_init({S}, {0.5, -0.3, 0.2});

    // parameters: all interpreter weights plus the reducer vector
    std::vector<Tensor> init;
    for (std::size_t i = 0; i < model.params().size(); ++i)
        init.push_back(model.params().value(i));
    init.push_back(reducer_init);

    LossFn fn = [&](const std::vector<Tensor>& ps, std::vector<Tensor>* grads) {
        for (std::size_t i = 0; i + 1 < ps.size(); ++i) model.params().value(i) = ps[i];
        Graph g;
        auto bound = model.params().bind(g, true);
        NodeId reducer = g.leaf(ps.back());
        auto enc = model.encode(g, bound, batch);
        NodeId mag = magnitude(g, enc.latent);
        NodeId irl = g.mul(mag, g.constant(sign));
        NodeId reduced = reduce_irl(g, irl, reducer);
        NodeId loss = bridge_loss(g, c_relu, reduced);
        if (grads) {
            g.backward(loss);
            grads->clear();
            for (NodeId id : bound) grads->push_back(g.grad(id));
            grads->push_back(g.grad(reducer));
        }
        return g.value(loss).item();
    };
    auto res = grad_check(fn, init, 1e-5);
    CHECK(res.finite);
    CHECK(res.max_rel_error < 1e-4);
}

TEST_CASE("interpreter_total_loss: exact combination rules") {
    SUBCASE("inactive bridge collapses to recon + (lambda/2) trace exactly") {
        Graph g;
        NodeId recon = g.constant(Tensor::scalar(0.125));
        NodeId trace = g.constant(Tensor::scalar(3.0));
        NodeId total = interpreter_total_loss(g, recon, trace, -1, 0.3, 0.5);
        CHECK(g.value(total).item() == 0.125 + 0.25 * 3.0);
        CHECK(interpreter_total_loss_value(0.125, 3.0, 0.0, false, 0.3, 0.5) ==
              0.125 + 0.25 * 3.0);
    }
    SUBCASE("hand arithmetic at beta=0.3, lambda=0.5") {
        Graph g;
        NodeId total =
            interpreter_total_loss(g, g.constant(Tensor::scalar(2.0)),
                                   g.constant(Tensor::scalar(4.0)),
                                   g.constant(Tensor::scalar(1.0)), 0.3, 0.5);
        CHECK(g.value(total).item() == doctest::Approx(1.6));
    }
    SUBCASE("zero bridge with beta=0.3") {
        Graph g;
        NodeId total =
            interpreter_total_loss(g, g.constant(Tensor::scalar(2.0)),
                                   g.constant(Tensor::scalar(4.0)),
                                   g.constant(Tensor::scalar(0.0)), 0.3, 0.5);
        CHECK(g.value(total).item() == doctest::Approx(0.3 * (2.0 + 0.25 * 4.0)));
    }
    SUBCASE("invalid beta or lambda rejected") {
        Graph g;
        NodeId s = g.constant(Tensor::scalar(1.0));
        CHECK_THROWS(interpreter_total_loss(g, s, s, s, 1.5, 0.5));
        CHECK_THROWS(interpreter_total_loss(g, s, s, s, 0.3, -1.0));
    }
}

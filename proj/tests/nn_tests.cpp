#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "doctest.h"

#include "ade/corpus.hpp"
#include "ade/nn.hpp"

using namespace ade;

namespace {

ModelConfig toy_config() {
    ModelConfig c;
    c.vocab_size = 11;
    c.d_model = 16;
    c.n_layers = 2;
    c.n_heads = 4;
    c.d_ff = 32;
    c.max_seq_len = 16;
    c.seed = 5;
    return c;
}

std::vector<int> toy_tokens() { return {3, 1, 4, 1, 5, 9, 2, 6}; }  // T = 8

// scalar BCE oracle written independently of the library kernel
double bce_oracle(const Tensor& p, const Tensor& y) {
    double sum = 0.0;
    for (size_t i = 0; i < p.numel(); ++i) {
        double pi = std::min(std::max(p[i], 1e-12), 1.0 - 1e-12);
        sum += -(y[i] * std::log(pi) + (1.0 - y[i]) * std::log(1.0 - pi));
    }
    return sum / static_cast<double>(p.numel());
}

}  // namespace

TEST_SUITE("nn") {

TEST_CASE("sigmoid values and stability") {
    CHECK(sigmoid(0.0) == 0.5);
    CHECK(sigmoid(1.0) == doctest::Approx(0.7310585786300049).epsilon(1e-14));
    double hi = sigmoid(700.0);
    CHECK(hi <= 1.0);
    CHECK(std::isfinite(hi));
    double lo = sigmoid(-700.0);
    CHECK(lo > 0.0);
    CHECK(std::isfinite(lo));
    CHECK(sigmoid(5.0) + sigmoid(-5.0) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("bce matches hand values and the scalar oracle") {
    Tensor p({1}), y({1});
    p[0] = 0.5;
    y[0] = 1.0;
    CHECK(bce_loss(p, y) == doctest::Approx(std::log(2.0)).epsilon(1e-12));

    Tensor p2({2}), y2({2});
    p2[0] = 1.0 - 1e-12; y2[0] = 1.0;
    p2[1] = 1e-12;       y2[1] = 0.0;
    CHECK(bce_loss(p2, y2) == doctest::Approx(0.0).epsilon(1e-9));

    SplitMix rng(7);
    for (int iter = 0; iter < 200; ++iter) {
        Tensor pr({16}), yr({16});
        for (size_t i = 0; i < 16; ++i) {
            pr[i] = 0.001 + 0.998 * rng.unit();
            yr[i] = rng.below(2) ? 1.0 : 0.0;
        }
        CHECK(bce_loss(pr, yr) == doctest::Approx(bce_oracle(pr, yr)).epsilon(1e-12));
    }
    Tensor bad({3});
    CHECK_THROWS_AS(bce_loss(p, bad), ShapeMismatch);
}

TEST_CASE("layer norm rows have zero mean and unit variance before affine") {
    SplitMix rng(13);
    Tensor x({4, 8});
    for (size_t i = 0; i < x.numel(); ++i) x[i] = rng.unit() * 10 - 5;
    Tensor gain({8}), bias({8});
    gain.fill(1.0);
    bias.fill(0.0);
    Tensor out, xhat;
    std::vector<double> invstd;
    layer_norm_forward(x, gain, bias, out, xhat, invstd);
    for (size_t r = 0; r < 4; ++r) {
        double mean = 0, var = 0;
        for (size_t c = 0; c < 8; ++c) mean += out.at(r, c);
        mean /= 8;
        for (size_t c = 0; c < 8; ++c) var += (out.at(r, c) - mean) * (out.at(r, c) - mean);
        var /= 8;
        CHECK(std::abs(mean) < 1e-9);
        CHECK(std::abs(var - 1.0) < 1e-9);
    }
}

TEST_CASE("encoder forward shape, determinism, finiteness") {
    auto cfg = toy_config();
    auto params = init_encoder_params(cfg);
    auto H1 = forward_encoder(toy_tokens(), params, cfg);
    CHECK(H1.dim(0) == 8);
    CHECK(H1.dim(1) == cfg.d_model);
    CHECK(H1.all_finite());
    auto H2 = forward_encoder(toy_tokens(), params, cfg);
    for (size_t i = 0; i < H1.numel(); ++i) CHECK(H1[i] == H2[i]);

    auto single = forward_encoder({1}, params, cfg);
    CHECK(single.dim(0) == 1);
}

TEST_CASE("encoder input validation") {
    auto cfg = toy_config();
    auto params = init_encoder_params(cfg);
    CHECK_THROWS_AS(forward_encoder({static_cast<int>(cfg.vocab_size)}, params, cfg),
                    TokenOutOfVocab);
    std::vector<int> too_long(cfg.max_seq_len + 1, 1);
    CHECK_THROWS_AS(forward_encoder(too_long, params, cfg), SequenceTooLong);
}

TEST_CASE("attention weights from the forward cache sum to one per row") {
    auto cfg = toy_config();
    auto params = init_encoder_params(cfg);
    EncoderCache cache;
    (void)forward_encoder(toy_tokens(), params, cfg, &cache);
    for (const auto& layer : cache.layers) {
        for (const auto& head : layer.attn) {
            for (size_t r = 0; r < head.dim(0); ++r) {
                double sum = 0;
                for (size_t c = 0; c < head.dim(1); ++c) sum += head.at(r, c);
                CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("adam single-step hand value and zero-grad fixpoint") {
    ModelConfig cfg;
    ParamSet params;
    Tensor w({1});
    w[0] = 1.0;
    params.add("w", w);
    params.at("w").grad[0] = 1.0;
    AdamState state;
    optimizer_step(params, state, 0.1);
    // after one step m_hat = 1, v_hat = 1: w = 1 - 0.1 * 1/(1 + 1e-8)
    CHECK(params.at("w").value[0] ==
          doctest::Approx(1.0 - 0.1 / (1.0 + 1e-8)).epsilon(1e-15));

    params.at("w").grad[0] = 0.0;
    ParamSet fresh;
    Tensor w2({1});
    w2[0] = 2.5;
    fresh.add("w", w2);
    AdamState s2;
    optimizer_step(fresh, s2, 0.1);
    CHECK(fresh.at("w").value[0] == 2.5);
}

TEST_CASE("adam is deterministic over repeated runs") {
    auto run = [] {
        ParamSet params;
        Tensor w({4});
        for (size_t i = 0; i < 4; ++i) w[i] = static_cast<double>(i);
        params.add("w", w);
        AdamState st;
        SplitMix rng(3);
        for (int step = 0; step < 100; ++step) {
            for (size_t i = 0; i < 4; ++i) params.at("w").grad[i] = rng.unit() - 0.5;
            optimizer_step(params, st, 0.01);
        }
        return params.at("w").value;
    };
    auto a = run();
    auto b = run();
    for (size_t i = 0; i < 4; ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("grad_check passes on the toy encoder") {
    auto cfg = toy_config();
    auto params = init_encoder_params(cfg);
    const auto ids = toy_tokens();

    // loss = mean of sigmoid-squashed hidden sum per token, an arbitrary
    // smooth scalar through every layer
    auto loss_fn = [&]() {
        auto H = forward_encoder(ids, params, cfg);
        double loss = 0;
        for (size_t t = 0; t < H.dim(0); ++t) {
            double s = 0;
            for (size_t j = 0; j < H.dim(1); ++j) s += H.at(t, j);
            loss += sigmoid(s);
        }
        return loss / static_cast<double>(H.dim(0));
    };

    params.zero_grad();
    EncoderCache cache;
    auto H = forward_encoder(ids, params, cfg, &cache);
    Tensor d_H({H.dim(0), H.dim(1)});
    for (size_t t = 0; t < H.dim(0); ++t) {
        double s = 0;
        for (size_t j = 0; j < H.dim(1); ++j) s += H.at(t, j);
        double sg = sigmoid(s);
        double d = sg * (1 - sg) / static_cast<double>(H.dim(0));
        for (size_t j = 0; j < H.dim(1); ++j) d_H.at(t, j) = d;
    }
    backward_encoder(d_H, cache, params, cfg);

    auto report = grad_check(params, loss_fn, 300, 1e-5, 17);
    CHECK(report.coordinates >= 300);
    CHECK_MESSAGE(report.max_relative_error < 1e-4,
                  "worst param: " << report.worst_param);
}

TEST_CASE("grad_check flags a corrupted gradient") {
    auto cfg = toy_config();
    auto params = init_encoder_params(cfg);
    const auto ids = toy_tokens();
    auto loss_fn = [&]() {
        auto H = forward_encoder(ids, params, cfg);
        double loss = 0;
        for (size_t i = 0; i < H.numel(); ++i) loss += H[i] * H[i];
        return loss;
    };
    params.zero_grad();
    EncoderCache cache;
    auto H = forward_encoder(ids, params, cfg, &cache);
    Tensor d_H({H.dim(0), H.dim(1)});
    for (size_t i = 0; i < H.numel(); ++i) d_H[i] = 2.0 * H[i];
    backward_encoder(d_H, cache, params, cfg);

    // corrupt one well-known parameter's gradient
    auto& g = params.at("tok_emb").grad;
    for (size_t i = 0; i < g.numel(); ++i) g[i] += 0.37;

    auto report = grad_check(params, loss_fn, 400, 1e-5, 17);
    CHECK(report.max_relative_error > 1e-2);
}

TEST_CASE("checkpoint round-trips parameters exactly") {
    auto cfg = toy_config();
    auto params = init_encoder_params(cfg);
    auto path = (std::filesystem::temp_directory_path() / "ade_ckpt_test.ade1").string();
    save_params(path, params);
    auto loaded = load_params(path);
    std::filesystem::remove(path);

    REQUIRE(loaded.all().size() == params.all().size());
    for (const auto& [name, p] : params.all()) {
        REQUIRE(loaded.has(name));
        const auto& q = loaded.at(name).value;
        REQUIRE(q.numel() == p.value.numel());
        for (size_t i = 0; i < q.numel(); ++i) CHECK(q[i] == p.value[i]);
    }
}

TEST_CASE("checkpoint rejects bad magic") {
    auto path = (std::filesystem::temp_directory_path() / "ade_ckpt_bad.ade1").string();
    {
        std::ofstream out(path, std::ios::binary);
        out << "NOPE garbage";
    }
    CHECK_THROWS(load_params(path));
    std::filesystem::remove(path);
}

TEST_CASE("tensor matmul helpers agree with scalar loops") {
    SplitMix rng(21);
    Tensor a({3, 5}), b({5, 4});
    for (size_t i = 0; i < a.numel(); ++i) a[i] = rng.unit() - 0.5;
    for (size_t i = 0; i < b.numel(); ++i) b[i] = rng.unit() - 0.5;
    Tensor c({3, 4});
    matmul(a, b, c);
    for (size_t i = 0; i < 3; ++i)
        for (size_t j = 0; j < 4; ++j) {
            double s = 0;
            for (size_t k = 0; k < 5; ++k) s += a.at(i, k) * b.at(k, j);
            CHECK(c.at(i, j) == doctest::Approx(s).epsilon(1e-12));
        }

    Tensor bt({4, 5});
    for (size_t i = 0; i < bt.numel(); ++i) bt[i] = rng.unit() - 0.5;
    Tensor cbt({3, 4});
    matmul_bt(a, bt, cbt);  // a . bt^T
    for (size_t i = 0; i < 3; ++i)
        for (size_t j = 0; j < 4; ++j) {
            double s = 0;
            for (size_t k = 0; k < 5; ++k) s += a.at(i, k) * bt.at(j, k);
            CHECK(cbt.at(i, j) == doctest::Approx(s).epsilon(1e-12));
        }
}

}  // TEST_SUITE

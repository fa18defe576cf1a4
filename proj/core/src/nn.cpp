#include "ade/nn.hpp"

#include <algorithm>
#include <set>
#include <cmath>
#include <cstring>
#include <fstream>

#include "ade/corpus.hpp"

namespace ade {

namespace {

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;

double gelu(double x) {
    return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + kGeluA * x * x * x)));
}

double gelu_grad(double x) {
    double u = kGeluC * (x + kGeluA * x * x * x);
    double t = std::tanh(u);
    return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * kGeluA * x * x);
}

double gauss(SplitMix& rng) {
    // Box-Muller
    double u1 = rng.unit();
    double u2 = rng.unit();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

Tensor randn(std::vector<size_t> shape, double std_dev, SplitMix& rng) {
    Tensor t(std::move(shape));
    for (size_t i = 0; i < t.numel(); ++i) t[i] = std_dev * gauss(rng);
    return t;
}

constexpr double kLnEps = 1e-12;

}  // namespace

Param& ParamSet::add(const std::string& name, Tensor value) {
    Tensor grad(value.shape());
    auto [it, inserted] = params_.emplace(name, Param{std::move(value), std::move(grad)});
    if (!inserted) throw std::runtime_error("duplicate parameter: " + name);
    return it->second;
}

Param& ParamSet::at(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw std::runtime_error("no such parameter: " + name);
    return it->second;
}

const Param& ParamSet::at(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw std::runtime_error("no such parameter: " + name);
    return it->second;
}

void ParamSet::zero_grad() {
    for (auto& [_, p] : params_) p.grad.zero();
}

void ParamSet::scale_grad(double s) {
    for (auto& [_, p] : params_) p.grad.scale_(s);
}

size_t ParamSet::total_parameters() const {
    size_t n = 0;
    for (const auto& [_, p] : params_) n += p.value.numel();
    return n;
}

ParamSet init_encoder_params(const ModelConfig& config, const std::string& prefix) {
    SplitMix rng(config.seed * 0x9e3779b9ULL + 17);
    const size_t d = config.d_model;
    ParamSet params;
    params.add(prefix + "tok_emb", randn({config.vocab_size, d}, 0.1, rng));
    params.add(prefix + "pos_emb", randn({config.max_seq_len, d}, 0.1, rng));
    for (size_t l = 0; l < config.n_layers; ++l) {
        const std::string p = prefix + "enc" + std::to_string(l) + ".";
        const double w_std = 1.0 / std::sqrt(static_cast<double>(d));
        params.add(p + "wq", randn({d, d}, w_std, rng));
        params.add(p + "wk", randn({d, d}, w_std, rng));
        params.add(p + "wv", randn({d, d}, w_std, rng));
        params.add(p + "wo", randn({d, d}, w_std, rng));
        params.add(p + "bq", Tensor({d}));
        params.add(p + "bk", Tensor({d}));
        params.add(p + "bv", Tensor({d}));
        params.add(p + "bo", Tensor({d}));
        Tensor ones({d});
        ones.fill(1.0);
        params.add(p + "ln1.g", ones);
        params.add(p + "ln1.b", Tensor({d}));
        params.add(p + "ln2.g", ones);
        params.add(p + "ln2.b", Tensor({d}));
        params.add(p + "w1", randn({d, config.d_ff}, w_std, rng));
        params.add(p + "b1", Tensor({config.d_ff}));
        params.add(p + "w2", randn({config.d_ff, d}, 1.0 / std::sqrt(static_cast<double>(config.d_ff)), rng));
        params.add(p + "b2", Tensor({d}));
    }
    return params;
}

void layer_norm_forward(const Tensor& x, const Tensor& gain, const Tensor& bias,
                        Tensor& out, Tensor& xhat, std::vector<double>& invstd) {
    const size_t rows = x.dim(0), d = x.dim(1);
    out = Tensor({rows, d});
    xhat = Tensor({rows, d});
    invstd.assign(rows, 0.0);
    for (size_t i = 0; i < rows; ++i) {
        double mean = 0.0;
        for (size_t j = 0; j < d; ++j) mean += x.at(i, j);
        mean /= static_cast<double>(d);
        double var = 0.0;
        for (size_t j = 0; j < d; ++j) {
            double c = x.at(i, j) - mean;
            var += c * c;
        }
        var /= static_cast<double>(d);
        const double is = 1.0 / std::sqrt(var + kLnEps);
        invstd[i] = is;
        for (size_t j = 0; j < d; ++j) {
            double xh = (x.at(i, j) - mean) * is;
            xhat.at(i, j) = xh;
            out.at(i, j) = gain[j] * xh + bias[j];
        }
    }
}

namespace {

void layer_norm_backward(const Tensor& d_out, const Tensor& xhat,
                         const std::vector<double>& invstd, const Tensor& gain,
                         Tensor& d_x, Tensor& d_gain, Tensor& d_bias) {
    const size_t rows = d_out.dim(0), d = d_out.dim(1);
    d_x = Tensor({rows, d});
    for (size_t i = 0; i < rows; ++i) {
        double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
        for (size_t j = 0; j < d; ++j) {
            const double dy = d_out.at(i, j);
            d_gain[j] += dy * xhat.at(i, j);
            d_bias[j] += dy;
            const double dxh = dy * gain[j];
            sum_dxhat += dxh;
            sum_dxhat_xhat += dxh * xhat.at(i, j);
        }
        const double inv_d = 1.0 / static_cast<double>(d);
        for (size_t j = 0; j < d; ++j) {
            const double dxh = d_out.at(i, j) * gain[j];
            d_x.at(i, j) = invstd[i] * (dxh - sum_dxhat * inv_d -
                                        xhat.at(i, j) * sum_dxhat_xhat * inv_d);
        }
    }
}

// rows = T, head columns [h*dk, (h+1)*dk)
Tensor head_slice(const Tensor& m, size_t h, size_t dk) {
    const size_t t = m.dim(0);
    Tensor out({t, dk});
    for (size_t i = 0; i < t; ++i)
        for (size_t j = 0; j < dk; ++j) out.at(i, j) = m.at(i, h * dk + j);
    return out;
}

void head_insert_add(Tensor& m, const Tensor& part, size_t h, size_t dk) {
    const size_t t = part.dim(0);
    for (size_t i = 0; i < t; ++i)
        for (size_t j = 0; j < dk; ++j) m.at(i, h * dk + j) += part.at(i, j);
}

void add_bias(Tensor& m, const Tensor& b) {
    const size_t rows = m.dim(0), cols = m.dim(1);
    for (size_t i = 0; i < rows; ++i)
        for (size_t j = 0; j < cols; ++j) m.at(i, j) += b[j];
}

void bias_grad(const Tensor& d_m, Tensor& d_b) {
    const size_t rows = d_m.dim(0), cols = d_m.dim(1);
    for (size_t i = 0; i < rows; ++i)
        for (size_t j = 0; j < cols; ++j) d_b[j] += d_m.at(i, j);
}

}  // namespace

Tensor forward_encoder(const std::vector<int>& token_ids, const ParamSet& params,
                       const ModelConfig& config, EncoderCache* cache,
                       const std::string& prefix, const Tensor* extra) {
    const size_t t_len = token_ids.size();
    if (t_len > config.max_seq_len) throw SequenceTooLong(t_len);
    const size_t d = config.d_model;
    const size_t nh = config.n_heads;
    const size_t dk = d / nh;
    const Tensor& tok_emb = params.at(prefix + "tok_emb").value;
    const Tensor& pos_emb = params.at(prefix + "pos_emb").value;

    Tensor x({t_len, d});
    for (size_t i = 0; i < t_len; ++i) {
        const int id = token_ids[i];
        if (id < 0 || static_cast<size_t>(id) >= config.vocab_size) throw TokenOutOfVocab(id);
        for (size_t j = 0; j < d; ++j) {
            x.at(i, j) = tok_emb.at(static_cast<size_t>(id), j) + pos_emb.at(i, j);
            if (extra) x.at(i, j) += extra->at(i, j);
        }
    }
    if (cache) {
        cache->token_ids = token_ids;
        cache->x0 = x;
        cache->layers.assign(config.n_layers, LayerCache{});
    }

    const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
    Tensor q, k, v, ctx({t_len, d}), attn_out, tmp;
    for (size_t l = 0; l < config.n_layers; ++l) {
        const std::string p = prefix + "enc" + std::to_string(l) + ".";
        LayerCache* lc = cache ? &cache->layers[l] : nullptr;
        if (lc) lc->x_in = x;

        matmul(x, params.at(p + "wq").value, q);
        add_bias(q, params.at(p + "bq").value);
        matmul(x, params.at(p + "wk").value, k);
        add_bias(k, params.at(p + "bk").value);
        matmul(x, params.at(p + "wv").value, v);
        add_bias(v, params.at(p + "bv").value);
        if (lc) {
            lc->q = q;
            lc->k = k;
            lc->v = v;
            lc->attn.assign(nh, Tensor{});
        }

        ctx = Tensor({t_len, d});
        for (size_t h = 0; h < nh; ++h) {
            Tensor qh = head_slice(q, h, dk);
            Tensor kh = head_slice(k, h, dk);
            Tensor vh = head_slice(v, h, dk);
            Tensor scores;
            matmul_bt(qh, kh, scores);
            scores.scale_(scale);
            // row softmax with max subtraction
            for (size_t i = 0; i < t_len; ++i) {
                double mx = scores.at(i, 0);
                for (size_t j = 1; j < t_len; ++j) mx = std::max(mx, scores.at(i, j));
                double sum = 0.0;
                for (size_t j = 0; j < t_len; ++j) {
                    double e = std::exp(scores.at(i, j) - mx);
                    scores.at(i, j) = e;
                    sum += e;
                }
                for (size_t j = 0; j < t_len; ++j) scores.at(i, j) /= sum;
            }
            Tensor ch;
            matmul(scores, vh, ch);
            head_insert_add(ctx, ch, h, dk);
            if (lc) lc->attn[h] = std::move(scores);
        }
        if (lc) lc->ctx = ctx;

        matmul(ctx, params.at(p + "wo").value, attn_out);
        add_bias(attn_out, params.at(p + "bo").value);

        Tensor s1 = x;
        s1.add_(attn_out);
        if (lc) lc->s1 = s1;

        Tensor ln1_out, ln1_xhat;
        std::vector<double> ln1_invstd;
        layer_norm_forward(s1, params.at(p + "ln1.g").value, params.at(p + "ln1.b").value,
                           ln1_out, ln1_xhat, ln1_invstd);
        if (lc) {
            lc->ln1_out = ln1_out;
            lc->ln1_xhat = std::move(ln1_xhat);
            lc->ln1_invstd = std::move(ln1_invstd);
        }

        Tensor u;
        matmul(ln1_out, params.at(p + "w1").value, u);
        add_bias(u, params.at(p + "b1").value);
        Tensor g(u.shape());
        for (size_t i = 0; i < u.numel(); ++i) g[i] = gelu(u[i]);
        if (lc) {
            lc->ff_u = u;
            lc->ff_g = g;
        }
        Tensor ff_out;
        matmul(g, params.at(p + "w2").value, ff_out);
        add_bias(ff_out, params.at(p + "b2").value);

        Tensor s2 = ln1_out;
        s2.add_(ff_out);
        if (lc) lc->s2 = s2;

        Tensor ln2_out, ln2_xhat;
        std::vector<double> ln2_invstd;
        layer_norm_forward(s2, params.at(p + "ln2.g").value, params.at(p + "ln2.b").value,
                           ln2_out, ln2_xhat, ln2_invstd);
        if (lc) {
            lc->ln2_xhat = std::move(ln2_xhat);
            lc->ln2_invstd = std::move(ln2_invstd);
            lc->ln2_out = ln2_out;
        }
        x = std::move(ln2_out);
    }
    return x;
}

void backward_encoder(const Tensor& d_H, const EncoderCache& cache, ParamSet& params,
                      const ModelConfig& config, const std::string& prefix,
                      Tensor* d_extra) {
    const size_t t_len = cache.token_ids.size();
    const size_t d = config.d_model;
    const size_t nh = config.n_heads;
    const size_t dk = d / nh;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dk));

    Tensor dx = d_H;
    for (size_t l = config.n_layers; l-- > 0;) {
        const std::string p = prefix + "enc" + std::to_string(l) + ".";
        const LayerCache& lc = cache.layers[l];

        // ln2
        Tensor d_s2;
        layer_norm_backward(dx, lc.ln2_xhat, lc.ln2_invstd, params.at(p + "ln2.g").value,
                            d_s2, params.at(p + "ln2.g").grad, params.at(p + "ln2.b").grad);

        // s2 = ln1_out + ff_out
        Tensor d_ff_out = d_s2;
        Tensor d_ln1_out = d_s2;

        // ff_out = gelu(u) * w2 + b2
        bias_grad(d_ff_out, params.at(p + "b2").grad);
        Tensor d_g;
        matmul_bt(d_ff_out, params.at(p + "w2").value, d_g);
        {
            Tensor dw2;
            matmul_at(lc.ff_g, d_ff_out, dw2);
            params.at(p + "w2").grad.add_(dw2);
        }
        Tensor d_u(d_g.shape());
        for (size_t i = 0; i < d_u.numel(); ++i) d_u[i] = d_g[i] * gelu_grad(lc.ff_u[i]);
        bias_grad(d_u, params.at(p + "b1").grad);
        {
            Tensor dw1;
            matmul_at(lc.ln1_out, d_u, dw1);
            params.at(p + "w1").grad.add_(dw1);
        }
        {
            Tensor d_ln1_from_ff;
            matmul_bt(d_u, params.at(p + "w1").value, d_ln1_from_ff);
            d_ln1_out.add_(d_ln1_from_ff);
        }

        // ln1
        Tensor d_s1;
        layer_norm_backward(d_ln1_out, lc.ln1_xhat, lc.ln1_invstd, params.at(p + "ln1.g").value,
                            d_s1, params.at(p + "ln1.g").grad, params.at(p + "ln1.b").grad);

        // s1 = x_in + attn_out
        Tensor d_attn_out = d_s1;
        Tensor d_x_in = d_s1;

        // attn_out = ctx * wo + bo
        bias_grad(d_attn_out, params.at(p + "bo").grad);
        Tensor d_ctx;
        matmul_bt(d_attn_out, params.at(p + "wo").value, d_ctx);
        {
            Tensor dwo;
            matmul_at(lc.ctx, d_attn_out, dwo);
            params.at(p + "wo").grad.add_(dwo);
        }

        Tensor d_q({t_len, d}), d_k({t_len, d}), d_v({t_len, d});
        for (size_t h = 0; h < nh; ++h) {
            Tensor qh = head_slice(lc.q, h, dk);
            Tensor kh = head_slice(lc.k, h, dk);
            Tensor vh = head_slice(lc.v, h, dk);
            Tensor d_ch = head_slice(d_ctx, h, dk);
            const Tensor& a = lc.attn[h];

            Tensor d_a;
            matmul_bt(d_ch, vh, d_a);
            Tensor d_vh;
            matmul_at(a, d_ch, d_vh);

            // softmax rows
            Tensor d_scores({t_len, t_len});
            for (size_t i = 0; i < t_len; ++i) {
                double dot = 0.0;
                for (size_t j = 0; j < t_len; ++j) dot += d_a.at(i, j) * a.at(i, j);
                for (size_t j = 0; j < t_len; ++j)
                    d_scores.at(i, j) = a.at(i, j) * (d_a.at(i, j) - dot);
            }
            d_scores.scale_(scale);

            Tensor d_qh;
            matmul(d_scores, kh, d_qh);
            Tensor d_kh;
            matmul_at(d_scores, qh, d_kh);
            head_insert_add(d_q, d_qh, h, dk);
            head_insert_add(d_k, d_kh, h, dk);
            head_insert_add(d_v, d_vh, h, dk);
        }

        bias_grad(d_q, params.at(p + "bq").grad);
        bias_grad(d_k, params.at(p + "bk").grad);
        bias_grad(d_v, params.at(p + "bv").grad);
        {
            Tensor dw;
            matmul_at(lc.x_in, d_q, dw);
            params.at(p + "wq").grad.add_(dw);
            matmul_at(lc.x_in, d_k, dw);
            params.at(p + "wk").grad.add_(dw);
            matmul_at(lc.x_in, d_v, dw);
            params.at(p + "wv").grad.add_(dw);
        }
        {
            Tensor d_from_q;
            matmul_bt(d_q, params.at(p + "wq").value, d_from_q);
            d_x_in.add_(d_from_q);
            matmul_bt(d_k, params.at(p + "wk").value, d_from_q);
            d_x_in.add_(d_from_q);
            matmul_bt(d_v, params.at(p + "wv").value, d_from_q);
            d_x_in.add_(d_from_q);
        }
        dx = std::move(d_x_in);
    }

    Tensor& d_tok = params.at(prefix + "tok_emb").grad;
    Tensor& d_pos = params.at(prefix + "pos_emb").grad;
    for (size_t i = 0; i < t_len; ++i) {
        const size_t id = static_cast<size_t>(cache.token_ids[i]);
        for (size_t j = 0; j < d; ++j) {
            d_tok.at(id, j) += dx.at(i, j);
            d_pos.at(i, j) += dx.at(i, j);
        }
    }
    if (d_extra) *d_extra = dx;
}

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double bce_loss(const Tensor& p, const Tensor& y) {
    if (!p.same_shape(y)) throw ShapeMismatch("bce_loss: shape mismatch");
    constexpr double eps = 1e-12;
    double sum = 0.0;
    for (size_t i = 0; i < p.numel(); ++i) {
        const double pi = std::clamp(p[i], eps, 1.0 - eps);
        sum += -(y[i] * std::log(pi) + (1.0 - y[i]) * std::log(1.0 - pi));
    }
    return sum / static_cast<double>(p.numel());
}

void optimizer_step(ParamSet& params, AdamState& state, double lr, double beta1,
                    double beta2, double eps) {
    ++state.t;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
    for (auto& [name, p] : params.all()) {
        auto mit = state.m.find(name);
        if (mit == state.m.end()) {
            mit = state.m.emplace(name, Tensor(p.value.shape())).first;
            state.v.emplace(name, Tensor(p.value.shape()));
        }
        Tensor& m = mit->second;
        Tensor& v = state.v.at(name);
        if (!m.same_shape(p.grad)) throw ShapeMismatch("optimizer_step: " + name);
        for (size_t i = 0; i < p.value.numel(); ++i) {
            const double g = p.grad[i];
            m[i] = beta1 * m[i] + (1.0 - beta1) * g;
            v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            p.value[i] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

GradCheckReport grad_check(ParamSet& params, const std::function<double()>& loss_fn,
                           size_t n_coords, double eps, uint64_t seed) {
    // flat index space over all parameters, in name order
    std::vector<std::pair<std::string, size_t>> space;
    for (const auto& [name, p] : params.all()) space.emplace_back(name, p.value.numel());
    size_t total = 0;
    for (const auto& [_, n] : space) total += n;

    SplitMix rng(seed);
    GradCheckReport report;
    const size_t samples = std::min(n_coords, total);
    std::vector<uint64_t> picks;
    if (samples == total) {
        for (size_t i = 0; i < total; ++i) picks.push_back(i);
    } else {
        std::set<uint64_t> chosen;
        while (chosen.size() < samples) chosen.insert(rng.below(total));
        picks.assign(chosen.begin(), chosen.end());
    }

    for (uint64_t flat : picks) {
        size_t offset = flat;
        const std::string* name = nullptr;
        for (const auto& [pname, n] : space) {
            if (offset < n) {
                name = &pname;
                break;
            }
            offset -= n;
        }
        Param& p = params.at(*name);
        const double analytic = p.grad[offset];
        const double saved = p.value[offset];
        p.value[offset] = saved + eps;
        const double lp = loss_fn();
        p.value[offset] = saved - eps;
        const double lm = loss_fn();
        p.value[offset] = saved;
        const double fd = (lp - lm) / (2.0 * eps);
        // the denominator floor must sit above the fd roundoff floor
        // (~ |loss| * machine epsilon / eps), or near-zero gradients report
        // pure noise as relative error
        const double floor =
            std::max(1e-6, std::abs(lp) * 1e-16 / eps * 1e2);
        const double rel = std::abs(analytic - fd) /
                           std::max({std::abs(analytic), std::abs(fd), floor});
        ++report.coordinates;
        if (rel > report.max_relative_error) {
            report.max_relative_error = rel;
            report.worst_param = *name;
        }
    }
    return report;
}

namespace {

template <typename T>
void write_le(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_le(std::ifstream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
}

}  // namespace

void save_params(const std::string& path, const ParamSet& params) {
    std::ofstream out(path + ".tmp", std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    out.write("ADE1", 4);
    write_le<uint32_t>(out, static_cast<uint32_t>(params.all().size()));
    for (const auto& [name, p] : params.all()) {
        write_le<uint32_t>(out, static_cast<uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_le<uint32_t>(out, static_cast<uint32_t>(p.value.rank()));
        for (size_t d : p.value.shape()) write_le<uint64_t>(out, d);
        out.write(reinterpret_cast<const char*>(p.value.data()),
                  static_cast<std::streamsize>(p.value.numel() * sizeof(double)));
    }
    out.close();
    std::rename((path + ".tmp").c_str(), path.c_str());
}

ParamSet load_params(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[4];
    in.read(magic, 4);
    if (std::memcmp(magic, "ADE1", 4) != 0)
        throw std::runtime_error("bad checkpoint magic in " + path);
    ParamSet params;
    const uint32_t count = read_le<uint32_t>(in);
    for (uint32_t i = 0; i < count; ++i) {
        const uint32_t name_len = read_le<uint32_t>(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        const uint32_t rank = read_le<uint32_t>(in);
        std::vector<size_t> shape(rank);
        for (auto& d : shape) d = static_cast<size_t>(read_le<uint64_t>(in));
        Tensor value(shape);
        in.read(reinterpret_cast<char*>(value.data()),
                static_cast<std::streamsize>(value.numel() * sizeof(double)));
        if (!in) throw std::runtime_error("truncated checkpoint: " + path);
        params.add(name, std::move(value));
    }
    return params;
}

}  // namespace ade

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ade/tensor.hpp"

namespace ade {

struct TokenOutOfVocab : std::runtime_error {
    explicit TokenOutOfVocab(int id) : std::runtime_error("token id out of vocab: " + std::to_string(id)) {}
};
struct SequenceTooLong : std::runtime_error {
    explicit SequenceTooLong(size_t t) : std::runtime_error("sequence length " + std::to_string(t) + " exceeds max_seq_len") {}
};

struct ModelConfig {
    size_t vocab_size = 0;
    size_t d_model = 64;
    size_t n_layers = 2;
    size_t n_heads = 4;
    size_t d_ff = 128;        // feed-forward inner width
    size_t max_seq_len = 128;
    uint64_t seed = 1;
};

struct Param {
    Tensor value;
    Tensor grad;
};

// Named trainable parameters; every parameter carries a same-shape grad slot.
class ParamSet {
  public:
    Param& add(const std::string& name, Tensor value);
    Param& at(const std::string& name);
    const Param& at(const std::string& name) const;
    bool has(const std::string& name) const { return params_.count(name) != 0; }

    std::map<std::string, Param>& all() { return params_; }
    const std::map<std::string, Param>& all() const { return params_; }

    void zero_grad();
    void scale_grad(double s);
    size_t total_parameters() const;

  private:
    std::map<std::string, Param> params_;
};

// Token + learned position embeddings, then n_layers of post-LN transformer
// blocks (self-attention -> add&norm -> feed-forward -> add&norm).
ParamSet init_encoder_params(const ModelConfig& config, const std::string& prefix = "");

struct LayerCache {
    Tensor x_in;        // [T,d] block input
    Tensor q, k, v;     // [T,d]
    std::vector<Tensor> attn;  // per head [T,T] softmax weights
    Tensor ctx;         // [T,d] concatenated head outputs
    Tensor s1;          // x_in + attention projection
    Tensor ln1_xhat, ln1_out;
    std::vector<double> ln1_invstd;
    Tensor ff_u;        // [T,d_ff] pre-activation
    Tensor ff_g;        // gelu(ff_u)
    Tensor s2;          // ln1_out + ff projection
    Tensor ln2_xhat, ln2_out;
    std::vector<double> ln2_invstd;
};

struct EncoderCache {
    std::vector<int> token_ids;
    Tensor x0;  // embeddings
    std::vector<LayerCache> layers;
};

// Returns H [T, d_model]. Cache, when given, holds everything backward needs.
// `extra`, when given, is a [T, d_model] additive term on the embeddings.
Tensor forward_encoder(const std::vector<int>& token_ids, const ParamSet& params,
                       const ModelConfig& config, EncoderCache* cache = nullptr,
                       const std::string& prefix = "", const Tensor* extra = nullptr);

// Accumulates parameter gradients for d_H (dLoss/dH) captured by `cache`.
// `d_extra`, when given, receives dLoss/d(embedding input).
void backward_encoder(const Tensor& d_H, const EncoderCache& cache, ParamSet& params,
                      const ModelConfig& config, const std::string& prefix = "",
                      Tensor* d_extra = nullptr);

// Numerically stable logistic; exact 0.5 at z = 0, finite out to |z| ~ 700.
double sigmoid(double z);

// Mean binary cross-entropy with probability clamp at 1e-12.
double bce_loss(const Tensor& p, const Tensor& y);

// Layer normalization helpers shared by encoder and tests.
void layer_norm_forward(const Tensor& x, const Tensor& gain, const Tensor& bias,
                        Tensor& out, Tensor& xhat, std::vector<double>& invstd);

struct AdamState {
    std::map<std::string, Tensor> m, v;
    uint64_t t = 0;
};

// Adam with bias correction. Deterministic; grads left untouched.
void optimizer_step(ParamSet& params, AdamState& state, double lr,
                    double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

struct GradCheckReport {
    double max_relative_error = 0.0;
    size_t coordinates = 0;
    std::string worst_param;
};

// Central finite differences over >= n_coords sampled parameter coordinates.
// `loss_fn` must recompute the loss from current parameter values; analytic
// gradients are taken from the grad slots as found at call time.
GradCheckReport grad_check(ParamSet& params, const std::function<double()>& loss_fn,
                           size_t n_coords = 200, double eps = 1e-5, uint64_t seed = 1);

// Checkpoint container: magic "ADE1" then length-prefixed little-endian
// name/shape/data records.
void save_params(const std::string& path, const ParamSet& params);
ParamSet load_params(const std::string& path);

}  // namespace ade

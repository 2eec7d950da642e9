#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

namespace dpl {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Flat view over one trainable parameter and its gradient buffer, used
// by the optimizer, the gradient checker and checkpointing.
struct ParamRef {
  std::string name;
  double* value = nullptr;
  double* grad = nullptr;
  Eigen::Index rows = 0, cols = 0;

  Eigen::Index size() const { return rows * cols; }
};

ParamRef param_ref(const std::string& name, Mat& value, Mat& grad);
ParamRef param_ref(const std::string& name, Vec& value, Vec& grad);

// Shape + row-major values; the serialization form of a parameter.
struct Tensor {
  std::vector<Eigen::Index> shape;
  std::vector<double> values;

  static Tensor from(const ParamRef& ref);
  void copy_to(const ParamRef& ref) const;
  bool all_finite() const;
};

// ---------------------------------------------------------------------------
// Embeddings

struct EmbeddingTable {
  static constexpr const char* kUnknownToken = "<unk>";

  std::vector<std::string> tokens;              // row order; row 0 = <unk>
  std::unordered_map<std::string, int> vocab;   // token -> row
  Mat matrix;                                   // |vocab| x dim
  Mat grad;                                     // same shape iff trainable
  bool trainable = false;

  int dim() const { return static_cast<int>(matrix.cols()); }
  int rows() const { return static_cast<int>(matrix.rows()); }
  int row_of(const std::string& token) const;   // 0 for unknown tokens
  void zero_grad();

  // Text format: optional "count dim" header, then "token v1 .. vd"
  // per line. The unknown row is zero-initialized.
  static EmbeddingTable load_text(std::istream& in);
  // Uniform [-scale, scale] rows for the given vocabulary.
  static EmbeddingTable random_init(const std::vector<std::string>& vocabulary, int dim,
                                    std::mt19937_64& rng, bool trainable,
                                    double scale = 0.1);
};

// Length-preserving lookup; columns are time steps. Unknown tokens map
// to the reserved row. Throws ValidationError on an empty sequence.
Mat embed(const std::vector<std::string>& tokens, const EmbeddingTable& table);
std::vector<int> embed_rows(const std::vector<std::string>& tokens,
                            const EmbeddingTable& table);

// ---------------------------------------------------------------------------
// Recurrent encoder (LSTM cell)

enum class Direction { Forward, Backward };

struct LstmParams {
  int input_size = 0;
  int hidden_size = 0;
  Direction direction = Direction::Forward;

  Mat Wxi, Whi, Wxf, Whf, Wxo, Who, Wxc, Whc;
  Vec bi, bf, bo, bc;
  Mat gWxi, gWhi, gWxf, gWhf, gWxo, gWho, gWxc, gWhc;
  Vec gbi, gbf, gbo, gbc;

  LstmParams() = default;
  LstmParams(int input, int hidden, Direction dir = Direction::Forward);

  // Uniform [-1/sqrt(hidden), 1/sqrt(hidden)], forget bias 1.
  void init_uniform(std::mt19937_64& rng);
  void zero_grad();
  std::vector<ParamRef> params(const std::string& prefix);
};

// Per-sequence activations kept for backprop. X/I/F/O/G/C/TC/H are in
// processing order (already reversed for Direction::Backward).
struct LstmCache {
  Mat X, I, F, O, G, C, TC, H;
};

// Hidden state sequence (hidden_size x n), in original time order for
// both directions. Throws ShapeError on input-size mismatch.
Mat recurrent_forward(const Mat& seq, const LstmParams& params, LstmCache* cache = nullptr);

// dH is in original time order; returns d(input) in original time
// order and accumulates parameter gradients.
Mat recurrent_backward(const Mat& dH, LstmParams& params, const LstmCache& cache);

// Per-position concatenation [forward; backward], size 2*hidden x n.
Mat bidirectional_forward(const Mat& seq, const LstmParams& fwd, const LstmParams& bwd,
                          LstmCache* fwd_cache = nullptr, LstmCache* bwd_cache = nullptr);
Mat bidirectional_backward(const Mat& dH, LstmParams& fwd, LstmParams& bwd,
                           const LstmCache& fwd_cache, const LstmCache& bwd_cache);

// ---------------------------------------------------------------------------
// Pooling

// A[j] = max over time of H(j, t). Ties resolve to the earliest step.
Vec maxpool_time(const Mat& states, std::vector<Eigen::Index>* argmax = nullptr);
Mat maxpool_time_backward(const Vec& dA, const std::vector<Eigen::Index>& argmax,
                          Eigen::Index steps);

// ---------------------------------------------------------------------------
// Dense / interaction layers

enum class Activation { Tanh, None };

struct DenseCache {
  Mat input, output;
};

struct DenseParams {
  Mat W;
  Vec b;
  Activation activation = Activation::Tanh;
  Mat gW;
  Vec gb;

  DenseParams() = default;
  DenseParams(int input, int output, Activation act);

  void init_uniform(std::mt19937_64& rng);
  void zero_grad();
  std::vector<ParamRef> params(const std::string& prefix);

  Mat forward(const Mat& input, DenseCache* cache = nullptr) const;
  Vec forward(const Vec& input) const;
  Mat backward(const Mat& d_output, const DenseCache& cache);
};

struct InteractionCache {
  Vec a1, a2, output;
};

struct InteractionParams {
  Mat W1, W2;
  Vec b;
  Mat gW1, gW2;
  Vec gb;

  InteractionParams() = default;
  InteractionParams(int input, int output);

  void init_uniform(std::mt19937_64& rng);
  void zero_grad();
  std::vector<ParamRef> params(const std::string& prefix);

  Vec forward(const Vec& a1, const Vec& a2, InteractionCache* cache = nullptr) const;
  // Returns {dA1, dA2}.
  std::pair<Vec, Vec> backward(const Vec& d_output, const InteractionCache& cache);
};

// tanh(W1*a1 + W2*a2 + b); throws ShapeError on non-conformable shapes.
Vec interaction(const Vec& a1, const Vec& a2, const Mat& W1, const Mat& W2, const Vec& b);

// ---------------------------------------------------------------------------
// Batch normalization (features x batch)

struct BatchNormCache {
  Mat centered, xhat;
  Vec inv_std;
};

struct BatchNormParams {
  Vec gamma, beta;
  Vec running_mean, running_var;
  Vec ggamma, gbeta;
  double momentum = 0.1;
  double eps = 1e-5;

  BatchNormParams() = default;
  explicit BatchNormParams(int dim);

  void zero_grad();
  std::vector<ParamRef> params(const std::string& prefix);

  // train=true normalizes with batch statistics and updates the running
  // averages; train=false uses the running averages.
  Mat forward(const Mat& input, bool train, BatchNormCache* cache = nullptr);
  Mat forward_eval(const Mat& input) const;
  Mat backward(const Mat& d_output, const BatchNormCache& cache);
};

// ---------------------------------------------------------------------------
// Loss, dropout, optimizer

struct SoftmaxResult {
  Vec probs;
  double loss = 0;
};

Vec softmax(const Vec& logits);
// Loss = -log p[gold]; throws ValidationError on an out-of-range index.
SoftmaxResult softmax_xent(const Vec& logits, int gold);
// d(loss)/d(logits) for the result above.
Vec softmax_xent_backward(const Vec& probs, int gold);

double sigmoid(double x);
// Numerically stable binary cross-entropy on a single logit.
double bce_logit(double logit, double target);
double bce_logit_backward(double logit, double target);

// Inverted dropout: train-time survivors scaled by 1/(1-ratio); eval
// (or ratio 0) is the identity. The mask (scaled) is written to
// `mask_out` for backprop when given.
Mat dropout(const Mat& input, double ratio, std::mt19937_64& rng, bool train,
            Mat* mask_out = nullptr);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig cfg;
  long step = 0;
  std::vector<std::vector<double>> m, v;  // aligned with the param list

  explicit AdamState(AdamConfig cfg = {}) : cfg(cfg) {}
  void init(const std::vector<ParamRef>& params);
};

// Standard bias-corrected Adam update over params' grad buffers.
void adam_step(const std::vector<ParamRef>& params, AdamState& state);

// ---------------------------------------------------------------------------
// Gradient checking

struct GradCheckReport {
  double max_rel_err = 0;
  std::string worst_param;
};

// `loss_grad` must zero the gradient buffers, run forward+backward and
// return the loss; `loss_only` must run the same deterministic forward.
// Central differences with the given epsilon, over every parameter
// element (or a deterministic stride when max_per_param > 0).
GradCheckReport grad_check(const std::vector<ParamRef>& params,
                           const std::function<double()>& loss_grad,
                           const std::function<double()>& loss_only,
                           double eps = 1e-5, Eigen::Index max_per_param = -1);

// ---------------------------------------------------------------------------
// Checkpoint container (JSON with shapes, values, vocab, config hash)

struct Checkpoint {
  std::string kind;
  std::string config_json;     // resolved config of the producing run
  std::string config_hash;
  std::vector<std::pair<std::string, Tensor>> tensors;
  std::vector<std::string> vocab;
  std::vector<std::string> inventory;
  int sense_level = 2;

  void add(const ParamRef& ref) { tensors.emplace_back(ref.name, Tensor::from(ref)); }
  const Tensor* find(const std::string& name) const;

  std::string to_json() const;
  static Checkpoint from_json(const std::string& text);
  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);
};

// FNV-1a over a string; the stable config hash used in manifests.
std::string fnv1a_hex(std::string_view text);

}  // namespace dpl

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dpl/corpus.hpp"
#include "dpl/eval.hpp"
#include "dpl/nn.hpp"

namespace dpl {

struct BasicConfig {
  int embed_dim = 300;
  int hidden = 100;
  int interaction = 0;   // 0 -> hidden
  int dense = 0;         // 0 -> hidden / 5
  int n_classes = 0;     // 0 -> |sense inventory at sense_level|
  int sense_level = 2;
  double dropout = 0.25;
  bool location_feature = false;  // Model 2: append f_S before the output layer

  int interaction_size() const { return interaction > 0 ? interaction : hidden; }
  int dense_size() const { return dense > 0 ? dense : hidden / 5; }
  int output_classes() const;
  std::string to_json() const;
  static BasicConfig from_json(const std::string& text);
};

// Sense classifier: two LSTM argument encoders with max-pooling, a tanh
// interaction layer, batch norm, a tanh dense layer and a softmax head.
struct BasicModel {
  BasicConfig cfg;
  EmbeddingTable emb;
  LstmParams lstm_arg1, lstm_arg2;
  InteractionParams inter;
  BatchNormParams bn;
  DenseParams dense;
  DenseParams out;

  BasicModel() = default;
  BasicModel(BasicConfig cfg, EmbeddingTable emb);

  void init(std::mt19937_64& rng);
  void zero_grad();
  std::vector<ParamRef> params();

  // Probability vector over senses, eval mode (running batch-norm
  // statistics). f_s is consumed only when cfg.location_feature.
  Vec forward_eval(const std::vector<std::string>& arg1_tokens,
                   const std::vector<std::string>& arg2_tokens,
                   std::optional<double> f_s = std::nullopt) const;

  Checkpoint to_checkpoint(const std::string& kind, const std::string& config_json) const;
  static BasicModel from_checkpoint(const Checkpoint& ckpt);
};

// f_S encoding: 1 for intra-sentential, 0 for inter-sentential.
double location_feature(Location location);

Vec basic_forward(const BasicModel& model, const std::vector<std::string>& arg1_tokens,
                  const std::vector<std::string>& arg2_tokens);
Vec model2_forward(const BasicModel& model, const Instance& instance);

// Argmax with ties resolved toward the lower inventory index.
int argmax_index(const Vec& probs);
int predict(const BasicModel& model, const Instance& instance);

struct Model1 {
  BasicModel inter_model;
  BasicModel intra_model;
};

// Routes by instance.location.
int model1_predict(const Model1& model, const Instance& instance);

struct TrainConfig {
  double lr = 0.001;
  int batch_size = 32;
  int patience = 3;
  int max_epochs = 100;
  std::uint64_t seed = 1;
  int sense_level = 2;
  double dropout = 0.25;
  int embed_dim = 300;
  int hidden = 100;

  std::string to_json() const;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0;
  double dev_f1 = 0;
};

// Keeps the best-dev checkpoint; stop once the best epoch is `patience`
// epochs behind.
struct EarlyStopper {
  int patience = 3;
  double best_f1 = -1;
  int best_epoch = 0;

  // Returns true when training should stop after this epoch.
  bool update(int epoch, double dev_f1);
  bool improved_last_update = false;
};

struct TrainResult {
  BasicModel model;
  std::vector<EpochLog> log;
  int best_epoch = 0;
  double best_dev_f1 = 0;
};

// One minibatch forward+backward in training mode (batch norm over the
// batch); accumulates gradients into the model and returns the mean
// cross-entropy. Exposed for the optimizer loop and gradient checking.
double basic_train_batch(BasicModel& model, const std::vector<const Instance*>& batch,
                         std::mt19937_64& rng, bool use_location);

// Finite-difference check of the composed model (both argument
// encoders, interaction, batch norm, dense and output layers, plus
// trainable embeddings) on a small random batch.
GradCheckReport grad_check_basic_model(const BasicConfig& cfg, std::uint64_t seed,
                                       int n_tokens, int batch_size);

// Trains a Basic (or Model 2) classifier; deterministic under the
// config seed. Dev labels absent from training yield a warning only.
TrainResult train_basic(const std::vector<Instance>& train, const std::vector<Instance>& dev,
                        EmbeddingTable emb, const TrainConfig& cfg, bool model2 = false,
                        std::vector<std::string>* warnings = nullptr);

struct Model1Result {
  Model1 model;
  std::vector<EpochLog> inter_log, intra_log;
};

// One Basic classifier per location, each trained on its subset.
Model1Result train_model1(const std::vector<Instance>& train, const std::vector<Instance>& dev,
                          const EmbeddingTable& emb, const TrainConfig& cfg,
                          std::vector<std::string>* warnings = nullptr);

// Constant most-frequent-sense predictor; ties break lexicographically.
struct MfsBaseline {
  int sense = 0;
  std::string label;
};
MfsBaseline mfs_predict(const std::vector<Instance>& train, int sense_level);

struct SweepRow {
  int embed_dim = 0;
  int hidden = 0;
  double f1 = 0;
};

// One trained model per (embedding size, hidden size) pair, scored with
// the overall weighted F1 on `test`.
std::vector<SweepRow> config_sweep(const std::vector<Instance>& train,
                                   const std::vector<Instance>& dev,
                                   const std::vector<Instance>& test,
                                   const std::function<EmbeddingTable(int)>& embeddings_for,
                                   const std::vector<int>& embed_dims,
                                   const std::vector<int>& hiddens, const TrainConfig& base);

}  // namespace dpl

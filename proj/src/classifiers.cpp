#include "dpl/classifiers.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

#include "dpl/errors.hpp"

using nlohmann::json;

namespace dpl {

int BasicConfig::output_classes() const {
  return n_classes > 0 ? n_classes : static_cast<int>(sense_inventory(sense_level).size());
}

std::string BasicConfig::to_json() const {
  json j;
  j["embed_dim"] = embed_dim;
  j["hidden"] = hidden;
  j["interaction"] = interaction_size();
  j["dense"] = dense_size();
  j["n_classes"] = output_classes();
  j["sense_level"] = sense_level;
  j["dropout"] = dropout;
  j["location_feature"] = location_feature;
  return j.dump();
}

BasicConfig BasicConfig::from_json(const std::string& text) {
  json j = json::parse(text);
  BasicConfig cfg;
  cfg.embed_dim = j.value("embed_dim", 300);
  cfg.hidden = j.value("hidden", 100);
  cfg.interaction = j.value("interaction", 0);
  cfg.dense = j.value("dense", 0);
  cfg.n_classes = j.value("n_classes", 0);
  cfg.sense_level = j.value("sense_level", 2);
  cfg.dropout = j.value("dropout", 0.25);
  cfg.location_feature = j.value("location_feature", false);
  return cfg;
}

std::string TrainConfig::to_json() const {
  json j;
  j["lr"] = lr;
  j["batch_size"] = batch_size;
  j["patience"] = patience;
  j["max_epochs"] = max_epochs;
  j["seed"] = seed;
  j["sense_level"] = sense_level;
  j["dropout"] = dropout;
  j["embed_dim"] = embed_dim;
  j["hidden"] = hidden;
  return j.dump();
}

BasicModel::BasicModel(BasicConfig cfg_in, EmbeddingTable emb_in)
    : cfg(cfg_in), emb(std::move(emb_in)) {
  if (emb.dim() != cfg.embed_dim)
    throw ShapeError("embedding dim " + std::to_string(emb.dim()) +
                     " != configured embed_dim " + std::to_string(cfg.embed_dim));
  int inter_size = cfg.interaction_size();
  int dense_size = std::max(1, cfg.dense_size());
  lstm_arg1 = LstmParams(cfg.embed_dim, cfg.hidden);
  lstm_arg2 = LstmParams(cfg.embed_dim, cfg.hidden);
  inter = InteractionParams(cfg.hidden, inter_size);
  bn = BatchNormParams(inter_size);
  dense = DenseParams(inter_size, dense_size, Activation::Tanh);
  out = DenseParams(dense_size + (cfg.location_feature ? 1 : 0), cfg.output_classes(),
                    Activation::None);
}

void BasicModel::init(std::mt19937_64& rng) {
  lstm_arg1.init_uniform(rng);
  lstm_arg2.init_uniform(rng);
  inter.init_uniform(rng);
  dense.init_uniform(rng);
  out.init_uniform(rng);
}

void BasicModel::zero_grad() {
  lstm_arg1.zero_grad();
  lstm_arg2.zero_grad();
  inter.zero_grad();
  bn.zero_grad();
  dense.zero_grad();
  out.zero_grad();
  emb.zero_grad();
}

std::vector<ParamRef> BasicModel::params() {
  std::vector<ParamRef> refs;
  for (auto& r : lstm_arg1.params("lstm_arg1")) refs.push_back(r);
  for (auto& r : lstm_arg2.params("lstm_arg2")) refs.push_back(r);
  for (auto& r : inter.params("interaction")) refs.push_back(r);
  for (auto& r : bn.params("batchnorm")) refs.push_back(r);
  for (auto& r : dense.params("dense")) refs.push_back(r);
  for (auto& r : out.params("output")) refs.push_back(r);
  if (emb.trainable) refs.push_back(param_ref("embeddings", emb.matrix, emb.grad));
  return refs;
}

double location_feature(Location location) {
  return location == Location::IntraSentential ? 1.0 : 0.0;
}

Vec BasicModel::forward_eval(const std::vector<std::string>& arg1_tokens,
                             const std::vector<std::string>& arg2_tokens,
                             std::optional<double> f_s) const {
  if (arg1_tokens.empty() || arg2_tokens.empty())
    throw ValidationError("cannot classify an empty argument");
  Vec a1 = maxpool_time(recurrent_forward(embed(arg1_tokens, emb), lstm_arg1));
  Vec a2 = maxpool_time(recurrent_forward(embed(arg2_tokens, emb), lstm_arg2));
  Vec h_hid = inter.forward(a1, a2);
  Vec h_bn = bn.forward_eval(Mat(h_hid)).col(0);
  Vec h_dense = dense.forward(h_bn);
  Vec head_in = h_dense;
  if (cfg.location_feature) {
    if (!f_s) throw ValidationError("location feature required but not supplied");
    head_in.conservativeResize(h_dense.size() + 1);
    head_in(h_dense.size()) = *f_s;
  }
  return softmax(out.forward(head_in));
}

Vec basic_forward(const BasicModel& model, const std::vector<std::string>& arg1_tokens,
                  const std::vector<std::string>& arg2_tokens) {
  return model.forward_eval(arg1_tokens, arg2_tokens);
}

Vec model2_forward(const BasicModel& model, const Instance& instance) {
  return model.forward_eval(instance.arg1_tokens, instance.arg2_tokens,
                            location_feature(instance.location));
}

int argmax_index(const Vec& probs) {
  int best = 0;
  for (int i = 1; i < probs.size(); ++i)
    if (probs(i) > probs(best)) best = i;
  return best;
}

int predict(const BasicModel& model, const Instance& instance) {
  Vec probs = model.cfg.location_feature
                  ? model2_forward(model, instance)
                  : basic_forward(model, instance.arg1_tokens, instance.arg2_tokens);
  return argmax_index(probs);
}

int model1_predict(const Model1& model, const Instance& instance) {
  const BasicModel& routed = instance.location == Location::IntraSentential
                                 ? model.intra_model
                                 : model.inter_model;
  return predict(routed, instance);
}

bool EarlyStopper::update(int epoch, double dev_f1) {
  improved_last_update = dev_f1 > best_f1;
  if (improved_last_update) {
    best_f1 = dev_f1;
    best_epoch = epoch;
  }
  return epoch - best_epoch >= patience;
}

// ---------------------------------------------------------------------------
// Training

namespace {

struct ExampleCache {
  std::vector<int> rows1, rows2;
  Mat mask1, mask2;
  LstmCache lstm1, lstm2;
  std::vector<Eigen::Index> argmax1, argmax2;
  Eigen::Index steps1 = 0, steps2 = 0;
  InteractionCache inter;
};

}  // namespace

// Forward + backward over one minibatch; returns the mean loss and
// accumulates gradients. Batch norm runs in training mode over the
// whole batch; everything sequence-shaped runs per example.
double basic_train_batch(BasicModel& model, const std::vector<const Instance*>& batch,
                         std::mt19937_64& rng, bool use_location) {
  const int batch_size = static_cast<int>(batch.size());
  const int inter_size = model.cfg.interaction_size();
  std::vector<ExampleCache> caches(batch.size());
  Mat h_hid(inter_size, batch_size);

  for (int e = 0; e < batch_size; ++e) {
    const Instance& inst = *batch[e];
    ExampleCache& cache = caches[e];
    cache.rows1 = embed_rows(inst.arg1_tokens, model.emb);
    cache.rows2 = embed_rows(inst.arg2_tokens, model.emb);
    Mat x1 = dropout(embed(inst.arg1_tokens, model.emb), model.cfg.dropout, rng, true,
                     &cache.mask1);
    Mat x2 = dropout(embed(inst.arg2_tokens, model.emb), model.cfg.dropout, rng, true,
                     &cache.mask2);
    cache.steps1 = x1.cols();
    cache.steps2 = x2.cols();
    Vec a1 = maxpool_time(recurrent_forward(x1, model.lstm_arg1, &cache.lstm1), &cache.argmax1);
    Vec a2 = maxpool_time(recurrent_forward(x2, model.lstm_arg2, &cache.lstm2), &cache.argmax2);
    h_hid.col(e) = model.inter.forward(a1, a2, &cache.inter);
  }

  BatchNormCache bn_cache;
  Mat h_bn = model.bn.forward(h_hid, true, &bn_cache);
  DenseCache dense_cache;
  Mat h_dense = model.dense.forward(h_bn, &dense_cache);

  Mat head_in = h_dense;
  if (use_location) {
    head_in.conservativeResize(h_dense.rows() + 1, batch_size);
    for (int e = 0; e < batch_size; ++e)
      head_in(h_dense.rows(), e) = location_feature(batch[e]->location);
  }
  DenseCache out_cache;
  Mat logits = model.out.forward(head_in, &out_cache);

  double loss = 0;
  Mat d_logits(logits.rows(), batch_size);
  for (int e = 0; e < batch_size; ++e) {
    SoftmaxResult result = softmax_xent(logits.col(e), batch[e]->sense);
    loss += result.loss;
    d_logits.col(e) = softmax_xent_backward(result.probs, batch[e]->sense) / batch_size;
  }
  loss /= batch_size;

  Mat d_head_in = model.out.backward(d_logits, out_cache);
  Mat d_dense = use_location ? Mat(d_head_in.topRows(h_dense.rows())) : d_head_in;
  Mat d_bn = model.dense.backward(d_dense, dense_cache);
  Mat d_hid = model.bn.backward(d_bn, bn_cache);

  for (int e = 0; e < batch_size; ++e) {
    ExampleCache& cache = caches[e];
    auto [d_a1, d_a2] = model.inter.backward(d_hid.col(e), cache.inter);
    Mat d_x1 = recurrent_backward(maxpool_time_backward(d_a1, cache.argmax1, cache.steps1),
                                  model.lstm_arg1, cache.lstm1)
                   .cwiseProduct(cache.mask1);
    Mat d_x2 = recurrent_backward(maxpool_time_backward(d_a2, cache.argmax2, cache.steps2),
                                  model.lstm_arg2, cache.lstm2)
                   .cwiseProduct(cache.mask2);
    if (model.emb.trainable) {
      for (Eigen::Index t = 0; t < d_x1.cols(); ++t)
        model.emb.grad.row(cache.rows1[t]) += d_x1.col(t).transpose();
      for (Eigen::Index t = 0; t < d_x2.cols(); ++t)
        model.emb.grad.row(cache.rows2[t]) += d_x2.col(t).transpose();
    }
  }
  return loss;
}

namespace {

double dev_overall_f1(const BasicModel& model, const std::vector<Instance>& dev) {
  std::vector<int> preds;
  preds.reserve(dev.size());
  for (const Instance& inst : dev) preds.push_back(predict(model, inst));
  return evaluate_predictions(dev, preds, model.cfg.sense_level).overall_micro;
}

void warn_missing_dev_labels(const std::vector<Instance>& train,
                             const std::vector<Instance>& dev,
                             std::vector<std::string>* warnings) {
  if (!warnings) return;
  std::set<int> train_labels, dev_labels;
  for (const Instance& inst : train) train_labels.insert(inst.sense);
  for (const Instance& inst : dev)
    for (int g : inst.gold) dev_labels.insert(g);
  std::size_t train_only = 0, dev_only = 0;
  for (int label : train_labels)
    if (!dev_labels.count(label)) ++train_only;
  for (int label : dev_labels)
    if (!train_labels.count(label)) ++dev_only;
  if (train_only)
    warnings->push_back("dev set is missing " + std::to_string(train_only) +
                        " label(s) present in training");
  if (dev_only)
    warnings->push_back("dev set holds " + std::to_string(dev_only) +
                        " label(s) absent from training");
}

}  // namespace

TrainResult train_basic(const std::vector<Instance>& train, const std::vector<Instance>& dev,
                        EmbeddingTable emb, const TrainConfig& cfg, bool model2,
                        std::vector<std::string>* warnings) {
  if (train.empty() || dev.empty())
    throw ValidationError("train_basic requires non-empty train and dev sets");
  if (cfg.patience < 1) throw ValidationError("patience must be >= 1");
  (void)sense_inventory(cfg.sense_level);  // rejects levels outside {2, 3}
  warn_missing_dev_labels(train, dev, warnings);

  BasicConfig model_cfg;
  model_cfg.embed_dim = emb.dim();
  model_cfg.hidden = cfg.hidden;
  model_cfg.sense_level = cfg.sense_level;
  model_cfg.dropout = cfg.dropout;
  model_cfg.location_feature = model2;

  BasicModel model(model_cfg, std::move(emb));
  std::mt19937_64 rng(cfg.seed);
  model.init(rng);
  std::vector<ParamRef> params = model.params();
  AdamState adam(AdamConfig{cfg.lr});
  adam.init(params);

  EarlyStopper stopper{cfg.patience};
  TrainResult result;
  result.model = model;  // epoch-0 snapshot, replaced on first improvement

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0;
    for (std::size_t at = 0; at < order.size(); at += cfg.batch_size) {
      std::vector<const Instance*> batch;
      for (std::size_t i = at; i < std::min(order.size(), at + cfg.batch_size); ++i)
        batch.push_back(&train[order[i]]);
      model.zero_grad();
      double loss = basic_train_batch(model, batch, rng, model2);
      adam_step(params, adam);
      loss_sum += loss * static_cast<double>(batch.size());
    }
    double dev_f1 = dev_overall_f1(model, dev);
    result.log.push_back({epoch, loss_sum / static_cast<double>(train.size()), dev_f1});
    bool stop = stopper.update(epoch, dev_f1);
    if (stopper.improved_last_update) result.model = model;
    if (stop) break;
  }
  result.best_epoch = stopper.best_epoch;
  result.best_dev_f1 = stopper.best_f1;
  return result;
}

Model1Result train_model1(const std::vector<Instance>& train, const std::vector<Instance>& dev,
                          const EmbeddingTable& emb, const TrainConfig& cfg,
                          std::vector<std::string>* warnings) {
  auto by_location = [](const std::vector<Instance>& items, Location loc) {
    std::vector<Instance> out;
    for (const Instance& inst : items)
      if (inst.location == loc) out.push_back(inst);
    return out;
  };
  std::vector<Instance> train_inter = by_location(train, Location::InterSentential);
  std::vector<Instance> train_intra = by_location(train, Location::IntraSentential);
  if (train_inter.empty() || train_intra.empty())
    throw ValidationError("model 1 requires training data for both locations");
  std::vector<Instance> dev_inter = by_location(dev, Location::InterSentential);
  std::vector<Instance> dev_intra = by_location(dev, Location::IntraSentential);
  if (dev_inter.empty()) {
    if (warnings) warnings->push_back("no inter-sentential dev instances; using the full dev set");
    dev_inter = dev;
  }
  if (dev_intra.empty()) {
    if (warnings) warnings->push_back("no intra-sentential dev instances; using the full dev set");
    dev_intra = dev;
  }

  TrainConfig inter_cfg = cfg;
  TrainConfig intra_cfg = cfg;
  intra_cfg.seed = derive_seed(cfg.seed, 1);

  TrainResult inter_result = train_basic(train_inter, dev_inter, emb, inter_cfg, false, warnings);
  TrainResult intra_result = train_basic(train_intra, dev_intra, emb, intra_cfg, false, warnings);

  Model1Result result;
  result.model.inter_model = std::move(inter_result.model);
  result.model.intra_model = std::move(intra_result.model);
  result.inter_log = std::move(inter_result.log);
  result.intra_log = std::move(intra_result.log);
  return result;
}

MfsBaseline mfs_predict(const std::vector<Instance>& train, int sense_level) {
  if (train.empty()) throw ValidationError("mfs_predict requires a non-empty training set");
  const std::vector<std::string>& inventory = sense_inventory(sense_level);
  std::vector<long> counts(inventory.size(), 0);
  for (const Instance& inst : train) ++counts.at(inst.sense);
  int best = 0;
  for (int i = 1; i < static_cast<int>(counts.size()); ++i) {
    if (counts[i] > counts[best] ||
        (counts[i] == counts[best] && inventory[i] < inventory[best]))
      best = i;
  }
  return {best, inventory[best]};
}

std::vector<SweepRow> config_sweep(const std::vector<Instance>& train,
                                   const std::vector<Instance>& dev,
                                   const std::vector<Instance>& test,
                                   const std::function<EmbeddingTable(int)>& embeddings_for,
                                   const std::vector<int>& embed_dims,
                                   const std::vector<int>& hiddens, const TrainConfig& base) {
  if (embed_dims.empty() || hiddens.empty())
    throw ValidationError("config_sweep requires at least one configuration");
  std::vector<SweepRow> rows;
  for (int embed_dim : embed_dims) {
    for (int hidden : hiddens) {
      TrainConfig cfg = base;
      cfg.embed_dim = embed_dim;
      cfg.hidden = hidden;
      TrainResult trained = train_basic(train, dev, embeddings_for(embed_dim), cfg);
      std::vector<int> preds;
      preds.reserve(test.size());
      for (const Instance& inst : test) preds.push_back(predict(trained.model, inst));
      MetricsReport report = evaluate_predictions(test, preds, cfg.sense_level);
      rows.push_back({embed_dim, hidden, report.overall_micro});
    }
  }
  return rows;
}

GradCheckReport grad_check_basic_model(const BasicConfig& cfg_in, std::uint64_t seed,
                                       int n_tokens, int batch_size) {
  BasicConfig cfg = cfg_in;
  cfg.dropout = 0;  // the check needs a deterministic forward
  std::mt19937_64 rng(seed);
  std::vector<std::string> vocab;
  for (int i = 0; i < 12; ++i) vocab.push_back("w" + std::to_string(i));
  EmbeddingTable emb = EmbeddingTable::random_init(vocab, cfg.embed_dim, rng, true, 0.5);
  BasicModel model(cfg, std::move(emb));
  model.init(rng);

  std::vector<Instance> instances(batch_size);
  for (int e = 0; e < batch_size; ++e) {
    for (int t = 0; t < n_tokens; ++t) {
      instances[e].arg1_tokens.push_back(vocab[rng() % vocab.size()]);
      instances[e].arg2_tokens.push_back(vocab[rng() % vocab.size()]);
    }
    instances[e].sense = static_cast<int>(rng() % cfg.output_classes());
    instances[e].gold = {instances[e].sense};
    instances[e].location = e % 2 ? Location::IntraSentential : Location::InterSentential;
  }
  std::vector<const Instance*> batch;
  for (const Instance& inst : instances) batch.push_back(&inst);

  std::mt19937_64 unused_rng(0);  // dropout is disabled; never drawn from
  auto loss_grad = [&] {
    model.zero_grad();
    return basic_train_batch(model, batch, unused_rng, cfg.location_feature);
  };
  auto loss_only = [&] {
    BasicModel probe = model;  // keep running statistics untouched
    return basic_train_batch(probe, batch, unused_rng, cfg.location_feature);
  };
  return grad_check(model.params(), loss_grad, loss_only, 1e-5);
}

// ---------------------------------------------------------------------------
// Checkpointing

namespace {

Tensor tensor_of(const std::string& name, const Mat& m) {
  ParamRef ref{name, const_cast<double*>(m.data()), nullptr, m.rows(), m.cols()};
  return Tensor::from(ref);
}

Tensor tensor_of(const std::string& name, const Vec& v) {
  ParamRef ref{name, const_cast<double*>(v.data()), nullptr, v.size(), 1};
  return Tensor::from(ref);
}

}  // namespace

Checkpoint BasicModel::to_checkpoint(const std::string& kind,
                                     const std::string& run_config_json) const {
  Checkpoint ckpt;
  ckpt.kind = kind;
  json cfg_obj;
  cfg_obj["model"] = json::parse(cfg.to_json());
  if (!run_config_json.empty()) cfg_obj["run"] = json::parse(run_config_json);
  ckpt.config_json = cfg_obj.dump();
  ckpt.config_hash = fnv1a_hex(ckpt.config_json);
  ckpt.sense_level = cfg.sense_level;
  ckpt.vocab = emb.tokens;
  ckpt.inventory = sense_inventory(cfg.sense_level);

  BasicModel& self = const_cast<BasicModel&>(*this);
  for (const ParamRef& ref : self.params()) ckpt.add(ref);
  if (!emb.trainable)
    ckpt.tensors.emplace_back("embeddings", tensor_of("embeddings", emb.matrix));
  ckpt.tensors.emplace_back("batchnorm.running_mean",
                            tensor_of("running_mean", bn.running_mean));
  ckpt.tensors.emplace_back("batchnorm.running_var",
                            tensor_of("running_var", bn.running_var));
  return ckpt;
}

BasicModel BasicModel::from_checkpoint(const Checkpoint& ckpt) {
  json cfg_json = json::parse(ckpt.config_json);
  BasicConfig cfg = BasicConfig::from_json(cfg_json.contains("model")
                                               ? cfg_json["model"].dump()
                                               : ckpt.config_json);
  EmbeddingTable emb;
  emb.tokens = ckpt.vocab;
  for (int i = 0; i < static_cast<int>(emb.tokens.size()); ++i) emb.vocab[emb.tokens[i]] = i;
  const Tensor* emb_tensor = ckpt.find("embeddings");
  if (!emb_tensor) throw ValidationError("checkpoint lacks embeddings");
  emb.matrix = Mat::Zero(emb_tensor->shape.at(0), emb_tensor->shape.at(1));
  emb_tensor->copy_to(ParamRef{"embeddings", emb.matrix.data(), nullptr, emb.matrix.rows(),
                               emb.matrix.cols()});
  if (emb.matrix.rows() != static_cast<Eigen::Index>(emb.tokens.size()))
    throw ValidationError("checkpoint embedding rows do not match vocab size");

  BasicModel model(cfg, std::move(emb));
  for (const ParamRef& ref : model.params()) {
    const Tensor* tensor = ckpt.find(ref.name);
    if (!tensor) throw ValidationError("checkpoint lacks tensor '" + ref.name + "'");
    tensor->copy_to(ref);
  }
  const Tensor* rm = ckpt.find("batchnorm.running_mean");
  const Tensor* rv = ckpt.find("batchnorm.running_var");
  if (!rm || !rv) throw ValidationError("checkpoint lacks batch-norm statistics");
  rm->copy_to(ParamRef{"running_mean", model.bn.running_mean.data(), nullptr,
                       model.bn.running_mean.size(), 1});
  rv->copy_to(ParamRef{"running_var", model.bn.running_var.data(), nullptr,
                       model.bn.running_var.size(), 1});
  return model;
}

}  // namespace dpl

#include "dpl/recognizers.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

#include "dpl/errors.hpp"

using nlohmann::json;

namespace dpl {

std::string RecognizerConfig::to_json() const {
  json j;
  j["embed_dim"] = embed_dim;
  j["hidden"] = hidden;
  j["vocab_cap"] = vocab_cap;
  j["lr"] = lr;
  j["batch_size"] = batch_size;
  j["patience"] = patience;
  j["max_epochs"] = max_epochs;
  j["seed"] = seed;
  j["threshold"] = threshold;
  return j.dump();
}

int sentence_label(const Document& doc, int sentence_index) {
  const ByteSpan sentence = doc.sentences.at(sentence_index).span;
  for (const RelationRecord& rel : doc.relations) {
    if (rel.rel_type != RelType::Implicit && rel.rel_type != RelType::AltLex) continue;
    if (is_linked(rel, doc.relations)) continue;  // linked implicits stay 0
    ByteSpanList spans = rel.arg1;
    spans.insert(spans.end(), rel.arg2.begin(), rel.arg2.end());
    if (rel.conn_span) spans.insert(spans.end(), rel.conn_span->begin(), rel.conn_span->end());
    bool inside = std::all_of(spans.begin(), spans.end(), [&](const ByteSpan& span) {
      return sentence.contains(span);
    });
    if (inside) return 1;
  }
  return 0;
}

SentenceDataset build_sentence_dataset(const Corpus& corpus, std::uint64_t seed,
                                       bool strip_traces) {
  std::vector<SentenceInstance> all;
  for (const Document& doc : corpus.docs) {
    for (int s = 0; s < static_cast<int>(doc.sentences.size()); ++s) {
      SentenceInstance inst;
      inst.tokens = linearize(doc.sentences[s].tree, strip_traces);
      inst.label = sentence_label(doc, s);
      inst.doc_id = doc.doc_id;
      inst.sentence_index = s;
      all.push_back(std::move(inst));
    }
  }
  std::vector<std::size_t> order(all.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  SentenceDataset data;
  std::size_t n_train = all.size() * 6 / 10;
  std::size_t n_dev = all.size() * 2 / 10;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i < n_train)
      data.train.push_back(all[order[i]]);
    else if (i < n_train + n_dev)
      data.dev.push_back(all[order[i]]);
    else
      data.test.push_back(all[order[i]]);
  }
  return data;
}

std::vector<std::string> capped_vocabulary(const std::vector<SentenceInstance>& train,
                                           int cap) {
  std::map<std::string, long> counts;
  for (const SentenceInstance& inst : train)
    for (const std::string& token : inst.tokens) ++counts[token];
  std::vector<std::pair<std::string, long>> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> vocab;
  for (int i = 0; i < std::min<int>(cap, static_cast<int>(ranked.size())); ++i)
    vocab.push_back(ranked[i].first);
  return vocab;
}

std::vector<ParamRef> IntraRecognizer::params() {
  std::vector<ParamRef> refs;
  for (auto& r : fwd.params("lstm_fwd")) refs.push_back(r);
  for (auto& r : bwd.params("lstm_bwd")) refs.push_back(r);
  for (auto& r : head.params("head")) refs.push_back(r);
  if (emb.trainable) refs.push_back(param_ref("embeddings", emb.matrix, emb.grad));
  return refs;
}

void IntraRecognizer::zero_grad() {
  fwd.zero_grad();
  bwd.zero_grad();
  head.zero_grad();
  emb.zero_grad();
}

double IntraRecognizer::prob(const std::vector<std::string>& tokens) const {
  if (tokens.empty()) throw ValidationError("cannot score an empty sentence");
  Mat states = bidirectional_forward(embed(tokens, emb), fwd, bwd);
  Vec pooled = maxpool_time(states);
  return sigmoid(head.forward(pooled)(0));
}

int IntraRecognizer::predict(const std::vector<std::string>& tokens) const {
  return prob(tokens) >= cfg.threshold ? 1 : 0;
}

namespace {

double recognizer_batch_step(IntraRecognizer& model,
                             const std::vector<const SentenceInstance*>& batch) {
  double loss = 0;
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (const SentenceInstance* inst : batch) {
    LstmCache fwd_cache, bwd_cache;
    std::vector<int> rows = embed_rows(inst->tokens, model.emb);
    Mat x = embed(inst->tokens, model.emb);
    Mat states = bidirectional_forward(x, model.fwd, model.bwd, &fwd_cache, &bwd_cache);
    std::vector<Eigen::Index> argmax;
    Vec pooled = maxpool_time(states, &argmax);
    DenseCache head_cache;
    Mat logit = model.head.forward(Mat(pooled), &head_cache);
    double target = static_cast<double>(inst->label);
    loss += bce_logit(logit(0, 0), target) * scale;

    Mat d_logit(1, 1);
    d_logit(0, 0) = bce_logit_backward(logit(0, 0), target) * scale;
    Mat d_pooled = model.head.backward(d_logit, head_cache);
    Mat d_states = maxpool_time_backward(d_pooled.col(0), argmax, states.cols());
    Mat d_x = bidirectional_backward(d_states, model.fwd, model.bwd, fwd_cache, bwd_cache);
    if (model.emb.trainable)
      for (Eigen::Index t = 0; t < d_x.cols(); ++t)
        model.emb.grad.row(rows[t]) += d_x.col(t).transpose();
  }
  return loss;
}

double recognizer_dev_f1(const IntraRecognizer& model,
                         const std::vector<SentenceInstance>& dev) {
  std::vector<int> golds, preds;
  for (const SentenceInstance& inst : dev) {
    golds.push_back(inst.label);
    preds.push_back(model.predict(inst.tokens));
  }
  return binary_metrics(golds, preds).f1;
}

}  // namespace

RecognizerResult train_intra_recognizer(const SentenceDataset& data,
                                        const RecognizerConfig& cfg,
                                        const EmbeddingTable* warm_start) {
  if (data.train.empty() || data.dev.empty())
    throw ValidationError("recognizer training requires non-empty train and dev splits");

  std::mt19937_64 rng(cfg.seed);
  RecognizerResult result;
  IntraRecognizer& model = result.model;
  model.cfg = cfg;
  std::vector<std::string> vocab = capped_vocabulary(data.train, cfg.vocab_cap);
  if (warm_start) {
    if (warm_start->dim() != cfg.embed_dim)
      throw ShapeError("warm-start embeddings are " + std::to_string(warm_start->dim()) +
                       "-dimensional, expected " + std::to_string(cfg.embed_dim) +
                       " (no truncation or padding)");
    model.emb = *warm_start;
    model.emb.trainable = true;
    model.emb.zero_grad();
  } else {
    model.emb = EmbeddingTable::random_init(vocab, cfg.embed_dim, rng, true);
  }
  model.fwd = LstmParams(cfg.embed_dim, cfg.hidden, Direction::Forward);
  model.bwd = LstmParams(cfg.embed_dim, cfg.hidden, Direction::Backward);
  model.head = DenseParams(2 * cfg.hidden, 1, Activation::None);
  model.fwd.init_uniform(rng);
  model.bwd.init_uniform(rng);
  model.head.init_uniform(rng);

  std::vector<ParamRef> params = model.params();
  AdamState adam(AdamConfig{cfg.lr});
  adam.init(params);

  EarlyStopper stopper{cfg.patience};
  IntraRecognizer best = model;

  std::vector<std::size_t> order(data.train.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0;
    for (std::size_t at = 0; at < order.size(); at += cfg.batch_size) {
      std::vector<const SentenceInstance*> batch;
      for (std::size_t i = at; i < std::min(order.size(), at + cfg.batch_size); ++i)
        batch.push_back(&data.train[order[i]]);
      model.zero_grad();
      double loss = recognizer_batch_step(model, batch);
      adam_step(params, adam);
      loss_sum += loss * static_cast<double>(batch.size());
    }
    double dev_f1 = recognizer_dev_f1(model, data.dev);
    result.log.push_back({epoch, loss_sum / static_cast<double>(data.train.size()), dev_f1});
    bool stop = stopper.update(epoch, dev_f1);
    if (stopper.improved_last_update) best = model;
    if (stop) break;
  }
  result.model = std::move(best);
  result.best_epoch = stopper.best_epoch;
  return result;
}

BinaryMetrics binary_metrics(const std::vector<int>& golds, const std::vector<int>& preds) {
  if (golds.size() != preds.size())
    throw ValidationError("binary_metrics: sequence lengths differ");
  BinaryMetrics m;
  for (std::size_t i = 0; i < golds.size(); ++i) {
    if (golds[i] == 1 && preds[i] == 1) ++m.tp;
    if (golds[i] == 0 && preds[i] == 1) ++m.fp;
    if (golds[i] == 1 && preds[i] == 0) ++m.fn;
    if (golds[i] == 0 && preds[i] == 0) ++m.tn;
  }
  long total = m.tp + m.fp + m.fn + m.tn;
  m.accuracy = total > 0 ? static_cast<double>(m.tp + m.tn) / total : 0.0;
  m.precision = (m.tp + m.fp) > 0 ? static_cast<double>(m.tp) / (m.tp + m.fp) : 0.0;
  m.recall = (m.tp + m.fn) > 0 ? static_cast<double>(m.tp) / (m.tp + m.fn) : 0.0;
  m.f1 = (m.precision + m.recall) > 0
             ? 2 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  return m;
}

BinaryMetrics eval_recognizer(const IntraRecognizer& model,
                              const std::vector<SentenceInstance>& data) {
  std::vector<int> golds, preds;
  for (const SentenceInstance& inst : data) {
    golds.push_back(inst.label);
    preds.push_back(model.predict(inst.tokens));
  }
  return binary_metrics(golds, preds);
}

int majority_baseline(const std::vector<int>& train_labels) {
  if (train_labels.empty()) throw ValidationError("majority baseline over no labels");
  long ones = std::count(train_labels.begin(), train_labels.end(), 1);
  long zeros = static_cast<long>(train_labels.size()) - ones;
  return ones > zeros ? 1 : 0;  // ties break toward 0
}

BinaryMetrics eval_constant(int label, const std::vector<SentenceInstance>& data) {
  std::vector<int> golds, preds;
  for (const SentenceInstance& inst : data) {
    golds.push_back(inst.label);
    preds.push_back(label);
  }
  return binary_metrics(golds, preds);
}

// ---------------------------------------------------------------------------
// Linked-relation recognizer

namespace {

std::vector<const TreeNode*> relation_trees(const Document& doc, const RelationRecord& rel) {
  ByteSpanList spans = rel.arg1;
  spans.insert(spans.end(), rel.arg2.begin(), rel.arg2.end());
  if (rel.conn_span) spans.insert(spans.end(), rel.conn_span->begin(), rel.conn_span->end());
  std::vector<const TreeNode*> trees;
  for (const ParsedSentence& sentence : doc.sentences) {
    bool hit = std::any_of(spans.begin(), spans.end(), [&](const ByteSpan& span) {
      return sentence.span.overlaps(span);
    });
    if (hit) trees.push_back(&sentence.tree);
  }
  return trees;
}

}  // namespace

LinkedDataset build_linked_dataset(const Corpus& corpus, int n_rules) {
  Split split = standard_split(corpus);
  LinkedDataset data;

  std::vector<const TreeNode*> train_trees;
  for (RelRef ref : split.train) {
    const Document& doc = corpus.docs[ref.doc];
    const RelationRecord& rel = doc.relations[ref.rel];
    if (rel.rel_type != RelType::Explicit) continue;
    for (const TreeNode* tree : relation_trees(doc, rel)) train_trees.push_back(tree);
  }
  data.dict = top_rules(train_trees, n_rules);

  auto build = [&](const std::vector<RelRef>& refs, std::vector<LinkedInstance>& out) {
    for (RelRef ref : refs) {
      const Document& doc = corpus.docs[ref.doc];
      const RelationRecord& rel = doc.relations[ref.rel];
      if (rel.rel_type != RelType::Explicit) continue;
      LinkedInstance inst;
      inst.features = featurize(relation_trees(doc, rel), data.dict);
      inst.label = linked_with(rel, doc.relations, RelType::Implicit) ? 1 : 0;
      inst.rel = ref;
      inst.doc_id = doc.doc_id;
      inst.link = rel.link;
      out.push_back(std::move(inst));
    }
  };
  build(split.train, data.train);
  build(split.dev, data.dev);
  build(split.test, data.test);
  return data;
}

NaiveBayesModel nb_train(const std::vector<LinkedInstance>& train, double alpha,
                         std::vector<std::string>* warnings) {
  if (train.empty()) throw ValidationError("nb_train requires training instances");
  const std::size_t n_features = train.front().features.size();
  std::array<long, 2> class_count{0, 0};
  std::vector<std::array<long, 2>> feature_count(n_features, {0, 0});
  for (const LinkedInstance& inst : train) {
    if (inst.features.size() != n_features)
      throw ShapeError("naive Bayes feature vectors differ in length");
    ++class_count[inst.label];
    for (std::size_t f = 0; f < n_features; ++f)
      if (inst.features[f]) ++feature_count[f][inst.label];
  }

  NaiveBayesModel model;
  model.alpha = alpha;
  if (class_count[0] == 0 || class_count[1] == 0) {
    model.single_class = true;
    model.only_class = class_count[1] > 0 ? 1 : 0;
    if (warnings)
      warnings->push_back("naive Bayes training data holds a single class; the model is a "
                          "constant predictor");
  }
  const double total = static_cast<double>(train.size());
  for (int c = 0; c < 2; ++c)
    model.log_prior[c] = class_count[c] > 0
                             ? std::log(static_cast<double>(class_count[c]) / total)
                             : -std::numeric_limits<double>::infinity();
  model.log_p1.resize(n_features);
  model.log_p0.resize(n_features);
  for (std::size_t f = 0; f < n_features; ++f) {
    for (int c = 0; c < 2; ++c) {
      double denom = static_cast<double>(class_count[c]) + 2 * alpha;
      double p1 = (static_cast<double>(feature_count[f][c]) + alpha) / denom;
      model.log_p1[f][c] = std::log(p1);
      model.log_p0[f][c] = std::log(1.0 - p1);
    }
  }
  return model;
}

namespace {

std::array<double, 2> nb_scores(const NaiveBayesModel& model,
                                const std::vector<std::uint8_t>& features) {
  if (features.size() != model.log_p1.size())
    throw ShapeError("feature vector length " + std::to_string(features.size()) +
                     " != model features " + std::to_string(model.log_p1.size()));
  std::array<double, 2> scores{model.log_prior[0], model.log_prior[1]};
  for (std::size_t f = 0; f < features.size(); ++f)
    for (int c = 0; c < 2; ++c)
      scores[c] += features[f] ? model.log_p1[f][c] : model.log_p0[f][c];
  return scores;
}

}  // namespace

int nb_predict(const NaiveBayesModel& model, const std::vector<std::uint8_t>& features) {
  if (model.single_class) return model.only_class;
  std::array<double, 2> scores = nb_scores(model, features);
  return scores[1] > scores[0] ? 1 : 0;  // ties break toward stand-alone
}

std::array<double, 2> nb_posterior(const NaiveBayesModel& model,
                                   const std::vector<std::uint8_t>& features) {
  if (model.single_class)
    return model.only_class == 1 ? std::array<double, 2>{0.0, 1.0}
                                 : std::array<double, 2>{1.0, 0.0};
  std::array<double, 2> scores = nb_scores(model, features);
  double peak = std::max(scores[0], scores[1]);
  double e0 = std::exp(scores[0] - peak);
  double e1 = std::exp(scores[1] - peak);
  return {e0 / (e0 + e1), e1 / (e0 + e1)};
}

std::string NaiveBayesModel::to_json() const {
  json j;
  j["rule_dict"] = rule_dict_ref;
  j["log_prior"] = log_prior;
  j["log_p1"] = log_p1;
  j["log_p0"] = log_p0;
  j["alpha"] = alpha;
  j["single_class"] = single_class;
  j["only_class"] = only_class;
  return j.dump();
}

NaiveBayesModel NaiveBayesModel::from_json(const std::string& text) {
  json j = json::parse(text);
  NaiveBayesModel model;
  if (j.contains("rule_dict") && !j["rule_dict"].is_null())
    model.rule_dict_ref = j["rule_dict"].get<std::string>();
  model.log_prior = j.at("log_prior").get<std::array<double, 2>>();
  model.log_p1 = j.at("log_p1").get<std::vector<std::array<double, 2>>>();
  model.log_p0 = j.at("log_p0").get<std::vector<std::array<double, 2>>>();
  model.alpha = j.value("alpha", 1.0);
  model.single_class = j.value("single_class", false);
  model.only_class = j.value("only_class", 0);
  return model;
}

// ---------------------------------------------------------------------------
// Pipeline

std::string PipelineReport::to_json() const {
  json j;
  j["recognizer"] = {{"accuracy", recognizer.accuracy}, {"precision", recognizer.precision},
                     {"recall", recognizer.recall},     {"f1", recognizer.f1},
                     {"tp", recognizer.tp},             {"fp", recognizer.fp},
                     {"fn", recognizer.fn},             {"tn", recognizer.tn}};
  j["n_recognized"] = n_recognized;
  j["n_matched"] = n_matched;
  j["n_correct"] = n_correct;
  j["n_intra"] = n_intra;
  j["applicable"] = applicable;
  if (applicable)
    j["sense_f1"] = sense_f1;
  else
    j["sense_f1"] = "n/a";
  return j.dump(2);
}

PipelineReport pipeline_classify(const Corpus& corpus, const LinkedDataset& data,
                                 const NaiveBayesModel& nb,
                                 const std::function<int(const Instance&)>& classify,
                                 int sense_level) {
  PipelineReport report;
  std::vector<int> golds, preds;
  std::vector<const LinkedInstance*> recognized;
  for (const LinkedInstance& inst : data.test) {
    int pred = nb_predict(nb, inst.features);
    golds.push_back(inst.label);
    preds.push_back(pred);
    if (pred == 1) recognized.push_back(&inst);
  }
  report.recognizer = binary_metrics(golds, preds);
  report.n_recognized = static_cast<int>(recognized.size());

  for (const LinkedInstance* flagged : recognized) {
    const Document& doc = corpus.docs[flagged->rel.doc];
    const RelationRecord& explicit_rel = doc.relations[flagged->rel.rel];
    if (!explicit_rel.link) continue;
    // The gold implicit partner shares the link index.
    for (int r = 0; r < static_cast<int>(doc.relations.size()); ++r) {
      const RelationRecord& partner = doc.relations[r];
      if (partner.rel_type != RelType::Implicit || !partner.link ||
          *partner.link != *explicit_rel.link)
        continue;
      InstanceOptions options;
      options.eval_mode = true;
      options.sense_level = sense_level;
      InstanceBuild built = make_instances(corpus, {{flagged->rel.doc, r}}, options);
      if (built.instances.empty()) continue;
      const Instance& inst = built.instances.front();
      ++report.n_matched;
      if (inst.location == Location::IntraSentential) ++report.n_intra;
      int pred = classify(inst);
      if (std::find(inst.gold.begin(), inst.gold.end(), pred) != inst.gold.end())
        ++report.n_correct;
      break;
    }
  }
  report.applicable = report.n_matched > 0;
  report.sense_f1 = report.applicable
                        ? static_cast<double>(report.n_correct) / report.n_matched
                        : 0.0;
  return report;
}

}  // namespace dpl

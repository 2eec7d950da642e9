#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dpl/classifiers.hpp"
#include "dpl/corpus.hpp"
#include "dpl/eval.hpp"
#include "dpl/nn.hpp"
#include "dpl/treebank.hpp"

namespace dpl {

// One sentence of the intra-sentential recognizer dataset. Label 1 iff
// the sentence holds at least one intra-sentential Implicit or AltLex
// relation; linked implicits alone do not set it.
struct SentenceInstance {
  std::vector<std::string> tokens;  // linearized parse tree
  int label = 0;
  std::string doc_id;
  int sentence_index = 0;
};

struct SentenceDataset {
  std::vector<SentenceInstance> train, dev, test;  // 60/20/20
};

// Recomputes a sentence's label from the raw annotations.
int sentence_label(const Document& doc, int sentence_index);

// One instance per sentence; random 60/20/20 split, deterministic under
// the seed. Trace leaves stay in the linearized input unless
// strip_traces is set. Throws AlignmentError via locate on uncovered
// relations.
SentenceDataset build_sentence_dataset(const Corpus& corpus, std::uint64_t seed,
                                       bool strip_traces = false);

struct RecognizerConfig {
  int embed_dim = 200;
  int hidden = 256;        // per direction
  int vocab_cap = 25000;
  double lr = 1e-4;
  int batch_size = 32;
  int patience = 3;
  int max_epochs = 30;
  std::uint64_t seed = 1;
  double threshold = 0.5;

  std::string to_json() const;
};

// BiLSTM over linearized trees with a single-logit linear head.
struct IntraRecognizer {
  RecognizerConfig cfg;
  EmbeddingTable emb;   // trainable
  LstmParams fwd, bwd;
  DenseParams head;

  std::vector<ParamRef> params();
  void zero_grad();
  double prob(const std::vector<std::string>& tokens) const;  // sigmoid(logit)
  int predict(const std::vector<std::string>& tokens) const;
};

// The vocab_cap most frequent training tokens (ties lexicographic).
std::vector<std::string> capped_vocabulary(const std::vector<SentenceInstance>& train,
                                           int cap);

struct RecognizerResult {
  IntraRecognizer model;
  std::vector<EpochLog> log;  // dev_f1 is the positive-class F1
  int best_epoch = 0;
};

// Binary cross-entropy training with Adam; best-dev-F1 checkpoint.
// Warm-start embeddings must match embed_dim exactly (no truncation).
RecognizerResult train_intra_recognizer(const SentenceDataset& data,
                                        const RecognizerConfig& cfg,
                                        const EmbeddingTable* warm_start = nullptr);

struct BinaryMetrics {
  double accuracy = 0;
  double precision = 0;
  double recall = 0;
  double f1 = 0;  // positive class
  long tp = 0, fp = 0, fn = 0, tn = 0;
};

BinaryMetrics binary_metrics(const std::vector<int>& golds, const std::vector<int>& preds);
BinaryMetrics eval_recognizer(const IntraRecognizer& model,
                              const std::vector<SentenceInstance>& data);

// Majority class of the training labels; ties break toward 0.
int majority_baseline(const std::vector<int>& train_labels);
BinaryMetrics eval_constant(int label, const std::vector<SentenceInstance>& data);

// ---------------------------------------------------------------------------
// Linked-relation recognizer (naive Bayes over production rules)

struct LinkedInstance {
  std::vector<std::uint8_t> features;
  int label = 0;  // 1 = linked with an implicit relation
  RelRef rel;
  std::string doc_id;
  std::optional<int> link;
};

struct LinkedDataset {
  RuleDictionary dict;  // built from the training trees
  std::vector<LinkedInstance> train, dev, test;
};

// One instance per Explicit relation under the standard split; features
// are the 100 most frequent production rules over the training
// relations' sentence trees.
LinkedDataset build_linked_dataset(const Corpus& corpus, int n_rules = 100);

// Bernoulli naive Bayes: presence and absence both scored.
struct NaiveBayesModel {
  std::array<double, 2> log_prior{};            // [stand-alone, linked]
  std::vector<std::array<double, 2>> log_p1;    // log P(f=1 | class)
  std::vector<std::array<double, 2>> log_p0;
  double alpha = 1.0;
  bool single_class = false;
  int only_class = 0;
  std::string rule_dict_ref;  // path/name of the feature dictionary

  std::string to_json() const;
  static NaiveBayesModel from_json(const std::string& text);
};

// Laplace smoothing `alpha`; single-class data yields a constant
// predictor plus a warning.
NaiveBayesModel nb_train(const std::vector<LinkedInstance>& train, double alpha = 1.0,
                         std::vector<std::string>* warnings = nullptr);
// Argmax of log prior + summed feature log-likelihoods; ties break
// toward stand-alone.
int nb_predict(const NaiveBayesModel& model, const std::vector<std::uint8_t>& features);
// Normalized P(class | features).
std::array<double, 2> nb_posterior(const NaiveBayesModel& model,
                                   const std::vector<std::uint8_t>& features);

struct PipelineReport {
  BinaryMetrics recognizer;    // linked-class scores on the test split
  int n_recognized = 0;        // explicit relations flagged linked
  int n_matched = 0;           // with a gold implicit partner
  int n_correct = 0;
  bool applicable = false;     // false when nothing was matched
  double sense_f1 = 0;         // micro F1 over matched instances
  int n_intra = 0;             // recognized partners that are intra-sentential

  std::string to_json() const;
};

// Sense-labels the implicit partners of recognized linked explicits
// with the supplied classifier and scores them against gold senses.
PipelineReport pipeline_classify(const Corpus& corpus, const LinkedDataset& data,
                                 const NaiveBayesModel& nb,
                                 const std::function<int(const Instance&)>& classify,
                                 int sense_level);

}  // namespace dpl

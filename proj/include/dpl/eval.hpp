#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dpl/corpus.hpp"

namespace dpl {

// Gold senses in rows, predictions in columns.
struct ConfusionMatrix {
  std::vector<std::string> labels;
  std::vector<std::vector<long>> counts;

  explicit ConfusionMatrix(std::vector<std::string> labels = {});
  long total() const;
  long row_sum(int label) const;
  long col_sum(int label) const;
  std::string to_tsv() const;
};

// counts[g][p] += 1 per pair. Throws ValidationError on indices outside
// the inventory.
ConfusionMatrix confusion(const std::vector<int>& golds, const std::vector<int>& preds,
                          const std::vector<std::string>& inventory);

// Multi-sense golds: a prediction contained in the gold set counts on
// the diagonal; otherwise the first gold sense takes the row.
ConfusionMatrix confusion_multi(const std::vector<std::vector<int>>& gold_sets,
                                const std::vector<int>& preds,
                                const std::vector<std::string>& inventory);

struct Prf {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

// Zero rather than undefined whenever a denominator is zero.
Prf prf(const ConfusionMatrix& matrix, int label);

double micro_f1(const ConfusionMatrix& matrix);  // equals accuracy
double macro_f1(const ConfusionMatrix& matrix);  // mean F1 over all labels

// p_inter*f1_inter + p_intra*f1_intra; weights must sum to 1.
double weighted_overall(double f1_inter, double f1_intra, double p_inter, double p_intra);

struct ChiSquareResult {
  double statistic = 0;
  int dof = 1;
  double p_value = 1;
  std::array<std::array<double, 2>, 2> table{};
  bool degenerate = false;  // a zero row/column marginal
};

// Pearson chi-squared on a 2x2 table, 1 dof; optional Yates continuity
// correction. p-value via the regularized upper incomplete gamma.
ChiSquareResult chi_square_2x2(const std::array<std::array<double, 2>, 2>& table,
                               bool yates = false);

// Builds the (correct/incorrect) x (inter/intra) table.
ChiSquareResult chi_square_location(const std::vector<bool>& correct,
                                    const std::vector<Location>& locations,
                                    bool yates = false);

// General r x c design (used for the senses-by-location variant).
struct ChiSquareGeneral {
  double statistic = 0;
  int dof = 0;
  double p_value = 1;
  bool degenerate = false;
};
ChiSquareGeneral chi_square_table(const std::vector<std::vector<double>>& table,
                                  bool yates = false);

// Regularized upper incomplete gamma Q(a, x).
double regularized_gamma_q(double a, double x);

// Per-label scores plus the grouped summary behind the model tables.
struct MetricsReport {
  std::vector<std::string> labels;
  ConfusionMatrix matrix;
  std::vector<Prf> per_label;
  std::vector<double> support_proportion;  // gold support / total
  double micro = 0;
  double macro = 0;
  double inter_micro = 0, intra_micro = 0;
  double inter_macro = 0, intra_macro = 0;
  double p_inter = 0, p_intra = 0;
  double overall_micro = 0;   // weighted by location proportions
  double overall_macro = 0;
  std::string overall_base = "micro";  // which base the headline uses
  long n_instances = 0;

  double overall() const { return overall_base == "macro" ? overall_macro : overall_micro; }
  std::string to_tsv() const;
  std::string to_json() const;
};

MetricsReport evaluate_predictions(const std::vector<Instance>& instances,
                                   const std::vector<int>& preds, int sense_level);

enum class Axis { Location, Linkage };

// Level-2 sense distribution of implicit relations, split by location
// or linkage. Each relation counts once, under its first sense.
struct DistributionReport {
  Axis axis = Axis::Location;
  std::string group_a, group_b;      // "inter"/"intra" or "stand-alone"/"linked"
  std::vector<std::string> labels;   // the 20 level-2 labels
  std::vector<long> count_a, count_b;
  long total_a = 0, total_b = 0;

  double pct_a(int i) const;
  double pct_b(int i) const;
  std::string to_tsv() const;
  std::string to_json() const;
};

DistributionReport distribution(const Corpus& corpus, Axis axis);

struct CvReport {
  std::vector<double> fold_f1;
  double mean_f1 = 0;
};

// Runs one training per fold through the supplied callback (fold,
// fold seed) -> overall F1. Fold seeds derive from the master seed.
CvReport cross_validate(const std::function<double(const Fold&, std::uint64_t)>& run_fold,
                        const CvFolds& folds, std::uint64_t master_seed);

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

}  // namespace dpl

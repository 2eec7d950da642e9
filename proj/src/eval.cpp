#include "dpl/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dpl/errors.hpp"

using nlohmann::json;

namespace dpl {

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> labels_in)
    : labels(std::move(labels_in)),
      counts(labels.size(), std::vector<long>(labels.size(), 0)) {}

long ConfusionMatrix::total() const {
  long n = 0;
  for (const auto& row : counts)
    for (long c : row) n += c;
  return n;
}

long ConfusionMatrix::row_sum(int label) const {
  long n = 0;
  for (long c : counts.at(label)) n += c;
  return n;
}

long ConfusionMatrix::col_sum(int label) const {
  long n = 0;
  for (const auto& row : counts) n += row.at(label);
  return n;
}

std::string ConfusionMatrix::to_tsv() const {
  std::ostringstream out;
  out << "gold\\pred";
  for (const std::string& label : labels) out << '\t' << label;
  out << '\n';
  for (std::size_t g = 0; g < labels.size(); ++g) {
    out << labels[g];
    for (long c : counts[g]) out << '\t' << c;
    out << '\n';
  }
  return out.str();
}

ConfusionMatrix confusion(const std::vector<int>& golds, const std::vector<int>& preds,
                          const std::vector<std::string>& inventory) {
  if (golds.size() != preds.size())
    throw ValidationError("confusion: gold and prediction counts differ");
  ConfusionMatrix matrix(inventory);
  int n = static_cast<int>(inventory.size());
  for (std::size_t i = 0; i < golds.size(); ++i) {
    if (golds[i] < 0 || golds[i] >= n || preds[i] < 0 || preds[i] >= n)
      throw ValidationError("confusion: label index outside the inventory");
    ++matrix.counts[golds[i]][preds[i]];
  }
  return matrix;
}

ConfusionMatrix confusion_multi(const std::vector<std::vector<int>>& gold_sets,
                                const std::vector<int>& preds,
                                const std::vector<std::string>& inventory) {
  if (gold_sets.size() != preds.size())
    throw ValidationError("confusion: gold and prediction counts differ");
  std::vector<int> golds(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (gold_sets[i].empty()) throw ValidationError("confusion: empty gold set");
    bool matched = std::find(gold_sets[i].begin(), gold_sets[i].end(), preds[i]) !=
                   gold_sets[i].end();
    golds[i] = matched ? preds[i] : gold_sets[i].front();
  }
  return confusion(golds, preds, inventory);
}

Prf prf(const ConfusionMatrix& matrix, int label) {
  Prf out;
  long diag = matrix.counts.at(label).at(label);
  long col = matrix.col_sum(label);
  long row = matrix.row_sum(label);
  out.precision = col > 0 ? static_cast<double>(diag) / col : 0.0;
  out.recall = row > 0 ? static_cast<double>(diag) / row : 0.0;
  out.f1 = (out.precision + out.recall) > 0
               ? 2 * out.precision * out.recall / (out.precision + out.recall)
               : 0.0;
  return out;
}

double micro_f1(const ConfusionMatrix& matrix) {
  long total = matrix.total();
  if (total == 0) return 0.0;
  long diag = 0;
  for (std::size_t i = 0; i < matrix.labels.size(); ++i) diag += matrix.counts[i][i];
  return static_cast<double>(diag) / total;
}

double macro_f1(const ConfusionMatrix& matrix) {
  if (matrix.labels.empty()) return 0.0;
  double sum = 0;
  for (int i = 0; i < static_cast<int>(matrix.labels.size()); ++i) sum += prf(matrix, i).f1;
  return sum / static_cast<double>(matrix.labels.size());
}

double weighted_overall(double f1_inter, double f1_intra, double p_inter, double p_intra) {
  if (std::abs(p_inter + p_intra - 1.0) > 1e-9)
    throw ValidationError("weighted_overall: proportions must sum to 1");
  return p_inter * f1_inter + p_intra * f1_intra;
}

// ---------------------------------------------------------------------------
// Chi-squared

namespace {

// Regularized lower incomplete gamma P(a, x) by series expansion.
double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  double n = a;
  for (int i = 0; i < 500; ++i) {
    n += 1.0;
    term *= x / n;
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Regularized upper incomplete gamma Q(a, x) by continued fraction.
double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double regularized_gamma_q(double a, double x) {
  if (a <= 0) throw ValidationError("regularized_gamma_q requires a > 0");
  if (x < 0) throw ValidationError("regularized_gamma_q requires x >= 0");
  if (x == 0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_cf(a, x);
}

ChiSquareGeneral chi_square_table(const std::vector<std::vector<double>>& table, bool yates) {
  ChiSquareGeneral result;
  std::size_t rows = table.size();
  if (rows == 0) throw ValidationError("chi-squared table is empty");
  std::size_t cols = table[0].size();
  for (const auto& row : table)
    if (row.size() != cols) throw ValidationError("chi-squared table is ragged");

  std::vector<double> row_sum(rows, 0), col_sum(cols, 0);
  double total = 0;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      if (table[r][c] < 0) throw ValidationError("chi-squared counts must be >= 0");
      row_sum[r] += table[r][c];
      col_sum[c] += table[r][c];
      total += table[r][c];
    }
  result.dof = static_cast<int>((rows - 1) * (cols - 1));
  bool degenerate = total <= 0 ||
                    std::any_of(row_sum.begin(), row_sum.end(), [](double s) { return s == 0; }) ||
                    std::any_of(col_sum.begin(), col_sum.end(), [](double s) { return s == 0; });
  if (degenerate) {
    result.degenerate = true;
    result.statistic = 0;
    result.p_value = 1;
    return result;
  }
  double stat = 0;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      double expected = row_sum[r] * col_sum[c] / total;
      double diff = std::abs(table[r][c] - expected);
      if (yates) diff = std::max(0.0, diff - 0.5);
      stat += diff * diff / expected;
    }
  result.statistic = stat;
  result.p_value = regularized_gamma_q(result.dof / 2.0, stat / 2.0);
  return result;
}

ChiSquareResult chi_square_2x2(const std::array<std::array<double, 2>, 2>& table,
                               bool yates) {
  ChiSquareGeneral g = chi_square_table(
      {{table[0][0], table[0][1]}, {table[1][0], table[1][1]}}, yates);
  ChiSquareResult result;
  result.statistic = g.statistic;
  result.dof = 1;
  result.p_value = g.p_value;
  result.table = table;
  result.degenerate = g.degenerate;
  return result;
}

ChiSquareResult chi_square_location(const std::vector<bool>& correct,
                                    const std::vector<Location>& locations, bool yates) {
  if (correct.size() != locations.size())
    throw ValidationError("chi_square_location: sequence lengths differ");
  std::array<std::array<double, 2>, 2> table{};  // rows: correct/incorrect
  for (std::size_t i = 0; i < correct.size(); ++i) {
    int row = correct[i] ? 0 : 1;
    int col = locations[i] == Location::InterSentential ? 0 : 1;
    table[row][col] += 1;
  }
  return chi_square_2x2(table, yates);
}

// ---------------------------------------------------------------------------
// Report over sense predictions

MetricsReport evaluate_predictions(const std::vector<Instance>& instances,
                                   const std::vector<int>& preds, int sense_level) {
  if (instances.size() != preds.size())
    throw ValidationError("evaluate_predictions: instance/prediction counts differ");
  MetricsReport report;
  report.labels = sense_inventory(sense_level);
  report.n_instances = static_cast<long>(instances.size());

  std::vector<std::vector<int>> gold_sets;
  gold_sets.reserve(instances.size());
  for (const Instance& inst : instances) gold_sets.push_back(inst.gold);
  report.matrix = confusion_multi(gold_sets, preds, report.labels);
  report.micro = micro_f1(report.matrix);
  report.macro = macro_f1(report.matrix);
  for (int i = 0; i < static_cast<int>(report.labels.size()); ++i) {
    report.per_label.push_back(prf(report.matrix, i));
    report.support_proportion.push_back(
        report.n_instances > 0
            ? static_cast<double>(report.matrix.row_sum(i)) / report.n_instances
            : 0.0);
  }

  // Group scores by location.
  std::vector<std::vector<int>> gold_inter, gold_intra;
  std::vector<int> pred_inter, pred_intra;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (instances[i].location == Location::InterSentential) {
      gold_inter.push_back(instances[i].gold);
      pred_inter.push_back(preds[i]);
    } else {
      gold_intra.push_back(instances[i].gold);
      pred_intra.push_back(preds[i]);
    }
  }
  if (report.n_instances > 0) {
    report.p_inter = static_cast<double>(gold_inter.size()) / report.n_instances;
    report.p_intra = static_cast<double>(gold_intra.size()) / report.n_instances;
  }
  if (!gold_inter.empty()) {
    ConfusionMatrix m = confusion_multi(gold_inter, pred_inter, report.labels);
    report.inter_micro = micro_f1(m);
    report.inter_macro = macro_f1(m);
  }
  if (!gold_intra.empty()) {
    ConfusionMatrix m = confusion_multi(gold_intra, pred_intra, report.labels);
    report.intra_micro = micro_f1(m);
    report.intra_macro = macro_f1(m);
  }
  if (report.n_instances > 0) {
    report.overall_micro =
        weighted_overall(report.inter_micro, report.intra_micro, report.p_inter, report.p_intra);
    report.overall_macro =
        weighted_overall(report.inter_macro, report.intra_macro, report.p_inter, report.p_intra);
  }
  return report;
}

std::string MetricsReport::to_tsv() const {
  std::ostringstream out;
  out << std::fixed;
  out << "label\tprecision\trecall\tf1\tproportion\n";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out << labels[i] << '\t' << std::setprecision(3) << per_label[i].precision * 100 << '\t'
        << per_label[i].recall * 100 << '\t' << per_label[i].f1 * 100 << '\t'
        << std::setprecision(2) << support_proportion[i] * 100 << "%\n";
  }
  out << std::setprecision(3);
  out << "micro\t" << micro * 100 << '\n';
  out << "macro\t" << macro * 100 << '\n';
  out << "inter (" << overall_base << ")\t"
      << (overall_base == "macro" ? inter_macro : inter_micro) * 100 << '\n';
  out << "intra (" << overall_base << ")\t"
      << (overall_base == "macro" ? intra_macro : intra_micro) * 100 << '\n';
  out << "overall (" << overall_base << ", weights " << std::setprecision(3) << p_inter << '/'
      << p_intra << ")\t" << overall() * 100 << '\n';
  return out.str();
}

std::string MetricsReport::to_json() const {
  json j;
  j["n_instances"] = n_instances;
  j["micro_f1"] = micro;
  j["macro_f1"] = macro;
  j["inter"] = {{"micro", inter_micro}, {"macro", inter_macro}, {"proportion", p_inter}};
  j["intra"] = {{"micro", intra_micro}, {"macro", intra_macro}, {"proportion", p_intra}};
  j["overall"] = {{"base", overall_base},
                  {"micro", overall_micro},
                  {"macro", overall_macro},
                  {"value", overall()}};
  json labels_json = json::array();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    labels_json.push_back({{"label", labels[i]},
                           {"precision", per_label[i].precision},
                           {"recall", per_label[i].recall},
                           {"f1", per_label[i].f1},
                           {"proportion", support_proportion[i]}});
  }
  j["per_label"] = std::move(labels_json);
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// Distribution reports

double DistributionReport::pct_a(int i) const {
  return total_a > 0 ? 100.0 * static_cast<double>(count_a.at(i)) / total_a : 0.0;
}

double DistributionReport::pct_b(int i) const {
  return total_b > 0 ? 100.0 * static_cast<double>(count_b.at(i)) / total_b : 0.0;
}

std::string DistributionReport::to_tsv() const {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2);
  out << "label\t" << group_a << "\t%\t" << group_b << "\t%\n";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out << labels[i] << '\t' << count_a[i] << '\t' << pct_a(static_cast<int>(i)) << '\t'
        << count_b[i] << '\t' << pct_b(static_cast<int>(i)) << '\n';
  }
  out << "total\t" << total_a << "\t\t" << total_b << "\t\n";
  return out.str();
}

std::string DistributionReport::to_json() const {
  json j;
  j["axis"] = axis == Axis::Location ? "location" : "linkage";
  j["groups"] = {group_a, group_b};
  j["total"] = {total_a, total_b};
  json rows = json::array();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    rows.push_back({{"label", labels[i]},
                    {group_a, count_a[i]},
                    {group_b, count_b[i]},
                    {group_a + "_pct", pct_a(static_cast<int>(i))},
                    {group_b + "_pct", pct_b(static_cast<int>(i))}});
  }
  j["rows"] = std::move(rows);
  return j.dump(2);
}

DistributionReport distribution(const Corpus& corpus, Axis axis) {
  DistributionReport report;
  report.axis = axis;
  report.labels = level2_inventory();
  report.count_a.assign(report.labels.size(), 0);
  report.count_b.assign(report.labels.size(), 0);
  if (axis == Axis::Location) {
    report.group_a = "inter-sentential";
    report.group_b = "intra-sentential";
  } else {
    report.group_a = "stand-alone";
    report.group_b = "linked";
  }

  for (const Document& doc : corpus.docs) {
    std::vector<ByteSpan> spans = doc.sentence_spans();
    for (const RelationRecord& rel : doc.relations) {
      if (rel.rel_type != RelType::Implicit) continue;
      // Each relation counts once, under its first sense.
      int idx = sense_index(rel.senses.front().level2_str(), 2);
      if (idx < 0) continue;
      bool group_b;
      if (axis == Axis::Location) {
        if (spans.empty())
          throw ValidationError(doc.doc_id +
                                ": location distribution requires sentence spans");
        group_b = locate(rel, spans) == Location::IntraSentential;
      } else {
        group_b = is_linked(rel, doc.relations);
      }
      if (group_b) {
        ++report.count_b[idx];
        ++report.total_b;
      } else {
        ++report.count_a[idx];
        ++report.total_a;
      }
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Cross-validation driver

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  // splitmix64 over master + index
  std::uint64_t z = master + 0x9e3779b97f4a7c15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

CvReport cross_validate(const std::function<double(const Fold&, std::uint64_t)>& run_fold,
                        const CvFolds& folds, std::uint64_t master_seed) {
  CvReport report;
  for (std::size_t f = 0; f < folds.folds.size(); ++f) {
    const Fold& fold = folds.folds[f];
    if (fold.train.empty() || fold.test.empty())
      throw ValidationError("cross_validate: empty fold " + std::to_string(f));
    report.fold_f1.push_back(run_fold(fold, derive_seed(master_seed, f)));
  }
  if (!report.fold_f1.empty()) {
    double sum = 0;
    for (double f1 : report.fold_f1) sum += f1;
    report.mean_f1 = sum / static_cast<double>(report.fold_f1.size());
  }
  return report;
}

}  // namespace dpl

#include <doctest.h>

#include <cmath>
#include <map>
#include <set>
#include <random>

#include "dpl/corpus.hpp"
#include "dpl/errors.hpp"
#include "dpl/eval.hpp"

using namespace dpl;

namespace {

const std::vector<std::string> kAbc = {"A", "B", "C"};

}  // namespace

TEST_CASE("confusion counts pairs; diagonal when gold equals pred") {
  std::vector<int> golds = {0, 1, 2, 1};
  ConfusionMatrix diag = confusion(golds, golds, kAbc);
  CHECK(diag.counts[1][1] == 2);
  CHECK(diag.total() == 4);
  CHECK(micro_f1(diag) == 1.0);

  ConfusionMatrix empty = confusion({}, {}, kAbc);
  CHECK(empty.total() == 0);

  CHECK_THROWS_AS(confusion({5}, {0}, kAbc), ValidationError);
  CHECK_THROWS_AS(confusion({0, 1}, {0}, kAbc), ValidationError);
}

TEST_CASE("confusion matches a counting oracle on random pairs") {
  std::mt19937_64 rng(31);
  std::vector<int> golds, preds;
  for (int i = 0; i < 100; ++i) {
    golds.push_back(static_cast<int>(rng() % 3));
    preds.push_back(static_cast<int>(rng() % 3));
  }
  ConfusionMatrix m = confusion(golds, preds, kAbc);
  std::map<std::pair<int, int>, long> oracle;
  for (std::size_t i = 0; i < golds.size(); ++i) ++oracle[{golds[i], preds[i]}];
  for (int g = 0; g < 3; ++g)
    for (int p = 0; p < 3; ++p) {
      auto it = oracle.find({g, p});
      CHECK(m.counts[g][p] == (it == oracle.end() ? 0 : it->second));
    }
}

TEST_CASE("confusion_multi scores against the matched gold sense") {
  std::vector<std::vector<int>> golds = {{0, 1}, {0, 1}, {2}};
  std::vector<int> preds = {1, 2, 2};
  ConfusionMatrix m = confusion_multi(golds, preds, kAbc);
  CHECK(m.counts[1][1] == 1);  // matched the second gold sense
  CHECK(m.counts[0][2] == 1);  // miss lands on the first gold sense
  CHECK(m.counts[2][2] == 1);
}

TEST_CASE("prf handles perfect, absent, and hand-computed cases") {
  std::vector<int> golds = {0, 1, 2, 1};
  ConfusionMatrix diag = confusion(golds, golds, kAbc);
  for (int label = 0; label < 3; ++label) {
    Prf p = prf(diag, label);
    CHECK(p.precision == 1.0);
    CHECK(p.recall == 1.0);
    CHECK(p.f1 == 1.0);
  }

  // Label present in gold but never predicted: all zeros.
  ConfusionMatrix never = confusion({0, 0, 1}, {1, 1, 1}, kAbc);
  Prf p0 = prf(never, 0);
  CHECK(p0.precision == 0.0);
  CHECK(p0.recall == 0.0);
  CHECK(p0.f1 == 0.0);

  // 3x3 hand oracle.
  ConfusionMatrix hand = confusion({0, 0, 1, 1, 2, 2, 0}, {0, 1, 1, 1, 2, 0, 0}, kAbc);
  // Label 0: gold 3, predicted 3 (two correct).
  Prf pa = prf(hand, 0);
  CHECK(pa.precision == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(pa.recall == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  Prf pb = prf(hand, 1);
  CHECK(pb.precision == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(pb.recall == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pb.f1 == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("micro F1 equals accuracy exactly on random single-label data") {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<int> golds, preds;
    int n = 1 + static_cast<int>(rng() % 60);
    long correct = 0;
    for (int i = 0; i < n; ++i) {
      golds.push_back(static_cast<int>(rng() % 3));
      preds.push_back(static_cast<int>(rng() % 3));
      if (golds.back() == preds.back()) ++correct;
    }
    ConfusionMatrix m = confusion(golds, preds, kAbc);
    CHECK(micro_f1(m) == static_cast<double>(correct) / n);
  }
}

TEST_CASE("weighted overall is the stated convex combination") {
  // Published group scores: the weight recovering the overall lands in
  // (0.74, 0.77).
  double f_inter = 35.791, f_intra = 47.154, overall = 38.608;
  double w = (f_intra - overall) / (f_intra - f_inter);
  CHECK(w > 0.74);
  CHECK(w < 0.77);
  CHECK(weighted_overall(f_inter, f_intra, w, 1 - w) ==
        doctest::Approx(overall).epsilon(1e-9));

  CHECK(weighted_overall(42.0, 42.0, 0.3, 0.7) == doctest::Approx(42.0));
  CHECK(weighted_overall(10.0, 90.0, 1.0, 0.0) == 10.0);
  CHECK_THROWS_AS(weighted_overall(1, 2, 0.5, 0.6), ValidationError);
}

TEST_CASE("chi-squared on a uniform table is zero with p=1") {
  ChiSquareResult r = chi_square_2x2({{{10, 10}, {10, 10}}});
  CHECK(r.statistic == 0.0);
  CHECK(r.p_value == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.dof == 1);
  CHECK_FALSE(r.degenerate);
}

TEST_CASE("chi-squared matches independent references") {
  ChiSquareResult r = chi_square_2x2({{{30, 10}, {10, 30}}});
  CHECK(r.statistic == doctest::Approx(20.0).epsilon(1e-12));
  CHECK(r.p_value == doctest::Approx(7.744216431044088e-06).epsilon(1e-9));
  // dof=1 closed form: p = erfc(sqrt(x/2)).
  CHECK(r.p_value == doctest::Approx(std::erfc(std::sqrt(20.0 / 2))).epsilon(1e-9));

  ChiSquareResult t = chi_square_2x2({{{12, 7}, {5, 7}}});
  CHECK(t.statistic == doctest::Approx(1.3716460268317854).epsilon(1e-12));
  CHECK(t.p_value == doctest::Approx(0.2415292747636834).epsilon(1e-9));

  ChiSquareResult y = chi_square_2x2({{{12, 7}, {5, 7}}}, true);
  CHECK(y.statistic == doctest::Approx(0.6411202638950317).epsilon(1e-12));
  CHECK(y.p_value == doctest::Approx(0.42330542432241836).epsilon(1e-9));

  ChiSquareGeneral g = chi_square_table(
      {{10, 4, 6, 1}, {3, 9, 2, 5}, {6, 6, 6, 6}});
  CHECK(g.dof == 6);
  CHECK(g.statistic == doctest::Approx(11.595253798657044).epsilon(1e-12));
  CHECK(g.p_value == doctest::Approx(0.07163178359601002).epsilon(1e-9));
}

TEST_CASE("chi-squared p matches erfc on random 2x2 tables") {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 200; ++trial) {
    std::array<std::array<double, 2>, 2> table{};
    for (auto& row : table)
      for (double& cell : row) cell = 1.0 + static_cast<double>(rng() % 100);
    ChiSquareResult r = chi_square_2x2(table);
    double oracle = std::erfc(std::sqrt(r.statistic / 2));
    CHECK(std::abs(r.p_value - oracle) < 1e-9);
  }
}

TEST_CASE("regularized gamma Q matches reference values") {
  struct Ref {
    double a, x, q;
  };
  const Ref refs[] = {
      {0.5, 0.1, 0.6547208460185768}, {0.5, 3.0, 0.014305878435429641},
      {1.0, 2.5, 0.0820849986238988}, {2.5, 0.7, 0.924313272801667},
      {5.0, 12.0, 0.007600390681066992}, {9.5, 4.0, 0.9866708821944026},
  };
  for (const Ref& ref : refs)
    CHECK(regularized_gamma_q(ref.a, ref.x) == doctest::Approx(ref.q).epsilon(1e-11));
  CHECK(regularized_gamma_q(1.5, 0.0) == 1.0);
}

TEST_CASE("chi-squared flags degenerate marginals") {
  ChiSquareResult r = chi_square_2x2({{{5, 7}, {0, 0}}});
  CHECK(r.degenerate);
  CHECK(r.p_value == 1.0);
}

TEST_CASE("chi-squared is invariant under transpose and label swaps") {
  std::mt19937_64 rng(34);
  for (int trial = 0; trial < 50; ++trial) {
    std::array<std::array<double, 2>, 2> t{};
    for (auto& row : t)
      for (double& cell : row) cell = 1.0 + static_cast<double>(rng() % 40);
    double base = chi_square_2x2(t).statistic;
    std::array<std::array<double, 2>, 2> transposed = {{{t[0][0], t[1][0]},
                                                        {t[0][1], t[1][1]}}};
    std::array<std::array<double, 2>, 2> swapped = {{{t[1][1], t[1][0]},
                                                     {t[0][1], t[0][0]}}};
    CHECK(chi_square_2x2(transposed).statistic == doctest::Approx(base).epsilon(1e-12));
    CHECK(chi_square_2x2(swapped).statistic == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("chi_square_location builds the correctness-by-location table") {
  std::vector<bool> correct = {true, true, false, true, false, false, true, false};
  std::vector<Location> locations = {
      Location::InterSentential, Location::IntraSentential, Location::InterSentential,
      Location::InterSentential, Location::IntraSentential, Location::InterSentential,
      Location::IntraSentential, Location::IntraSentential};
  ChiSquareResult r = chi_square_location(correct, locations);
  CHECK(r.table[0][0] == 2);  // correct, inter
  CHECK(r.table[0][1] == 2);
  CHECK(r.table[1][0] == 2);
  CHECK(r.table[1][1] == 2);
  CHECK(r.statistic == 0.0);
}

TEST_CASE("evaluate_predictions aggregates micro, macro and group scores") {
  std::vector<Instance> instances(4);
  for (int i = 0; i < 4; ++i) {
    instances[i].arg1_tokens = {"x"};
    instances[i].arg2_tokens = {"y"};
  }
  instances[0].gold = {0};
  instances[0].location = Location::InterSentential;
  instances[1].gold = {0};
  instances[1].location = Location::InterSentential;
  instances[2].gold = {1};
  instances[2].location = Location::IntraSentential;
  instances[3].gold = {1, 2};
  instances[3].location = Location::IntraSentential;

  std::vector<int> preds = {0, 1, 1, 2};
  MetricsReport report = evaluate_predictions(instances, preds, 2);
  CHECK(report.micro == doctest::Approx(0.75));
  CHECK(report.p_inter == doctest::Approx(0.5));
  CHECK(report.inter_micro == doctest::Approx(0.5));
  CHECK(report.intra_micro == doctest::Approx(1.0));
  CHECK(report.overall_micro == doctest::Approx(0.75));

  double support = 0;
  for (double p : report.support_proportion) support += p;
  CHECK(support == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("distribution reports match a brute-force scan") {
  Corpus corpus = generate_synthetic_corpus(9, 120);

  for (Axis axis : {Axis::Location, Axis::Linkage}) {
    DistributionReport report = distribution(corpus, axis);
    // Oracle: direct counting.
    std::map<std::string, std::pair<long, long>> oracle;
    long total_a = 0, total_b = 0;
    for (const Document& doc : corpus.docs) {
      std::vector<ByteSpan> spans = doc.sentence_spans();
      for (const RelationRecord& rel : doc.relations) {
        if (rel.rel_type != RelType::Implicit) continue;
        bool b = axis == Axis::Location
                     ? locate(rel, spans) == Location::IntraSentential
                     : is_linked(rel, doc.relations);
        auto& cell = oracle[rel.senses.front().level2_str()];
        if (b) {
          ++cell.second;
          ++total_b;
        } else {
          ++cell.first;
          ++total_a;
        }
      }
    }
    CHECK(report.total_a == total_a);
    CHECK(report.total_b == total_b);
    for (std::size_t i = 0; i < report.labels.size(); ++i) {
      auto it = oracle.find(report.labels[i]);
      long a = it == oracle.end() ? 0 : it->second.first;
      long b = it == oracle.end() ? 0 : it->second.second;
      CHECK(report.count_a[i] == a);
      CHECK(report.count_b[i] == b);
    }

    // Percentages sum to 100 within rounding.
    double sum_a = 0, sum_b = 0;
    for (std::size_t i = 0; i < report.labels.size(); ++i) {
      sum_a += report.pct_a(static_cast<int>(i));
      sum_b += report.pct_b(static_cast<int>(i));
    }
    CHECK(std::abs(sum_a - 100.0) < 0.05);
    CHECK(std::abs(sum_b - 100.0) < 0.05);
  }
}

TEST_CASE("distribution counts every implicit relation once") {
  Corpus corpus = generate_synthetic_corpus(10, 90);
  long implicit_count = 0;
  for (const Document& doc : corpus.docs)
    for (const RelationRecord& rel : doc.relations)
      if (rel.rel_type == RelType::Implicit) ++implicit_count;

  DistributionReport location = distribution(corpus, Axis::Location);
  long summed = 0;
  for (std::size_t i = 0; i < location.labels.size(); ++i)
    summed += location.count_a[i] + location.count_b[i];
  CHECK(summed == implicit_count);
  CHECK(location.total_a + location.total_b == implicit_count);

  DistributionReport linkage = distribution(corpus, Axis::Linkage);
  CHECK(linkage.total_a + linkage.total_b == implicit_count);
}

TEST_CASE("cross_validate runs one training per fold and averages") {
  Corpus corpus = generate_synthetic_corpus(11, 140);
  CvFolds folds = cv_folds(corpus, 5);
  std::vector<std::uint64_t> seeds;
  CvReport report = cross_validate(
      [&](const Fold& fold, std::uint64_t seed) {
        seeds.push_back(seed);
        return static_cast<double>(fold.test.size());
      },
      folds, 99);
  CHECK(report.fold_f1.size() == 5);
  double sum = 0;
  for (double f : report.fold_f1) sum += f;
  CHECK(report.mean_f1 == doctest::Approx(sum / 5));
  // Fold seeds are distinct and deterministic.
  CHECK(std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() == 5);
  CHECK(derive_seed(99, 0) == seeds[0]);

  // A constant score yields that constant as the mean.
  CvReport constant = cross_validate(
      [](const Fold&, std::uint64_t) { return 0.25; }, folds, 1);
  CHECK(constant.mean_f1 == doctest::Approx(0.25));
}

TEST_CASE("report serializers emit their tables") {
  Corpus corpus = generate_synthetic_corpus(12, 60);
  DistributionReport report = distribution(corpus, Axis::Linkage);
  std::string tsv = report.to_tsv();
  CHECK(tsv.find("stand-alone") != std::string::npos);
  CHECK(tsv.find("total") != std::string::npos);
  CHECK(report.to_json().find("\"axis\"") != std::string::npos);
}

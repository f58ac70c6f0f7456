#include <catch2/catch_amalgamated.hpp>

#include "factcheck/metrics.hpp"
#include "factcheck/util.hpp"

using namespace factcheck;

namespace {

// Brute-force per-class scores, independent of the implementation path.
struct BruteForce {
  double accuracy;
  double macro;
  double weighted;
  std::vector<double> per_class_f1;
};

BruteForce brute_force(const ConfusionMatrix& cm) {
  const std::size_t k = cm.labels.size();
  double total = 0;
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) total += static_cast<double>(cm.at(i, j));
  BruteForce out{0, 0, 0, {}};
  double diag = 0;
  for (std::size_t c = 0; c < k; ++c) {
    double tp = static_cast<double>(cm.at(c, c));
    double pred_c = 0, gold_c = 0;
    for (std::size_t i = 0; i < k; ++i) {
      pred_c += static_cast<double>(cm.at(i, c));
      gold_c += static_cast<double>(cm.at(c, i));
    }
    double precision = pred_c > 0 ? tp / pred_c : 0;
    double recall = gold_c > 0 ? tp / gold_c : 0;
    double f1 = precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0;
    out.per_class_f1.push_back(f1);
    out.macro += f1 / static_cast<double>(k);
    out.weighted += f1 * gold_c / total;
    diag += tp;
  }
  out.accuracy = diag / total;
  return out;
}

ConfusionMatrix random_matrix(util::Rng& rng) {
  std::vector<const LabelScheme*> schemes{&LabelScheme::five(), &LabelScheme::three(),
                                          &LabelScheme::two()};
  const auto& scheme = *schemes[rng.next_below(schemes.size())];
  ConfusionMatrix cm;
  cm.labels = scheme.labels();
  cm.counts.assign(scheme.size(), std::vector<std::size_t>(scheme.size(), 0));
  for (auto& row : cm.counts)
    for (auto& cell : row) cell = rng.next_below(20);
  if (cm.total() == 0) cm.counts[0][0] = 1;
  return cm;
}

}  // namespace

TEST_CASE("confusion matrix accumulates gold x predicted counts") {
  const auto& three = LabelScheme::three();

  SECTION("perfect predictions are diagonal") {
    std::vector<std::pair<Verdict, Verdict>> records;
    for (auto v : three.labels()) records.emplace_back(v, v);
    auto cm = confusion(records, three);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) CHECK(cm.at(i, j) == (i == j ? 1u : 0u));
  }

  SECTION("constant predictions fill one column") {
    std::vector<std::pair<Verdict, Verdict>> records{
        {Verdict::MostlyTrue, Verdict::MostlyTrue},
        {Verdict::HalfTrue, Verdict::MostlyTrue},
        {Verdict::MostlyFalse, Verdict::MostlyTrue}};
    auto cm = confusion(records, three);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(cm.at(i, 0) == 1);
      CHECK(cm.at(i, 1) == 0);
      CHECK(cm.at(i, 2) == 0);
    }
  }

  SECTION("hand-tallied four-record fixture") {
    std::vector<std::pair<Verdict, Verdict>> records{
        {Verdict::MostlyTrue, Verdict::HalfTrue},
        {Verdict::MostlyTrue, Verdict::MostlyTrue},
        {Verdict::MostlyFalse, Verdict::MostlyFalse},
        {Verdict::HalfTrue, Verdict::MostlyFalse}};
    auto cm = confusion(records, three);
    CHECK(cm.at(0, 0) == 1);
    CHECK(cm.at(0, 1) == 1);
    CHECK(cm.at(1, 2) == 1);
    CHECK(cm.at(2, 2) == 1);
    CHECK(cm.total() == 4);
  }

  SECTION("labels outside the scheme are rejected") {
    std::vector<std::pair<Verdict, Verdict>> records{{Verdict::True, Verdict::True}};
    CHECK_THROWS_AS(confusion(records, three), LabelError);
  }
}

TEST_CASE("metrics on known matrices") {
  SECTION("diagonal matrix scores 1.0 everywhere") {
    ConfusionMatrix cm;
    cm.labels = LabelScheme::three().labels();
    cm.counts = {{4, 0, 0}, {0, 7, 0}, {0, 0, 2}};
    auto m = metrics(cm);
    CHECK(m.accuracy == 1.0);
    CHECK(m.f1_macro == 1.0);
    CHECK(m.f1_weighted == 1.0);
    CHECK(m.f1_micro == 1.0);
  }

  SECTION("binary [[3,1],[2,4]] hand computation") {
    ConfusionMatrix cm;
    cm.labels = LabelScheme::two().labels();
    cm.counts = {{3, 1}, {2, 4}};
    auto m = metrics(cm);
    CHECK(m.accuracy == Catch::Approx(0.7).epsilon(1e-12));
    CHECK(m.per_class.at(Verdict::MostlyTrue).f1 == Catch::Approx(0.6667).margin(5e-5));
    CHECK(m.per_class.at(Verdict::MostlyFalse).f1 == Catch::Approx(0.7273).margin(5e-5));
    CHECK(m.f1_macro == Catch::Approx(0.6970).margin(5e-5));
    CHECK(m.f1_weighted ==
          Catch::Approx((4.0 * (2.0 / 3.0) + 6.0 * (8.0 / 11.0)) / 10.0).epsilon(1e-12));
    CHECK(m.f1_micro == m.accuracy);
  }

  SECTION("zero-support class contributes zero to macro") {
    ConfusionMatrix cm;
    cm.labels = LabelScheme::three().labels();
    cm.counts = {{5, 0, 0}, {0, 5, 0}, {0, 0, 0}};
    auto m = metrics(cm);
    CHECK(m.f1_macro == Catch::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(m.per_class.at(Verdict::MostlyFalse).f1 == 0.0);
    CHECK(m.f1_weighted == 1.0);
  }

  SECTION("empty matrix is rejected") {
    ConfusionMatrix cm;
    cm.labels = LabelScheme::two().labels();
    cm.counts = {{0, 0}, {0, 0}};
    CHECK_THROWS_AS(metrics(cm), DomainError);
  }
}

TEST_CASE("metrics oracle over random single-label matrices") {
  util::Rng rng(2024);
  for (int iter = 0; iter < 1000; ++iter) {
    auto cm = random_matrix(rng);
    auto m = metrics(cm);
    auto bf = brute_force(cm);
    // micro F1 collapses to accuracy for single-label classification
    CHECK(m.f1_micro == m.accuracy);
    CHECK(m.accuracy == bf.accuracy);
    CHECK(std::fabs(m.f1_macro - bf.macro) <= 1e-12);
    CHECK(std::fabs(m.f1_weighted - bf.weighted) <= 1e-12);
    // bounds and ordering
    double min_f1 = 1, max_f1 = 0;
    for (double f : bf.per_class_f1) {
      min_f1 = std::min(min_f1, f);
      max_f1 = std::max(max_f1, f);
    }
    CHECK(m.f1_macro >= min_f1 - 1e-12);
    CHECK(m.f1_macro <= max_f1 + 1e-12);
    for (double v : {m.accuracy, m.f1_macro, m.f1_weighted, m.f1_micro}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("chance baseline") {
  SECTION("five-class count fixture reproduces the printed baselines") {
    auto d5 = ClassDistribution::from_counts(LabelScheme::five(), {2531, 3347, 3534, 3212, 5231});
    auto b5 = chance_baseline(d5);
    CHECK(b5.accuracy == Catch::Approx(0.212602299506408).epsilon(1e-12));
    CHECK(std::fabs(b5.accuracy - 0.213) <= 0.001);
    CHECK(b5.f1_macro == Catch::Approx(0.2).epsilon(1e-12));
    CHECK(b5.f1_micro == b5.accuracy);
    CHECK(b5.f1_weighted == b5.accuracy);
    CHECK(b5.majority_accuracy == Catch::Approx(5231.0 / 17855.0).epsilon(1e-12));

    auto d3 = ClassDistribution::from_counts(LabelScheme::three(), {5878, 3534, 8443});
    CHECK(std::fabs(chance_baseline(d3).accuracy - 0.371) <= 0.001);
    CHECK(chance_baseline(d3).f1_macro == Catch::Approx(1.0 / 3.0).epsilon(1e-12));

    auto d2 = ClassDistribution::from_counts(LabelScheme::two(), {9412, 8443});
    CHECK(std::fabs(chance_baseline(d2).accuracy - 0.501) <= 0.001);
    CHECK(chance_baseline(d2).f1_macro == Catch::Approx(0.5).epsilon(1e-12));
  }

  SECTION("uniform marginals give 1/k") {
    auto d = ClassDistribution::from_counts(LabelScheme::five(), {7, 7, 7, 7, 7});
    CHECK(chance_baseline(d).accuracy == Catch::Approx(0.2).epsilon(1e-12));
    auto d2 = ClassDistribution::from_counts(LabelScheme::two(), {10, 10});
    CHECK(chance_baseline(d2).accuracy == Catch::Approx(0.5).epsilon(1e-12));
  }
}

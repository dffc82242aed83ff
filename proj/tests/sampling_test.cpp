#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "fixtures.hpp"

namespace spn {
namespace {

using testing::brute_probability;
using testing::example_network;
using testing::example_joint;
using testing::for_each_assignment;

const double nan = kMissing;

DataMatrix replicate(std::vector<double> row, std::size_t n) {
  DataMatrix out;
  for (std::size_t i = 0; i < n; ++i) out.append_row(row);
  return out;
}

TEST(Sample, AncestralMatchesJointInTotalVariation) {
  RandomSource rng(1234);
  const DataMatrix draws = sample(example_network(), replicate({nan, nan, nan}, 200000), rng);
  std::array<double, 8> freq{};
  for (std::size_t r = 0; r < draws.rows(); ++r) freq[int(draws(r, 0)) * 4 + int(draws(r, 1)) * 2 + int(draws(r, 2))] += 1.0;
  double tv = 0.0;
  for (int i = 0; i < 8; ++i) tv += std::abs(freq[i] / draws.rows() - example_joint(i >> 2, (i >> 1) & 1, i & 1));
  EXPECT_LT(0.5 * tv, 0.01);
}

TEST(Sample, ConditionalOnEvidence) {
  RandomSource rng(77);
  const DataMatrix draws = sample(example_network(), replicate({nan, 0, 0}, 100000), rng);
  double ones = 0.0;
  for (std::size_t r = 0; r < draws.rows(); ++r) {
    ASSERT_EQ(draws(r, 1), 0.0);
    ASSERT_EQ(draws(r, 2), 0.0);
    ones += draws(r, 0);
  }
  const double exact = example_joint(1, 0, 0) / (example_joint(0, 0, 0) + example_joint(1, 0, 0));
  EXPECT_NEAR(exact, 0.8, 1e-12);
  EXPECT_NEAR(ones / draws.rows(), 0.8, 0.01);
}

TEST(Sample, FullEvidenceUnchanged) {
  RandomSource rng(3);
  const DataMatrix in{{1, 0, 1}, {0, 0, 0}};
  const DataMatrix out = sample(example_network(), in, rng);
  for (std::size_t i = 0; i < in.values().size(); ++i) EXPECT_EQ(out.values()[i], in.values()[i]);
}

TEST(Sample, DeterministicForSeed) {
  const DataMatrix tmpl = replicate({nan, 1, nan}, 500);
  RandomSource a(42), b(42), c(43);
  const DataMatrix x = sample(example_network(), tmpl, a);
  const DataMatrix y = sample(example_network(), tmpl, b);
  const DataMatrix z = sample(example_network(), tmpl, c);
  EXPECT_TRUE(std::equal(x.values().begin(), x.values().end(), y.values().begin()));
  EXPECT_FALSE(std::equal(x.values().begin(), x.values().end(), z.values().begin()));
}

TEST(Sample, ZeroProbabilityEvidenceIsDataError) {
  NetworkBuilder b;
  const Network net = b.finalize(b.make_product({b.make_leaf("Categorical", {1.0, 0.0}, 0), b.make_leaf("Gaussian", {0.0, 1.0}, 1)}));
  RandomSource rng(0);
  EXPECT_THROW(sample(net, DataMatrix{{1, nan}}, rng), data_error);
  EXPECT_THROW(sample(example_network(), DataMatrix{{1, nan}}, rng), data_error);
}

TEST(Sample, MixedNetworkKeepsEvidence) {
  const Context ctx = testing::mixed_context(4);
  const Network net = generate_random_structure(ctx, 2, 3, 9);
  RandomSource rng(9);
  const DataMatrix out = sample(net, replicate({nan, 0.5, nan, -1.25}, 200), rng);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    EXPECT_EQ(out(r, 1), 0.5);
    EXPECT_EQ(out(r, 3), -1.25);
    EXPECT_FALSE(is_missing(out(r, 0)));
    EXPECT_FALSE(is_missing(out(r, 2)));
  }
}

// Empirical conditional frequencies against brute-force enumeration, within
// three binomial standard errors per configuration.
TEST(Sample, ConditionalsMatchEnumeration) {
  const std::vector<std::vector<std::size_t>> shapes{{2, 2, 3}, {3, 4}, {2, 2, 2}, {2, 3, 2}};
  for (std::size_t t = 0; t < shapes.size(); ++t) {
    std::vector<ColumnInfo> cols;
    for (std::size_t k : shapes[t]) cols.push_back({"Categorical", {k, std::nullopt}});
    const Network net = generate_random_structure(Context(cols), 2, 2, 500 + t);
    ASSERT_TRUE(validate(net).ok());
    const auto& card = shapes[t];

    RandomSource pick(t);
    for (int pattern = 0; pattern < 3; ++pattern) {
      std::vector<double> evidence(card.size(), nan);
      if (pattern > 0) {
        const std::size_t v = pick.below(card.size());
        evidence[v] = double(pick.below(card[v]));
      }
      std::map<std::vector<double>, double> exact;
      double z = 0.0;
      for_each_assignment(card, [&](const std::vector<double>& full) {
        for (std::size_t i = 0; i < card.size(); ++i)
          if (!is_missing(evidence[i]) && evidence[i] != full[i]) return;
        const double p = brute_probability(net, full);
        exact[full] = p;
        z += p;
      });

      const std::size_t n = 100000;
      RandomSource rng(1000 * t + pattern);
      const DataMatrix draws = sample(net, replicate(evidence, n), rng);
      std::map<std::vector<double>, double> counts;
      for (std::size_t r = 0; r < n; ++r) counts[std::vector<double>(draws.row(r).begin(), draws.row(r).end())] += 1.0;
      for (const auto& [config, c] : counts) ASSERT_TRUE(exact.contains(config));
      for (const auto& [config, p] : exact) {
        const double q = p / z;
        const double se = std::sqrt(q * (1.0 - q) / n);
        const double emp = counts.contains(config) ? counts[config] / n : 0.0;
        EXPECT_LE(std::abs(emp - q), 3.0 * se + 1e-12) << "shape " << t << " pattern " << pattern;
      }
    }
  }
}

}  // namespace
}  // namespace spn

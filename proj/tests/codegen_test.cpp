#include <gtest/gtest.h>

#include <cmath>

#include "c_harness.hpp"
#include "fixtures.hpp"

namespace spn {
namespace {

using testing::example_network;

TEST(EmitSource, Deterministic) {
  EXPECT_EQ(emit_source(example_network()), emit_source(example_network()));
  EXPECT_EQ(emit_source(example_network(), {"f", true}), emit_source(example_network(), {"f", true}));
}

TEST(EmitSource, OneLocalPerNodeInIdOrder) {
  const std::string src = emit_source(example_network());
  std::size_t last = 0;
  for (int i = 0; i < 14; ++i) {
    const std::string decl = "double n" + std::to_string(i) + (i == 7 || i == 13 ? ";" : " =");
    const std::size_t at = src.find(decl);
    ASSERT_NE(at, std::string::npos) << decl;
    EXPECT_GT(at, last);
    last = at;
  }
  EXPECT_NE(src.find("return n13;"), std::string::npos);
  EXPECT_EQ(src.find("malloc"), std::string::npos);
  EXPECT_EQ(src.find("static"), std::string::npos);
}

TEST(EmitSource, SingleGaussianLeafIsOneGuardedExpression) {
  NetworkBuilder b;
  const std::string src = emit_source(b.finalize(b.make_leaf("Gaussian", {5.0, 1.0}, 0)));
  EXPECT_NE(src.find("const double n0 = (x[0] != x[0]) ? 0.0 : "), std::string::npos) << src;
  EXPECT_EQ(src.find("double n1"), std::string::npos);
}

TEST(EmitSource, Errors) {
  EXPECT_THROW(emit_source(example_network(), {"2bad", false}), model_error);
  EXPECT_THROW(emit_source(example_network(), {"", false}), model_error);
  LeafRegistry reg = LeafRegistry::with_builtins();
  LeafFamily custom = pareto_family();
  custom.name = "Opaque";
  custom.emit_c = nullptr;
  reg.register_family(custom);
  NetworkBuilder b(reg);
  EXPECT_THROW(emit_source(b.finalize(b.make_leaf("Opaque", {2.0}, 0))), model_error);
}

class CompiledCode : public ::testing::Test {
 protected:
  void SetUp() override {
    compiler_ = testing::find_c_compiler();
    if (!compiler_) GTEST_SKIP() << "no C compiler found; compiled-code checks skipped";
  }

  testing::CompiledEvaluator build(const Network& net, const std::string& tag) {
    auto ev = testing::compile_c(*compiler_, emit_source(net, {"spn_loglik", true}), tag);
    EXPECT_TRUE(ev.ok) << ev.diagnostics;
    return ev;
  }

  std::optional<std::string> compiler_;
};

TEST_F(CompiledCode, ExampleAllConfigurationsAndMarginal) {
  const auto ev = build(example_network(), "example");
  ASSERT_TRUE(ev.ok);
  DataMatrix rows;
  testing::for_each_assignment({2, 2, 2}, [&](const std::vector<double>& r) { rows.append_row(r); });
  rows.append_row(std::vector<double>{1, 0, kMissing});
  rows.append_row(std::vector<double>{kMissing, kMissing, kMissing});
  const auto got = testing::run_evaluator(ev, rows);
  const auto want = log_likelihood(example_network(), rows);
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t r = 0; r < 8; ++r) EXPECT_NEAR(got[r], want[r], 1e-12);
  EXPECT_NEAR(got[8], std::log(0.2848), 1e-12);
  EXPECT_NEAR(got[9], 0.0, 1e-15);
}

TEST_F(CompiledCode, MatchesInterpreterOnRandomNetworks) {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const Network net = generate_random_structure(testing::mixed_context(3 + seed), 2, 2, seed);
    const auto ev = build(net, "rand" + std::to_string(seed));
    ASSERT_TRUE(ev.ok);
    const DataMatrix rows = testing::random_inputs(net, 300, seed);
    const auto got = testing::run_evaluator(ev, rows);
    const auto want = log_likelihood(net, rows);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t r = 0; r < got.size(); ++r) EXPECT_NEAR(got[r], want[r], 1e-9) << "row " << r;
  }
}

TEST_F(CompiledCode, ParetoSupportAndZeroDensity) {
  NetworkBuilder b;
  const Network net = b.finalize(b.make_sum({b.make_leaf("Pareto", {2.0}, 0), b.make_leaf("Pareto", {3.0}, 0)}, {0.3, 0.7}));
  const auto ev = build(net, "pareto");
  ASSERT_TRUE(ev.ok);
  const auto got = testing::run_evaluator(ev, DataMatrix{{1.5}, {0.5}, {kMissing}});
  ASSERT_EQ(got.size(), 3u);
  EXPECT_NEAR(got[0], std::log(16.0 / 27.0), 1e-12);
  EXPECT_EQ(got[1], -std::numeric_limits<double>::infinity());
  EXPECT_NEAR(got[2], 0.0, 1e-15);
}

}  // namespace
}  // namespace spn

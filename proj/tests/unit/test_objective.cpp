#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "dnas/complexity.hpp"
#include "dnas/data.hpp"
#include "dnas/error.hpp"
#include "dnas/net.hpp"
#include "dnas/objective.hpp"
#include "dnas/oracle.hpp"
#include "dnas/sigma.hpp"
#include "../support/toys.hpp"

using namespace dnas;

namespace {

InterpTable hand_table() {
  return InterpTable::from_anchors({{"w4_w4", 4.0, 0.5}, {"w1_w1", 1.0, 1.0}, {"w2_w2", 2.0, 0.6}});
}

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("dnas_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace

TEST(CrossEntropy, HandValues) {
  const std::vector<double> uniform(8, 0.0);
  const std::vector<int> labels = {0, 3};
  EXPECT_NEAR(cross_entropy(uniform, 4, labels), std::log(4.0), 1e-15);
  const std::vector<double> two = {1.0, 0.0};
  const std::vector<int> first = {0};
  EXPECT_NEAR(cross_entropy(two, 2, first), std::log1p(std::exp(-1.0)), 1e-15);
  EXPECT_NEAR(cross_entropy(two, 2, first), 0.3133, 1e-4);
}

TEST(CrossEntropy, StableForHugeLogits) {
  const std::vector<double> big = {1000.0, 0.0, -1000.0};
  const std::vector<int> right = {0};
  const std::vector<int> wrong = {2};
  EXPECT_NEAR(cross_entropy(big, 3, right), 0.0, 1e-12);
  EXPECT_NEAR(cross_entropy(big, 3, wrong), 2000.0, 1e-9);
  // Shift invariance.
  const std::vector<double> a = {0.3, -1.2, 2.0};
  const std::vector<double> b = {500.3, 498.8, 502.0};
  EXPECT_NEAR(cross_entropy(a, 3, right), cross_entropy(b, 3, right), 1e-12);
}

TEST(CrossEntropy, RejectsBadShapes) {
  const std::vector<double> logits(6, 0.0);
  const std::vector<int> labels = {0, 1, 2};
  EXPECT_THROW(cross_entropy(logits, 4, labels), DomainError);
  const std::vector<int> out_of_range = {0, 3};
  EXPECT_THROW(cross_entropy(logits, 3, out_of_range), DomainError);
}

TEST(Sigma, Values) {
  EXPECT_EQ(Sigma::by_name("identity")(0.7), 0.7);
  EXPECT_EQ(Sigma::by_name("hinge")(0.7), 0.0);
  EXPECT_NEAR(Sigma::by_name("hinge")(1.5), 0.5, 1e-15);
  EXPECT_EQ(Sigma::by_name("exp")(1.0), 1.0);
  EXPECT_EQ(Sigma::by_name("leaky_relu")(-2.0), -0.02);
  EXPECT_EQ(Sigma::by_name("sigmoid")(0.0), 0.5);
  EXPECT_EQ(Sigma::by_name("identity-ratio").kind(), Sigma::Kind::Identity);
  EXPECT_EQ(Sigma::by_name("exp-ratio").kind(), Sigma::Kind::Exp);
  EXPECT_THROW(Sigma::by_name("relu6"), ConfigError);
  EXPECT_EQ(Sigma().kind(), Sigma::Kind::Hinge);
}

TEST(Sigma, Increasing) {
  for (const auto& name : Sigma::registered_names()) {
    const Sigma s = Sigma::by_name(name);
    EXPECT_EQ(Sigma::by_name(s.name()).kind(), s.kind());
    double prev = s(-5.0);
    for (double x = -4.9; x < 5.0; x += 0.1) {
      const double y = s(x);
      if (s.kind() == Sigma::Kind::Hinge) {
        EXPECT_GE(y, prev) << name;
      } else {
        EXPECT_GT(y, prev) << name;
      }
      prev = y;
    }
  }
}

TEST(CombinedLoss, RatioAndLambda) {
  const auto arch = toys::quant_toy();
  const auto cheap = make_homogeneous(arch, 0);
  const auto dear = make_homogeneous(arch, 1);
  const double zc = network_complexity(arch, cheap);
  const double zd = network_complexity(arch, dear);
  const auto l = combined_loss(0.8, arch, dear, cheap, 0.5, Sigma::by_name("identity"));
  EXPECT_EQ(l.ce, 0.8);
  EXPECT_NEAR(l.complexity, zd / zc, 1e-12);
  EXPECT_NEAR(l.combined, 0.8 + 0.5 * zd / zc, 1e-12);
  EXPECT_EQ(l.lambda, 0.5);
  // Hinge: at or under the target costs nothing.
  const auto under = combined_loss(0.8, arch, cheap, dear, 3.0, Sigma::by_name("hinge"));
  EXPECT_EQ(under.combined, 0.8);
  const auto off = combined_loss(0.8, arch, dear, cheap, 0.0, Sigma::by_name("exp"));
  EXPECT_EQ(off.combined, 0.8);
}

TEST(Interp, HandValues) {
  const InterpTable t = hand_table();
  EXPECT_EQ(t.anchors.front().z, 1.0);
  EXPECT_NEAR(interp_ce(t, 3.0), 0.55, 1e-12);
  EXPECT_NEAR(interp_ce(t, 1.5), 0.8, 1e-12);
  for (const auto& a : t.anchors) EXPECT_EQ(interp_ce(t, a.z), a.ce_mean);
  EXPECT_THROW(interp_ce(t, 0.5), DomainError);
  EXPECT_THROW(interp_ce(t, 4.5), DomainError);
  for (const auto& name : Sigma::registered_names()) {
    const Sigma s = Sigma::by_name(name);
    for (const auto& a : t.anchors) EXPECT_EQ(interpolation_loss(a.ce_mean, a.z, t, s), s(0.0));
  }
  EXPECT_NEAR(interpolation_loss(0.75, 3.0, t, Sigma::by_name("identity")), 0.2, 1e-12);
}

TEST(Interp, Validation) {
  EXPECT_THROW(InterpTable::from_anchors({{"a", 1.0, 1.0}}), DomainError);
  EXPECT_THROW(InterpTable::from_anchors({{"a", 1.0, 1.0}, {"b", 1.0, 0.5}}), DomainError);
  EXPECT_THROW(InterpTable::from_anchors({{"a", 1.0, 1.0}, {"b", 2.0, std::nan("")}}),
               DomainError);
}

TEST(Interp, SaveLoadRoundTrip) {
  const auto dir = temp_dir("interp");
  InterpTable t = hand_table();
  t.anchors[1].ce_mean = 0.1 + 0.2;  // not exactly representable in short decimal
  t.save(dir / "table.csv");
  EXPECT_EQ(InterpTable::load(dir / "table.csv"), t);
  std::ifstream in(dir / "table.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "config_id,z,ce_mean");
  EXPECT_THROW(InterpTable::load(dir / "missing.csv"), FileError);
  std::ofstream(dir / "bad.csv") << "config_id,z,ce_mean\nw1_w1,1,abc\n";
  EXPECT_THROW(InterpTable::load(dir / "bad.csv"), ConfigError);
}

TEST(Interp, BuiltTableReproducesAnchors) {
  const auto arch = toys::prune_toy();
  SyntheticSpec ds;
  ds.train_per_class = 8;
  const Dataset data = make_cluster_images(ds);
  std::vector<NetworkConfig> anchors;
  for (double r : {0.25, 0.5, 1.0}) anchors.push_back(make_homogeneous_width(arch, r));
  TrainSettings t;
  const InterpTable a = build_interp_table(arch, data.training(), anchors, t, 3, 2);
  const InterpTable b = build_interp_table(arch, data.training(), anchors, t, 3, 2);
  EXPECT_EQ(a, b);
  ASSERT_EQ(a.anchors.size(), 3u);
  EXPECT_EQ(a.anchors[0].config_id, "w1_w1");
  for (const auto& x : a.anchors) {
    EXPECT_EQ(interpolation_loss(x.ce_mean, x.z, a, Sigma::by_name("sigmoid")), 0.5);
  }
}

TEST(ExpectedLoss, HandValue) {
  // One binomial layer of 5 filters at p = 0.5: E[a] = 4 * 0.5.
  const auto arch = toys::conv_arch(Mode::Pruning, {5}, 1);
  const ConfigLoss sampled = [](const NetworkConfig& c) {
    return static_cast<double>(c[0].active_filters() - 1);
  };
  EXPECT_NEAR(expected_loss(arch, AlphaParams::zeros(arch), sampled), 2.0, 1e-12);
  const ConfigLoss constant = [](const NetworkConfig&) { return 3.0; };
  EXPECT_NEAR(expected_loss(toys::quant_toy(), AlphaParams::zeros(toys::quant_toy()), constant),
              3.0, 1e-12);
  const auto big = toys::conv_arch(Mode::Pruning, {64, 64, 64, 64}, 1);
  EXPECT_THROW(expected_loss(big, AlphaParams::zeros(big), constant), SpaceTooLarge);
}

#include <gtest/gtest.h>

#include <algorithm>

#include "halrp/verify.hpp"

using namespace halrp;

TEST(Verify, AllSuitesPass) {
  const auto results = verify::run_all(0);
  EXPECT_EQ(results.size(), 6u);
  for (const auto& r : results) {
    EXPECT_TRUE(r.passed) << r.name << ": " << r.detail;
    EXPECT_GT(r.trials, 0u) << r.name;
    EXPECT_LE(r.max_error, r.tolerance) << r.name;
  }
  const std::string report = verify::format_report(results);
  EXPECT_EQ(std::count(report.begin(), report.end(), '\n'), 6);
}

TEST(Verify, ReversedSpectrumIsCaught) {
  const auto broken = [](const Matrix& m) {
    auto f = linalg::svd(m);
    std::reverse(f.sigma.begin(), f.sigma.end());
    return f;
  };
  const auto r = verify::eckart_young(0, broken);
  EXPECT_FALSE(r.passed);
  EXPECT_FALSE(r.detail.empty());
}

TEST(Verify, ScaledSpectrumIsCaught) {
  const auto broken = [](const Matrix& m) {
    auto f = linalg::svd(m);
    if (!f.sigma.empty()) f.sigma.back() *= 0.5;
    return f;
  };
  EXPECT_FALSE(verify::eckart_young(1, broken).passed);
}

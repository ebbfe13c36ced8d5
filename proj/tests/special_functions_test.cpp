#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "bnpo/special_functions.hpp"

namespace sf = bnpo::special;

namespace {

struct Reference {
  double x, lgamma, digamma, trigamma;
};

// 40-digit values from tests/oracles/special_values.py (mpmath).
constexpr Reference kReference[] = {
    {1e-3, 6.9071788853838536825, -1000.5755719318103005, 1000001.642533195869},
    {0.1, 2.2527126517342059599, -10.423754940411076795, 101.43329915079275882},
    {0.5, 0.57236494292470008707, -1.9635100260214234794, 4.9348022005446793094},
    {1, 0.0, -0.57721566490153286061, 1.6449340668482264365},
    {1.5, -0.12078223763524522235, 0.036489973978576520559, 0.93480220054467930942},
    {2, 0.0, 0.42278433509846713939, 0.64493406684822643647},
    {2.5, 0.28468287047291915963, 0.70315664064524318723, 0.49035775610023486497},
    {3.7, 1.4280723266653879219, 1.1671535393615113859, 0.3100378576700383191},
    {6, 4.7874917427820459942, 1.7061176684318004727, 0.18132295573711532536},
    {7.25, 7.0521854507385394449, 1.9104535268837360284, 0.14787923315893216965},
    {10, 12.801827480081469611, 2.2517525890667211076, 0.10516633568168574612},
    {42.5, 115.90007047041453012, 3.7376932365000936171, 0.023808399244056415466},
    {100, 359.13420536957539878, 4.6001618527380874002, 0.010050166663333571395},
    {1000, 5905.2204232091812118, 6.9072551956488120521, 0.0010005001666666333334},
};

struct BetaReference {
  double x, y, log_beta;
};

constexpr BetaReference kBetaReference[] = {
    {0.5, 0.5, 1.1447298858494001741},     {1.5, 1.5, -0.93471165583043575411},
    {2, 3, -2.4849066497880003102},        {3, 4, -4.0943445622221006848},
    {0.01, 50, 4.5604589713090879287},     {300, 700, -612.61860379509223359},
};

// psi_1(1) from the Basel sum with an Euler-Maclaurin tail.
double basel_oracle() {
  const int n = 100000;
  double sum = 0.0;
  for (int k = n; k >= 1; --k) sum += 1.0 / (static_cast<double>(k) * k);
  const double nn = n;
  return sum + 1.0 / nn - 1.0 / (2.0 * nn * nn) + 1.0 / (6.0 * nn * nn * nn);
}

// psi(1) = lim (H_n - ln n) with sign flipped, plus the asymptotic tail.
double harmonic_oracle() {
  const int n = 100000;
  double h = 0.0;
  for (int k = n; k >= 1; --k) h += 1.0 / k;
  const double nn = n;
  const double gamma = h - std::log(nn) - 1.0 / (2.0 * nn) + 1.0 / (12.0 * nn * nn);
  return -gamma;
}

}  // namespace

TEST(LogGamma, MatchesReferenceValues) {
  for (const auto& r : kReference) {
    const double got = sf::log_gamma(r.x);
    if (r.lgamma == 0.0) {
      EXPECT_EQ(got, 0.0) << "x=" << r.x;
    } else {
      EXPECT_LE(std::abs(got - r.lgamma), 1e-12 * std::abs(r.lgamma)) << "x=" << r.x;
    }
  }
}

TEST(LogGamma, SmallIntegerFactorials) {
  EXPECT_NEAR(sf::log_gamma(5.0), std::log(24.0), 1e-14);
  EXPECT_NEAR(sf::log_gamma(0.5), 0.5 * std::log(std::numbers::pi), 1e-14);
  double log_fact = 0.0;
  for (int n = 2; n <= 170; ++n) {
    log_fact += std::log(static_cast<double>(n - 1));
    EXPECT_LE(std::abs(sf::log_gamma(n) - log_fact), 1e-12 * std::max(1.0, log_fact)) << n;
  }
}

TEST(LogGamma, AgreesWithStdLgammaAwayFromRoots) {
  for (double x = 1e-3; x < 1e3; x *= 1.37) {
    if (std::abs(x - 1.0) < 0.05 || std::abs(x - 2.0) < 0.05) continue;
    const double ref = std::lgamma(x);
    EXPECT_LE(std::abs(sf::log_gamma(x) - ref), 1e-12 * std::abs(ref) + 1e-15) << x;
  }
}

TEST(LogGamma, RejectsNonPositive) {
  EXPECT_THROW(sf::log_gamma(0.0), std::domain_error);
  EXPECT_THROW(sf::log_gamma(-1.5), std::domain_error);
  EXPECT_THROW(sf::log_gamma(std::nan("")), std::domain_error);
}

TEST(PositiveReal, RejectsNonPositive) {
  EXPECT_EQ(sf::PositiveReal(2.5).value(), 2.5);
  EXPECT_THROW(sf::PositiveReal(0.0), std::domain_error);
  EXPECT_THROW(sf::PositiveReal(-3.0), std::domain_error);
}

TEST(LogBeta, ClosedForms) {
  EXPECT_EQ(sf::log_beta(1.0, 1.0), 0.0);
  EXPECT_NEAR(sf::log_beta(1.5, 1.5), std::log(std::numbers::pi / 8.0), 1e-14);
  EXPECT_NEAR(sf::log_beta(2.0, 3.0), std::log(1.0 / 12.0), 1e-14);
  for (const auto& r : kBetaReference) {
    EXPECT_LE(std::abs(sf::log_beta(r.x, r.y) - r.log_beta), 1e-12 * std::abs(r.log_beta))
        << r.x << "," << r.y;
  }
}

TEST(LogBeta, ComposesFromLogGamma) {
  for (double x : {0.3, 1.0, 2.5, 9.0}) {
    for (double y : {0.7, 1.5, 4.0, 30.0}) {
      const double composed = sf::log_gamma(x) + sf::log_gamma(y) - sf::log_gamma(x + y);
      EXPECT_NEAR(sf::log_beta(x, y), composed, 1e-13);
    }
  }
}

TEST(LogBeta, SymmetricExactly) {
  for (double x = 0.05; x < 200.0; x *= 1.9) {
    for (double y = 0.03; y < 300.0; y *= 2.3) {
      EXPECT_EQ(sf::log_beta(x, y), sf::log_beta(y, x)) << x << "," << y;
    }
  }
}

TEST(LogBeta, RejectsNonPositive) {
  EXPECT_THROW(sf::log_beta(0.0, 1.0), std::domain_error);
  EXPECT_THROW(sf::log_beta(1.0, -2.0), std::domain_error);
}

TEST(Digamma, MatchesReferenceValues) {
  for (const auto& r : kReference) {
    EXPECT_NEAR(sf::digamma(r.x), r.digamma, 1e-10) << "x=" << r.x;
  }
}

TEST(Digamma, SeriesOracleAtOne) {
  const double oracle = harmonic_oracle();
  EXPECT_NEAR(oracle, -0.5772156649, 1e-10);
  EXPECT_NEAR(sf::digamma(1.0), oracle, 1e-12);
  EXPECT_NEAR(sf::digamma(1.0), -sf::kEulerGamma, 1e-15);
  EXPECT_NEAR(sf::digamma(2.0), 1.0 - sf::kEulerGamma, 1e-15);
}

TEST(Digamma, FiniteDifferenceOfLogGamma) {
  const double h = 1e-5;
  for (double x : {0.7, 3.0, 12.5}) {
    const double fd = (sf::log_gamma(x + h) - sf::log_gamma(x - h)) / (2.0 * h);
    EXPECT_NEAR(fd, sf::digamma(x), 1e-6) << x;
  }
}

TEST(Digamma, Recurrence) {
  for (double x : {0.1, 0.5, 1.0, 2.0, 10.0, 100.0}) {
    EXPECT_NEAR(sf::digamma(x + 1.0) - sf::digamma(x), 1.0 / x, 1e-10) << x;
  }
}

TEST(Digamma, RejectsNonPositive) {
  EXPECT_THROW(sf::digamma(0.0), std::domain_error);
  EXPECT_THROW(sf::digamma(-0.5), std::domain_error);
}

TEST(Trigamma, MatchesReferenceValues) {
  for (const auto& r : kReference) {
    EXPECT_NEAR(sf::trigamma(r.x), r.trigamma, 1e-10) << "x=" << r.x;
  }
}

TEST(Trigamma, BaselOracle) {
  const double oracle = basel_oracle();
  EXPECT_NEAR(oracle, std::numbers::pi * std::numbers::pi / 6.0, 1e-14);
  EXPECT_NEAR(sf::trigamma(1.0), oracle, 1e-13);
  EXPECT_NEAR(sf::trigamma(2.0), oracle - 1.0, 1e-13);
}

TEST(Trigamma, FiniteDifferenceOfDigamma) {
  const double h = 1e-5;
  for (double x : {0.8, 4.0, 25.0}) {
    const double fd = (sf::digamma(x + h) - sf::digamma(x - h)) / (2.0 * h);
    EXPECT_NEAR(fd, sf::trigamma(x), 1e-6) << x;
  }
}

TEST(Trigamma, Recurrence) {
  for (double x : {0.1, 0.5, 1.0, 2.0, 10.0, 100.0}) {
    EXPECT_NEAR(sf::trigamma(x + 1.0) - sf::trigamma(x), -1.0 / (x * x), 1e-10) << x;
  }
}

TEST(Trigamma, StrictlyDecreasing) {
  double previous = sf::trigamma(0.01);
  for (double x = 0.02; x <= 100.0; x += 0.01) {
    const double v = sf::trigamma(x);
    ASSERT_LT(v, previous) << x;
    previous = v;
  }
}

TEST(Trigamma, ReciprocalIsSuperadditive) {
  auto f = [](double x) { return 1.0 / sf::trigamma(x); };
  for (int i = 1; i <= 50; ++i) {
    for (int j = 1; j <= 50; ++j) {
      const double x = 0.2 * i;
      const double y = 0.2 * j;
      EXPECT_GT(f(x + y), f(x) + f(y)) << x << "," << y;
    }
  }
  for (double x : {1e-3, 1e-2}) {
    for (double y : {1e-3, 0.5, 10.0}) EXPECT_GT(f(x + y), f(x) + f(y)) << x << "," << y;
  }
}

TEST(Trigamma, RejectsNonPositive) {
  EXPECT_THROW(sf::trigamma(0.0), std::domain_error);
  EXPECT_THROW(sf::trigamma(-4.0), std::domain_error);
}

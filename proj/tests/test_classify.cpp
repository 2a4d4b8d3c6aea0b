#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "hh/classify.hpp"

using namespace hh;

namespace {

ConventionTable table() {
  ConventionTable t;
  t.k_sd = 2;
  t.k_asd = 1;
  t.k_r = -1;
  t.k_mix = -0.5;
  return t;
}

std::array<double, 5> expand_quartic(double lead, const std::array<double, 4>& roots) {
  // lead * prod (xi - r): coefficients c[k] of xi^k
  std::array<double, 5> c{0, 0, 0, 0, 0};
  c[0] = lead;
  int deg = 0;
  for (double r : roots) {
    std::array<double, 5> n{0, 0, 0, 0, 0};
    for (int k = 0; k <= deg; ++k) {
      n[k + 1] += c[k];
      n[k] -= c[k] * r;
    }
    ++deg;
    c = n;
  }
  return c;
}

int multiplicity_at(const std::vector<RootCluster>& cl, double r) {
  for (const auto& c : cl)
    if (!c.at_infinity && std::abs(c.value - std::complex<double>(r, 0)) < 1e-5)
      return c.multiplicity;
  return 0;
}

}  // namespace

TEST_CASE("quartic roots: the para-Kahler ASD factorization") {
  // 2 Lambda (xi + z)^2 (xi + 1/w)^2 with Lambda=1, z=0.5
  SUBCASE("w = 2: double roots merge into two clusters") {
    auto c = expand_quartic(2.0, {-0.5, -0.5, -0.5, -0.5});
    auto cl = quartic_roots(c);
    REQUIRE(cl.size() == 1);
    CHECK(cl[0].multiplicity == 4);
    CHECK(cl[0].value.real() == doctest::Approx(-0.5).epsilon(1e-6));
  }
  SUBCASE("w = 4 separates the pairs") {
    auto c = expand_quartic(2.0, {-0.5, -0.5, -0.25, -0.25});
    auto cl = quartic_roots(c);
    REQUIRE(cl.size() == 2);
    CHECK(multiplicity_at(cl, -0.5) == 2);
    CHECK(multiplicity_at(cl, -0.25) == 2);
  }
}

TEST_CASE("quartic roots: four simple roots") {
  auto c = expand_quartic(1.0, {1, 2, 3, 4});
  auto cl = quartic_roots(c);
  REQUIRE(cl.size() == 4);
  for (double r : {1.0, 2.0, 3.0, 4.0}) CHECK(multiplicity_at(cl, r) == 1);
}

TEST_CASE("quartic roots: quadruple root and degree reduction") {
  auto c = expand_quartic(1.0, {1, 1, 1, 1});
  auto cl = quartic_roots(c);
  REQUIRE(cl.size() == 1);
  CHECK(cl[0].multiplicity == 4);

  // degree-2 input: projective double root at infinity
  std::array<double, 5> q{1.0, 2.0, 1.0, 0.0, 0.0};
  auto cl2 = quartic_roots(q);
  int inf = 0;
  for (auto& cc : cl2)
    if (cc.at_infinity) inf = cc.multiplicity;
  CHECK(inf == 2);
  CHECK(multiplicity_at(cl2, -1.0) == 2);

  std::array<double, 5> zero{0, 0, 0, 0, 0};
  CHECK_THROWS_AS(quartic_roots(zero), ConstraintViolated);
}

TEST_CASE("petrov classification of aligned packets") {
  ConventionTable t = table();
  CHECK(petrov_from_coeffs({0, 0, 0, 0, 0}, t) == PetrovType::O);
  // C3 = 1, others 0: 2 C2^2 - 3 C3 C1 = 0 -> D
  CHECK(petrov_from_coeffs({0, 0, 1, 0, 0}, t) == PetrovType::D);
  // C3=0, C2=1 -> III
  CHECK(petrov_from_coeffs({0, 1, 0, 0, 0}, t) == PetrovType::III);
  // C2=0, C1=1 -> N
  CHECK(petrov_from_coeffs({1, 0, 0, 0, 0}, t) == PetrovType::N);
  // generic aligned: C1, C2, C3 with 2C2^2 != 3C3C1 -> II
  CHECK(petrov_from_coeffs({1, 1, 1, 0, 0}, t) == PetrovType::II);
  // aligned D with all three nonzero: 2 C2^2 = 3 C3 C1
  CHECK(petrov_from_coeffs({1.5, 1.5, 1.0, 0, 0}, t) == PetrovType::D);
}

TEST_CASE("petrov: generic non-aligned quartic is type I") {
  auto c = expand_quartic(1.0, {0.3, -1.2, 2.0, 0.9});
  // interpret coefficients as weighted packet: C^(k+1) = c[k]/weight
  std::array<double, 5> C;
  ConventionTable t = table();
  for (int k = 0; k < 5; ++k) C[k] = c[k] / t.quartic_weights[k];
  CHECK(petrov_from_coeffs(C, t) == PetrovType::I);
}

TEST_CASE("classifier monotonicity: perturbed type-D stays II or I, never O") {
  ConventionTable t = table();
  std::mt19937_64 rng(555);
  auto uni = [&](double lo, double hi) { return lo + (hi - lo) * (double(rng() >> 11) * 0x1.0p-53); };
  int degraded = 0;
  for (int trial = 0; trial < 200; ++trial) {
    std::array<double, 5> C{2.0 / 3.0 * 1.5 * 1.5, 1.5, 1.0, 0, 0};  // exact D
    for (int k = 0; k < 3; ++k) C[k] += uni(1e-2, 3e-2) * (uni(-1, 1) > 0 ? 1 : -1);
    PetrovType p;
    try {
      p = petrov_from_coeffs(C, t);
    } catch (const Inconclusive&) {
      continue;  // borderline clustering is allowed to abstain
    }
    CHECK(p != PetrovType::O);
    CHECK(p != PetrovType::N);
    if (p == PetrovType::I || p == PetrovType::II) ++degraded;
  }
  CHECK(degraded > 150);
}

TEST_CASE("eigen summary labels") {
  SUBCASE("two double eigenvalues, diagonalizable") {
    std::array<std::array<double, 4>, 4> m{{{0.7, 0, 0, 0}, {0, 0.7, 0, 0}, {0, 0, -0.7, 0}, {0, 0, 0, -0.7}}};
    EigenSummary es = eigen_summary(m);
    REQUIRE(es.eigenvalues.size() == 2);
    CHECK(es.eigenvector_count == 4);
  }
  SUBCASE("nilpotent with two Jordan blocks: quadruple eigenvalue, 2 eigenvectors") {
    std::array<std::array<double, 4>, 4> m{{{0, 1, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 1}, {0, 0, 0, 0}}};
    EigenSummary es = eigen_summary(m);
    REQUIRE(es.eigenvalues.size() == 1);
    CHECK(es.eigenvalues[0].multiplicity == 4);
    CHECK(es.eigenvector_count == 2);
  }
  SUBCASE("zero matrix") {
    std::array<std::array<double, 4>, 4> m{};
    EigenSummary es = eigen_summary(m);
    CHECK(es.scale == 0.0);
    CHECK(es.eigenvector_count == 4);
  }
}

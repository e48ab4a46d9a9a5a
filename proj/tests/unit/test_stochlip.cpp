#include <doctest.h>

#include <cmath>
#include <numbers>

#include "detlip.hpp"
#include "error.hpp"
#include "stochlip.hpp"

using namespace slc;
using nlohmann::json;

namespace {

DomainBox square(double r, std::size_t n) { return DomainBox(std::vector<double>(n, -r), std::vector<double>(n, r)); }

SLLCConfig config(const DomainBox& box, double l, std::size_t samples) {
  SLLCConfig c(box);
  c.l = l;
  c.mc_samples = samples;
  c.pairs.num_pairs = 60;
  return c;
}

// Exact value of (E ratio - 1)/h for dx = ax dt + sigma x dW at l = 2.
double scalar_quotient(double a, double sigma, double h) {
  const double s2 = sigma * sigma;
  return 2 * a + s2 + h * (a * a + s2 * s2 / 2);
}

}  // namespace

TEST_SUITE("stochlip") {
  TEST_CASE("zero diffusion reduces to l times the deterministic constant") {
    const auto det = builtin("vanderpol-deterministic", json::object());
    const auto box = square(2.0, 2);
    for (double l : {1.0, 2.0}) {
      const auto c = config(box, l, 2000);
      const auto est = sllc_estimate(det, c);
      const double mp = mplus_estimate(det.drift, box, c.norm, c.pairs, c.llc_ladder).point_estimate;
      CHECK(est.point_estimate == doctest::Approx(l * mp).epsilon(0.05));
      CHECK(est.ci_width() == doctest::Approx(0.0));
    }
  }

  TEST_CASE("scalar linear trace matches the exact per-h quotient") {
    const double a = -1.0, sigma = 0.5;
    const auto m = builtin("scalar-linear", {{"a", a}, {"sigma", sigma}});
    const auto est = sllc_estimate(m, config(square(2.0, 1), 2.0, 40000));
    REQUIRE(est.per_h.size() == 4);
    for (const auto& row : est.per_h) CHECK(std::abs(row.estimate - scalar_quotient(a, sigma, row.h)) < 4 * row.stderr_ + 1e-12);
    CHECK(est.point_estimate == doctest::Approx(2 * a + sigma * sigma).epsilon(0.01));
    CHECK(est.ci_lo <= est.point_estimate);
    CHECK(est.point_estimate <= est.ci_hi);
    CHECK_FALSE(est.inconclusive);
    CHECK(est.samples == 40000);
  }

  TEST_CASE("lub mode is not below s-lub mode") {
    const auto m = builtin("vanderpol-multiplicative", {{"sigma", 0.35}});
    auto c = config(square(2.0, 2), 2.0, 4000);
    const auto s = sllc_estimate(m, c);
    c.mode = LipschitzMode::Lub;
    const auto l = sllc_estimate(m, c);
    CHECK(s.point_estimate <= l.point_estimate + 1e-9);
  }

  TEST_CASE("estimates are reproducible and thread-independent") {
    const auto m = builtin("vanderpol-multiplicative", {{"sigma", 0.35}});
    auto c = config(square(2.0, 2), 1.0, 2000);
    const auto a = sllc_estimate(m, c);
    c.threads = 4;
    const auto b = sllc_estimate(m, c);
    CHECK(a.point_estimate == b.point_estimate);
    CHECK(a.ci_lo == b.ci_lo);
    c.seed += 1;
    const auto d = sllc_estimate(m, c);
    CHECK(d.point_estimate != a.point_estimate);
  }

  TEST_CASE("configuration errors") {
    const auto m = builtin("scalar-linear", {{"a", -1.0}, {"sigma", 0.5}});
    auto c = config(square(2.0, 1), 2.0, 500);
    CHECK_THROWS_AS(sllc_estimate(m, c), InvalidArgument);
    c.mc_samples = 2000;
    c.h_ladder = {1e-3, 7e-4, 5e-4};
    CHECK_THROWS_AS(sllc_estimate(m, c), InvalidArgument);
    c.h_ladder = {1e-3, 5e-4, 2.5e-4};
    c.l = 0.5;
    CHECK_THROWS_AS(sllc_estimate(m, c), InvalidArgument);
    c.l = 2.0;
    CHECK_THROWS_AS(sllc_estimate(m, config(square(2.0, 2), 2.0, 2000)), DimensionMismatch);
    const auto nc = builtin("linear", {{"A", {{0.0, 0.0}, {0.0, 0.0}}}, {"B", {{{0.0, 1.0}, {0.0, 0.0}}, {{0.0, 0.0}, {1.0, 0.0}}}}});
    CHECK_THROWS_AS(sllc_estimate(nc, config(square(1.0, 2), 2.0, 2000)), Unsupported);
  }

  TEST_CASE("bound with the sampled constants") {
    const auto det = builtin("vanderpol-deterministic", json::object());
    const auto c = config(square(2.0, 2), 2.0, 1000);
    const auto b = prop5_bound_llc(det, c);
    CHECK(b.noise_term == 0.0);
    CHECK(b.value == doctest::Approx(2.0 * mplus_estimate(det.drift, c.domain, c.norm, c.pairs, c.llc_ladder).point_estimate));

    const double a = -0.8, sigma = 0.6;
    const auto sl = builtin("scalar-linear", {{"a", a}, {"sigma", sigma}});
    CHECK(prop5_bound_llc(sl, config(square(2.0, 1), 2.0, 1000)).value == doctest::Approx(2 * a - sigma * sigma).epsilon(1e-6));

    const double s = 0.35;
    const auto mul = builtin("vanderpol-multiplicative", {{"sigma", s}});
    const auto bm = prop5_bound_llc(mul, c);
    CHECK(std::abs(bm.value - 2 * (1 - 8 * s * s)) < 1e-3);
  }

  TEST_CASE("bound with Jacobian measures") {
    const auto box = square(2.0, 2);
    for (double s : {0.1, 0.35, 0.5}) {
      const auto mul = builtin("vanderpol-multiplicative", {{"sigma", s}});
      const auto b = prop5_bound_measure(mul, 2.0, box, NormSpec(), 41);
      CHECK(b.value == doctest::Approx(2 * (1 - 8 * s * s)).epsilon(1e-9));
      CHECK(std::abs(b.noise_term) < 1e-9);
    }
    const auto add = builtin("vanderpol-additive", {{"sigma", 0.35}});
    const auto det = builtin("vanderpol-deterministic", json::object());
    CHECK(prop5_bound_measure(add, 2.0, box, NormSpec(), 41).value ==
          doctest::Approx(2.0 * sup_jacobian_measure(det, JacobianTarget::drift(), box, NormSpec(), 41).point_estimate));

    const json lin{{"A", {{-1.0, 2.0}, {0.5, -3.0}}}, {"sigma", 0.4}};
    const auto lm = builtin("linear", lin);
    Matrix a(2, 2);
    a << -1.0, 2.0, 0.5, -3.0;
    CHECK(prop5_bound_measure(lm, 2.0, box, NormSpec(), 5).value ==
          doctest::Approx(2.0 * (matrix_measure(a, NormSpec()) - 0.08)).epsilon(1e-12));
  }

  TEST_CASE("bounds agree for linear models") {
    const json lin{{"A", {{-1.0, 2.0}, {0.5, -3.0}}}, {"sigma", 0.4}};
    const auto lm = builtin("linear", lin);
    for (auto k : {NormKind::L1, NormKind::L2, NormKind::Linf}) {
      auto c = config(square(1.0, 2), 2.0, 1000);
      c.norm = NormSpec(k);
      c.pairs.num_pairs = 240;
      const double b13 = prop5_bound_llc(lm, c).value;
      const double b14 = prop5_bound_measure(lm, 2.0, c.domain, c.norm, 5).value;
      CHECK(std::abs(b13 - b14) < 1e-6);
    }
  }

  TEST_CASE("linear-diffusion bound") {
    const auto det = builtin("vanderpol-deterministic", json::object());
    const auto box = square(2.0, 2);
    CHECK(linear_diffusion_bound(det, NormSpec(), box, 41) ==
          doctest::Approx(sup_jacobian_measure(det, JacobianTarget::drift(), box, NormSpec(), 41).point_estimate));

    Matrix a(2, 2);
    a << 1.0, 0.0, 0.0, -1.0;
    const JacobianFn jf = [a](std::span<const double>) { return a; };
    CHECK(linear_diffusion_bound(jf, std::vector<double>{2.0}, NormSpec(), box, 3) == doctest::Approx(-1.0));

    const auto lm = builtin("linear", {{"A", {{-1.0, 0.5}, {0.0, -2.0}}}, {"sigma", {0.3, 0.7}}});
    Matrix la(2, 2);
    la << -1.0, 0.5, 0.0, -2.0;
    const double bound = linear_diffusion_bound(lm, NormSpec(), box, 3);
    CHECK(bound <= matrix_measure(la, NormSpec()));
    CHECK(bound == doctest::Approx(matrix_measure(la, NormSpec()) - 0.5 * (0.09 + 0.49)));

    const auto mul = builtin("vanderpol-multiplicative", {{"sigma", 0.35}});
    CHECK_THROWS_AS(linear_diffusion_bound(mul, NormSpec(), box, 41), InvalidArgument);
  }

  TEST_CASE("audit relations") {
    const auto det = builtin("vanderpol-deterministic", json::object());
    const auto audit0 = bound_audit(det, config(square(2.0, 2), 2.0, 1000), 41);
    CHECK(audit0.relation == AuditRelation::Consistent);

    const auto sl = builtin("scalar-linear", {{"a", -1.0}, {"sigma", 0.5}});
    const auto audit = bound_audit(sl, config(square(2.0, 1), 2.0, 20000), 41);
    CHECK(audit.estimate.point_estimate == doctest::Approx(-1.75).epsilon(0.02));
    CHECK(audit.bound13.value == doctest::Approx(-2.25).epsilon(1e-6));
    CHECK(audit.bound14.value == doctest::Approx(-2.25).epsilon(1e-9));
    CHECK(audit.relation == AuditRelation::EstimateExceedsBound);
    CHECK(to_string(audit.relation) == "estimate-exceeds-bound");
  }

  TEST_CASE("half-normal mean") {
    CHECK(half_normal_mean(2024, 1000000) == doctest::Approx(std::sqrt(2.0 / std::numbers::pi)).epsilon(0.005));
  }
}

#include <doctest.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <set>
#include <stdexcept>
#include <vector>

#include "catoni/datagen.hpp"
#include "catoni/estimators.hpp"

namespace {

using namespace catoni;

const double kNan = std::numeric_limits<double>::quiet_NaN();

double mean_of(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size()));
}

}  // namespace

TEST_SUITE("datagen") {

TEST_CASE("streams are reproducible and seed-sensitive") {
  Rng a(42);
  Rng b(42);
  Rng c(43);
  bool all_equal = true;
  bool any_diff = false;
  for (int i = 0; i < 2000; ++i) {
    const double ua = a.uniform();
    const double ub = b.uniform();
    all_equal = all_equal && (ua == ub);
    any_diff = any_diff || (ua != c.uniform());
  }
  CHECK(all_equal);
  CHECK(any_diff);

  // Every generator replays bit-exactly from the same seed.
  Rng g1(7);
  Rng g2(7);
  for (int i = 0; i < 2000; ++i) {
    CHECK(g1.normal() == g2.normal());
  }
  Rng h1(8);
  Rng h2(8);
  for (int i = 0; i < 500; ++i) {
    CHECK(h1.gamma(2.5) == h2.gamma(2.5));
    CHECK(h1.chi_square(4.0) == h2.chi_square(4.0));
    CHECK(h1.student_t(5.0) == h2.student_t(5.0));
  }
}

TEST_CASE("uniform draws stay strictly inside the unit interval") {
  Rng rng(1);
  double lo = 1.0;
  double hi = 0.0;
  for (int i = 0; i < 1000000; ++i) {
    const double u = rng.uniform();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  CHECK(lo > 0.0);
  CHECK(hi < 1.0);
}

TEST_CASE("generator moments match the distributions") {
  const int n = 200000;
  Rng rng(2024);
  std::vector<double> normals(n);
  for (double& x : normals) x = rng.normal();
  CHECK(std::fabs(mean_of(normals)) <= 0.0112);
  CHECK(sd_of(normals) >= 0.99);
  CHECK(sd_of(normals) <= 1.01);

  Rng rg(2025);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += rg.gamma(3.0);
  CHECK(std::fabs(acc / n - 3.0) <= 0.02);

  Rng rc(2026);
  acc = 0.0;
  for (int i = 0; i < n; ++i) acc += rc.chi_square(4.0);
  CHECK(std::fabs(acc / n - 4.0) <= 0.032);

  Rng rt(2027);
  acc = 0.0;
  for (int i = 0; i < n; ++i) acc += rt.student_t(5.0);
  CHECK(std::fabs(acc / n) <= 0.0145);

  Rng ru(2028);
  acc = 0.0;
  for (int i = 0; i < n; ++i) acc += ru.uniform();
  CHECK(std::fabs(acc / n - 0.5) <= 0.0032);
}

TEST_CASE("uniform_index covers its range") {
  Rng rng(5);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 5000; ++i) {
    const std::uint64_t k = rng.uniform_index(10);
    CHECK(k < 10);
    seen.insert(k);
  }
  CHECK(seen.size() == 10);
  for (int i = 0; i < 100; ++i) CHECK(rng.uniform_index(1) == 0);
  CHECK_THROWS_AS(rng.uniform_index(0), std::invalid_argument);
}

TEST_CASE("generator parameter validation") {
  Rng rng(6);
  CHECK_THROWS_AS(rng.gamma(0.0), std::invalid_argument);
  CHECK_THROWS_AS(rng.gamma(-1.0), std::invalid_argument);
  CHECK_THROWS_AS(rng.gamma(kNan), std::invalid_argument);
  CHECK_THROWS_AS(rng.chi_square(0.0), std::invalid_argument);
  CHECK_THROWS_AS(rng.student_t(0.0), std::invalid_argument);
  CHECK_THROWS_AS(rng.student_t(-2.0), std::invalid_argument);
}

TEST_CASE("noise spec text round trips") {
  for (const char* text : {"normal:1.5", "t:2.1", "pareto:1:2.1",
                           "frechet:0:1:2.6", "dpareto:1:2.1", "halft:3"}) {
    CHECK(NoiseSpec::parse(text).name() == text);
  }
  const NoiseSpec t = NoiseSpec::parse("t:2.1");
  CHECK(t.family == NoiseFamily::StudentT);
  CHECK(t.df == 2.1);

  for (const char* bad : {"normal", "pareto:1", "weibull:1", "t:abc", "t:1:2",
                          "normal:inf", ""}) {
    CHECK_THROWS_AS(NoiseSpec::parse(bad), std::invalid_argument);
  }
}

TEST_CASE("noise spec validation") {
  CHECK_NOTHROW(NoiseSpec::normal(0.0));
  CHECK_THROWS_AS(NoiseSpec::normal(-1.0), std::invalid_argument);
  CHECK_THROWS_AS(NoiseSpec::student_t(0.0), std::invalid_argument);
  // Centered asymmetric families need a finite mean.
  CHECK_THROWS_AS(NoiseSpec::half_t(1.0), std::invalid_argument);
  CHECK_THROWS_AS(NoiseSpec::pareto(1.0, 0.9), std::invalid_argument);
  // The symmetric double Pareto has no centering requirement.
  CHECK_NOTHROW(NoiseSpec::double_pareto(1.0, 1.5));
  CHECK_THROWS_AS(NoiseSpec::double_pareto(-1.0, 1.5), std::invalid_argument);
  NoiseSpec bad_loc = NoiseSpec::frechet(0.0, 1.0, 2.6);
  bad_loc.location = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(bad_loc.validate(), std::invalid_argument);
}

TEST_CASE("analytic moments against independent arithmetic") {
  const NoiseSpec par = NoiseSpec::pareto(1.0, 2.1);
  CHECK(par.analytic_mean() == doctest::Approx(2.1 / 1.1).epsilon(1e-12));
  CHECK(par.analytic_sd() ==
        doctest::Approx(std::sqrt(21.0) / 1.1).epsilon(1e-12));

  CHECK(NoiseSpec::student_t(2.1).analytic_sd() ==
        doctest::Approx(std::sqrt(21.0)).epsilon(1e-12));
  CHECK_THROWS_AS(NoiseSpec::student_t(2.0).analytic_sd(), std::domain_error);
  CHECK_THROWS_AS(NoiseSpec::student_t(1.0).analytic_mean(),
                  std::domain_error);

  const NoiseSpec dp = NoiseSpec::double_pareto(2.0, 3.0);
  CHECK(dp.analytic_mean() == 0.0);
  CHECK(dp.analytic_sd() ==
        doctest::Approx(2.0 * std::sqrt(3.0)).epsilon(1e-12));

  CHECK(NoiseSpec::frechet(0.0, 1.0, 2.6).analytic_mean() ==
        doctest::Approx(std::tgamma(1.0 - 1.0 / 2.6)).epsilon(1e-12));
  CHECK(NoiseSpec::frechet(1.0, 2.0, 3.0).analytic_mean() ==
        doctest::Approx(1.0 + 2.0 * std::tgamma(2.0 / 3.0)).epsilon(1e-12));

  // Half-t with df = 5: gamma(2.5) = 0.75 sqrt(pi) collapses the mean to a
  // rational multiple of sqrt(5)/pi.
  const NoiseSpec ht = NoiseSpec::half_t(5.0);
  const double ht_mean = 4.0 * std::sqrt(5.0) / (3.0 * M_PI);
  CHECK(ht.analytic_mean() == doctest::Approx(ht_mean).epsilon(1e-12));
  CHECK(ht.analytic_sd() ==
        doctest::Approx(std::sqrt(5.0 / 3.0 - ht_mean * ht_mean))
            .epsilon(1e-12));

  CHECK_THROWS_AS(NoiseSpec::pareto(1.0, 2.0).analytic_sd(),
                  std::domain_error);
  CHECK_THROWS_AS(NoiseSpec::half_t(2.0).analytic_sd(), std::domain_error);

  // Centering zeroes the effective mean; without it the raw mean survives.
  CHECK(NoiseSpec::pareto(1.0, 2.1).effective_mean() == 0.0);
  NoiseSpec raw = NoiseSpec::pareto(1.0, 2.1);
  raw.center = false;
  CHECK(raw.effective_mean() == raw.analytic_mean());
}

TEST_CASE("sampled moments agree with the analytic ones") {
  const std::size_t big = 400000;
  CHECK(std::fabs(mean_of(sample_noise(NoiseSpec::pareto(1.0, 2.1), big, 31))) <=
        0.053);
  CHECK(std::fabs(mean_of(
            sample_noise(NoiseSpec::student_t(2.1), big, 32))) <= 0.058);
  CHECK(std::fabs(mean_of(sample_noise(NoiseSpec::half_t(2.1), big, 33))) <=
        0.055);
  CHECK(std::fabs(mean_of(
            sample_noise(NoiseSpec::frechet(0.0, 1.0, 2.6), big, 34))) <=
        0.017);

  const NoiseSpec light = NoiseSpec::pareto(1.0, 6.0);
  const std::vector<double> draws = sample_noise(light, 200000, 35);
  const double sd_true = light.analytic_sd();
  CHECK(std::fabs(sd_of(draws) - sd_true) <= 0.1 * sd_true);
}

TEST_CASE("sample_noise replays draw_noise on a fresh stream") {
  for (const NoiseSpec& spec :
       {NoiseSpec::student_t(2.1), NoiseSpec::pareto(1.0, 2.1)}) {
    const std::vector<double> batch = sample_noise(spec, 200, 91);
    Rng rng(91);
    bool same = true;
    for (double x : batch) same = same && (x == draw_noise(rng, spec));
    CHECK(same);
  }
}

TEST_CASE("kurtosis on hand data and big samples") {
  CHECK(kurtosis({-1.0, 1.0, -1.0, 1.0}) == 1.0);
  CHECK_THROWS_AS(kurtosis({1.0, 2.0, 3.0}), std::invalid_argument);
  CHECK_THROWS_AS(kurtosis({2.0, 2.0, 2.0, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS(kurtosis({1.0, kNan, 3.0, 4.0}), std::invalid_argument);

  CHECK(kurtosis(sample_noise(NoiseSpec::normal(1.0), 200000, 61)) ==
        doctest::Approx(3.0).epsilon(0.034));
  // t with df = 12 has excess kurtosis 6/(df - 4): kurtosis 3.75.
  CHECK(kurtosis(sample_noise(NoiseSpec::student_t(12.0), 200000, 62)) ==
        doctest::Approx(3.75).epsilon(0.15));
}

TEST_CASE("linear data generation is exact without noise") {
  LinearModelSpec spec;
  spec.theta_star = Eigen::VectorXd(3);
  spec.theta_star << 1.0, -2.0, 0.5;
  spec.n = 20;
  spec.noise = NoiseSpec::normal(0.0);
  spec.seed = 70;
  const LinearData data = gen_linear_data(spec);
  REQUIRE(data.X.rows() == 20);
  REQUIRE(data.X.cols() == 3);
  for (Eigen::Index i = 0; i < data.X.rows(); ++i) {
    CHECK(data.y[i] == data.X.row(i).dot(spec.theta_star));
  }
  CHECK((ols(data.X, data.y) - spec.theta_star).lpNorm<Eigen::Infinity>() <=
        1e-12);
}

TEST_CASE("linear data generation replays bit-exactly") {
  LinearModelSpec spec;
  spec.theta_star = Eigen::VectorXd(2);
  spec.theta_star << 3.0, -1.0;
  spec.n = 40;
  spec.noise = NoiseSpec::student_t(2.1);
  spec.seed = 71;
  const LinearData a = gen_linear_data(spec);
  const LinearData b = gen_linear_data(spec);
  CHECK((a.X - b.X).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((a.y - b.y).lpNorm<Eigen::Infinity>() == 0.0);
  spec.seed = 72;
  const LinearData c = gen_linear_data(spec);
  CHECK((a.y - c.y).lpNorm<Eigen::Infinity>() > 0.0);
}

TEST_CASE("linear data generation pins the draw order") {
  LinearModelSpec spec;
  spec.theta_star = Eigen::VectorXd(2);
  spec.theta_star << 1.0, 2.0;
  spec.n = 15;
  spec.noise = NoiseSpec::normal(2.0);
  spec.seed = 73;
  const LinearData data = gen_linear_data(spec);

  // Design first (row-major), then one noise draw per response.
  Rng ref(73);
  Eigen::MatrixXd Xref(15, 2);
  for (Eigen::Index i = 0; i < 15; ++i) {
    for (Eigen::Index j = 0; j < 2; ++j) Xref(i, j) = ref.normal();
  }
  CHECK((data.X - Xref).lpNorm<Eigen::Infinity>() == 0.0);
  bool same = true;
  for (Eigen::Index i = 0; i < 15; ++i) {
    const double yi = Xref.row(i).dot(spec.theta_star) + 2.0 * ref.normal();
    same = same && (data.y[i] == yi);
  }
  CHECK(same);
}

TEST_CASE("linear data generation validation") {
  LinearModelSpec spec;
  spec.theta_star = Eigen::VectorXd(1);
  spec.theta_star << 1.0;
  spec.n = 10;
  spec.noise = NoiseSpec::normal(1.0);
  spec.seed = 74;

  LinearModelSpec empty = spec;
  empty.theta_star = Eigen::VectorXd();
  CHECK_THROWS_AS(gen_linear_data(empty), std::invalid_argument);

  LinearModelSpec zero_n = spec;
  zero_n.n = 0;
  CHECK_THROWS_AS(gen_linear_data(zero_n), std::invalid_argument);

  LinearModelSpec bad_theta = spec;
  bad_theta.theta_star[0] = kNan;
  CHECK_THROWS_AS(gen_linear_data(bad_theta), std::invalid_argument);

  // Regression noise must have a finite variance.
  LinearModelSpec heavy = spec;
  heavy.noise = NoiseSpec::pareto(1.0, 2.0);
  CHECK_THROWS_AS(gen_linear_data(heavy), std::invalid_argument);
  heavy.noise = NoiseSpec::frechet(0.0, 1.0, 1.5);
  CHECK_THROWS_AS(gen_linear_data(heavy), std::invalid_argument);
  heavy.noise = NoiseSpec::pareto(1.0, 2.1);
  CHECK_NOTHROW(gen_linear_data(heavy));
}

}  // TEST_SUITE

#include "doctest.h"

#include "sblasso/glm.hpp"
#include "support/oracles.hpp"

#include <numbers>
#include <random>

using namespace sblasso;

namespace {

const Family kFamilies[] = {Family::normal, Family::bernoulli, Family::poisson, Family::neg_binomial,
                            Family::cauchy};

// Small random problem with a response valid for the family.
GlmProblem random_problem(Family f, int n, int p, std::mt19937_64& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  Mat X(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) X(i, j) = 0.5 * z(rng);
  Vec y(n);
  for (int i = 0; i < n; ++i) {
    switch (f) {
      case Family::bernoulli: y[i] = z(rng) > 0 ? 1.0 : 0.0; break;
      case Family::poisson:
      case Family::neg_binomial: y[i] = std::floor(std::abs(3.0 * z(rng))); break;
      default: y[i] = 2.0 * z(rng); break;
    }
  }
  return make_problem(X, y, {f});
}

}  // namespace

TEST_CASE("family names parse and print") {
  for (Family f : kFamilies) {
    const LikelihoodSpec s{f};
    CHECK(LikelihoodSpec::parse(s.name()).family == f);
  }
  CHECK_THROWS_AS(LikelihoodSpec::parse("gamma"), DomainError);
  CHECK(LikelihoodSpec{Family::normal}.has_aux());
  CHECK_FALSE(LikelihoodSpec{Family::poisson}.has_aux());
}

TEST_CASE("nll closed-form examples") {
  const int n = 7;
  Mat X = Mat::Random(n, 3);
  const auto normal = make_problem(X, Vec::Zero(n), {Family::normal});
  CHECK(nll(normal, Vec::Zero(3), 0.0) == doctest::Approx(0.5 * n * std::log(2 * std::numbers::pi)));

  Vec y(n);
  y << 0, 1, 1, 0, 1, 0, 0;
  const auto bern = make_problem(X, y, {Family::bernoulli});
  CHECK(nll(bern, Vec::Zero(3)) == doctest::Approx(n * std::log(2.0)));
  const auto g = nll_grad(bern, Vec::Zero(3));
  const Vec expect = -X.transpose() * (y.array() - 0.5).matrix();
  CHECK(oracle::rel_err(g.grad_beta, expect) < 1e-14);
}

TEST_CASE("poisson nll against a long double term-by-term sum") {
  std::mt19937_64 rng(8);
  for (int rep = 0; rep < 20; ++rep) {
    auto pr = random_problem(Family::poisson, 15, 3, rng);
    const Vec beta = Vec::Random(3);
    const Vec eta = pr.X * beta;
    const std::vector<double> yv(pr.y.data(), pr.y.data() + pr.n()), ev(eta.data(), eta.data() + pr.n());
    const long double ref = oracle::poisson_nll(yv, ev);
    CHECK(nll(pr, beta) == doctest::Approx(double(ref)).epsilon(1e-12));
  }
}

TEST_CASE("negative binomial and cauchy against direct log densities") {
  std::mt19937_64 rng(9);
  auto nb = random_problem(Family::neg_binomial, 12, 2, rng);
  const Vec beta = Vec::Random(2);
  const double aux = -0.4;  // sigma^2 = e^-0.4, r = e^0.4
  const double r = std::exp(-aux);
  const Vec eta = nb.X * beta;
  long double ref = 0.0L;
  for (int i = 0; i < nb.n(); ++i) {
    const long double mu = std::exp((long double)eta[i]), yi = nb.y[i];
    const long double p = mu / (mu + r);  // success probability
    ref -= std::lgamma(yi + r) - std::lgamma((long double)r) - std::lgamma(yi + 1) + r * std::log(1 - p) +
           yi * std::log(p);
  }
  CHECK(nll(nb, beta, aux) == doctest::Approx(double(ref)).epsilon(1e-11));

  auto ca = random_problem(Family::cauchy, 12, 2, rng);
  const double s = 0.7;
  const Vec ec = ca.X * beta;
  long double refc = 0.0L;
  for (int i = 0; i < ca.n(); ++i) {
    const long double z = (ca.y[i] - ec[i]) / s;
    refc += std::log(std::numbers::pi_v<long double> * s * (1 + z * z));
  }
  CHECK(nll(ca, beta, std::log(s)) == doctest::Approx(double(refc)).epsilon(1e-12));
}

TEST_CASE("analytic gradients match finite differences for every family") {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (Family f : kFamilies) {
    CAPTURE(LikelihoodSpec{f}.name());
    double worst = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
      const auto pr = random_problem(f, 20, 4, rng);
      Vec x(5);
      for (int k = 0; k < 5; ++k) x[k] = u(rng);
      auto f_all = [&](const Vec& v) { return nll(pr, v.head(4), v[4]); };
      const auto g = nll_grad(pr, x.head(4), x[4]);
      Vec analytic(5);
      analytic << g.grad_beta, g.grad_aux;
      Vec fd = oracle::fd_gradient(f_all, x, 1e-6);
      if (!pr.likelihood.has_aux()) fd[4] = 0.0;
      worst = std::max(worst, oracle::rel_err(analytic, fd));
    }
    CHECK(worst < 1e-5);
  }
}

TEST_CASE("normal: gradient vanishes at least squares and it is the minimizer") {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> z(0.0, 1.0);
  Mat X(60, 4);
  for (int i = 0; i < 60; ++i)
    for (int j = 0; j < 4; ++j) X(i, j) = z(rng);
  Vec y(60);
  for (int i = 0; i < 60; ++i) y[i] = X(i, 0) - 2 * X(i, 2) + z(rng);
  const auto pr = make_problem(X, y, {Family::normal});
  const Vec ls = oracle::least_squares(X, y);
  CHECK(nll_grad(pr, ls, 0.3).grad_beta.cwiseAbs().maxCoeff() < 1e-10);
  const double base = nll(pr, ls, 0.3);
  for (int k = 0; k < 20; ++k) CHECK(nll(pr, ls + 1e-3 * Vec::Random(4), 0.3) > base);
}

TEST_CASE("row permutation leaves nll unchanged") {
  std::mt19937_64 rng(13);
  for (Family f : kFamilies) {
    const auto pr = random_problem(f, 30, 3, rng);
    Eigen::PermutationMatrix<Eigen::Dynamic> perm(30);
    perm.setIdentity();
    std::shuffle(perm.indices().data(), perm.indices().data() + 30, rng);
    const auto shuffled = make_problem(perm * pr.X, perm * pr.y, pr.likelihood);
    const Vec beta = Vec::Random(3);
    CHECK(nll(shuffled, beta, 0.2) == doctest::Approx(nll(pr, beta, 0.2)).epsilon(1e-13));
  }
}

TEST_CASE("response validation names the row") {
  Mat X = Mat::Ones(3, 1);
  Vec y(3);
  y << 0, 0.5, 1;
  try {
    make_problem(X, y, {Family::bernoulli});
    FAIL("expected a domain error");
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("row 2") != std::string::npos);
  }
  y << 0, -1, 2;
  CHECK_THROWS_AS(make_problem(X, y, {Family::poisson}), DomainError);
  y << 0, 1.5, 2;
  CHECK_THROWS_AS(make_problem(X, y, {Family::neg_binomial}), DomainError);
  y << 0, NAN, 2;
  CHECK_THROWS_AS(make_problem(X, y, {Family::normal}), DomainError);
  CHECK_THROWS_AS(make_problem(X, Vec::Zero(2), {Family::normal}), DomainError);
  CHECK_THROWS_AS(nll(make_problem(X, Vec::Zero(3), {Family::normal}), Vec::Zero(2)), DomainError);
}

TEST_CASE("working example generator") {
  WorkingExampleOptions opt;
  opt.seed = 99;
  const auto a = generate_working_example(opt);
  const auto b = generate_working_example(opt);
  CHECK(a.problem.X == b.problem.X);
  CHECK(a.problem.y == b.problem.y);
  CHECK(a.problem.n() == 250);
  CHECK(a.problem.p() == 50);
  CHECK(a.true_beta.head(6) == Eigen::Map<const Vec>(opt.active_values.data(), 6));
  CHECK(a.true_beta.tail(44).isZero(0.0));
  opt.seed = 100;
  CHECK(generate_working_example(opt).problem.y != a.problem.y);

  // Moments of y for the Normal model: mean 0, variance beta'beta + 1.
  opt.n = 40000;
  opt.p = 6;
  const auto big = generate_working_example(opt);
  const double bb = big.true_beta.squaredNorm() + 1.0;
  const double mean = big.problem.y.mean();
  const double var = (big.problem.y.array() - mean).square().sum() / (opt.n - 1);
  CHECK(std::abs(mean) < 4.0 * std::sqrt(bb / opt.n));
  CHECK(std::abs(var - bb) < 4.0 * bb * std::sqrt(2.0 / opt.n));

  // The two-coefficient toy.
  WorkingExampleOptions toy;
  toy.n = 100;
  toy.p = 2;
  toy.active_values = {-2.0, 2.0};
  const auto t = generate_working_example(toy);
  CHECK(t.problem.p() == 2);
  CHECK(t.true_beta[0] == -2.0);
  CHECK(t.true_beta[1] == 2.0);

  for (Family f : kFamilies) {
    WorkingExampleOptions o;
    o.likelihood = {f};
    CHECK_NOTHROW(generate_working_example(o));
  }
  WorkingExampleOptions bad;
  bad.p = 3;
  CHECK_THROWS_AS(generate_working_example(bad), DomainError);
}

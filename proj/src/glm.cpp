#include "sblasso/glm.hpp"

#include <boost/math/special_functions/digamma.hpp>

#include <algorithm>
#include <numbers>
#include <random>

namespace sblasso {

LikelihoodSpec LikelihoodSpec::parse(std::string_view name) {
  if (name == "normal" || name == "gaussian") return {Family::normal};
  if (name == "bernoulli" || name == "logistic") return {Family::bernoulli};
  if (name == "poisson") return {Family::poisson};
  if (name == "nb" || name == "negbinomial" || name == "neg-binomial") return {Family::neg_binomial};
  if (name == "cauchy") return {Family::cauchy};
  throw DomainError("unknown likelihood family '" + std::string(name) + "'");
}

std::string LikelihoodSpec::name() const {
  switch (family) {
    case Family::normal:
      return "normal";
    case Family::bernoulli:
      return "bernoulli";
    case Family::poisson:
      return "poisson";
    case Family::neg_binomial:
      return "nb";
    case Family::cauchy:
      return "cauchy";
  }
  return "?";
}

std::string LikelihoodSpec::aux_name() const {
  switch (family) {
    case Family::normal:
    case Family::neg_binomial:
      return "sigma2";
    case Family::cauchy:
      return "scale";
    default:
      return "";
  }
}

Eigen::Index GlmProblem::n_penalized() const {
  return std::count(penalized.begin(), penalized.end(), true);
}

void validate(const GlmProblem& pr) {
  require(pr.X.rows() >= 1 && pr.X.cols() >= 1, "problem: design must be non-empty");
  require(pr.y.size() == pr.X.rows(), "problem: response length does not match design rows");
  require(pr.X.allFinite(), "problem: design contains non-finite values");
  require(std::size_t(pr.X.cols()) == pr.penalized.size(), "problem: penalized mask length mismatch");
  require(std::size_t(pr.X.cols()) == pr.column_names.size(), "problem: column name count mismatch");
  for (Eigen::Index i = 0; i < pr.y.size(); ++i) {
    const double v = pr.y[i];
    const std::string row = "row " + std::to_string(i + 1);
    require(std::isfinite(v), "problem: non-finite response at " + row);
    switch (pr.likelihood.family) {
      case Family::bernoulli:
        require(v == 0.0 || v == 1.0,
                "problem: bernoulli response must be 0 or 1 (" + row + " has " + std::to_string(v) + ")");
        break;
      case Family::poisson:
      case Family::neg_binomial:
        require(v >= 0.0 && v == std::floor(v),
                "problem: count response must be a non-negative integer (" + row + " has " +
                    std::to_string(v) + ")");
        break;
      default:
        break;
    }
  }
}

GlmProblem make_problem(Mat X, Vec y, LikelihoodSpec lik, std::vector<bool> penalized,
                        std::vector<std::string> names, std::string response_name) {
  GlmProblem pr;
  if (penalized.empty()) penalized.assign(std::size_t(X.cols()), true);
  if (names.empty()) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) names.push_back("x" + std::to_string(j + 1));
  }
  pr.X = std::move(X);
  pr.y = std::move(y);
  pr.likelihood = lik;
  pr.penalized = std::move(penalized);
  pr.column_names = std::move(names);
  pr.response_name = std::move(response_name);
  validate(pr);
  if (lik.family == Family::poisson || lik.family == Family::neg_binomial) {
    pr.log_factorial_y = pr.y.unaryExpr([](double v) { return std::lgamma(v + 1.0); });
  }
  return pr;
}

namespace {

inline double clamp_eta(double e, bool& inside) {
  inside = e > -kEtaClamp && e < kEtaClamp;
  return std::clamp(e, -kEtaClamp, kEtaClamp);
}

inline double softplus(double e) {
  return e > 0.0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e));
}

inline double logistic(double e) {
  if (e >= 0.0) return 1.0 / (1.0 + std::exp(-e));
  const double z = std::exp(e);
  return z / (1.0 + z);
}

constexpr double kLog2Pi = 1.8378770664093454836;

}  // namespace

double column_loss(Family family, const double* y, const double* eta, Eigen::Index n, double aux,
                   double* d_eta, double* d_aux, const double* log_factorial) {
  auto log_fact = [&](Eigen::Index i) { return log_factorial ? log_factorial[i] : std::lgamma(y[i] + 1.0); };
  double total = 0.0;
  double daux = 0.0;
  switch (family) {
    case Family::normal: {
      const double inv_var = std::exp(-aux);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double r = y[i] - eta[i];
        const double q = 0.5 * r * r * inv_var;
        total += q;
        daux -= q;
        if (d_eta) d_eta[i] = -r * inv_var;
      }
      total += 0.5 * double(n) * (kLog2Pi + aux);
      daux += 0.5 * double(n);
      break;
    }
    case Family::bernoulli: {
      for (Eigen::Index i = 0; i < n; ++i) {
        total += softplus(eta[i]) - y[i] * eta[i];
        if (d_eta) d_eta[i] = logistic(eta[i]) - y[i];
      }
      break;
    }
    case Family::poisson: {
      for (Eigen::Index i = 0; i < n; ++i) {
        bool inside = true;
        const double e = clamp_eta(eta[i], inside);
        const double mu = std::exp(e);
        total += mu - y[i] * eta[i] + log_fact(i);
        if (d_eta) d_eta[i] = (inside ? mu : 0.0) - y[i];
      }
      break;
    }
    case Family::neg_binomial: {
      const double r = std::exp(-aux);
      const double lg_r = std::lgamma(r);
      const double dg_r = boost::math::digamma(r);
      const double log_r = -aux;
      double d_r = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        bool inside = true;
        const double e = clamp_eta(eta[i], inside);
        const double mu = std::exp(e);
        const double yi = y[i];
        const double log_rmu = std::log(r + mu);
        total += lg_r + log_fact(i) - std::lgamma(yi + r) + r * (log_rmu - log_r) -
                 yi * (e - log_rmu);
        if (d_eta) d_eta[i] = inside ? r * (mu - yi) / (r + mu) : 0.0;
        if (d_aux) {
          const double dg_yr = yi == 0.0 ? dg_r : boost::math::digamma(yi + r);
          d_r += -dg_yr + dg_r - log_r - 1.0 + log_rmu + (r + yi) / (r + mu);
        }
      }
      daux = -r * d_r;
      break;
    }
    case Family::cauchy: {
      const double s = std::exp(aux);
      const double log_pi_s = std::log(std::numbers::pi) + aux;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double z = (y[i] - eta[i]) / s;
        const double z2 = z * z;
        total += log_pi_s + std::log1p(z2);
        if (d_eta) d_eta[i] = -2.0 * z / (s * (1.0 + z2));
        daux += 1.0 - 2.0 * z2 / (1.0 + z2);
      }
      break;
    }
  }
  if (d_aux) *d_aux = daux;
  return total;
}

double column_loss(const GlmProblem& pr, const double* eta, double aux, double* d_eta, double* d_aux) {
  const double* lf = pr.log_factorial_y.size() == pr.n() ? pr.log_factorial_y.data() : nullptr;
  return column_loss(pr.likelihood.family, pr.y.data(), eta, pr.n(), aux, d_eta, d_aux, lf);
}

double nll(const GlmProblem& pr, const Vec& beta, double aux) {
  require(beta.size() == pr.p(), "nll: coefficient length does not match design");
  const Vec eta = pr.X * beta;
  return column_loss(pr, eta.data(), aux, nullptr, nullptr);
}

NllGradient nll_grad(const GlmProblem& pr, const Vec& beta, double aux) {
  require(beta.size() == pr.p(), "nll_grad: coefficient length does not match design");
  const Vec eta = pr.X * beta;
  Vec d_eta(pr.n());
  NllGradient g;
  column_loss(pr, eta.data(), aux, d_eta.data(), &g.grad_aux);
  g.grad_beta = pr.X.transpose() * d_eta;
  if (!pr.likelihood.has_aux()) g.grad_aux = 0.0;
  return g;
}

WorkingExample generate_working_example(const WorkingExampleOptions& opt) {
  require(opt.n >= 1 && opt.p >= 1, "working example: n and p must be positive");
  require(opt.active_values.size() <= std::size_t(opt.p), "working example: more active values than p");
  require(opt.noise_sd > 0.0, "working example: noise_sd must be positive");

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> std_normal(0.0, 1.0);

  Mat X(opt.n, opt.p);
  for (int i = 0; i < opt.n; ++i)
    for (int j = 0; j < opt.p; ++j) X(i, j) = std_normal(rng);

  Vec beta = Vec::Zero(opt.p);
  for (std::size_t k = 0; k < opt.active_values.size(); ++k) beta[Eigen::Index(k)] = opt.active_values[k];

  const Vec eta = X * beta;
  Vec y(opt.n);
  double true_aux = 0.0;
  const double var = opt.noise_sd * opt.noise_sd;
  switch (opt.likelihood.family) {
    case Family::normal:
      for (int i = 0; i < opt.n; ++i) y[i] = eta[i] + opt.noise_sd * std_normal(rng);
      true_aux = std::log(var);
      break;
    case Family::bernoulli:
      for (int i = 0; i < opt.n; ++i) {
        std::bernoulli_distribution coin(logistic(eta[i]));
        y[i] = coin(rng) ? 1.0 : 0.0;
      }
      break;
    case Family::poisson:
      for (int i = 0; i < opt.n; ++i) {
        std::poisson_distribution<long long> pois(std::exp(std::clamp(eta[i], -kEtaClamp, kEtaClamp)));
        y[i] = double(pois(rng));
      }
      break;
    case Family::neg_binomial: {
      // Gamma-Poisson mixture with mean exp(eta) and r = 1 / sigma^2 failures.
      const double r = 1.0 / var;
      for (int i = 0; i < opt.n; ++i) {
        const double mu = std::exp(std::clamp(eta[i], -kEtaClamp, kEtaClamp));
        std::gamma_distribution<double> gam(r, mu / r);
        std::poisson_distribution<long long> pois(gam(rng));
        y[i] = double(pois(rng));
      }
      true_aux = std::log(var);
      break;
    }
    case Family::cauchy: {
      std::cauchy_distribution<double> c(0.0, opt.noise_sd);
      for (int i = 0; i < opt.n; ++i) y[i] = eta[i] + c(rng);
      true_aux = std::log(opt.noise_sd);
      break;
    }
  }
  return {make_problem(std::move(X), std::move(y), opt.likelihood), beta, true_aux};
}

}  // namespace sblasso

#include "sblasso/io.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace sblasso {

using nlohmann::json;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  s = s.substr(b, e - b + 1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  return f;
}


}  // namespace

CsvTable read_csv(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DomainError("cannot open data file '" + path + "'");
  CsvTable t;
  std::string line;
  if (!std::getline(f, line)) throw DomainError("data file '" + path + "' is empty");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line = line.substr(3);
  t.header = split(line);
  const std::size_t cols = t.header.size();
  for (std::size_t c = 0; c < cols; ++c) {
    if (t.header[c].empty()) throw DomainError(path + ": empty column name at column " + std::to_string(c + 1));
  }
  std::vector<std::vector<double>> rows;
  long line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    // Data rows count from 1, as in the response checks; the file line helps with blank lines.
    const std::string where = "row " + std::to_string(rows.size() + 1) + " (line " + std::to_string(line_no) + ")";
    const auto cells = split(line);
    if (cells.size() != cols) {
      throw DomainError(path + ": " + where + " has " + std::to_string(cells.size()) +
                        " cells, header has " + std::to_string(cols));
    }
    std::vector<double> r(cols);
    for (std::size_t c = 0; c < cols; ++c) {
      const std::string& s = cells[c];
      char* end = nullptr;
      errno = 0;
      const double v = s.empty() ? 0.0 : std::strtod(s.c_str(), &end);
      if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) {
        throw DomainError(path + ": non-numeric value '" + s + "' at " + where + ", column '" +
                          t.header[c] + "'");
      }
      r[c] = v;
    }
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw DomainError("data file '" + path + "' has no data rows");
  t.data.resize(Eigen::Index(rows.size()), Eigen::Index(cols));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t c = 0; c < cols; ++c) t.data(Eigen::Index(i), Eigen::Index(c)) = rows[i][c];
  return t;
}

void write_csv(const std::string& path, const CsvTable& t) {
  auto f = open_out(path);
  for (std::size_t c = 0; c < t.header.size(); ++c) f << (c ? "," : "") << t.header[c];
  f << '\n';
  for (Eigen::Index i = 0; i < t.data.rows(); ++i) {
    for (Eigen::Index c = 0; c < t.data.cols(); ++c) f << (c ? "," : "") << format_double(t.data(i, c));
    f << '\n';
  }
}

GlmProblem load_csv(const std::string& path, const std::string& response, LikelihoodSpec likelihood,
                    const std::vector<std::string>& unpenalized) {
  CsvTable t = read_csv(path);
  const auto cols = Eigen::Index(t.header.size());
  Eigen::Index rc = -1;
  for (Eigen::Index c = 0; c < cols; ++c) {
    if (t.header[std::size_t(c)] == response) rc = c;
  }
  if (rc < 0 && !response.empty() && response.find_first_not_of("0123456789") == std::string::npos) {
    rc = Eigen::Index(std::stol(response));
    if (rc >= cols) rc = -1;
  }
  if (rc < 0) throw DomainError(path + ": response column '" + response + "' not found");
  if (cols < 2) throw DomainError(path + ": need at least one predictor column besides the response");

  Mat X(t.data.rows(), cols - 1);
  std::vector<std::string> names;
  for (Eigen::Index c = 0, k = 0; c < cols; ++c) {
    if (c == rc) continue;
    X.col(k++) = t.data.col(c);
    names.push_back(t.header[std::size_t(c)]);
  }
  std::vector<bool> pen(names.size(), true);
  for (const std::string& u : unpenalized) {
    auto it = std::find(names.begin(), names.end(), u);
    if (it == names.end()) throw DomainError(path + ": unpenalized column '" + u + "' not found");
    pen[std::size_t(it - names.begin())] = false;
  }
  try {
    return make_problem(std::move(X), t.data.col(rc), likelihood, std::move(pen), std::move(names),
                        t.header[std::size_t(rc)]);
  } catch (const DomainError& e) {
    throw DomainError(path + ": " + e.what());
  }
}

void save_csv(const std::string& path, const GlmProblem& problem) {
  CsvTable t;
  t.header = problem.column_names;
  t.header.push_back(problem.response_name);
  t.data.resize(problem.n(), problem.p() + 1);
  t.data.leftCols(problem.p()) = problem.X;
  t.data.col(problem.p()) = problem.y;
  write_csv(path, t);
}

json map_fit_json(const GlmProblem& problem, const MapFit& fit, double tau, std::uint64_t seed) {
  json params = json::array();
  for (Eigen::Index j = 0; j < problem.p(); ++j) {
    const bool pen = problem.penalized[std::size_t(j)];
    params.push_back({{"name", problem.column_names[std::size_t(j)]},
                      {"family", "point"},
                      {"eta", fit.beta[j]},
                      {"nu", nullptr},
                      {"lambda", pen ? json(fit.lambda[j]) : json(nullptr)}});
  }
  if (problem.likelihood.has_aux()) {
    params.push_back({{"name", "log_" + problem.likelihood.aux_name()},
                      {"family", "point"},
                      {"eta", fit.aux},
                      {"nu", nullptr},
                      {"lambda", nullptr}});
  }
  return {{"mode", "map"},
          {"likelihood", problem.likelihood.name()},
          {"tau", tau},
          {"cost", fit.run.state.cost},
          {"iterations", fit.run.iterations},
          {"converged", fit.run.converged},
          {"seed", seed},
          {"parameters", params}};
}

json sbl_fit_json(const GlmProblem& problem, const SblFit& fit, double tau, std::uint64_t seed, double level) {
  const VariationalState& vs = fit.state;
  json params = json::array();
  for (Eigen::Index j = 0; j < problem.p(); ++j) {
    const bool lap = vs.laplace[std::size_t(j)];
    const Interval ci = credible_interval(vs, j, level);
    params.push_back({{"name", problem.column_names[std::size_t(j)]},
                      {"family", lap ? "laplace" : "normal"},
                      {"eta", vs.eta_beta[j]},
                      {"nu", vs.nu_beta[j]},
                      {"lambda", lap ? json(vs.lambda[j]) : json(nullptr)},
                      {"ci_lo", ci.lo},
                      {"ci_hi", ci.hi}});
  }
  if (vs.has_aux) {
    const Interval ci = aux_interval(vs, level);
    params.push_back({{"name", problem.likelihood.aux_name()},
                      {"family", var_family_name(vs.aux_family)},
                      {"eta", vs.eta_aux},
                      {"nu", vs.nu_aux},
                      {"lambda", nullptr},
                      {"ci_lo", std::exp(ci.lo)},
                      {"ci_hi", std::exp(ci.hi)}});
  }
  return {{"mode", "sbl"},
          {"likelihood", problem.likelihood.name()},
          {"tau", tau},
          {"cost", fit.run.state.cost},
          {"iterations", fit.run.iterations},
          {"converged", fit.run.converged},
          {"seed", seed},
          {"mc_samples", fit.draw.rows()},
          {"credible_level", level},
          {"parameters", params}};
}

json lasso_fit_json(const GlmProblem& problem, const TrajectoryRecord& rec) {
  json params = json::array();
  for (Eigen::Index j = 0; j < problem.p(); ++j) {
    params.push_back({{"name", problem.column_names[std::size_t(j)]},
                      {"family", "point"},
                      {"eta", rec.estimate[j]},
                      {"nu", nullptr},
                      {"lambda", problem.penalized[std::size_t(j)] ? json(1.0) : json(nullptr)}});
  }
  return {{"mode", "lasso-baseline"}, {"likelihood", problem.likelihood.name()},
          {"tau", rec.tau},           {"cost", rec.cost},
          {"iterations", rec.iterations}, {"converged", rec.converged},
          {"parameters", params}};
}

json metrics_json(const SimOptions& opt, const SimMetrics& m, bool include_timing) {
  auto opt_value = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json j = {{"family", opt.likelihood.name()},
            {"mode", fit_mode_name(opt.mode)},
            {"tau", opt.tau},
            {"seed", opt.seed},
            {"reps", m.n_reps},
            {"n", opt.n},
            {"p", opt.p},
            {"fnr", m.fnr},
            {"fpr", m.fpr},
            {"beta_coverage", opt_value(m.beta_coverage)},
            {"beta_coverage_all", opt_value(m.beta_coverage_all)},
            {"sigma2_coverage", opt_value(m.sigma2_coverage)},
            {"failed", m.n_failed},
            {"converged", m.n_converged},
            {"mean_iterations", m.mean_iterations}};
  if (include_timing) j["wall_seconds"] = m.wall_seconds;
  return j;
}

void write_trajectory_csv(const std::string& path, const GlmProblem& problem,
                          const std::vector<TrajectoryRecord>& records) {
  auto f = open_out(path);
  f << "tau,mode,param_name,eta_or_estimate,nu,lambda,ci_lo,ci_hi,sparsity_fraction,iterations,converged\n";
  auto cell = [](const Vec& v, Eigen::Index j) { return v.size() ? format_double(v[j]) : std::string(); };
  for (const TrajectoryRecord& r : records) {
    const std::string head = format_double(r.tau) + "," + std::string(fit_mode_name(r.mode)) + ",";
    const std::string tail = "," + format_double(r.sparsity_fraction) + "," + std::to_string(r.iterations) + "," +
                             (r.converged ? "true" : "false") + "\n";
    for (Eigen::Index j = 0; j < problem.p(); ++j) {
      const bool pen = problem.penalized[std::size_t(j)];
      f << head << problem.column_names[std::size_t(j)] << "," << format_double(r.estimate[j]) << ","
        << cell(r.nu, j) << "," << (pen ? cell(r.lambda, j) : std::string()) << "," << cell(r.ci_lo, j) << ","
        << cell(r.ci_hi, j) << tail;
    }
    if (problem.likelihood.has_aux() && r.mode != FitMode::lasso_baseline) {
      f << head << "log_" << problem.likelihood.aux_name() << "," << format_double(r.aux) << ","
        << (r.mode == FitMode::sbl ? format_double(r.aux_nu) : std::string()) << ",,," << tail;
    }
  }
}

void write_trace_csv(const std::string& path, const std::vector<TraceRow>& trace) {
  auto f = open_out(path);
  f << "iter,cost,step,nnz\n";
  for (const TraceRow& r : trace) {
    f << r.iter << "," << format_double(r.cost) << "," << format_double(r.step) << "," << r.nnz << "\n";
  }
}

void write_json(const std::string& path, const json& j) {
  auto f = open_out(path);
  f << j.dump(2) << '\n';
}

json read_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DomainError("cannot open '" + path + "'");
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw DomainError(path + ": " + e.what());
  }
}

}  // namespace sblasso

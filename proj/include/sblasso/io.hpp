#pragma once

#include "sblasso/glm.hpp"
#include "sblasso/map_fit.hpp"
#include "sblasso/trajectory.hpp"
#include "sblasso/vb.hpp"

#include "json.hpp"

#include <string>
#include <vector>

namespace sblasso {

// Round-trip text for a double (printf %.17g).
std::string format_double(double v);

struct CsvTable {
  std::vector<std::string> header;
  Mat data;
};

// Numeric CSV with a header row. Errors name the file, row and column.
CsvTable read_csv(const std::string& path);
void write_csv(const std::string& path, const CsvTable& table);

// response: a header name, or a 0-based column index when no header matches.
// unpenalized: names of columns left out of the penalty.
GlmProblem load_csv(const std::string& path, const std::string& response, LikelihoodSpec likelihood,
                    const std::vector<std::string>& unpenalized = {});
// Design columns in order, then the response.
void save_csv(const std::string& path, const GlmProblem& problem);

nlohmann::json map_fit_json(const GlmProblem& problem, const MapFit& fit, double tau, std::uint64_t seed);
nlohmann::json sbl_fit_json(const GlmProblem& problem, const SblFit& fit, double tau, std::uint64_t seed,
                            double level = 0.95);
nlohmann::json lasso_fit_json(const GlmProblem& problem, const TrajectoryRecord& rec);
nlohmann::json metrics_json(const SimOptions& opt, const SimMetrics& m, bool include_timing);

void write_trajectory_csv(const std::string& path, const GlmProblem& problem,
                          const std::vector<TrajectoryRecord>& records);
void write_trace_csv(const std::string& path, const std::vector<TraceRow>& trace);
void write_json(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json(const std::string& path);

}  // namespace sblasso

#include "specdyn/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <ostream>

#include "specdyn/parallel.hpp"

namespace specdyn {

std::string format_double(double v) {
  char buf[40];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void write_trajectory_csv(std::ostream& os, const Trajectory& tr) {
  os << "t,omega,loss\n";
  const bool with_loss = tr.loss.size() == tr.times.size();
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    os << format_double(tr.times[i]) << ',' << format_double(tr.omega[i]) << ',';
    if (with_loss) os << format_double(tr.loss[i]);
    os << '\n';
  }
}

void write_phase_csv(std::ostream& os, const PhaseGrid& grid) {
  os << "lambda1,lambda2,min_escape_gap,valid\n";
  for (std::size_t i1 = 0; i1 < grid.n1(); ++i1)
    for (std::size_t i2 = 0; i2 < grid.n2(); ++i2) {
      os << format_double(grid.lambda1_values[i1]) << ','
         << format_double(grid.lambda2_values[i2]) << ','
         << format_double(grid.gap(i1, i2)) << ',' << (grid.is_valid(i1, i2) ? 1 : 0)
         << '\n';
    }
}

nlohmann::json phase_grid_json(const PhaseGrid& grid) {
  nlohmann::json j;
  j["lambda1"] = grid.lambda1_values;
  j["lambda2"] = grid.lambda2_values;
  nlohmann::json gap = nlohmann::json::array();
  nlohmann::json valid = nlohmann::json::array();
  for (double g : grid.min_escape_gap) gap.push_back(std::isnan(g) ? nlohmann::json() : nlohmann::json(g));
  for (auto v : grid.valid) valid.push_back(v != 0);
  j["min_escape_gap"] = gap;  // row-major over (lambda1, lambda2)
  j["valid"] = valid;
  j["errors"] = grid.cell_errors;
  return j;
}

nlohmann::json constants_json(const DataStatistics& stats, const PathwayConfig& cfg,
                              const DerivedConstants& consts) {
  return nlohmann::json{{"K", consts.K},     {"C", consts.C}, {"theta0", cfg.theta0},
                        {"lambda", cfg.lambda}, {"s", stats.s},  {"d", stats.d},
                        {"tau", cfg.tau}};
}

void write_meanfield_csv(std::ostream& os, const std::vector<double>& tau,
                         const std::vector<double>& eps1, const std::vector<double>& eps2) {
  os << "tau,eps1,eps2\n";
  for (std::size_t i = 0; i < tau.size(); ++i)
    os << format_double(tau[i]) << ',' << format_double(eps1[i]) << ','
       << format_double(eps2[i]) << '\n';
}

void write_sweep_csv(std::ostream& os, const SweepGrid& grid) {
  os << "axis1,axis2,H_h,H_Q,H_m,forgetting,eps1_final,eps2_final,node_norm_0,node_norm_1,"
        "seed\n";
  const double nan = std::nan("");
  for (std::size_t i1 = 0; i1 < grid.n1(); ++i1)
    for (std::size_t i2 = 0; i2 < grid.n2(); ++i2) {
      const SweepCell& c = grid.at(i1, i2);
      auto field = [&](double v) { return format_double(c.valid ? v : nan); };
      os << format_double(grid.axis1.values[i1]) << ','
         << format_double(grid.axis2.values[i2]) << ',' << field(c.h_h) << ','
         << field(c.h_q) << ',' << field(c.h_m) << ',' << field(c.forgetting) << ','
         << field(c.eps1_final) << ',' << field(c.eps2_final) << ','
         << field(c.node_norm_0) << ',' << field(c.node_norm_1) << ',' << c.seed << '\n';
    }
}

nlohmann::json sweep_grid_json(const SweepGrid& grid) {
  nlohmann::json j;
  j["axis1"] = {{"name", grid.axis1.name}, {"values", grid.axis1.values}};
  j["axis2"] = {{"name", grid.axis2.name}, {"values", grid.axis2.values}};
  auto matrix = [&](auto field) {
    nlohmann::json m = nlohmann::json::array();
    for (const SweepCell& c : grid.cells)
      m.push_back(c.valid ? nlohmann::json(field(c)) : nlohmann::json());
    return m;
  };
  j["H_h"] = matrix([](const SweepCell& c) { return c.h_h; });
  j["H_Q"] = matrix([](const SweepCell& c) { return c.h_q; });
  j["H_m"] = matrix([](const SweepCell& c) { return c.h_m; });
  j["forgetting"] = matrix([](const SweepCell& c) { return c.forgetting; });
  j["eps1_final"] = matrix([](const SweepCell& c) { return c.eps1_final; });
  j["eps2_final"] = matrix([](const SweepCell& c) { return c.eps2_final; });
  nlohmann::json seeds = nlohmann::json::array();
  nlohmann::json errors = nlohmann::json::array();
  for (const SweepCell& c : grid.cells) {
    seeds.push_back(c.seed);
    if (!c.error.empty()) errors.push_back(c.error);
  }
  j["cell_seeds"] = seeds;
  j["errors"] = errors;
  return j;
}

int default_jobs(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("SPECDYN_JOBS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

}  // namespace specdyn

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cvxwave/pipeline.hpp"

namespace cvxwave::cli {

namespace fs = std::filesystem;

/// "1/16", "0.0625" -> 0.0625.
double parse_spacing(const std::string& s);
std::vector<double> parse_list(const std::string& s);

/// RunConfig from an optional JSON file; flags are applied on top by the caller.
RunConfig load_config(const std::optional<fs::path>& path);

struct PhantomArgs {
  RunConfig cfg;
  fs::path out;
};
int cmd_phantom(const PhantomArgs& a);

struct SimulateArgs {
  RunConfig cfg;
  fs::path out;
};
int cmd_simulate(const SimulateArgs& a);

struct PickArgs {
  RunConfig cfg;
  fs::path in, out;
};
int cmd_pick(const PickArgs& a);

struct InvertArgs {
  RunConfig cfg;
  fs::path data, out;
  std::optional<int> N; ///< must agree with the data when given
};
int cmd_invert(const InvertArgs& a);

struct CarlemanArgs {
  double h = 1.0 / 16.0;
  std::vector<double> lambdas{4.0, 8.0, 16.0};
  int samples = 200;
  std::uint64_t seed = 1;
  double b = 0.1;
  double floor = 1e-3;
  double max_collapse = 0.5;
  fs::path out;
};
int cmd_verify_carleman(const CarlemanArgs& a);

struct ConvexityArgs {
  RunConfig cfg;
  fs::path data, out;
  double h = 0.125;
  int pairs = 50;
  std::uint64_t seed = 1;
  double perturbation = 0.1;
  double floor = -1e-10;
};
int cmd_verify_convexity(const ConvexityArgs& a);

struct ReportArgs {
  fs::path run;
  std::optional<fs::path> out;
};
int cmd_report(const ReportArgs& a);

} // namespace cvxwave::cli

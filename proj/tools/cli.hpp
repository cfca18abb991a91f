#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "plumerom/io.hpp"

namespace plumerom::cli {

/// Everything that determines the numerics of a run. Embedded in every manifest.
struct RunConfig {
  ParameterSpace space;
  Grid grid;
  PlumeSettings settings;
  std::size_t n_snapshots = 750;
  int L = 100;
  TrainingMethod method = TrainingMethod::map;
  int restarts = 15;
  std::uint64_t seed = 0;
  Channel channel = Channel::mean_concentration;
  SplitFractions fractions;
  std::string dataset_dir = "dataset";
  std::string model_dir = "model";
  std::string report_dir = "report";
};

json to_json(const RunConfig& c);
/// Overrides only the keys present. A manifest with an embedded "config" object is accepted.
void apply_json(const json& j, RunConfig& c);

/// Exit codes: 0 ok, 1 unexpected, 2 configuration, 3 data, 4 numerical.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace plumerom::cli

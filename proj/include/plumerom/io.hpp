#pragma once

// Persistence: SMX binary matrices, dataset directories (manifest.json plus
// one SMX file per window), model directories (model.json, basis.smx,
// gps.bin) and locale-independent CSV output.
//
// SMX layout: "SMX1", u32 nx, u32 nz, u32 n_columns, then nx*nz*n_columns
// little-endian f64 values, column-major (one column per snapshot).

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "plumerom/plume.hpp"
#include "plumerom/rom.hpp"

namespace plumerom {

using json = nlohmann::json;

inline constexpr const char* kToolVersion = "plumerom 1.0.0";

struct SmxMatrix {
  std::uint32_t nx = 0;
  std::uint32_t nz = 0;
  Eigen::MatrixXd data;  // (nx * nz) x n
};

void write_smx(const std::filesystem::path& path, const Eigen::MatrixXd& data, std::uint32_t nx, std::uint32_t nz);
/// Throws DataError on a bad magic, truncated payload or size mismatch.
SmxMatrix read_smx(const std::filesystem::path& path);

// JSON conversions. from_json only overrides the keys that are present.
void to_json(json& j, const Interval& v);
void from_json(const json& j, Interval& v);
void to_json(json& j, const ParameterSpace& v);
void from_json(const json& j, ParameterSpace& v);
void to_json(json& j, const Grid& v);
void from_json(const json& j, Grid& v);
void to_json(json& j, const PlumeSettings& v);
void from_json(const json& j, PlumeSettings& v);
void to_json(json& j, const Hyperparameters& v);
void from_json(const json& j, Hyperparameters& v);

/// Design records {index, unit[4], physical[4]} with the space and skip count.
json design_manifest(const SnapshotSet& set);

/// Writes manifest.json, <channel>.smx and <channel>_half.smx. `config` is embedded verbatim.
void write_dataset(const std::filesystem::path& dir, const SnapshotSet& set, const json& config);

struct LoadedDataset {
  SnapshotSet set;
  json manifest;
};

LoadedDataset read_dataset(const std::filesystem::path& dir);

/// FNV-1a over the bit patterns of theta.
std::uint64_t theta_checksum(const Hyperparameters& theta);

/// Writes model.json, basis.smx and gps.bin. Nothing time-dependent is written.
void write_model(const std::filesystem::path& dir, const RomModel& model, const json& config);
/// Per-mode optimizer counts and wall times.
void write_train_log(const std::filesystem::path& dir, const RomModel& model, double total_seconds);

struct LoadedModel {
  RomModel model;
  json manifest;
};

/// Refactorizes each GP and checks the stored theta checksum and weights.
LoadedModel read_model(const std::filesystem::path& dir);

/// Shortest round-trip decimal form, "nan" for NaN.
std::string format_number(double v);

/// Writes a header row and one line per row; numbers via format_number.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

/// Pretty-printed JSON with a trailing newline.
void write_json(const std::filesystem::path& path, const json& j);
json read_json(const std::filesystem::path& path);

std::string hex64(std::uint64_t v);
std::uint64_t parse_hex64(const std::string& s);

}  // namespace plumerom

#pragma once

// Analytic stand-in for the full-order dispersion model. A ground-reflected
// Gaussian plume advected by the log-law inlet profile, modified by an
// obstacle (unit square at [0,1]x[0,1]): lift of upstream plumes over the
// block, a decaying wake that deflects and widens the plume, an accumulation
// pocket on the windward face and a recirculation pocket on the lee side.
// Finite time averaging is emulated by smooth multiplicative pseudo-noise.

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "plumerom/sampling.hpp"

namespace plumerom {

/// Uniform node grid; node (ix, iz) has flat index iz * nx + ix.
struct Grid {
  double x_min = -3.5;
  double x_max = 13.5;
  double z_min = 0.0;
  double z_max = 5.0;
  int nx = 171;
  int nz = 51;

  void validate() const;
  std::size_t size() const { return static_cast<std::size_t>(nx) * nz; }
  double dx() const { return (x_max - x_min) / (nx - 1); }
  double dz() const { return (z_max - z_min) / (nz - 1); }
  double x(int ix) const { return x_min + ix * dx(); }
  double z(int iz) const { return z_min + iz * dz(); }
  std::size_t node(int ix, int iz) const { return static_cast<std::size_t>(iz) * nx + ix; }

  bool operator==(const Grid&) const = default;
};

enum class Channel { mean_concentration, vertical_flux };

std::string to_string(Channel c);
Channel channel_from_string(const std::string& s);

struct PlumeSettings {
  double noise_amplitude = 0.1;   // relative noise at one averaging period
  double t_avg_periods = 40.0;    // averaging periods of the full window
  double source_sigma = 0.12;     // initial vertical plume width, m
  double u_tau_ref = 0.0;         // normalization velocity; <= 0 means "compute"
  double obstacle_height = 1.0;   // H, m
  double source_rate = 1.0;       // Q_s, m^3/s
  double noise_correlation = 3.0; // smoothing length of the noise, grid cells
};

struct FieldSnapshot {
  Eigen::VectorXd values;
  ParameterSample mu;
  Channel channel = Channel::mean_concentration;
  double window_fraction = 1.0;
};

/// Noiseless normalized field value at a point.
double plume_value(const PhysicalParams& mu, double x, double z, Channel channel,
                   const ParameterSpace& space, const PlumeSettings& settings);

/// Unit-variance smooth noise on the grid, deterministic in `key`.
Eigen::VectorXd smooth_noise(const Grid& grid, std::uint64_t key, double correlation_cells);

/// One snapshot. Throws DataError when the source lies in the exclusion box.
FieldSnapshot generate_field(const ParameterSample& mu, const Grid& grid, Channel channel,
                             double window_fraction, std::uint64_t seed,
                             const ParameterSpace& space, const PlumeSettings& settings);

/// Full-window fields plus half-window companions over one Halton design.
struct SnapshotSet {
  Grid grid;
  Channel channel = Channel::mean_concentration;
  ParameterSpace space;
  PlumeSettings settings;
  std::uint64_t seed = 0;
  std::uint64_t skipped = 0;               // Halton indices rejected while designing
  std::vector<ParameterSample> samples;
  Eigen::MatrixXd fields;                  // N_h x N, window fraction 1
  Eigen::MatrixXd half_fields;             // N_h x N, window fraction 0.5 (may be empty)

  std::size_t size() const { return samples.size(); }
  bool has_half_window() const { return half_fields.cols() == fields.cols() && fields.cols() > 0; }

  /// Unit-cube inputs, one row per snapshot.
  Eigen::MatrixXd unit_inputs() const;

  /// Columns/samples selected by position.
  SnapshotSet subset(const std::vector<int>& positions) const;
};

inline constexpr const char* kGeneratorVersion = "plume-surrogate-1";

/// `jobs` <= 0 uses the OpenMP default. Results never depend on `jobs`.
SnapshotSet generate_dataset(const ParameterSpace& space, std::size_t n, const Grid& grid,
                             Channel channel, std::uint64_t seed, PlumeSettings settings = {},
                             int jobs = 0);

}  // namespace plumerom

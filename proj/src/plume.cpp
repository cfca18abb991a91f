#include "plumerom/plume.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "plumerom/errors.hpp"
#include "plumerom/random.hpp"

namespace plumerom {

void Grid::validate() const {
  if (nx < 2 || nz < 2) throw ConfigError("grid needs at least 2 nodes per direction");
  if (!(x_min < x_max) || !(z_min < z_max)) throw ConfigError("degenerate grid extent");
}

std::string to_string(Channel c) {
  return c == Channel::mean_concentration ? "mean_concentration" : "vertical_flux";
}

Channel channel_from_string(const std::string& s) {
  if (s == "mean_concentration") return Channel::mean_concentration;
  if (s == "vertical_flux") return Channel::vertical_flux;
  throw ConfigError("unknown channel: " + s);
}

namespace {

constexpr double kLiftReach = 1.5;        // upstream distance over which plumes climb the block
constexpr double kLiftTarget = 1.2;       // climb target, in obstacle heights
constexpr double kWakeLength = 5.0;       // wake decay length, in obstacle heights
constexpr double kWakeOnset = 0.3;
constexpr double kUpstreamTail = 0.15;    // m

double smoothstep(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

double gauss(double s, double sigma) { return std::exp(-0.5 * (s / sigma) * (s / sigma)); }

// Per-snapshot constants of the plume kernel.
struct PlumeKernel {
  double xs, zs, H, Q;
  double u_adv;      // advection speed at the effective source height
  double k_z;        // eddy diffusivity
  double sigma0;
  double norm_conc;  // K -> normalized K

  PlumeKernel(const PhysicalParams& mu, const ParameterSpace& space, const PlumeSettings& st)
      : xs(mu.x_src), zs(mu.z_src), H(st.obstacle_height), Q(st.source_rate), sigma0(st.source_sigma) {
    const double u_tau = friction_velocity(mu.u_zc, mu.z0, space.z_c, space.kappa);
    const double z_eff = std::max(zs, 0.3 * H);
    u_adv = inlet_profile(z_eff, u_tau, mu.z0, space.kappa);
    k_z = space.kappa * u_tau * z_eff;
    norm_conc = st.u_tau_ref * H * H / Q;
  }

  double sigma_at(double dx) const {
    if (dx <= 0.0) return sigma0;
    return std::sqrt(sigma0 * sigma0 + 2.0 * k_z * dx / u_adv);
  }

  // Amplitude of the line-source kernel (per unit source rate).
  double amplitude(double dx, double sigma) const {
    const double a = 1.0 / (std::sqrt(2.0 * std::numbers::pi) * sigma * u_adv);
    return dx >= 0.0 ? a : a * std::exp(dx / kUpstreamTail);
  }

  struct Local {
    double zc, sigma, amp, wake;
  };

  Local local(double x) const {
    const double dx = x - xs;
    double zc = zs;
    if (xs < 0.0 && zs < kLiftTarget * H) {
      const double x0 = std::max(xs, -kLiftReach * H);
      double lift = (kLiftTarget * H - zs) * smoothstep((x - x0) / (0.0 - x0));
      if (x > H) lift *= 0.5 + 0.5 * std::exp(-(x - H) / (3.0 * H));
      zc += lift;
    }
    double sigma = sigma_at(dx);
    double wake = 0.0;
    if (x > H && dx > 0.0) {
      // fades in behind both the block and the source
      const double onset = std::min(x - H, dx);
      const double w = std::exp(-(x - H) / (kWakeLength * H)) * (1.0 - std::exp(-onset / (kWakeOnset * H)));
      const double p = gauss(zc - H, 0.6 * H / std::sqrt(2.0));
      wake = w * p;
      zc += 0.6 * H * wake;
      sigma *= 1.0 + 1.2 * wake;
    }
    return {zc, sigma, amplitude(dx, sigma), wake};
  }

  double concentration(double x, double z) const {
    const Local l = local(x);
    double c = Q * l.amp * (gauss(z - l.zc, l.sigma) + gauss(z + l.zc, l.sigma));

    if (xs < 0.0 && zs < H) {
      // windward accumulation pocket
      const double s = (1.0 - zs / H) * std::exp(xs / (1.5 * H));
      const double dx_face = std::max(-0.25 * H - xs, 0.0);
      const double a_arr = amplitude(dx_face, sigma_at(dx_face));
      c += 0.5 * s * Q * a_arr * gauss(x + 0.3 * H, 0.25 * H) * gauss(z - 0.35 * H, 0.3 * H);
    }
    if (xs > H && zs < 1.5 * H) {
      // lee-side recirculation pocket
      const double s = std::exp(-(xs - H) / (1.5 * H)) * (1.5 * H - zs) / (1.5 * H);
      const double cx = 0.5 * (H + xs);
      const double sx = std::max(0.2 * H, 0.5 * (xs - H));
      c += 0.35 * s * Q * amplitude(0.0, sigma0) * gauss(x - cx, sx) * gauss(z - 0.45 * H, 0.35 * H);
    }
    return c * norm_conc;
  }

  // Gradient-diffusion vertical flux -K dC/dz of the plume kernel, with the
  // sign flipped inside the strong part of the wake.
  double vertical_flux(double x, double z) const {
    const Local l = local(x);
    const double s2 = l.sigma * l.sigma;
    const double dcdz = Q * l.amp *
                        (-(z - l.zc) / s2 * gauss(z - l.zc, l.sigma) -
                         (z + l.zc) / s2 * gauss(z + l.zc, l.sigma));
    const double sign_factor = 1.0 - 1.6 * l.wake;
    return -k_z * dcdz * sign_factor * H * H / Q;
  }
};

}  // namespace

double plume_value(const PhysicalParams& mu, double x, double z, Channel channel,
                   const ParameterSpace& space, const PlumeSettings& settings) {
  const PlumeKernel k(mu, space, settings);
  return channel == Channel::mean_concentration ? k.concentration(x, z) : k.vertical_flux(x, z);
}

Eigen::VectorXd smooth_noise(const Grid& grid, std::uint64_t key, double correlation_cells) {
  const int r = std::max(1, static_cast<int>(std::ceil(3.0 * correlation_cells)));
  const int px = grid.nx + 2 * r;
  const int pz = grid.nz + 2 * r;

  std::vector<double> w(2 * r + 1);
  double w2 = 0.0;
  for (int k = -r; k <= r; ++k) {
    w[k + r] = std::exp(-0.5 * k * k / (correlation_cells * correlation_cells));
    w2 += w[k + r] * w[k + r];
  }
  // unit variance after the separable pass
  for (double& v : w) v /= std::sqrt(w2);

  std::mt19937_64 rng(key);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> white(static_cast<std::size_t>(px) * pz);
  for (double& v : white) v = normal(rng);

  // x pass over all padded rows, then z pass on the interior
  std::vector<double> tmp(static_cast<std::size_t>(grid.nx) * pz, 0.0);
  for (int iz = 0; iz < pz; ++iz) {
    for (int ix = 0; ix < grid.nx; ++ix) {
      double acc = 0.0;
      for (int k = 0; k <= 2 * r; ++k) acc += w[k] * white[static_cast<std::size_t>(iz) * px + ix + k];
      tmp[static_cast<std::size_t>(iz) * grid.nx + ix] = acc;
    }
  }
  Eigen::VectorXd out(grid.size());
  for (int iz = 0; iz < grid.nz; ++iz) {
    for (int ix = 0; ix < grid.nx; ++ix) {
      double acc = 0.0;
      for (int k = 0; k <= 2 * r; ++k) acc += w[k] * tmp[static_cast<std::size_t>(iz + k) * grid.nx + ix];
      out[grid.node(ix, iz)] = acc;
    }
  }
  return out;
}

FieldSnapshot generate_field(const ParameterSample& mu, const Grid& grid, Channel channel,
                             double window_fraction, std::uint64_t seed,
                             const ParameterSpace& space, const PlumeSettings& settings) {
  if (!(window_fraction > 0.0 && window_fraction <= 1.0)) {
    throw ConfigError("window_fraction must be in (0, 1]");
  }
  if (space.exclusion.contains(mu.physical.x_src, mu.physical.z_src)) {
    throw DataError("source inside the exclusion box");
  }
  grid.validate();

  const PlumeKernel kernel(mu.physical, space, settings);
  FieldSnapshot snap;
  snap.mu = mu;
  snap.channel = channel;
  snap.window_fraction = window_fraction;
  snap.values.resize(grid.size());
  for (int iz = 0; iz < grid.nz; ++iz) {
    const double z = grid.z(iz);
    for (int ix = 0; ix < grid.nx; ++ix) {
      const double x = grid.x(ix);
      snap.values[grid.node(ix, iz)] = channel == Channel::mean_concentration
                                           ? kernel.concentration(x, z)
                                           : kernel.vertical_flux(x, z);
    }
  }

  if (settings.noise_amplitude > 0.0) {
    const std::uint64_t key = combine_seed(
        {seed, mu.index, double_bits(mu.physical.u_zc), double_bits(mu.physical.z0),
         double_bits(mu.physical.x_src), double_bits(mu.physical.z_src),
         double_bits(window_fraction), static_cast<std::uint64_t>(channel)});
    const Eigen::VectorXd xi = smooth_noise(grid, key, settings.noise_correlation);
    const double scale = settings.noise_amplitude / std::sqrt(window_fraction * settings.t_avg_periods);
    snap.values.array() += scale * snap.values.array().abs() * xi.array();
  }
  return snap;
}

Eigen::MatrixXd SnapshotSet::unit_inputs() const {
  Eigen::MatrixXd u(samples.size(), 4);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (int d = 0; d < 4; ++d) u(i, d) = samples[i].unit[d];
  }
  return u;
}

SnapshotSet SnapshotSet::subset(const std::vector<int>& positions) const {
  SnapshotSet out;
  out.grid = grid;
  out.channel = channel;
  out.space = space;
  out.settings = settings;
  out.seed = seed;
  out.skipped = skipped;
  out.samples.reserve(positions.size());
  out.fields.resize(fields.rows(), static_cast<Eigen::Index>(positions.size()));
  const bool half = has_half_window();
  if (half) out.half_fields.resize(half_fields.rows(), static_cast<Eigen::Index>(positions.size()));
  for (std::size_t j = 0; j < positions.size(); ++j) {
    const int p = positions[j];
    if (p < 0 || static_cast<std::size_t>(p) >= samples.size()) throw DataError("subset index out of range");
    out.samples.push_back(samples[p]);
    out.fields.col(j) = fields.col(p);
    if (half) out.half_fields.col(j) = half_fields.col(p);
  }
  return out;
}

SnapshotSet generate_dataset(const ParameterSpace& space, std::size_t n, const Grid& grid,
                             Channel channel, std::uint64_t seed, PlumeSettings settings, int jobs) {
  if (n < 2) throw ConfigError("dataset needs at least 2 snapshots");
  space.validate();
  grid.validate();
  if (settings.u_tau_ref <= 0.0) settings.u_tau_ref = reference_velocity(space, 100000, seed);

  const Design d = design(space, n, 1);
  SnapshotSet set;
  set.grid = grid;
  set.channel = channel;
  set.space = space;
  set.settings = settings;
  set.seed = seed;
  set.skipped = d.skipped;
  set.samples = d.samples;
  set.fields.resize(static_cast<Eigen::Index>(grid.size()), static_cast<Eigen::Index>(n));
  set.half_fields.resize(static_cast<Eigen::Index>(grid.size()), static_cast<Eigen::Index>(n));

  const int threads = jobs > 0 ? jobs : omp_get_max_threads();
  const auto count = static_cast<long>(n);
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (long i = 0; i < count; ++i) {
    set.fields.col(i) = generate_field(d.samples[i], grid, channel, 1.0, seed, space, settings).values;
    set.half_fields.col(i) = generate_field(d.samples[i], grid, channel, 0.5, seed, space, settings).values;
  }
  return set;
}

}  // namespace plumerom

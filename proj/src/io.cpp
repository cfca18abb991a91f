#include "plumerom/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "plumerom/errors.hpp"

namespace plumerom {

namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

class BinaryWriter {
 public:
  explicit BinaryWriter(const fs::path& path) : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw DataError("cannot open " + path.string() + " for writing");
  }
  void bytes(const char* p, std::size_t n) { out_.write(p, static_cast<std::streamsize>(n)); }
  void u32(std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(reinterpret_cast<const char*>(b), 4);
  }
  void f64(const double* p, std::size_t n) {
    if constexpr (std::endian::native == std::endian::little) {
      bytes(reinterpret_cast<const char*>(p), n * sizeof(double));
    } else {
      for (std::size_t k = 0; k < n; ++k) {
        const auto v = std::bit_cast<std::uint64_t>(p[k]);
        unsigned char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
        bytes(reinterpret_cast<const char*>(b), 8);
      }
    }
  }
  void finish(const fs::path& path) {
    out_.flush();
    if (!out_) throw DataError("write failed: " + path.string());
  }

 private:
  std::ofstream out_;
};

class BinaryReader {
 public:
  explicit BinaryReader(const fs::path& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw DataError("cannot open " + path.string());
  }
  void bytes(char* p, std::size_t n) {
    in_.read(p, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) throw DataError("truncated file: " + path_.string());
  }
  std::uint32_t u32() {
    unsigned char b[4];
    bytes(reinterpret_cast<char*>(b), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
  }
  void f64(double* p, std::size_t n) {
    bytes(reinterpret_cast<char*>(p), n * sizeof(double));
    if constexpr (std::endian::native != std::endian::little) {
      for (std::size_t k = 0; k < n; ++k) {
        unsigned char b[8];
        std::memcpy(b, p + k, 8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        p[k] = std::bit_cast<double>(v);
      }
    }
  }
  void expect_end() {
    if (in_.peek() != std::char_traits<char>::eof()) throw DataError("trailing bytes in " + path_.string());
  }

 private:
  fs::path path_;
  std::ifstream in_;
};

double number(const json& j) { return j.is_null() ? kNaN : j.get<double>(); }

json numbers(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) {
    if (std::isfinite(x)) {
      a.push_back(x);
    } else {
      a.push_back(nullptr);
    }
  }
  return a;
}

std::vector<double> numbers_from(const json& a) {
  std::vector<double> v;
  for (const auto& x : a) v.push_back(number(x));
  return v;
}

json vector_json(const Eigen::VectorXd& v) { return numbers(std::vector<double>(v.data(), v.data() + v.size())); }

Eigen::VectorXd vector_from(const json& a) {
  const std::vector<double> v = numbers_from(a);
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json hashes_json(const std::vector<std::uint64_t>& v) {
  json a = json::array();
  for (auto x : v) a.push_back(x);
  return a;
}

json gamma_json(const GammaPrior& g) {
  return {{"shape", g.shape}, {"rate", g.rate}, {"mode", g.mode()}, {"mean", g.mean()}, {"variance", g.variance()}};
}

GammaPrior gamma_from(const json& j) { return {j.at("shape").get<double>(), j.at("rate").get<double>()}; }

json prior_json(const PriorSet& p) {
  json ls = json::array();
  for (const auto& g : p.lengthscales) ls.push_back(gamma_json(g));
  return {{"noise", gamma_json(p.noise)},
          {"signal", {{"mean", p.signal.mean}, {"variance", p.signal.variance}}},
          {"lengthscales", ls},
          {"noise_mode_capped", p.noise_mode_capped}};
}

PriorSet prior_from(const json& j) {
  PriorSet p;
  p.noise = gamma_from(j.at("noise"));
  p.signal = {j.at("signal").at("mean").get<double>(), j.at("signal").at("variance").get<double>()};
  for (int d = 0; d < 4; ++d) p.lengthscales[d] = gamma_from(j.at("lengthscales").at(d));
  p.noise_mode_capped = j.at("noise_mode_capped").get<bool>();
  return p;
}

json prior_options_json(const PriorOptions& o) {
  return {{"noise_mean", o.noise_mean},
          {"noise_mode_cap", o.noise_mode_cap},
          {"signal_mean", o.signal_mean},
          {"signal_variance", o.signal_variance},
          {"lengthscale_variance", o.lengthscale_variance}};
}

PriorOptions prior_options_from(const json& j) {
  PriorOptions o;
  o.noise_mean = j.at("noise_mean").get<double>();
  o.noise_mode_cap = j.at("noise_mode_cap").get<double>();
  o.signal_mean = j.at("signal_mean").get<double>();
  o.signal_variance = j.at("signal_variance").get<double>();
  o.lengthscale_variance = j.at("lengthscale_variance").get<double>();
  return o;
}

template <class T>
void set_if(const json& j, const char* key, T& dst) {
  if (j.contains(key)) dst = j.at(key).get<T>();
}

std::string smx_name(Channel c, bool half) { return to_string(c) + (half ? "_half.smx" : ".smx"); }

}  // namespace

void write_smx(const fs::path& path, const Eigen::MatrixXd& data, std::uint32_t nx, std::uint32_t nz) {
  if (static_cast<std::uint64_t>(nx) * nz != static_cast<std::uint64_t>(data.rows())) {
    throw DataError("SMX grid size does not match the matrix rows");
  }
  BinaryWriter w(path);
  w.bytes("SMX1", 4);
  w.u32(nx);
  w.u32(nz);
  w.u32(static_cast<std::uint32_t>(data.cols()));
  w.f64(data.data(), static_cast<std::size_t>(data.size()));
  w.finish(path);
}

SmxMatrix read_smx(const fs::path& path) {
  BinaryReader r(path);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, "SMX1", 4) != 0) throw DataError("not an SMX file: " + path.string());
  SmxMatrix m;
  m.nx = r.u32();
  m.nz = r.u32();
  const std::uint32_t n = r.u32();
  m.data.resize(static_cast<Eigen::Index>(m.nx) * m.nz, n);
  r.f64(m.data.data(), static_cast<std::size_t>(m.data.size()));
  r.expect_end();
  return m;
}

void to_json(json& j, const Interval& v) { j = json::array({v.lo, v.hi}); }

void from_json(const json& j, Interval& v) {
  if (!j.is_array() || j.size() != 2) throw ConfigError("interval must be a two-element array");
  v.lo = j[0].get<double>();
  v.hi = j[1].get<double>();
}

void to_json(json& j, const ParameterSpace& v) {
  j = {{"u_zc", v.u_zc},
       {"z0", v.z0},
       {"x_src", v.x_src},
       {"z_src", v.z_src},
       {"exclusion", {{"x", v.exclusion.x}, {"z", v.exclusion.z}}},
       {"z_c", v.z_c},
       {"kappa", v.kappa}};
}

void from_json(const json& j, ParameterSpace& v) {
  set_if(j, "u_zc", v.u_zc);
  set_if(j, "z0", v.z0);
  set_if(j, "x_src", v.x_src);
  set_if(j, "z_src", v.z_src);
  if (j.contains("exclusion")) {
    set_if(j.at("exclusion"), "x", v.exclusion.x);
    set_if(j.at("exclusion"), "z", v.exclusion.z);
  }
  set_if(j, "z_c", v.z_c);
  set_if(j, "kappa", v.kappa);
}

void to_json(json& j, const Grid& v) {
  j = {{"x_min", v.x_min}, {"x_max", v.x_max}, {"z_min", v.z_min}, {"z_max", v.z_max}, {"nx", v.nx}, {"nz", v.nz}};
}

void from_json(const json& j, Grid& v) {
  set_if(j, "x_min", v.x_min);
  set_if(j, "x_max", v.x_max);
  set_if(j, "z_min", v.z_min);
  set_if(j, "z_max", v.z_max);
  set_if(j, "nx", v.nx);
  set_if(j, "nz", v.nz);
}

void to_json(json& j, const PlumeSettings& v) {
  j = {{"noise_amplitude", v.noise_amplitude},
       {"t_avg_periods", v.t_avg_periods},
       {"source_sigma", v.source_sigma},
       {"u_tau_ref", v.u_tau_ref},
       {"obstacle_height", v.obstacle_height},
       {"source_rate", v.source_rate},
       {"noise_correlation", v.noise_correlation}};
}

void from_json(const json& j, PlumeSettings& v) {
  set_if(j, "noise_amplitude", v.noise_amplitude);
  set_if(j, "t_avg_periods", v.t_avg_periods);
  set_if(j, "source_sigma", v.source_sigma);
  set_if(j, "u_tau_ref", v.u_tau_ref);
  set_if(j, "obstacle_height", v.obstacle_height);
  set_if(j, "source_rate", v.source_rate);
  set_if(j, "noise_correlation", v.noise_correlation);
}

void to_json(json& j, const Hyperparameters& v) {
  j = {{"noise_var", v.noise_var}, {"signal_var", v.signal_var}, {"lengthscales", v.lengthscales}};
}

void from_json(const json& j, Hyperparameters& v) {
  set_if(j, "noise_var", v.noise_var);
  set_if(j, "signal_var", v.signal_var);
  set_if(j, "lengthscales", v.lengthscales);
}

json design_manifest(const SnapshotSet& set) {
  json samples = json::array();
  for (const auto& s : set.samples) {
    samples.push_back({{"index", s.index},
                       {"unit", s.unit},
                       {"physical", {s.physical.u_zc, s.physical.z0, s.physical.x_src, s.physical.z_src}}});
  }
  const std::uint64_t start = set.samples.empty() ? 1 : set.samples.front().index;
  return {{"space", set.space}, {"start_index", start}, {"skipped", set.skipped}, {"samples", samples}};
}

void write_dataset(const fs::path& dir, const SnapshotSet& set, const json& config) {
  fs::create_directories(dir);
  const auto nx = static_cast<std::uint32_t>(set.grid.nx);
  const auto nz = static_cast<std::uint32_t>(set.grid.nz);
  write_smx(dir / smx_name(set.channel, false), set.fields, nx, nz);
  json files = {{"full", smx_name(set.channel, false)}, {"half", nullptr}};
  if (set.has_half_window()) {
    write_smx(dir / smx_name(set.channel, true), set.half_fields, nx, nz);
    files["half"] = smx_name(set.channel, true);
  }
  const json manifest = {{"format", "plumerom-dataset"},
                         {"tool_version", kToolVersion},
                         {"generator_version", kGeneratorVersion},
                         {"config", config},
                         {"channel", to_string(set.channel)},
                         {"grid", set.grid},
                         {"settings", set.settings},
                         {"seed", set.seed},
                         {"n_snapshots", set.size()},
                         {"design", design_manifest(set)},
                         {"files", files}};
  write_json(dir / "manifest.json", manifest);
}

LoadedDataset read_dataset(const fs::path& dir) {
  LoadedDataset out;
  if (!fs::exists(dir / "manifest.json")) throw DataError("no dataset manifest in " + dir.string());
  out.manifest = read_json(dir / "manifest.json");
  const json& m = out.manifest;
  try {
    if (m.at("format") != "plumerom-dataset") throw DataError("not a dataset manifest: " + dir.string());
    SnapshotSet& s = out.set;
    s.channel = channel_from_string(m.at("channel").get<std::string>());
    from_json(m.at("grid"), s.grid);
    from_json(m.at("settings"), s.settings);
    s.seed = m.at("seed").get<std::uint64_t>();
    const json& d = m.at("design");
    from_json(d.at("space"), s.space);
    s.skipped = d.at("skipped").get<std::uint64_t>();
    for (const auto& r : d.at("samples")) {
      ParameterSample p;
      p.index = r.at("index").get<std::uint64_t>();
      p.unit = r.at("unit").get<UnitPoint>();
      const auto ph = r.at("physical").get<std::array<double, 4>>();
      p.physical = {ph[0], ph[1], ph[2], ph[3]};
      s.samples.push_back(p);
    }
    const SmxMatrix full = read_smx(dir / m.at("files").at("full").get<std::string>());
    if (static_cast<int>(full.nx) != s.grid.nx || static_cast<int>(full.nz) != s.grid.nz ||
        static_cast<std::size_t>(full.data.cols()) != s.samples.size()) {
      throw DataError("dataset SMX shape does not match the manifest");
    }
    s.fields = full.data;
    if (!m.at("files").at("half").is_null()) {
      SmxMatrix half = read_smx(dir / m.at("files").at("half").get<std::string>());
      if (half.data.rows() != s.fields.rows() || half.data.cols() != s.fields.cols()) {
        throw DataError("half-window SMX is not paired with the full-window file");
      }
      s.half_fields = std::move(half.data);
    }
  } catch (const json::exception& e) {
    throw DataError("malformed dataset manifest: " + std::string(e.what()));
  }
  return out;
}

std::uint64_t theta_checksum(const Hyperparameters& t) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&](double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  };
  mix(t.noise_var);
  mix(t.signal_var);
  for (double l : t.lengthscales) mix(l);
  return h;
}

void write_model(const fs::path& dir, const RomModel& model, const json& config) {
  fs::create_directories(dir);
  const ReducedBasis& b = model.basis;
  const Eigen::Index nh = b.nodes();
  const int L = model.L();
  if (static_cast<int>(model.gps.size()) != L) throw DataError("model has a GP count different from L");

  Eigen::MatrixXd cols = Eigen::MatrixXd::Zero(nh, 3 + L);
  cols.col(0) = b.mean_field;
  cols.col(1) = b.node_variance;
  cols.col(2).head(L) = b.eigenvalues;
  cols.rightCols(L) = b.modes;
  write_smx(dir / "basis.smx", cols, static_cast<std::uint32_t>(model.grid.nx),
            static_cast<std::uint32_t>(model.grid.nz));

  const Eigen::MatrixXd& inputs = model.gps.front().inputs();
  BinaryWriter w(dir / "gps.bin");
  w.bytes("GPB1", 4);
  w.u32(static_cast<std::uint32_t>(L));
  w.u32(static_cast<std::uint32_t>(inputs.rows()));
  w.u32(static_cast<std::uint32_t>(inputs.cols()));
  w.f64(inputs.data(), static_cast<std::size_t>(inputs.size()));
  for (const auto& gp : model.gps) {
    if (gp.inputs() != inputs) throw DataError("GP models do not share their training inputs");
    w.f64(gp.targets().data(), static_cast<std::size_t>(gp.targets().size()));
    w.f64(gp.alpha().data(), static_cast<std::size_t>(gp.alpha().size()));
  }
  w.finish(dir / "gps.bin");

  json modes = json::array();
  const std::vector<double> nts = model.noise_to_signal();
  for (int l = 0; l < L; ++l) {
    const ModeTraining& t = model.training[l];
    modes.push_back({{"mode", l + 1},
                     {"theta", model.gps[l].theta()},
                     {"theta_checksum", hex64(theta_checksum(model.gps[l].theta()))},
                     {"jitter_applied", model.gps[l].jitter_applied()},
                     {"objective", t.objective},
                     {"iterations", t.iterations},
                     {"evaluations", t.evaluations},
                     {"restarts", t.restarts},
                     {"converged", t.converged},
                     {"stop_reason", t.stop_reason},
                     {"noise_to_signal", nts[l]}});
  }
  json per_mode_priors = json::array();
  for (const auto& p : model.priors.per_mode) per_mode_priors.push_back(prior_json(p));
  const NoiseEstimate& ne = model.priors.noise;
  const json priors = {{"available", model.priors.available},
                       {"options", prior_options_json(model.priors.options)},
                       {"noise_estimate",
                        {{"per_mode", numbers(ne.per_mode)},
                         {"fitted", ne.fitted},
                         {"prefactor", ne.fit.prefactor},
                         {"exponent", ne.fit.exponent}}},
                       {"per_mode", per_mode_priors}};
  const SplitManifest& s = model.split;
  const json split = {{"train", hashes_json(s.train)},
                      {"calibration", hashes_json(s.calibration)},
                      {"test", hashes_json(s.test)},
                      {"train_hash", hex64(s.train_hash)},
                      {"calibration_hash", hex64(s.calibration_hash)},
                      {"test_hash", hex64(s.test_hash)},
                      {"gp_uses_calibration", s.gp_uses_calibration}};
  const json manifest = {
      {"format", "plumerom-model"},
      {"tool_version", kToolVersion},
      {"config", config},
      {"method", to_string(model.method)},
      {"channel", to_string(model.channel)},
      {"grid", model.grid},
      {"space", model.space},
      {"normalization",
       {{"u_tau_ref", model.normalization.u_tau_ref},
        {"obstacle_height", model.normalization.obstacle_height},
        {"source_rate", model.normalization.source_rate}}},
      {"L", L},
      {"basis",
       {{"n_train", b.n_train},
        {"total_variance", b.total_variance},
        {"spectrum", vector_json(b.spectrum)},
        {"id", hex64(b.id())},
        {"file", "basis.smx"}}},
      {"gps_file", "gps.bin"},
      {"modes", modes},
      {"priors_audit", priors},
      {"split", split},
      {"train_q2", {{"global", model.train_q2_global}, {"per_mode", numbers(model.train_q2_per_mode)}}}};
  write_json(dir / "model.json", manifest);
}

void write_train_log(const fs::path& dir, const RomModel& model, double total_seconds) {
  json modes = json::array();
  int total_iterations = 0;
  for (int l = 0; l < model.L(); ++l) {
    const ModeTraining& t = model.training[l];
    total_iterations += t.iterations;
    modes.push_back({{"mode", l + 1},
                     {"iterations", t.iterations},
                     {"evaluations", t.evaluations},
                     {"seconds", t.seconds}});
  }
  write_json(dir / "train_log.json", {{"method", to_string(model.method)},
                                       {"total_iterations", total_iterations},
                                       {"total_seconds", total_seconds},
                                       {"modes", modes}});
}

LoadedModel read_model(const fs::path& dir) {
  LoadedModel out;
  if (!fs::exists(dir / "model.json")) throw DataError("no model.json in " + dir.string());
  out.manifest = read_json(dir / "model.json");
  const json& m = out.manifest;
  RomModel& model = out.model;
  try {
    if (m.at("format") != "plumerom-model") throw DataError("not a model manifest: " + dir.string());
    model.method = method_from_string(m.at("method").get<std::string>());
    model.channel = channel_from_string(m.at("channel").get<std::string>());
    from_json(m.at("grid"), model.grid);
    from_json(m.at("space"), model.space);
    const json& nm = m.at("normalization");
    model.normalization = {nm.at("u_tau_ref").get<double>(), nm.at("obstacle_height").get<double>(),
                           nm.at("source_rate").get<double>()};
    const int L = m.at("L").get<int>();

    const SmxMatrix bs = read_smx(dir / m.at("basis").at("file").get<std::string>());
    if (bs.data.cols() != 3 + L || static_cast<int>(bs.nx) != model.grid.nx ||
        static_cast<int>(bs.nz) != model.grid.nz) {
      throw DataError("basis.smx shape does not match model.json");
    }
    ReducedBasis& b = model.basis;
    b.mean_field = bs.data.col(0);
    b.node_variance = bs.data.col(1);
    b.eigenvalues = bs.data.col(2).head(L);
    b.modes = bs.data.rightCols(L);
    b.n_train = m.at("basis").at("n_train").get<int>();
    b.total_variance = m.at("basis").at("total_variance").get<double>();
    b.spectrum = vector_from(m.at("basis").at("spectrum"));
    const double vmax = b.node_variance.maxCoeff();
    b.active.resize(static_cast<std::size_t>(b.nodes()));
    for (Eigen::Index i = 0; i < b.nodes(); ++i) {
      b.active[i] = b.node_variance[i] > kMaskRelativeThreshold * vmax ? 1 : 0;
    }
    if (hex64(b.id()) != m.at("basis").at("id").get<std::string>()) {
      throw DataError("basis.smx does not match the basis id in model.json");
    }

    const json& pa = m.at("priors_audit");
    model.priors.available = pa.at("available").get<bool>();
    model.priors.options = prior_options_from(pa.at("options"));
    const json& ne = pa.at("noise_estimate");
    model.priors.noise.per_mode = numbers_from(ne.at("per_mode"));
    model.priors.noise.fitted = ne.at("fitted").get<bool>();
    model.priors.noise.fit = {ne.at("prefactor").get<double>(), ne.at("exponent").get<double>()};
    for (const auto& p : pa.at("per_mode")) model.priors.per_mode.push_back(prior_from(p));

    const json& sp = m.at("split");
    model.split.train = sp.at("train").get<std::vector<std::uint64_t>>();
    model.split.calibration = sp.at("calibration").get<std::vector<std::uint64_t>>();
    model.split.test = sp.at("test").get<std::vector<std::uint64_t>>();
    model.split.train_hash = parse_hex64(sp.at("train_hash").get<std::string>());
    model.split.calibration_hash = parse_hex64(sp.at("calibration_hash").get<std::string>());
    model.split.test_hash = parse_hex64(sp.at("test_hash").get<std::string>());
    model.split.gp_uses_calibration = sp.at("gp_uses_calibration").get<bool>();

    model.train_q2_global = number(m.at("train_q2").at("global"));
    model.train_q2_per_mode = numbers_from(m.at("train_q2").at("per_mode"));

    BinaryReader r(dir / m.at("gps_file").get<std::string>());
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, "GPB1", 4) != 0) throw DataError("gps.bin has a bad magic");
    const std::uint32_t n_modes = r.u32();
    const std::uint32_t n = r.u32();
    const std::uint32_t dim = r.u32();
    if (static_cast<int>(n_modes) != L || dim != 4) throw DataError("gps.bin does not match model.json");
    Eigen::MatrixXd inputs(n, dim);
    r.f64(inputs.data(), static_cast<std::size_t>(inputs.size()));
    const json& modes = m.at("modes");
    if (static_cast<int>(modes.size()) != L) throw DataError("model.json mode table has the wrong length");
    for (int l = 0; l < L; ++l) {
      Eigen::VectorXd targets(n), alpha(n);
      r.f64(targets.data(), n);
      r.f64(alpha.data(), n);
      const json& md = modes.at(l);
      Hyperparameters theta;
      from_json(md.at("theta"), theta);
      if (hex64(theta_checksum(theta)) != md.at("theta_checksum").get<std::string>()) {
        throw DataError("theta checksum mismatch for mode " + std::to_string(l + 1));
      }
      GpModel gp = GpModel::fit(inputs, targets, theta);
      const double scale = std::max(1.0, alpha.lpNorm<Eigen::Infinity>());
      if ((gp.alpha() - alpha).lpNorm<Eigen::Infinity>() > 1e-8 * scale) {
        throw NumericalError("refactorized GP weights disagree with gps.bin for mode " + std::to_string(l + 1));
      }
      model.gps.push_back(std::move(gp));
      ModeTraining t;
      t.theta = theta;
      t.objective = number(md.at("objective"));
      t.iterations = md.at("iterations").get<int>();
      t.evaluations = md.at("evaluations").get<int>();
      t.restarts = md.at("restarts").get<int>();
      t.converged = md.at("converged").get<bool>();
      t.stop_reason = md.at("stop_reason").get<std::string>();
      model.training.push_back(t);
    }
    r.expect_end();
  } catch (const json::exception& e) {
    throw DataError("malformed model.json: " + std::string(e.what()));
  }
  return out;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_csv(const fs::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_number(row[i]);
    out << '\n';
  }
  if (!out) throw DataError("write failed: " + path.string());
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw DataError("write failed: " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  const auto res = std::to_chars(buf, buf + 16, v, 16);
  std::string s(buf, res.ptr);
  return std::string(16 - s.size(), '0') + s;
}

std::uint64_t parse_hex64(const std::string& s) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v, 16);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw DataError("bad hex value '" + s + "'");
  return v;
}

}  // namespace plumerom

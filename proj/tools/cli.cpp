#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "plumerom/errors.hpp"

namespace plumerom::cli {

namespace fs = std::filesystem;

json to_json(const RunConfig& c) {
  return {{"space", c.space},
          {"grid", c.grid},
          {"settings", c.settings},
          {"n_snapshots", c.n_snapshots},
          {"L", c.L},
          {"method", to_string(c.method)},
          {"restarts", c.restarts},
          {"seed", c.seed},
          {"channel", to_string(c.channel)},
          {"fractions", {c.fractions.train, c.fractions.calibration, c.fractions.test}},
          {"dataset_dir", c.dataset_dir},
          {"model_dir", c.model_dir},
          {"report_dir", c.report_dir}};
}

void apply_json(const json& in, RunConfig& c) {
  const json& j = in.contains("config") && in.at("config").is_object() ? in.at("config") : in;
  try {
    if (j.contains("space")) from_json(j.at("space"), c.space);
    if (j.contains("grid")) from_json(j.at("grid"), c.grid);
    if (j.contains("settings")) from_json(j.at("settings"), c.settings);
    if (j.contains("n_snapshots")) c.n_snapshots = j.at("n_snapshots").get<std::size_t>();
    if (j.contains("L")) c.L = j.at("L").get<int>();
    if (j.contains("method")) c.method = method_from_string(j.at("method").get<std::string>());
    if (j.contains("restarts")) c.restarts = j.at("restarts").get<int>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("channel")) c.channel = channel_from_string(j.at("channel").get<std::string>());
    if (j.contains("fractions")) {
      const auto f = j.at("fractions").get<std::array<double, 3>>();
      c.fractions = {f[0], f[1], f[2]};
    }
    if (j.contains("dataset_dir")) c.dataset_dir = j.at("dataset_dir").get<std::string>();
    if (j.contains("model_dir")) c.model_dir = j.at("model_dir").get<std::string>();
    if (j.contains("report_dir")) c.report_dir = j.at("report_dir").get<std::string>();
  } catch (const json::exception& e) {
    throw ConfigError("invalid configuration: " + std::string(e.what()));
  }
}

namespace {

struct Globals {
  std::string config_path;
  std::uint64_t seed = 0;
  int jobs = 0;
  bool force = false;
  CLI::Option* seed_opt = nullptr;
};

std::vector<double> parse_list(const std::string& s, std::size_t expected, const char* what) {
  std::vector<double> v;
  std::stringstream ss(s);
  ss.imbue(std::locale::classic());
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::istringstream is(item);
    is.imbue(std::locale::classic());
    double x = 0.0;
    if (!(is >> x) || !(is >> std::ws).eof()) throw ConfigError(std::string("cannot parse ") + what + " '" + s + "'");
    v.push_back(x);
  }
  if (expected != 0 && v.size() != expected) {
    throw ConfigError(std::string(what) + " needs " + std::to_string(expected) + " comma-separated values");
  }
  return v;
}

std::vector<int> parse_ints(const std::string& s, const char* what) {
  std::vector<int> out;
  for (double x : parse_list(s, 0, what)) {
    if (x != static_cast<int>(x)) throw ConfigError(std::string(what) + " must be integers");
    out.push_back(static_cast<int>(x));
  }
  return out;
}

Grid parse_grid(const std::string& s, Grid g) {
  const auto x = s.find('x');
  if (x == std::string::npos) throw ConfigError("grid must look like NXxNZ");
  try {
    g.nx = std::stoi(s.substr(0, x));
    g.nz = std::stoi(s.substr(x + 1));
  } catch (const std::exception&) {
    throw ConfigError("grid must look like NXxNZ");
  }
  return g;
}

RunConfig base_config(const Globals& g) {
  RunConfig c;
  if (!g.config_path.empty()) apply_json(read_json(g.config_path), c);
  if (g.seed_opt->count() > 0) c.seed = g.seed;
  return c;
}

void prepare_output(const fs::path& dir, bool force) {
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) throw ConfigError(dir.string() + " exists and is not a directory");
    if (!fs::is_empty(dir)) {
      if (!force) throw ConfigError("output directory " + dir.string() + " is not empty (use --force)");
      fs::remove_all(dir);
    }
  }
  fs::create_directories(dir);
}

void copy_generation_fields(const RunConfig& from, RunConfig& to) {
  to.space = from.space;
  to.grid = from.grid;
  to.settings = from.settings;
  to.n_snapshots = from.n_snapshots;
  to.channel = from.channel;
}

LoadedDataset load_for(const std::string& flag_dir, RunConfig& cfg, const Globals& g, bool seed_from_dataset) {
  const std::string dir = flag_dir.empty() ? cfg.dataset_dir : flag_dir;
  LoadedDataset d = read_dataset(dir);
  RunConfig from_data;
  apply_json(d.manifest, from_data);
  copy_generation_fields(from_data, cfg);
  cfg.settings.u_tau_ref = d.set.settings.u_tau_ref;
  if (seed_from_dataset && g.config_path.empty() && g.seed_opt->count() == 0) cfg.seed = from_data.seed;
  cfg.dataset_dir = dir;
  return d;
}

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(prec) << v;
  return os.str();
}

int cmd_generate(const Globals& g, const std::string& out_dir, std::size_t n, const std::string& grid,
                 const std::string& channel, std::ostream& out) {
  RunConfig cfg = base_config(g);
  if (n > 0) cfg.n_snapshots = n;
  if (!grid.empty()) cfg.grid = parse_grid(grid, cfg.grid);
  if (!channel.empty()) cfg.channel = channel_from_string(channel);
  if (!out_dir.empty()) cfg.dataset_dir = out_dir;
  cfg.space.validate();
  cfg.grid.validate();
  prepare_output(cfg.dataset_dir, g.force);
  const auto t0 = std::chrono::steady_clock::now();
  const SnapshotSet set = generate_dataset(cfg.space, cfg.n_snapshots, cfg.grid, cfg.channel, cfg.seed,
                                           cfg.settings, g.jobs);
  cfg.settings.u_tau_ref = set.settings.u_tau_ref;
  write_dataset(cfg.dataset_dir, set, to_json(cfg));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out << "generated " << set.size() << " snapshots (" << to_string(set.channel) << ", grid " << cfg.grid.nx << "x"
      << cfg.grid.nz << ", skipped " << set.skipped << ", u_tau_ref " << fmt(set.settings.u_tau_ref, 6) << ") in "
      << fmt(secs, 3) << " s -> " << cfg.dataset_dir << "\n";
  return 0;
}

int cmd_train(const Globals& g, const std::string& dataset_dir, const std::string& out_dir, int L,
              const std::string& method, int restarts, std::ostream& out) {
  RunConfig cfg = base_config(g);
  const LoadedDataset data = load_for(dataset_dir, cfg, g, true);
  if (L > 0) cfg.L = L;
  if (!method.empty()) cfg.method = method_from_string(method);
  if (restarts > 0) cfg.restarts = restarts;
  if (!out_dir.empty()) cfg.model_dir = out_dir;

  const DatasetSplit parts = split(data.set, cfg.fractions);
  TrainOptions opts;
  opts.L = cfg.L;
  opts.method = cfg.method;
  opts.seed = cfg.seed;
  opts.restarts = cfg.restarts;
  opts.jobs = g.jobs;
  if (cfg.L > static_cast<int>(parts.train.size()) - 1) {
    throw ConfigError("L = " + std::to_string(cfg.L) + " exceeds the POD training size minus one (" +
                      std::to_string(parts.train.size() - 1) + ")");
  }
  prepare_output(cfg.model_dir, g.force);
  const auto t0 = std::chrono::steady_clock::now();
  RomModel model = train(parts.train, parts.calibration, opts);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  for (const auto& s : parts.test.samples) model.split.test.push_back(s.index);
  model.split.test_hash = split_hash(parts.test);
  write_model(cfg.model_dir, model, to_json(cfg));
  write_train_log(cfg.model_dir, model, secs);

  out << "mode      s2        rho       l_uzc     l_z0      l_xsrc    l_zsrc    iters  seconds\n";
  int total = 0;
  for (int l = 0; l < model.L(); ++l) {
    const Hyperparameters& t = model.training[l].theta;
    total += model.training[l].iterations;
    out << std::left << std::setw(10) << l + 1 << std::setw(10) << fmt(t.noise_var, 3) << std::setw(10)
        << fmt(t.signal_var, 3);
    for (double v : t.lengthscales) out << std::setw(10) << fmt(v, 3);
    out << std::setw(7) << model.training[l].iterations << fmt(model.training[l].seconds, 3) << "\n";
  }
  out << std::right;
  out << "method " << to_string(model.method) << ", L " << model.L() << ", total iterations " << total
      << ", training time " << fmt(secs, 4) << " s, train Q2 " << fmt(model.train_q2_global, 6) << " -> "
      << cfg.model_dir << "\n";
  return 0;
}

int cmd_predict(const Globals& g, const std::string& model_dir, const std::string& mu, const std::string& unit,
                const std::string& out_dir, std::ostream& out) {
  RunConfig cfg = base_config(g);
  const std::string dir = model_dir.empty() ? cfg.model_dir : model_dir;
  const LoadedModel lm = read_model(dir);
  apply_json(lm.manifest, cfg);
  if (mu.empty() == unit.empty()) throw ConfigError("give exactly one of --mu or --unit");
  PhysicalParams p;
  if (!mu.empty()) {
    const auto v = parse_list(mu, 4, "--mu");
    p = {v[0], v[1], v[2], v[3]};
  } else {
    const auto v = parse_list(unit, 4, "--unit");
    p = to_physical({v[0], v[1], v[2], v[3]}, lm.model.space).physical;
  }
  const Prediction pr = predict(lm.model, p);
  const fs::path report = out_dir.empty() ? fs::path(cfg.report_dir) : fs::path(out_dir);
  fs::create_directories(report);
  const auto nx = static_cast<std::uint32_t>(lm.model.grid.nx);
  const auto nz = static_cast<std::uint32_t>(lm.model.grid.nz);
  write_smx(report / "field.smx", pr.field, nx, nz);
  write_smx(report / "field_display.smx", presentation_field(pr.field), nx, nz);
  std::vector<std::vector<double>> rows;
  for (int l = 0; l < lm.model.L(); ++l) rows.push_back({double(l + 1), pr.coeff_mean[l], pr.coeff_var[l]});
  write_csv(report / "coefficients.csv", {"mode", "mean", "variance"}, rows);
  out << "predicted mu = (" << fmt(p.u_zc, 6) << ", " << fmt(p.z0, 6) << ", " << fmt(p.x_src, 6) << ", "
      << fmt(p.z_src, 6) << "), field range [" << fmt(pr.field.minCoeff()) << ", " << fmt(pr.field.maxCoeff())
      << "] -> " << report.string() << "\n";
  return 0;
}

int cmd_evaluate(const Globals& g, const std::string& model_dir, const std::string& dataset_dir,
                 const std::string& which, const std::string& out_dir, std::ostream& out) {
  RunConfig cfg = base_config(g);
  const std::string mdir = model_dir.empty() ? cfg.model_dir : model_dir;
  const LoadedModel lm = read_model(mdir);
  apply_json(lm.manifest, cfg);
  const LoadedDataset data = load_for(dataset_dir, cfg, g, false);
  const DatasetSplit parts = split(data.set, cfg.fractions);
  if (split_hash(parts.train) != lm.model.split.train_hash) {
    throw DataError("dataset split does not reproduce the model's training split");
  }
  DatasetTag tag;
  if (which == "test") {
    tag = DatasetTag::test;
  } else if (which == "train") {
    tag = DatasetTag::train;
  } else {
    throw ConfigError("--split must be test or train");
  }
  const SnapshotSet& subset = tag == DatasetTag::test ? parts.test : parts.train;
  const EvaluationReport r = evaluate(lm.model, subset, tag, g.jobs);

  const fs::path report = out_dir.empty() ? fs::path(cfg.report_dir) : fs::path(out_dir);
  fs::create_directories(report);
  std::vector<std::vector<double>> rows;
  json table = json::array();
  const std::vector<double> nts = lm.model.noise_to_signal();
  for (std::size_t l = 0; l < r.q2_per_mode.size(); ++l) {
    rows.push_back({double(l + 1), r.q2_per_mode[l]});
    const double q = r.q2_per_mode[l];
    table.push_back({{"mode", l + 1}, {"q2", std::isnan(q) ? json(nullptr) : json(q)}, {"noise_to_signal", nts[l]}});
  }
  write_csv(report / "q2_per_mode.csv", {"mode", "q2"}, rows);
  write_smx(report / "q2_local.smx", r.q2_local, static_cast<std::uint32_t>(lm.model.grid.nx),
            static_cast<std::uint32_t>(lm.model.grid.nz));
  const json summary = {{"split", to_string(tag)},
                        {"n_snapshots", r.n_snapshots},
                        {"q2_global", r.q2_global},
                        {"split_hash", hex64(r.split_hash)},
                        {"train_hash", hex64(r.train_hash)},
                        {"train_q2_global", lm.model.train_q2_global},
                        {"per_mode", table},
                        {"tool_version", kToolVersion},
                        {"config", to_json(cfg)}};
  write_json(report / "summary.json", summary);
  out << to_string(tag) << " split: " << r.n_snapshots << " snapshots, global Q2 " << fmt(r.q2_global, 6) << " -> "
      << report.string() << "\n";
  return 0;
}

int cmd_robustness(const Globals& g, const std::string& dataset_dir, const std::string& sizes,
                   const std::string& l_grid, const std::string& method, const std::string& out_dir,
                   std::ostream& out) {
  RunConfig cfg = base_config(g);
  const LoadedDataset data = load_for(dataset_dir, cfg, g, true);
  if (!method.empty()) cfg.method = method_from_string(method);
  RobustnessOptions opts;
  if (!sizes.empty()) opts.train_sizes = parse_ints(sizes, "--sizes");
  if (!l_grid.empty()) opts.L_grid = parse_ints(l_grid, "--L-grid");
  opts.fractions = cfg.fractions;
  opts.train.method = cfg.method;
  opts.train.seed = cfg.seed;
  opts.train.restarts = cfg.restarts;
  opts.train.jobs = g.jobs;
  const std::vector<RobustnessRow> table = robustness_sweep(data.set, opts);

  const fs::path report = out_dir.empty() ? fs::path(cfg.report_dir) : fs::path(out_dir);
  fs::create_directories(report);
  std::vector<std::vector<double>> summary, curves, modes;
  for (const auto& row : table) {
    summary.push_back({double(row.size), double(row.L_opt), row.q2_global, row.seconds});
    for (std::size_t i = 0; i < row.L_values.size(); ++i) {
      curves.push_back({double(row.size), double(row.L_values[i]), row.q2_by_L[i]});
    }
    for (std::size_t l = 0; l < row.q2_per_mode.size(); ++l) {
      modes.push_back({double(row.size), double(l + 1), row.q2_per_mode[l]});
    }
    out << "size " << row.size << ": L_opt " << row.L_opt << ", Q2 " << fmt(row.q2_global, 6) << ", "
        << fmt(row.seconds, 4) << " s\n";
  }
  write_csv(report / "robustness.csv", {"size", "L_opt", "q2_global", "runtime"}, summary);
  write_csv(report / "robustness_curves.csv", {"size", "L", "q2_global"}, curves);
  write_csv(report / "robustness_modes.csv", {"size", "mode", "q2"}, modes);
  write_json(report / "robustness_manifest.json",
             {{"tool_version", kToolVersion}, {"config", to_json(cfg)}, {"sizes", opts.train_sizes}});
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"POD/GPR reduced-order model for parameterized plume fields"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "JSON run configuration or an artifact manifest");
  g.seed_opt = app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--jobs", g.jobs, "Worker threads (0: OpenMP default)");
  app.add_flag("--force", g.force, "Overwrite non-empty output directories");

  std::string out_dir, dataset_dir, model_dir, grid, channel, method, mu, unit, which = "test", sizes, l_grid;
  std::size_t n = 0;
  int L = 0, restarts = 0;

  auto* gen = app.add_subcommand("generate", "Generate a snapshot dataset from the plume surrogate");
  gen->add_option("--out", out_dir, "Dataset directory");
  gen->add_option("--n", n, "Number of snapshots");
  gen->add_option("--grid", grid, "Grid size as NXxNZ");
  gen->add_option("--channel", channel, "mean_concentration or vertical_flux");

  auto* tr = app.add_subcommand("train", "Train a reduced-order model");
  tr->add_option("--dataset", dataset_dir, "Dataset directory");
  tr->add_option("--out", out_dir, "Model directory");
  tr->add_option("--L", L, "Number of POD modes");
  tr->add_option("--method", method, "mll, map or prior");
  tr->add_option("--restarts", restarts, "MLL restarts");

  auto* pr = app.add_subcommand("predict", "Predict a field at one parameter point");
  pr->add_option("--model", model_dir, "Model directory");
  pr->add_option("--mu", mu, "u_zc,z0,x_src,z_src");
  pr->add_option("--unit", unit, "Unit-cube coordinates u1,u2,u3,u4");
  pr->add_option("--out", out_dir, "Output directory");

  auto* ev = app.add_subcommand("evaluate", "Q2 evaluation on the test or training split");
  ev->add_option("--model", model_dir, "Model directory");
  ev->add_option("--dataset", dataset_dir, "Dataset directory");
  ev->add_option("--split", which, "test or train");
  ev->add_option("--out", out_dir, "Report directory");

  auto* rb = app.add_subcommand("robustness", "Training-size robustness sweep");
  rb->add_option("--dataset", dataset_dir, "Dataset directory");
  rb->add_option("--sizes", sizes, "Comma-separated training sizes");
  rb->add_option("--L-grid", l_grid, "Comma-separated truncation levels");
  rb->add_option("--method", method, "mll, map or prior");
  rb->add_option("--out", out_dir, "Report directory");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) return cmd_generate(g, out_dir, n, grid, channel, out);
    if (tr->parsed()) return cmd_train(g, dataset_dir, out_dir, L, method, restarts, out);
    if (pr->parsed()) return cmd_predict(g, model_dir, mu, unit, out_dir, out);
    if (ev->parsed()) return cmd_evaluate(g, model_dir, dataset_dir, which, out_dir, out);
    if (rb->parsed()) return cmd_robustness(g, dataset_dir, sizes, l_grid, method, out_dir, out);
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return 4;
  } catch (const std::domain_error& e) {
    err << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace plumerom::cli

// spectemp: command-line front end for the spectro-temporal pipeline.
//
//   spectemp gen --out data/
//   spectemp descriptors --in data/ --out desc/
//   spectemp tau --in data/ --out data/tau.json
//   spectemp features --in data/ --tau common_knee --out feat/
//   spectemp build --in data/ --method hstf --tau common_knee --out ds/
//   spectemp run --in data/ --method all --tau common_knee,common_best --out res/
//   spectemp report --results res/results.csv --out res/
//
// Exit codes: 0 success, 2 invalid input or configuration, 1 runtime failure.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "spectemp/spectemp.hpp"

namespace {

using namespace spectemp;
namespace fs = std::filesystem;
using json = nlohmann::json;

struct Globals {
  std::string config_file;
  std::optional<std::size_t> threads;
  std::optional<std::uint64_t> seed;
};

struct Overrides {
  std::optional<std::size_t> n_trials;
  std::optional<double> duration;
  std::optional<double> snr_db;
  std::optional<int> epochs;
  std::optional<double> eta;
  std::optional<double> lambda;
  std::optional<std::size_t> n_splits;
  std::string models;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (ch != ' ') {
      cur += ch;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

/// defaults < config file < flags
pipeline::Config load_config(const Globals& g, const Overrides& o) {
  pipeline::Config c;
  if (!g.config_file.empty()) c = pipeline::from_json(io::read_json(g.config_file), c);
  if (g.seed) c.seed = *g.seed;
  if (o.n_trials) c.beam.n_trials = *o.n_trials;
  if (o.duration) c.beam.duration = *o.duration;
  if (o.snr_db) c.beam.noise_snr_db = *o.snr_db;
  if (o.epochs) c.softmax.epochs = *o.epochs;
  if (o.eta) c.softmax.eta = *o.eta;
  if (o.lambda) c.softmax.lambda = *o.lambda;
  if (o.n_splits) c.n_splits = *o.n_splits;
  if (!o.models.empty()) c.models = split_list(o.models);
  pipeline::validate(c);
  return c;
}

std::size_t thread_count(const Globals& g) { return g.threads && *g.threads > 0 ? *g.threads : default_threads(); }

/// tau.json for common_* specs: explicit path, else <in>/tau.json, else ./tau.json.
std::optional<json> load_tau_doc(const std::string& explicit_path, const std::string& in_dir) {
  std::vector<fs::path> candidates;
  if (!explicit_path.empty()) {
    candidates.push_back(explicit_path);
  } else {
    candidates.push_back(fs::path(in_dir) / "tau.json");
    candidates.push_back("tau.json");
  }
  for (const auto& p : candidates)
    if (fs::exists(p)) return io::read_json(p);
  if (!explicit_path.empty()) throw Error(ErrorKind::Io, "cannot open '" + explicit_path + "'");
  return std::nullopt;
}

double resolve_tau(const std::string& spec, const std::string& tau_file, const std::string& in_dir) {
  const auto doc = spec.rfind("common_", 0) == 0 ? load_tau_doc(tau_file, in_dir) : std::nullopt;
  return pipeline::resolve_tau(spec, doc ? &*doc : nullptr);
}

void warn_below_floor(double tau, const std::string& tau_file, const std::string& in_dir) {
  const auto doc = load_tau_doc(tau_file, in_dir);
  if (doc && doc->contains("constraint_floor_s") && tau < doc->at("constraint_floor_s").get<double>())
    std::cerr << "warning: tau " << tau << " s lies below the Nyquist floor "
              << doc->at("constraint_floor_s").get<double>() << " s\n";
}

void check_format(const std::string& f) {
  require(f == "csv" || f == "json", ErrorKind::InvalidArgument, "--format must be csv or json");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectro-temporal alignment and hybrid fusion pipeline for vibration signals"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  Overrides o;
  app.add_option("--config", g.config_file, "JSON config file (flags override it)")->check(CLI::ExistingFile);
  app.add_option("--threads", g.threads, "worker threads (default: SPECTEMP_THREADS or all cores)");
  app.add_option("--seed", g.seed, "root seed");

  std::string in_dir, out_path, format = "csv", tau_spec, tau_file, method, results_path;

  auto* gen = app.add_subcommand("gen", "generate the synthetic five-class dataset");
  gen->add_option("--out", out_path, "output directory")->required();
  gen->add_option("--n-trials", o.n_trials, "trials per class");
  gen->add_option("--duration", o.duration, "trial duration, s");
  gen->add_option("--snr-db", o.snr_db, "measurement noise SNR, dB");

  auto* desc = app.add_subcommand("descriptors", "per-signal descriptor vectors and class centroids");
  desc->add_option("--in", in_dir, "dataset directory or manifest")->required();
  desc->add_option("--out", out_path, "output directory")->required();
  desc->add_option("--format", format, "csv|json");

  auto* tau = app.add_subcommand("tau", "sampling-interval selection");
  tau->add_option("--in", in_dir, "dataset directory or manifest")->required();
  tau->add_option("--out", out_path, "tau.json path")->required();
  tau->add_option("--format", format, "curve export: csv (tau_curves.csv next to tau.json) or json (tau.json only)");

  auto* feat = app.add_subcommand("features", "per-window spectral features");
  feat->add_option("--in", in_dir, "dataset directory or manifest")->required();
  feat->add_option("--out", out_path, "output directory")->required();
  feat->add_option("--tau", tau_spec, "common_best|common_knee|<seconds>")->required();
  feat->add_option("--tau-file", tau_file, "tau.json (default: <in>/tau.json, then ./tau.json)");
  feat->add_option("--format", format, "csv|json");

  auto* build = app.add_subcommand("build", "write one representation as a dataset bundle");
  build->add_option("--in", in_dir, "dataset directory or manifest")->required();
  build->add_option("--out", out_path, "output directory")->required();
  build->add_option("--method", method, "base|sta|hstf")->required();
  build->add_option("--tau", tau_spec, "common_best|common_knee|<seconds>");
  build->add_option("--tau-file", tau_file, "tau.json");

  auto* run = app.add_subcommand("run", "cross-validate models on representations");
  run->add_option("--in", in_dir, "dataset directory or manifest")->required();
  run->add_option("--out", out_path, "output directory")->required();
  run->add_option("--method", method, "base|sta|hstf|all")->required();
  run->add_option("--tau", tau_spec, "comma list of common_best|common_knee|<seconds>");
  run->add_option("--tau-file", tau_file, "tau.json");
  run->add_option("--models", o.models, "comma list of softmax,knn,gnb");
  run->add_option("--epochs", o.epochs, "softmax epochs");
  run->add_option("--eta", o.eta, "softmax learning rate");
  run->add_option("--lambda", o.lambda, "softmax L2 coefficient");
  run->add_option("--n-splits", o.n_splits, "cross-validation folds");

  auto* report = app.add_subcommand("report", "stability indices and method ranking from results.csv");
  report->add_option("--results", results_path, "results.csv")->required()->check(CLI::ExistingFile);
  report->add_option("--out", out_path, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    const auto cfg = load_config(g, o);
    const pipeline::Stamp stamp(cfg);
    const std::size_t threads = thread_count(g);

    if (*gen) {
      const auto signals = pipeline::generate(cfg, threads);
      pipeline::write_dataset(out_path, signals, cfg);
      std::printf("wrote %zu signals to %s\n", signals.size(), out_path.c_str());
    } else if (*desc) {
      check_format(format);
      const auto signals = io::load_dataset(in_dir);
      const auto r = pipeline::analyze_descriptors(signals, cfg, threads);
      const fs::path out(out_path);
      if (format == "csv")
        io::atomic_write(out / "descriptors.csv", pipeline::descriptors_csv(r, stamp));
      else
        io::write_json(out / "descriptors.json", pipeline::descriptors_json(r, stamp));
      io::write_json(out / "radar.json", pipeline::radar_json(r, stamp));
      std::printf("descriptors for %zu signals, aggregate overlap %.4f\n", r.raw.size(), r.overlap.aggregate);
    } else if (*tau) {
      check_format(format);
      const auto signals = io::load_dataset(in_dir);
      const auto sel = pipeline::select_tau(signals, cfg);
      const fs::path out(out_path);
      io::write_json(out, pipeline::tau_json(sel, stamp));
      if (format == "csv")
        io::atomic_write(out.parent_path() / "tau_curves.csv", pipeline::tau_curves_csv(sel, stamp));
      std::printf("f* = %.3f Hz, nyquist dt = %.6f s, common best = %.6f s, common knee = %.6f s\n", sel.f_star,
                  sel.band.nyquist_dt, sel.common.tau_best_common, sel.common.tau_knee_common);
    } else if (*feat) {
      check_format(format);
      const auto signals = io::load_dataset(in_dir);
      const double t = resolve_tau(tau_spec, tau_file, in_dir);
      warn_below_floor(t, tau_file, in_dir);
      const auto table = pipeline::window_feature_table(signals, cfg, t, threads);
      const fs::path out(out_path);
      if (format == "csv") {
        io::atomic_write(out / "features.csv", pipeline::features_csv(table, stamp));
      } else {
        json rows = json::array();
        for (std::size_t i = 0; i < table.z.size(); ++i)
          rows.push_back({{"source_id", table.source_ids[i]}, {"window_index", table.window_index[i]},
                          {"z", table.z[i]}});
        json j{{"tau", t}, {"windows", rows}};
        stamp.apply(j);
        io::write_json(out / "features.json", j);
      }
      io::write_json(out / "features_class_means.json", pipeline::features_class_means(table, t, stamp));
      std::printf("%zu windows, %zu z6 fallbacks\n", table.z.size(), table.z6_fallbacks);
    } else if (*build) {
      const auto kind = pipeline::parse_kind(method);
      require(kind == fusion::Kind::Base || !tau_spec.empty(), ErrorKind::InvalidArgument,
              "--tau is required for sta and hstf");
      const auto signals = io::load_dataset(in_dir);
      const double t = kind == fusion::Kind::Base ? 0.0 : resolve_tau(tau_spec, tau_file, in_dir);
      if (kind != fusion::Kind::Base) warn_below_floor(t, tau_file, in_dir);
      const auto rep = pipeline::build_representation(kind, signals, cfg, t, threads);
      const fs::path out(out_path);
      io::write_json(out / "dataset.json", pipeline::dataset_json(rep, cfg, stamp));
      io::atomic_write(out / "dataset.csv", pipeline::dataset_csv(rep, stamp));
      std::printf("%s: %zu samples of %zu x %zu\n", fusion::to_string(rep.kind), rep.samples.size(), rep.rows(),
                  rep.cols());
    } else if (*run) {
      std::vector<fusion::Kind> kinds;
      if (method == "all")
        kinds = {fusion::Kind::Base, fusion::Kind::STA, fusion::Kind::HSTF};
      else
        kinds = {pipeline::parse_kind(method)};
      const auto signals = io::load_dataset(in_dir);
      std::vector<double> taus;
      for (const auto& spec : split_list(tau_spec)) taus.push_back(resolve_tau(spec, tau_file, in_dir));
      std::vector<pipeline::MethodSpec> methods;
      for (auto k : kinds) {
        if (k == fusion::Kind::Base) {
          methods.push_back({k, 0.0});
          continue;
        }
        require(!taus.empty(), ErrorKind::InvalidArgument, "--tau is required for sta and hstf");
        for (double t : taus) methods.push_back({k, t});
      }
      const auto results = pipeline::evaluate(signals, cfg, methods, threads);
      const fs::path out(out_path);
      io::atomic_write(out / "results.csv", pipeline::results_csv(results, stamp));
      io::atomic_write(out / "summary.csv", pipeline::summary_csv(results, stamp));
      const auto st = pipeline::stability(results);
      io::write_json(out / "stability.json", pipeline::stability_json(st, stamp));
      for (const auto& m : pipeline::fold_summary(results))
        std::printf("%-8s %-16s acc %.3f +/- %.3f  f1 %.3f  auc %.3f\n", m.model.c_str(), m.method.c_str(),
                    m.folds[0].mean, m.folds[0].std, m.folds[1].mean, m.folds[2].mean);
    } else if (*report) {
      const auto results = pipeline::parse_results_csv(io::read_text(results_path));
      const auto st = pipeline::stability(results);
      io::write_json(fs::path(out_path) / "stability.json", pipeline::stability_json(st, stamp));
      std::printf("%s\n", pipeline::ranking_line(st).c_str());
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::Io ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

#pragma once

// Pipeline configuration and the stage functions behind the command-line
// tool: generate -> descriptors -> tau -> features -> build -> run -> report.
// Every artifact carries the config hash and the root seed.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spectemp/classify.hpp"
#include "spectemp/core_signal.hpp"
#include "spectemp/descriptors.hpp"
#include "spectemp/error.hpp"
#include "spectemp/fusion.hpp"
#include "spectemp/io.hpp"
#include "spectemp/parallel.hpp"
#include "spectemp/spectral.hpp"
#include "spectemp/synthgen.hpp"
#include "spectemp/tau_select.hpp"

namespace spectemp::pipeline {

namespace fs = std::filesystem;
using json = nlohmann::json;

struct Config {
  std::uint64_t seed = 42;
  synthgen::BeamConfig beam;

  double descriptor_dt = 0.001;  // descriptors run on signals resampled to this step; <= 0 keeps the raw grid
  descriptors::DescriptorParams descriptor;
  std::size_t omega_mc = 100000;

  tau::TauSelectParams tau;

  double alpha = 0.02;
  double win_dur_ratio = 0.04;
  std::size_t sta_hop = 0;  // 0: non-overlapping

  fusion::BaseParams base;
  spectral::FeatureConfig features;

  std::size_t n_splits = 5;
  classify::SoftmaxParams softmax;
  std::size_t knn_k = 5;
  bool standardize_pooled = true;
  std::vector<std::string> models = {"softmax", "knn", "gnb"};
};

namespace detail {

template <typename T>
void read_field(const json& j, const std::string& where, const char* key, T& v) {
  if (!j.contains(key)) return;
  try {
    v = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidConfig, where + "." + key + ": " + e.what());
  }
}

/// Reads keys of one JSON section into fields and rejects unknown keys.
struct Reader {
  const json* j = nullptr;
  std::string where;
  std::set<std::string> known;

  template <typename T>
  void operator()(const char* key, T& v) {
    known.insert(key);
    if (j) read_field(*j, where, key, v);
  }

  void finish() const {
    if (!j) return;
    require(j->is_object(), ErrorKind::InvalidConfig, "config section '" + where + "' must be an object");
    for (const auto& [k, _] : j->items())
      require(known.count(k) > 0, ErrorKind::InvalidConfig, "unknown config key '" + where + "." + k + "'");
  }
};

struct Writer {
  json* j = nullptr;
  template <typename T>
  void operator()(const char* key, const T& v) {
    (*j)[key] = v;
  }
};

/// Single field list shared by reading and writing.
template <typename C, typename SectionFn>
void visit(C& c, SectionFn&& section) {
  section("synthgen", [&](auto& f) {
    f("fs", c.beam.fs);
    f("duration", c.beam.duration);
    f("modal_freqs", c.beam.modal_freqs);
    f("freq_factors", c.beam.freq_factors);
    f("damping", c.beam.damping);
    f("mode_gains", c.beam.mode_gains);
    f("gain_factors", c.beam.gain_factors);
    f("static_offsets", c.beam.static_offsets);
    f("offset_jitter", c.beam.offset_jitter);
    f("noise_snr_db", c.beam.noise_snr_db);
    f("burn_in", c.beam.burn_in);
    f("n_trials", c.beam.n_trials);
  });
  section("descriptors", [&](auto& f) {
    f("dt", c.descriptor_dt);
    f("sampen_m", c.descriptor.sampen_m);
    f("sampen_r", c.descriptor.sampen_r);
    f("permen_order", c.descriptor.permen_order);
    f("permen_delay", c.descriptor.permen_delay);
    f("hfd_kmax", c.descriptor.hfd_kmax);
    f("omega_mc", c.omega_mc);
  });
  section("tau", [&](auto& f) {
    f("psd_nperseg", c.tau.psd_nperseg);
    f("energy_fraction", c.tau.energy_fraction);
    f("beta", c.tau.beta);
    f("gamma", c.tau.gamma);
    f("n_candidates", c.tau.sweep.n_candidates);
    f("lambda_r", c.tau.sweep.lambda_r);
    f("lambda_m_coef", c.tau.sweep.lambda_m_coef);
    f("eps", c.tau.sweep.eps);
    f("ell", c.tau.sweep.ell);
  });
  section("windows", [&](auto& f) {
    f("alpha", c.alpha);
    f("win_dur_ratio", c.win_dur_ratio);
    f("sta_hop", c.sta_hop);
  });
  section("base", [&](auto& f) {
    f("timesteps", c.base.timesteps);
    f("start_row", c.base.start_row);
    f("sampling_ratio", c.base.sampling_ratio);
  });
  section("features", [&](auto& f) {
    f("sideband_delta", c.features.sideband_delta);
    f("peak_guard", c.features.peak_guard);
    f("cwt_scales", c.features.cwt_scales);
    f("omega0", c.features.omega0);
    f("min_ceemdan_len", c.features.min_ceemdan_len);
    f("remove_mean", c.features.remove_mean);
    f("ceemdan_ensemble", c.features.ceemdan.ensemble_size);
    f("ceemdan_noise_std", c.features.ceemdan.noise_std_fraction);
    f("ceemdan_max_imfs", c.features.ceemdan.max_imfs);
    f("sift_sd", c.features.ceemdan.sift.sd_threshold);
    f("sift_max_iter", c.features.ceemdan.sift.max_iterations);
  });
  section("classify", [&](auto& f) {
    f("n_splits", c.n_splits);
    f("epochs", c.softmax.epochs);
    f("eta", c.softmax.eta);
    f("lambda", c.softmax.lambda);
    f("batch_size", c.softmax.batch_size);
    f("knn_k", c.knn_k);
    f("standardize_pooled", c.standardize_pooled);
    f("models", c.models);
  });
}

}  // namespace detail

inline void validate(const Config& c) {
  auto check = [](bool ok, const std::string& msg) { require(ok, ErrorKind::InvalidConfig, msg); };
  auto beam = c.beam;
  beam.n_splits = c.n_splits;
  beam.validate();
  check(c.n_splits >= 2, "classify.n_splits must be >= 2");
  check(c.alpha >= 0.0 && c.alpha < 0.5, "windows.alpha must lie in [0, 0.5)");
  check(c.win_dur_ratio > 0.0 && c.win_dur_ratio <= 1.0, "windows.win_dur_ratio must lie in (0, 1]");
  check(c.tau.beta > 0.0 && c.tau.gamma >= c.tau.beta, "tau band needs 0 < beta <= gamma");
  check(c.tau.energy_fraction > 0.0 && c.tau.energy_fraction <= 1.0, "tau.energy_fraction must lie in (0, 1]");
  check(c.tau.sweep.n_candidates >= 2, "tau.n_candidates must be >= 2");
  check(c.softmax.epochs >= 1 && c.softmax.eta > 0.0 && c.softmax.lambda >= 0.0,
        "classify.epochs/eta/lambda out of range");
  check(c.softmax.batch_size >= 1, "classify.batch_size must be >= 1");
  check(c.knn_k >= 1, "classify.knn_k must be >= 1");
  check(!c.models.empty(), "classify.models must not be empty");
  for (const auto& m : c.models)
    check(m == "softmax" || m == "knn" || m == "gnb", "unknown model '" + m + "' (softmax|knn|gnb)");
  check(c.omega_mc >= 1, "descriptors.omega_mc must be >= 1");
}

inline json to_json(const Config& c) {
  json j;
  j["seed"] = c.seed;
  detail::visit(c, [&](const char* name, auto&& body) {
    json sec = json::object();
    detail::Writer w{&sec};
    body(w);
    j[name] = std::move(sec);
  });
  return j;
}

/// Overlays the keys present in `j` onto `base`; unknown keys are rejected.
inline Config from_json(const json& j, Config base = {}) {
  require(j.is_object(), ErrorKind::InvalidConfig, "config must be a JSON object");
  std::set<std::string> sections = {"seed"};
  detail::read_field(j, "config", "seed", base.seed);
  detail::visit(base, [&](const char* name, auto&& body) {
    sections.insert(name);
    detail::Reader r{j.contains(name) ? &j.at(name) : nullptr, name, {}};
    body(r);
    r.finish();
  });
  for (const auto& [k, _] : j.items())
    require(sections.count(k) > 0, ErrorKind::InvalidConfig, "unknown config section '" + k + "'");
  return base;
}

inline std::string config_hash(const Config& c) { return io::config_hash(to_json(c)); }

struct Stamp {
  std::string hash;
  std::uint64_t seed = 0;

  explicit Stamp(const Config& c) : hash(config_hash(c)), seed(c.seed) {}
  std::string line() const { return io::stamp_line(hash, seed); }
  void apply(json& j) const {
    j["config_hash"] = hash;
    j["seed"] = seed;
  }
};

inline std::string fmt_fixed(double v, int digits = 6) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// ---------------------------------------------------------------------------
// gen

inline std::vector<TimeSeries> generate(const Config& c, std::size_t threads = 1) {
  validate(c);
  auto beam = c.beam;
  beam.seed = c.seed;
  beam.n_splits = c.n_splits;
  return synthgen::generate(beam, threads);
}

/// signals/<source_id>.csv, manifest.json and genconfig.json under `dir`.
inline void write_dataset(const fs::path& dir, const std::vector<TimeSeries>& signals, const Config& c) {
  const Stamp stamp(c);
  std::vector<io::ManifestEntry> entries;
  for (const auto& s : signals) {
    const std::string rel = "signals/" + s.source_id + ".csv";
    io::write_signal_csv(dir / rel, s, stamp.line());
    entries.push_back({rel, s.label, s.source_id});
  }
  json manifest = io::manifest_json(entries);
  stamp.apply(manifest);
  io::write_json(dir / "manifest.json", manifest);

  json echo = to_json(c)["synthgen"];
  json classes = json::array();
  for (std::size_t k = 0; k < synthgen::kClassCount; ++k) {
    auto beam = c.beam;
    classes.push_back({{"label", k}, {"name", synthgen::kClassNames[k]}, {"modal_freqs", beam.class_freqs(k)}});
  }
  json gen{{"synthgen", echo}, {"classes", classes}, {"n_signals", signals.size()}};
  stamp.apply(gen);
  io::write_json(dir / "genconfig.json", gen);
}

// ---------------------------------------------------------------------------
// descriptors

struct DescriptorReport {
  std::vector<std::string> source_ids;
  std::vector<int> labels;
  std::vector<descriptors::DescriptorVector> raw;
  descriptors::Normalized normalized;
  descriptors::Separability separability;
  descriptors::OverlapResult overlap;
};

inline int n_classes_of(std::span<const int> labels) {
  return labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
}

inline DescriptorReport analyze_descriptors(const std::vector<TimeSeries>& signals, const Config& c,
                                            std::size_t threads = 1) {
  DescriptorReport r;
  r.raw.resize(signals.size());
  for (const auto& s : signals) {
    r.source_ids.push_back(s.source_id);
    r.labels.push_back(fusion::label_of(s));
  }
  parallel_for(signals.size(), threads, [&](std::size_t i) {
    const auto u = c.descriptor_dt > 0.0 ? resample(signals[i], c.descriptor_dt) : as_uniform(signals[i]);
    r.raw[i] = descriptors::descriptor_vector(u, c.descriptor);
  });
  std::vector<descriptors::Point> pts;
  for (const auto& d : r.raw) {
    const auto a = d.to_array();
    pts.emplace_back(a.begin(), a.end());
  }
  r.normalized = descriptors::minmax_normalize(pts);
  const int k = n_classes_of(r.labels);
  r.separability = descriptors::class_centroids_and_distances(r.normalized.points, r.labels, k);
  r.overlap = descriptors::overlap_omega(r.normalized.points, r.labels, k, c.omega_mc, c.seed);
  return r;
}

inline std::string descriptors_csv(const DescriptorReport& r, const Stamp& stamp) {
  std::string out = stamp.line() + "source_id,label";
  for (const char* name : descriptors::kFieldNames) out += std::string(",") + name;
  out += "\n";
  for (std::size_t i = 0; i < r.raw.size(); ++i) {
    out += r.source_ids[i] + "," + std::to_string(r.labels[i]);
    for (double v : r.raw[i].to_array()) out += "," + io::fmt(v);
    out += "\n";
  }
  return out;
}

inline json descriptors_json(const DescriptorReport& r, const Stamp& stamp) {
  json rows = json::array();
  for (std::size_t i = 0; i < r.raw.size(); ++i) {
    json row{{"source_id", r.source_ids[i]}, {"label", r.labels[i]}};
    const auto a = r.raw[i].to_array();
    for (std::size_t k = 0; k < a.size(); ++k) row[descriptors::kFieldNames[k]] = a[k];
    rows.push_back(std::move(row));
  }
  json j{{"descriptors", rows}};
  stamp.apply(j);
  return j;
}

/// Normalized class centroids (radar plot data), centroid distances and overlap.
inline json radar_json(const DescriptorReport& r, const Stamp& stamp) {
  json classes = json::array();
  for (const auto& cs : r.separability.classes) {
    json centroid = json::object();
    for (std::size_t k = 0; k < cs.centroid.size(); ++k) centroid[descriptors::kFieldNames[k]] = cs.centroid[k];
    const auto name = static_cast<std::size_t>(cs.label) < synthgen::kClassCount
                          ? synthgen::kClassNames[static_cast<std::size_t>(cs.label)]
                          : "";
    classes.push_back({{"label", cs.label}, {"name", name}, {"count", cs.count}, {"centroid", centroid}});
  }
  json j{{"axes", descriptors::kFieldNames},
         {"classes", classes},
         {"centroid_distance", r.separability.distance},
         {"overlap", {{"pairwise", r.overlap.omega}, {"aggregate", r.overlap.aggregate}}},
         {"x_min", r.normalized.stats.x_min},
         {"x_max", r.normalized.stats.x_max}};
  stamp.apply(j);
  return j;
}

// ---------------------------------------------------------------------------
// tau

inline tau::TauSelection select_tau(const std::vector<TimeSeries>& signals, const Config& c) {
  return tau::select_tau(signals, c.tau);
}

inline json tau_json(const tau::TauSelection& sel, const Stamp& stamp) {
  json classes = json::array();
  for (const auto& cv : sel.curves) {
    json curve = json::array();
    for (const auto& p : cv.candidates) curve.push_back({{"tau", p.tau}, {"S", p.score}});
    classes.push_back({{"label", cv.class_label},
                       {"f_star_hz", cv.f_star_class},
                       {"nyquist_dt_s", cv.nyquist_dt},
                       {"best_tau_s", cv.best_tau},
                       {"knee_tau_s", cv.knee_tau},
                       {"s_star", cv.s_star},
                       {"curve", curve}});
  }
  json j{{"classes", classes},
         {"f_star_hz", sel.f_star},
         {"band", {{"nyquist_dt_s", sel.band.nyquist_dt}, {"lo_s", sel.band.lo}, {"hi_s", sel.band.hi}}},
         {"tau_common_best", sel.common.tau_best_common},
         {"tau_common_knee", sel.common.tau_knee_common},
         {"constraint_floor_s", sel.common.constraint_floor}};
  stamp.apply(j);
  return j;
}

inline std::string tau_curves_csv(const tau::TauSelection& sel, const Stamp& stamp) {
  std::string out = stamp.line() + "label,tau,S,mean_F,R,M\n";
  for (const auto& cv : sel.curves)
    for (const auto& p : cv.candidates)
      out += std::to_string(cv.class_label) + "," + io::fmt(p.tau) + "," + io::fmt(p.score) + "," +
             io::fmt(p.mean_f) + "," + io::fmt(p.redundancy) + "," + std::to_string(p.grid_size) + "\n";
  return out;
}

/// "common_best", "common_knee" (read from a tau.json document) or seconds.
inline double resolve_tau(const std::string& spec, const json* tau_doc) {
  if (spec == "common_best" || spec == "common_knee") {
    require(tau_doc != nullptr, ErrorKind::InvalidArgument, "'" + spec + "' needs a tau.json (run `tau` first)");
    const char* key = spec == "common_best" ? "tau_common_best" : "tau_common_knee";
    require(tau_doc->contains(key), ErrorKind::InvalidArgument, std::string("tau.json lacks '") + key + "'");
    return tau_doc->at(key).get<double>();
  }
  double v = 0.0;
  const auto res = std::from_chars(spec.data(), spec.data() + spec.size(), v);
  require(res.ec == std::errc{} && res.ptr == spec.data() + spec.size() && v > 0.0 && std::isfinite(v),
          ErrorKind::InvalidArgument, "tau must be common_best, common_knee or a positive number, got '" + spec + "'");
  return v;
}

// ---------------------------------------------------------------------------
// representations

inline fusion::WindowParams window_params(const Config& c, double tau, fusion::Kind kind) {
  fusion::WindowParams p;
  p.tau = tau;
  p.alpha = c.alpha;
  p.win_dur_ratio = c.win_dur_ratio;
  p.hop = kind == fusion::Kind::STA ? c.sta_hop : 0;
  return p;
}

inline fusion::Representation build_representation(fusion::Kind kind, const std::vector<TimeSeries>& signals,
                                                   const Config& c, double tau, std::size_t threads = 1) {
  switch (kind) {
    case fusion::Kind::Base: return fusion::build_base(signals, c.base);
    case fusion::Kind::STA: return fusion::build_sta(signals, window_params(c, tau, kind));
    case fusion::Kind::HSTF:
      return fusion::build_hstf(signals, window_params(c, tau, kind), c.features, c.seed, threads);
  }
  throw Error(ErrorKind::InvalidArgument, "unknown representation");
}

inline fusion::Kind parse_kind(const std::string& s) {
  if (s == "base") return fusion::Kind::Base;
  if (s == "sta") return fusion::Kind::STA;
  if (s == "hstf") return fusion::Kind::HSTF;
  throw Error(ErrorKind::InvalidArgument, "unknown method '" + s + "' (base|sta|hstf)");
}

/// "base", or e.g. "hstf(0.00956)".
inline std::string method_name(fusion::Kind kind, double tau) {
  if (kind == fusion::Kind::Base) return "base";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s(%.3g)", fusion::to_string(kind), tau);
  return buf;
}

struct FeatureTable {
  std::vector<std::string> source_ids;
  std::vector<int> labels;
  std::vector<std::size_t> window_index;
  std::vector<std::array<double, fusion::kFeatureCount>> z;
  std::size_t z6_fallbacks = 0;
};

inline FeatureTable window_feature_table(const std::vector<TimeSeries>& signals, const Config& c, double tau,
                                         std::size_t threads = 1) {
  const auto rep = build_representation(fusion::Kind::HSTF, signals, c, tau, threads);
  FeatureTable t;
  t.z6_fallbacks = rep.z6_fallbacks;
  for (const auto& s : rep.samples)
    for (std::size_t m = 0; m < s.x.rows; ++m) {
      t.source_ids.push_back(s.source_id);
      t.labels.push_back(s.label);
      t.window_index.push_back(m);
      std::array<double, fusion::kFeatureCount> z{};
      for (std::size_t k = 0; k < z.size(); ++k) z[k] = s.x(m, rep.L + k);
      t.z.push_back(z);
    }
  return t;
}

inline std::string features_csv(const FeatureTable& t, const Stamp& stamp) {
  std::string out = stamp.line() + "source_id,window_index,z1,z2,z3,z4,z5,z6\n";
  for (std::size_t i = 0; i < t.z.size(); ++i) {
    out += t.source_ids[i] + "," + std::to_string(t.window_index[i]);
    for (double v : t.z[i]) out += "," + io::fmt(v);
    out += "\n";
  }
  return out;
}

inline json features_class_means(const FeatureTable& t, double tau, const Stamp& stamp) {
  std::map<int, std::pair<std::array<double, fusion::kFeatureCount>, std::size_t>> acc;
  for (std::size_t i = 0; i < t.z.size(); ++i) {
    auto& [sum, n] = acc[t.labels[i]];
    for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += t.z[i][k];
    ++n;
  }
  json classes = json::array();
  for (const auto& [label, entry] : acc) {
    json means = json::object();
    for (std::size_t k = 0; k < entry.first.size(); ++k)
      means["z" + std::to_string(k + 1)] = entry.first[k] / static_cast<double>(entry.second);
    classes.push_back({{"label", label}, {"windows", entry.second}, {"mean", means}});
  }
  json j{{"tau", tau}, {"classes", classes}, {"z6_fallbacks", t.z6_fallbacks}};
  stamp.apply(j);
  return j;
}

inline json dataset_json(const fusion::Representation& rep, const Config& c, const Stamp& stamp) {
  std::map<int, std::size_t> counts;
  for (const auto& s : rep.samples) ++counts[s.label];
  json cc = json::object();
  for (const auto& [label, n] : counts) cc[std::to_string(label)] = n;
  json j{{"kind", fusion::to_string(rep.kind)},
         {"tau", rep.tau},
         {"L", rep.L},
         {"hop", rep.hop},
         {"n_samples", rep.samples.size()},
         {"rows_per_sample", rep.rows()},
         {"cols", rep.cols()},
         {"class_counts", cc},
         {"z6_fallbacks", rep.z6_fallbacks},
         {"feature_columns_standardized", false},
         {"config", to_json(c)}};
  stamp.apply(j);
  return j;
}

/// One CSV row per token row: sample_id,row_index,c0..c{D-1},label.
inline std::string dataset_csv(const fusion::Representation& rep, const Stamp& stamp) {
  std::ostringstream out;
  out << stamp.line() << "sample_id,row_index";
  for (std::size_t k = 0; k < rep.cols(); ++k) out << ",c" << k;
  out << ",label\n";
  for (std::size_t i = 0; i < rep.samples.size(); ++i) {
    const auto& s = rep.samples[i];
    for (std::size_t r = 0; r < s.x.rows; ++r) {
      out << i << "," << r;
      for (double v : s.x.row(r)) out << "," << io::fmt(v);
      out << "," << s.label << "\n";
    }
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// run / report

struct MethodSpec {
  fusion::Kind kind = fusion::Kind::Base;
  double tau = 0.0;
};

inline classify::ModelKind parse_model(const std::string& m) {
  if (m == "softmax") return classify::ModelKind::Softmax;
  if (m == "knn") return classify::ModelKind::Knn;
  if (m == "gnb") return classify::ModelKind::Gnb;
  throw Error(ErrorKind::InvalidArgument, "unknown model '" + m + "'");
}

inline classify::CvParams cv_params(const Config& c, std::size_t threads) {
  classify::CvParams p;
  p.n_splits = c.n_splits;
  p.softmax = c.softmax;
  p.knn_k = c.knn_k;
  p.seed = c.seed;
  p.threads = threads;
  p.standardize_pooled = c.standardize_pooled;
  return p;
}

/// Cross-validates every configured model on every requested representation.
inline std::vector<classify::FoldResult> evaluate(const std::vector<TimeSeries>& signals, const Config& c,
                                                  const std::vector<MethodSpec>& methods, std::size_t threads = 1) {
  validate(c);
  std::vector<classify::ModelKind> models;
  for (const auto& m : c.models) models.push_back(parse_model(m));
  std::vector<classify::FoldResult> out;
  for (const auto& m : methods) {
    const auto rep = build_representation(m.kind, signals, c, m.tau, threads);
    auto res = classify::cross_validate(rep, models, method_name(m.kind, m.tau), cv_params(c, threads));
    out.insert(out.end(), res.begin(), res.end());
  }
  return out;
}

inline std::string results_csv(const std::vector<classify::FoldResult>& results, const Stamp& stamp) {
  std::string out = stamp.line() + "model,method,fold,acc,f1,auc\n";
  for (const auto& r : results)
    out += r.model + "," + r.method + "," + std::to_string(r.fold_index) + "," + fmt_fixed(r.accuracy) + "," +
           fmt_fixed(r.macro_f1) + "," + fmt_fixed(r.macro_auc) + "\n";
  return out;
}

inline std::vector<classify::FoldResult> parse_results_csv(const std::string& text) {
  std::vector<classify::FoldResult> out;
  std::istringstream in(text);
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      require(line == "model,method,fold,acc,f1,auc", ErrorKind::InvalidArgument, "unexpected results.csv header");
      header = true;
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
    require(f.size() == 6, ErrorKind::InvalidArgument, "results.csv row needs 6 fields: " + line);
    try {
      out.push_back({f[0], f[1], std::stoul(f[2]), std::stod(f[3]), std::stod(f[4]), std::stod(f[5])});
    } catch (const std::exception&) {
      throw Error(ErrorKind::InvalidArgument, "malformed results.csv row: " + line);
    }
  }
  require(!out.empty(), ErrorKind::InvalidArgument, "results.csv holds no rows");
  return out;
}

/// Fold means per (model, method), in first-seen order.
struct CellMeans {
  std::string model;
  std::string method;
  std::array<classify::StabilityCell, 3> folds;  // acc, f1, auc across folds
};

inline std::vector<CellMeans> fold_summary(const std::vector<classify::FoldResult>& results) {
  std::vector<std::pair<std::string, std::string>> order;
  std::map<std::pair<std::string, std::string>, std::array<std::vector<double>, 3>> cols;
  for (const auto& r : results) {
    const auto key = std::make_pair(r.model, r.method);
    if (!cols.count(key)) order.push_back(key);
    auto& c = cols[key];
    c[0].push_back(r.accuracy);
    c[1].push_back(r.macro_f1);
    c[2].push_back(r.macro_auc);
  }
  std::vector<CellMeans> out;
  for (const auto& key : order) {
    CellMeans m{key.first, key.second, {}};
    for (std::size_t k = 0; k < 3; ++k) m.folds[k] = classify::stability_cell(cols[key][k]);
    out.push_back(m);
  }
  return out;
}

inline std::string summary_csv(const std::vector<classify::FoldResult>& results, const Stamp& stamp) {
  std::string out = stamp.line() + "model,method,acc_mean,acc_std,f1_mean,f1_std,auc_mean,auc_std\n";
  for (const auto& m : fold_summary(results)) {
    out += m.model + "," + m.method;
    for (const auto& c : m.folds) out += "," + fmt_fixed(c.mean) + "," + fmt_fixed(c.std);
    out += "\n";
  }
  return out;
}

struct MethodStability {
  std::string method;
  std::size_t n_models = 0;
  std::array<classify::StabilityCell, 3> cells;  // acc, f1, auc across models

  double mean_balanced() const { return (cells[0].balanced + cells[1].balanced + cells[2].balanced) / 3.0; }
};

/// For each method, the models x metrics table of fold means condensed to
/// mean, std, CV and balanced score per metric.
inline std::vector<MethodStability> stability(const std::vector<classify::FoldResult>& results) {
  std::vector<std::string> methods;
  std::map<std::string, std::vector<std::vector<double>>> tables;
  for (const auto& m : fold_summary(results)) {
    if (!tables.count(m.method)) methods.push_back(m.method);
    tables[m.method].push_back({m.folds[0].mean, m.folds[1].mean, m.folds[2].mean});
  }
  std::vector<MethodStability> out;
  for (const auto& name : methods) {
    const auto cells = classify::stability_report(tables[name]);
    out.push_back({name, tables[name].size(), {cells[0], cells[1], cells[2]}});
  }
  return out;
}

inline json stability_json(const std::vector<MethodStability>& st, const Stamp& stamp) {
  static const std::array<const char*, 3> metrics = {"accuracy", "macro_f1", "macro_auc"};
  json methods = json::array();
  for (const auto& m : st) {
    json entry{{"method", m.method}, {"n_models", m.n_models}};
    for (std::size_t k = 0; k < 3; ++k)
      entry[metrics[k]] = {{"mean", m.cells[k].mean},
                           {"std", m.cells[k].std},
                           {"cv", number_or_null(m.cells[k].cv)},
                           {"balanced_score", number_or_null(m.cells[k].balanced)}};
    methods.push_back(std::move(entry));
  }
  json j{{"methods", methods}};
  stamp.apply(j);
  return j;
}

/// Methods ordered by mean balanced score over the three metrics, best first.
inline std::string ranking_line(std::vector<MethodStability> st) {
  std::stable_sort(st.begin(), st.end(), [](const MethodStability& a, const MethodStability& b) {
    const double x = a.mean_balanced(), y = b.mean_balanced();
    if (std::isnan(x) != std::isnan(y)) return !std::isnan(x);
    return x > y;
  });
  std::string out = "ranking (mean balanced score):";
  for (std::size_t i = 0; i < st.size(); ++i) {
    out += i == 0 ? " " : " > ";
    out += st[i].method + " " + fmt_fixed(st[i].mean_balanced(), 3);
  }
  return out;
}

}  // namespace spectemp::pipeline

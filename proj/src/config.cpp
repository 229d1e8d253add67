#include "neuroid/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <regex>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "neuroid/error.hpp"

namespace neuroid {
namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

std::string key_path(const std::string& parent, const std::string& key) {
  return parent.empty() ? key : parent + "." + key;
}

std::string index_path(const std::string& parent, std::size_t i) {
  return parent + "[" + std::to_string(i) + "]";
}

bool is_placeholder(const std::string& s) {
  static const std::regex re(R"(^\s*<[^<>\s][^<>]*>\s*$)");
  return std::regex_match(s, re);
}

// First placeholder scalar in document order, with its path.
bool find_placeholder(const YAML::Node& node, const std::string& path, std::string& where,
                      std::string& value) {
  if (node.IsScalar()) {
    if (is_placeholder(node.Scalar())) {
      where = path;
      value = node.Scalar();
      return true;
    }
    return false;
  }
  if (node.IsSequence()) {
    for (std::size_t i = 0; i < node.size(); ++i)
      if (find_placeholder(node[i], index_path(path, i), where, value)) return true;
    return false;
  }
  if (node.IsMap()) {
    for (const auto& kv : node)
      if (find_placeholder(kv.second, key_path(path, kv.first.as<std::string>()), where, value))
        return true;
  }
  return false;
}

// Line-based fallback for text that is not valid YAML.
bool scan_placeholder(const std::string& text, std::string& where, std::string& value) {
  static const std::regex re(R"(:\s*(<[^<>\s][^<>]*>)\s*$)");
  std::istringstream in(text);
  std::string line;
  for (int n = 1; std::getline(in, line); ++n) {
    std::smatch m;
    if (std::regex_search(line, m, re)) {
      where = "line " + std::to_string(n);
      value = m[1];
      return true;
    }
  }
  return false;
}

[[noreturn]] void placeholder_error(const std::string& where, const std::string& value) {
  fail(where, "unresolved placeholder '" + value +
                  "'; replace it with a real path before running");
}

void check_keys(const YAML::Node& map, const std::string& path,
                std::initializer_list<const char*> allowed) {
  if (!map.IsMap()) fail(path, "expected a mapping");
  for (const auto& kv : map) {
    const auto key = kv.first.as<std::string>();
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      fail(key_path(path, key), "unknown key");
  }
}

std::string get_string(const YAML::Node& n, const std::string& path) {
  if (!n.IsScalar()) fail(path, "expected a string");
  return n.Scalar();
}

double get_double(const YAML::Node& n, const std::string& path) {
  if (!n.IsScalar()) fail(path, "expected a number");
  double v = 0.0;
  try {
    v = n.as<double>();
  } catch (const YAML::Exception&) {
    fail(path, "expected a number, got '" + n.Scalar() + "'");
  }
  if (!std::isfinite(v)) fail(path, "must be finite");
  return v;
}

long long get_int(const YAML::Node& n, const std::string& path) {
  if (!n.IsScalar()) fail(path, "expected an integer");
  try {
    return n.as<long long>();
  } catch (const YAML::Exception&) {
    fail(path, "expected an integer, got '" + n.Scalar() + "'");
  }
}

int get_int32(const YAML::Node& n, const std::string& path, long long lo) {
  const auto v = get_int(n, path);
  if (v < lo || v > std::numeric_limits<int>::max())
    fail(path, "must be an integer >= " + std::to_string(lo));
  return static_cast<int>(v);
}

std::uint64_t get_u64(const YAML::Node& n, const std::string& path) {
  if (!n.IsScalar()) fail(path, "expected an unsigned integer");
  try {
    return n.as<std::uint64_t>();
  } catch (const YAML::Exception&) {
    fail(path, "expected an unsigned integer, got '" + n.Scalar() + "'");
  }
}

bool get_bool(const YAML::Node& n, const std::string& path) {
  if (!n.IsScalar()) fail(path, "expected a boolean");
  bool b = false;
  if (YAML::convert<bool>::decode(n, b)) return b;
  if (n.Scalar() == "0") return false;
  if (n.Scalar() == "1") return true;
  fail(path, "expected a boolean, got '" + n.Scalar() + "'");
}

double get_positive(const YAML::Node& n, const std::string& path) {
  const double v = get_double(n, path);
  if (!(v > 0.0)) fail(path, "must be > 0");
  return v;
}

std::pair<double, double> get_interval(const YAML::Node& n, const std::string& path) {
  if (!n.IsSequence() || n.size() != 2) fail(path, "expected [tmin, tmax]");
  const double a = get_double(n[0], index_path(path, 0));
  const double b = get_double(n[1], index_path(path, 1));
  if (!(a < b)) fail(path, "tmin < tmax violated");
  return {a, b};
}

bool is_null(const YAML::Node& n) {
  return n.IsNull() || (n.IsScalar() && (n.Scalar() == "none" || n.Scalar() == "None"));
}

std::optional<double> get_threshold(const YAML::Node& n, const std::string& path) {
  if (is_null(n)) return std::nullopt;
  return get_positive(n, path);
}

void expect_value(const YAML::Node& n, const std::string& path, const std::string& expected) {
  const auto v = get_string(n, path);
  if (v != expected) fail(path, "only '" + expected + "' is supported, got '" + v + "'");
}

// ---------------------------------------------------------------------------

void parse_synth(const YAML::Node& p, const std::string& path, SynthConfig& s) {
  if (p["n_subjects"]) s.n_subjects = get_int32(p["n_subjects"], key_path(path, "n_subjects"), 1);
  if (p["n_sessions"]) s.n_sessions = get_int32(p["n_sessions"], key_path(path, "n_sessions"), 1);
  if (p["epochs_per_session"])
    s.epochs_per_session =
        get_int32(p["epochs_per_session"], key_path(path, "epochs_per_session"), 1);
  if (p["sampling_rate_hz"])
    s.sampling_rate_hz = get_positive(p["sampling_rate_hz"], key_path(path, "sampling_rate_hz"));
  if (p["n_channels"]) s.n_channels = get_int32(p["n_channels"], key_path(path, "n_channels"), 1);
  if (p["erp_latency_ms"])
    s.erp_latency_ms = get_double(p["erp_latency_ms"], key_path(path, "erp_latency_ms"));
  if (p["erp_width_ms"])
    s.erp_width_ms = get_positive(p["erp_width_ms"], key_path(path, "erp_width_ms"));
  if (p["subject_separability"])
    s.subject_separability =
        get_double(p["subject_separability"], key_path(path, "subject_separability"));
  if (p["session_drift"])
    s.session_drift = get_double(p["session_drift"], key_path(path, "session_drift"));
  if (p["noise_std_uv"])
    s.noise_std_uv = get_double(p["noise_std_uv"], key_path(path, "noise_std_uv"));
  if (p["artifact_rate"])
    s.artifact_rate = get_double(p["artifact_rate"], key_path(path, "artifact_rate"));
  if (p["seed"]) s.seed = get_u64(p["seed"], key_path(path, "seed"));
  try {
    validate(s);
  } catch (const ParamError& e) {
    fail(path, e.what());
  }
}

DatasetConfig parse_dataset(const YAML::Node& node, const std::string& path) {
  check_keys(node, path, {"name", "from", "parameters"});
  if (!node["name"]) fail(path, "missing 'name'");
  DatasetConfig d;
  d.name = get_string(node["name"], key_path(path, "name"));
  const auto& names = known_datasets();
  if (!d.is_synthetic() && d.name != kUserDataset &&
      std::find(names.begin(), names.end(), d.name) == names.end())
    fail(key_path(path, "name"), "unknown dataset '" + d.name + "'");

  const auto ppath = key_path(path, "parameters");
  const YAML::Node p = node["parameters"];
  if (p && !p.IsNull()) {
    if (d.is_synthetic())
      check_keys(p, ppath,
                 {"subjects", "interval", "rejection_threshold", "baseline", "band", "resample",
                  "event_codes", "n_subjects", "n_sessions", "epochs_per_session",
                  "sampling_rate_hz", "n_channels", "erp_latency_ms", "erp_width_ms",
                  "subject_separability", "session_drift", "noise_std_uv", "artifact_rate",
                  "seed"});
    else
      check_keys(p, ppath,
                 {"subjects", "interval", "rejection_threshold", "baseline", "band", "resample",
                  "event_codes", "dataset_path"});
    if (p["subjects"]) d.subjects = get_int32(p["subjects"], key_path(ppath, "subjects"), 1);
    if (p["interval"]) std::tie(d.tmin_s, d.tmax_s) = get_interval(p["interval"], key_path(ppath, "interval"));
    if (p["rejection_threshold"])
      d.rejection_threshold_uv =
          get_threshold(p["rejection_threshold"], key_path(ppath, "rejection_threshold"));
    if (p["baseline"]) {
      if (is_null(p["baseline"])) {
        d.baseline_disabled = true;
      } else {
        const auto bpath = key_path(ppath, "baseline");
        const auto& b = p["baseline"];
        if (!b.IsSequence() || b.size() != 2) fail(bpath, "expected [start, end] or none");
        d.baseline_s = std::pair{get_double(b[0], index_path(bpath, 0)),
                                 get_double(b[1], index_path(bpath, 1))};
        if (!(d.baseline_s->first < d.baseline_s->second)) fail(bpath, "start < end violated");
      }
    }
    if (p["band"]) {
      const auto bpath = key_path(ppath, "band");
      const auto& b = p["band"];
      if (!b.IsSequence() || b.size() != 2) fail(bpath, "expected [low_hz, high_hz]");
      d.band_low_hz = get_positive(b[0], index_path(bpath, 0));
      d.band_high_hz = get_positive(b[1], index_path(bpath, 1));
      if (!(d.band_low_hz < d.band_high_hz)) fail(bpath, "low < high violated");
    }
    if (p["resample"]) d.resample_hz = get_positive(p["resample"], key_path(ppath, "resample"));
    if (p["event_codes"]) {
      const auto epath = key_path(ppath, "event_codes");
      if (!p["event_codes"].IsSequence()) fail(epath, "expected a list of integers");
      for (std::size_t i = 0; i < p["event_codes"].size(); ++i)
        d.event_codes.push_back(
            static_cast<int>(get_int(p["event_codes"][i], index_path(epath, i))));
    }
    if (p["dataset_path"])
      d.dataset_path = get_string(p["dataset_path"], key_path(ppath, "dataset_path"));
    if (d.is_synthetic()) parse_synth(p, ppath, d.synth);
  }
  if (d.name == kUserDataset && !d.dataset_path)
    fail(ppath, "UserDataset requires 'dataset_path'");
  return d;
}

bool is_classifier_step(const std::string& name) {
  static const std::set<std::string> names{
      "SVC", "RandomForestClassifier", "KNN", "KNeighborsClassifier", "LDA",
      "LinearDiscriminantAnalysis", "LogisticRegression", "GaussianNB"};
  return names.count(name) > 0;
}

ClassifierSpec parse_classifier(const std::string& name, const YAML::Node& p,
                                const std::string& path) {
  const bool has = p && !p.IsNull();
  const auto at = [&](const char* k) { return key_path(path, k); };
  if (name == "SVC") {
    SvmParams s;
    if (has) {
      check_keys(p, path, {"kernel", "class_weight", "probability", "C", "gamma", "platt_folds", "tol"});
      if (p["kernel"]) expect_value(p["kernel"], at("kernel"), "rbf");
      if (p["class_weight"]) expect_value(p["class_weight"], at("class_weight"), "balanced");
      if (p["probability"] && !get_bool(p["probability"], at("probability")))
        fail(at("probability"), "scores require probability: True");
      if (p["C"]) s.C = get_positive(p["C"], at("C"));
      if (p["gamma"]) {
        if (p["gamma"].IsScalar() && p["gamma"].Scalar() == "scale")
          s.gamma.reset();
        else
          s.gamma = get_positive(p["gamma"], at("gamma"));
      }
      if (p["platt_folds"]) s.platt_folds = get_int32(p["platt_folds"], at("platt_folds"), 2);
      if (p["tol"]) s.eps = get_positive(p["tol"], at("tol"));
    }
    return {s};
  }
  if (name == "RandomForestClassifier") {
    RfParams r;
    if (has) {
      check_keys(p, path, {"n_estimators", "class_weight", "criterion", "max_features"});
      if (p["n_estimators"]) r.n_trees = get_int32(p["n_estimators"], at("n_estimators"), 1);
      if (p["class_weight"]) expect_value(p["class_weight"], at("class_weight"), "balanced");
      if (p["criterion"]) expect_value(p["criterion"], at("criterion"), "gini");
      if (p["max_features"]) expect_value(p["max_features"], at("max_features"), "sqrt");
    }
    return {r};
  }
  if (name == "KNN" || name == "KNeighborsClassifier") {
    KnnParams k;
    if (has) {
      check_keys(p, path, {"n_neighbors", "metric"});
      if (p["n_neighbors"]) k.k = get_int32(p["n_neighbors"], at("n_neighbors"), 1);
      if (p["metric"]) expect_value(p["metric"], at("metric"), "euclidean");
    }
    return {k};
  }
  if (name == "LDA" || name == "LinearDiscriminantAnalysis") {
    if (has) check_keys(p, path, {});
    return {LdaParams{}};
  }
  if (name == "LogisticRegression") {
    LrParams l;
    if (has) {
      check_keys(p, path, {"C", "lambda", "max_iter", "tol", "class_weight", "penalty"});
      if (p["C"] && p["lambda"]) fail(path, "give either C or lambda, not both");
      if (p["C"]) l.lambda = 1.0 / get_positive(p["C"], at("C"));
      if (p["lambda"]) l.lambda = get_positive(p["lambda"], at("lambda"));
      if (p["max_iter"]) l.max_iter = get_int32(p["max_iter"], at("max_iter"), 1);
      if (p["tol"]) l.tol = get_positive(p["tol"], at("tol"));
      if (p["class_weight"]) expect_value(p["class_weight"], at("class_weight"), "balanced");
      if (p["penalty"]) expect_value(p["penalty"], at("penalty"), "l2");
    }
    return {l};
  }
  // GaussianNB
  NbParams nb;
  if (has) {
    check_keys(p, path, {"var_floor"});
    if (p["var_floor"]) nb.var_floor = get_positive(p["var_floor"], at("var_floor"));
  }
  return {nb};
}

TwinConfig parse_twin(const YAML::Node& p, const std::string& path) {
  TwinConfig t;
  if (!p || p.IsNull()) return t;
  const auto at = [&](const char* k) { return key_path(path, k); };
  if (p.IsMap() && p["user_tnn_path"])
    fail(at("user_tnn_path"), "custom network architectures are not supported");
  check_keys(p, path,
             {"EPOCHS", "epochs", "batch_size", "verbose", "workers", "learning_rate", "margin",
              "embedding_dim", "conv_filters", "kernel_time", "seed"});
  if (p["EPOCHS"] && p["epochs"]) fail(path, "give either EPOCHS or epochs, not both");
  if (p["EPOCHS"]) t.epochs = get_int32(p["EPOCHS"], at("EPOCHS"), 1);
  if (p["epochs"]) t.epochs = get_int32(p["epochs"], at("epochs"), 1);
  if (p["batch_size"]) t.batch_size = get_int32(p["batch_size"], at("batch_size"), 3);
  if (p["verbose"]) t.verbose = get_bool(p["verbose"], at("verbose"));
  if (p["workers"]) t.workers = get_int32(p["workers"], at("workers"), 1);
  if (p["learning_rate"]) t.learning_rate = get_positive(p["learning_rate"], at("learning_rate"));
  if (p["margin"]) t.margin = get_positive(p["margin"], at("margin"));
  if (p["embedding_dim"]) t.embedding_dim = get_int32(p["embedding_dim"], at("embedding_dim"), 2);
  if (p["kernel_time"]) t.kernel_time = get_int32(p["kernel_time"], at("kernel_time"), 1);
  if (p["seed"]) t.seed = get_u64(p["seed"], at("seed"));
  if (p["conv_filters"]) {
    const auto fpath = at("conv_filters");
    const auto& f = p["conv_filters"];
    if (!f.IsSequence() || f.size() != static_cast<std::size_t>(kTwinStages))
      fail(fpath, "expected a list of " + std::to_string(kTwinStages) + " integers");
    t.conv_filters.clear();
    for (std::size_t i = 0; i < f.size(); ++i)
      t.conv_filters.push_back(get_int32(f[i], index_path(fpath, i), 1));
  }
  try {
    validate(t);
  } catch (const ParamError& e) {
    fail(path, e.what());
  }
  return t;
}

void parse_full_epoch(const YAML::Node& p, const std::string& path, std::optional<bool>& full) {
  if (!p["full_epoch"]) return;
  const bool v = get_bool(p["full_epoch"], key_path(path, "full_epoch"));
  if (full && *full != v) fail(key_path(path, "full_epoch"), "conflicts with an earlier step");
  full = v;
}

PipelineConfig parse_pipeline(const std::string& name, const YAML::Node& steps,
                              const std::string& path) {
  if (!steps.IsSequence() || steps.size() == 0) fail(path, "expected a non-empty list of steps");
  PipelineConfig pc;
  pc.name = name;
  pc.features.use_ar = false;
  pc.features.use_psd = false;
  std::optional<bool> full_epoch;
  bool authenticator = false;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto spath = index_path(path, i);
    const auto& step = steps[i];
    check_keys(step, spath, {"name", "from", "parameters"});
    if (!step["name"]) fail(spath, "missing 'name'");
    const auto sname = get_string(step["name"], key_path(spath, "name"));
    if (authenticator) fail(spath, "steps after the authenticator step are not allowed");
    const auto ppath = key_path(spath, "parameters");
    const YAML::Node p = step["parameters"];
    const bool has = p && !p.IsNull();
    pc.steps.push_back(sname);
    if (sname == "AutoRegressive") {
      if (pc.features.use_ar) fail(spath, "duplicate AutoRegressive step");
      pc.features.use_ar = true;
      if (has) {
        check_keys(p, ppath, {"order", "full_epoch"});
        if (p["order"]) pc.features.ar_order = get_int32(p["order"], key_path(ppath, "order"), 1);
        parse_full_epoch(p, ppath, full_epoch);
      }
    } else if (sname == "PowerSpectralDensity") {
      if (pc.features.use_psd) fail(spath, "duplicate PowerSpectralDensity step");
      pc.features.use_psd = true;
      if (has) {
        check_keys(p, ppath, {"n_windows", "overlap", "bands", "full_epoch"});
        if (p["n_windows"])
          pc.features.psd_n_windows = get_int32(p["n_windows"], key_path(ppath, "n_windows"), 1);
        if (p["overlap"]) {
          pc.features.psd_overlap = get_double(p["overlap"], key_path(ppath, "overlap"));
          if (pc.features.psd_overlap < 0.0 || pc.features.psd_overlap >= 1.0)
            fail(key_path(ppath, "overlap"), "must lie in [0, 1)");
        }
        if (p["bands"]) {
          const auto bpath = key_path(ppath, "bands");
          const auto& b = p["bands"];
          if (!b.IsMap()) fail(bpath, "expected a mapping name -> [low_hz, high_hz]");
          pc.features.bands.clear();
          for (const auto& kv : b) {
            const auto bname = kv.first.as<std::string>();
            const auto r = get_interval(kv.second, key_path(bpath, bname));
            pc.features.bands.push_back({bname, r.first, r.second});
          }
        }
        parse_full_epoch(p, ppath, full_epoch);
      }
    } else if (sname == "TwinNeuralNetwork") {
      if (pc.features.use_ar || pc.features.use_psd)
        fail(spath, "TwinNeuralNetwork consumes epochs and cannot follow feature steps");
      pc.twin = parse_twin(p, ppath);
      authenticator = true;
    } else if (is_classifier_step(sname)) {
      if (!pc.features.use_ar && !pc.features.use_psd)
        fail(spath, "classifier step needs a preceding feature step");
      pc.classifier = parse_classifier(sname, p, ppath);
      authenticator = true;
    } else {
      fail(key_path(spath, "name"), "unknown step '" + sname + "'");
    }
  }
  if (!authenticator) fail(path, "no authenticator step");
  pc.features.full_epoch = full_epoch.value_or(false);
  if (pc.is_twin()) pc.features = FeatureRecipe{};
  try {
    if (!pc.is_twin()) validate(pc.features);
  } catch (const ParamError& e) {
    fail(path, e.what());
  }
  return pc;
}

EvalPlan parse_evaluation(const YAML::Node& e, const std::string& path) {
  EvalPlan plan;
  if (!e || e.IsNull()) return plan;
  check_keys(e, path, {"scheme", "attacker", "k_folds", "min_samples_per_user", "seed"});
  const auto at = [&](const char* k) { return key_path(path, k); };
  try {
    if (e["scheme"]) plan.scheme = scheme_from_string(get_string(e["scheme"], at("scheme")));
  } catch (const ParamError& err) {
    fail(at("scheme"), err.what());
  }
  try {
    if (e["attacker"])
      plan.attacker = attacker_from_string(get_string(e["attacker"], at("attacker")));
  } catch (const ParamError& err) {
    fail(at("attacker"), err.what());
  }
  if (e["k_folds"]) plan.k_folds = get_int32(e["k_folds"], at("k_folds"), 2);
  if (e["min_samples_per_user"])
    plan.min_samples_per_user = get_int32(e["min_samples_per_user"], at("min_samples_per_user"), 1);
  if (e["seed"]) plan.seed = get_u64(e["seed"], at("seed"));
  return plan;
}

SweepConfig parse_sweeps(const YAML::Node& s, const std::string& path) {
  SweepConfig sw;
  if (!s || s.IsNull()) return sw;
  check_keys(s, path, {"interval", "rejection_threshold"});
  if (s["interval"]) {
    const auto ipath = key_path(path, "interval");
    if (!s["interval"].IsSequence()) fail(ipath, "expected a list of [tmin, tmax]");
    for (std::size_t i = 0; i < s["interval"].size(); ++i)
      sw.intervals.push_back(get_interval(s["interval"][i], index_path(ipath, i)));
  }
  if (s["rejection_threshold"]) {
    const auto rpath = key_path(path, "rejection_threshold");
    if (!s["rejection_threshold"].IsSequence()) fail(rpath, "expected a list of thresholds");
    for (std::size_t i = 0; i < s["rejection_threshold"].size(); ++i)
      sw.rejection_thresholds.push_back(
          get_threshold(s["rejection_threshold"][i], index_path(rpath, i)));
  }
  return sw;
}

BenchmarkConfig parse_tree(const YAML::Node& root) {
  if (!root.IsMap()) fail("<root>", "expected a mapping");
  check_keys(root, "", {"name", "dataset", "datasets", "pipelines", "evaluation", "sweeps"});
  BenchmarkConfig c;
  c.name = root["name"] ? get_string(root["name"], "name") : "benchmark";
  if (root["dataset"] && root["datasets"]) fail("datasets", "give either dataset or datasets");
  const char* dkey = root["dataset"] ? "dataset" : "datasets";
  const YAML::Node ds = root[dkey];
  if (!ds) fail(dkey, "missing");
  if (!ds.IsSequence() || ds.size() == 0) fail(dkey, "expected a non-empty list");
  for (std::size_t i = 0; i < ds.size(); ++i)
    c.datasets.push_back(parse_dataset(ds[i], index_path(dkey, i)));
  const YAML::Node ps = root["pipelines"];
  if (!ps) fail("pipelines", "missing");
  if (!ps.IsMap() || ps.size() == 0) fail("pipelines", "expected a non-empty mapping");
  std::set<std::string> seen;
  for (const auto& kv : ps) {
    const auto name = kv.first.as<std::string>();
    if (!seen.insert(name).second) fail(key_path("pipelines", name), "duplicate pipeline");
    c.pipelines.push_back(parse_pipeline(name, kv.second, key_path("pipelines", name)));
  }
  c.evaluation = parse_evaluation(root["evaluation"], "evaluation");
  c.sweeps = parse_sweeps(root["sweeps"], "sweeps");
  return c;
}

// ---------------------------------------------------------------------------

void emit_pair(YAML::Emitter& out, double a, double b) {
  out << YAML::Flow << YAML::BeginSeq << a << b << YAML::EndSeq;
}

void emit_classifier(YAML::Emitter& out, const std::string& step, const ClassifierSpec& spec) {
  out << YAML::BeginMap << YAML::Key << "name" << YAML::Value << step;
  out << YAML::Key << "parameters" << YAML::Value << YAML::BeginMap;
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, SvmParams>) {
          out << YAML::Key << "kernel" << YAML::Value << "rbf";
          out << YAML::Key << "class_weight" << YAML::Value << "balanced";
          out << YAML::Key << "probability" << YAML::Value << true;
          out << YAML::Key << "C" << YAML::Value << p.C;
          out << YAML::Key << "gamma" << YAML::Value;
          if (p.gamma)
            out << *p.gamma;
          else
            out << "scale";
          out << YAML::Key << "platt_folds" << YAML::Value << p.platt_folds;
          out << YAML::Key << "tol" << YAML::Value << p.eps;
        } else if constexpr (std::is_same_v<T, RfParams>) {
          out << YAML::Key << "n_estimators" << YAML::Value << p.n_trees;
          out << YAML::Key << "class_weight" << YAML::Value << "balanced";
        } else if constexpr (std::is_same_v<T, KnnParams>) {
          out << YAML::Key << "n_neighbors" << YAML::Value << p.k;
        } else if constexpr (std::is_same_v<T, LrParams>) {
          out << YAML::Key << "lambda" << YAML::Value << p.lambda;
          out << YAML::Key << "max_iter" << YAML::Value << p.max_iter;
          out << YAML::Key << "tol" << YAML::Value << p.tol;
        } else if constexpr (std::is_same_v<T, NbParams>) {
          out << YAML::Key << "var_floor" << YAML::Value << p.var_floor;
        }
      },
      spec.params);
  out << YAML::EndMap << YAML::EndMap;
}

void emit_twin(YAML::Emitter& out, const std::string& step, const TwinConfig& t) {
  out << YAML::BeginMap << YAML::Key << "name" << YAML::Value << step;
  out << YAML::Key << "parameters" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "EPOCHS" << YAML::Value << t.epochs;
  out << YAML::Key << "batch_size" << YAML::Value << t.batch_size;
  out << YAML::Key << "verbose" << YAML::Value << t.verbose;
  out << YAML::Key << "workers" << YAML::Value << t.workers;
  out << YAML::Key << "learning_rate" << YAML::Value << t.learning_rate;
  out << YAML::Key << "margin" << YAML::Value << t.margin;
  out << YAML::Key << "embedding_dim" << YAML::Value << t.embedding_dim;
  out << YAML::Key << "conv_filters" << YAML::Value << YAML::Flow << t.conv_filters;
  out << YAML::Key << "kernel_time" << YAML::Value << t.kernel_time;
  out << YAML::Key << "seed" << YAML::Value << t.seed;
  out << YAML::EndMap << YAML::EndMap;
}

void emit_dataset(YAML::Emitter& out, const DatasetConfig& d) {
  out << YAML::BeginMap << YAML::Key << "name" << YAML::Value << d.name;
  out << YAML::Key << "parameters" << YAML::Value << YAML::BeginMap;
  if (d.subjects) out << YAML::Key << "subjects" << YAML::Value << *d.subjects;
  out << YAML::Key << "interval" << YAML::Value;
  emit_pair(out, d.tmin_s, d.tmax_s);
  if (d.rejection_threshold_uv)
    out << YAML::Key << "rejection_threshold" << YAML::Value << *d.rejection_threshold_uv;
  if (d.baseline_disabled) {
    out << YAML::Key << "baseline" << YAML::Value << "none";
  } else if (d.baseline_s) {
    out << YAML::Key << "baseline" << YAML::Value;
    emit_pair(out, d.baseline_s->first, d.baseline_s->second);
  }
  out << YAML::Key << "band" << YAML::Value;
  emit_pair(out, d.band_low_hz, d.band_high_hz);
  if (d.resample_hz) out << YAML::Key << "resample" << YAML::Value << *d.resample_hz;
  if (!d.event_codes.empty())
    out << YAML::Key << "event_codes" << YAML::Value << YAML::Flow << d.event_codes;
  if (d.dataset_path) out << YAML::Key << "dataset_path" << YAML::Value << *d.dataset_path;
  if (d.is_synthetic()) {
    const auto& s = d.synth;
    out << YAML::Key << "n_subjects" << YAML::Value << s.n_subjects;
    out << YAML::Key << "n_sessions" << YAML::Value << s.n_sessions;
    out << YAML::Key << "epochs_per_session" << YAML::Value << s.epochs_per_session;
    out << YAML::Key << "sampling_rate_hz" << YAML::Value << s.sampling_rate_hz;
    out << YAML::Key << "n_channels" << YAML::Value << s.n_channels;
    out << YAML::Key << "erp_latency_ms" << YAML::Value << s.erp_latency_ms;
    out << YAML::Key << "erp_width_ms" << YAML::Value << s.erp_width_ms;
    out << YAML::Key << "subject_separability" << YAML::Value << s.subject_separability;
    out << YAML::Key << "session_drift" << YAML::Value << s.session_drift;
    out << YAML::Key << "noise_std_uv" << YAML::Value << s.noise_std_uv;
    out << YAML::Key << "artifact_rate" << YAML::Value << s.artifact_rate;
    out << YAML::Key << "seed" << YAML::Value << s.seed;
  }
  out << YAML::EndMap << YAML::EndMap;
}

}  // namespace

const std::vector<std::string>& known_datasets() {
  static const std::vector<std::string> names{
      "BrainInvaders2015a", "BrainInvaders15a", "COGBCIFLANKER", "ERPCOREP300", "ERPCOREN400",
      "Lee2019",            "Mantegna2019",     "Huebner2017",   "Sosulski2019", "Won2022"};
  return names;
}

PreprocessParams preprocess_params(const DatasetConfig& d) {
  PreprocessParams p;
  p.band_low_hz = d.band_low_hz;
  p.band_high_hz = d.band_high_hz;
  p.epoch_tmin_s = d.tmin_s;
  p.epoch_tmax_s = d.tmax_s;
  if (d.baseline_disabled)
    p.baseline_window_s.reset();
  else if (d.baseline_s)
    p.baseline_window_s = d.baseline_s;
  else if (d.tmin_s < 0.0)
    p.baseline_window_s = std::pair{d.tmin_s, 0.0};
  else
    p.baseline_window_s.reset();
  p.ptp_reject_uv = d.rejection_threshold_uv;
  p.target_rate_hz = d.resample_hz;
  p.event_codes = d.event_codes;
  return p;
}

BenchmarkConfig parse_config(const std::string& text) {
  YAML::Node root;
  std::string where, value;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    if (scan_placeholder(text, where, value)) placeholder_error(where, value);
    fail("line " + std::to_string(e.mark.line + 1), "invalid YAML: " + e.msg);
  }
  if (find_placeholder(root, "", where, value)) placeholder_error(where, value);
  try {
    return parse_tree(root);
  } catch (const YAML::Exception& e) {
    fail("line " + std::to_string(e.mark.line + 1), e.msg);
  }
}

BenchmarkConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string() + ": cannot open configuration file");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string emit_config(const BenchmarkConfig& c) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << YAML::DoubleQuoted << c.name;
  out << YAML::Key << "datasets" << YAML::Value << YAML::BeginSeq;
  for (const auto& d : c.datasets) emit_dataset(out, d);
  out << YAML::EndSeq;
  out << YAML::Key << "pipelines" << YAML::Value << YAML::BeginMap;
  for (const auto& p : c.pipelines) {
    out << YAML::Key << YAML::DoubleQuoted << p.name << YAML::Value << YAML::BeginSeq;
    for (const auto& step : p.steps) {
      if (step == "AutoRegressive") {
        out << YAML::BeginMap << YAML::Key << "name" << YAML::Value << step;
        out << YAML::Key << "parameters" << YAML::Value << YAML::BeginMap;
        out << YAML::Key << "order" << YAML::Value << p.features.ar_order;
        out << YAML::Key << "full_epoch" << YAML::Value << p.features.full_epoch;
        out << YAML::EndMap << YAML::EndMap;
      } else if (step == "PowerSpectralDensity") {
        out << YAML::BeginMap << YAML::Key << "name" << YAML::Value << step;
        out << YAML::Key << "parameters" << YAML::Value << YAML::BeginMap;
        out << YAML::Key << "n_windows" << YAML::Value << p.features.psd_n_windows;
        out << YAML::Key << "overlap" << YAML::Value << p.features.psd_overlap;
        out << YAML::Key << "bands" << YAML::Value << YAML::BeginMap;
        for (const auto& b : p.features.bands) {
          out << YAML::Key << b.name << YAML::Value;
          emit_pair(out, b.low_hz, b.high_hz);
        }
        out << YAML::EndMap;
        out << YAML::Key << "full_epoch" << YAML::Value << p.features.full_epoch;
        out << YAML::EndMap << YAML::EndMap;
      } else if (step == "TwinNeuralNetwork") {
        emit_twin(out, step, *p.twin);
      } else {
        emit_classifier(out, step, p.classifier);
      }
    }
    out << YAML::EndSeq;
  }
  out << YAML::EndMap;
  const auto& e = c.evaluation;
  out << YAML::Key << "evaluation" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "scheme" << YAML::Value << to_string(e.scheme);
  out << YAML::Key << "attacker" << YAML::Value << to_string(e.attacker);
  out << YAML::Key << "k_folds" << YAML::Value << e.k_folds;
  out << YAML::Key << "min_samples_per_user" << YAML::Value << e.min_samples_per_user;
  out << YAML::Key << "seed" << YAML::Value << e.seed;
  out << YAML::EndMap;
  if (!c.sweeps.empty()) {
    out << YAML::Key << "sweeps" << YAML::Value << YAML::BeginMap;
    if (!c.sweeps.intervals.empty()) {
      out << YAML::Key << "interval" << YAML::Value << YAML::BeginSeq;
      for (const auto& [a, b] : c.sweeps.intervals) emit_pair(out, a, b);
      out << YAML::EndSeq;
    }
    if (!c.sweeps.rejection_thresholds.empty()) {
      out << YAML::Key << "rejection_threshold" << YAML::Value << YAML::Flow << YAML::BeginSeq;
      for (const auto& t : c.sweeps.rejection_thresholds) {
        if (t)
          out << *t;
        else
          out << YAML::Null;
      }
      out << YAML::EndSeq;
    }
    out << YAML::EndMap;
  }
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace neuroid

#include "etongue/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <map>

#include "etongue/chemometrics.hpp"
#include "etongue/error.hpp"
#include "etongue/evaluation.hpp"
#include "etongue/features.hpp"
#include "etongue/pipeline_io.hpp"
#include "etongue/presets.hpp"
#include "etongue/recording_io.hpp"
#include "etongue/service.hpp"

namespace etongue {

namespace fs = std::filesystem;
using nlohmann::json;

void RunConfig::validate() const {
  if (!(variance_target > 0.0 && variance_target <= 1.0)) {
    throw ConfigurationError("variance_target must lie in (0, 1]");
  }
  if (k_for_knn < 1) throw ConfigurationError("k_for_knn must be >= 1");
  if (n_trees < 1) throw ConfigurationError("n_trees must be >= 1");
  if (n_threads < 1) throw ConfigurationError("n_threads must be >= 1");
}

RunConfig run_config_from_json(const json& doc) {
  try {
    RunConfig c;
    if (doc.contains("seed") && !doc["seed"].is_null()) c.seed = doc["seed"].get<std::uint64_t>();
    c.variance_target = doc.value("variance_target", c.variance_target);
    c.k_for_knn = doc.value("k_for_knn", c.k_for_knn);
    c.n_trees = doc.value("n_trees", c.n_trees);
    c.scheme = doc.value("scheme", c.scheme);
    c.n_threads = doc.value("n_threads", c.n_threads);
    if (doc.contains("paths")) {
      const json& p = doc["paths"];
      c.manifest = p.value("manifest", c.manifest);
      c.bundle = p.value("bundle", c.bundle);
      c.out = p.value("out", c.out);
    }
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw ConfigurationError(std::string("malformed run config: ") + e.what());
  }
}

namespace {

// Usage problems detected after CLI11 parsing (exit 2).
class UsageError : public Error {
 public:
  using Error::Error;
};

struct Options {
  bool json_output = false;
  std::string config_path;
  RunConfig config;

  // per-subcommand values
  std::string preset;
  std::string sim_config;
  std::uint64_t seed = 0;
  int repeats = 5;
  double noise = 0.05;
  bool no_shuffle = false;
  SimulationTiming timing;
  std::string manifest;
  std::string out;
  std::string task;
  std::vector<std::string> tasks;
  std::vector<std::string> models;
  std::string model = "lda";
  std::string scheme;
  std::string acid_task = "acid";
  std::string concentration_task = "log10_concentration";
  std::string label_task;
  std::string timestamp;
  std::string bundle;
  std::string recording;
  std::string bind;
  int k = 3;
  int n_trees = 50;
  int threads = 1;
  double variance_target = 0.95;
};

std::uint64_t require_seed(const Options& o, const CLI::Option* flag, const std::string& why) {
  if (flag->count() > 0) return o.seed;
  if (o.config.seed) return *o.config.seed;
  throw UsageError("--seed is required for " + why);
}

std::string pick(const CLI::Option* flag, const std::string& value, const std::string& fallback,
                 const char* name) {
  if (flag->count() > 0) return value;
  if (!fallback.empty()) return fallback;
  throw UsageError(std::string("--") + name + " is required");
}

void emit(std::ostream& out, const fs::path& path, const std::string& text) {
  if (path.empty()) {
    out << text;
  } else {
    write_text_file(path, text);
  }
}

std::vector<Experiment> simulation_config(const std::string& path, int& repeats) {
  const json doc = read_json_file(path);
  try {
    Experiment e;
    e.name = doc.value("name", std::string("custom"));
    e.array = array_from_json(doc.at("array"));
    for (const auto& p : doc.at("profiles")) e.profiles.push_back(profile_from_json(p));
    e.reference_id = doc.at("reference_id").get<std::string>();
    repeats = doc.value("repeats", repeats);
    return {e};
  } catch (const json::exception& e) {
    throw ConfigurationError(std::string("malformed simulation config: ") + e.what());
  }
}

int cmd_simulate(const Options& o, const CLI::Option* seed_flag, const CLI::Option* repeats_flag,
                 std::ostream& out) {
  const std::uint64_t seed = require_seed(o, seed_flag, "simulate");
  if (o.preset.empty() == o.sim_config.empty()) {
    throw UsageError("simulate needs exactly one of --preset or --config-sim");
  }
  if (o.out.empty()) throw UsageError("--out is required");
  int repeats = o.repeats;
  std::vector<Experiment> experiments;
  if (!o.preset.empty()) {
    experiments = preset_experiments(o.preset, seed, o.noise);
  } else {
    int from_file = repeats;
    experiments = simulation_config(o.sim_config, from_file);
    if (repeats_flag->count() == 0) repeats = from_file;
  }
  const DatasetManifest manifest =
      simulate_to_directory(experiments, o.out, repeats, !o.no_shuffle, seed, o.timing);
  const fs::path manifest_path = fs::path(o.out) / "manifest.json";
  if (o.json_output) {
    out << json{{"manifest", manifest_path.string()},
                {"n_recordings", manifest.recordings.size()},
                {"tasks", manifest_tasks(manifest)}}
               .dump(2)
        << "\n";
  } else {
    out << "wrote " << manifest.recordings.size() << " recordings, manifest "
        << manifest_path.string() << "\n";
  }
  return kExitOk;
}

int cmd_extract(const Options& o, const CLI::Option* manifest_flag, std::ostream& out) {
  const auto ds = load_dataset(load_manifest(pick(manifest_flag, o.manifest, o.config.manifest, "manifest")));
  emit(out, o.out, features_to_csv(ds));
  return kExitOk;
}

int cmd_sensitivity(const Options& o, const CLI::Option* manifest_flag, std::ostream& out) {
  const auto ds = load_dataset(load_manifest(pick(manifest_flag, o.manifest, o.config.manifest, "manifest")));
  const auto acid_it = ds.task_labels.find(o.acid_task);
  const auto conc_it = ds.task_labels.find(o.concentration_task);
  if (acid_it == ds.task_labels.end() || conc_it == ds.task_labels.end()) {
    throw ValidationError("manifest needs tasks '" + o.acid_task + "' and '" +
                          o.concentration_task + "'");
  }
  std::map<std::string, std::vector<ConcentrationPoint>> points;
  for (std::size_t i = 0; i < ds.n_rows(); ++i) {
    const auto& acid = acid_it->second[i];
    const auto& conc = conc_it->second[i];
    if (!acid || !conc) continue;
    points[*acid].push_back({parse_double(*conc), ds.features.row(static_cast<Eigen::Index>(i)).transpose()});
  }
  const SensitivityReport report = sensitivity_slopes(points);
  if (o.json_output) {
    json slopes = json::object();
    for (Eigen::Index f = 0; f < report.slopes.rows(); ++f) {
      json row = json::object();
      for (std::size_t a = 0; a < report.acids.size(); ++a) {
        const auto col = static_cast<Eigen::Index>(a);
        row[report.acids[a]] = {{"slope", report.slopes(f, col)}, {"r_squared", report.r_squared(f, col)}};
      }
      slopes[feature_name(static_cast<int>(f))] = std::move(row);
    }
    const std::string text = json{{"acids", report.acids}, {"features", slopes}}.dump(2) + "\n";
    emit(out, o.out, text);
  } else {
    emit(out, o.out, sensitivity_to_csv(report));
  }
  return kExitOk;
}

int cmd_pca(const Options& o, const CLI::Option* manifest_flag, const CLI::Option* vt_flag,
            std::ostream& out) {
  const auto ds = load_dataset(load_manifest(pick(manifest_flag, o.manifest, o.config.manifest, "manifest")));
  PcaOptions options;
  options.variance_target = vt_flag->count() ? o.variance_target : o.config.variance_target;
  const Standardizer st = fit_standardizer(ds.features);
  const PCAModel pca = fit_pca(st.apply(ds.features), options);
  const Eigen::MatrixXd scores = project(pca, st.apply(ds.features));

  std::vector<std::string> labels(ds.n_rows());
  if (!o.label_task.empty()) {
    auto it = ds.task_labels.find(o.label_task);
    if (it == ds.task_labels.end()) throw ValidationError("unknown task '" + o.label_task + "'");
    for (std::size_t i = 0; i < ds.n_rows(); ++i) labels[i] = it->second[i].value_or("");
  }
  if (!o.out.empty()) write_text_file(o.out, scores_to_csv(scores, ds.sample_ids, labels));

  const std::vector<double> ratios(pca.explained_variance_ratio.data(),
                                   pca.explained_variance_ratio.data() + pca.n_selected());
  if (o.json_output) {
    out << json{{"n_selected", pca.n_selected()},
                {"variance_target", options.variance_target},
                {"explained_variance_ratio", ratios},
                {"cumulative_ratio", pca.cumulative_ratio(pca.n_selected())}}
               .dump(2)
        << "\n";
  } else {
    out << pca.n_selected() << " components reach " << options.variance_target * 100.0
        << "% of the variance (cumulative " << pca.cumulative_ratio(pca.n_selected()) * 100.0 << "%)\n";
    for (int c = 0; c < pca.n_selected(); ++c) {
      out << "  pc" << c + 1 << ": " << ratios[static_cast<std::size_t>(c)] * 100.0 << "%\n";
    }
    if (o.out.empty()) out << scores_to_csv(scores, ds.sample_ids, labels);
  }
  return kExitOk;
}

ModelSpec model_spec(ModelKind kind, const Options& o, const CLI::Option* k_flag,
                     const CLI::Option* trees_flag) {
  ModelSpec spec;
  spec.kind = kind;
  spec.k = k_flag->count() ? o.k : o.config.k_for_knn;
  spec.n_trees = trees_flag->count() ? o.n_trees : o.config.n_trees;
  return spec;
}

bool is_stochastic(ModelKind kind) {
  return kind == ModelKind::kBaggedTrees || kind == ModelKind::kBaseline;
}

int cmd_train(const Options& o, const CLI::Option* manifest_flag, const CLI::Option* seed_flag,
              const CLI::Option* k_flag, const CLI::Option* trees_flag, const CLI::Option* vt_flag,
              const CLI::Option* threads_flag, std::ostream& out) {
  const ModelSpec spec = model_spec(parse_model_kind(o.model), o, k_flag, trees_flag);
  PipelineConfig config;
  config.variance_target = vt_flag->count() ? o.variance_target : o.config.variance_target;
  config.n_threads = threads_flag->count() ? o.threads : o.config.n_threads;
  if (is_stochastic(spec.kind)) {
    config.seed = require_seed(o, seed_flag, "model '" + o.model + "'");
  } else if (seed_flag->count() || o.config.seed) {
    config.seed = seed_flag->count() ? o.seed : *o.config.seed;
  }
  const std::string out_path = o.out.empty() ? o.config.bundle : o.out;
  if (out_path.empty()) throw UsageError("--out is required");

  const auto ds = load_dataset(load_manifest(pick(manifest_flag, o.manifest, o.config.manifest, "manifest")));
  const TaskData data = select_task(ds, o.task);
  TrainedPipeline pipeline = fit_pipeline(data.features, data.labels, spec, config);
  pipeline.fingerprint.task = o.task;
  pipeline.fingerprint.timestamp = o.timestamp;
  save_bundle(pipeline, out_path);
  if (o.json_output) {
    out << bundle_metadata(pipeline).dump(2) << "\n";
  } else {
    out << "trained " << model_kind_name(spec.kind) << " on " << data.labels.size() << " rows ("
        << pipeline.label_map.size() << " classes, " << pipeline.pca.n_selected()
        << " components) -> " << out_path << "\n";
  }
  return kExitOk;
}

int cmd_evaluate(const Options& o, const CLI::Option* manifest_flag, const CLI::Option* seed_flag,
                 const CLI::Option* k_flag, const CLI::Option* trees_flag,
                 const CLI::Option* vt_flag, const CLI::Option* threads_flag,
                 const CLI::Option* scheme_flag, std::ostream& out, std::ostream& err) {
  std::vector<ModelKind> kinds;
  if (o.models.empty()) {
    kinds = {ModelKind::kBaseline, ModelKind::kLda, ModelKind::kKnn, ModelKind::kBaggedTrees};
  } else {
    for (const auto& m : o.models) kinds.push_back(parse_model_kind(m));
  }
  const std::string scheme_text = scheme_flag->count() ? o.scheme : o.config.scheme;
  bool stochastic = scheme_text.rfind("random", 0) == 0;
  for (auto kind : kinds) stochastic = stochastic || is_stochastic(kind);
  std::uint64_t seed = 0;
  if (stochastic) {
    seed = require_seed(o, seed_flag, "scheme '" + scheme_text + "' and the selected models");
  } else if (seed_flag->count() || o.config.seed) {
    seed = seed_flag->count() ? o.seed : *o.config.seed;
  }
  const FoldScheme scheme = parse_fold_scheme(scheme_text, seed);
  PipelineConfig config;
  config.seed = seed;
  config.variance_target = vt_flag->count() ? o.variance_target : o.config.variance_target;
  config.n_threads = threads_flag->count() ? o.threads : o.config.n_threads;

  const auto ds = load_dataset(load_manifest(pick(manifest_flag, o.manifest, o.config.manifest, "manifest")));
  std::vector<CVReport> reports;
  for (const auto& task : o.tasks) {
    const TaskData data = select_task(ds, task);
    for (auto kind : kinds) {
      reports.push_back(cross_validate(data, scheme, model_spec(kind, o, k_flag, trees_flag), config));
    }
  }
  const ResultsTable table = format_results_table(reports);
  json report_docs = json::array();
  std::size_t skipped = 0;
  for (const auto& r : reports) {
    report_docs.push_back(report_to_json(r));
    skipped += r.skipped.size();
    for (const auto& s : r.skipped) {
      err << "warning: " << r.task_name << "/" << r.model_name << " fold " << s.fold
          << " skipped: " << s.reason << "\n";
    }
  }
  const std::string out_dir = o.out.empty() ? o.config.out : o.out;
  if (!out_dir.empty()) {
    write_text_file(fs::path(out_dir) / "reports.json", report_docs.dump(2) + "\n");
    write_text_file(fs::path(out_dir) / "table.md", table.to_markdown());
    write_text_file(fs::path(out_dir) / "table.csv", table.to_csv());
  }
  if (o.json_output) {
    out << json{{"reports", report_docs}, {"table_markdown", table.to_markdown()}}.dump(2) << "\n";
  } else {
    out << table.to_markdown();
  }
  return skipped > 0 ? kExitSkippedFolds : kExitOk;
}

int cmd_predict(const Options& o, const CLI::Option* bundle_flag, std::ostream& out) {
  const TrainedPipeline pipeline = load_bundle(pick(bundle_flag, o.bundle, o.config.bundle, "bundle"));
  const Prediction p = predict_recording(pipeline, read_recording(o.recording));
  out << prediction_to_json(pipeline, p).dump() << "\n";
  return kExitOk;
}

int cmd_serve(const Options& o, const CLI::Option* bundle_flag, const CLI::Option* bind_flag,
              std::ostream& out) {
  std::string bind = "127.0.0.1:8080";
  if (const char* env = std::getenv("ETONGUE_BIND"); env && *env) bind = env;
  if (bind_flag->count()) bind = o.bind;
  const auto [host, port] = parse_bind_address(bind);

  std::shared_ptr<const ServedModel> model;
  const std::string bundle_path = bundle_flag->count() ? o.bundle : o.config.bundle;
  if (!bundle_path.empty()) model = make_served_model(load_bundle(bundle_path));
  InferenceService service(model);
  const int bound = service.bind(host, port);
  if (bound < 0) throw IoError("cannot bind " + bind);
  out << "serving on " << host << ":" << bound
      << (model ? " with bundle " + bundle_path : std::string(" without a bundle")) << "\n";
  out.flush();
  service.listen();
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Electronic tongue chemometrics toolkit", "etongue"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_flag("--json", o.json_output, "Machine-readable JSON on stdout");
  app.add_option("--config", o.config_path, "RunConfig JSON file")->check(CLI::ExistingFile);

  auto* sim = app.add_subcommand("simulate", "Simulate recordings and write a dataset manifest");
  sim->add_option("--preset", o.preset, "acids | juices | wines | aging");
  sim->add_option("--config-sim", o.sim_config, "Simulation JSON (array, profiles, reference_id)");
  auto* sim_seed = sim->add_option("--seed", o.seed, "RNG seed");
  auto* sim_repeats = sim->add_option("--repeats", o.repeats, "Recordings per liquid")->check(CLI::PositiveNumber);
  sim->add_option("--noise", o.noise, "Noise sigma in mV (presets)")->check(CLI::NonNegativeNumber);
  sim->add_flag("--no-shuffle", o.no_shuffle, "Keep recordings in profile order");
  sim->add_option("--duration", o.timing.duration_s, "Recording length in s")->check(CLI::PositiveNumber);
  sim->add_option("--rate", o.timing.sample_rate_hz, "Sample rate in Hz")->check(CLI::PositiveNumber);
  sim->add_option("--transition", o.timing.transition_s, "Reference->test switch time in s");
  sim->add_option("--out", o.out, "Output directory");

  auto* ext = app.add_subcommand("extract", "Write the 75-feature matrix as CSV");
  auto* ext_manifest = ext->add_option("--manifest", o.manifest, "Dataset manifest");
  ext->add_option("--out", o.out, "CSV path (default stdout)");

  auto* sens = app.add_subcommand("sensitivity", "Feature slopes against log10 concentration");
  auto* sens_manifest = sens->add_option("--manifest", o.manifest, "Dataset manifest");
  sens->add_option("--acid-task", o.acid_task, "Task holding the acid name");
  sens->add_option("--concentration-task", o.concentration_task, "Task holding log10(c)");
  sens->add_option("--out", o.out, "Output path (default stdout)");

  auto* pca = app.add_subcommand("pca", "Standardize, fit PCA and export scores");
  auto* pca_manifest = pca->add_option("--manifest", o.manifest, "Dataset manifest");
  pca->add_option("--label-task", o.label_task, "Task used for the label column");
  auto* pca_vt = pca->add_option("--variance-target", o.variance_target, "Explained variance target");
  pca->add_option("--out", o.out, "Scores CSV path");

  auto* train = app.add_subcommand("train", "Fit a pipeline and write a model bundle");
  auto* train_manifest = train->add_option("--manifest", o.manifest, "Dataset manifest");
  train->add_option("--task", o.task, "Label task")->required();
  train->add_option("--model", o.model, "baseline | lda | knn | bagged_trees");
  auto* train_seed = train->add_option("--seed", o.seed, "RNG seed");
  auto* train_k = train->add_option("--k", o.k, "Neighbours for KNN")->check(CLI::PositiveNumber);
  auto* train_trees = train->add_option("--n-trees", o.n_trees, "Bagged trees")->check(CLI::PositiveNumber);
  auto* train_vt = train->add_option("--variance-target", o.variance_target, "Explained variance target");
  auto* train_threads = train->add_option("--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber);
  train->add_option("--timestamp", o.timestamp, "Timestamp recorded in the training fingerprint");
  train->add_option("--out", o.out, "Bundle path (.etb.json)");

  auto* eval = app.add_subcommand("evaluate", "Cross-validate models and print the results table");
  auto* eval_manifest = eval->add_option("--manifest", o.manifest, "Dataset manifest");
  eval->add_option("--task", o.tasks, "Label task (repeatable)")->required();
  eval->add_option("--model", o.models, "Model kind (repeatable, default all four)");
  auto* eval_scheme = eval->add_option("--scheme", o.scheme, "random<k> | lolo");
  auto* eval_seed = eval->add_option("--seed", o.seed, "RNG seed");
  auto* eval_k = eval->add_option("--k", o.k, "Neighbours for KNN")->check(CLI::PositiveNumber);
  auto* eval_trees = eval->add_option("--n-trees", o.n_trees, "Bagged trees")->check(CLI::PositiveNumber);
  auto* eval_vt = eval->add_option("--variance-target", o.variance_target, "Explained variance target");
  auto* eval_threads = eval->add_option("--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber);
  eval->add_option("--out", o.out, "Directory for reports.json, table.md and table.csv");

  auto* pred = app.add_subcommand("predict", "Classify one recording with a bundle");
  auto* pred_bundle = pred->add_option("--bundle", o.bundle, "Model bundle");
  pred->add_option("--recording", o.recording, "Recording CSV (sidecar next to it)")->required();

  auto* serve = app.add_subcommand("serve", "Run the HTTP inference service");
  auto* serve_bundle = serve->add_option("--bundle", o.bundle, "Initial model bundle");
  auto* serve_bind = serve->add_option("--bind", o.bind, "host:port (env ETONGUE_BIND)");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << "run with --help for usage\n";
    return kExitUsage;
  }

  try {
    if (!o.config_path.empty()) o.config = run_config_from_json(read_json_file(o.config_path));
    if (pca_vt->count() || train_vt->count() || eval_vt->count()) {
      RunConfig check = o.config;
      check.variance_target = o.variance_target;
      check.validate();
    }
    if (*sim) return cmd_simulate(o, sim_seed, sim_repeats, out);
    if (*ext) return cmd_extract(o, ext_manifest, out);
    if (*sens) return cmd_sensitivity(o, sens_manifest, out);
    if (*pca) return cmd_pca(o, pca_manifest, pca_vt, out);
    if (*train) {
      return cmd_train(o, train_manifest, train_seed, train_k, train_trees, train_vt, train_threads, out);
    }
    if (*eval) {
      return cmd_evaluate(o, eval_manifest, eval_seed, eval_k, eval_trees, eval_vt, eval_threads,
                          eval_scheme, out, err);
    }
    if (*pred) return cmd_predict(o, pred_bundle, out);
    if (*serve) return cmd_serve(o, serve_bundle, serve_bind, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigurationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace etongue

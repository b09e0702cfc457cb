#include "etongue/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <thread>

#include "etongue/error.hpp"

namespace etongue {

using nlohmann::json;

TaskData select_task(const LabeledDataset& dataset, const std::string& task) {
  auto it = dataset.task_labels.find(task);
  if (it == dataset.task_labels.end()) throw ValidationError("unknown task '" + task + "'");
  TaskData out;
  out.task = task;
  for (std::size_t i = 0; i < dataset.n_rows(); ++i) {
    if (it->second[i]) out.source_rows.push_back(i);
  }
  if (out.source_rows.empty()) throw ValidationError("task '" + task + "' has no labelled rows");
  out.features.resize(static_cast<Eigen::Index>(out.source_rows.size()), dataset.features.cols());
  for (std::size_t r = 0; r < out.source_rows.size(); ++r) {
    const std::size_t src = out.source_rows[r];
    out.features.row(static_cast<Eigen::Index>(r)) = dataset.features.row(static_cast<Eigen::Index>(src));
    out.sample_ids.push_back(dataset.sample_ids[src]);
    out.labels.push_back(*it->second[src]);
  }
  return out;
}

std::string FoldScheme::name() const {
  return kind == Kind::kRandomKFold ? "random" + std::to_string(k) : "lolo";
}

FoldScheme parse_fold_scheme(const std::string& text, std::uint64_t seed) {
  if (text == "lolo" || text == "loo" || text == "leave_one_liquid_out") {
    return FoldScheme::leave_one_liquid_out();
  }
  if (text.rfind("random", 0) == 0) {
    const std::string digits = text.substr(6);
    if (digits.empty()) return FoldScheme::random(10, seed);
    if (digits.find_first_not_of("0123456789") == std::string::npos && digits.size() < 6) {
      return FoldScheme::random(std::stoi(digits), seed);
    }
  }
  throw ArgumentError("unknown fold scheme '" + text + "' (use random<k> or lolo)");
}

std::vector<Fold> make_folds(const std::vector<std::string>& sample_ids, const FoldScheme& scheme) {
  const std::size_t n = sample_ids.size();
  std::vector<Fold> folds;
  if (scheme.kind == FoldScheme::Kind::kRandomKFold) {
    if (scheme.k < 2) throw ArgumentError("random k-fold needs k >= 2");
    const auto k = static_cast<std::size_t>(scheme.k);
    if (n < k) {
      throw ArgumentError("cannot split " + std::to_string(n) + " rows into " +
                          std::to_string(k) + " folds");
    }
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::mt19937_64 engine(scheme.seed);
    std::shuffle(perm.begin(), perm.end(), engine);
    std::vector<int> assignment(n);
    for (std::size_t f = 0; f < k; ++f) {
      for (std::size_t pos = f * n / k; pos < (f + 1) * n / k; ++pos) {
        assignment[perm[pos]] = static_cast<int>(f);
      }
    }
    folds.resize(k);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t f = 0; f < k; ++f) {
        (static_cast<std::size_t>(assignment[i]) == f ? folds[f].test : folds[f].train).push_back(i);
      }
    }
    return folds;
  }

  std::vector<std::string> ids;
  for (const auto& id : sample_ids) {
    if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
  }
  if (ids.size() < 2) throw ArgumentError("leave-one-liquid-out needs >= 2 distinct sample ids");
  for (const auto& id : ids) {
    Fold fold;
    fold.held_out_id = id;
    for (std::size_t i = 0; i < n; ++i) (sample_ids[i] == id ? fold.test : fold.train).push_back(i);
    folds.push_back(std::move(fold));
  }
  return folds;
}

FoldAudit audit_folds(const std::vector<Fold>& folds, const std::vector<std::string>& sample_ids) {
  FoldAudit audit;
  std::vector<int> tested(sample_ids.size(), 0);
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::set<std::size_t> train(folds[f].train.begin(), folds[f].train.end());
    std::set<std::string> train_ids;
    for (std::size_t i : folds[f].train) {
      if (i >= sample_ids.size()) {
        audit.partition = false;
        audit.problems.push_back("fold " + std::to_string(f) + ": train index out of range");
        continue;
      }
      train_ids.insert(sample_ids[i]);
    }
    for (std::size_t i : folds[f].test) {
      if (i >= sample_ids.size()) {
        audit.partition = false;
        audit.problems.push_back("fold " + std::to_string(f) + ": test index out of range");
        continue;
      }
      ++tested[i];
      if (train.count(i)) {
        audit.partition = false;
        audit.problems.push_back("fold " + std::to_string(f) + ": row " + std::to_string(i) +
                                 " is in train and test");
      }
      if (train_ids.count(sample_ids[i])) {
        audit.no_id_leakage = false;
        audit.problems.push_back("fold " + std::to_string(f) + ": sample '" + sample_ids[i] +
                                 "' appears in train and test");
      }
    }
    if (folds[f].train.size() + folds[f].test.size() != sample_ids.size()) {
      audit.partition = false;
      audit.problems.push_back("fold " + std::to_string(f) + " does not cover every row");
    }
  }
  for (std::size_t i = 0; i < tested.size(); ++i) {
    if (tested[i] != 1) {
      audit.partition = false;
      audit.problems.push_back("row " + std::to_string(i) + " tested " + std::to_string(tested[i]) +
                               " times");
    }
  }
  // Keep the message list bounded for large datasets.
  if (audit.problems.size() > 20) audit.problems.resize(20);
  return audit;
}

AccuracySummary summarize_accuracies(std::span<const double> accuracies) {
  if (accuracies.empty()) throw InsufficientDataError("no fold accuracies to summarise");
  const auto n = static_cast<double>(accuracies.size());
  AccuracySummary s;
  s.mean = std::accumulate(accuracies.begin(), accuracies.end(), 0.0) / n;
  double ss = 0.0;
  for (double a : accuracies) ss += (a - s.mean) * (a - s.mean);
  s.standard_error = std::sqrt(ss / n) / std::sqrt(n);
  return s;
}

namespace {

struct FoldOutcome {
  bool evaluated = false;
  std::string skip_reason;
  double accuracy = 0.0;
  int components = 0;
  double expected = 0.0;
  std::vector<std::pair<int, int>> outcomes;  // (true, predicted) in global label indices
};

std::uint64_t fold_seed(std::uint64_t seed, std::size_t fold) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(fold), 0xF01Du};
  std::mt19937_64 engine(seq);
  return engine();
}

FoldOutcome run_fold(const TaskData& data, const LabelEncoding& global, const Fold& fold,
                     std::size_t fold_index, const ModelSpec& spec, const PipelineConfig& config) {
  FoldOutcome out;
  if (fold.test.empty() || fold.train.size() < 2) {
    out.skip_reason = "fold has too few rows";
    return out;
  }
  Eigen::MatrixXd train_x(static_cast<Eigen::Index>(fold.train.size()), data.features.cols());
  std::vector<std::string> train_y;
  for (std::size_t r = 0; r < fold.train.size(); ++r) {
    train_x.row(static_cast<Eigen::Index>(r)) = data.features.row(static_cast<Eigen::Index>(fold.train[r]));
    train_y.push_back(data.labels[fold.train[r]]);
  }
  const std::set<std::string> classes(train_y.begin(), train_y.end());
  if (spec.kind != ModelKind::kBaseline && classes.size() < 2) {
    out.skip_reason = "training rows contain a single class";
    return out;
  }

  PipelineConfig fold_config = config;
  fold_config.seed = fold_seed(config.seed, fold_index);
  TrainedPipeline pipeline;
  try {
    pipeline = fit_pipeline(train_x, train_y, spec, fold_config);
  } catch (const InsufficientDataError& e) {
    out.skip_reason = e.what();
    return out;
  } catch (const NumericalError& e) {
    out.skip_reason = e.what();
    return out;
  } catch (const ArgumentError& e) {
    out.skip_reason = e.what();
    return out;
  }

  std::size_t correct = 0;
  Eigen::VectorXd test_freq = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(pipeline.label_map.size()));
  for (std::size_t i : fold.test) {
    const Prediction p = pipeline.predict(data.features.row(static_cast<Eigen::Index>(i)).transpose());
    const int truth = global.indices[i];
    const int predicted = static_cast<int>(
        std::lower_bound(global.labels.begin(), global.labels.end(), p.label) - global.labels.begin());
    out.outcomes.emplace_back(truth, predicted);
    if (truth == predicted) ++correct;
    auto it = std::lower_bound(pipeline.label_map.begin(), pipeline.label_map.end(), data.labels[i]);
    if (it != pipeline.label_map.end() && *it == data.labels[i]) {
      test_freq[it - pipeline.label_map.begin()] += 1.0;
    }
  }
  out.evaluated = true;
  out.accuracy = static_cast<double>(correct) / static_cast<double>(fold.test.size());
  out.components = pipeline.pca.n_selected();
  if (const auto* baseline = std::get_if<BaselineModel>(&pipeline.classifier)) {
    out.expected = baseline_expected_accuracy(*baseline, test_freq / static_cast<double>(fold.test.size()));
  }
  return out;
}

}  // namespace

CVReport cross_validate(const TaskData& data, const FoldScheme& scheme, const ModelSpec& spec,
                        const PipelineConfig& config) {
  if (data.labels.size() != static_cast<std::size_t>(data.features.rows()) ||
      data.sample_ids.size() != data.labels.size()) {
    throw ArgumentError("task data columns are misaligned");
  }
  const std::vector<Fold> folds = make_folds(data.sample_ids, scheme);
  const LabelEncoding global = encode_labels(data.labels);

  std::vector<FoldOutcome> outcomes(folds.size());
  const int workers = std::clamp(config.n_threads, 1, static_cast<int>(folds.size()));
  PipelineConfig inner = config;
  if (workers > 1) inner.n_threads = 1;
  if (workers == 1) {
    for (std::size_t f = 0; f < folds.size(); ++f) {
      outcomes[f] = run_fold(data, global, folds[f], f, spec, inner);
    }
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t f = static_cast<std::size_t>(w); f < folds.size();
             f += static_cast<std::size_t>(workers)) {
          outcomes[f] = run_fold(data, global, folds[f], f, spec, inner);
        }
      });
    }
    for (auto& t : pool) t.join();
  }

  CVReport report;
  report.model_name = std::string(model_kind_name(spec.kind));
  report.task_name = data.task;
  report.scheme = scheme.name();
  report.labels = global.labels;
  report.confusion.assign(global.labels.size(), std::vector<long>(global.labels.size(), 0));
  double expected_sum = 0.0;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const FoldOutcome& o = outcomes[f];
    if (!o.evaluated) {
      report.skipped.push_back({static_cast<int>(f), o.skip_reason});
      continue;
    }
    report.fold_indices.push_back(static_cast<int>(f));
    report.per_fold_accuracy.push_back(o.accuracy);
    report.per_fold_components.push_back(o.components);
    report.per_fold_held_out.push_back(folds[f].held_out_id);
    for (const auto& [truth, predicted] : o.outcomes) {
      ++report.confusion[static_cast<std::size_t>(truth)][static_cast<std::size_t>(predicted)];
    }
    report.n_tested += o.outcomes.size();
    expected_sum += o.expected;
  }
  if (report.per_fold_accuracy.empty()) {
    throw InsufficientDataError("every fold was skipped for task '" + data.task + "' (" +
                                report.skipped.front().reason + ")");
  }
  const AccuracySummary summary = summarize_accuracies(report.per_fold_accuracy);
  report.mean_accuracy = summary.mean;
  report.standard_error = summary.standard_error;
  if (spec.kind == ModelKind::kBaseline) {
    report.expected_accuracy = expected_sum / static_cast<double>(report.per_fold_accuracy.size());
  }
  return report;
}

json report_to_json(const CVReport& r) {
  json doc;
  doc["model_name"] = r.model_name;
  doc["task_name"] = r.task_name;
  doc["scheme"] = r.scheme;
  doc["fold_indices"] = r.fold_indices;
  doc["per_fold_accuracy"] = r.per_fold_accuracy;
  doc["per_fold_components"] = r.per_fold_components;
  doc["per_fold_held_out"] = r.per_fold_held_out;
  doc["mean_accuracy"] = r.mean_accuracy;
  doc["standard_error"] = r.standard_error;
  doc["labels"] = r.labels;
  doc["confusion_matrix"] = r.confusion;
  json skipped = json::array();
  for (const auto& s : r.skipped) skipped.push_back({{"fold", s.fold}, {"reason", s.reason}});
  doc["skipped_folds"] = std::move(skipped);
  doc["expected_accuracy"] = r.expected_accuracy ? json(*r.expected_accuracy) : json(nullptr);
  doc["n_tested"] = r.n_tested;
  return doc;
}

CVReport report_from_json(const json& doc) {
  try {
    CVReport r;
    r.model_name = doc.at("model_name").get<std::string>();
    r.task_name = doc.at("task_name").get<std::string>();
    r.scheme = doc.at("scheme").get<std::string>();
    r.fold_indices = doc.at("fold_indices").get<std::vector<int>>();
    r.per_fold_accuracy = doc.at("per_fold_accuracy").get<std::vector<double>>();
    r.per_fold_components = doc.at("per_fold_components").get<std::vector<int>>();
    r.per_fold_held_out = doc.at("per_fold_held_out").get<std::vector<std::string>>();
    r.mean_accuracy = doc.at("mean_accuracy").get<double>();
    r.standard_error = doc.at("standard_error").get<double>();
    r.labels = doc.at("labels").get<std::vector<std::string>>();
    r.confusion = doc.at("confusion_matrix").get<std::vector<std::vector<long>>>();
    for (const auto& s : doc.at("skipped_folds")) {
      r.skipped.push_back({s.at("fold").get<int>(), s.at("reason").get<std::string>()});
    }
    if (!doc.at("expected_accuracy").is_null()) r.expected_accuracy = doc["expected_accuracy"].get<double>();
    r.n_tested = doc.at("n_tested").get<std::size_t>();
    return r;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed CV report: ") + e.what());
  }
}

std::string format_accuracy(double mean, double standard_error) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.1f±%.1f%%", mean * 100.0, standard_error * 100.0);
  return buf;
}

namespace {

int column_of(const std::string& model_name) {
  const ModelKind kind = parse_model_kind(model_name);
  switch (kind) {
    case ModelKind::kBaseline: return 0;
    case ModelKind::kLda: return 1;
    case ModelKind::kKnn: return 2;
    case ModelKind::kBaggedTrees: return 3;
  }
  return 0;
}

constexpr std::array<const char*, ResultsTable::kColumns> kHeaders = {"Baseline", "LDA", "KNN",
                                                                     "Bag Trees"};

}  // namespace

ResultsTable format_results_table(const std::vector<CVReport>& reports) {
  if (reports.empty()) throw ArgumentError("no reports to tabulate");
  ResultsTable table;
  for (const auto& r : reports) {
    auto row = std::find_if(table.rows.begin(), table.rows.end(),
                            [&](const ResultsTable::Row& x) { return x.task == r.task_name; });
    if (row == table.rows.end()) {
      table.rows.push_back({r.task_name, {}, {}, -1});
      row = table.rows.end() - 1;
    }
    const int col = column_of(r.model_name);
    row->cells[static_cast<std::size_t>(col)] = format_accuracy(r.mean_accuracy, r.standard_error);
    row->means[static_cast<std::size_t>(col)] = r.mean_accuracy;
  }
  for (auto& row : table.rows) {
    for (int c = 1; c < ResultsTable::kColumns; ++c) {
      const auto& m = row.means[static_cast<std::size_t>(c)];
      if (m && (row.best < 0 || *m > *row.means[static_cast<std::size_t>(row.best)])) row.best = c;
    }
  }
  return table;
}

std::string ResultsTable::to_markdown() const {
  std::string out = "| Data set |";
  for (const char* h : kHeaders) out += std::string(" ") + h + " |";
  out += "\n|---|---|---|---|---|\n";
  for (const auto& row : rows) {
    out += "| " + row.task + " |";
    for (int c = 0; c < kColumns; ++c) {
      const std::string& cell = row.cells[static_cast<std::size_t>(c)];
      const std::string text = cell.empty() ? "n/a" : cell;
      out += " " + (c == row.best ? "**" + text + "**" : text) + " |";
    }
    out += '\n';
  }
  return out;
}

std::string ResultsTable::to_csv() const {
  std::string out = "task";
  for (const char* h : kHeaders) out += std::string(",") + h;
  out += ",best\n";
  for (const auto& row : rows) {
    out += row.task;
    for (const auto& cell : row.cells) out += "," + cell;
    out += ",";
    if (row.best >= 0) out += kHeaders[static_cast<std::size_t>(row.best)];
    out += '\n';
  }
  return out;
}

}  // namespace etongue

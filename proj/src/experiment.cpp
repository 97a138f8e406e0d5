#include "imbassl/experiment.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "imbassl/errors.hpp"
#include "imbassl/random.hpp"

namespace imbassl {

namespace {

constexpr std::array<MethodSpec, 9> kMethods{{
    {"supervised", SupervisedLoss::kCe, std::nullopt, false},
    {"uda", SupervisedLoss::kCe, ConsistencyKind::kCl, false},
    {"uda-sampling", SupervisedLoss::kCe, ConsistencyKind::kCl, true},
    {"uda-weightedce", SupervisedLoss::kWeightedCe, ConsistencyKind::kCl, false},
    {"uda-focal", SupervisedLoss::kFocal, ConsistencyKind::kCl, false},
    {"uda-scl", SupervisedLoss::kCe, ConsistencyKind::kScl, false},
    {"uda-abcl", SupervisedLoss::kCe, ConsistencyKind::kAbcl, false},
    {"uda-weightedce-scl", SupervisedLoss::kWeightedCe, ConsistencyKind::kScl, false},
    {"uda-weightedce-abcl", SupervisedLoss::kWeightedCe, ConsistencyKind::kAbcl, false},
}};

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), pattern, v);
  return buf;
}

std::string fixed6(double v) { return fmt("%.6f", v); }

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create directory " + dir.string() + ": " + ec.message());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

std::string seed_stem(std::uint64_t seed) { return "seed_" + std::to_string(seed); }

std::string gamma_label(double g) { return fmt("%g", g); }

}  // namespace

std::span<const MethodSpec> all_methods() { return kMethods; }

std::string valid_method_names() {
  std::string names;
  for (const auto& m : kMethods) {
    if (!names.empty()) names += ", ";
    names += m.name;
  }
  return names;
}

const MethodSpec& find_method(std::string_view name) {
  for (const auto& m : kMethods) {
    if (m.name == name) return m;
  }
  throw ConfigError("unknown method '" + std::string(name) + "'; valid methods: " + valid_method_names());
}

PreparedData prepare_data(const ExperimentConfig& cfg, std::uint64_t seed) {
  const auto data_seed = cfg.dataset.fixed_seed.value_or(derive_seed(seed, SeedStream::kData));
  if (cfg.dataset.source == DatasetSource::kGaussian) {
    auto spec = cfg.dataset.gaussian;
    spec.seed = data_seed;
    auto splits = generate_gaussian_mixture(spec);
    return {std::move(splits.labeled), std::move(splits.unlabeled), std::move(splits.val), std::move(splits.test)};
  }
  const auto all = Dataset::load_csv(cfg.dataset.csv_path);
  if (!all.labeled()) throw ConfigError(cfg.dataset.csv_path.string() + ": dataset CSV must be labeled");
  constexpr double kRatios[] = {0.70, 0.20, 0.10};
  auto parts = stratified_split(all, kRatios, data_seed);
  auto pools = split_labeled(parts[0], cfg.dataset.labeled_fraction, mix64(data_seed));
  return {std::move(pools.labeled), std::move(pools.unlabeled), std::move(parts[2]), std::move(parts[1])};
}

TrainConfig make_train_config(const ExperimentConfig& cfg, const RunVariant& variant, const Dataset& labeled,
                              std::uint64_t seed) {
  const auto& method = find_method(variant.method);
  TrainConfig t = cfg.train;
  t.seed = seed;
  t.supervised_loss = method.supervised;
  if (method.consistency) {
    ConsistencyConfig c = cfg.consistency;
    c.kind = *method.consistency;
    if (variant.gamma) c.gamma = *variant.gamma;
    if (variant.blending) c.blending = *variant.blending;
    c.validate();
    t.consistency = c;
  } else {
    t.consistency.reset();
  }
  const double weak = cfg.noise_sigma.value_or(cfg.noise_scale * within_class_std(labeled));
  t.unlabeled_sigma = variant.strength == AugmentStrength::kStrong ? cfg.strong_factor * weak : weak;
  t.labeled_sigma = cfg.augment_labeled ? weak : 0.0;
  return t;
}

SeedRun run_seed(const ExperimentConfig& cfg, const RunVariant& variant, std::uint64_t seed) {
  const auto& method = find_method(variant.method);
  auto data = prepare_data(cfg, seed);
  const auto table = class_frequencies(data.labeled.labels(), data.labeled.n_classes());
  const auto t = make_train_config(cfg, variant, data.labeled, seed);
  Dataset labeled = data.labeled;
  if (method.resample_labeled) {
    Rng rng(derive_seed(seed, SeedStream::kResampling));
    labeled = sampling_baseline(data.labeled, cfg.smote_k, rng);
  }
  std::vector<std::size_t> dims{data.labeled.n_features()};
  dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
  dims.push_back(data.labeled.n_classes());
  auto result = train(dims, t, {labeled, data.unlabeled, data.val}, table);
  if (result.history.failed) throw DivergenceError("seed " + std::to_string(seed) + ": " + result.history.failure);
  SeedRun run{seed, std::move(result.best_model), std::move(result.history), {}};
  run.test = evaluate(run.model, data.test);
  return run;
}

std::vector<std::vector<SeedRun>> run_grid(const ExperimentConfig& cfg, std::span<const RunVariant> variants,
                                           unsigned workers) {
  for (const auto& v : variants) find_method(v.method);
  const std::size_t n_seeds = cfg.seeds.size();
  const std::size_t n_jobs = variants.size() * n_seeds;
  std::vector<std::optional<SeedRun>> slots(n_jobs);
  std::vector<std::exception_ptr> errors(n_jobs);
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(n_jobs, 1)));

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t job; (job = next.fetch_add(1)) < n_jobs;) {
      try {
        slots[job] = run_seed(cfg, variants[job / n_seeds], cfg.seeds[job % n_seeds]);
      } catch (...) {
        errors[job] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<std::vector<SeedRun>> out(variants.size());
  for (std::size_t job = 0; job < n_jobs; ++job) out[job / n_seeds].push_back(std::move(*slots[job]));
  return out;
}

namespace {

std::pair<double, double> mean_std(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  if (v.size() < 2) return {m, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

}  // namespace

MetricSummary summarize(std::span<const SeedRun> runs) {
  if (runs.empty()) throw ContractError("summarize: no runs");
  MetricSummary s;
  std::vector<double> uar, gm, auc;
  for (const auto& r : runs) {
    uar.push_back(r.test.uar);
    gm.push_back(r.test.g_mean);
    auc.push_back(r.test.avg_auc);
  }
  std::tie(s.uar_mean, s.uar_std) = mean_std(uar);
  std::tie(s.g_mean_mean, s.g_mean_std) = mean_std(gm);
  std::tie(s.avg_auc_mean, s.avg_auc_std) = mean_std(auc);
  const std::size_t c = runs.front().test.per_class_recall.size();
  for (std::size_t k = 0; k < c; ++k) {
    std::vector<double> rec;
    for (const auto& r : runs) rec.push_back(r.test.per_class_recall[k]);
    const auto [m, sd] = mean_std(rec);
    s.recall_mean.push_back(m);
    s.recall_std.push_back(sd);
  }
  return s;
}

std::string summary_json(std::string_view label, const RunVariant& variant, std::span<const SeedRun> runs) {
  using nlohmann::ordered_json;
  const auto& method = find_method(variant.method);
  ordered_json j;
  j["method"] = std::string(label);
  ordered_json settings;
  settings["base_method"] = std::string(method.name);
  if (method.consistency == ConsistencyKind::kAbcl) {
    if (variant.gamma) settings["gamma"] = *variant.gamma;
    if (variant.blending) settings["blending"] = std::string(to_string(*variant.blending));
  }
  settings["augmentation"] = variant.strength == AugmentStrength::kStrong ? "strong" : "weak";
  j["settings"] = settings;
  auto per_seed = ordered_json::array();
  for (const auto& r : runs) {
    ordered_json s;
    s["seed"] = r.seed;
    s["best_epoch"] = r.history.best_epoch.value_or(0);
    s["uar"] = r.test.uar;
    s["g_mean"] = r.test.g_mean;
    s["avg_auc"] = r.test.avg_auc;
    s["per_class_recall"] = r.test.per_class_recall;
    per_seed.push_back(s);
  }
  j["per_seed"] = per_seed;
  const auto sum = summarize(runs);
  j["mean"] = {{"uar", sum.uar_mean},
               {"g_mean", sum.g_mean_mean},
               {"avg_auc", sum.avg_auc_mean},
               {"per_class_recall", sum.recall_mean}};
  j["std"] = {{"uar", sum.uar_std},
              {"g_mean", sum.g_mean_std},
              {"avg_auc", sum.avg_auc_std},
              {"per_class_recall", sum.recall_std}};
  return j.dump(2) + "\n";
}

void write_run_artifacts(const std::filesystem::path& dir, std::string_view label, const RunVariant& variant,
                         std::span<const SeedRun> runs) {
  ensure_dir(dir);
  for (const auto& r : runs) {
    r.history.write_csv(dir / (seed_stem(r.seed) + "_history.csv"));
    r.model.save(dir / (seed_stem(r.seed) + ".ckpt"));
  }
  write_text(dir / "summary.json", summary_json(label, variant, runs));
}

namespace {

std::string summary_line(std::string_view label, const MetricSummary& s) {
  std::ostringstream out;
  out << label << ": UAR " << fixed6(s.uar_mean) << " ± " << fixed6(s.uar_std) << ", G-mean "
      << fixed6(s.g_mean_mean) << ", avg AUC " << fixed6(s.avg_auc_mean) << ", recall [";
  for (std::size_t c = 0; c < s.recall_mean.size(); ++c) out << (c ? ", " : "") << fixed6(s.recall_mean[c]);
  out << "]\n";
  return out.str();
}

std::string recall_headers(std::size_t n_classes) {
  std::string h;
  for (std::size_t c = 0; c < n_classes; ++c) h += ",recall_c" + std::to_string(c);
  return h;
}

std::string recall_cells(const MetricSummary& s) {
  std::string cells;
  for (double r : s.recall_mean) cells += "," + fixed6(r);
  return cells;
}

// Column-aligned rendering of a CSV string for terminal output.
std::string pretty_table(const std::string& csv) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(csv);
  std::string line;
  std::vector<std::size_t> width;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (width.size() < cells.size()) width.resize(cells.size(), 0);
    for (std::size_t i = 0; i < cells.size(); ++i) width[i] = std::max(width[i], cells[i].size());
    rows.push_back(std::move(cells));
  }
  std::string out;
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      out += row[i];
      if (i + 1 < row.size()) out += std::string(width[i] - row[i].size() + 2, ' ');
    }
    out += '\n';
  }
  return out;
}

}  // namespace

std::string cmd_train(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  const RunVariant variant{cfg.method, std::nullopt, std::nullopt, AugmentStrength::kWeak};
  const std::array variants{variant};
  auto runs = run_grid(cfg, variants);
  write_run_artifacts(out / cfg.method, cfg.method, variant, runs[0]);
  return summary_line(cfg.method, summarize(runs[0]));
}

std::string cmd_compare(const ExperimentConfig& cfg, const std::vector<std::string>& methods,
                        const std::filesystem::path& out) {
  if (methods.size() < 2) throw ConfigError("compare needs at least 2 methods");
  std::vector<RunVariant> variants;
  for (const auto& m : methods) {
    find_method(m);
    variants.push_back({m, std::nullopt, std::nullopt, AugmentStrength::kWeak});
  }
  auto runs = run_grid(cfg, variants);
  std::vector<MetricSummary> sums;
  for (const auto& r : runs) sums.push_back(summarize(r));
  const auto base_it = std::find(methods.begin(), methods.end(), "uda");
  const std::size_t base = base_it == methods.end() ? 0 : static_cast<std::size_t>(base_it - methods.begin());

  std::string csv = "Algorithms,UAR,G-mean,Average AUC" + recall_headers(sums[0].recall_mean.size()) +
                    ",UAR delta vs " + methods[base] + "\n";
  for (std::size_t i = 0; i < methods.size(); ++i) {
    const double delta = sums[i].uar_mean - sums[base].uar_mean;
    csv += methods[i] + "," + fixed6(sums[i].uar_mean) + "," + fixed6(sums[i].g_mean_mean) + "," +
           fixed6(sums[i].avg_auc_mean) + recall_cells(sums[i]) + "," + fmt("%+.6f", delta) + "\n";
  }
  ensure_dir(out);
  write_text(out / "compare.csv", csv);
  for (std::size_t i = 0; i < methods.size(); ++i) {
    write_run_artifacts(out / methods[i], methods[i], variants[i], runs[i]);
  }
  return pretty_table(csv);
}

std::string cmd_sweep_gamma(const ExperimentConfig& cfg, std::vector<double> gammas,
                            const std::vector<BlendingMode>& blendings, const std::filesystem::path& out) {
  if (gammas.empty()) throw ConfigError("no gamma values given");
  for (double g : gammas) {
    if (!(g > 0.0 && g <= 1.0)) throw ConfigError("gamma " + fmt("%g", g) + " is outside (0,1]");
  }
  if (blendings.empty()) throw ConfigError("no blending mode given");
  std::sort(gammas.begin(), gammas.end());
  gammas.erase(std::unique(gammas.begin(), gammas.end()), gammas.end());
  const auto& method = find_method(cfg.method);
  const std::string base = method.consistency == ConsistencyKind::kAbcl ? std::string(method.name) : "uda-abcl";

  std::vector<RunVariant> variants;
  for (auto mode : blendings) {
    for (double g : gammas) variants.push_back({base, g, mode, AugmentStrength::kWeak});
  }
  auto runs = run_grid(cfg, variants);
  const std::size_t n_classes = runs[0][0].test.per_class_recall.size();
  std::string csv = "blending,gamma" + recall_headers(n_classes) + ",UAR\n";
  ensure_dir(out);
  for (std::size_t i = 0; i < variants.size(); ++i) {
    const auto s = summarize(runs[i]);
    const auto mode = std::string(to_string(*variants[i].blending));
    csv += mode + "," + gamma_label(*variants[i].gamma) + recall_cells(s) + "," + fixed6(s.uar_mean) + "\n";
    const std::string label = base + "-" + mode + "-gamma" + gamma_label(*variants[i].gamma);
    write_run_artifacts(out / "sweep" / label, label, variants[i], runs[i]);
  }
  write_text(out / "sweep_gamma.csv", csv);
  return pretty_table(csv);
}

std::string cmd_ablate_aug(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  std::vector<RunVariant> variants;
  for (const char* m : {"uda", "uda-abcl"}) {
    for (auto s : {AugmentStrength::kWeak, AugmentStrength::kStrong}) variants.push_back({m, std::nullopt, std::nullopt, s});
  }
  auto runs = run_grid(cfg, variants);
  std::string csv = "method,augmentation,UAR,G-mean,Average AUC\n";
  ensure_dir(out);
  for (std::size_t i = 0; i < variants.size(); ++i) {
    const auto s = summarize(runs[i]);
    const std::string strength = variants[i].strength == AugmentStrength::kStrong ? "strong" : "weak";
    csv += variants[i].method + "," + strength + "," + fixed6(s.uar_mean) + "," + fixed6(s.g_mean_mean) + "," +
           fixed6(s.avg_auc_mean) + "\n";
    const std::string label = variants[i].method + "-" + strength;
    write_run_artifacts(out / "ablate" / label, label, variants[i], runs[i]);
  }
  write_text(out / "ablate_aug.csv", csv);
  return pretty_table(csv);
}

std::string cmd_evaluate(const ExperimentConfig& cfg, const std::filesystem::path& out,
                         const std::optional<std::filesystem::path>& checkpoint) {
  find_method(cfg.method);
  std::string report;
  const auto dir = out / cfg.method;
  ensure_dir(dir);
  for (auto seed : cfg.seeds) {
    const auto ckpt = checkpoint.value_or(dir / (seed_stem(seed) + ".ckpt"));
    if (!std::filesystem::exists(ckpt)) throw ConfigError("checkpoint not found: " + ckpt.string());
    const auto model = MlpClassifier::load(ckpt);
    const auto data = prepare_data(cfg, seed);
    const auto metrics = evaluate(model, data.test);
    write_text(dir / (seed_stem(seed) + "_eval.json"), report_to_json(metrics) + "\n");
    write_roc_csv(model, data.test, dir / (seed_stem(seed) + "_roc.csv"));
    report += seed_stem(seed) + ": UAR " + fixed6(metrics.uar) + ", G-mean " + fixed6(metrics.g_mean) +
              ", avg AUC " + fixed6(metrics.avg_auc) + "\n";
  }
  return report;
}

}  // namespace imbassl

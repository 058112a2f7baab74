#include "tshape/cli.hpp"

#include "tshape/baselines.hpp"
#include "tshape/checkpoint.hpp"
#include "tshape/config.hpp"
#include "tshape/detection.hpp"
#include "tshape/errors.hpp"
#include "tshape/metrics.hpp"
#include "tshape/svg.hpp"
#include "tshape/synth.hpp"
#include "tshape/training.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>

namespace tshape::cli {

namespace {

namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void require_file(const fs::path& path, std::string_view what) {
  if (!fs::is_regular_file(path)) throw UsageError(std::string(what) + " not found: " + path.string());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::ios_base::failure("cannot write " + path.string());
  out << text;
  if (!out) throw std::ios_base::failure("failed writing " + path.string());
}

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string s;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) s += sep;
    s += parts[i];
  }
  return s;
}

// One manifest per command, written next to the primary output. Every field
// except duration_seconds is a function of the flags and input bytes.
class Manifest {
 public:
  Manifest(std::string command, const std::vector<std::string>& args)
      : start_(std::chrono::steady_clock::now()) {
    doc_.set("format", "tshape-manifest");
    doc_.set("command", std::move(command));
    doc_.set("args", join(args, ' '));
  }

  void seed(std::uint64_t s) { doc_.set_int("seed", static_cast<std::int64_t>(s)); }
  void config(const KeyValueDoc& snapshot) {
    for (const auto& [k, v] : snapshot.entries()) doc_.set("config." + k, v);
  }
  void input(const std::string& role, const fs::path& p) { inputs_.emplace_back(role, p); }
  void output(const std::string& role, const fs::path& p) { outputs_.emplace_back(role, p); }
  void result(const std::string& key, std::string value) { doc_.set("result." + key, std::move(value)); }
  void result(const std::string& key, double value) { doc_.set("result." + key, value); }
  void result_int(const std::string& key, std::int64_t value) { doc_.set_int("result." + key, value); }

  void write(const fs::path& path) {
    for (const auto& [role, p] : inputs_) {
      doc_.set("input." + role, p.string());
      doc_.set("input." + role + ".checksum", file_checksum(p));
    }
    for (const auto& [role, p] : outputs_) {
      doc_.set("output." + role, p.string());
      doc_.set("output." + role + ".checksum", file_checksum(p));
    }
    const std::chrono::duration<double> took = std::chrono::steady_clock::now() - start_;
    doc_.set("duration_seconds", took.count());
    doc_.save(path);
  }

 private:
  KeyValueDoc doc_;
  std::chrono::steady_clock::time_point start_;
  std::vector<std::pair<std::string, fs::path>> inputs_, outputs_;
};

fs::path manifest_path(const fs::path& primary) { return fs::path(primary.string() + ".manifest"); }

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "key-value document overriding defaults");
    app->add_option("--seed", seed, "random seed");
  }

  KeyValueDoc load() const {
    KeyValueDoc doc;
    if (!config_path.empty()) {
      require_file(config_path, "config file");
      doc = KeyValueDoc::load(config_path);
      check_config_keys(doc);
    }
    if (seed) doc.set_int("seed", static_cast<std::int64_t>(*seed));
    return doc;
  }
};

std::uint64_t seed_of(const KeyValueDoc& doc) {
  const auto v = doc.find("seed");
  if (!v) return 0;
  const auto s = parse_int(*v);
  if (s < 0) throw ConfigError("seed must be non-negative");
  return static_cast<std::uint64_t>(s);
}

template <class T>
void override_key(KeyValueDoc& doc, const std::string& key, const std::optional<T>& flag) {
  if (!flag) return;
  if constexpr (std::is_same_v<T, std::string>) doc.set(key, *flag);
  else if constexpr (std::is_floating_point_v<T>) doc.set(key, *flag);
  else doc.set_int(key, static_cast<std::int64_t>(*flag));
}

Checkpoint read_checkpoint(const fs::path& path) {
  require_file(path, "checkpoint");
  try {
    return load_checkpoint(path);
  } catch (const DimensionError& e) {
    throw ParseError(path.string() + ": " + e.what());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

TimeSeries read_series(const fs::path& path) {
  require_file(path, "input series");
  return load_csv(path);
}

void put_sweep(KeyValueDoc& doc, const std::string& prefix, const SweepResult& r) {
  doc.set(prefix + ".f1", r.best.f1);
  doc.set(prefix + ".precision", r.best.precision);
  doc.set(prefix + ".recall", r.best.recall);
  doc.set_int(prefix + ".tp", static_cast<std::int64_t>(r.best.tp));
  doc.set_int(prefix + ".fp", static_cast<std::int64_t>(r.best.fp));
  doc.set_int(prefix + ".fn", static_cast<std::int64_t>(r.best.fn));
  doc.set(prefix + ".threshold", r.threshold);
}

std::string matrix_csv(const RowMatrix& m) {
  std::string s;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) s += ',';
      s += format_double(m(i, j));
    }
    s += '\n';
  }
  return s;
}

RowMatrix head_average(const std::vector<RowMatrix>& heads) {
  RowMatrix avg = RowMatrix::Zero(heads.front().rows(), heads.front().cols());
  for (const auto& h : heads) avg += h;
  return avg / static_cast<double>(heads.size());
}

// ---------------------------------------------------------------- synth

struct SynthFlags {
  Common common;
  std::string output;
  std::optional<std::size_t> periods, period, anomalies;
  std::optional<std::string> kinds;
  std::optional<double> noise, peak1, peak2, train_fraction;
};

void cmd_synth(const SynthFlags& f, const std::vector<std::string>& args, std::ostream& out) {
  Manifest manifest("synth", args);
  KeyValueDoc doc = f.common.load();
  override_key(doc, "synth.periods", f.periods);
  override_key(doc, "synth.period_len", f.period);
  override_key(doc, "synth.anomalies", f.anomalies);
  override_key(doc, "synth.kinds", f.kinds);
  override_key(doc, "synth.noise_sigma", f.noise);
  override_key(doc, "synth.peak1_amp", f.peak1);
  override_key(doc, "synth.peak2_amp", f.peak2);
  override_key(doc, "synth.train_fraction", f.train_fraction);
  SynthConfig config = read_synth_config(doc);
  config.seed = seed_of(doc);
  config.validate();

  const auto result = synth_generate_detailed(config);
  const fs::path series_path = f.output;
  write_csv(result.series, series_path);
  std::string listing = "kind,begin,end\n";
  for (const auto& a : result.anomalies)
    listing += std::string(to_string(a.kind)) + ',' + std::to_string(a.begin) + ',' + std::to_string(a.end) + '\n';
  const fs::path anomalies_path = series_path.string() + ".anomalies.csv";
  write_text(anomalies_path, listing);

  KeyValueDoc snapshot;
  write_synth_config(config, snapshot);
  manifest.seed(config.seed);
  manifest.config(snapshot);
  manifest.output("series", series_path);
  manifest.output("anomalies", anomalies_path);
  manifest.result_int("points", static_cast<std::int64_t>(result.series.size()));
  manifest.result_int("split_index", static_cast<std::int64_t>(result.series.split_index));
  manifest.result_int("anomalies", static_cast<std::int64_t>(result.anomalies.size()));
  manifest.write(manifest_path(series_path));
  out << "wrote " << result.series.size() << " points (split at " << result.series.split_index << ", "
      << result.anomalies.size() << " anomalies) to " << series_path.string() << '\n';
}

// ---------------------------------------------------------------- train

struct TrainFlags {
  Common common;
  std::string input, output, history;
  std::optional<std::size_t> window, patch, channels, heads_local, heads_global;
  std::optional<std::string> kernels, ablation;
  std::optional<std::size_t> epochs, batch_size, stride, patience;
  std::optional<double> lr, val_fraction;
  bool quiet = false;
};

void cmd_train(const TrainFlags& f, const std::vector<std::string>& args, std::ostream& out) {
  Manifest manifest("train", args);
  KeyValueDoc doc = f.common.load();
  override_key(doc, "model.window", f.window);
  override_key(doc, "model.patch", f.patch);
  override_key(doc, "model.kernel_sizes", f.kernels);
  override_key(doc, "model.channels_per_scale", f.channels);
  override_key(doc, "model.heads_local", f.heads_local);
  override_key(doc, "model.heads_global", f.heads_global);
  override_key(doc, "model.ablation", f.ablation);
  override_key(doc, "train.epochs", f.epochs);
  override_key(doc, "train.batch_size", f.batch_size);
  override_key(doc, "train.stride", f.stride);
  override_key(doc, "train.patience", f.patience);
  override_key(doc, "train.lr", f.lr);
  override_key(doc, "train.validation_fraction", f.val_fraction);
  const ModelConfig model_config = read_model_config(doc);
  model_config.validate();
  TrainConfig train_config = read_train_config(doc);
  train_config.seed = seed_of(doc);
  train_config.validate();

  const fs::path input = f.input;
  const TimeSeries series = read_series(input);
  const Normalization norm = zscore_normalize(series);
  const TrainResult result = train(norm.series, model_config, train_config, [&](const EpochRecord& r) {
    if (!f.quiet)
      out << "epoch " << r.epoch << "  train " << format_double(r.train_loss) << "  val "
          << format_double(r.val_loss) << '\n';
  });

  const fs::path checkpoint_path = f.output;
  save_checkpoint({result.params, model_config, norm.mean, norm.stddev}, checkpoint_path);
  const fs::path history_path = f.history.empty() ? fs::path(f.output + ".history.csv") : fs::path(f.history);
  std::string history = "epoch,train_loss,val_loss,best_val_loss\n";
  for (const auto& r : result.history)
    history += std::to_string(r.epoch) + ',' + format_double(r.train_loss) + ',' + format_double(r.val_loss) + ',' +
               format_double(r.best_val_loss) + '\n';
  write_text(history_path, history);

  KeyValueDoc snapshot;
  write_model_config(model_config, snapshot);
  write_train_config(train_config, snapshot);
  manifest.seed(train_config.seed);
  manifest.config(snapshot);
  manifest.input("series", input);
  manifest.output("checkpoint", checkpoint_path);
  manifest.output("history", history_path);
  manifest.result_int("epochs_run", static_cast<std::int64_t>(result.history.size()));
  manifest.result_int("best_epoch", static_cast<std::int64_t>(result.best_epoch));
  manifest.result("best_val_loss", result.best_val_loss);
  manifest.result_int("fit_windows", static_cast<std::int64_t>(result.fit_windows));
  manifest.result_int("val_windows", static_cast<std::int64_t>(result.val_windows));
  manifest.result("norm_mean", norm.mean);
  manifest.result("norm_stddev", norm.stddev);
  manifest.write(manifest_path(checkpoint_path));
  out << "best epoch " << result.best_epoch << " (val " << format_double(result.best_val_loss) << "), checkpoint "
      << checkpoint_path.string() << '\n';
}

// ---------------------------------------------------------------- score

struct ScoreFlags {
  Common common;
  std::string checkpoint, input, output;
  std::size_t batch_size = 64;
};

void cmd_score(const ScoreFlags& f, const std::vector<std::string>& args, std::ostream& out) {
  Manifest manifest("score", args);
  const KeyValueDoc doc = f.common.load();
  if (f.batch_size == 0) throw ConfigError("--batch-size must be positive");
  const fs::path checkpoint_path = f.checkpoint, input = f.input, output = f.output;
  Checkpoint ck = read_checkpoint(checkpoint_path);
  const TimeSeries series = read_series(input);
  const Normalization norm = apply_normalization(series, ck.norm_mean, ck.norm_stddev);
  const ScoreSeries scores = score_series(ck.params, ck.config, norm.series, f.batch_size);
  write_scores_csv(scores, output);

  KeyValueDoc snapshot;
  write_model_config(ck.config, snapshot);
  manifest.seed(seed_of(doc));
  manifest.config(snapshot);
  manifest.input("checkpoint", checkpoint_path);
  manifest.input("series", input);
  manifest.output("scores", output);
  manifest.result_int("scores", static_cast<std::int64_t>(scores.size()));
  manifest.result_int("first_index", static_cast<std::int64_t>(scores.first_index));
  manifest.result_int("valid_from", static_cast<std::int64_t>(scores.valid_from));
  manifest.write(manifest_path(output));
  out << "wrote " << scores.size() << " scores to " << output.string() << '\n';
}

// ---------------------------------------------------------------- eval

struct EvalFlags {
  Common common;
  std::string scores, input, output, baseline, baseline_output;
  std::optional<std::size_t> ar_order, subseq_length;
};

void cmd_eval(const EvalFlags& f, const std::vector<std::string>& args, std::ostream& out) {
  Manifest manifest("eval", args);
  KeyValueDoc doc = f.common.load();
  override_key(doc, "baseline.ar_order", f.ar_order);
  override_key(doc, "baseline.subseq_length", f.subseq_length);
  const BaselineConfig baseline_config = read_baseline_config(doc);
  const fs::path scores_path = f.scores, input = f.input, output = f.output;
  require_file(scores_path, "scores file");
  const ScoreSeries scores = load_scores_csv(scores_path);
  const TimeSeries series = read_series(input);
  if (scores.first_index != series.split_index || scores.size() != series.test_size())
    throw DimensionError("scores cover indices [" + std::to_string(scores.first_index) + ", " +
                         std::to_string(scores.first_index + scores.size()) + ") but the test region is [" +
                         std::to_string(series.split_index) + ", " + std::to_string(series.size()) + ")");
  const std::span<const std::uint8_t> labels(series.labels.data() + series.split_index, series.test_size());
  const unsigned threads = thread_budget();

  KeyValueDoc report;
  report.set("format", "tshape-eval");
  report.set_int("test_points", static_cast<std::int64_t>(labels.size()));
  report.set_int("test_events", static_cast<std::int64_t>(extract_events(labels).size()));
  const EvalReport main = evaluate(scores.scores, labels, threads);
  put_sweep(report, "point", main.point);
  put_sweep(report, "event", main.event);

  if (!f.baseline.empty()) {
    const Normalization norm = zscore_normalize(series);
    std::vector<double> b;
    if (f.baseline == "ar") {
      b = ar_score(norm.series.values, ar_fit(norm.series.train_values(), baseline_config.ar_order),
                   series.split_index);
    } else {
      b = subseq_score(norm.series.values, subseq_build(norm.series.train_values(), baseline_config.subseq_length),
                       series.split_index);
    }
    const EvalReport base = evaluate(b, labels, threads);
    report.set("baseline.name", f.baseline);
    put_sweep(report, "baseline.point", base.point);
    put_sweep(report, "baseline.event", base.event);
    if (!f.baseline_output.empty()) {
      write_scores_csv(make_score_series(std::move(b), series.split_index, 0), f.baseline_output);
      manifest.output("baseline_scores", f.baseline_output);
    }
  }
  report.save(output);
  out << report.to_string();

  KeyValueDoc snapshot;
  if (!f.baseline.empty()) write_baseline_config(baseline_config, snapshot);
  manifest.seed(seed_of(doc));
  manifest.config(snapshot);
  manifest.input("scores", scores_path);
  manifest.input("series", input);
  manifest.output("report", output);
  manifest.write(manifest_path(output));
}

// ---------------------------------------------------------------- export-attn

struct ExportFlags {
  Common common;
  std::string checkpoint, input, output_dir;
  std::size_t time = 0;
  bool svg = false;
};

void cmd_export_attn(const ExportFlags& f, const std::vector<std::string>& args, std::ostream& out) {
  Manifest manifest("export-attn", args);
  const KeyValueDoc doc = f.common.load();
  const fs::path checkpoint_path = f.checkpoint, input = f.input, dir = f.output_dir;
  Checkpoint ck = read_checkpoint(checkpoint_path);
  const TimeSeries series = read_series(input);
  const std::size_t t = f.time;
  if (t < series.split_index || t >= series.size())
    throw UsageError("time index " + std::to_string(t) + " is outside the test region [" +
                     std::to_string(series.split_index) + ", " + std::to_string(series.size()) + ")");

  const Normalization norm = apply_normalization(series, ck.norm_mean, ck.norm_stddev);
  const std::size_t T = ck.config.window, s = ck.config.patch, P = ck.config.patch_count();
  const Window w = window_ending_at(norm.series.values, t, T);
  const ForwardResult fr = [&] {
    NoGradGuard no_grad;
    return forward(Tensor({T}, w.values), ck.params, ck.config, NormMode::eval);
  }();
  fs::create_directories(dir);

  auto emit = [&](const std::string& name, const std::string& text) {
    const fs::path p = dir / name;
    write_text(p, text);
    manifest.output(name, p);
  };

  std::optional<RowMatrix> global;
  if (!fr.trace.global_attention.empty()) {
    global = head_average(fr.trace.global_attention);
    emit("global_attention.csv", matrix_csv(*global));
    if (f.svg) emit("global_attention.svg", heatmap_svg(*global, "global attention (patch x patch), t=" + std::to_string(t)));
  }
  if (!fr.trace.local_attention.empty()) {
    const RowMatrix local = head_average(fr.trace.local_attention);
    emit("local_attention.csv", matrix_csv(local));
    if (f.svg) emit("local_attention.svg", heatmap_svg(local, "local attention (channel x channel), t=" + std::to_string(t)));
  }
  if (fr.trace.gate.defined()) {
    const auto g = fr.trace.gate.matrix();
    std::string text = "patch,gate_mean\n";
    for (Eigen::Index i = 0; i < g.rows(); ++i) text += std::to_string(i) + ',' + format_double(g.row(i).mean()) + '\n';
    emit("gate.csv", text);
  }

  // Labels of the window positions; left padding counts as clean.
  std::vector<std::uint8_t> window_labels(T, 0);
  for (std::size_t j = 0; j < T; ++j) {
    const std::size_t back = T - 1 - j;
    if (back <= t) window_labels[j] = series.labels[t - back];
  }
  const auto recon = fr.reconstruction.values();
  std::string text = "position,index,value,reconstruction,label\n";
  std::vector<double> values(T), rec(T);
  for (std::size_t j = 0; j < T; ++j) {
    const std::size_t back = T - 1 - j;
    values[j] = w.values[static_cast<Eigen::Index>(j)];
    rec[j] = recon[static_cast<Eigen::Index>(j)];
    text += std::to_string(j) + ',' + (back <= t ? std::to_string(t - back) : std::string("pad")) + ',' +
            format_double(values[j]) + ',' + format_double(rec[j]) + ',' + std::to_string(window_labels[j]) + '\n';
  }
  emit("window.csv", text);
  if (f.svg) {
    const std::vector<LineSeries> lines{{"input", values, "#1f77b4"}, {"reconstruction", rec, "#d62728"}};
    emit("window.svg", line_plot_svg(lines, "window ending at t=" + std::to_string(t)));
  }

  // Attention each patch receives from the other patches, anomalous vs clean.
  if (global && P > 1) {
    double anomalous = 0.0, clean = 0.0;
    std::size_t n_anomalous = 0, n_clean = 0;
    for (std::size_t j = 0; j < P; ++j) {
      bool hit = false;
      for (std::size_t k = j * s; k < (j + 1) * s; ++k) hit = hit || window_labels[k];
      double received = 0.0;
      for (std::size_t i = 0; i < P; ++i)
        if (i != j) received += (*global)(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      received /= static_cast<double>(P - 1);
      (hit ? anomalous : clean) += received;
      ++(hit ? n_anomalous : n_clean);
    }
    manifest.result_int("anomalous_patches", static_cast<std::int64_t>(n_anomalous));
    if (n_anomalous > 0 && n_clean > 0) {
      anomalous /= static_cast<double>(n_anomalous);
      clean /= static_cast<double>(n_clean);
      manifest.result("received_attention_anomalous", anomalous);
      manifest.result("received_attention_clean", clean);
      manifest.result("received_attention_margin", anomalous - clean);
      out << "anomalous patches: " << n_anomalous << ", received attention " << format_double(anomalous)
          << " vs clean " << format_double(clean) << " (margin " << format_double(anomalous - clean) << ")\n";
    }
  }

  KeyValueDoc snapshot;
  write_model_config(ck.config, snapshot);
  manifest.seed(seed_of(doc));
  manifest.config(snapshot);
  manifest.input("checkpoint", checkpoint_path);
  manifest.input("series", input);
  manifest.result_int("time", static_cast<std::int64_t>(t));
  manifest.write(dir / "export.manifest");
  out << "exported attention for the window ending at " << t << " to " << dir.string() << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"TShape time-series anomaly detection", "tshape"};
  app.require_subcommand(1);
  std::function<void()> action;

  SynthFlags synth;
  auto* sc = app.add_subcommand("synth", "generate a double-peak series with injected anomalies");
  synth.common.attach(sc);
  sc->add_option("-o,--output", synth.output, "output series CSV")->required();
  sc->add_option("--periods", synth.periods, "number of periods");
  sc->add_option("--period", synth.period, "samples per period");
  sc->add_option("--anomalies", synth.anomalies, "number of injected anomalies");
  sc->add_option("--kinds", synth.kinds, "comma-separated anomaly kinds");
  sc->add_option("--noise", synth.noise, "Gaussian noise standard deviation");
  sc->add_option("--peak1", synth.peak1, "first bump amplitude");
  sc->add_option("--peak2", synth.peak2, "second bump amplitude");
  sc->add_option("--train-fraction", synth.train_fraction, "fraction of periods before the split");
  sc->callback([&] { action = [&] { cmd_synth(synth, args, out); }; });

  TrainFlags tr;
  auto* tc = app.add_subcommand("train", "fit a model on the training region of a series");
  tr.common.attach(tc);
  tc->add_option("-i,--input", tr.input, "input series CSV")->required();
  tc->add_option("-o,--output", tr.output, "output checkpoint")->required();
  tc->add_option("--history", tr.history, "loss history CSV (default: <output>.history.csv)");
  tc->add_option("--window", tr.window, "window length");
  tc->add_option("--patch", tr.patch, "patch length");
  tc->add_option("--kernels", tr.kernels, "comma-separated odd kernel sizes");
  tc->add_option("--channels", tr.channels, "channels per kernel size");
  tc->add_option("--heads-local", tr.heads_local, "heads of the channel-token attention");
  tc->add_option("--heads-global", tr.heads_global, "heads of the patch-token attention");
  tc->add_option("--ablation", tr.ablation, "full|no_local|no_global|no_conv|sliding_window");
  tc->add_option("--epochs", tr.epochs, "maximum epochs");
  tc->add_option("--batch-size", tr.batch_size, "windows per batch");
  tc->add_option("--lr", tr.lr, "Adam learning rate");
  tc->add_option("--stride", tr.stride, "training window stride (0: patch length)");
  tc->add_option("--patience", tr.patience, "early-stopping patience in epochs");
  tc->add_option("--val-fraction", tr.val_fraction, "tail fraction of the training region used for validation");
  tc->add_flag("-q,--quiet", tr.quiet, "suppress per-epoch output");
  tc->callback([&] { action = [&] { cmd_train(tr, args, out); }; });

  ScoreFlags sf;
  auto* scc = app.add_subcommand("score", "score every test point of a series");
  sf.common.attach(scc);
  scc->add_option("-c,--checkpoint", sf.checkpoint, "checkpoint from train")->required();
  scc->add_option("-i,--input", sf.input, "input series CSV")->required();
  scc->add_option("-o,--output", sf.output, "output index,score CSV")->required();
  scc->add_option("--batch-size", sf.batch_size, "windows per forward pass");
  scc->callback([&] { action = [&] { cmd_score(sf, args, out); }; });

  EvalFlags ef;
  auto* ec = app.add_subcommand("eval", "best point-F1 and event-F1 of a score file");
  ef.common.attach(ec);
  ec->add_option("-s,--scores", ef.scores, "index,score CSV")->required();
  ec->add_option("-i,--input", ef.input, "labelled series CSV")->required();
  ec->add_option("-o,--output", ef.output, "output report")->required();
  ec->add_option("--baseline", ef.baseline, "also evaluate a baseline on the same series")
      ->check(CLI::IsMember({"ar", "subseq"}));
  ec->add_option("--baseline-output", ef.baseline_output, "write the baseline's scores to this CSV");
  ec->add_option("--ar-order", ef.ar_order, "AR lag order");
  ec->add_option("--subseq-length", ef.subseq_length, "subsequence length");
  ec->callback([&] { action = [&] { cmd_eval(ef, args, out); }; });

  ExportFlags xf;
  auto* xc = app.add_subcommand("export-attn", "export attention matrices for the window ending at t");
  xf.common.attach(xc);
  xc->add_option("-c,--checkpoint", xf.checkpoint, "checkpoint from train")->required();
  xc->add_option("-i,--input", xf.input, "input series CSV")->required();
  xc->add_option("-t,--time", xf.time, "series index of the window's last point")->required();
  xc->add_option("-o,--output-dir", xf.output_dir, "output directory")->required();
  xc->add_flag("--svg", xf.svg, "also write SVG plots");
  xc->callback([&] { action = [&] { cmd_export_attn(xf, args, out); }; });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  try {
    action();
    return kExitOk;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::ios_base::failure& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace tshape::cli

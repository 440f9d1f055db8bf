#include "ecgr/cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>

#include "ecgr/checkpoint.hpp"
#include "ecgr/cyclegan.hpp"
#include "ecgr/ecg_data.hpp"
#include "ecgr/errors.hpp"
#include "ecgr/evaluation.hpp"
#include "ecgr/peak_eval.hpp"
#include "ecgr/plot.hpp"
#include "ecgr/record_io.hpp"

namespace fs = std::filesystem;

namespace ecgr::cli {

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// command, config snapshot, seed, version, timestamps, paths.
struct RunManifest {
  std::string command;
  KeyValues config;
  std::string seed = "none";
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::string started = utc_now();

  void write(const fs::path& path) const {
    KeyValues kv;
    kv["command"] = command;
    kv["code_version"] = kVersion;
    kv["seed"] = seed;
    kv["started_utc"] = started;
    kv["finished_utc"] = utc_now();
    for (std::size_t i = 0; i < inputs.size(); ++i) kv["input." + std::to_string(i)] = inputs[i];
    for (std::size_t i = 0; i < outputs.size(); ++i) kv["output." + std::to_string(i)] = outputs[i];
    for (const auto& [k, v] : config) kv["config." + k] = v;
    write_text_file(path, format_key_values(kv));
  }
};

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
}

void log(const std::string& msg) { std::cerr << msg << '\n'; }

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
  std::string out;
  std::size_t count = 100;
  double bpm = 60.0;
  double bpm_max = 0.0;
  double duration_s = 10.0;
  double arrhythmia_fraction = 0.334;
  std::string artifacts;
  std::string snr;
  double wander_mv = 0.3;
  double random_cut_s = 1.0;
  std::uint64_t seed = 1;
};

int cmd_synth(const SynthArgs& a) {
  CorpusOptions o;
  o.count = a.count;
  o.bpm_min = a.bpm;
  o.bpm_max = a.bpm_max > 0.0 ? a.bpm_max : a.bpm;
  o.duration_s = a.duration_s;
  o.arrhythmia_fraction = a.arrhythmia_fraction;
  o.seed = a.seed;
  o.random_cut_s = a.random_cut_s;
  if (!a.artifacts.empty()) {
    o.artifacts = parse_artifact_spec(read_text_file(a.artifacts));
  } else {
    o.artifacts.noise_snr_db = 0.0;
    o.artifacts.wander_amplitude_mv = a.wander_mv;
  }
  if (!a.snr.empty()) {
    if (a.snr == "none") {
      o.artifacts.noise_snr_db.reset();
    } else {
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(a.snr.data(), a.snr.data() + a.snr.size(), v);
      if (ec != std::errc() || ptr != a.snr.data() + a.snr.size() || !std::isfinite(v))
        throw ConfigError("--snr expects a finite number of dB or 'none', got '" + a.snr + "'");
      o.artifacts.noise_snr_db = v;
    }
  }
  const SyntheticCorpus corpus = make_synthetic_corpus(o);

  const fs::path out(a.out);
  ensure_dir(out / "clean");
  ensure_dir(out / "corrupted");
  for (const auto& r : corpus.clean) write_record(out / "clean", r);
  for (const auto& r : corpus.corrupted) write_record(out / "corrupted", r);
  write_text_file(out / "artifacts.cfg", format_artifact_spec(o.artifacts));

  RunManifest m;
  m.command = "synth";
  m.seed = std::to_string(a.seed);
  m.config = {{"count", std::to_string(a.count)},
              {"bpm_min", format_double(o.bpm_min)},
              {"bpm_max", format_double(o.bpm_max)},
              {"duration_s", format_double(o.duration_s)},
              {"arrhythmia_fraction", format_double(o.arrhythmia_fraction)},
              {"random_cut_s", format_double(o.random_cut_s)},
              {"artifacts", a.artifacts.empty() ? "(built-in)" : a.artifacts}};
  if (!a.artifacts.empty()) m.inputs.push_back(a.artifacts);
  m.outputs = {(out / "clean").string(), (out / "corrupted").string(), (out / "artifacts.cfg").string()};
  m.write(out / "manifest.txt");
  log("wrote " + std::to_string(corpus.clean.size()) + " clean and " + std::to_string(corpus.corrupted.size()) +
      " corrupted records to " + out.string());
  return kExitOk;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string clean_dir;
  std::string corrupted_dir;
  std::string out;
  std::string resume;
  std::size_t q = 3;
  std::size_t iters = 1000;
  std::size_t batch = 8;
  double lr = 1e-5;
  double lambda = 10.0;
  double beta = 5.0;
  std::uint64_t seed = 1;
  std::size_t checkpoint_every = 100;
  std::size_t pool_size = 0;
  double arrhythmia_fraction = 0.334;
  bool allow_shortfall = false;
};

std::vector<Segment> load_segments(const std::string& dir, Quality tag) {
  if (!fs::is_directory(dir)) throw InputError("not a directory: " + dir);
  std::vector<Segment> out;
  for (const Record& r : read_record_dir(dir)) {
    for (auto& s : segment_record(r)) {
      s.quality = tag;
      out.push_back(std::move(s));
    }
  }
  if (out.empty()) throw InputError("no whole 10 s segments found in " + dir);
  return out;
}

void append_normalized(std::vector<std::vector<double>>& pool, const std::vector<Segment>& segments) {
  for (const auto& s : segments) {
    Segment n = normalize(s);
    if (!n.degenerate) pool.push_back(std::move(n.samples));
  }
}

int cmd_train(const TrainArgs& a) {
  TrainConfig cfg;
  cfg.q_order = a.q;
  cfg.max_iterations = a.iters;
  cfg.batch_size = a.batch;
  cfg.lr = a.lr;
  cfg.lambda_cyc = a.lambda;
  cfg.beta_ide = a.beta;
  cfg.seed = a.seed;
  cfg.validate();

  auto clean = load_segments(a.clean_dir, Quality::clean);
  auto corrupted = load_segments(a.corrupted_dir, Quality::corrupted);
  UnpairedDataset data;
  if (a.pool_size > 0) {
    std::vector<Segment> all = std::move(clean);
    all.insert(all.end(), corrupted.begin(), corrupted.end());
    const TrainingPools pools = compose_training_set(all, a.arrhythmia_fraction, a.pool_size, a.seed, a.allow_shortfall);
    append_normalized(data.clean, pools.clean);
    append_normalized(data.corrupted, pools.corrupted);
  } else {
    append_normalized(data.clean, clean);
    append_normalized(data.corrupted, corrupted);
  }
  if (data.clean.empty() || data.corrupted.empty()) throw InputError("training pools are empty");

  CycleGanModel model;
  if (!a.resume.empty()) {
    LoadedCheckpoint ck = load_checkpoint(a.resume);
    if (ck.config.q_order != cfg.q_order || ck.config.seed != cfg.seed)
      throw InputError("--resume checkpoint was trained with different --q/--seed");
    model = std::move(ck.model);
  } else {
    model = make_model(cfg);
  }

  const fs::path out(a.out);
  ensure_dir(out);
  RunManifest m;
  m.command = "train";
  m.seed = std::to_string(cfg.seed);
  m.config = {{"q", std::to_string(cfg.q_order)},     {"iters", std::to_string(cfg.max_iterations)},
              {"batch", std::to_string(cfg.batch_size)}, {"lr", format_double(cfg.lr)},
              {"lambda", format_double(cfg.lambda_cyc)}, {"beta", format_double(cfg.beta_ide)},
              {"adam_beta1", format_double(cfg.adam_beta1)}, {"adam_beta2", format_double(cfg.adam_beta2)},
              {"adam_epsilon", format_double(cfg.adam_epsilon)},
              {"checkpoint_every", std::to_string(a.checkpoint_every)},
              {"pool_size", std::to_string(a.pool_size)},
              {"clean_segments", std::to_string(data.clean.size())},
              {"corrupted_segments", std::to_string(data.corrupted.size())},
              {"start_iteration", std::to_string(model.iteration)},
              {"parameters_gx2c", std::to_string(model.gx2c.parameter_count())}};
  m.inputs = {a.clean_dir, a.corrupted_dir};
  if (!a.resume.empty()) m.inputs.push_back(a.resume);

  const std::uint64_t first = model.iteration + 1;
  std::vector<LossBundle> history;
  FitOptions opts;
  opts.checkpoint_every = a.checkpoint_every;
  opts.checkpoint_sink = [&](const CycleGanModel& snapshot) {
    char name[64];
    std::snprintf(name, sizeof name, "checkpoint_%06llu.ckpt", static_cast<unsigned long long>(snapshot.iteration));
    save_checkpoint(out / name, snapshot, cfg);
    m.outputs.push_back((out / name).string());
  };
  const auto t0 = std::chrono::steady_clock::now();
  opts.on_step = [&](std::uint64_t it, const LossBundle& l) {
    history.push_back(l);
    if (it % 25 == 0 || it == cfg.max_iterations) {
      const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      char buf[160];
      std::snprintf(buf, sizeof buf, "iter %llu  total %.5f  cyc %.5f  ide %.5f  d_clean %.5f  (%.0f s)",
                    static_cast<unsigned long long>(it), l.total, l.cyc, l.ide, l.d_clean, s);
      log(buf);
    }
  };

  try {
    fit(model, data, cfg, opts);
  } catch (const NumericError&) {
    // Losses and forward passes are checked before any update, so `model` is the last good state.
    save_checkpoint(out / "model_last_good.ckpt", model, cfg);
    write_text_file(out / "loss_history.csv", loss_history_csv(history, first));
    m.outputs.push_back((out / "model_last_good.ckpt").string());
    m.outputs.push_back((out / "loss_history.csv").string());
    m.config["status"] = "diverged";
    m.write(out / "manifest.txt");
    throw;
  }
  save_checkpoint(out / "model.ckpt", model, cfg);
  write_text_file(out / "loss_history.csv", loss_history_csv(history, first));
  m.outputs.push_back((out / "model.ckpt").string());
  m.outputs.push_back((out / "loss_history.csv").string());
  m.config["status"] = "completed";
  m.write(out / "manifest.txt");
  return kExitOk;
}

// ---------------------------------------------------------------------------
// restore

struct RestoreArgs {
  std::string model;
  std::string input;
  std::string out;
  std::size_t passes = 1;
};

int cmd_restore(const RestoreArgs& a) {
  if (a.passes < 1) throw ConfigError("--passes must be >= 1");
  const LoadedCheckpoint ck = load_checkpoint(a.model);
  const auto records = read_records(a.input);
  const fs::path out(a.out);
  ensure_dir(out);
  const SegmentRestorer restorer = generator_restorer(ck.model.gx2c);
  RunManifest m;
  m.command = "restore";
  m.seed = std::to_string(ck.config.seed);
  m.config = {{"passes", std::to_string(a.passes)}, {"model_iteration", std::to_string(ck.model.iteration)},
              {"q", std::to_string(ck.model.gx2c.config().q_order)}};
  m.inputs = {a.model, a.input};
  for (const Record& r : records) {
    Record restored = r;
    restored.samples = restore_record_signal(r, restorer, a.passes);
    std::erase_if(restored.annotations,
                  [&](const BeatAnnotation& b) { return b.sample_index >= restored.samples.size(); });
    write_record(out, restored);
    m.outputs.push_back((out / (r.patient_id + ".csv")).string());
  }
  m.write(out / "manifest.txt");
  log("restored " + std::to_string(records.size()) + " record(s) into " + out.string());
  return kExitOk;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateArgs {
  std::string detector = "pan-tompkins";
  double tolerance_ms = 75.0;
  std::string truth;
  std::vector<std::string> signals;
  std::string out;
};

std::map<std::string, std::vector<BeatAnnotation>> load_truth(const fs::path& path) {
  std::map<std::string, std::vector<BeatAnnotation>> truth;
  auto add = [&](const fs::path& file) {
    const std::string name = file.filename().string();
    const std::string id = name.substr(0, name.size() - std::string(".ann.csv").size());
    truth[id] = parse_annotations_csv(read_text_file(file), file.string());
  };
  auto is_ann = [](const fs::path& p) {
    const std::string n = p.filename().string();
    return n.size() > 8 && n.compare(n.size() - 8, 8, ".ann.csv") == 0;
  };
  if (fs::is_directory(path)) {
    for (const auto& e : fs::directory_iterator(path))
      if (e.is_regular_file() && is_ann(e.path())) add(e.path());
  } else if (fs::is_regular_file(path) && is_ann(path)) {
    add(path);
  } else {
    throw InputError("truth " + path.string() + " is neither an <id>.ann.csv file nor a directory of them");
  }
  if (truth.empty()) throw InputError("no annotation files under " + path.string());
  return truth;
}

int cmd_evaluate(const EvaluateArgs& a) {
  detector_by_name(a.detector);
  tolerance_samples(a.tolerance_ms, kSamplingRateHz);
  const auto truth = load_truth(a.truth);
  std::string csv = report_csv_header();
  RunManifest m;
  m.command = "evaluate";
  m.config = {{"detector", a.detector}, {"tolerance_ms", format_double(a.tolerance_ms)}};
  m.inputs.push_back(a.truth);

  for (std::size_t k = 0; k < a.signals.size(); ++k) {
    std::string variant = "signals" + std::to_string(k);
    std::string path = a.signals[k];
    if (const auto eq = path.find('='); eq != std::string::npos) {
      variant = path.substr(0, eq);
      path = path.substr(eq + 1);
    }
    m.inputs.push_back(path);
    std::vector<MetricsReport> per;
    std::vector<std::pair<std::string, MetricsReport>> rows;
    for (const Record& r : read_records(path)) {
      const auto t = truth.find(r.patient_id);
      if (t == truth.end()) throw InputError("no truth annotations for record " + r.patient_id);
      per.push_back(evaluate_signal(r.samples, r.sampling_rate, t->second, a.detector, a.tolerance_ms));
      rows.emplace_back(variant + " [" + r.patient_id + "]", per.back());
    }
    csv += report_csv_row(variant, pool_reports(per));
    csv += report_csv_row(variant + " (record mean)", mean_reports(per));
    for (const auto& [name, r] : rows) csv += report_csv_row(name, r);
  }

  if (a.out.empty()) {
    std::cout << csv;
    return kExitOk;
  }
  const fs::path out(a.out);
  if (out.has_parent_path()) ensure_dir(out.parent_path());
  write_text_file(out, csv);
  m.outputs.push_back(out.string());
  m.write(fs::path(out.string() + ".manifest.txt"));
  return kExitOk;
}

// ---------------------------------------------------------------------------
// plot

struct PlotArgs {
  std::string input;
  std::string restored;
  std::size_t segment_index = 0;
  std::string out;
};

int cmd_plot(const PlotArgs& a) {
  const Record input = read_record(a.input);
  std::optional<Record> restored;
  if (!a.restored.empty()) restored = read_record(a.restored);
  const PlotData data = plot_segment(input, restored ? &*restored : nullptr, a.segment_index);
  const fs::path out(a.out);
  ensure_dir(out);
  const std::string stem = input.patient_id + "_seg" + std::to_string(a.segment_index);
  write_text_file(out / (stem + ".svg"), render_svg(data));
  write_text_file(out / (stem + ".csv"), plot_values_csv(data));
  RunManifest m;
  m.command = "plot";
  m.config = {{"segment_index", std::to_string(a.segment_index)}};
  m.inputs.push_back(a.input);
  if (!a.restored.empty()) m.inputs.push_back(a.restored);
  m.outputs = {(out / (stem + ".svg")).string(), (out / (stem + ".csv")).string()};
  m.write(out / "manifest.txt");
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"ECG restoration with operational cycle-consistent GANs"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Generate paired clean/corrupted synthetic records");
  synth->add_option("--out", sa.out, "Output directory")->required();
  synth->add_option("--count", sa.count, "Number of records")->capture_default_str();
  synth->add_option("--bpm", sa.bpm, "Heart rate (lower bound when --bpm-max is set)")->capture_default_str();
  synth->add_option("--bpm-max", sa.bpm_max, "Upper heart-rate bound");
  synth->add_option("--duration-s", sa.duration_s, "Record length in seconds")->capture_default_str();
  synth->add_option("--arrhythmia-fraction", sa.arrhythmia_fraction, "Share of records with an S or V beat")
      ->capture_default_str();
  synth->add_option("--artifacts", sa.artifacts, "Artifact spec file (key = value)");
  synth->add_option("--snr", sa.snr, "Noise SNR in dB (overrides the spec), or 'none'");
  synth->add_option("--wander-mv", sa.wander_mv, "Baseline wander amplitude without --artifacts")
      ->capture_default_str();
  synth->add_option("--random-cut-s", sa.random_cut_s, "One randomly placed cut of this length; 0 disables")
      ->capture_default_str();
  synth->add_option("--seed", sa.seed)->capture_default_str();

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train the cycle-consistent GAN");
  train->add_option("--clean-dir", ta.clean_dir)->required();
  train->add_option("--corrupted-dir", ta.corrupted_dir)->required();
  train->add_option("--out", ta.out)->required();
  train->add_option("--q", ta.q, "Polynomial order Q")->capture_default_str();
  train->add_option("--iters", ta.iters)->capture_default_str();
  train->add_option("--batch", ta.batch)->capture_default_str();
  train->add_option("--lr", ta.lr)->capture_default_str();
  train->add_option("--lambda", ta.lambda, "Cycle-loss weight")->capture_default_str();
  train->add_option("--beta", ta.beta, "Identity-loss weight")->capture_default_str();
  train->add_option("--seed", ta.seed)->capture_default_str();
  train->add_option("--checkpoint-every", ta.checkpoint_every, "0 disables periodic checkpoints")
      ->capture_default_str();
  train->add_option("--pool-size", ta.pool_size, "Compose pools of this size per domain (0: use all)");
  train->add_option("--arrhythmia-fraction", ta.arrhythmia_fraction)->capture_default_str();
  train->add_flag("--allow-shortfall", ta.allow_shortfall, "Accept pools short of the target fraction");
  train->add_option("--resume", ta.resume, "Continue from a checkpoint");

  RestoreArgs ra;
  auto* restore = app.add_subcommand("restore", "Restore records with a trained GX2C");
  restore->add_option("--model", ra.model)->required();
  restore->add_option("--input", ra.input, "Record file or directory")->required();
  restore->add_option("--passes", ra.passes)->capture_default_str();
  restore->add_option("--out", ra.out)->required();

  EvaluateArgs ea;
  auto* evaluate = app.add_subcommand("evaluate", "Score R-peak detection against annotations");
  evaluate->add_option("--detector", ea.detector, "pan-tompkins | hamilton")->capture_default_str();
  evaluate->add_option("--tolerance-ms", ea.tolerance_ms)->capture_default_str();
  evaluate->add_option("--truth", ea.truth, "<id>.ann.csv or a directory of them")->required();
  evaluate->add_option("--signals", ea.signals, "[variant=]record file or directory (repeatable)")->required();
  evaluate->add_option("--out", ea.out, "Report CSV (stdout when omitted)");

  PlotArgs pa;
  auto* plot = app.add_subcommand("plot", "Render one segment as SVG plus CSV");
  plot->add_option("--input", pa.input)->required();
  plot->add_option("--restored", pa.restored);
  plot->add_option("--segment-index", pa.segment_index)->capture_default_str();
  plot->add_option("--out", pa.out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*synth) return cmd_synth(sa);
    if (*train) return cmd_train(ta);
    if (*restore) return cmd_restore(ra);
    if (*evaluate) return cmd_evaluate(ea);
    if (*plot) return cmd_plot(pa);
  } catch (const NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace ecgr::cli

// mdnreg: generate synthetic data, train, evaluate, analyze and verify
// mixture-density regression heads.

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "mdn/config.hpp"
#include "mdn/kernels.hpp"
#include "mdn/plot.hpp"
#include "verify.hpp"

namespace fs = std::filesystem;
using namespace mdn;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitVerification = 3;

// Exclusive advisory lock on <dir>/.lock for the lifetime of the object.
class DirLock {
 public:
  explicit DirLock(const fs::path& dir) {
    fs::create_directories(dir);
    const fs::path file = dir / ".lock";
    fd_ = ::open(file.c_str(), O_RDWR | O_CREAT, 0644);
    if (fd_ < 0) throw Error("cannot open lock file " + file.string());
    if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
      ::close(fd_);
      throw Error("output directory " + dir.string() + " is in use by another mdnreg process");
    }
  }
  ~DirLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

 private:
  int fd_ = -1;
};

struct ConfigArgs {
  std::string file;
  std::vector<std::string> sets;
  std::string out;

  void attach(CLI::App* cmd, bool with_out = true) {
    cmd->add_option("-c,--config", file, "Run config JSON; missing keys take defaults")->check(CLI::ExistingFile);
    cmd->add_option("--set", sets, "Override a config key, e.g. --set train.epochs=5")->take_all();
    if (with_out) cmd->add_option("-o,--out", out, "Output directory (overrides output_dir)");
  }

  RunConfig load(Json base = Json::object()) const {
    Json doc = file.empty() ? std::move(base) : read_json_file(file);
    for (const std::string& s : sets) apply_override(doc, s);
    if (!out.empty()) doc["output_dir"] = out;
    return run_config_from_json(doc);
  }
};

void say(const std::string& line) { std::cout << line << std::endl; }

std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

// ---- datasets on disk ---------------------------------------------------

Json instance_json(const Instance& in, Task task) {
  Json j = {{"cx", in.cx},
            {"cy", in.cy},
            {"class_id", in.class_id},
            {"params", in.params},
            {"annotated", in.annotated},
            {"width_px", in.width_px},
            {"height_px", in.height_px},
            {"diagonal_px", in.diagonal_px()}};
  if (task == Task::Detection) j["scale_mode"] = in.scale_mode;
  else j["viewpoint"] = to_string(in.viewpoint);
  return j;
}

void write_image_cache(const fs::path& path, const std::vector<Scene>& scenes, const SynthConfig& synth) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write("MDNIMG01", 8);
  const std::uint64_t header[4] = {scenes.size(), 3, synth.height, synth.width};
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  for (const Scene& s : scenes) {
    for (double v : s.image.data()) {
      const float f = float(v);
      out.write(reinterpret_cast<const char*>(&f), sizeof(f));
    }
  }
  if (!out) throw Error("write failed for " + path.string());
}

// Reads a `gen` output directory. Scenes are regenerated from their seeds
// and checked against the manifest.
Dataset load_dataset_dir(const fs::path& dir) {
  const Json meta = read_json_file(dir / "synth_config.json");
  const RunConfig rc = run_config_from_json({{"task", meta.at("task")}, {"synth", meta.at("synth")}});
  const std::size_t count = meta.at("count").get<std::size_t>();
  const std::uint64_t seed = meta.at("dataset_seed").get<std::uint64_t>();
  Dataset data = make_dataset(rc.synth, count, seed);
  std::ifstream in(dir / "manifest.jsonl");
  if (!in) throw ValidationError("missing manifest.jsonl in " + dir.string());
  std::string line;
  std::size_t i = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const Json j = Json::parse(line);
    if (i >= count || j.at("seed").get<std::uint64_t>() != data.scenes[i].seed ||
        j.at("instances").size() != data.scenes[i].instances.size()) {
      throw ValidationError("manifest line " + std::to_string(i + 1) + " does not match its regenerated scene");
    }
    ++i;
  }
  if (i != count) throw ValidationError("manifest has " + std::to_string(i) + " scenes, expected " + std::to_string(count));
  return data;
}

// ---- training log -------------------------------------------------------

std::vector<EpochLog> read_log_csv(const fs::path& path, std::size_t max_epoch) {
  std::vector<EpochLog> out;
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() < 8) f.resize(8);
    EpochLog e;
    e.epoch = std::stoul(f[0]);
    if (e.epoch > max_epoch) break;
    e.classification = std::stod(f[1]);
    e.center_offset = std::stod(f[2]);
    e.pose = std::stod(f[3]);
    e.total = std::stod(f[4]);
    if (!f[5].empty()) e.ap = std::stod(f[5]);
    e.learning_rate = std::stod(f[6]);
    e.seconds = f[7].empty() ? 0.0 : std::stod(f[7]);
    out.push_back(e);
  }
  return out;
}

std::string convergence_svg(const TrainLog& log) {
  Series lc{"L_C", {}, {}}, loff{"L_Coff", {}, {}}, lt{"L_T", {}, {}}, tot{"total", {}, {}}, ap{"AP", {}, {}};
  for (const EpochLog& e : log.epochs) {
    const double x = double(e.epoch);
    for (auto* s : {&lc, &loff, &lt, &tot}) s->x.push_back(x);
    lc.y.push_back(e.classification);
    loff.y.push_back(e.center_offset);
    lt.y.push_back(e.pose);
    tot.y.push_back(e.total);
    ap.x.push_back(x);
    ap.y.push_back(e.ap ? *e.ap : std::nan(""));
  }
  return line_chart_svg({{"Training losses", "epoch", "loss", {lc, loff, lt, tot}},
                         {"Evaluation AP", "epoch", "AP", {ap}}});
}

// ---- commands -----------------------------------------------------------

struct GenArgs {
  ConfigArgs config;
  std::optional<std::size_t> count;
  std::string split = "train";
  bool cache = false;
};

int cmd_gen(const GenArgs& a) {
  const RunConfig cfg = a.config.load();
  const bool train = a.split == "train";
  const std::size_t n = a.count.value_or(train ? cfg.data.train_scenes : cfg.data.eval_scenes);
  const std::uint64_t seed = train ? cfg.data.train_seed : cfg.data.eval_seed;
  const fs::path dir = a.config.out.empty() ? fs::path(cfg.output_dir) / ("data-" + a.split) : fs::path(a.config.out);
  DirLock lock(dir);
  const auto scenes = gen_dataset(cfg.synth, n, seed);
  std::ostringstream manifest;
  std::size_t instances = 0, warnings = 0;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    Json insts = Json::array();
    for (const Instance& in : scenes[i].instances) insts.push_back(instance_json(in, cfg.task));
    instances += scenes[i].instances.size();
    warnings += scenes[i].placement_warning ? 1 : 0;
    manifest << Json{{"index", i},
                     {"seed", scenes[i].seed},
                     {"placement_warning", scenes[i].placement_warning},
                     {"instances", insts}}
                    .dump()
             << '\n';
  }
  write_text_file(dir / "manifest.jsonl", manifest.str());
  const Json meta = {{"task", to_string(cfg.task)},
                     {"split", a.split},
                     {"count", n},
                     {"dataset_seed", seed},
                     {"synth", to_json(cfg)["synth"]}};
  write_text_file(dir / "synth_config.json", meta.dump(2) + "\n");
  if (a.cache) write_image_cache(dir / "images.bin", scenes, cfg.synth);
  say("wrote " + std::to_string(n) + " " + to_string(cfg.task) + " scenes (" + std::to_string(instances) +
      " instances, " + std::to_string(warnings) + " placement warnings) to " + dir.string());
  return kExitOk;
}

struct TrainArgs {
  ConfigArgs config;
  bool resume = false;
};

int cmd_train(const TrainArgs& a) {
  const RunConfig cfg = a.config.load();
  const fs::path dir = cfg.output_dir;
  DirLock lock(dir);
  const fs::path ckpt = dir / "checkpoint.json";
  Network net(cfg.network);
  TrainState state;
  TrainLog history;
  if (a.resume) {
    if (!fs::exists(ckpt)) throw ValidationError("nothing to resume: " + ckpt.string() + " does not exist");
    LoadedCheckpoint loaded = load_checkpoint(ckpt);
    if (to_json(loaded.network.config()) != to_json(cfg.network)) {
      throw ValidationError("checkpoint network config differs from the run config");
    }
    net = std::move(loaded.network);
    state = std::move(loaded.state);
    history.epochs = read_log_csv(dir / "train_log.csv", state.epoch);
    say("resuming after epoch " + std::to_string(state.epoch));
  } else {
    net.initialize(cfg.seed);
  }
  write_text_file(dir / "effective_config.json", to_json(cfg).dump(2) + "\n");
  if (state.epoch >= cfg.train.epochs) {
    say("training already complete (" + std::to_string(state.epoch) + " epochs)");
    return kExitOk;
  }
  const Dataset train_set = make_dataset(cfg.synth, cfg.data.train_scenes, cfg.data.train_seed);
  std::optional<Dataset> eval_set;
  if (cfg.data.eval_scenes > 0) eval_set = make_dataset(cfg.synth, cfg.data.eval_scenes, cfg.data.eval_seed);
  say("training " + std::string(to_string(cfg.task)) + " M=" + std::to_string(cfg.network.components) + " on " +
      std::to_string(train_set.size()) + " scenes, " + std::to_string(net.parameter_count()) + " parameters, kernels " +
      kernels::active().name + ", threads " + std::to_string(worker_threads()));

  const Json run_json = to_json(cfg);
  TrainHooks hooks;
  hooks.on_epoch = [&](const Network& n, const TrainState& s, const EpochLog& e) {
    history.epochs.push_back(e);
    write_text_file(dir / "train_log.csv", history.to_csv());
    write_text_file(dir / "convergence.svg", convergence_svg(history));
    save_checkpoint(ckpt, n, s, run_json);
    say("epoch " + std::to_string(e.epoch) + "/" + std::to_string(cfg.train.epochs) + "  L_C " + fmt(e.classification) +
        "  L_Coff " + fmt(e.center_offset) + "  L_T " + fmt(e.pose) + "  total " + fmt(e.total) +
        (e.ap ? "  AP " + fmt(*e.ap) : std::string()) + "  lr " + fmt(e.learning_rate, 3) + "  (" +
        fmt(e.seconds, 3) + " s)");
  };
  train(net, train_set, eval_set ? &*eval_set : nullptr, cfg.train, cfg.eval, state, hooks);
  const EpochLog& last = history.epochs.back();
  const Json metrics = {{"epochs", state.epoch},
                        {"final_loss", last.total},
                        {"final_ap", last.ap ? Json(*last.ap) : Json()},
                        {"adam_steps", state.adam.step}};
  write_text_file(dir / "metrics.json", metrics.dump(2) + "\n");
  say("checkpoint: " + ckpt.string());
  return kExitOk;
}

struct ModelArgs {
  ConfigArgs config;
  std::string checkpoint;
  std::string data;

  void attach(CLI::App* cmd) {
    cmd->add_option("--checkpoint", checkpoint, "Checkpoint written by train")->required()->check(CLI::ExistingFile);
    cmd->add_option("--data", data, "Dataset directory written by gen (default: the run's eval split)")
        ->check(CLI::ExistingDirectory);
    cmd->add_option("--set", config.sets, "Override a key of the checkpoint's run config")->take_all();
    cmd->add_option("-o,--out", config.out, "Output directory (default: the checkpoint's directory)");
  }

  struct Loaded {
    RunConfig config;
    Network network;
    Dataset data;
    fs::path out;
  };

  Loaded load() const {
    LoadedCheckpoint ck = load_checkpoint(checkpoint);
    Json doc = ck.run_config.is_object() ? ck.run_config : Json{{"task", to_string(ck.network.config().task)}};
    for (const std::string& s : config.sets) apply_override(doc, s);
    RunConfig cfg = run_config_from_json(doc);
    cfg.network = ck.network.config();
    Dataset data = this->data.empty() ? make_dataset(cfg.synth, cfg.data.eval_scenes, cfg.data.eval_seed)
                                      : load_dataset_dir(this->data);
    if (data.synth.task != cfg.network.task) throw ValidationError("dataset task differs from the checkpoint's task");
    if (data.synth.downsample != cfg.network.downsample) throw ValidationError("dataset downsampling differs");
    const fs::path out = config.out.empty() ? fs::path(checkpoint).parent_path() : fs::path(config.out);
    return {cfg, std::move(ck.network), std::move(data), out.empty() ? fs::path(".") : out};
  }
};

struct EvalArgs {
  ModelArgs model;
  std::string mode = "both";
};

int cmd_eval(const EvalArgs& a) {
  auto m = a.model.load();
  DirLock lock(m.out);
  std::vector<DecodeMode> modes;
  if (a.mode == "both") modes = {DecodeMode::MaxComponent, DecodeMode::MixtureMean};
  else modes = {parse_decode_mode(a.mode)};
  const auto predictions = predict_dataset(m.network, m.data);
  const auto gts = ground_truth_of(m.data);
  Json comparison = Json::object();
  for (DecodeMode mode : modes) {
    EvalOptions opt = m.config.eval;
    opt.mode = mode;
    const auto dets = detect_dataset(m.network, m.data, opt, &predictions);
    const EvalReport report = evaluate_detections(dets, m.data, opt);
    Json j = {{"mode", to_string(mode)},
              {"task", to_string(m.config.task)},
              {"scenes", m.data.size()},
              {"report", verify::to_json(report, true)}};
    std::string extra;
    if (m.config.task == Task::Pose) {
      Json fg = Json::object();
      for (const SubsetReport& s : fine_grained_eval(dets, gts, opt.oks_constants, default_keypoint_subsets())) {
        fg[s.name] = verify::to_json(s.report);
        extra += "  " + s.name + " " + fmt(s.report.ap, 3);
      }
      j["fine_grained"] = fg;
    }
    write_text_file(m.out / ("eval_" + std::string(to_string(mode)) + ".json"), j.dump(2) + "\n");
    comparison[to_string(mode)] = report.ap;
    say(std::string(to_string(mode)) + ": AP " + fmt(report.ap) + "  AP50 " + fmt(report.ap50.value_or(0.0)) +
        "  AP75 " + fmt(report.ap75.value_or(0.0)) + "  (" + std::to_string(report.detections) + " detections, " +
        std::to_string(report.ground_truth) + " ground truth)" + (extra.empty() ? "" : "\n  subsets:" + extra));
    if (report.empty_ground_truth) say("warning: detections for a class without ground truth (AP 0 for it)");
  }
  if (modes.size() > 1) write_text_file(m.out / "eval_comparison.json", comparison.dump(2) + "\n");
  return kExitOk;
}

struct AnalyzeArgs {
  ModelArgs model;
  std::optional<double> min_score;
};

int cmd_analyze(const AnalyzeArgs& a) {
  auto m = a.model.load();
  DirLock lock(m.out);
  const double min_score =
      a.min_score.value_or(m.config.task == Task::Pose ? m.config.analysis.confident_score : m.config.eval.threshold);
  const ComponentStats s = verify::component_stats(m.network, m.data, m.config, min_score);
  Json j = verify::to_json(s);
  j["min_score"] = min_score;
  write_text_file(m.out / "component_stats.json", j.dump(2) + "\n");

  std::ostringstream summary;
  summary << s.detections << " matched detections (score >= " << min_score << "), prediction rate";
  for (double r : s.prediction_rate) summary << ' ' << fmt(r, 3);

  std::vector<double> all;
  for (const auto& d : s.gt_diagonals) all.insert(all.end(), d.begin(), d.end());
  if (!all.empty()) {
    const auto [lo_it, hi_it] = std::minmax_element(all.begin(), all.end());
    const double lo = std::max(1e-3, *lo_it * 0.95), hi = std::max(lo * 1.01, *hi_it * 1.05);
    const BinEdges bins = make_bins(lo, hi, m.config.analysis.histogram_bins, true);
    std::vector<HistogramGroup> groups;
    std::ostringstream csv;
    csv << "bin_lo,bin_hi";
    for (std::size_t c = 0; c < s.components; ++c) {
      groups.push_back({"component " + std::to_string(c), s.gt_diagonals[c]});
      csv << ",component_" << c;
    }
    csv << '\n';
    std::vector<std::vector<std::size_t>> counts;
    for (const auto& g : groups) counts.push_back(histogram_counts(g.values, bins));
    csv.precision(8);
    for (std::size_t b = 0; b + 1 < bins.edges.size(); ++b) {
      csv << bins.edges[b] << ',' << bins.edges[b + 1];
      for (const auto& c : counts) csv << ',' << c[b];
      csv << '\n';
    }
    write_text_file(m.out / "scale_histogram.csv", csv.str());
    write_text_file(m.out / "scale_histogram.svg",
                    histogram_svg("Ground-truth diagonal by predicted component", "object diagonal (px)", groups, bins));
  }
  std::ostringstream sig;
  sig << "component,count,sigma_x_mean,sigma_x_std,sigma_y_mean,sigma_y_std\n";
  for (std::size_t c = 0; c < s.components; ++c) {
    sig << c << ',' << s.counts[c] << ',' << s.sigma_x_mean[c] << ',' << s.sigma_x_std[c] << ',' << s.sigma_y_mean[c]
        << ',' << s.sigma_y_std[c] << '\n';
  }
  write_text_file(m.out / "sigma_stats.csv", sig.str());

  if (m.config.task == Task::Detection) {
    if (s.scale_correlation) summary << "; rank vs diagonal Pearson " << fmt(*s.scale_correlation, 3);
    else summary << "; rank vs diagonal correlation undefined (fewer than 2 components predicted)";
  } else {
    std::ostringstream conf;
    conf << "component,front,back\n";
    for (std::size_t c = 0; c < s.components; ++c) {
      conf << c << ',' << s.viewpoint_counts[c][0] << ',' << s.viewpoint_counts[c][1] << '\n';
    }
    write_text_file(m.out / "viewpoint_confusion.csv", conf.str());
    if (s.viewpoint_agreement) {
      summary << "; viewpoint agreement " << fmt(*s.viewpoint_agreement, 3) << " (front component "
              << *s.front_component << ", back component " << *s.back_component << ")";
    }
  }
  say(summary.str());
  say("wrote component_stats.json and plots to " + m.out.string());
  return kExitOk;
}

struct VerifyArgs {
  std::vector<std::string> checks;
  bool unbounded_exp = false;
  std::string json;
  bool quiet = false;
};

const std::vector<std::string> kFastChecks = {"gradient", "density", "round-trip", "ap-oracle", "displacement"};
const std::vector<std::string> kAllChecks = {"gradient",    "density",     "round-trip", "ap-oracle",
                                             "displacement", "stability",  "instability", "multimodal",
                                             "convergence", "mode-recovery", "viewpoint"};

int cmd_verify(const VerifyArgs& a) {
  std::vector<std::string> wanted;
  for (const std::string& c : a.checks) {
    if (c == "all") wanted.insert(wanted.end(), kAllChecks.begin(), kAllChecks.end());
    else if (c == "fast") wanted.insert(wanted.end(), kFastChecks.begin(), kFastChecks.end());
    else if (std::find(kAllChecks.begin(), kAllChecks.end(), c) != kAllChecks.end()) wanted.push_back(c);
    else throw ValidationError("unknown check '" + c + "'");
  }
  if (wanted.empty()) wanted = a.unbounded_exp ? std::vector<std::string>{"stability"} : kFastChecks;
  std::vector<std::string> order;
  for (const std::string& c : kAllChecks) {
    if (std::find(wanted.begin(), wanted.end(), c) != wanted.end()) order.push_back(c);
  }
  const verify::Progress progress = a.quiet ? verify::Progress{} : verify::Progress{[](const std::string& l) {
    std::cerr << "  " << l << std::endl;
  }};
  auto wants = [&](const char* n) { return std::find(order.begin(), order.end(), n) != order.end(); };
  std::optional<verify::DetectionExperiment> det;
  if (wants("multimodal") || wants("convergence") || wants("mode-recovery")) {
    const bool mm = wants("multimodal") || wants("convergence");
    if (mm) det = verify::run_detection_experiment({0, 1, 2}, wants("mode-recovery"), progress);
    else {
      det.emplace();
      det->two_component = verify::train_and_analyze(verify::detection_experiment_config(2, 0), progress);
    }
  }
  std::vector<verify::CheckResult> results;
  for (const std::string& c : order) {
    verify::CheckResult r;
    if (c == "gradient") r = verify::gradient_check();
    else if (c == "density") r = verify::density_check();
    else if (c == "round-trip") r = verify::round_trip_check();
    else if (c == "ap-oracle") r = verify::ap_oracle_check();
    else if (c == "displacement") r = verify::displacement_check();
    else if (c == "stability") {
      r = verify::stability_check({}, progress,
                                  a.unbounded_exp ? SigmaActivation::UnboundedExp : SigmaActivation::EluShift);
    } else if (c == "instability") r = verify::instability_check({}, progress);
    else if (c == "multimodal") r = verify::multimodal_check(*det);
    else if (c == "convergence") r = verify::convergence_check(*det);
    else if (c == "mode-recovery") r = verify::mode_recovery_check(*det->two_component);
    else if (c == "viewpoint") r = verify::viewpoint_check(verify::train_and_analyze(verify::pose_experiment_config(2, 0), progress));
    say(std::string(r.passed ? "PASS " : "FAIL ") + r.name + " (" + fmt(r.seconds, 3) + " s): " + r.summary);
    results.push_back(std::move(r));
  }
  std::size_t failed = 0;
  Json out = Json::array();
  for (const auto& r : results) {
    failed += r.passed ? 0 : 1;
    out.push_back(verify::to_json(r));
  }
  if (!a.json.empty()) write_text_file(a.json, out.dump(2) + "\n");
  say(std::to_string(results.size() - failed) + "/" + std::to_string(results.size()) + " checks passed");
  return failed == 0 ? kExitOk : kExitVerification;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mixture-density regression heads: data generation, training, evaluation and verification"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Generate a synthetic dataset (JSONL manifest + config)");
  gen.config.attach(g);
  g->add_option("-n,--count", gen.count, "Number of scenes (default: data.train_scenes or data.eval_scenes)");
  g->add_option("--split", gen.split, "Which seed to use")->check(CLI::IsMember({"train", "eval"}));
  g->add_flag("--cache", gen.cache, "Also write images.bin (float32 tensors)");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a model; writes checkpoint, CSV log and convergence plot");
  tr.config.attach(t);
  t->add_flag("--resume", tr.resume, "Continue from <out>/checkpoint.json");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Evaluate a checkpoint (AP, OKS-AP, fine-grained subsets)");
  ev.model.attach(e);
  e->add_option("--mode", ev.mode, "Decode mode")->check(CLI::IsMember({"max-component", "mixture-mean", "both"}));

  AnalyzeArgs an;
  auto* a = app.add_subcommand("analyze", "Per-component statistics, scale histograms, viewpoint confusion");
  an.model.attach(a);
  a->add_option("--min-score", an.min_score, "Score cut for detections entering the statistics");

  VerifyArgs vf;
  auto* v = app.add_subcommand("verify", "Run verification checks");
  v->add_option("--check", vf.checks,
                "Check to run (repeatable): gradient, density, round-trip, ap-oracle, displacement, stability, "
                "instability, multimodal, convergence, mode-recovery, viewpoint, fast, all")
      ->take_all();
  v->add_flag("--debug-unbounded-exp", vf.unbounded_exp,
              "Run the stability check with the unbounded exp sigma activation");
  v->add_option("--json", vf.json, "Write results as JSON");
  v->add_flag("-q,--quiet", vf.quiet, "No progress lines");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? kExitOk : kExitValidation;
  }
  try {
    if (g->parsed()) return cmd_gen(gen);
    if (t->parsed()) return cmd_train(tr);
    if (e->parsed()) return cmd_eval(ev);
    if (a->parsed()) return cmd_analyze(an);
    if (v->parsed()) return cmd_verify(vf);
  } catch (const ValidationError& err) {
    std::cerr << "error: " << err.what() << std::endl;
    return kExitValidation;
  } catch (const TrainingAborted& err) {
    std::cerr << "error: " << err.what() << std::endl;
    return kExitRuntime;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << std::endl;
    return kExitRuntime;
  }
  return kExitRuntime;
}

#include "verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "mdn/gradcheck.hpp"
#include "oracles.hpp"

namespace mdn::verify {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point start) { return std::chrono::duration<double>(Clock::now() - start).count(); }

std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

void report(const Progress& progress, const std::string& line) {
  if (progress) progress(line);
}

SynthConfig small_synth(Task task) {
  SynthConfig s = SynthConfig::defaults(task);
  s.height = 32;
  s.width = 32;
  if (task == Task::Detection) {
    s.scale_modes = {{6.0, 0.2, 0.5}, {14.0, 0.2, 0.5}};
    s.min_instances = 2;
    s.max_instances = 2;
  } else {
    s.figure_min_px = 14.0;
    s.figure_max_px = 20.0;
    s.max_instances = 1;
    s.unannotated_prob = 0.3;
    s.keypoint_scale_factors = {1.0, 1.5, 0.8, 1.0, 1.2, 0.9};
  }
  return s;
}

}  // namespace

CheckResult gradient_check(double tolerance) {
  const auto start = Clock::now();
  CheckResult r{"gradient", true, "", Json::array(), 0.0};
  double worst = 0.0;
  std::string worst_case;
  for (Task task : {Task::Detection, Task::Pose}) {
    for (std::size_t m : {std::size_t{1}, std::size_t{3}}) {
      const SynthConfig synth = small_synth(task);
      const Scene scene = gen_scene(synth, 100 + m);
      const DenseTargets targets = build_targets(scene, synth.grid(), task, synth.num_classes);
      NetworkConfig nc;
      nc.task = task;
      nc.components = m;
      nc.width1 = 4;
      nc.width2 = 6;
      if (task == Task::Pose) nc.pose.scale_factors = synth.keypoint_scale_factors;
      Network net(nc);
      net.initialize(11 + m);
      // Zero biases put pre-activations over blank regions exactly on the
      // ReLU kink; evaluate at a generic point instead.
      std::mt19937_64 rng(5 + m);
      std::uniform_real_distribution<double> jitter(-0.05, 0.05);
      for (auto& p : net.parameters()) {
        if (p.name.ends_with(".bias")) {
          for (double& v : p.value.data()) v += jitter(rng);
        }
      }
      std::vector<Tensor> points;
      for (const auto& p : net.parameters()) points.push_back(p.value);
      const GradCheckResult g = grad_check(
          [&](Tape& tape, std::span<const Var> params) {
            const auto heads = net.forward(tape, params, tape.constant(scene.image));
            return scene_loss(heads, targets, net.config()).total;
          },
          points, 1e-6);
      const std::string name = std::string(to_string(task)) + " M=" + std::to_string(m);
      const std::string where = net.parameters()[g.worst_input].name + "[" + std::to_string(g.worst_coordinate) + "]";
      r.details.push_back({{"case", name},
                           {"max_relative_error", g.max_relative_error},
                           {"worst", where},
                           {"coordinates", g.coordinates_checked}});
      if (g.max_relative_error >= tolerance) r.passed = false;
      if (g.max_relative_error >= worst) {
        worst = g.max_relative_error;
        worst_case = name + " at " + where;
      }
    }
  }
  r.summary = "max relative error " + fmt(worst, 3) + " (" + worst_case + "), tolerance " + fmt(tolerance);
  r.seconds = since(start);
  return r;
}

CheckResult density_check(std::size_t sets, double tolerance, std::uint64_t seed) {
  const auto start = Clock::now();
  CheckResult r{"density", true, "", Json::array(), 0.0};
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> count(1, 4);
  std::normal_distribution<double> logit(0.0, 1.5);
  std::uniform_real_distribution<double> mean(-4.0, 4.0), sd(1.0, 3.0);
  double worst = 0.0;
  std::size_t worst_set = 0;
  for (std::size_t i = 0; i < sets; ++i) {
    MixtureParams p;
    const std::size_t m = count(rng);
    std::vector<double> logits(m);
    for (double& l : logits) l = logit(rng);
    const double lse = log_sum_exp(logits);
    for (std::size_t k = 0; k < m; ++k) {
      p.alpha.push_back(std::exp(logits[k] - lse));
      p.mu.push_back({mean(rng), mean(rng)});
      p.sigma.push_back({sd(rng), sd(rng)});
    }
    const double integral = density_normalization_check(p, QuadratureGrid::covering(p, 0.25));
    const double err = std::abs(integral - 1.0);
    r.details.push_back({{"set", i}, {"components", m}, {"integral", integral}});
    if (!(err <= tolerance)) r.passed = false;
    if (!(err <= worst)) {
      worst = err;
      worst_set = i;
    }
  }
  r.summary = std::to_string(sets) + " sets, max |integral - 1| = " + fmt(worst, 3) + " (set " +
              std::to_string(worst_set) + "), tolerance " + fmt(tolerance);
  r.seconds = since(start);
  return r;
}

CheckResult round_trip_check(std::size_t scenes, std::uint64_t seed) {
  const auto start = Clock::now();
  CheckResult r{"round-trip", true, "", Json::object(), 0.0};
  std::ostringstream summary;
  for (Task task : {Task::Detection, Task::Pose}) {
    const oracle::RoundTrip rt = oracle::decode_round_trip(SynthConfig::defaults(task), scenes, seed);
    r.details[to_string(task)] = {{"instances", rt.instances},
                                  {"recovered", rt.recovered},
                                  {"spurious", rt.spurious},
                                  {"max_center_error_px", rt.max_center_error_px},
                                  {"params_exact", rt.params_exact},
                                  {"first_failure", rt.first_failure}};
    if (!rt.ok()) r.passed = false;
    summary << to_string(task) << ": " << rt.recovered << "/" << rt.instances << " recovered, " << rt.spurious
            << " spurious, max center error " << fmt(rt.max_center_error_px, 3) << " px"
            << (rt.params_exact ? ", params exact" : ", params differ");
    if (!rt.first_failure.empty()) summary << " (" << rt.first_failure << ")";
    if (task == Task::Detection) summary << "; ";
  }
  r.summary = std::to_string(scenes) + " scenes per task; " + summary.str();
  r.seconds = since(start);
  return r;
}

CheckResult ap_oracle_check(std::size_t max_dets, std::size_t max_gts) {
  const auto start = Clock::now();
  const oracle::ApEquivalence eq = oracle::check_ap_equivalence(max_dets, max_gts);
  CheckResult r{"ap-oracle", eq.mismatches == 0 && eq.cases > 0, "", Json::object(), 0.0};
  r.details = {{"cases", eq.cases}, {"mismatches", eq.mismatches}, {"first_mismatch", eq.first_mismatch}};
  r.summary = std::to_string(eq.cases) + " cases with <= " + std::to_string(max_dets) + " detections and <= " +
              std::to_string(max_gts) + " ground truths, " + std::to_string(eq.mismatches) + " mismatches";
  if (!eq.first_mismatch.empty()) r.summary += " (first: " + eq.first_mismatch + ")";
  r.seconds = since(start);
  return r;
}

DisplacementResult displacement_curve(const SynthConfig& pose_synth, std::size_t scenes, std::uint64_t seed,
                                      const std::vector<double>& oks_constants) {
  const auto data = gen_dataset(pose_synth, scenes, seed);
  std::vector<GroundTruth> gts;
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (const Instance& in : data[i].instances) gts.push_back(ground_truth_of(in, i, Task::Pose, pose_synth.downsample));
  }
  DisplacementResult out;
  for (double d : {1.0, 2.0, 3.0}) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi), score(0.0, 1.0);
    const double px = d * double(pose_synth.downsample);
    std::vector<Detection> dets;
    for (const GroundTruth& g : gts) {
      Detection det;
      det.image_id = g.image_id;
      det.class_id = g.class_id;
      det.score = score(rng);
      det.keypoints = g.keypoints;
      for (std::size_t k = 0; k < g.keypoints.size() / 2; ++k) {
        const double a = angle(rng);
        det.keypoints[2 * k] += px * std::cos(a);
        det.keypoints[2 * k + 1] += px * std::sin(a);
      }
      dets.push_back(std::move(det));
    }
    out.displacements_grid.push_back(d);
    out.ap.push_back(evaluate_keypoints(dets, gts, oks_constants).ap);
  }
  return out;
}

CheckResult displacement_check(std::size_t scenes, std::uint64_t seed) {
  const auto start = Clock::now();
  const EvalOptions eval;
  const DisplacementResult d = displacement_curve(SynthConfig::defaults(Task::Pose), scenes, seed, eval.oks_constants);
  bool strict = true;
  for (std::size_t i = 1; i < d.ap.size(); ++i) strict = strict && d.ap[i] < d.ap[i - 1];
  CheckResult r{"displacement", strict, "", Json::object(), 0.0};
  r.details = {{"displacement_grid_units", d.displacements_grid}, {"ap", d.ap}};
  r.summary = "OKS-AP at 1/2/3 grid units: " + fmt(d.ap[0]) + " / " + fmt(d.ap[1]) + " / " + fmt(d.ap[2]) +
              (strict ? " (strictly decreasing)" : " (not strictly decreasing)");
  r.seconds = since(start);
  return r;
}

std::vector<StabilityRun> run_stability(SigmaActivation activation, const StabilitySettings& settings,
                                        const Progress& progress) {
  const SynthConfig synth = SynthConfig::defaults(Task::Pose);
  std::vector<StabilityRun> runs;
  for (std::uint64_t seed = 0; seed < settings.seeds; ++seed) {
    const Dataset data = make_dataset(synth, settings.scenes, 5000 + seed);
    NetworkConfig nc;
    nc.task = Task::Pose;
    nc.components = settings.components;
    nc.width1 = settings.width1;
    nc.width2 = settings.width2;
    nc.pose.scale_factors = synth.keypoint_scale_factors;
    nc.sigma_activation = activation;
    Network net(nc);
    net.initialize(seed);
    TrainConfig hyper;
    AdamState adam = AdamState::zeros_like(net.parameters());
    StabilityRun run;
    run.seed = seed;
    std::vector<double> losses;
    std::vector<std::size_t> order;
    std::size_t cursor = 0, epoch = 0;
    for (std::size_t step = 1; step <= settings.steps; ++step) {
      if (cursor + settings.batch_size > order.size()) {
        order = epoch_order(data.size(), seed, ++epoch);
        cursor = 0;
      }
      const std::span<const std::size_t> batch(order.data() + cursor, settings.batch_size);
      cursor += settings.batch_size;
      try {
        BatchResult r = batch_gradient(net, data, batch);
        if (!std::isfinite(r.terms.total)) throw NumericError("non-finite loss");
        for (std::size_t i = 0; i < r.grads.size(); ++i) {
          if (!r.grads[i].all_finite()) throw NumericError("non-finite gradient for " + net.parameters()[i].name);
        }
        losses.push_back(r.terms.total);
        clip_gradients(r.grads, settings.clip_norm);
        adam_step(net.parameters(), r.grads, adam, settings.learning_rate, hyper);
      } catch (const NumericError& e) {
        run.first_non_finite = step;
        run.non_finite_what = e.what();
        break;
      }
      run.steps = step;
    }
    if (!losses.empty()) {
      std::vector<double> sorted = losses;
      std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
      run.median_loss = sorted[sorted.size() / 2];
      run.max_loss = *std::max_element(losses.begin(), losses.end());
      for (std::size_t i = 0; i < losses.size(); ++i) {
        if (std::abs(losses[i] - run.median_loss) > settings.spike_factor * std::abs(run.median_loss)) {
          ++run.spikes;
          if (!run.first_spike) run.first_spike = i + 1;
        }
      }
    }
    std::ostringstream line;
    line << to_string(activation) << " seed " << seed << ": " << run.steps << " steps, median loss "
         << fmt(run.median_loss) << ", max " << fmt(run.max_loss) << ", spikes " << run.spikes;
    if (run.first_non_finite) line << ", non-finite at step " << *run.first_non_finite << " (" << run.non_finite_what << ")";
    report(progress, line.str());
    runs.push_back(run);
  }
  return runs;
}

namespace {

Json stability_json(const std::vector<StabilityRun>& runs) {
  Json a = Json::array();
  for (const StabilityRun& r : runs) {
    a.push_back({{"seed", r.seed},
                 {"steps", r.steps},
                 {"first_non_finite", r.first_non_finite ? Json(*r.first_non_finite) : Json()},
                 {"non_finite", r.non_finite_what},
                 {"spikes", r.spikes},
                 {"first_spike", r.first_spike ? Json(*r.first_spike) : Json()},
                 {"median_loss", r.median_loss},
                 {"max_loss", r.max_loss}});
  }
  return a;
}

}  // namespace

CheckResult stability_check(const StabilitySettings& settings, const Progress& progress, SigmaActivation activation) {
  const auto start = Clock::now();
  const auto runs = run_stability(activation, settings, progress);
  std::size_t bad = 0, complete = 0;
  for (const StabilityRun& r : runs) {
    if (r.first_non_finite) ++bad;
    if (r.steps == settings.steps) ++complete;
  }
  CheckResult r{"stability", bad == 0 && complete == runs.size(), "", stability_json(runs), 0.0};
  r.summary = std::string(to_string(activation)) + " sigma: " + std::to_string(complete) + "/" + std::to_string(runs.size()) + " seeds ran " +
              std::to_string(settings.steps) + " steps, " + std::to_string(bad) + " with non-finite loss or gradient";
  for (const StabilityRun& run : runs) {
    if (run.first_non_finite) {
      r.summary += " (seed " + std::to_string(run.seed) + " at step " + std::to_string(*run.first_non_finite) + ")";
      break;
    }
  }
  r.seconds = since(start);
  return r;
}

CheckResult instability_check(const StabilitySettings& settings, const Progress& progress) {
  const auto start = Clock::now();
  const auto runs = run_stability(SigmaActivation::UnboundedExp, settings, progress);
  std::size_t nan = 0, spiked = 0;
  for (const StabilityRun& r : runs) {
    if (r.first_non_finite) ++nan;
    else if (r.spikes > 0) ++spiked;
  }
  CheckResult r{"instability", nan + spiked > 0, "", stability_json(runs), 0.0};
  r.summary = "unbounded exp sigma: " + std::to_string(nan) + "/" + std::to_string(runs.size()) +
              " seeds went non-finite, " + std::to_string(spiked) + " more spiked above " +
              fmt(settings.spike_factor) + "x median within " + std::to_string(settings.steps) + " steps";
  r.seconds = since(start);
  return r;
}

RunConfig detection_experiment_config(std::size_t components, std::uint64_t seed) {
  RunConfig c = RunConfig::defaults(Task::Detection);
  c.seed = seed;
  c.output_dir = "runs/detection-m" + std::to_string(components) + "-s" + std::to_string(seed);
  c.data.train_scenes = 2000;
  c.data.eval_scenes = 500;
  c.data.train_seed = 100 + seed;
  c.data.eval_seed = 9000;
  c.network.components = components;
  c.network.width1 = 8;
  c.network.width2 = 16;
  c.train.epochs = 30;
  c.train.batch_size = 8;
  c.train.learning_rate = 1e-3;
  c.train.drop_epochs = {22};
  c.finalize();
  return c;
}

RunConfig pose_experiment_config(std::size_t components, std::uint64_t seed) {
  RunConfig c = RunConfig::defaults(Task::Pose);
  c.seed = seed;
  c.output_dir = "runs/pose-m" + std::to_string(components) + "-s" + std::to_string(seed);
  c.data.train_scenes = 2000;
  c.data.eval_scenes = 500;
  c.data.train_seed = 200 + seed;
  c.data.eval_seed = 9100;
  c.network.components = components;
  c.network.width1 = 8;
  c.network.width2 = 16;
  c.train.epochs = 30;
  c.train.batch_size = 8;
  c.train.learning_rate = 1e-3;
  c.train.drop_epochs = {22};
  c.finalize();
  return c;
}

ComponentStats component_stats(const Network& net, const Dataset& eval_set, const RunConfig& config,
                               double min_score) {
  std::vector<Detection> dets;
  for (Detection& d : detect_dataset(net, eval_set, config.eval)) {
    if (d.score >= min_score) dets.push_back(std::move(d));
  }
  std::vector<std::vector<Instance>> instances;
  for (const Scene& s : eval_set.scenes) instances.push_back(s.instances);
  const auto matched = match_to_instances(dets, instances, config.analysis.match_radius_px);
  return analyze_components(matched, config.network.components, config.task, config.synth.downsample);
}

TrainedRun train_and_analyze(const RunConfig& config, const Progress& progress) {
  const auto start = Clock::now();
  TrainedRun run;
  run.config = config;
  const Dataset train_set = make_dataset(config.synth, config.data.train_scenes, config.data.train_seed);
  const Dataset eval_set = make_dataset(config.synth, config.data.eval_scenes, config.data.eval_seed);
  run.network = Network(config.network);
  run.network.initialize(config.seed);
  TrainState state;
  TrainHooks hooks;
  const std::string tag = std::string(to_string(config.task)) + " M=" + std::to_string(config.network.components) +
                          " seed " + std::to_string(config.seed);
  hooks.on_epoch = [&](const Network&, const TrainState&, const EpochLog& e) {
    report(progress, tag + " epoch " + std::to_string(e.epoch) + ": loss " + fmt(e.total) + ", AP " +
                         (e.ap ? fmt(*e.ap) : std::string("-")) + " (" + fmt(e.seconds, 3) + " s)");
  };
  run.log = train(run.network, train_set, &eval_set, config.train, config.eval, state, hooks);
  run.final_ap = run.log.epochs.back().ap.value_or(0.0);
  if (config.network.components >= 2) {
    const double min_score = config.task == Task::Pose ? config.analysis.confident_score : config.eval.threshold;
    run.stats = component_stats(run.network, eval_set, config, min_score);
  }
  run.seconds = since(start);
  return run;
}

std::optional<std::size_t> epochs_to_reach(const TrainLog& log, double target) {
  for (const EpochLog& e : log.epochs) {
    if (e.ap && *e.ap >= target) return e.epoch;
  }
  return std::nullopt;
}

DetectionExperiment run_detection_experiment(const std::vector<std::uint64_t>& seeds, bool with_two_component,
                                             const Progress& progress) {
  DetectionExperiment exp;
  exp.seeds = seeds;
  for (std::uint64_t s : seeds) {
    exp.mdn.push_back(train_and_analyze(detection_experiment_config(3, s), progress));
    exp.baseline.push_back(train_and_analyze(detection_experiment_config(1, s), progress));
  }
  if (with_two_component) exp.two_component = train_and_analyze(detection_experiment_config(2, seeds.front()), progress);
  return exp;
}

CheckResult multimodal_check(const DetectionExperiment& exp) {
  CheckResult r{"multimodal", true, "", Json::array(), 0.0};
  double margin_sum = 0.0;
  std::size_t wins = 0;
  std::ostringstream per_seed;
  for (std::size_t i = 0; i < exp.seeds.size(); ++i) {
    const double a3 = exp.mdn[i].final_ap, a1 = exp.baseline[i].final_ap;
    margin_sum += a3 - a1;
    if (a3 >= a1) ++wins;
    r.seconds += exp.mdn[i].seconds + exp.baseline[i].seconds;
    r.details.push_back({{"seed", exp.seeds[i]}, {"ap_m3", a3}, {"ap_m1", a1}, {"margin", a3 - a1}});
    per_seed << (i ? ", " : "") << "seed " << exp.seeds[i] << " " << fmt(a3) << " vs " << fmt(a1);
  }
  const double mean_margin = exp.seeds.empty() ? 0.0 : margin_sum / double(exp.seeds.size());
  r.passed = !exp.seeds.empty() && wins == exp.seeds.size() && mean_margin > 0.0;
  r.summary = "M=3 >= M=1 in " + std::to_string(wins) + "/" + std::to_string(exp.seeds.size()) +
              " seeds, mean margin " + fmt(mean_margin, 3) + " (" + per_seed.str() + ")";
  return r;
}

CheckResult convergence_check(const DetectionExperiment& exp) {
  CheckResult r{"convergence", !exp.seeds.empty(), "", Json::array(), 0.0};
  std::ostringstream per_seed;
  for (std::size_t i = 0; i < exp.seeds.size(); ++i) {
    const double target = 0.5 * exp.baseline[i].final_ap;
    const auto e3 = epochs_to_reach(exp.mdn[i].log, target);
    const auto e1 = epochs_to_reach(exp.baseline[i].log, target);
    const bool ok = e3 && (!e1 || *e3 <= *e1);
    r.passed = r.passed && ok;
    r.details.push_back({{"seed", exp.seeds[i]},
                         {"target_ap", target},
                         {"epochs_m3", e3 ? Json(*e3) : Json()},
                         {"epochs_m1", e1 ? Json(*e1) : Json()}});
    per_seed << (i ? ", " : "") << "seed " << exp.seeds[i] << " " << (e3 ? std::to_string(*e3) : "never") << " vs "
             << (e1 ? std::to_string(*e1) : "never");
  }
  r.summary = "epochs to reach half the final M=1 AP, M=3 vs M=1: " + per_seed.str();
  return r;
}

CheckResult mode_recovery_check(const TrainedRun& run, double min_correlation) {
  CheckResult r{"mode-recovery", false, "", Json::object(), run.seconds};
  if (!run.stats) {
    r.summary = "no component statistics";
    return r;
  }
  const ComponentStats& s = *run.stats;
  r.details = to_json(s);
  if (!s.scale_correlation) {
    r.summary = "correlation undefined: fewer than 2 components predicted";
    return r;
  }
  r.passed = *s.scale_correlation >= min_correlation;
  std::ostringstream rates;
  for (std::size_t m = 0; m < s.prediction_rate.size(); ++m) rates << (m ? "/" : "") << fmt(s.prediction_rate[m], 3);
  r.summary = "M=2 rank vs GT diagonal Pearson " + fmt(*s.scale_correlation, 3) + " (threshold " +
              fmt(min_correlation) + "), prediction rate " + rates.str() + ", final AP " + fmt(run.final_ap);
  return r;
}

CheckResult viewpoint_check(const TrainedRun& run, double min_agreement) {
  CheckResult r{"viewpoint", false, "", Json::object(), run.seconds};
  if (!run.stats) {
    r.summary = "no component statistics";
    return r;
  }
  const ComponentStats& s = *run.stats;
  r.details = to_json(s);
  if (!s.viewpoint_agreement || !s.front_component || !s.back_component) {
    r.summary = "viewpoint agreement undefined (" + std::to_string(s.detections) + " confident detections)";
    return r;
  }
  const double front_sigma = s.mean_sigma[*s.front_component];
  const double back_sigma = s.mean_sigma[*s.back_component];
  r.passed = *s.viewpoint_agreement >= min_agreement && back_sigma > front_sigma;
  r.summary = "agreement " + fmt(*s.viewpoint_agreement, 3) + " over " + std::to_string(s.detections) +
              " confident detections (threshold " + fmt(min_agreement) + "), mean sigma back " + fmt(back_sigma) +
              " vs front " + fmt(front_sigma) + ", final AP " + fmt(run.final_ap);
  return r;
}

Json to_json(const ComponentStats& s) {
  auto opt = [](const auto& v) { return v ? Json(*v) : Json(); };
  Json vp = Json::array();
  for (const auto& c : s.viewpoint_counts) vp.push_back({{"front", c[0]}, {"back", c[1]}});
  return {{"components", s.components},
          {"detections", s.detections},
          {"prediction_rate", s.prediction_rate},
          {"counts", s.counts},
          {"sigma_x_mean", s.sigma_x_mean},
          {"sigma_x_std", s.sigma_x_std},
          {"sigma_y_mean", s.sigma_y_mean},
          {"sigma_y_std", s.sigma_y_std},
          {"mean_sigma", s.mean_sigma},
          {"mean_predicted_diagonal", s.mean_predicted_diagonal},
          {"rank", s.rank},
          {"scale_correlation", opt(s.scale_correlation)},
          {"positive_x_left", s.positive_x_left},
          {"positive_x_right", s.positive_x_right},
          {"positive_y_left", s.positive_y_left},
          {"positive_y_right", s.positive_y_right},
          {"viewpoint_counts", vp},
          {"viewpoint_agreement", opt(s.viewpoint_agreement)},
          {"front_component", opt(s.front_component)},
          {"back_component", opt(s.back_component)}};
}

Json to_json(const EvalReport& report, bool with_curves) {
  Json j = {{"ap", report.ap},
            {"ap50", report.ap50 ? Json(*report.ap50) : Json()},
            {"ap75", report.ap75 ? Json(*report.ap75) : Json()},
            {"thresholds", report.thresholds},
            {"ap_per_threshold", report.ap_per_threshold},
            {"detections", report.detections},
            {"ground_truth", report.ground_truth},
            {"empty_ground_truth", report.empty_ground_truth}};
  if (with_curves) j["precision"] = report.precision;
  return j;
}

Json to_json(const CheckResult& r) {
  return {{"name", r.name}, {"passed", r.passed}, {"summary", r.summary}, {"seconds", r.seconds}, {"details", r.details}};
}

}  // namespace mdn::verify

#include "mdn/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "mdn/error.hpp"

namespace mdn {

namespace {

// Strict reader over one JSON object: typed lookups keep defaults for
// missing keys, and finish() rejects keys that were never asked for.
class Section {
 public:
  Section(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ValidationError("config section '" + where() + "' must be an object");
  }

  void get(const char* key, double& out) {
    if (const Json* v = find(key)) {
      if (!v->is_number()) fail(key, "a number");
      out = v->get<double>();
    }
  }
  void get(const char* key, std::size_t& out) {
    if (const Json* v = find(key)) {
      if (!v->is_number_unsigned()) fail(key, "a non-negative integer");
      out = v->get<std::size_t>();
    }
  }
  void get(const char* key, std::string& out) {
    if (const Json* v = find(key)) {
      if (!v->is_string()) fail(key, "a string");
      out = v->get<std::string>();
    }
  }
  void get(const char* key, std::vector<double>& out) {
    if (const Json* v = find(key)) {
      if (!v->is_array()) fail(key, "an array of numbers");
      out.clear();
      for (const Json& e : *v) {
        if (!e.is_number()) fail(key, "an array of numbers");
        out.push_back(e.get<double>());
      }
    }
  }
  void get(const char* key, std::vector<std::size_t>& out) {
    if (const Json* v = find(key)) {
      if (!v->is_array()) fail(key, "an array of non-negative integers");
      out.clear();
      for (const Json& e : *v) {
        if (!e.is_number_unsigned()) fail(key, "an array of non-negative integers");
        out.push_back(e.get<std::size_t>());
      }
    }
  }
  const Json* child(const char* key) { return find(key); }
  std::string path_of(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) throw ValidationError("unknown config key '" + path_of(item.key()) + "'");
    }
  }

 private:
  const Json* find(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }
  [[noreturn]] void fail(const char* key, const char* expected) const {
    throw ValidationError("config key '" + path_of(key) + "' must be " + expected);
  }
  std::string where() const { return path_.empty() ? "<root>" : path_; }

  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Json synth_json(const SynthConfig& s) {
  Json modes = Json::array();
  for (const ScaleMode& m : s.scale_modes) {
    modes.push_back({{"center_px", m.center_px}, {"log_std", m.log_std}, {"weight", m.weight}});
  }
  return {{"height", s.height},
          {"width", s.width},
          {"downsample", s.downsample},
          {"min_instances", s.min_instances},
          {"max_instances", s.max_instances},
          {"num_classes", s.num_classes},
          {"scale_modes", modes},
          {"min_aspect", s.min_aspect},
          {"max_aspect", s.max_aspect},
          {"figure_min_px", s.figure_min_px},
          {"figure_max_px", s.figure_max_px},
          {"front_prior", s.front_prior},
          {"keypoint_jitter_px", s.keypoint_jitter_px},
          {"back_jitter_multiplier", s.back_jitter_multiplier},
          {"unannotated_prob", s.unannotated_prob},
          {"keypoint_scale_factors", s.keypoint_scale_factors}};
}

void read_synth(const Json& j, SynthConfig& s) {
  Section sec(j, "synth");
  sec.get("height", s.height);
  sec.get("width", s.width);
  sec.get("downsample", s.downsample);
  sec.get("min_instances", s.min_instances);
  sec.get("max_instances", s.max_instances);
  sec.get("num_classes", s.num_classes);
  if (const Json* modes = sec.child("scale_modes")) {
    if (!modes->is_array()) throw ValidationError("config key 'synth.scale_modes' must be an array");
    s.scale_modes.clear();
    for (std::size_t i = 0; i < modes->size(); ++i) {
      ScaleMode m{};
      Section ms((*modes)[i], "synth.scale_modes[" + std::to_string(i) + "]");
      ms.get("center_px", m.center_px);
      ms.get("log_std", m.log_std);
      ms.get("weight", m.weight);
      ms.finish();
      s.scale_modes.push_back(m);
    }
  }
  sec.get("min_aspect", s.min_aspect);
  sec.get("max_aspect", s.max_aspect);
  sec.get("figure_min_px", s.figure_min_px);
  sec.get("figure_max_px", s.figure_max_px);
  sec.get("front_prior", s.front_prior);
  sec.get("keypoint_jitter_px", s.keypoint_jitter_px);
  sec.get("back_jitter_multiplier", s.back_jitter_multiplier);
  sec.get("unannotated_prob", s.unannotated_prob);
  sec.get("keypoint_scale_factors", s.keypoint_scale_factors);
  sec.finish();
}

void read_network_section(const Json& j, NetworkConfig& n) {
  Section sec(j, "network");
  sec.get("components", n.components);
  sec.get("width1", n.width1);
  sec.get("width2", n.width2);
  sec.get("lambda_c", n.lambda_c);
  sec.get("lambda_off", n.lambda_off);
  sec.get("lambda_t", n.lambda_t);
  std::string act = to_string(n.sigma_activation);
  sec.get("sigma_activation", act);
  n.sigma_activation = parse_sigma_activation(act);
  sec.finish();
}

Json train_json(const TrainConfig& t) {
  return {{"epochs", t.epochs},       {"batch_size", t.batch_size}, {"learning_rate", t.learning_rate},
          {"drop_epochs", t.drop_epochs}, {"drop_factor", t.drop_factor}, {"beta1", t.beta1},
          {"beta2", t.beta2},         {"epsilon", t.epsilon},       {"clip_norm", t.clip_norm},
          {"eval_every", t.eval_every}};
}

void read_train(const Json& j, TrainConfig& t) {
  Section sec(j, "train");
  sec.get("epochs", t.epochs);
  sec.get("batch_size", t.batch_size);
  sec.get("learning_rate", t.learning_rate);
  sec.get("drop_epochs", t.drop_epochs);
  sec.get("drop_factor", t.drop_factor);
  sec.get("beta1", t.beta1);
  sec.get("beta2", t.beta2);
  sec.get("epsilon", t.epsilon);
  sec.get("clip_norm", t.clip_norm);
  sec.get("eval_every", t.eval_every);
  sec.finish();
}

void read_eval(const Json& j, EvalOptions& e) {
  Section sec(j, "eval");
  std::string mode = to_string(e.mode);
  sec.get("mode", mode);
  e.mode = parse_decode_mode(mode);
  sec.get("top_k", e.top_k);
  sec.get("threshold", e.threshold);
  sec.get("oks_constants", e.oks_constants);
  sec.finish();
}

Json tensor_json(const Tensor& t) {
  return {{"shape", t.shape()}, {"data", std::vector<double>(t.data().begin(), t.data().end())}};
}

Tensor tensor_from_json(const Json& j, const Shape& expected, const std::string& what) {
  const Shape shape = j.at("shape").get<Shape>();
  if (shape != expected) throw ValidationError("checkpoint: shape mismatch for " + what);
  std::vector<double> data = j.at("data").get<std::vector<double>>();
  return Tensor(shape, std::move(data));
}

}  // namespace

const char* to_string(SigmaActivation act) {
  return act == SigmaActivation::EluShift ? "elu" : "exp";
}

SigmaActivation parse_sigma_activation(const std::string& name) {
  if (name == "elu") return SigmaActivation::EluShift;
  if (name == "exp") return SigmaActivation::UnboundedExp;
  throw ValidationError("unknown sigma activation '" + name + "' (expected elu or exp)");
}

RunConfig RunConfig::defaults(Task task) {
  RunConfig c;
  c.task = task;
  c.synth = SynthConfig::defaults(task);
  c.finalize();
  return c;
}

void RunConfig::finalize() {
  synth.task = task;
  network.task = task;
  network.downsample = synth.downsample;
  network.num_classes = synth.num_classes;
  network.pose.scale_factors = task == Task::Pose ? synth.keypoint_scale_factors : std::vector<double>{};
  train.seed = seed;
  synth.validate();
  network.validate();
  train.validate();
  if (data.train_scenes < 1) throw ValidationError("data.train_scenes must be >= 1");
  if (eval.top_k < 1) throw ValidationError("eval.top_k must be >= 1");
  if (!(eval.threshold >= 0.0 && eval.threshold < 1.0)) throw ValidationError("eval.threshold must be in [0, 1)");
  if (task == Task::Pose) {
    if (eval.oks_constants.size() != kPoseKeypoints) {
      throw ValidationError("eval.oks_constants must have one entry per keypoint");
    }
    for (double k : eval.oks_constants) {
      if (!(k > 0.0)) throw ValidationError("eval.oks_constants must be positive");
    }
  }
  if (!(analysis.match_radius_px > 0.0)) throw ValidationError("analysis.match_radius_px must be positive");
  if (analysis.histogram_bins < 1) throw ValidationError("analysis.histogram_bins must be >= 1");
}

Json to_json(const RunConfig& c) {
  return {{"task", to_string(c.task)},
          {"seed", c.seed},
          {"output_dir", c.output_dir},
          {"data",
           {{"train_scenes", c.data.train_scenes},
            {"eval_scenes", c.data.eval_scenes},
            {"train_seed", c.data.train_seed},
            {"eval_seed", c.data.eval_seed}}},
          {"synth", synth_json(c.synth)},
          {"network",
           {{"components", c.network.components},
            {"width1", c.network.width1},
            {"width2", c.network.width2},
            {"lambda_c", c.network.lambda_c},
            {"lambda_off", c.network.lambda_off},
            {"lambda_t", c.network.lambda_t},
            {"sigma_activation", to_string(c.network.sigma_activation)}}},
          {"train", train_json(c.train)},
          {"eval",
           {{"mode", to_string(c.eval.mode)},
            {"top_k", c.eval.top_k},
            {"threshold", c.eval.threshold},
            {"oks_constants", c.eval.oks_constants}}},
          {"analysis",
           {{"match_radius_px", c.analysis.match_radius_px},
            {"confident_score", c.analysis.confident_score},
            {"histogram_bins", c.analysis.histogram_bins}}}};
}

RunConfig run_config_from_json(const Json& j) {
  Section root(j, "");
  std::string task_name = "detection";
  root.get("task", task_name);
  RunConfig c;
  c.task = parse_task(task_name);
  c.synth = SynthConfig::defaults(c.task);
  std::size_t seed = c.seed;
  root.get("seed", seed);
  c.seed = seed;
  root.get("output_dir", c.output_dir);
  if (const Json* d = root.child("data")) {
    Section sec(*d, "data");
    sec.get("train_scenes", c.data.train_scenes);
    sec.get("eval_scenes", c.data.eval_scenes);
    std::size_t ts = c.data.train_seed, es = c.data.eval_seed;
    sec.get("train_seed", ts);
    sec.get("eval_seed", es);
    c.data.train_seed = ts;
    c.data.eval_seed = es;
    sec.finish();
  }
  if (const Json* s = root.child("synth")) read_synth(*s, c.synth);
  if (const Json* n = root.child("network")) read_network_section(*n, c.network);
  if (const Json* t = root.child("train")) read_train(*t, c.train);
  if (const Json* e = root.child("eval")) read_eval(*e, c.eval);
  if (const Json* a = root.child("analysis")) {
    Section sec(*a, "analysis");
    sec.get("match_radius_px", c.analysis.match_radius_px);
    sec.get("confident_score", c.analysis.confident_score);
    sec.get("histogram_bins", c.analysis.histogram_bins);
    sec.finish();
  }
  root.finish();
  c.finalize();
  return c;
}

void apply_override(Json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ValidationError("override '" + assignment + "' must look like key.path=value");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  Json value = Json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  Json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ValidationError("override '" + assignment + "' has an empty key");
    if (!node->is_object()) throw ValidationError("override '" + path + "' descends into a non-object");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    if (node->is_null()) *node = Json::object();
    start = dot + 1;
  }
}

Json to_json(const NetworkConfig& n) {
  return {{"task", to_string(n.task)},
          {"components", n.components},
          {"num_classes", n.num_classes},
          {"pose_scale_factors", n.pose.scale_factors},
          {"width1", n.width1},
          {"width2", n.width2},
          {"downsample", n.downsample},
          {"lambda_c", n.lambda_c},
          {"lambda_off", n.lambda_off},
          {"lambda_t", n.lambda_t},
          {"sigma_activation", to_string(n.sigma_activation)}};
}

NetworkConfig network_config_from_json(const Json& j) {
  NetworkConfig n;
  Section sec(j, "network");
  std::string task = "detection";
  sec.get("task", task);
  n.task = parse_task(task);
  sec.get("components", n.components);
  sec.get("num_classes", n.num_classes);
  sec.get("pose_scale_factors", n.pose.scale_factors);
  sec.get("width1", n.width1);
  sec.get("width2", n.width2);
  sec.get("downsample", n.downsample);
  sec.get("lambda_c", n.lambda_c);
  sec.get("lambda_off", n.lambda_off);
  sec.get("lambda_t", n.lambda_t);
  std::string act = to_string(n.sigma_activation);
  sec.get("sigma_activation", act);
  n.sigma_activation = parse_sigma_activation(act);
  sec.finish();
  n.validate();
  return n;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ValidationError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << text;
    out.flush();
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void save_checkpoint(const std::filesystem::path& path, const Network& net, const TrainState& state,
                     const Json& run_config) {
  Json params = Json::array();
  for (const Parameter& p : net.parameters()) {
    Json e = tensor_json(p.value);
    e["name"] = p.name;
    params.push_back(std::move(e));
  }
  Json m = Json::array(), v = Json::array();
  for (const Tensor& t : state.adam.m) m.push_back(tensor_json(t));
  for (const Tensor& t : state.adam.v) v.push_back(tensor_json(t));
  const Json doc = {{"format", kCheckpointFormat},
                    {"version", kCheckpointVersion},
                    {"network", to_json(net.config())},
                    {"epoch", state.epoch},
                    {"parameters", params},
                    {"adam", {{"step", state.adam.step}, {"m", m}, {"v", v}}},
                    {"run_config", run_config}};
  write_text_file(path, doc.dump());
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  const Json doc = read_json_file(path);
  try {
    if (doc.value("format", std::string()) != kCheckpointFormat) {
      throw ValidationError(path.string() + " is not a checkpoint");
    }
    if (doc.at("version").get<int>() != kCheckpointVersion) {
      throw ValidationError("unsupported checkpoint version in " + path.string());
    }
    LoadedCheckpoint out{Network(network_config_from_json(doc.at("network"))), {}, doc.value("run_config", Json())};
    auto& params = out.network.parameters();
    const Json& jp = doc.at("parameters");
    if (jp.size() != params.size()) throw ValidationError("checkpoint: parameter count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (jp[i].at("name").get<std::string>() != params[i].name) {
        throw ValidationError("checkpoint: expected parameter " + params[i].name);
      }
      params[i].value = tensor_from_json(jp[i], params[i].value.shape(), params[i].name);
    }
    out.state.epoch = doc.at("epoch").get<std::size_t>();
    const Json& adam = doc.at("adam");
    out.state.adam.step = adam.at("step").get<std::uint64_t>();
    const Json& m = adam.at("m");
    const Json& v = adam.at("v");
    if (!m.empty() || !v.empty()) {
      if (m.size() != params.size() || v.size() != params.size()) {
        throw ValidationError("checkpoint: optimizer state size mismatch");
      }
      for (std::size_t i = 0; i < params.size(); ++i) {
        out.state.adam.m.push_back(tensor_from_json(m[i], params[i].value.shape(), params[i].name + " (m)"));
        out.state.adam.v.push_back(tensor_from_json(v[i], params[i].value.shape(), params[i].name + " (v)"));
      }
    }
    return out;
  } catch (const Json::exception& e) {
    throw ValidationError("malformed checkpoint " + path.string() + ": " + e.what());
  }
}

}  // namespace mdn

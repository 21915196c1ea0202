#include "mdn/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <utility>

namespace mdn {

const char* to_string(Viewpoint v) { return v == Viewpoint::Front ? "front" : "back"; }

const char* keypoint_name(std::size_t k) {
  static const char* names[kPoseKeypoints] = {"head", "left_hand", "right_hand", "pelvis", "left_foot", "right_foot"};
  if (k >= kPoseKeypoints) throw ValidationError("keypoint index out of range");
  return names[k];
}

bool is_left_keypoint(std::size_t k) { return k == LeftHand || k == LeftFoot; }
bool is_right_keypoint(std::size_t k) { return k == RightHand || k == RightFoot; }

SynthConfig SynthConfig::defaults(Task task) {
  SynthConfig c;
  c.task = task;
  if (task == Task::Pose) {
    c.height = 96;
    c.width = 96;
    c.max_instances = 3;
  }
  return c;
}

void SynthConfig::validate() const {
  GridShape::make(height, width, downsample);
  if (min_instances > max_instances) throw ValidationError("synth.min_instances exceeds synth.max_instances");
  if (num_classes < 1) throw ValidationError("synth.num_classes must be >= 1");
  if (task == Task::Detection) {
    if (scale_modes.empty()) throw ValidationError("synth.scale_modes must not be empty");
    double total = 0.0;
    for (std::size_t i = 0; i < scale_modes.size(); ++i) {
      const ScaleMode& m = scale_modes[i];
      if (!(m.center_px > 0.0) || !(m.log_std >= 0.0) || !(m.weight >= 0.0)) {
        throw ValidationError("synth.scale_modes[" + std::to_string(i) + "] needs center > 0, log_std >= 0, weight >= 0");
      }
      if (i > 0 && !(m.center_px > scale_modes[i - 1].center_px)) {
        throw ValidationError("synth.scale_modes must be ordered by center");
      }
      total += m.weight;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ValidationError("synth.scale_modes weights must sum to 1");
    if (!(min_aspect > 0.0) || !(max_aspect >= min_aspect)) throw ValidationError("synth aspect range is invalid");
  } else {
    if (!(figure_min_px > 0.0) || !(figure_max_px >= figure_min_px)) {
      throw ValidationError("synth figure size range is invalid");
    }
    if (figure_max_px + 4.0 > static_cast<double>(std::min(height, width))) {
      throw ValidationError("synth.figure_max_px does not fit the image");
    }
    if (!(front_prior >= 0.0 && front_prior <= 1.0)) throw ValidationError("synth.front_prior must be in [0, 1]");
    if (!(keypoint_jitter_px >= 0.0) || !(back_jitter_multiplier >= 0.0)) {
      throw ValidationError("synth jitter values must be non-negative");
    }
    if (!(unannotated_prob >= 0.0 && unannotated_prob < 1.0)) {
      throw ValidationError("synth.unannotated_prob must be in [0, 1)");
    }
    if (keypoint_scale_factors.size() != kPoseKeypoints) {
      throw ValidationError("synth.keypoint_scale_factors needs " + std::to_string(kPoseKeypoints) + " entries");
    }
    for (double s : keypoint_scale_factors) {
      if (!(s > 0.0)) throw ValidationError("synth.keypoint_scale_factors must be positive");
    }
  }
}

double Instance::diagonal_px() const { return std::hypot(width_px, height_px); }

namespace {

constexpr int kMaxPlacementTries = 100;

struct Rgb {
  double r, g, b;
};

class Canvas {
 public:
  Canvas(std::size_t h, std::size_t w) : image({3, h, w}), h_(h), w_(w) {}

  void blend(std::size_t y, std::size_t x, double cov, Rgb c) {
    if (cov <= 0.0) return;
    cov = std::min(cov, 1.0);
    const std::size_t plane = h_ * w_, at = y * w_ + x;
    image[at] += cov * (c.r - image[at]);
    image[plane + at] += cov * (c.g - image[plane + at]);
    image[2 * plane + at] += cov * (c.b - image[2 * plane + at]);
  }

  void background(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> base(0.0, 0.25), noise(-0.05, 0.05);
    const double b[3] = {base(rng), base(rng), base(rng)};
    for (std::size_t ch = 0; ch < 3; ++ch) {
      for (std::size_t i = 0; i < h_ * w_; ++i) image[ch * h_ * w_ + i] = std::clamp(b[ch] + noise(rng), 0.0, 1.0);
    }
  }

  // Axis-aligned box with exact fractional pixel coverage and stripe texture.
  void box(double x0, double y0, double x1, double y1, Rgb color, double stripe_amp, double fx, double fy,
           double phase) {
    const std::size_t xa = static_cast<std::size_t>(std::max(0.0, std::floor(x0)));
    const std::size_t ya = static_cast<std::size_t>(std::max(0.0, std::floor(y0)));
    const std::size_t xb = std::min(w_, static_cast<std::size_t>(std::ceil(x1)));
    const std::size_t yb = std::min(h_, static_cast<std::size_t>(std::ceil(y1)));
    for (std::size_t y = ya; y < yb; ++y) {
      const double cy = std::min(y1, y + 1.0) - std::max(y0, double(y));
      for (std::size_t x = xa; x < xb; ++x) {
        const double cx = std::min(x1, x + 1.0) - std::max(x0, double(x));
        const double t = 1.0 - stripe_amp * 0.5 * (1.0 + std::sin(2 * std::numbers::pi * (fx * x + fy * y) + phase));
        blend(y, x, cx * cy, Rgb{color.r * t, color.g * t, color.b * t});
      }
    }
  }

  void segment(double ax, double ay, double bx, double by, double thickness, Rgb color) {
    const double pad = thickness + 1.0;
    const long x0 = std::max(0L, static_cast<long>(std::floor(std::min(ax, bx) - pad)));
    const long x1 = std::min(long(w_) - 1, static_cast<long>(std::ceil(std::max(ax, bx) + pad)));
    const long y0 = std::max(0L, static_cast<long>(std::floor(std::min(ay, by) - pad)));
    const long y1 = std::min(long(h_) - 1, static_cast<long>(std::ceil(std::max(ay, by) + pad)));
    const double dx = bx - ax, dy = by - ay, len2 = dx * dx + dy * dy;
    for (long y = y0; y <= y1; ++y) {
      for (long x = x0; x <= x1; ++x) {
        const double px = x + 0.5, py = y + 0.5;
        double t = len2 > 0.0 ? ((px - ax) * dx + (py - ay) * dy) / len2 : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        const double d = std::hypot(px - (ax + t * dx), py - (ay + t * dy));
        blend(std::size_t(y), std::size_t(x), thickness / 2.0 + 0.5 - d, color);
      }
    }
  }

  void disk(double cx, double cy, double radius, Rgb color) { segment(cx, cy, cx, cy, 2.0 * radius, color); }

  Tensor image;

 private:
  std::size_t h_, w_;
};

Rgb random_color(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  return {d(rng), d(rng), d(rng)};
}

std::pair<std::size_t, std::size_t> cell_of(double cx, double cy, std::size_t downsample) {
  return {static_cast<std::size_t>(std::floor(cy / double(downsample))),
          static_cast<std::size_t>(std::floor(cx / double(downsample)))};
}

void check_config(const SynthConfig& config, Task task) {
  config.validate();
  if (config.task != task) throw ValidationError(std::string("synth config is for task ") + to_string(config.task));
}

}  // namespace

Scene gen_detection_scene(const SynthConfig& config, std::uint64_t seed) {
  check_config(config, Task::Detection);
  std::mt19937_64 rng(seed);
  Scene scene;
  scene.seed = seed;
  const double H = double(config.height), W = double(config.width);

  std::uniform_int_distribution<std::size_t> count_dist(config.min_instances, config.max_instances);
  const std::size_t requested = count_dist(rng);
  std::vector<double> weights;
  for (const auto& m : config.scale_modes) weights.push_back(m.weight);
  std::discrete_distribution<int> mode_dist(weights.begin(), weights.end());
  std::normal_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> log_aspect(std::log(config.min_aspect), std::log(config.max_aspect));
  std::uniform_int_distribution<std::size_t> class_dist(0, config.num_classes - 1);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  std::set<std::pair<std::size_t, std::size_t>> occupied;
  for (std::size_t i = 0; i < requested; ++i) {
    Instance inst;
    inst.scale_mode = mode_dist(rng);
    const ScaleMode& mode = config.scale_modes[inst.scale_mode];
    const double diag = mode.center_px * std::exp(mode.log_std * unit(rng));
    const double aspect = std::exp(log_aspect(rng));
    inst.width_px = std::min(diag * aspect / std::sqrt(1.0 + aspect * aspect), W - 2.0);
    inst.height_px = std::min(diag / std::sqrt(1.0 + aspect * aspect), H - 2.0);
    inst.class_id = class_dist(rng);
    bool placed = false;
    for (int attempt = 0; attempt < kMaxPlacementTries && !placed; ++attempt) {
      inst.cx = inst.width_px / 2.0 + u01(rng) * (W - inst.width_px);
      inst.cy = inst.height_px / 2.0 + u01(rng) * (H - inst.height_px);
      placed = occupied.insert(cell_of(inst.cx, inst.cy, config.downsample)).second;
    }
    if (!placed) {
      scene.placement_warning = true;
      continue;
    }
    const double d = double(config.downsample);
    inst.params = {inst.width_px / d, inst.height_px / d};
    inst.annotated = {true, true};
    scene.instances.push_back(std::move(inst));
  }

  Canvas canvas(config.height, config.width);
  canvas.background(rng);
  // Large boxes first so small ones stay visible.
  std::vector<std::size_t> order(scene.instances.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scene.instances[a].width_px * scene.instances[a].height_px >
           scene.instances[b].width_px * scene.instances[b].height_px;
  });
  std::uniform_real_distribution<double> amp(0.0, 0.3), freq(-0.3, 0.3), phase(0.0, 2 * std::numbers::pi);
  for (std::size_t i : order) {
    const Instance& in = scene.instances[i];
    const Rgb color = random_color(rng, 0.35, 1.0);
    canvas.box(in.cx - in.width_px / 2, in.cy - in.height_px / 2, in.cx + in.width_px / 2, in.cy + in.height_px / 2,
               color, amp(rng), freq(rng), freq(rng), phase(rng));
  }
  scene.image = std::move(canvas.image);
  return scene;
}

Scene gen_pose_scene(const SynthConfig& config, std::uint64_t seed) {
  check_config(config, Task::Pose);
  std::mt19937_64 rng(seed);
  Scene scene;
  scene.seed = seed;
  const double H = double(config.height), W = double(config.width), D = double(config.downsample);

  std::uniform_int_distribution<std::size_t> count_dist(config.min_instances, config.max_instances);
  const std::size_t requested = count_dist(rng);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> class_dist(0, config.num_classes - 1);

  struct Figure {
    double size;
    std::vector<double> px;  // absolute keypoint positions (x0, y0, ...)
  };
  std::vector<Figure> figures;
  std::set<std::pair<std::size_t, std::size_t>> occupied;

  for (std::size_t i = 0; i < requested; ++i) {
    Instance inst;
    inst.viewpoint = u01(rng) < config.front_prior ? Viewpoint::Front : Viewpoint::Back;
    inst.class_id = class_dist(rng);
    const double size = config.figure_min_px + u01(rng) * (config.figure_max_px - config.figure_min_px);

    // Canonical front-view offsets as fractions of figure height; the
    // figure's left side is at +X.
    const double hand_x = 0.26 + 0.12 * u01(rng), hand_y = -0.18 + 0.28 * u01(rng);
    const double hand_x2 = 0.26 + 0.12 * u01(rng), hand_y2 = -0.18 + 0.28 * u01(rng);
    const double foot_x = 0.10 + 0.10 * u01(rng), foot_x2 = 0.10 + 0.10 * u01(rng);
    double rel[kPoseKeypoints][2] = {
        {0.0, -0.42}, {hand_x, hand_y}, {-hand_x2, hand_y2}, {0.0, 0.08}, {foot_x, 0.46}, {-foot_x2, 0.46}};
    const double mirror = inst.viewpoint == Viewpoint::Back ? -1.0 : 1.0;
    const double jitter =
        config.keypoint_jitter_px * (inst.viewpoint == Viewpoint::Back ? config.back_jitter_multiplier : 1.0);
    std::vector<double> offsets_px(2 * kPoseKeypoints);
    for (std::size_t k = 0; k < kPoseKeypoints; ++k) {
      offsets_px[2 * k] = mirror * rel[k][0] * size + jitter * unit(rng);
      offsets_px[2 * k + 1] = rel[k][1] * size + jitter * unit(rng);
    }
    double ext_x = 0.0, ext_y = 0.0, min_x = 0.0, max_x = 0.0, min_y = 0.0, max_y = 0.0;
    for (std::size_t k = 0; k < kPoseKeypoints; ++k) {
      min_x = std::min(min_x, offsets_px[2 * k]);
      max_x = std::max(max_x, offsets_px[2 * k]);
      min_y = std::min(min_y, offsets_px[2 * k + 1]);
      max_y = std::max(max_y, offsets_px[2 * k + 1]);
    }
    ext_x = std::max(-min_x, max_x) + 3.0;
    ext_y = std::max(-min_y, max_y) + 0.12 * size + 2.0;  // room for the head disk

    bool placed = false;
    for (int attempt = 0; attempt < kMaxPlacementTries && !placed; ++attempt) {
      inst.cx = ext_x + u01(rng) * std::max(0.0, W - 2 * ext_x);
      inst.cy = ext_y + u01(rng) * std::max(0.0, H - 2 * ext_y);
      bool clear = true;
      for (const Instance& other : scene.instances) {
        if (std::hypot(other.cx - inst.cx, other.cy - inst.cy) < 0.6 * size) clear = false;
      }
      if (!clear) continue;
      placed = occupied.insert(cell_of(inst.cx, inst.cy, config.downsample)).second;
    }
    if (!placed) {
      scene.placement_warning = true;
      continue;
    }
    inst.params.resize(2 * kPoseKeypoints);
    inst.annotated.assign(2 * kPoseKeypoints, true);
    bool any = false;
    for (std::size_t k = 0; k < kPoseKeypoints; ++k) {
      inst.params[2 * k] = offsets_px[2 * k] / D;
      inst.params[2 * k + 1] = offsets_px[2 * k + 1] / D;
      const bool annotated = u01(rng) >= config.unannotated_prob;
      inst.annotated[2 * k] = inst.annotated[2 * k + 1] = annotated;
      any = any || annotated;
    }
    if (!any) inst.annotated[2 * Head] = inst.annotated[2 * Head + 1] = true;
    inst.width_px = max_x - min_x;
    inst.height_px = max_y - min_y;
    Figure fig{size, {}};
    for (std::size_t k = 0; k < kPoseKeypoints; ++k) {
      fig.px.push_back(inst.cx + offsets_px[2 * k]);
      fig.px.push_back(inst.cy + offsets_px[2 * k + 1]);
    }
    figures.push_back(std::move(fig));
    scene.instances.push_back(std::move(inst));
  }

  Canvas canvas(config.height, config.width);
  canvas.background(rng);
  const Rgb face{1.0, 0.85, 0.25};
  for (std::size_t i = 0; i < figures.size(); ++i) {
    const Figure& f = figures[i];
    const Instance& inst = scene.instances[i];
    Rgb body = random_color(rng, 0.3, 0.75);
    body.b = std::max(body.b, 0.55);  // keep bodies away from the face color
    const double t = std::max(1.5, 0.06 * f.size);
    auto kp = [&](std::size_t k) { return std::pair<double, double>{f.px[2 * k], f.px[2 * k + 1]}; };
    const auto [hx, hy] = kp(Head);
    const auto [px, py] = kp(Pelvis);
    const double neck_x = hx + 0.35 * (px - hx), neck_y = hy + 0.35 * (py - hy);
    canvas.segment(hx, hy, px, py, t, body);
    for (std::size_t k : {std::size_t(LeftHand), std::size_t(RightHand)}) {
      canvas.segment(neck_x, neck_y, kp(k).first, kp(k).second, t, body);
    }
    for (std::size_t k : {std::size_t(LeftFoot), std::size_t(RightFoot)}) {
      canvas.segment(px, py, kp(k).first, kp(k).second, t, body);
    }
    const double head_r = 0.11 * f.size;
    canvas.disk(hx, hy, head_r, body);
    if (inst.viewpoint == Viewpoint::Front) canvas.disk(hx, hy, 0.6 * head_r, face);
  }
  scene.image = std::move(canvas.image);
  return scene;
}

Scene gen_scene(const SynthConfig& config, std::uint64_t seed) {
  return config.task == Task::Detection ? gen_detection_scene(config, seed) : gen_pose_scene(config, seed);
}

std::uint64_t scene_seed(std::uint64_t dataset_seed, std::size_t index) {
  // splitmix64 over the combined key
  std::uint64_t z = dataset_seed * 0x9E3779B97F4A7C15ull + index + 0x632BE59BD9B4E019ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::vector<Scene> gen_dataset(const SynthConfig& config, std::size_t count, std::uint64_t dataset_seed) {
  std::vector<Scene> scenes;
  scenes.reserve(count);
  for (std::size_t i = 0; i < count; ++i) scenes.push_back(gen_scene(config, scene_seed(dataset_seed, i)));
  return scenes;
}

double splat_sigma(const Instance& inst, std::size_t downsample) {
  return std::max(1.0, inst.diagonal_px() / double(downsample) / 6.0);
}

DenseTargets build_targets(const Scene& scene, const GridShape& grid, Task task, std::size_t num_classes) {
  if (scene.image.rank() != 3 || scene.image.dim(1) != grid.height || scene.image.dim(2) != grid.width) {
    throw ShapeError("build_targets: image " + to_string(scene.image.shape()) + " does not match grid " +
                     std::to_string(grid.height) + "x" + std::to_string(grid.width));
  }
  const std::size_t h = grid.out_height(), w = grid.out_width(), D = grid.downsample;
  const std::size_t c = task == Task::Detection ? 2 : 2 * kPoseKeypoints;
  DenseTargets t;
  t.heatmap = Tensor({num_classes, h, w}, 0.0);
  t.center_offset = Tensor({2, h, w}, 0.0);
  t.pose_params = Tensor({c, h, w}, 0.0);
  t.pose_observed = Tensor({c, h, w}, 0.0);
  t.positive_mask = Tensor({h, w}, 0.0);
  const std::size_t plane = h * w;
  for (const Instance& inst : scene.instances) {
    if (inst.params.size() != c) throw ValidationError("build_targets: instance target size does not match task");
    if (inst.class_id >= num_classes) throw ValidationError("build_targets: class id out of range");
    const auto [cy, cx] = cell_of(inst.cx, inst.cy, D);
    if (cy >= h || cx >= w || inst.cx < 0.0 || inst.cy < 0.0) {
      throw ValidationError("build_targets: instance center outside the image");
    }
    const std::size_t at = cy * w + cx;
    if (t.positive_mask[at] == 1.0) {
      throw ValidationError("build_targets: two instances share grid cell (" + std::to_string(cy) + ", " +
                            std::to_string(cx) + ")");
    }
    t.positive_mask[at] = 1.0;
    t.center_offset[at] = inst.cx / double(D) - double(cx);
    t.center_offset[plane + at] = inst.cy / double(D) - double(cy);
    for (std::size_t d = 0; d < c; ++d) {
      t.pose_params[d * plane + at] = inst.params[d];
      t.pose_observed[d * plane + at] = inst.annotated[d] ? 1.0 : 0.0;
    }
    const double s = splat_sigma(inst, D);
    double* heat = t.heatmap.data().data() + inst.class_id * plane;
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        const double dy = double(y) - double(cy), dx = double(x) - double(cx);
        heat[y * w + x] = std::max(heat[y * w + x], std::exp(-(dx * dx + dy * dy) / (2 * s * s)));
      }
    }
  }
  return t;
}

}  // namespace mdn

// Acceptance suite: one PASS/FAIL line per criterion. Progress goes to
// stderr; results are also written to acceptance_results.json in the
// working directory. Arguments, when given, select criteria by name.

#include <chrono>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

#include "verify.hpp"

using namespace mdn;

namespace {

struct Criterion {
  std::string name;
  double budget_seconds;  // 0 = no runtime bound
  std::function<verify::CheckResult()> run;
};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  std::set<std::string> only(argv + 1, argv + argc);
  const verify::Progress progress = [](const std::string& line) { std::cerr << "  " << line << std::endl; };

  std::optional<verify::DetectionExperiment> detection;
  double detection_seconds = 0.0;
  auto detection_experiment = [&]() -> const verify::DetectionExperiment& {
    if (!detection) {
      const auto start = std::chrono::steady_clock::now();
      detection = verify::run_detection_experiment({0, 1, 2}, true, progress);
      detection_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    return *detection;
  };

  const std::vector<Criterion> criteria = {
      {"gradient-correctness", 120.0, [] { return verify::gradient_check(1e-4); }},
      {"density-validity", 60.0, [] { return verify::density_check(50, 1e-3); }},
      {"stability", 900.0,
       [&] {
         const auto floor = verify::stability_check({}, progress);
         const auto unbounded = verify::instability_check({}, progress);
         verify::CheckResult r{"stability", floor.passed && unbounded.passed, floor.summary + "; " + unbounded.summary,
                               {{"floor", verify::to_json(floor)}, {"unbounded", verify::to_json(unbounded)}},
                               floor.seconds + unbounded.seconds};
         return r;
       }},
      {"multimodal-superiority", 3600.0,
       [&] {
         auto r = verify::multimodal_check(detection_experiment());
         r.seconds = detection_seconds;
         r.summary += " [detection experiment incl. M=2 run]";
         return r;
       }},
      {"mode-recovery", 0.0, [&] { return verify::mode_recovery_check(*detection_experiment().two_component, 0.6); }},
      {"viewpoint-recovery", 3600.0,
       [&] { return verify::viewpoint_check(verify::train_and_analyze(verify::pose_experiment_config(2, 0), progress), 0.8); }},
      {"convergence-ordering", 0.0, [&] { return verify::convergence_check(detection_experiment()); }},
      {"ap-oracle-equivalence", 0.0, [] { return verify::ap_oracle_check(5, 5); }},
      {"decode-round-trip", 0.0, [] { return verify::round_trip_check(100); }},
      {"displacement-monotonicity", 0.0, [] { return verify::displacement_check(500); }},
  };

  std::size_t failed = 0, ran = 0;
  Json results = Json::array();
  for (const Criterion& c : criteria) {
    if (!only.empty() && !only.count(c.name)) continue;
    ++ran;
    verify::CheckResult r;
    try {
      r = c.run();
    } catch (const std::exception& e) {
      r.passed = false;
      r.summary = std::string("exception: ") + e.what();
    }
    const bool in_budget = c.budget_seconds <= 0.0 || r.seconds <= c.budget_seconds;
    const bool passed = r.passed && in_budget;
    std::string line = std::string(passed ? "[PASS] " : "[FAIL] ") + c.name + ": " + r.summary + " (" +
                       fmt(r.seconds) + " s";
    if (c.budget_seconds > 0.0) line += ", budget " + fmt(c.budget_seconds) + " s";
    line += ")";
    if (!in_budget) line += " runtime over budget";
    std::cout << line << std::endl;
    Json j = verify::to_json(r);
    j["criterion"] = c.name;
    j["passed"] = passed;
    j["budget_seconds"] = c.budget_seconds;
    results.push_back(j);
    failed += passed ? 0 : 1;
  }
  std::ofstream("acceptance_results.json") << results.dump(2) << '\n';
  std::cout << (ran - failed) << "/" << ran << " acceptance criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}

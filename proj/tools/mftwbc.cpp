// Copyright 2026 The mftwbc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command line front end:
//   mftwbc wsmap build --model robot.json --resolution 0.01 --lti-min 0.7 --out poly.txt
//   mftwbc run walk --config walk.json
//   mftwbc run push-sweep --config sweep.json
//   mftwbc report runs/<dir>/sweep.json
// Exit status: 0 ok, 1 run failed, 2 bad configuration or usage.

#include <CLI11.hpp>

#include <ctime>
#include <iostream>

#include "mftwbc/mftwbc.hpp"

#ifndef MFTWBC_VERSION
#define MFTWBC_VERSION "dev"
#endif

namespace fs = std::filesystem;
using namespace mftwbc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitBadConfig = 2;

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

std::string stamp() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%d-%H%M%S", std::gmtime(&t));
  return buf;
}

void write_json(const fs::path& p, const nlohmann::json& j) {
  std::ofstream out(p);
  if (!out) throw Error(ErrorCode::BadConfig, "cannot write " + p.string());
  out << j.dump(2) << '\n';
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p);
  if (!out) throw Error(ErrorCode::BadConfig, "cannot write " + p.string());
  out << s;
}

// Fresh directory under `root`, never reusing an existing one.
fs::path make_run_dir(const std::string& explicit_dir, const std::string& root, const std::string& label) {
  fs::path dir = explicit_dir.empty() ? fs::path(root) / (label + "-" + stamp()) : fs::path(explicit_dir);
  if (explicit_dir.empty())
    for (int k = 2; fs::exists(dir); ++k) dir = fs::path(root) / (label + "-" + stamp() + "-" + std::to_string(k));
  fs::create_directories(dir);
  return dir;
}

struct Manifest {
  nlohmann::json j;
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

  Manifest(const std::string& command, int argc, char** argv) {
    j["tool"] = "mftwbc";
    j["version"] = MFTWBC_VERSION;
    j["command"] = command;
    j["argv"] = std::vector<std::string>(argv, argv + argc);
    j["started"] = utc_now();
    j["outputs"] = nlohmann::json::array();
  }
  void output(const fs::path& p) { j["outputs"].push_back(p.filename().string()); }
  void finish(const fs::path& where, int status) {
    j["finished"] = utc_now();
    j["wall_time"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    j["exit_status"] = status;
    write_json(where, j);
  }
};

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::BadConfig:
    case ErrorCode::SchemaMismatch:
    case ErrorCode::ModelHashMismatch:
      return kExitBadConfig;
    default:
      return kExitFailure;
  }
}

void describe_resources(Manifest& m, const Resources& r) {
  m.j["model_hash"] = hex64(r.model.hash());
  m.j["polyhedron_hash"] = hex64(fnv1a(polyhedron_to_text(r.poly)));
  m.j["polyhedron_faces"] = r.poly.poly.faces();
}

// --- wsmap build ---------------------------------------------------------------------------

struct WsmapArgs {
  std::string model;
  double resolution = 0.01;
  double lti_min = 0.7;
  int max_faces = 6;
  double r_min = -1.0;
  std::string out;
};

int cmd_wsmap_build(const WsmapArgs& a, int argc, char** argv) {
  const RobotModel model = a.model.empty() ? RobotModel::reference() : load_model(a.model);
  if (!(a.resolution > 0.0)) throw Error(ErrorCode::BadConfig, "resolution must be positive");
  MftBounds bounds = default_bounds(model, a.lti_min);
  bounds.validate();
  Manifest m("wsmap build", argc, argv);
  const WorkspaceMap w = build_workspace_map(model, a.resolution, bounds, a.max_faces, a.r_min);
  const fs::path out(a.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  save_polyhedron(w.file, out.string());
  m.output(out);
  nlohmann::json eff = {{"model", a.model.empty() ? "reference" : a.model},
                        {"resolution", a.resolution},
                        {"lti_min", bounds.lti_min},
                        {"raci_max", bounds.raci_max},
                        {"max_faces", a.max_faces},
                        {"r_min", w.file.r_min}};
  const fs::path cfg = out.string() + ".config.json";
  write_json(cfg, eff);
  m.output(cfg);
  m.j["model_hash"] = hex64(model.hash());
  nlohmann::json audit = nlohmann::json::array();
  for (int leg = 0; leg < kNumLegs; ++leg) {
    const FitAudit fa = audit_joint_fit(model, w.fields[leg], w.fits[leg]);
    audit.push_back({{"leg", leg},
                     {"faces", w.fits[leg].poly.faces()},
                     {"inside_not_preferable", fa.inside_not_preferable},
                     {"preferable_outside", fa.preferable_outside},
                     {"max_outside_distance", fa.max_outside_distance},
                     {"ok", fa.ok(w.file.r_min)}});
    std::cout << "leg " << leg << ": " << w.fits[leg].poly.faces() << " faces, " << fa.inside_not_preferable
              << " non-preferable cells inside, " << fa.preferable_outside << " preferable cells outside (max distance "
              << fa.max_outside_distance << " m)\n";
  }
  m.j["audit"] = audit;
  m.finish(out.string() + ".manifest.json", kExitOk);
  std::cout << "wrote " << out.string() << '\n';
  return kExitOk;
}

// --- run walk ------------------------------------------------------------------------------------

struct RunArgs {
  std::string config;
  std::string out;
  std::vector<std::string> controllers;
  int workers = -1;
};

ExperimentSpec load_run_spec(const RunArgs& a) {
  ExperimentSpec s = load_spec(a.config);
  if (!a.controllers.empty()) {
    s.controllers.clear();
    for (const auto& c : a.controllers) s.controllers.push_back(controller_kind_from_string(c));
  }
  if (a.workers >= 0) s.workers = static_cast<unsigned>(a.workers);
  return s;
}

int cmd_run_walk(const RunArgs& a, int argc, char** argv) {
  ExperimentSpec spec = load_run_spec(a);
  const Resources res = load_resources(spec);
  const fs::path dir = make_run_dir(a.out, spec.output_dir, spec.name + "-walk");
  Manifest m("run walk", argc, argv);
  describe_resources(m, res);
  write_json(dir / "effective_config.json", spec_to_json(spec));
  m.output(dir / "effective_config.json");
  int status = kExitOk;
  nlohmann::json summary = nlohmann::json::array();
  for (ControllerKind k : spec.controllers) {
    const std::string tag(to_string(k));
    const fs::path ticks = dir / ("ticks_" + tag + ".csv"), traj = dir / ("trajectory_" + tag + ".csv");
    std::ofstream tf(ticks), jf(traj);
    tf.precision(10);
    jf.precision(10);
    const WalkSummary w = run_walk(spec, res, k, {&tf, &jf});
    m.output(ticks);
    m.output(traj);
    summary.push_back(walk_summary_json(w));
    std::printf("%-4s %-9s t=%.2f s steps=%d mean|xd|=%.3f m/s avg=%.3f m/s height err mean/max=%.4f/%.4f m "
                "tick mean/max=%.3f/%.3f ms faults=%ld\n",
                tag.c_str(), std::string(to_string(w.verdict)).c_str(), w.duration, w.steps, w.mean_abs_speed,
                w.average_speed, w.stats.height_error.mean(), w.stats.height_error.max, 1e3 * w.stats.tick_time.mean(),
                1e3 * w.stats.tick_time.max, w.stats.faults);
    if (w.verdict != Verdict::Recovered) {
      std::fprintf(stderr, "%s: %s\n", tag.c_str(), w.reason.c_str());
      status = kExitFailure;
    }
  }
  write_json(dir / "summary.json", summary);
  m.output(dir / "summary.json");
  m.finish(dir / "manifest.json", status);
  std::cout << "run directory: " << dir.string() << '\n';
  return status;
}

// --- run push-sweep ----------------------------------------------------------------------------

int cmd_run_sweep(const RunArgs& a, int argc, char** argv) {
  ExperimentSpec spec = load_run_spec(a);
  const Resources res = load_resources(spec);
  const fs::path dir = make_run_dir(a.out, spec.output_dir, spec.name + "-sweep");
  Manifest m("run push-sweep", argc, argv);
  describe_resources(m, res);
  write_json(dir / "effective_config.json", spec_to_json(spec));
  m.output(dir / "effective_config.json");
  const SweepResult r = run_push_sweep(spec, res, [](const SweepEntry& e, const RunRecord& run) {
    if (run.verdict == Verdict::Recovered) return;
    std::fprintf(stderr, "%.2f m %-3s: %s at %.1f N s (%s)\n", e.height, std::string(to_string(e.kind)).c_str(),
                 std::string(to_string(run.verdict)).c_str(), run.impulse, run.reason.c_str());
  });
  save_sweep(r, (dir / "sweep.json").string());
  m.output(dir / "sweep.json");
  const std::string table = format_report(r);
  write_text(dir / "report.txt", table);
  write_text(dir / "report.csv", report_csv(r));
  m.output(dir / "report.txt");
  m.output(dir / "report.csv");
  m.j["spec_hash"] = r.spec_hash;
  m.j["workers"] = r.workers;
  std::cout << table << "sweep wall time " << r.wall_time << " s on " << r.workers << " worker(s)\n"
            << "run directory: " << dir.string() << '\n';
  m.finish(dir / "manifest.json", kExitOk);
  return kExitOk;
}

// --- report ----------------------------------------------------------------------------------------

int cmd_report(const std::string& path, const std::string& csv) {
  fs::path p(path);
  if (fs::is_directory(p)) p /= "sweep.json";
  const SweepResult r = load_sweep(p.string());
  std::cout << format_report(r);
  if (!has_data(r)) return kExitFailure;
  if (!csv.empty()) write_text(csv, report_csv(r));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transmissibility-aware whole-body control for a parallel-legged biped"};
  app.set_version_flag("--version", MFTWBC_VERSION);
  app.require_subcommand(1);

  WsmapArgs wa;
  CLI::App* wsmap = app.add_subcommand("wsmap", "Workspace map tools");
  wsmap->require_subcommand(1);
  CLI::App* build = wsmap->add_subcommand("build", "Grid the leg workspace and fit the joint-space polyhedron");
  build->add_option("--model", wa.model, "Robot model file (default: built-in reference)");
  build->add_option("--resolution", wa.resolution, "Grid resolution [m]")->capture_default_str();
  build->add_option("--lti-min", wa.lti_min, "Lower LTI bound")->capture_default_str();
  build->add_option("--max-faces", wa.max_faces, "Faces per leg polygon")->capture_default_str();
  build->add_option("--r-min", wa.r_min, "Boundary margin of the fit [m] (default: 2*sqrt(2)*resolution)");
  build->add_option("--out", wa.out, "Polyhedron file to write")->required();

  RunArgs ra;
  CLI::App* run = app.add_subcommand("run", "Closed-loop experiments");
  run->require_subcommand(1);
  CLI::App* walk = run->add_subcommand("walk", "Stand, step and walk per the command profile");
  CLI::App* sweep = run->add_subcommand("push-sweep", "Push-recovery sweep over heights and impulses");
  for (CLI::App* sub : {walk, sweep}) {
    sub->add_option("--config", ra.config, "Experiment config (JSON)")->required();
    sub->add_option("--out", ra.out, "Run directory (default: <output_dir>/<name>-<kind>-<timestamp>)");
    sub->add_option("--controller", ra.controllers, "MFT and/or SA (overrides the config)");
  }
  sweep->add_option("--workers", ra.workers, "Parallel workers (0: all cores)");

  std::string results, csv;
  CLI::App* report = app.add_subcommand("report", "Print the comparison table of a sweep");
  report->add_option("results", results, "sweep.json or its run directory")->required();
  report->add_option("--csv", csv, "Also write the table as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitBadConfig;
  }

  try {
    if (*build) return cmd_wsmap_build(wa, argc, argv);
    if (*walk) return cmd_run_walk(ra, argc, argv);
    if (*sweep) return cmd_run_sweep(ra, argc, argv);
    if (*report) return cmd_report(results, csv);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitBadConfig;
}

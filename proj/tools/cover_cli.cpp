// Copyright 2026 The COVER Authors.
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

// `cover` command-line tool. Exit codes: 0 success, 1 runtime failure,
// 2 configuration or validation error.

#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cover/candidates.hpp"
#include "cover/curator.hpp"
#include "cover/eval.hpp"
#include "cover/io.hpp"
#include "cover/release.hpp"
#include "cover/scene.hpp"

namespace {

using namespace cover;

struct Flags {
  std::string config;
  std::vector<std::string> scenes;
  std::string out = "cover_out";
  std::string preset;
  std::optional<int> k, m, probe_w, probe_h, count, index;
  std::optional<double> lambda, tau;
  std::optional<std::uint64_t> seed;
  std::string early_stop;
  std::string selector;
  std::string family;
  std::string families;
  std::string lambdas;
  std::string audit_dir;
  bool no_replay = false;
};

// Everything a subcommand needs after config file + flags are merged.
struct Settings {
  RunConfig run;
  EvalConfig eval;  // grid/curator mirror `run`
  std::vector<double> lambdas{0.0, 0.35, 1.0};
  std::string family = "cluttered";
  std::vector<std::string> families{"small_box", "cluttered", "open_plan", "noisy"};
  int count = 3;
  int index = 0;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, sep))
    if (!item.empty()) out.push_back(item);
  return out;
}

double parse_number(const std::string& text, const std::string& key) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("`" + key + "` expects numbers, got `" + text + "`");
  }
}

void apply_preset(Settings& s, const std::string& preset) {
  if (preset.empty() || preset == "default") return;
  if (preset != "harness") throw ConfigError("unknown `preset` `" + preset + "` (expected default|harness)");
  const EvalConfig h = EvalConfig::harness();
  s.run.grid = h.grid;
  s.run.curator = h.curator;
}

Settings load_settings(const Flags& f) {
  Settings s;
  nlohmann::json j = nlohmann::json::object();
  if (!f.config.empty()) {
    const ojson file = read_json(f.config);
    j = nlohmann::json::parse(file.dump());
    detail::reject_unknown(j, "", {"preset", "selector", "seed", "grid", "curator", "element_spacing",
                                   "random_seeds", "lambdas", "family", "families", "count", "index"});
  }
  std::string preset = f.preset;
  if (preset.empty()) detail::read_key(j, "", "preset", preset);
  apply_preset(s, preset);
  s.run = run_config_from_json(j, s.run);
  detail::read_key(j, "", "element_spacing", s.eval.element_spacing);
  detail::read_key(j, "", "random_seeds", s.eval.random_seeds);
  detail::read_key(j, "", "lambdas", s.lambdas);
  detail::read_key(j, "", "family", s.family);
  detail::read_key(j, "", "families", s.families);
  detail::read_key(j, "", "count", s.count);
  detail::read_key(j, "", "index", s.index);

  CuratorConfig& c = s.run.curator;
  if (f.k) c.k = *f.k;
  if (f.lambda) c.lambda = *f.lambda;
  if (f.tau) c.early_stop.tau = *f.tau;
  if (f.m) c.early_stop.m = *f.m;
  if (f.probe_w) c.probe_w = *f.probe_w;
  if (f.probe_h) c.probe_h = *f.probe_h;
  if (!f.early_stop.empty()) {
    if (f.early_stop != "on" && f.early_stop != "off") throw ConfigError("`early-stop` must be on or off");
    c.early_stop.enabled = f.early_stop == "on";
  }
  if (f.seed) s.run.seed = *f.seed;
  if (!f.selector.empty()) s.run.selector = f.selector;
  if (!f.lambdas.empty()) {
    s.lambdas.clear();
    for (const auto& t : split(f.lambdas, ',')) s.lambdas.push_back(parse_number(t, "lambdas"));
  }
  if (!f.family.empty()) s.family = f.family;
  if (!f.families.empty()) s.families = split(f.families, ',');
  if (f.count) s.count = *f.count;
  if (f.index) s.index = *f.index;

  selector_from_name(s.run.selector);
  s.run.grid.validate();
  c.validate();
  if (s.count < 1) throw ConfigError("`count` must be >= 1");
  if (s.index < 0) throw ConfigError("`index` must be >= 0");
  if (s.eval.random_seeds < 1) throw ConfigError("`random_seeds` must be >= 1");
  if (s.eval.element_spacing < 0) throw ConfigError("`element_spacing` must be >= 0");
  if (s.lambdas.empty()) throw ConfigError("`lambdas` must not be empty");
  for (double l : s.lambdas)
    if (!(l >= 0)) throw ConfigError("`lambdas` entries must be >= 0");
  family_from_name(s.family);
  for (const auto& fam : s.families) family_from_name(fam);
  s.eval.grid = s.run.grid;
  s.eval.curator = s.run.curator;
  return s;
}

// Scenes named by --scene, else `count` scenes of `family`.
std::vector<std::unique_ptr<PreparedScene>> gather_scenes(const Flags& f, const Settings& s,
                                                          const std::vector<std::string>& families) {
  std::vector<std::unique_ptr<PreparedScene>> out;
  for (const auto& path : f.scenes) {
    LoadedScene ls = load_scene(path, s.run.seed);
    out.push_back(prepare_scene(ls.id, std::move(ls.mesh), s.eval.grid, s.eval.element_spacing));
  }
  if (!out.empty()) return out;
  for (const auto& fam : families)
    for (int i = 0; i < s.count; ++i)
      out.push_back(prepare_family_scene(family_from_name(fam), s.index + i, s.eval.grid, s.eval.element_spacing));
  return out;
}

std::vector<const PreparedScene*> raw(const std::vector<std::unique_ptr<PreparedScene>>& scenes) {
  std::vector<const PreparedScene*> out;
  for (const auto& s : scenes) out.push_back(s.get());
  return out;
}

LoadedScene single_scene(const Flags& f, const Settings& s) {
  if (f.scenes.size() > 1) throw ConfigError("`scene` accepts a single path for this subcommand");
  if (!f.scenes.empty()) return load_scene(f.scenes.front(), s.run.seed);
  const SceneFamily fam = family_from_name(s.family);
  LoadedScene ls;
  ls.id = std::string(family_name(fam)) + "_" + std::to_string(s.index);
  ls.mesh = gen_room_scene(family_spec(fam, s.index), static_cast<std::uint64_t>(s.index));
  return ls;
}

// Subcommands ----------------------------------------------------------------------

int cmd_gen_scene(const Flags& f) {
  const Settings s = load_settings(f);
  const fs::path out(f.out);
  LoadedScene ls;
  if (!f.scenes.empty()) {
    ls = single_scene(f, s);
  } else {
    const SceneFamily fam = family_from_name(s.family);
    const RoomSpec spec = family_spec(fam, s.index);
    ls.id = std::string(family_name(fam)) + "_" + std::to_string(s.index);
    ls.mesh = gen_room_scene(spec, static_cast<std::uint64_t>(s.index));
    write_text(out / "room.json", room_spec_to_json(spec).dump(2) + "\n");
  }
  write_text(out / "scene.mesh", mesh_text(ls.mesh));
  const Aabb b = ls.mesh.bounds();
  std::printf("gen-scene %s: %zu triangles, %.2f m^2, extent %.2f x %.2f x %.2f m -> %s\n", ls.id.c_str(),
              ls.mesh.size(), ls.mesh.surface_area(), b.extent().x, b.extent().y, b.extent().z,
              (out / "scene.mesh").string().c_str());
  return 0;
}

int cmd_candidates(const Flags& f) {
  const Settings s = load_settings(f);
  LoadedScene ls = single_scene(f, s);
  const Bvh bvh(std::move(ls.mesh));
  const Aabb bounds = bvh.bounds();
  const CandidateGrid grid = gen_candidates(bounds, s.run.grid, bounds.max.y - bounds.min.y);
  CandidateSet set;
  try {
    set = filter_all(bvh, grid.positions);
  } catch (const NoFeasibleCandidates& e) {
    write_candidates(f.out, e.candidates());
    throw;
  }
  write_candidates(f.out, set);
  const auto rej = set.layer_rejections();
  std::printf("candidates %s: %zu proposed (spacing %.3g m, %zu layers), %zu feasible; rejected per layer",
              ls.id.c_str(), set.candidates.size(), grid.spacing_m, grid.layers_m.size(), set.feasible_count());
  for (int l = 0; l < kFilterLayers; ++l) std::printf(" %s=%zu", kLayerNames[l], rej[l]);
  std::printf("\n");
  return 0;
}

int cmd_select(const Flags& f) {
  const Settings s = load_settings(f);
  LoadedScene ls = single_scene(f, s);
  const ExportSummary sum = export_scene(f.out, ls.id, std::move(ls.mesh), s.run);
  std::printf("select %s: %s picked %zu of %zu feasible (%zu proposed) in %.2f s, config %s -> %s\n",
              ls.id.c_str(), s.run.selector.c_str(), sum.selected.size(), sum.feasible, sum.proposals, sum.total_s,
              sum.config_hash.substr(0, 12).c_str(), f.out.c_str());
  return 0;
}

void write_spread(const fs::path& dir, const std::vector<RandomSpread>& spreads) {
  ojson arr = ojson::array();
  for (const auto& r : spreads)
    arr.push_back(ojson{{"scene", r.scene},
                        {"coverage_min", r.coverage_min},
                        {"coverage_max", r.coverage_max},
                        {"conflict_min", r.conflict_min},
                        {"conflict_max", r.conflict_max}});
  write_text(dir / "results" / "random_spread.json", arr.dump(2) + "\n");
}

int cmd_evaluate(const Flags& f) {
  const Settings s = load_settings(f);
  const auto scenes = gather_scenes(f, s, {s.family});
  std::vector<EvalRow> rows;
  std::vector<RandomSpread> spreads;
  for (const auto& scene : scenes) {
    RandomSpread rs;
    auto r = compare_selectors(*scene, s.eval, &rs);
    rows.insert(rows.end(), r.begin(), r.end());
    spreads.push_back(rs);
  }
  write_results(f.out, rows);
  write_spread(f.out, spreads);
  std::printf("evaluate: %zu scenes x 5 selectors -> %s\n", scenes.size(),
              (fs::path(f.out) / "results" / "coverage.csv").string().c_str());
  return 0;
}

int cmd_sweep(const Flags& f) {
  const Settings s = load_settings(f);
  const auto scenes = gather_scenes(f, s, {s.family});
  const SweepResult res = lambda_sweep(raw(scenes), s.lambdas, s.eval);
  write_results(f.out, res.rows);
  write_text(fs::path(f.out) / "results" / "lambda_mean.csv", coverage_csv(res.aggregate));
  std::printf("sweep-lambda: %zu scenes x %zu lambdas, mean conflict", scenes.size(), s.lambdas.size());
  for (const auto& a : res.aggregate) std::printf(" [%g]=%.4f", a.lambda, a.conflict);
  std::printf(" -> %s\n", (fs::path(f.out) / "results" / "coverage.csv").string().c_str());
  return 0;
}

int cmd_cross_scene(const Flags& f) {
  const Settings s = load_settings(f);
  const auto scenes = gather_scenes(f, s, s.families);
  const auto rows = cross_scene_run(raw(scenes), s.eval);
  write_results(f.out, rows);
  double mean = 0;
  for (const auto& r : rows) mean += r.coverage / static_cast<double>(rows.size());
  std::printf("cross-scene: %zu scenes, mean coverage %.4f -> %s\n", rows.size(), mean,
              (fs::path(f.out) / "results" / "coverage.csv").string().c_str());
  return 0;
}

int cmd_oracle_gap(const Flags& f) {
  const Settings s = load_settings(f);
  const auto scenes = gather_scenes(f, s, {s.family});
  CuratorConfig cc = s.eval.curator;
  cc.early_stop.enabled = false;
  ojson runs = ojson::array();
  double worst_speedup = std::numeric_limits<double>::infinity();
  int vacuous = 0, violated = 0;
  for (const auto& scene : scenes) {
    Curator curator(*scene->bvh, scene->candidates, cc);
    const ExactOracle exact = scene->oracle();
    const OracleGapReport rep = curator.oracle_gap_run(exact);
    ojson steps = ojson::array();
    double proxy_s = 0, exact_s = 0;
    for (const auto& r : rep.records) {
      steps.push_back(ojson{{"step", r.step},
                            {"candidates", r.ids.size()},
                            {"epsilon", r.epsilon},
                            {"gamma", r.gamma},
                            {"top1_agree", r.top1_agree},
                            {"proxy_winner", r.proxy_winner},
                            {"exact_best", r.exact_best},
                            {"proxy_time_s", r.proxy_time_s},
                            {"exact_time_s", r.exact_time_s}});
      if (r.step >= 2) proxy_s += r.proxy_time_s, exact_s += r.exact_time_s;
    }
    const double speedup = proxy_s > 0 ? exact_s / proxy_s : 0;
    worst_speedup = std::min(worst_speedup, speedup);
    // Exact greedy gives OPT <= f_greedy / (1 - 1/e); using that upper bound
    // only makes the check stricter.
    const double c = 1.0 - std::exp(-1.0);
    const double opt_upper = std::min(1.0, rep.exact_coverage / c);
    const double bound = c * opt_upper - rep.noise_budget();
    const bool is_vacuous = !(bound > 0);
    const bool holds = rep.proxy_coverage >= bound;
    vacuous += is_vacuous;
    violated += !is_vacuous && !holds;
    runs.push_back(ojson{{"scene", scene->id},
                         {"elements", scene->elements.size()},
                         {"feasible", scene->candidates.feasible_count()},
                         {"proxy_coverage", rep.proxy_coverage},
                         {"exact_greedy_coverage", rep.exact_coverage},
                         {"coverage_gap", rep.coverage_gap},
                         {"noise_budget", rep.noise_budget()},
                         {"bound", bound},
                         {"vacuous", is_vacuous},
                         {"bound_holds", holds},
                         {"eta_fit", rep.eta_fit},
                         {"probe_render_s", rep.probe_render_s},
                         {"proxy_time_s", proxy_s},
                         {"exact_time_s", exact_s},
                         {"speedup", speedup},
                         {"steps", steps}});
  }
  write_text(fs::path(f.out) / "results" / "oracle_gap.json", runs.dump(2) + "\n");
  std::printf("oracle-gap: %zu runs, min speedup %.1fx (steps >= 2), bound vacuous in %d, violated in %d -> %s\n",
              scenes.size(), worst_speedup, vacuous, violated,
              (fs::path(f.out) / "results" / "oracle_gap.json").string().c_str());
  return 0;
}

int cmd_audit(const Flags& f) {
  if (f.audit_dir.empty()) throw ConfigError("`audit` needs a release directory");
  AuditOptions opt;
  opt.replay = !f.no_replay;
  const AuditReport rep = audit_release(f.audit_dir, opt);
  for (const auto& c : rep.checks) {
    std::printf("  %-22s %5d / %-5d %s\n", c.name.c_str(), c.passed, c.total, c.ok() ? "ok" : "FAIL");
    for (const auto& msg : c.failures) std::printf("      %s\n", msg.c_str());
  }
  std::printf("audit %s: %d / %d checks passed (%.1f%%)\n", f.audit_dir.c_str(), rep.passed(), rep.total(),
              rep.total() > 0 ? 100.0 * rep.passed() / rep.total() : 0.0);
  return rep.ok() ? 0 : 1;
}

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "JSON config file");
  sub->add_option("--out", f.out, "output directory");
  sub->add_option("--preset", f.preset, "default|harness");
  sub->add_option("--k", f.k, "frame budget K");
  sub->add_option("--lambda", f.lambda, "conflict weight");
  sub->add_option("--tau", f.tau, "early-stop gain threshold");
  sub->add_option("--m", f.m, "early-stop patience");
  sub->add_option("--seed", f.seed, "random-baseline order / room-spec seed");
  sub->add_option("--probe-w", f.probe_w, "probe width");
  sub->add_option("--probe-h", f.probe_h, "probe height");
  sub->add_option("--early-stop", f.early_stop, "on|off");
  sub->add_option("--selector", f.selector, "cover|random|single_probe|coverage_only|low_conflict");
}

void add_scene_set(CLI::App* sub, Flags& f) {
  sub->add_option("--scene", f.scenes, "room spec (.json) or mesh file; repeatable");
  sub->add_option("--family", f.family, "small_box|cluttered|open_plan|noisy");
  sub->add_option("--count", f.count, "number of family scenes");
  sub->add_option("--index", f.index, "first family scene index");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cover: conflict-aware budgeted ERP viewpoint selection"};
  app.require_subcommand(1);
  Flags f;
  struct Entry {
    const char* name;
    const char* help;
    int (*run)(const Flags&);
  };
  const Entry entries[] = {
      {"gen-scene", "generate a procedural room mesh", cmd_gen_scene},
      {"candidates", "propose and filter candidate viewpoints", cmd_candidates},
      {"select", "select viewpoints and export frames + metadata", cmd_select},
      {"evaluate", "compare the five selectors", cmd_evaluate},
      {"sweep-lambda", "conflict weight sweep", cmd_sweep},
      {"cross-scene", "one config across scene families", cmd_cross_scene},
      {"oracle-gap", "proxy vs exact oracle per step", cmd_oracle_gap},
      {"audit", "re-check an exported scene directory", cmd_audit},
  };
  std::vector<std::pair<CLI::App*, int (*)(const Flags&)>> subs;
  for (const auto& e : entries) {
    CLI::App* sub = app.add_subcommand(e.name, e.help);
    if (std::string(e.name) == "audit") {
      sub->add_option("dir", f.audit_dir, "release directory")->required();
      sub->add_flag("--no-replay", f.no_replay, "skip the K-prefix rerun");
    } else {
      add_common(sub, f);
      add_scene_set(sub, f);
    }
    if (std::string(e.name) == "sweep-lambda") sub->add_option("--lambdas", f.lambdas, "comma-separated lambdas");
    if (std::string(e.name) == "cross-scene") sub->add_option("--families", f.families, "comma-separated families");
    subs.emplace_back(sub, e.run);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    for (const auto& [sub, run] : subs)
      if (sub->parsed()) return run(f);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}

// Copyright 2026 The goalstack Authors
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

// goalstack command-line driver: gen, run, eval, smooth, plot, export-weights.

#include <glob.h>

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "goalstack/goalstack.hpp"

namespace gs = goalstack;

namespace
{

struct Common
{
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string weights;
};

gs::PipelineConfig load(const Common & c)
{
  gs::PipelineConfig cfg = c.config.empty() ? gs::PipelineConfig{} : gs::load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  gs::validate_config(cfg);
  return cfg;
}

gs::PipelineModels models_for(const gs::PipelineConfig & cfg, const Common & c)
{
  gs::PipelineModels m = gs::build_models(cfg);
  if (!c.weights.empty()) gs::load_model_tensors(m, gs::read_weights(c.weights), cfg.motion.steps);
  return m;
}

std::vector<std::string> expand_glob(const std::string & pattern)
{
  glob_t g{};
  const int rc = ::glob(pattern.c_str(), 0, nullptr, &g);
  std::vector<std::string> out;
  if (rc == 0) {
    for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
  }
  globfree(&g);
  std::sort(out.begin(), out.end());
  if (out.empty()) throw gs::ConfigError("no scenario files match '" + pattern + "'");
  return out;
}

std::vector<gs::NamedScenario> load_scenarios(const std::string & pattern)
{
  std::vector<gs::NamedScenario> out;
  for (const auto & path : expand_glob(pattern)) {
    out.push_back({gs::fs::path(path).stem().string(), gs::scenario_from_json(gs::read_json_file(path))});
  }
  return out;
}

void add_common(CLI::App * cmd, Common & c, bool needs_out)
{
  cmd->add_option("--config", c.config, "Pipeline configuration JSON");
  cmd->add_option("--seed", c.seed, "Master seed (overrides the config)");
  auto * o = cmd->add_option("--out", c.out, "Output path");
  if (needs_out) o->required();
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"goalstack: goal-oriented driving pipeline on synthetic scenarios"};
  app.require_subcommand(1);
  Common c;
  std::string scenarios, input, title;
  int count = 1;
  bool sweep = false;

  auto * gen = app.add_subcommand("gen", "Generate scenarios as JSON");
  add_common(gen, c, true);
  gen->add_option("--count", count, "Number of scenarios")->check(CLI::PositiveNumber);

  auto * run = app.add_subcommand("run", "Run the pipeline on one scenario");
  add_common(run, c, true);
  run->add_option("--scenarios", scenarios, "Scenario JSON file")->required();
  run->add_option("--weights", c.weights, "Weights file (default: seeded parameters)");

  auto * eval = app.add_subcommand("eval", "Evaluate a scenario suite");
  add_common(eval, c, true);
  eval->add_option("--scenarios", scenarios, "Glob of scenario JSON files")->required();
  eval->add_option("--weights", c.weights, "Weights file (default: seeded parameters)");
  eval->add_flag("--sweep", sweep, "Also write a tracking-vs-noise sweep CSV");

  auto * sm = app.add_subcommand("smooth", "Smooth a trajectory CSV (t,x,y)");
  add_common(sm, c, true);
  sm->add_option("--input", input, "Trajectory CSV")->required();

  auto * plot = app.add_subcommand("plot", "Render a CSV as an SVG line plot");
  plot->add_option("--input", input, "CSV file; first column is the x axis")->required();
  plot->add_option("--out", c.out, "SVG path")->required();
  plot->add_option("--title", title, "Plot title");

  auto * exp = app.add_subcommand("export-weights", "Write the seeded parameters to a weights file");
  add_common(exp, c, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError & e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*gen) {
      const gs::PipelineConfig cfg = load(c);
      for (int i = 0; i < count; ++i) {
        const auto s = gs::generate_scenario(cfg.scenario, gs::derive_seed(cfg.seed, "gen", static_cast<std::uint64_t>(i)));
        char name[32];
        std::snprintf(name, sizeof(name), "scenario_%03d.json", i);
        gs::write_json_file(gs::fs::path(c.out) / name, gs::scenario_to_json(s));
      }
      std::cout << "wrote " << count << " scenario(s) to " << c.out << "\n";
    } else if (*run) {
      const gs::PipelineConfig cfg = load(c);
      const auto models = models_for(cfg, c);
      const std::string name = gs::fs::path(scenarios).stem().string();
      const auto s = gs::scenario_from_json(gs::read_json_file(scenarios));
      const auto res = gs::run_pipeline(cfg, models, s, name, c.out);
      std::cout << "manifest " << gs::hex64(res.manifest.hash()) << "\n";
    } else if (*eval) {
      const gs::PipelineConfig cfg = load(c);
      const auto models = models_for(cfg, c);
      const auto suite = load_scenarios(scenarios);
      const int threads = gs::thread_count(suite.size());
      const auto res = gs::eval_suite(cfg, models, suite, c.out, threads);
      if (sweep) {
        gs::write_text_file(gs::fs::path(c.out) / "noise_sweep.csv",
                            gs::noise_sweep_csv(cfg, models, suite, {0.0, 0.1, 0.2, 0.4, 0.8}, threads));
      }
      std::cout << gs::report_csv(res.report);
    } else if (*sm) {
      const gs::PipelineConfig cfg = load(c);
      gs::SmootherProblem p = cfg.smoother_problem;
      p.target = gs::read_trajectory_csv(gs::read_text_file(input));
      const auto r = gs::smooth(p, cfg.smoother);
      gs::write_text_file(c.out, gs::write_trajectory_csv(r.x));
      std::cout << "iterations " << r.iterations << " cost " << r.cost_trace.back() << "\n";
    } else if (*plot) {
      const auto table = gs::parse_csv(gs::read_text_file(input));
      gs::write_text_file(c.out, gs::csv_to_svg(table, title));
    } else if (*exp) {
      const gs::PipelineConfig cfg = load(c);
      gs::write_weights(c.out, gs::model_tensors(gs::build_models(cfg)));
    }
  } catch (const gs::ConfigError & e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const gs::ContractViolation & e) {
    std::cerr << "contract violation: " << e.what() << "\n";
    return 3;
  } catch (const std::exception & e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

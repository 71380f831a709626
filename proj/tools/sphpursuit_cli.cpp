#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>

#include "sphpursuit/error.hpp"
#include "sphpursuit/experiment.hpp"
#include "sphpursuit/text.hpp"

using namespace sphpursuit;

namespace {

struct Overrides {
  std::string config;
  bool contrived = false;
  std::optional<std::uint64_t> seed;
  std::optional<double> noise;
  std::optional<std::string> variant;
  std::optional<double> lambda;
  std::optional<int> max_iterations;
  std::optional<double> height;
  std::optional<double> sigma;
  std::optional<std::string> data;
  std::optional<std::string> dictionary;
  bool replay = false;
  std::optional<std::string> output;
};

void add_common(CLI::App* app, Overrides& o) {
  app->add_option("-c,--config", o.config, "JSON experiment configuration");
  app->add_flag("--contrived", o.contrived, "start from the built-in contrived experiment");
  app->add_option("--seed", o.seed, "noise seed (required whenever noise is added)");
  app->add_option("--noise", o.noise, "multiplicative noise level");
  app->add_option("--height", o.height, "satellite height in km");
  app->add_option("--sigma", o.sigma, "upward continuation factor (overrides --height)");
}

ExperimentConfig base_config(const Overrides& o, bool noisy = true) {
  if (!o.config.empty() && o.contrived) throw Error("use either --config or --contrived");
  ExperimentConfig c;
  if (!o.config.empty())
    c = load_config(o.config);
  else if (o.contrived)
    c = contrived_config(0);
  else
    throw Error("a configuration is required (--config FILE or --contrived)");
  if (o.noise) {
    if (!c.model) throw Error("--noise needs a model data source");
    c.noise = NoiseSpec{*o.noise, 0};
  }
  if (o.height) c.height_km = *o.height;
  if (o.sigma) c.sigma_override = *o.sigma;
  if (!noisy) c.noise.reset();
  if (c.noise && c.noise->level > 0.0) {
    if (!o.seed) throw Error("--seed is mandatory for noisy runs");
    c.noise->seed = *o.seed;
  }
  return c;
}

std::ostream& open_out(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path, std::ios::trunc);
  if (!file) throw Error("cannot write " + path);
  return file;
}

int cmd_grid(const std::string& kind, int parameter, const std::string& out) {
  GridSpec spec;
  spec.kind = kind == "reuter" ? GridKind::Reuter
              : (kind == "driscoll_healy" || kind == "dh") ? GridKind::DriscollHealy
                                                           : throw Error("unknown grid kind '" + kind + "'");
  spec.parameter = parameter;
  std::ofstream f;
  write_grid_csv(open_out(out, f), spec.build());
  return 0;
}

int cmd_synth(const Overrides& o, const std::string& out, bool surface) {
  ExperimentConfig c = base_config(o, !surface);
  if (!c.model) throw Error("synth needs a model data source");
  Grid g = c.grid.build();
  Eigen::VectorXd y = synthesize(*c.model, g, surface ? 1.0 : c.sigma());
  if (!surface && c.noise) y = add_noise(y, *c.noise);
  std::ofstream f;
  write_values_csv(open_out(out, f), g, y);
  return 0;
}

int cmd_run(const Overrides& o, bool print_config) {
  ExperimentConfig c = base_config(o, !o.data.has_value());
  if (o.variant) parse_variant(*o.variant, c.pursuit.variant, c.learning);
  if (o.lambda) c.pursuit.lambda0 = *o.lambda;
  if (o.max_iterations) c.pursuit.max_iterations = *o.max_iterations;
  if (o.data) {
    c.model.reset();
    c.noise.reset();
    c.data_file = *o.data;
  }
  if (o.dictionary) {
    c.learning = false;
    c.dictionary = read_dictionary_file(*o.dictionary);
  }
  if (o.replay) c.replay = true;
  if (o.output) c.output_dir = *o.output;
  if (print_config) {
    std::cout << config_to_json(c) << "\n";
    return 0;
  }
  if (c.output_dir.empty()) throw Error("an output directory is required (--output DIR)");
  RunReport r = run_experiment(c);
  std::cout << summary_json(r) << "\n";
  return 0;
}

int cmd_eval(const std::string& approx_path, const std::string& truth_path, const Overrides& o, bool weighted) {
  std::ifstream ain(approx_path);
  if (!ain) throw Error("cannot open " + approx_path);
  auto [grid, approx] = read_values_csv(ain);
  Eigen::VectorXd truth;
  if (!truth_path.empty()) {
    std::ifstream tin(truth_path);
    if (!tin) throw Error("cannot open " + truth_path);
    auto [tg, tv] = read_values_csv(tin);
    if (tg.size() != grid.size()) throw Error("approximation and truth grids differ in size");
    for (std::size_t i = 0; i < tg.size(); ++i)
      if (!(tg.points[i] == grid.points[i])) throw Error("approximation and truth grids differ at row " + std::to_string(i + 2));
    truth = tv;
  } else {
    ExperimentConfig c = base_config(o, false);
    if (!c.model) throw Error("eval needs --truth or a configuration with a model");
    truth = synthesize(*c.model, grid, 1.0);
  }
  std::vector<double> w;
  if (weighted) w = area_weights(grid);
  std::cout << "rel_rmse," << format_double(rel_rmse(approx, truth, w)) << "\n";
  return 0;
}

int cmd_dict_inspect(const std::string& path) {
  auto elems = read_dictionary_file(path);
  std::map<std::string, int> per_class;
  std::set<std::string> distinct;
  int nu = -1;
  for (const auto& e : elems) {
    ++per_class[to_string(trial_class(e))];
    distinct.insert(format_element(e));
    if (const auto* s = std::get_if<ShElement>(&e)) nu = std::max(nu, s->idx.n);
  }
  std::cout << "elements," << elems.size() << "\n";
  std::cout << "distinct," << distinct.size() << "\n";
  for (const auto& [k, v] : per_class) std::cout << "class_" << k << "," << v << "\n";
  std::cout << "nu," << nu << "\n";
  return 0;
}

int cmd_dict_export(const std::string& path, const std::string& out, int first, bool unique) {
  auto elems = read_dictionary_file(path);
  if (first >= 0 && static_cast<std::size_t>(first) < elems.size()) elems.resize(static_cast<std::size_t>(first));
  if (unique) {
    std::set<std::string> seen;
    std::vector<DictionaryElement> kept;
    for (auto& e : elems)
      if (seen.insert(format_element(e)).second) kept.push_back(std::move(e));
    elems = std::move(kept);
  }
  std::ofstream f;
  write_dictionary(open_out(out, f), elems);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learning matching pursuits for spherical downward continuation"};
  app.require_subcommand(1);

  std::string grid_kind = "reuter", grid_out;
  int grid_param = 100;
  auto* grid = app.add_subcommand("grid", "emit a point grid as CSV (phi,t)");
  grid->add_option("--kind", grid_kind, "reuter | driscoll_healy")->capture_default_str();
  grid->add_option("--parameter", grid_param, "Reuter control parameter or Driscoll-Healy bandwidth")->capture_default_str();
  grid->add_option("-o,--out", grid_out, "output file (default stdout)");

  Overrides so;
  std::string synth_out;
  bool synth_surface = false;
  auto* synth = app.add_subcommand("synth", "synthesize model data on the configured grid (phi,t,value)");
  add_common(synth, so);
  synth->add_option("-o,--out", synth_out, "output file (default stdout)");
  synth->add_flag("--surface", synth_surface, "noise-free surface values instead of satellite data");

  Overrides ro;
  bool print_config = false;
  auto* run = app.add_subcommand("run", "run an experiment and write its outputs");
  add_common(run, ro);
  run->add_option("--variant", ro.variant, "rfmp | rofmp | lrfmp | lrofmp");
  run->add_option("--lambda", ro.lambda, "regularization scale");
  run->add_option("--max-iterations", ro.max_iterations, "iteration cap");
  run->add_option("--data", ro.data, "data CSV (phi,t,value) replacing the model source");
  run->add_option("--dictionary", ro.dictionary, "finite dictionary file (switches to a non-learning run)");
  run->add_flag("--replay", ro.replay, "iteration N may only use the first N dictionary elements");
  run->add_option("-o,--output", ro.output, "output directory");
  run->add_flag("--print-config", print_config, "print the effective configuration and exit");

  Overrides eo;
  std::string approx_path, truth_path;
  bool weighted = false;
  auto* eval = app.add_subcommand("eval", "relative RMSE of an approximation against the truth");
  add_common(eval, eo);
  eval->add_option("approximation", approx_path, "approximation CSV (phi,t,value)")->required();
  eval->add_option("--truth", truth_path, "truth CSV on the same grid (default: the configured model)");
  eval->add_flag("--area-weighted", weighted, "weight points by the area they represent");

  auto* dict = app.add_subcommand("dict", "inspect or export dictionary files");
  dict->require_subcommand(1);
  std::string inspect_path;
  auto* inspect = dict->add_subcommand("inspect", "element counts per class and the maximal harmonic degree");
  inspect->add_option("file", inspect_path)->required();
  std::string export_path, export_out;
  int export_first = -1;
  bool export_unique = false;
  auto* exp = dict->add_subcommand("export", "rewrite records canonically");
  exp->add_option("file", export_path)->required();
  exp->add_option("-o,--out", export_out, "output file (default stdout)");
  exp->add_option("--first", export_first, "keep only the first N records");
  exp->add_flag("--unique", export_unique, "drop repeated elements, keeping the first occurrence");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*grid) return cmd_grid(grid_kind, grid_param, grid_out);
    if (*synth) return cmd_synth(so, synth_out, synth_surface);
    if (*run) return cmd_run(ro, print_config);
    if (*eval) return cmd_eval(approx_path, truth_path, eo, weighted);
    if (*inspect) return cmd_dict_inspect(inspect_path);
    if (*exp) return cmd_dict_export(export_path, export_out, export_first, export_unique);
  } catch (const ParseError& e) {
    std::cerr << "error: parse: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

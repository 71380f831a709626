#include "sphpursuit/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "sphpursuit/error.hpp"
#include "sphpursuit/text.hpp"

namespace sphpursuit {

using json = nlohmann::json;

namespace {

std::string lower(std::string s) {
  for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return s;
}

GridKind parse_grid_kind(const std::string& s) {
  auto k = lower(s);
  if (k == "reuter") return GridKind::Reuter;
  if (k == "driscoll_healy" || k == "dh") return GridKind::DriscollHealy;
  if (k == "custom") return GridKind::Custom;
  throw Error("unknown grid kind '" + s + "'");
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

GridSpec grid_from_json(const json& j, const std::filesystem::path& base) {
  GridSpec g;
  if (j.contains("file")) {
    g.kind = GridKind::Custom;
    g.file = resolve(base, j.at("file").get<std::string>());
    g.parameter = 0;
    return g;
  }
  g.kind = parse_grid_kind(j.value("kind", std::string("reuter")));
  g.parameter = j.at("parameter").get<int>();
  return g;
}

json grid_to_json(const GridSpec& g) {
  if (g.kind == GridKind::Custom) return {{"file", g.file.string()}};
  return {{"kind", to_string(g.kind)}, {"parameter", g.parameter}};
}

TrialClass parse_class(const std::string& s) {
  auto k = lower(s);
  if (k == "sh") return TrialClass::SH;
  if (k == "sl") return TrialClass::SL;
  if (k == "apk") return TrialClass::APK;
  if (k == "apw") return TrialClass::APW;
  throw Error("unknown trial-function class '" + s + "'");
}

std::vector<double> doubles(const json& j) { return j.get<std::vector<double>>(); }

void append_elements(const json& item, const std::filesystem::path& base, std::vector<DictionaryElement>& out) {
  if (item.is_string()) {
    out.push_back(parse_element(item.get<std::string>()));
    return;
  }
  if (!item.is_object()) throw Error("element list entries must be records or generator objects");
  if (item.contains("file")) {
    auto more = read_dictionary_file(resolve(base, item.at("file").get<std::string>()));
    out.insert(out.end(), more.begin(), more.end());
    return;
  }
  TrialClass kind = parse_class(item.at("class").get<std::string>());
  std::vector<DictionaryElement> block;
  switch (kind) {
    case TrialClass::SH:
      block = sh_block(item.at("max_degree").get<int>());
      break;
    case TrialClass::SL:
      block = slepian_block(item.at("bandlimit").get<int>(), doubles(item.at("c")), doubles(item.at("alpha")),
                            doubles(item.at("beta")), doubles(item.at("gamma")));
      break;
    default:
      block = kernel_block(kind, doubles(item.at("radii")), grid_from_json(item.at("grid"), base).build(),
                           item.value("normalized", true));
  }
  out.insert(out.end(), block.begin(), block.end());
}

std::vector<DictionaryElement> elements_from_json(const json& j, const std::filesystem::path& base) {
  std::vector<DictionaryElement> out;
  if (!j.is_array()) throw Error("element lists must be arrays");
  for (const auto& item : j) append_elements(item, base, out);
  return out;
}

json elements_to_json(const std::vector<DictionaryElement>& v) {
  json a = json::array();
  for (const auto& e : v) a.push_back(format_element(e));
  return a;
}

PotentialModel model_from_json(const json& j, const std::filesystem::path& base) {
  PotentialModel m;
  m.name = j.value("name", std::string("model"));
  if (j.contains("coefficients_file")) {
    auto path = resolve(base, j.at("coefficients_file").get<std::string>());
    m.coefficients = ingest_coeffs(path).coefficients;
  } else if (j.contains("coefficients")) {
    std::stringstream ss;
    for (const auto& row : j.at("coefficients")) {
      if (!row.is_array() || row.size() != 3) throw Error("coefficient rows are [n, j, value]");
      ss << row[0].get<int>() << ',' << row[1].get<int>() << ',' << format_double(row[2].get<double>()) << '\n';
    }
    m.coefficients = read_coeffs(ss);
  }
  if (j.contains("terms")) {
    for (const auto& t : j.at("terms"))
      m.terms.emplace_back(parse_element(t.at("element").get<std::string>()), t.at("weight").get<double>());
  }
  if (!m.coefficients && m.terms.empty()) throw Error("model '" + m.name + "' has neither coefficients nor terms");
  return m;
}

json model_to_json(const PotentialModel& m) {
  json j{{"name", m.name}};
  if (m.coefficients) {
    json rows = json::array();
    for (int k = 0; k < sh_count(m.coefficients->L); ++k) {
      auto idx = ShIndex::from_linear(k);
      rows.push_back({idx.n, idx.j, m.coefficients->table[k]});
    }
    j["coefficients"] = rows;
  }
  if (!m.terms.empty()) {
    json terms = json::array();
    for (const auto& [e, w] : m.terms) terms.push_back({{"element", format_element(e)}, {"weight", w}});
    j["terms"] = terms;
  }
  return j;
}

std::string schedule_name(LambdaSchedule s) {
  return s == LambdaSchedule::Stationary ? "stationary" : "nonstationary";
}

LambdaSchedule parse_schedule(const std::string& s) {
  auto k = lower(s);
  if (k == "stationary") return LambdaSchedule::Stationary;
  if (k == "nonstationary" || k == "non-stationary") return LambdaSchedule::NonStationary;
  throw Error("unknown lambda schedule '" + s + "'");
}

std::string fmt(double v) { return format_double(v); }

}  // namespace

Grid GridSpec::build() const {
  switch (kind) {
    case GridKind::Reuter: return reuter_grid(parameter);
    case GridKind::DriscollHealy: return driscoll_healy_grid(parameter);
    case GridKind::Custom: {
      std::ifstream in(file);
      if (!in) throw Error("cannot open grid file " + file.string());
      return read_grid_csv(in);
    }
  }
  throw Error("invalid grid kind");
}

void parse_variant(const std::string& name, Variant& variant, bool& learning) {
  auto k = lower(name);
  if (k == "rfmp") { variant = Variant::RFMP; learning = false; return; }
  if (k == "rofmp") { variant = Variant::ROFMP; learning = false; return; }
  if (k == "lrfmp") { variant = Variant::RFMP; learning = true; return; }
  if (k == "lrofmp") { variant = Variant::ROFMP; learning = true; return; }
  throw Error("unknown variant '" + name + "' (expected rfmp, rofmp, lrfmp or lrofmp)");
}

std::string variant_name(Variant variant, bool learning) {
  std::string base = variant == Variant::RFMP ? "rfmp" : "rofmp";
  return learning ? "l" + base : base;
}

double ExperimentConfig::sigma() const {
  if (sigma_override) return *sigma_override;
  return (earth_radius_km + height_km) / earth_radius_km;
}

void ExperimentConfig::validate() const {
  pursuit.validate();
  if (!(sigma() >= 1.0)) throw Error("sigma must be >= 1");
  if (model.has_value() == !data_file.empty()) throw Error("exactly one data source (model or data file) is required");
  if (noise && !model) throw Error("noise applies to model data only");
  if (noise && !(noise->level >= 0.0)) throw Error("noise level must be >= 0");
  if (!data_file.empty() && !std::filesystem::exists(data_file))
    throw Error("data file " + data_file.string() + " does not exist");
  if (grid.kind == GridKind::Custom && data_file.empty() && !std::filesystem::exists(grid.file))
    throw Error("grid file " + grid.file.string() + " does not exist");
  if (learning) {
    spec.validate();
    learn.validate();
    for (const auto& e : start)
      if (!spec.enabled(trial_class(e)))
        throw Error("starting element " + format_element(e) + " belongs to a disabled class");
  } else if (dictionary.empty()) {
    throw Error("finite-dictionary runs need a non-empty dictionary");
  }
}

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(std::string("config: ") + e.what());
  }
  ExperimentConfig c;
  try {
    c.name = j.value("name", c.name);
    if (j.contains("grid")) c.grid = grid_from_json(j.at("grid"), base);
    if (j.contains("forward")) {
      const auto& f = j.at("forward");
      c.height_km = f.value("height_km", c.height_km);
      c.earth_radius_km = f.value("earth_radius_km", c.earth_radius_km);
      if (f.contains("sigma")) c.sigma_override = f.at("sigma").get<double>();
    }
    if (j.contains("pursuit")) {
      const auto& p = j.at("pursuit");
      if (p.contains("variant")) parse_variant(p.at("variant").get<std::string>(), c.pursuit.variant, c.learning);
      c.pursuit.lambda0 = p.value("lambda", c.pursuit.lambda0);
      c.pursuit.lambda_relative = p.value("lambda_relative", c.pursuit.lambda_relative);
      if (p.contains("schedule")) c.pursuit.schedule = parse_schedule(p.at("schedule").get<std::string>());
      c.pursuit.noise_threshold = p.value("noise_threshold", c.pursuit.noise_threshold);
      c.pursuit.max_iterations = p.value("max_iterations", c.pursuit.max_iterations);
      c.pursuit.restart_period = p.value("restart_period", c.pursuit.restart_period);
    }
    if (j.contains("learn")) {
      const auto& l = j.at("learn");
      c.spec.max_sh_degree = l.value("max_sh_degree", c.spec.max_sh_degree);
      c.spec.slepian_bandlimit = l.value("slepian_bandlimit", c.spec.slepian_bandlimit);
      if (l.contains("classes")) {
        c.spec.use_sh = c.spec.use_sl = c.spec.use_apk = c.spec.use_apw = false;
        for (const auto& s : l.at("classes")) {
          switch (parse_class(s.get<std::string>())) {
            case TrialClass::SH: c.spec.use_sh = true; break;
            case TrialClass::SL: c.spec.use_sl = true; break;
            case TrialClass::APK: c.spec.use_apk = true; break;
            case TrialClass::APW: c.spec.use_apw = true; break;
          }
        }
      }
      c.learn.epsilon = l.value("epsilon", c.learn.epsilon);
      c.learn.narrowing = l.value("narrowing", c.learn.narrowing);
      c.learn.sl_fd_step = l.value("sl_fd_step", c.learn.sl_fd_step);
      if (l.contains("global")) {
        const auto& g = l.at("global");
        c.learn.global.max_evaluations = g.value("max_evaluations", c.learn.global.max_evaluations);
        c.learn.global.max_seconds = g.value("max_seconds", c.learn.global.max_seconds);
      }
      if (l.contains("local")) {
        const auto& g = l.at("local");
        c.learn.local.ftol = g.value("ftol", c.learn.local.ftol);
        c.learn.local.xtol = g.value("xtol", c.learn.local.xtol);
        c.learn.local.max_iterations = g.value("max_iterations", c.learn.local.max_iterations);
        c.learn.local.fd_step = g.value("fd_step", c.learn.local.fd_step);
      }
      if (l.contains("start")) c.start = elements_from_json(l.at("start"), base);
    }
    if (j.contains("dictionary")) {
      const auto& d = j.at("dictionary");
      c.dictionary = elements_from_json(d.at("elements"), base);
      c.replay = d.value("replay", false);
    }
    if (j.contains("data")) {
      const auto& d = j.at("data");
      if (d.contains("file")) c.data_file = resolve(base, d.at("file").get<std::string>());
      if (d.contains("model")) c.model = model_from_json(d.at("model"), base);
      if (d.contains("noise")) {
        const auto& n = d.at("noise");
        NoiseSpec ns;
        ns.level = n.value("level", ns.level);
        if (!n.contains("seed")) throw Error("noise needs an explicit seed");
        ns.seed = n.at("seed").get<std::uint64_t>();
        c.noise = ns;
      }
    }
    if (j.contains("evaluation")) {
      const auto& e = j.at("evaluation");
      if (e.contains("grid")) c.eval_grid = grid_from_json(e.at("grid"), base);
      c.area_weighted_rmse = e.value("area_weighted", false);
    }
    if (j.contains("output_dir")) c.output_dir = resolve(base, j.at("output_dir").get<std::string>());
  } catch (const json::exception& e) {
    throw Error(std::string("config: ") + e.what());
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
}

std::string config_to_json(const ExperimentConfig& c) {
  json j;
  j["name"] = c.name;
  j["grid"] = grid_to_json(c.grid);
  j["forward"] = {{"height_km", c.height_km}, {"earth_radius_km", c.earth_radius_km}};
  if (c.sigma_override) j["forward"]["sigma"] = *c.sigma_override;
  j["pursuit"] = {{"variant", variant_name(c.pursuit.variant, c.learning)},
                  {"lambda", c.pursuit.lambda0},
                  {"lambda_relative", c.pursuit.lambda_relative},
                  {"schedule", schedule_name(c.pursuit.schedule)},
                  {"noise_threshold", c.pursuit.noise_threshold},
                  {"max_iterations", c.pursuit.max_iterations},
                  {"restart_period", c.pursuit.restart_period}};
  json classes = json::array();
  if (c.spec.use_sh) classes.push_back("SH");
  if (c.spec.use_sl) classes.push_back("SL");
  if (c.spec.use_apk) classes.push_back("APK");
  if (c.spec.use_apw) classes.push_back("APW");
  j["learn"] = {{"max_sh_degree", c.spec.max_sh_degree},
                {"slepian_bandlimit", c.spec.slepian_bandlimit},
                {"classes", classes},
                {"epsilon", c.learn.epsilon},
                {"narrowing", c.learn.narrowing},
                {"sl_fd_step", c.learn.sl_fd_step},
                {"global", {{"max_evaluations", c.learn.global.max_evaluations},
                            {"max_seconds", c.learn.global.max_seconds}}},
                {"local", {{"ftol", c.learn.local.ftol},
                           {"xtol", c.learn.local.xtol},
                           {"max_iterations", c.learn.local.max_iterations},
                           {"fd_step", c.learn.local.fd_step}}},
                {"start", elements_to_json(c.start)}};
  if (!c.dictionary.empty()) j["dictionary"] = {{"elements", elements_to_json(c.dictionary)}, {"replay", c.replay}};
  json data = json::object();
  if (!c.data_file.empty()) data["file"] = c.data_file.string();
  if (c.model) data["model"] = model_to_json(*c.model);
  if (c.noise) data["noise"] = {{"level", c.noise->level}, {"seed", c.noise->seed}};
  j["data"] = data;
  j["evaluation"] = {{"grid", grid_to_json(c.eval_grid)}, {"area_weighted", c.area_weighted_rmse}};
  if (!c.output_dir.empty()) j["output_dir"] = c.output_dir.string();
  return j.dump(2);
}

PotentialModel contrived_model() {
  PotentialModel m;
  m.name = "contrived";
  m.terms.emplace_back(ShElement{{9, 5}}, 1.0);
  m.terms.emplace_back(ShElement{{5, 5}}, 1.0);
  m.terms.emplace_back(ShElement{{2, 0}}, 1.0);
  m.terms.emplace_back(ApkElement{BallPoint(0.5, 1.5 * kPi, kPi / 4), true}, 1.0);
  m.terms.emplace_back(ApkElement{BallPoint(0.75, kTwoPi, -kPi / 4), true}, 1.0);
  m.terms.emplace_back(ApkElement{BallPoint(0.9, kPi / 2, kPi / 4), true}, 1.0);
  return m;
}

ExperimentConfig contrived_config(std::uint64_t seed) {
  ExperimentConfig c;
  c.name = "contrived";
  c.grid = {GridKind::Reuter, 100, {}};
  c.height_km = 500.0;
  c.pursuit.variant = Variant::ROFMP;
  c.pursuit.lambda0 = 1e-8;
  c.pursuit.lambda_relative = true;
  c.pursuit.max_iterations = 100;
  c.learning = true;
  c.spec.max_sh_degree = 10;
  c.spec.use_sl = false;
  c.spec.use_apw = false;
  c.start = kernel_block(TrialClass::APK, {0.94}, reuter_grid(2));
  c.model = contrived_model();
  c.noise = NoiseSpec{0.05, seed};
  return c;
}

Eigen::VectorXd prepare_data(const ExperimentConfig& cfg, Grid& grid) {
  if (!cfg.data_file.empty()) {
    std::ifstream in(cfg.data_file);
    if (!in) throw Error("cannot open data file " + cfg.data_file.string());
    auto [g, y] = read_values_csv(in);
    grid = std::move(g);
    return y;
  }
  grid = cfg.grid.build();
  Eigen::VectorXd y = synthesize(*cfg.model, grid, cfg.sigma());
  if (cfg.noise) y = add_noise(y, *cfg.noise);
  return y;
}

void write_log_header(std::ostream& out) {
  out << "iteration,class,element,provenance,alpha,objective,rel_data_error,tikhonov,wall_seconds,restarted\n";
}

void write_log_row(std::ostream& out, const IterationRecord& r, const std::string& provenance) {
  out << r.iteration << ',' << to_string(trial_class(r.element)) << ',' << format_element(r.element) << ','
      << provenance << ',' << fmt(r.alpha) << ',' << fmt(r.objective) << ',' << fmt(r.rel_data_error) << ','
      << fmt(r.tikhonov) << ',' << fmt(r.wall_seconds) << ',' << (r.restarted ? 1 : 0) << '\n';
}

std::vector<IterationRecord> read_log(std::istream& in, std::vector<std::string>* provenance) {
  std::vector<IterationRecord> out;
  std::string line;
  int lineno = 0;
  if (!std::getline(in, line)) throw ParseError("empty log", 1);
  ++lineno;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto f = split(line, ',');
    if (f.size() != 10) throw ParseError("expected 10 fields", lineno);
    IterationRecord r;
    try {
      r.iteration = parse_int(f[0]);
      r.element = parse_element(f[2], lineno);
      r.alpha = parse_double(f[4]);
      r.objective = parse_double(f[5]);
      r.rel_data_error = parse_double(f[6]);
      r.tikhonov = parse_double(f[7]);
      r.wall_seconds = parse_double(f[8]);
      r.restarted = parse_int(f[9]) != 0;
    } catch (const std::invalid_argument& e) {
      throw ParseError(e.what(), lineno);
    }
    if (provenance) provenance->emplace_back(f[3]);
    out.push_back(std::move(r));
  }
  return out;
}

void write_learnt_coefficients(std::ostream& out, const LearntDictionary& d) {
  out << "iteration,element,alpha_selected,alpha_final\n";
  for (const auto& e : d.entries)
    out << e.iteration << ',' << format_element(e.element) << ',' << fmt(e.alpha_selected) << ','
        << fmt(e.alpha_final) << '\n';
}

LearntDictionary read_learnt_coefficients(std::istream& in) {
  LearntDictionary d;
  std::string line;
  int lineno = 0;
  if (!std::getline(in, line)) throw ParseError("empty coefficient trace", 1);
  ++lineno;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto f = split(line, ',');
    if (f.size() != 4) throw ParseError("expected 4 fields", lineno);
    try {
      d.entries.push_back({parse_element(f[1], lineno), parse_int(f[0]), parse_double(f[2]), parse_double(f[3])});
    } catch (const std::invalid_argument& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  return d;
}

namespace {

void run_loop(const ExperimentConfig& cfg, const ForwardModel& fm, const Eigen::VectorXd& y, std::ostream* log,
              RunReport& rep) {
  rep.variant = variant_name(cfg.pursuit.variant, cfg.learning);
  rep.data = y;
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };

  PursuitState st(fm, y, cfg.pursuit);
  std::optional<Learner> learner;
  std::optional<FiniteDictionary> finite;
  if (cfg.learning)
    learner.emplace(fm, cfg.spec, cfg.learn, cfg.start);
  else
    finite.emplace(cfg.dictionary, fm);

  std::vector<double> alpha_selected;
  StopReason stop = StopReason::None;
  auto finish = [&] {
    rep.stop = stop;
    rep.iterations = st.iteration();
    rep.learnt = LearntDictionary::from_state(st, alpha_selected);
    rep.nu = rep.learnt.max_sh_degree();
    rep.lambda = st.lambda();
    rep.rel_data_error = st.rel_data_error();
    rep.tikhonov = st.tikhonov_value();
    rep.residual = st.residual();
    rep.restarts = st.restarts();
    rep.wall_seconds = elapsed();
  };

  try {
    while ((stop = st.terminated()) == StopReason::None) {
      bool restarted = false;
      if (st.restart_due()) {
        st.restart();
        restarted = true;
      }
      DictionaryElement element;
      Eigen::VectorXd column;
      std::string provenance = "dictionary";
      if (learner) {
        LearnStepResult r = learner->step(st);
        if (!r.chosen) {
          stop = StopReason::Exhausted;
          break;
        }
        if (!(r.chosen->value >= r.starting_best))
          throw Error("learning dominance violated at iteration " + std::to_string(st.iteration() + 1));
        ++rep.dominance_checks;
        element = r.chosen->element;
        column = r.chosen->column;
        provenance = to_string(r.chosen->provenance);
      } else {
        std::size_t limit = cfg.replay ? static_cast<std::size_t>(st.iteration() + 1) : finite->size();
        auto ch = finite->argmax(st, limit);
        if (!ch) {
          stop = StopReason::Exhausted;
          break;
        }
        element = finite->element(ch->index);
        column = finite->column(ch->index);
      }
      Objective o = st.step(element, column);
      IterationRecord rec;
      rec.iteration = st.iteration();
      rec.element = element;
      rec.alpha = st.chosen().back().alpha;
      rec.objective = o.value;
      rec.rel_data_error = st.rel_data_error();
      rec.tikhonov = st.tikhonov_value();
      rec.wall_seconds = elapsed();
      rec.restarted = restarted;
      alpha_selected.push_back(rec.alpha);
      if (log) {
        write_log_row(*log, rec, provenance);
        log->flush();
      }
      rep.log.push_back(std::move(rec));
      rep.provenance.push_back(provenance);
    }
  } catch (...) {
    finish();
    throw;
  }
  finish();
}

}  // namespace

RunReport run_pursuit(const ExperimentConfig& cfg, const ForwardModel& fm, const Eigen::VectorXd& y,
                      std::ostream* log) {
  RunReport rep;
  run_loop(cfg, fm, y, log, rep);
  return rep;
}

std::string summary_json(const RunReport& r, const std::string& error) {
  json j;
  j["variant"] = r.variant;
  j["stop_reason"] = to_string(r.stop);
  j["iterations"] = r.iterations;
  j["nu"] = r.nu;
  j["lambda"] = r.lambda;
  j["rel_data_error"] = r.rel_data_error;
  j["tikhonov"] = r.tikhonov;
  j["rel_rmse"] = r.rel_rmse ? json(*r.rel_rmse) : json(nullptr);
  j["wall_seconds"] = r.wall_seconds;
  j["restarts"] = r.restarts;
  j["dominance_checks"] = r.dominance_checks;
  std::set<std::string> distinct;
  std::set<std::pair<int, int>> sh;
  for (const auto& e : r.learnt.entries) {
    distinct.insert(format_element(e.element));
    if (const auto* s = std::get_if<ShElement>(&e.element)) sh.insert({s->idx.n, s->idx.j});
  }
  j["distinct_elements"] = distinct.size();
  json shj = json::array();
  for (const auto& [n, m] : sh) shj.push_back({n, m});
  j["sh_indices"] = shj;
  if (!error.empty()) j["error"] = error;
  return j.dump(2);
}

namespace {

void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::trunc);
  if (!out) throw Error("cannot write " + p.string());
  out << content;
}

void write_outputs(const ExperimentConfig& cfg, RunReport& rep, const std::string& error) {
  const auto& dir = cfg.output_dir;
  {
    std::ofstream out(dir / "dictionary.txt", std::ios::trunc);
    write_dictionary(out, rep.learnt.elements());
  }
  {
    std::ofstream out(dir / "coefficients.csv", std::ios::trunc);
    write_learnt_coefficients(out, rep.learnt);
  }
  if (rep.approximation.size() == static_cast<Eigen::Index>(rep.eval_grid.size()) && rep.eval_grid.size() > 0) {
    std::ofstream out(dir / "approximation.csv", std::ios::trunc);
    write_values_csv(out, rep.eval_grid, rep.approximation);
  }
  write_file(dir / "summary.json", summary_json(rep, error) + "\n");
}

void evaluate(const ExperimentConfig& cfg, RunReport& rep) {
  rep.eval_grid = cfg.eval_grid.build();
  Eigen::VectorXd alpha(static_cast<Eigen::Index>(rep.learnt.entries.size()));
  for (std::size_t i = 0; i < rep.learnt.entries.size(); ++i)
    alpha[static_cast<Eigen::Index>(i)] = rep.learnt.entries[i].alpha_final;
  rep.approximation = evaluate_expansion(rep.learnt.elements(), alpha, rep.eval_grid);
  if (cfg.model) {
    rep.truth = synthesize(*cfg.model, rep.eval_grid, 1.0);
    std::vector<double> w;
    if (cfg.area_weighted_rmse) w = area_weights(rep.eval_grid);
    rep.rel_rmse = rel_rmse(rep.approximation, *rep.truth, w);
  }
}

}  // namespace

RunReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const bool write = !cfg.output_dir.empty();
  std::ofstream log;
  if (write) {
    std::filesystem::create_directories(cfg.output_dir);
    write_file(cfg.output_dir / "config.json", config_to_json(cfg) + "\n");
    log.open(cfg.output_dir / "iterations.csv", std::ios::trunc);
    if (!log) throw Error("cannot write iteration log");
    write_log_header(log);
  }
  RunReport rep;
  rep.variant = variant_name(cfg.pursuit.variant, cfg.learning);
  try {
    Grid grid;
    Eigen::VectorXd y = prepare_data(cfg, grid);
    ForwardModel fm(grid, cfg.sigma());
    run_loop(cfg, fm, y, write ? &log : nullptr, rep);
    evaluate(cfg, rep);
  } catch (const std::exception& e) {
    if (write) {
      log.flush();
      try {
        write_outputs(cfg, rep, e.what());
      } catch (...) {
      }
    }
    throw;
  }
  if (write) write_outputs(cfg, rep, {});
  return rep;
}

}  // namespace sphpursuit

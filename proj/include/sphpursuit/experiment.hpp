#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sphpursuit/io.hpp"
#include "sphpursuit/learn.hpp"
#include "sphpursuit/pursuit.hpp"

namespace sphpursuit {

struct GridSpec {
  GridKind kind = GridKind::Reuter;
  int parameter = 100;
  std::filesystem::path file;  // Custom grids: CSV with header phi,t

  Grid build() const;
};

/// rfmp | rofmp | lrfmp | lrofmp
void parse_variant(const std::string& name, Variant& variant, bool& learning);
std::string variant_name(Variant variant, bool learning);

struct ExperimentConfig {
  std::string name = "experiment";

  GridSpec grid;
  double height_km = 500.0;
  double earth_radius_km = 6371.0;
  std::optional<double> sigma_override;
  double sigma() const;

  PursuitConfig pursuit;
  bool learning = true;

  // Learning runs.
  InfiniteDictionarySpec spec;
  LearnConfig learn;
  std::vector<DictionaryElement> start;  // continuous-class starting elements

  // Finite-dictionary runs.
  std::vector<DictionaryElement> dictionary;
  bool replay = false;  // iteration N may only use the first N elements

  // Exactly one data source: a model (plus optional noise) or a data file.
  std::optional<PotentialModel> model;
  std::optional<NoiseSpec> noise;
  std::filesystem::path data_file;

  GridSpec eval_grid{GridKind::DriscollHealy, 50, {}};
  bool area_weighted_rmse = false;

  std::filesystem::path output_dir;

  void validate() const;
};

/// JSON configuration. Relative paths resolve against base_dir. Element
/// lists are given as record strings or as generator blocks.
ExperimentConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir = ".");
ExperimentConfig load_config(const std::filesystem::path& path);
/// Canonical JSON form; parse_config(config_to_json(c)) reproduces c.
std::string config_to_json(const ExperimentConfig& cfg);

/// The contrived experiment: SH(9,5) + SH(5,5) + SH(2,0) plus three
/// normalized APKs, 500 km height, Reuter(100) data grid, SH <= 10 plus six
/// APKs at r = 0.94 to start, lambda = 1e-8 ||y||, 5% noise, LROFMP.
PotentialModel contrived_model();
ExperimentConfig contrived_config(std::uint64_t seed);

struct RunReport {
  std::string variant;
  std::vector<IterationRecord> log;
  std::vector<std::string> provenance;  // learning runs: candidate origin per iteration
  LearntDictionary learnt;
  StopReason stop = StopReason::None;
  int iterations = 0;
  int nu = -1;  // learnt maximal harmonic degree
  double lambda = 0.0;
  double rel_data_error = 1.0;
  double tikhonov = 0.0;
  std::optional<double> rel_rmse;
  double wall_seconds = 0.0;
  int restarts = 0;
  int dominance_checks = 0;
  Eigen::VectorXd data;
  Eigen::VectorXd residual;
  Grid eval_grid;
  Eigen::VectorXd approximation;
  std::optional<Eigen::VectorXd> truth;
};

/// Data vector on the forward-model grid for the configured source.
Eigen::VectorXd prepare_data(const ExperimentConfig& cfg, Grid& grid);

/// Runs the configured pursuit. When cfg.output_dir is set it writes
/// iterations.csv, dictionary.txt, coefficients.csv, approximation.csv and
/// summary.json there; on error the partial outputs plus the diagnostic are
/// written before the exception propagates.
RunReport run_experiment(const ExperimentConfig& cfg);

/// The iteration loop on prepared data; `log` receives iterations.csv rows.
RunReport run_pursuit(const ExperimentConfig& cfg, const ForwardModel& fm, const Eigen::VectorXd& y,
                      std::ostream* log = nullptr);

// iterations.csv: iteration,class,element,provenance,alpha,objective,
// rel_data_error,tikhonov,wall_seconds,restarted
void write_log_header(std::ostream& out);
void write_log_row(std::ostream& out, const IterationRecord& r, const std::string& provenance);
std::vector<IterationRecord> read_log(std::istream& in, std::vector<std::string>* provenance = nullptr);

// coefficients.csv: iteration,element,alpha_selected,alpha_final
void write_learnt_coefficients(std::ostream& out, const LearntDictionary& d);
LearntDictionary read_learnt_coefficients(std::istream& in);

std::string summary_json(const RunReport& report, const std::string& error = {});

}  // namespace sphpursuit

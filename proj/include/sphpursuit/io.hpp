#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sphpursuit/forward.hpp"
#include "sphpursuit/trial_functions.hpp"

namespace sphpursuit {

// Element records: `SH n j`, `SL c alpha beta gamma k L`, `APK r phi t norm`,
// `APW r phi t norm` (norm is 1 for L2-normalized kernels, 0 otherwise).
// Reals are written in shortest round-trip form.
std::string format_element(const DictionaryElement& e);
/// Throws ParseError (line number `line`) on malformed records.
DictionaryElement parse_element(std::string_view record, int line = 1);

/// One record per line; blank lines and lines starting with '#' are skipped.
void write_dictionary(std::ostream& out, const std::vector<DictionaryElement>& elements);
std::vector<DictionaryElement> read_dictionary(std::istream& in);
std::vector<DictionaryElement> read_dictionary_file(const std::filesystem::path& path);

// Dictionary blocks.
std::vector<DictionaryElement> sh_block(int max_degree);
std::vector<DictionaryElement> kernel_block(TrialClass kind, const std::vector<double>& radii, const Grid& directions,
                                            bool normalized = true);
/// Every member k = 1..(L+1)^2 on every (c, alpha, beta, gamma) combination.
std::vector<DictionaryElement> slepian_block(int L, const std::vector<double>& c, const std::vector<double>& alpha,
                                             const std::vector<double>& beta, const std::vector<double>& gamma);

/// A potential given by a coefficient table or by an element combination.
struct PotentialModel {
  std::string name;
  std::optional<SpectralCoeffs> coefficients;
  std::vector<std::pair<DictionaryElement, double>> terms;
};

/// Values of the sigma-continued model at sigma * eta_i (sigma = 1: surface).
Eigen::VectorXd synthesize(const PotentialModel& model, const Grid& grid, double sigma);

/// CSV rows `n,j,value` (optional header). Duplicates and |j| > n rejected.
SpectralCoeffs read_coeffs(std::istream& in);
PotentialModel ingest_coeffs(const std::filesystem::path& path);
void write_coeffs(std::ostream& out, const SpectralCoeffs& c);

struct NoiseSpec {
  double level = 0.05;
  std::uint64_t seed = 0;
};

/// Standard normal deviates from mt19937_64 through the Box-Muller
/// transform, so sequences agree across standard libraries.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed);
  double next();

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// y_i (1 + level * eps_i).
Eigen::VectorXd add_noise(const Eigen::VectorXd& y, const NoiseSpec& spec);

double rel_data_error(const Eigen::VectorXd& residual, const Eigen::VectorXd& y);
/// RMS of (approx - truth) over RMS of truth, optionally area-weighted.
double rel_rmse(const Eigen::VectorXd& approx, const Eigen::VectorXd& truth, const std::vector<double>& weights = {});

/// Data CSV with header `phi,t,value`.
void write_values_csv(std::ostream& out, const Grid& grid, const Eigen::VectorXd& values);
std::pair<Grid, Eigen::VectorXd> read_values_csv(std::istream& in);

/// Surface values of sum alpha_n d_n on a grid.
Eigen::VectorXd evaluate_expansion(const std::vector<DictionaryElement>& elements, const Eigen::VectorXd& alpha,
                                   const Grid& grid);

}  // namespace sphpursuit

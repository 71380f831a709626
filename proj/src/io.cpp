#include "sphpursuit/io.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "sphpursuit/error.hpp"
#include "sphpursuit/slepian.hpp"
#include "sphpursuit/text.hpp"

namespace sphpursuit {

namespace {

std::vector<std::string_view> tokens(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

bool skippable(std::string_view line) {
  auto t = trim(line);
  return t.empty() || t.front() == '#';
}

int parse_flag(std::string_view s) {
  int v = parse_int(s);
  if (v != 0 && v != 1) throw std::invalid_argument("norm flag must be 0 or 1");
  return v;
}

}  // namespace

std::string format_element(const DictionaryElement& e) {
  std::string out;
  std::visit(
      [&](const auto& el) {
        using T = std::decay_t<decltype(el)>;
        if constexpr (std::is_same_v<T, ShElement>) {
          out = "SH " + std::to_string(el.idx.n) + " " + std::to_string(el.idx.j);
        } else if constexpr (std::is_same_v<T, SlepianElement>) {
          out = "SL " + format_double(el.region.c) + " " + format_double(el.region.alpha) + " " +
                format_double(el.region.beta) + " " + format_double(el.region.gamma) + " " + std::to_string(el.k) +
                " " + std::to_string(el.L);
        } else {
          out = std::string(std::is_same_v<T, ApkElement> ? "APK " : "APW ") + format_double(el.x.r()) + " " +
                format_double(el.x.phi()) + " " + format_double(el.x.t()) + " " + (el.normalized ? "1" : "0");
        }
      },
      e);
  return out;
}

DictionaryElement parse_element(std::string_view record, int line) {
  auto f = tokens(record);
  if (f.empty()) throw ParseError("empty element record", line);
  try {
    if (f[0] == "SH") {
      if (f.size() != 3) throw ParseError("SH record needs 2 fields", line);
      ShIndex idx{parse_int(f[1]), parse_int(f[2])};
      if (!idx.valid()) throw ParseError("invalid harmonic index (" + std::string(f[1]) + "," + std::string(f[2]) + ")", line);
      return ShElement{idx};
    }
    if (f[0] == "SL") {
      if (f.size() != 7) throw ParseError("SL record needs 6 fields", line);
      CapRegion region{parse_double(f[1]), parse_double(f[2]), parse_double(f[3]), parse_double(f[4])};
      return make_slepian(region, parse_int(f[5]), parse_int(f[6]));
    }
    if (f[0] == "APK" || f[0] == "APW") {
      if (f.size() != 5) throw ParseError(std::string(f[0]) + " record needs 4 fields", line);
      BallPoint x(parse_double(f[1]), parse_double(f[2]), parse_double(f[3]));
      bool norm = parse_flag(f[4]) == 1;
      if (f[0] == "APK") return ApkElement{x, norm};
      return ApwElement{x, norm};
    }
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw ParseError(e.what(), line);
  }
  throw ParseError("unknown element class '" + std::string(f[0]) + "'", line);
}

void write_dictionary(std::ostream& out, const std::vector<DictionaryElement>& elements) {
  for (const auto& e : elements) out << format_element(e) << '\n';
}

std::vector<DictionaryElement> read_dictionary(std::istream& in) {
  std::vector<DictionaryElement> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (skippable(line)) continue;
    out.push_back(parse_element(line, lineno));
  }
  return out;
}

std::vector<DictionaryElement> read_dictionary_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dictionary file " + path.string());
  return read_dictionary(in);
}

std::vector<DictionaryElement> sh_block(int max_degree) {
  std::vector<DictionaryElement> out;
  for (int k = 0; k < sh_count(max_degree); ++k) out.push_back(ShElement{ShIndex::from_linear(k)});
  return out;
}

std::vector<DictionaryElement> kernel_block(TrialClass kind, const std::vector<double>& radii, const Grid& directions,
                                            bool normalized) {
  if (kind != TrialClass::APK && kind != TrialClass::APW) throw std::invalid_argument("kernel_block: APK or APW");
  std::vector<DictionaryElement> out;
  for (double r : radii) {
    for (const auto& p : directions.points) {
      BallPoint x(r, p.phi(), p.t());
      if (kind == TrialClass::APK)
        out.push_back(ApkElement{x, normalized});
      else
        out.push_back(ApwElement{x, normalized});
    }
  }
  return out;
}

std::vector<DictionaryElement> slepian_block(int L, const std::vector<double>& c, const std::vector<double>& alpha,
                                             const std::vector<double>& beta, const std::vector<double>& gamma) {
  std::vector<DictionaryElement> out;
  for (double cc : c)
    for (double a : alpha)
      for (double b : beta)
        for (double g : gamma)
          for (int k = 1; k <= sh_count(L); ++k) out.push_back(make_slepian(CapRegion{cc, a, b, g}, k, L));
  return out;
}

Eigen::VectorXd synthesize(const PotentialModel& model, const Grid& grid, double sigma) {
  if (!(sigma >= 1.0)) throw std::invalid_argument("synthesize: sigma must be >= 1");
  Eigen::VectorXd y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.size()));
  if (model.coefficients) {
    const SpectralCoeffs& c = *model.coefficients;
    std::vector<double> damp(c.L + 1);
    for (int n = 0; n <= c.L; ++n) damp[n] = std::pow(sigma, -(n + 1));
    for (std::size_t i = 0; i < grid.size(); ++i) {
      auto ys = eval_sh_all(c.L, grid.points[i]);
      double s = 0.0;
      for (int k = 0; k < sh_count(c.L); ++k) s += c.table[k] * damp[ShIndex::from_linear(k).n] * ys[k];
      y[static_cast<Eigen::Index>(i)] = s;
    }
  }
  if (!model.terms.empty()) {
    ForwardModel fm(grid, sigma);
    for (const auto& [e, w] : model.terms) y += w * fm.column(e);
  }
  return y;
}

SpectralCoeffs read_coeffs(std::istream& in) {
  struct Row {
    ShIndex idx;
    double v;
  };
  std::vector<Row> rows;
  std::set<std::pair<int, int>> seen;
  std::string line;
  int lineno = 0;
  int L = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (skippable(line)) continue;
    if (lineno == 1 && trim(line) == "n,j,value") continue;
    auto f = split(line, ',');
    if (f.size() != 3) throw ParseError("expected 3 fields n,j,value", lineno);
    ShIndex idx;
    double v;
    try {
      idx = {parse_int(f[0]), parse_int(f[1])};
      v = parse_double(f[2]);
    } catch (const std::invalid_argument& e) {
      throw ParseError(e.what(), lineno);
    }
    std::string name = "(" + std::to_string(idx.n) + "," + std::to_string(idx.j) + ")";
    if (!idx.valid()) throw ParseError("invalid index " + name + ": requires n >= 0 and |j| <= n", lineno);
    if (!seen.insert({idx.n, idx.j}).second) throw ParseError("duplicate index " + name, lineno);
    rows.push_back({idx, v});
    L = std::max(L, idx.n);
  }
  if (rows.empty()) throw ParseError("no coefficients", std::max(lineno, 1));
  SpectralCoeffs c(L);
  for (const auto& r : rows) c.at(r.idx) = r.v;
  return c;
}

PotentialModel ingest_coeffs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open coefficient file " + path.string());
  PotentialModel m;
  m.name = path.stem().string();
  m.coefficients = read_coeffs(in);
  return m;
}

void write_coeffs(std::ostream& out, const SpectralCoeffs& c) {
  out << "n,j,value\n";
  for (int k = 0; k < sh_count(c.L); ++k) {
    auto idx = ShIndex::from_linear(k);
    out << idx.n << ',' << idx.j << ',' << format_double(c.table[k]) << '\n';
  }
}

GaussianStream::GaussianStream(std::uint64_t seed) : engine_(seed) {}

double GaussianStream::next() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // 53-bit uniforms; u1 lies in (0, 1] so the logarithm stays finite.
  const double scale = 1.0 / 9007199254740992.0;
  double u1 = (static_cast<double>(engine_() >> 11) + 1.0) * scale;
  double u2 = static_cast<double>(engine_() >> 11) * scale;
  double rad = std::sqrt(-2.0 * std::log(u1));
  double ang = kTwoPi * u2;
  spare_ = rad * std::sin(ang);
  has_spare_ = true;
  return rad * std::cos(ang);
}

Eigen::VectorXd add_noise(const Eigen::VectorXd& y, const NoiseSpec& spec) {
  if (!(spec.level >= 0.0)) throw std::invalid_argument("noise level must be >= 0");
  if (spec.level == 0.0) return y;
  GaussianStream g(spec.seed);
  Eigen::VectorXd out(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) out[i] = y[i] * (1.0 + spec.level * g.next());
  return out;
}

double rel_data_error(const Eigen::VectorXd& residual, const Eigen::VectorXd& y) {
  double ny = y.norm();
  if (!(ny > 0.0)) throw std::domain_error("rel_data_error: ||y|| = 0");
  return residual.norm() / ny;
}

double rel_rmse(const Eigen::VectorXd& approx, const Eigen::VectorXd& truth, const std::vector<double>& weights) {
  if (approx.size() != truth.size()) throw std::invalid_argument("rel_rmse: size mismatch");
  if (!weights.empty() && static_cast<Eigen::Index>(weights.size()) != truth.size())
    throw std::invalid_argument("rel_rmse: weight count mismatch");
  double num = 0.0, den = 0.0;
  for (Eigen::Index i = 0; i < truth.size(); ++i) {
    double w = weights.empty() ? 1.0 : weights[static_cast<std::size_t>(i)];
    double d = approx[i] - truth[i];
    num += w * d * d;
    den += w * truth[i] * truth[i];
  }
  if (!(den > 0.0)) throw std::domain_error("rel_rmse: truth has zero RMS");
  return std::sqrt(num / den);
}

void write_values_csv(std::ostream& out, const Grid& grid, const Eigen::VectorXd& values) {
  if (static_cast<Eigen::Index>(grid.size()) != values.size())
    throw std::invalid_argument("write_values_csv: size mismatch");
  out << "phi,t,value\n";
  for (std::size_t i = 0; i < grid.size(); ++i)
    out << format_double(grid.points[i].phi()) << ',' << format_double(grid.points[i].t()) << ','
        << format_double(values[static_cast<Eigen::Index>(i)]) << '\n';
}

std::pair<Grid, Eigen::VectorXd> read_values_csv(std::istream& in) {
  Grid g;
  std::vector<double> v;
  std::string line;
  int lineno = 0;
  if (!std::getline(in, line)) throw ParseError("empty data file", 1);
  ++lineno;
  if (trim(line) != "phi,t,value") throw ParseError("expected header 'phi,t,value'", lineno);
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto f = split(line, ',');
    if (f.size() != 3) throw ParseError("expected 3 fields", lineno);
    try {
      g.points.emplace_back(parse_double(f[0]), parse_double(f[1]));
      v.push_back(parse_double(f[2]));
    } catch (const std::invalid_argument& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  return {std::move(g), Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()))};
}

Eigen::VectorXd evaluate_expansion(const std::vector<DictionaryElement>& elements, const Eigen::VectorXd& alpha,
                                   const Grid& grid) {
  if (static_cast<Eigen::Index>(elements.size()) != alpha.size())
    throw std::invalid_argument("evaluate_expansion: size mismatch");
  ForwardModel fm(grid, 1.0);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t k = 0; k < elements.size(); ++k) {
    double a = alpha[static_cast<Eigen::Index>(k)];
    if (a != 0.0) out += a * fm.column(elements[k]);
  }
  return out;
}

}  // namespace sphpursuit

#include "sphpursuit/geometry.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "sphpursuit/error.hpp"
#include "sphpursuit/text.hpp"

namespace sphpursuit {

namespace {

double wrap_longitude(double phi) {
  if (!std::isfinite(phi)) throw std::invalid_argument("longitude must be finite");
  double w = std::fmod(phi, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  if (w >= kTwoPi) w = 0.0;
  return w;
}

}  // namespace

SurfacePoint::SurfacePoint(double phi, double t) : phi_(wrap_longitude(phi)), t_(t) {
  if (!(t >= -1.0 - 1e-12 && t <= 1.0 + 1e-12))
    throw std::invalid_argument("latitude t = " + std::to_string(t) + " outside [-1, 1]");
  if (t_ > 1.0) t_ = 1.0;
  if (t_ < -1.0) t_ = -1.0;
  const double s = std::sqrt((1.0 - t_) * (1.0 + t_));
  cart_ = {s * std::cos(phi_), s * std::sin(phi_), t_};
}

SurfacePoint SurfacePoint::from_cartesian(const Vec3& v) {
  const double n = std::sqrt(dot(v, v));
  if (!(n > 0.0)) throw std::invalid_argument("cannot take the direction of the zero vector");
  double t = v[2] / n;
  if (t > 1.0) t = 1.0;
  if (t < -1.0) t = -1.0;
  double phi = std::atan2(v[1], v[0]);
  return SurfacePoint(phi, t);
}

BallPoint::BallPoint(double r, double phi, double t) : r_(r), dir_(phi, t) {
  if (!(r >= 0.0 && r < 1.0))
    throw std::invalid_argument("ball radius r = " + std::to_string(r) + " outside [0, 1)");
  const Vec3& u = dir_.cart();
  cart_ = {r_ * u[0], r_ * u[1], r_ * u[2]};
}

BallPoint BallPoint::from_cartesian(const Vec3& x) {
  const double r = std::sqrt(dot(x, x));
  if (r == 0.0) return BallPoint(0.0, 0.0, 1.0);
  SurfacePoint d = SurfacePoint::from_cartesian(x);
  return BallPoint(r, d.phi(), d.t());
}

void CapRegion::validate() const {
  auto check = [](double v, double lo, double hi, const char* name) {
    if (!(v >= lo && v <= hi))
      throw std::invalid_argument(std::string("cap parameter ") + name + " = " +
                                  std::to_string(v) + " out of range");
  };
  check(c, -1.0, 1.0, "c");
  check(alpha, 0.0, kTwoPi, "alpha");
  check(beta, 0.0, kPi, "beta");
  check(gamma, 0.0, kTwoPi, "gamma");
}

Vec3 CapRegion::centre() const {
  return {std::cos(alpha) * std::sin(beta), std::sin(alpha) * std::sin(beta), std::cos(beta)};
}

std::array<double, 9> euler_rotation(double alpha, double beta, double gamma) {
  const double ca = std::cos(alpha), sa = std::sin(alpha);
  const double cb = std::cos(beta), sb = std::sin(beta);
  const double cg = std::cos(gamma), sg = std::sin(gamma);
  // Rz(alpha) * Ry(beta) * Rz(gamma)
  return {ca * cb * cg - sa * sg, -ca * cb * sg - sa * cg, ca * sb,
          sa * cb * cg + ca * sg, -sa * cb * sg + ca * cg, sa * sb,
          -sb * cg,               sb * sg,                 cb};
}

Grid reuter_grid(int gamma_ctl) {
  if (gamma_ctl < 2) throw std::invalid_argument("Reuter grid needs gamma_ctl >= 2");
  Grid g;
  g.kind = GridKind::Reuter;
  g.parameter = gamma_ctl;
  const double dtheta = kPi / gamma_ctl;
  g.points.emplace_back(0.0, 1.0);
  for (int j = 1; j < gamma_ctl; ++j) {
    const double theta = j * dtheta;
    const double ct = std::cos(theta), st = std::sin(theta);
    const double arg = (std::cos(dtheta) - ct * ct) / (st * st);
    const int count = static_cast<int>(std::floor(kTwoPi / std::acos(arg)));
    for (int i = 1; i <= count; ++i) {
      const double phi = (i - 0.5) * kTwoPi / count;
      g.points.emplace_back(phi, ct);
    }
  }
  g.points.emplace_back(0.0, -1.0);
  return g;
}

Grid driscoll_healy_grid(int bandwidth) {
  if (bandwidth < 1) throw std::invalid_argument("Driscoll-Healy grid needs bandwidth >= 1");
  Grid g;
  g.kind = GridKind::DriscollHealy;
  g.parameter = bandwidth;
  const int nlat = 2 * bandwidth + 1;
  const int nlon = 4 * bandwidth + 1;
  g.points.reserve(static_cast<std::size_t>(nlat) * nlon);
  for (int j = 0; j < nlat; ++j) {
    const double t = std::cos((j + 0.5) * kPi / nlat);
    for (int k = 0; k < nlon; ++k) g.points.emplace_back(kTwoPi * k / nlon, t);
  }
  return g;
}

double squared_distance(const SurfacePoint& a, const SurfacePoint& b) {
  double s = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double d = a.cart()[i] - b.cart()[i];
    s += d * d;
  }
  return s;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("parameter vectors differ in length");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

std::vector<double> area_weights(const Grid& grid) {
  std::vector<double> w(grid.size(), 1.0);
  if (grid.kind == GridKind::DriscollHealy) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double t = grid.points[i].t();
      w[i] = std::sqrt((1.0 - t) * (1.0 + t));
    }
  }
  return w;
}

void write_grid_csv(std::ostream& out, const Grid& grid) {
  out << "phi,t\n";
  for (const auto& p : grid.points) out << format_double(p.phi()) << ',' << format_double(p.t()) << '\n';
}

Grid read_grid_csv(std::istream& in) {
  Grid g;
  g.kind = GridKind::Custom;
  std::string line;
  int lineno = 0;
  if (!std::getline(in, line)) throw ParseError("empty grid file", 1);
  ++lineno;
  if (trim(line) != "phi,t") throw ParseError("expected header 'phi,t'", lineno);
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto fields = split(line, ',');
    if (fields.size() != 2) throw ParseError("expected 2 fields", lineno);
    try {
      g.points.emplace_back(parse_double(fields[0]), parse_double(fields[1]));
    } catch (const std::invalid_argument& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  return g;
}

std::string to_string(GridKind kind) {
  switch (kind) {
    case GridKind::Reuter: return "reuter";
    case GridKind::DriscollHealy: return "driscoll_healy";
    case GridKind::Custom: return "custom";
  }
  return "custom";
}

}  // namespace sphpursuit

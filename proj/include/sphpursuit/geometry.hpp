#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace sphpursuit {

using Vec3 = std::array<double, 3>;

inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Point on the unit sphere, stored as longitude phi in [0, 2pi) and
/// t = cos(polar angle) in [-1, 1]. The Cartesian vector is derived once
/// from (phi, t).
class SurfacePoint {
 public:
  SurfacePoint() : SurfacePoint(0.0, 1.0) {}
  SurfacePoint(double phi, double t);

  /// Nearest surface point to the direction of v (v must be nonzero).
  static SurfacePoint from_cartesian(const Vec3& v);

  double phi() const { return phi_; }
  double t() const { return t_; }
  const Vec3& cart() const { return cart_; }

  friend bool operator==(const SurfacePoint& a, const SurfacePoint& b) {
    return a.phi_ == b.phi_ && a.t_ == b.t_;
  }

 private:
  double phi_;
  double t_;
  Vec3 cart_;
};

/// Point of the open unit ball in spherical coordinates (r, phi, t).
class BallPoint {
 public:
  BallPoint() : BallPoint(0.0, 0.0, 1.0) {}
  BallPoint(double r, double phi, double t);

  static BallPoint from_cartesian(const Vec3& x);

  double r() const { return r_; }
  double phi() const { return dir_.phi(); }
  double t() const { return dir_.t(); }
  const SurfacePoint& direction() const { return dir_; }
  const Vec3& cart() const { return cart_; }

  friend bool operator==(const BallPoint& a, const BallPoint& b) {
    return a.r_ == b.r_ && a.dir_ == b.dir_;
  }

 private:
  double r_;
  SurfacePoint dir_;
  Vec3 cart_;
};

/// Spherical cap: size parameter c = cos(angular radius) and centre
/// A(alpha, beta, gamma) e3 with zyz Euler angles.
struct CapRegion {
  double c = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;

  /// Throws std::invalid_argument when a parameter leaves its closed range.
  void validate() const;
  Vec3 centre() const;

  friend bool operator==(const CapRegion&, const CapRegion&) = default;
};

/// Rotation matrix A = Rz(alpha) Ry(beta) Rz(gamma), row-major.
std::array<double, 9> euler_rotation(double alpha, double beta, double gamma);

enum class GridKind { Reuter, DriscollHealy, Custom };

struct Grid {
  std::vector<SurfacePoint> points;
  GridKind kind = GridKind::Custom;
  int parameter = 0;

  std::size_t size() const { return points.size(); }
};

/// Quasi-uniform Reuter grid: both poles plus gamma_ctl - 1 latitude rings.
/// Ordered north to south, ascending longitude inside a ring.
Grid reuter_grid(int gamma_ctl);

/// Equi-angular product grid with (2B+1) latitudes (cell midpoints) times
/// (4B+1) longitudes.
Grid driscoll_healy_grid(int bandwidth);

/// Squared Euclidean distance of the Cartesian vectors.
double squared_distance(const SurfacePoint& a, const SurfacePoint& b);
double squared_distance(std::span<const double> a, std::span<const double> b);

/// Integration weight of a grid point, proportional to the area it
/// represents. Uniform (1) for Reuter and custom grids; sin(theta) for the
/// product grid.
std::vector<double> area_weights(const Grid& grid);

/// CSV with header `phi,t`; one point per row in grid order.
void write_grid_csv(std::ostream& out, const Grid& grid);
Grid read_grid_csv(std::istream& in);

std::string to_string(GridKind kind);

}  // namespace sphpursuit

#include "sphpursuit/slepian.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <bit>
#include <cstdint>
#include <cmath>
#include <deque>
#include <map>
#include <mutex>
#include <numeric>
#include <shared_mutex>
#include <stdexcept>
#include <utility>

#include "sphpursuit/error.hpp"
#include "sphpursuit/harmonics.hpp"

namespace sphpursuit {

void gauss_legendre(int n, double a, double b, std::vector<double>& nodes, std::vector<double>& weights) {
  if (n < 1) throw std::invalid_argument("quadrature needs at least one node");
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sub(std::max(n - 1, 0));
  for (int k = 1; k < n; ++k) sub[k - 1] = k / std::sqrt(4.0 * k * k - 1.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  nodes.resize(n);
  weights.resize(n);
  const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
  for (int i = 0; i < n; ++i) {
    nodes[i] = mid + half * es.eigenvalues()[i];
    const double v0 = es.eigenvectors()(0, i);
    weights[i] = 2.0 * v0 * v0 * half;
  }
}

namespace {

/// Normalized associated Legendre values of order m, degrees m..L, at t.
void legendre_column(int L, int m, double t, std::vector<double>& out) {
  const std::vector<double> y = eval_sh_all(L, SurfacePoint(0.0, t));
  const double scale = (m == 0) ? std::sqrt(2.0 * kPi) : std::sqrt(kPi);
  out.resize(L - m + 1);
  for (int l = m; l <= L; ++l) out[l - m] = y[l * l + l - m] * scale;
}

Eigen::MatrixXd concentration_quadrature(int L, double c, int m, int nodes) {
  const int size = L - m + 1;
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(size, size);
  if (c >= 1.0) return D;
  std::vector<double> t, w, p;
  gauss_legendre(nodes, c, 1.0, t, w);
  for (std::size_t i = 0; i < t.size(); ++i) {
    legendre_column(L, m, t[i], p);
    const Eigen::Map<const Eigen::VectorXd> v(p.data(), size);
    D.noalias() += w[i] * v * v.transpose();
  }
  return D;
}

}  // namespace

Eigen::MatrixXd concentration_matrix(int L, double c, int m) {
  m = std::abs(m);
  if (L < 0 || m > L) throw std::invalid_argument("order must satisfy |m| <= L");
  if (!(c >= -1.0 && c <= 1.0)) throw std::invalid_argument("cap parameter c outside [-1, 1]");
  // The integrand is a polynomial of degree <= 2L in t, so L + 1 nodes are
  // exact; the doubled rule certifies the rounding level.
  const Eigen::MatrixXd coarse = concentration_quadrature(L, c, m, L + 2);
  const Eigen::MatrixXd fine = concentration_quadrature(L, c, m, 2 * L + 4);
  const double diff = (coarse - fine).cwiseAbs().maxCoeff();
  if (diff > 1e-11) throw NonConvergence("concentration matrix quadrature", diff);
  return fine;
}

Eigen::MatrixXd commuting_matrix(int L, double c, int m) {
  m = std::abs(m);
  const int size = L - m + 1;
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(size, size);
  for (int l = m; l <= L; ++l) {
    T(l - m, l - m) = -l * (l + 1.0) * c;
    if (l < L) {
      const double off = (l * (l + 2.0) - L * (L + 2.0)) *
                         std::sqrt(((l + 1.0) * (l + 1.0) - m * m) / ((2.0 * l + 1.0) * (2.0 * l + 3.0)));
      T(l - m, l - m + 1) = off;
      T(l - m + 1, l - m) = off;
    }
  }
  return T;
}

PolarCapBasis build_polar_cap(int L, double c) {
  if (L < 0) throw std::invalid_argument("band-limit must be non-negative");
  if (!(c >= -1.0 && c <= 1.0)) throw std::invalid_argument("cap parameter c outside [-1, 1]");
  struct Member {
    double mu;
    int m;
    int j;
    Eigen::VectorXd v;
  };
  std::vector<Member> members;
  for (int m = 0; m <= L; ++m) {
    const int size = L - m + 1;
    const Eigen::MatrixXd D = concentration_matrix(L, c, m);
    const Eigen::MatrixXd T = commuting_matrix(L, c, m);
    Eigen::VectorXd diag = T.diagonal();
    Eigen::VectorXd sub(size - 1);
    for (int i = 0; i + 1 < size; ++i) sub[i] = T(i, i + 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    if (es.info() != Eigen::Success) throw Error("tridiagonal eigensolver failed");
    Eigen::MatrixXd V = es.eigenvectors();
    for (int k = 0; k < size; ++k) {
      Eigen::Index first = 0;
      while (first < size && std::abs(V(first, k)) < 1e-14) ++first;
      if (first < size && V(first, k) < 0.0) V.col(k) *= -1.0;
    }
    const Eigen::MatrixXd M = V.transpose() * D * V;
    const double off = (M - Eigen::MatrixXd(M.diagonal().asDiagonal())).cwiseAbs().maxCoeff();
    if (off > 1e-8) throw NonConvergence("commuting eigenvectors do not diagonalize the concentration matrix", off);
    for (int k = 0; k < size; ++k) {
      const double mu = std::clamp(M(k, k), 0.0, 1.0);
      members.push_back({mu, m, m == 0 ? 0 : -m, V.col(k)});
      if (m > 0) members.push_back({mu, m, m, V.col(k)});
    }
  }
  std::stable_sort(members.begin(), members.end(), [](const Member& a, const Member& b) {
    if (a.mu != b.mu) return a.mu > b.mu;
    if (a.m != b.m) return a.m < b.m;
    return a.j < b.j;
  });
  PolarCapBasis basis;
  basis.L = L;
  basis.c = c;
  for (const auto& mb : members) {
    SpectralCoeffs g(L);
    for (int l = mb.m; l <= L; ++l) g.at({l, mb.j}) = mb.v[l - mb.m];
    basis.functions.push_back(std::move(g));
    basis.concentrations.push_back(mb.mu);
    basis.orders.push_back(mb.j);
  }
  return basis;
}

namespace {

constexpr std::size_t kCacheCapacity = 4096;

struct Cache {
  std::shared_mutex mutex;
  std::map<std::pair<int, std::uint64_t>, std::shared_ptr<const PolarCapBasis>> entries;
  std::deque<std::pair<int, std::uint64_t>> order;
};

Cache& cache() {
  static Cache instance;
  return instance;
}

}  // namespace

std::shared_ptr<const PolarCapBasis> polar_cap(int L, double c) {
  const auto key = std::make_pair(L, std::bit_cast<std::uint64_t>(c));
  Cache& ch = cache();
  {
    std::shared_lock lock(ch.mutex);
    auto it = ch.entries.find(key);
    if (it != ch.entries.end()) return it->second;
  }
  auto built = std::make_shared<const PolarCapBasis>(build_polar_cap(L, c));
  std::unique_lock lock(ch.mutex);
  auto [it, inserted] = ch.entries.emplace(key, built);
  if (inserted) {
    ch.order.push_back(key);
    while (ch.order.size() > kCacheCapacity) {
      ch.entries.erase(ch.order.front());
      ch.order.pop_front();
    }
  }
  return it->second;
}

void clear_slepian_cache() {
  Cache& ch = cache();
  std::unique_lock lock(ch.mutex);
  ch.entries.clear();
  ch.order.clear();
}

std::size_t slepian_cache_size() {
  Cache& ch = cache();
  std::shared_lock lock(ch.mutex);
  return ch.entries.size();
}

std::vector<Eigen::MatrixXd> sh_rotation_blocks(int L, const std::array<double, 9>& A) {
  std::vector<Eigen::MatrixXd> R;
  R.reserve(L + 1);
  R.push_back(Eigen::MatrixXd::Ones(1, 1));
  if (L == 0) return R;
  // Degree-one block in the order (y, z, x), which is (sin, zonal, cos).
  const int axis[3] = {1, 2, 0};
  Eigen::Matrix3d r1;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) r1(a, b) = A[axis[a] * 3 + axis[b]];
  R.emplace_back(r1);
  // Ivanic-Ruedenberg recursion, indices m, n in [-l, l] with m > 0 the cos part.
  auto r1at = [&](int i, int j) { return r1(i + 1, j + 1); };
  for (int l = 2; l <= L; ++l) {
    const Eigen::MatrixXd& prev = R[l - 1];
    auto pr = [&](int a, int b) { return prev(a + l - 1, b + l - 1); };
    auto P = [&](int i, int a, int b) {
      if (b == l) return r1at(i, 1) * pr(a, l - 1) - r1at(i, -1) * pr(a, -l + 1);
      if (b == -l) return r1at(i, 1) * pr(a, -l + 1) + r1at(i, -1) * pr(a, l - 1);
      return r1at(i, 0) * pr(a, b);
    };
    Eigen::MatrixXd cur(2 * l + 1, 2 * l + 1);
    for (int m = -l; m <= l; ++m) {
      for (int n = -l; n <= l; ++n) {
        const int am = std::abs(m);
        const double d = (m == 0) ? 1.0 : 0.0;
        const double denom = (std::abs(n) == l) ? (2.0 * l) * (2.0 * l - 1.0) : double(l + n) * (l - n);
        const double u = std::sqrt(double(l + m) * (l - m) / denom);
        const double v = 0.5 * std::sqrt((1.0 + d) * (l + am - 1.0) * (l + am) / denom) * (1.0 - 2.0 * d);
        const double w = -0.5 * std::sqrt(std::max(0.0, (l - am - 1.0) * (l - am)) / denom) * (1.0 - d);
        double acc = 0.0;
        if (u != 0.0) acc += u * P(0, m, n);
        if (v != 0.0) {
          double V;
          if (m == 0) {
            V = P(1, 1, n) + P(-1, -1, n);
          } else if (m > 0) {
            const double d1 = (m == 1) ? 1.0 : 0.0;
            V = P(1, m - 1, n) * std::sqrt(1.0 + d1) - P(-1, -m + 1, n) * (1.0 - d1);
          } else {
            const double d1 = (m == -1) ? 1.0 : 0.0;
            V = P(1, m + 1, n) * (1.0 - d1) + P(-1, -m - 1, n) * std::sqrt(1.0 + d1);
          }
          acc += v * V;
        }
        if (w != 0.0) {
          const double W = (m > 0) ? P(1, m + 1, n) + P(-1, -m - 1, n) : P(1, m - 1, n) - P(-1, -m + 1, n);
          acc += w * W;
        }
        cur(m + l, n + l) = acc;
      }
    }
    R.push_back(std::move(cur));
  }
  return R;
}

SpectralCoeffs rotate_coeffs(const SpectralCoeffs& g, double alpha, double beta, double gamma) {
  const auto blocks = sh_rotation_blocks(g.L, euler_rotation(alpha, beta, gamma));
  SpectralCoeffs out(g.L);
  for (int l = 0; l <= g.L; ++l) {
    // Recursion index m corresponds to our order j = -m.
    Eigen::VectorXd in(2 * l + 1);
    for (int m = -l; m <= l; ++m) in[m + l] = g[{l, -m}];
    const Eigen::VectorXd rot = blocks[l] * in;
    for (int m = -l; m <= l; ++m) out.at({l, -m}) = rot[m + l];
  }
  return out;
}

SlepianElement make_slepian(const CapRegion& region, int k, int L) {
  region.validate();
  if (L < 0) throw std::invalid_argument("band-limit must be non-negative");
  if (k < 1 || k > sh_count(L)) throw std::invalid_argument("Slepian index k outside 1..(L+1)^2");
  const auto basis = polar_cap(L, region.c);
  SlepianElement e;
  e.region = region;
  e.k = k;
  e.L = L;
  e.coeffs = rotate_coeffs(basis->functions[k - 1], region.alpha, region.beta, region.gamma);
  return e;
}

}  // namespace sphpursuit

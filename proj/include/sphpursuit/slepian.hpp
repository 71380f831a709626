#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <memory>
#include <vector>

#include "sphpursuit/geometry.hpp"
#include "sphpursuit/trial_functions.hpp"

namespace sphpursuit {

/// Gauss-Legendre nodes and weights on [a, b] (Golub-Welsch).
void gauss_legendre(int n, double a, double b, std::vector<double>& nodes, std::vector<double>& weights);

/// Slepian basis of band-limit L for the polar cap t >= c.
struct PolarCapBasis {
  int L = 0;
  double c = 0.0;
  std::vector<SpectralCoeffs> functions;  // sorted by concentration, descending
  std::vector<double> concentrations;
  std::vector<int> orders;  // harmonic order j carried by each member
};

/// D_{l,l'} = integral over [c, 1] of the products of L2-normalized
/// associated Legendre functions of order |m|, for l, l' in [|m|, L].
Eigen::MatrixXd concentration_matrix(int L, double c, int m);

/// Tridiagonal operator commuting with the concentration matrix of order m.
Eigen::MatrixXd commuting_matrix(int L, double c, int m);

PolarCapBasis build_polar_cap(int L, double c);

/// Cached, thread-safe access; returned bases are immutable.
std::shared_ptr<const PolarCapBasis> polar_cap(int L, double c);
void clear_slepian_cache();
std::size_t slepian_cache_size();

/// Real-basis rotation matrix of degree l for the rotation A (row-major 3x3):
/// coefficients transform as g'_l = R_l g_l, and the rotated function obeys
/// g'(eta) = g(A^T eta).
std::vector<Eigen::MatrixXd> sh_rotation_blocks(int L, const std::array<double, 9>& A);

SpectralCoeffs rotate_coeffs(const SpectralCoeffs& g, double alpha, double beta, double gamma);

/// Member k (1-based) of the cap basis, rotated to the cap centre.
SlepianElement make_slepian(const CapRegion& region, int k, int L);

}  // namespace sphpursuit

#pragma once

// Real spherical harmonics, real Wigner-D matrices and real Clebsch-Gordan
// coefficients.
//
// Convention. The polar axis is y and the azimuth is measured from z towards
// x, i.e. the textbook real harmonics evaluated in the cyclically relabelled
// frame (x', y', z') = (z, x, y). Components are ordered m = -l..l. With this
// choice
//   Y^1(n) = sqrt(3/4pi) * (n_x, n_y, n_z)      so D^1(R) = R (no permutation),
//   Y^l(e_y) = sqrt((2l+1)/4pi) * e_{m=0},
// and rotations about y act on each (m, -m) pair as a planar rotation by m*angle.
// No Condon-Shortley phase appears in the real functions.

#include <complex>
#include <map>
#include <memory>
#include <vector>

#include "se3kit/core.hpp"
#include "se3kit/liegroup.hpp"

namespace se3kit {

/// Hard cap on every degree handled by the tables.
inline constexpr int kMaxDegree = 12;

/// Associated Legendre function without the Condon-Shortley phase,
/// P_l^m(x) = (1 - x^2)^{m/2} d^m/dx^m P_l(x).
double assoc_legendre(int l, int m, double x);

/// Y^l_m(0) value at the polar axis for m = 0.
double sh_polar_value(int l);

double real_sph_harm(int l, int m, const Eigen::Vector3d& n);

/// The type-l vector (Y^l_{-l}(n), ..., Y^l_l(n)).
Eigen::VectorXd sh_vector(int l, const Eigen::Vector3d& n);

struct ShBasisEval {
  int max_degree = 0;
  std::vector<Eigen::VectorXd> values;  // values[l] has 2l+1 entries

  const Eigen::VectorXd& operator[](int l) const { return values[static_cast<std::size_t>(l)]; }
};

/// All degrees 0..max_degree at once.
ShBasisEval sh_basis(int max_degree, const Eigen::Vector3d& n);

// ---------------------------------------------------------------------------
// Clebsch-Gordan

/// Complex-basis (Condon-Shortley) Clebsch-Gordan coefficient <l1 m1 l2 m2 | l m>.
double complex_cg(int l1, int m1, int l2, int m2, int l, int m);

inline bool cg_admissible(int l1, int l2, int l) {
  return l1 >= 0 && l2 >= 0 && l >= 0 && l >= std::abs(l1 - l2) && l <= l1 + l2;
}

/// Real-basis coupling l1 (x) l2 -> l. The dense tensor is indexed
/// (m + l, m1 + l1, m2 + l2); rows are orthonormal, and the first nonzero
/// entry in lexicographic (m1, m2, m) order is positive.
struct CgBlock {
  struct Entry {
    int m1, m2, m;
    double value;
  };

  int l1 = 0, l2 = 0, l = 0;
  std::vector<double> dense;
  std::vector<Entry> entries;  // nonzeros only

  double at(int m1, int m2, int m) const {
    const int d1 = 2 * l1 + 1, d2 = 2 * l2 + 1;
    return dense[static_cast<std::size_t>(((m + l) * d1 + (m1 + l1)) * d2 + (m2 + l2))];
  }

  /// (2l+1) x (2l1+1)(2l2+1) matrix acting on kron(u, v) with v fastest.
  Eigen::MatrixXd matrix() const;
};

CgBlock make_cg_block(int l1, int l2, int l);

/// Sparse coefficient table for every admissible (l1, l2, l) within caps.
class CGTable {
 public:
  CGTable(int l1_max, int l2_max, int l_max);

  int l1_max() const { return l1_max_; }
  int l2_max() const { return l2_max_; }
  int l_max() const { return l_max_; }

  bool contains(int l1, int l2, int l) const;

  /// Zero outside the selection rule or the caps.
  double operator()(int l1, int m1, int l2, int m2, int l, int m) const;

  const CgBlock& block(int l1, int l2, int l) const;

  /// Copy of the table with one coefficient shifted by `delta`; used to
  /// check that equivariance tests detect a broken table.
  CGTable perturbed(int l1, int m1, int l2, int m2, int l, int m, double delta) const;

 private:
  int index(int l1, int l2, int l) const { return (l1 * (l2_max_ + 1) + l2) * (l_max_ + 1) + l; }

  int l1_max_, l2_max_, l_max_;
  std::vector<std::shared_ptr<const CgBlock>> blocks_;
};

/// Single coefficient; returns 0 outside the support.
double cg_coefficient(int l1, int m1, int l2, int m2, int l, int m);

/// (u (x) v)^l_m = sum C^{(l,m)}_{(l1,m1)(l2,m2)} u_{m1} v_{m2}.
Eigen::VectorXd cg_tensor_product(const Eigen::VectorXd& u, const Eigen::VectorXd& v, int l);

// ---------------------------------------------------------------------------
// Wigner-D

/// D^l(R), built from D^1 = R by the recursion D^l = C (D^{l-1} (x) D^1) C^T.
Eigen::MatrixXd wigner_d(int l, const Rotationd& r);

/// D^0..D^max_degree in one recursion.
std::vector<Eigen::MatrixXd> wigner_d_all(int max_degree, const Rotationd& r);

/// D^l of the rotation by `angle` about the polar (y) axis; 2x2 blocks per |m|.
Eigen::MatrixXd wigner_d_polar(int l, double angle);

// ---------------------------------------------------------------------------
// Quadrature

struct SphereQuadrature {
  std::vector<Eigen::Vector3d> points;
  std::vector<double> weights;  // sum to 4 pi
  int exact_degree = 0;
};

/// Gauss-Legendre in cos(theta) x uniform azimuth; exact for polynomials of
/// total degree <= `degree`.
SphereQuadrature make_sphere_quadrature(int degree);

/// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

struct So3Quadrature {
  std::vector<Rotationd> rotations;
  std::vector<double> weights;  // sum to 1 (normalized Haar measure)
  int exact_degree = 0;
};

/// ZYZ Euler grid integrating every Wigner-D matrix coefficient of degree
/// <= `degree` exactly.
So3Quadrature make_so3_quadrature(int degree);

// ---------------------------------------------------------------------------
// Fourier series on SO(3): f(R) = sum_l tr(F^l D^l(R)^T)

struct So3FourierCoeffs {
  int max_degree = 0;
  std::vector<Eigen::MatrixXd> blocks;  // blocks[l] is (2l+1) x (2l+1)

  static So3FourierCoeffs zeros(int max_degree);
};

double so3_fourier_synthesize(const So3FourierCoeffs& coeffs, const Rotationd& r);

/// `values[k]` is f at quad.rotations[k]. The grid must integrate degree 2L
/// products exactly.
So3FourierCoeffs so3_fourier_analyze(const std::vector<double>& values, const So3Quadrature& quad,
                                     int max_degree);

}  // namespace se3kit

#include "se3kit/harmonics.hpp"

#include <array>
#include <cmath>
#include <mutex>
#include <numbers>

namespace se3kit {

namespace {

constexpr double kPi = std::numbers::pi;

void check_degree(int l, const char* what) {
  if (l < 0 || l > kMaxDegree) {
    throw Error(ErrorCode::DomainError, std::string(what) + ": degree out of range");
  }
}

// d^m P_l / dx^m for every l in [m, lmax], by the three-term degree recursion.
void legendre_derivative_column(int lmax, int m, double x, std::vector<double>& out) {
  out.assign(static_cast<std::size_t>(lmax + 1), 0.0);
  if (m > lmax) return;
  double pmm = 1.0;
  for (int k = 1; k <= m; ++k) pmm *= static_cast<double>(2 * k - 1);
  out[static_cast<std::size_t>(m)] = pmm;
  if (m + 1 <= lmax) out[static_cast<std::size_t>(m + 1)] = x * (2 * m + 1) * pmm;
  for (int l = m + 2; l <= lmax; ++l) {
    out[static_cast<std::size_t>(l)] =
        ((2 * l - 1) * x * out[static_cast<std::size_t>(l - 1)] -
         (l + m - 1) * out[static_cast<std::size_t>(l - 2)]) /
        static_cast<double>(l - m);
  }
}

double sh_norm(int l, int m) {
  // sqrt((2l+1)/(4pi) (l-m)!/(l+m)!)
  double ratio = 1.0;
  for (int k = l - m + 1; k <= l + m; ++k) ratio /= static_cast<double>(k);
  return std::sqrt((2 * l + 1) / (4.0 * kPi) * ratio);
}

void check_unit(const Eigen::Vector3d& n) {
  if (std::abs(n.norm() - 1.0) > 1e-9) throw Error(ErrorCode::NotUnit, "direction must be a unit vector");
}

}  // namespace

double assoc_legendre(int l, int m, double x) {
  if (l < 0 || m < 0 || m > l) throw Error(ErrorCode::DomainError, "assoc_legendre requires 0 <= m <= l");
  if (!(std::abs(x) <= 1.0)) throw Error(ErrorCode::DomainError, "assoc_legendre requires |x| <= 1");
  std::vector<double> column;
  legendre_derivative_column(l, m, x, column);
  return std::pow(1.0 - x * x, 0.5 * m) * column[static_cast<std::size_t>(l)];
}

double sh_polar_value(int l) { return std::sqrt((2 * l + 1) / (4.0 * kPi)); }

ShBasisEval sh_basis(int max_degree, const Eigen::Vector3d& n) {
  check_degree(max_degree, "sh_basis");
  check_unit(n);
  const double y = std::clamp(n.y(), -1.0, 1.0);
  const std::complex<double> azimuth(n.z(), n.x());  // sin(theta) e^{i phi}

  ShBasisEval out;
  out.max_degree = max_degree;
  out.values.resize(static_cast<std::size_t>(max_degree + 1));
  for (int l = 0; l <= max_degree; ++l) out.values[static_cast<std::size_t>(l)] = Eigen::VectorXd::Zero(2 * l + 1);

  std::vector<double> column;
  std::complex<double> power(1.0, 0.0);
  for (int m = 0; m <= max_degree; ++m) {
    legendre_derivative_column(max_degree, m, y, column);
    for (int l = m; l <= max_degree; ++l) {
      auto& v = out.values[static_cast<std::size_t>(l)];
      const double t = sh_norm(l, m) * column[static_cast<std::size_t>(l)];
      if (m == 0) {
        v(l) = t;
      } else {
        v(l + m) = std::numbers::sqrt2 * t * power.real();
        v(l - m) = std::numbers::sqrt2 * t * power.imag();
      }
    }
    power *= azimuth;
  }
  return out;
}

Eigen::VectorXd sh_vector(int l, const Eigen::Vector3d& n) { return sh_basis(l, n)[l]; }

double real_sph_harm(int l, int m, const Eigen::Vector3d& n) {
  if (std::abs(m) > l) throw Error(ErrorCode::DomainError, "real_sph_harm requires |m| <= l");
  return sh_vector(l, n)(m + l);
}

// ---------------------------------------------------------------------------
// Clebsch-Gordan

namespace {

long double factorial(int n) {
  static const std::array<long double, 64> table = [] {
    std::array<long double, 64> t{};
    t[0] = 1.0L;
    for (std::size_t i = 1; i < t.size(); ++i) t[i] = t[i - 1] * static_cast<long double>(i);
    return t;
  }();
  return table[static_cast<std::size_t>(n)];
}

// Row m of the unitary U with Y_real = U Y_complex; returns (mu, coefficient) pairs.
std::vector<std::pair<int, std::complex<double>>> real_from_complex(int m) {
  using c = std::complex<double>;
  const double h = 1.0 / std::numbers::sqrt2;
  if (m == 0) return {{0, c(1.0, 0.0)}};
  const int k = std::abs(m);
  const double sign = (k % 2 == 0) ? 1.0 : -1.0;
  if (m > 0) return {{k, c(sign * h, 0.0)}, {-k, c(h, 0.0)}};
  return {{k, c(0.0, -sign * h)}, {-k, c(0.0, h)}};
}

}  // namespace

double complex_cg(int l1, int m1, int l2, int m2, int l, int m) {
  if (!cg_admissible(l1, l2, l) || m1 + m2 != m) return 0.0;
  if (std::abs(m1) > l1 || std::abs(m2) > l2 || std::abs(m) > l) return 0.0;
  const long double pre =
      std::sqrt(static_cast<long double>(2 * l + 1) * factorial(l + l1 - l2) * factorial(l - l1 + l2) *
                factorial(l1 + l2 - l) / factorial(l1 + l2 + l + 1)) *
      std::sqrt(factorial(l + m) * factorial(l - m) * factorial(l1 - m1) * factorial(l1 + m1) *
                factorial(l2 - m2) * factorial(l2 + m2));
  const int kmin = std::max({0, l2 - l - m1, l1 - l + m2});
  const int kmax = std::min({l1 + l2 - l, l1 - m1, l2 + m2});
  long double sum = 0.0L;
  for (int k = kmin; k <= kmax; ++k) {
    const long double term = 1.0L / (factorial(k) * factorial(l1 + l2 - l - k) * factorial(l1 - m1 - k) *
                                     factorial(l2 + m2 - k) * factorial(l - l2 + m1 + k) *
                                     factorial(l - l1 - m2 + k));
    sum += (k % 2 == 0) ? term : -term;
  }
  return static_cast<double>(pre * sum);
}

Eigen::MatrixXd CgBlock::matrix() const {
  const int d = 2 * l + 1, d1 = 2 * l1 + 1, d2 = 2 * l2 + 1;
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(d, d1 * d2);
  for (const auto& e : entries) c(e.m + l, (e.m1 + l1) * d2 + (e.m2 + l2)) = e.value;
  return c;
}

CgBlock make_cg_block(int l1, int l2, int l) {
  if (!cg_admissible(l1, l2, l)) throw Error(ErrorCode::DomainError, "CG triple violates the selection rule");
  check_degree(l1, "make_cg_block");
  check_degree(l2, "make_cg_block");
  check_degree(l, "make_cg_block");
  const int d = 2 * l + 1, d1 = 2 * l1 + 1, d2 = 2 * l2 + 1;
  std::vector<std::complex<double>> c(static_cast<std::size_t>(d * d1 * d2));

  // C_real = U^l C_complex (U^{l1} (x) U^{l2})^H
  for (int m = -l; m <= l; ++m) {
    for (int m1 = -l1; m1 <= l1; ++m1) {
      for (int m2 = -l2; m2 <= l2; ++m2) {
        std::complex<double> acc(0.0, 0.0);
        for (const auto& [mu, um] : real_from_complex(m)) {
          for (const auto& [mu1, u1] : real_from_complex(m1)) {
            const int mu2 = mu - mu1;
            if (std::abs(mu2) > l2) continue;
            for (const auto& [nu2, u2] : real_from_complex(m2)) {
              if (nu2 != mu2) continue;
              acc += um * complex_cg(l1, mu1, l2, mu2, l, mu) * std::conj(u1) * std::conj(u2);
            }
          }
        }
        c[static_cast<std::size_t>(((m + l) * d1 + (m1 + l1)) * d2 + (m2 + l2))] = acc;
      }
    }
  }

  // The real intertwiner space is one-dimensional, so the result is a real
  // tensor times a global phase of 1 or i.
  double re = 0.0, im = 0.0;
  for (const auto& z : c) {
    re += z.real() * z.real();
    im += z.imag() * z.imag();
  }
  CgBlock block;
  block.l1 = l1;
  block.l2 = l2;
  block.l = l;
  block.dense.resize(c.size());
  const bool use_real = re >= im;
  double norm2 = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double v = use_real ? c[i].real() : c[i].imag();
    block.dense[i] = v;
    norm2 += v * v;
  }
  // Rows orthonormal: total squared norm equals 2l+1.
  const double scale = std::sqrt(static_cast<double>(d) / norm2);
  double sign = 0.0;
  for (int m1 = -l1; m1 <= l1 && sign == 0.0; ++m1) {
    for (int m2 = -l2; m2 <= l2 && sign == 0.0; ++m2) {
      for (int m = -l; m <= l; ++m) {
        const double v = block.dense[static_cast<std::size_t>(((m + l) * d1 + (m1 + l1)) * d2 + (m2 + l2))];
        if (std::abs(v) > 1e-10) {
          sign = v > 0.0 ? 1.0 : -1.0;
          break;
        }
      }
    }
  }
  for (int m = -l; m <= l; ++m) {
    for (int m1 = -l1; m1 <= l1; ++m1) {
      for (int m2 = -l2; m2 <= l2; ++m2) {
        double& v = block.dense[static_cast<std::size_t>(((m + l) * d1 + (m1 + l1)) * d2 + (m2 + l2))];
        v *= scale * sign;
        if (std::abs(v) < 1e-13) {
          v = 0.0;
        } else {
          block.entries.push_back({m1, m2, m, v});
        }
      }
    }
  }
  return block;
}

CGTable::CGTable(int l1_max, int l2_max, int l_max) : l1_max_(l1_max), l2_max_(l2_max), l_max_(l_max) {
  check_degree(l1_max, "CGTable");
  check_degree(l2_max, "CGTable");
  check_degree(l_max, "CGTable");
  blocks_.resize(static_cast<std::size_t>((l1_max + 1) * (l2_max + 1) * (l_max + 1)));
  for (int l1 = 0; l1 <= l1_max; ++l1) {
    for (int l2 = 0; l2 <= l2_max; ++l2) {
      for (int l = std::abs(l1 - l2); l <= std::min(l1 + l2, l_max); ++l) {
        blocks_[static_cast<std::size_t>(index(l1, l2, l))] = std::make_shared<const CgBlock>(make_cg_block(l1, l2, l));
      }
    }
  }
}

bool CGTable::contains(int l1, int l2, int l) const {
  return cg_admissible(l1, l2, l) && l1 <= l1_max_ && l2 <= l2_max_ && l <= l_max_;
}

const CgBlock& CGTable::block(int l1, int l2, int l) const {
  if (!contains(l1, l2, l)) throw Error(ErrorCode::DomainError, "CG block outside table caps or selection rule");
  return *blocks_[static_cast<std::size_t>(index(l1, l2, l))];
}

double CGTable::operator()(int l1, int m1, int l2, int m2, int l, int m) const {
  if (!contains(l1, l2, l)) return 0.0;
  if (std::abs(m1) > l1 || std::abs(m2) > l2 || std::abs(m) > l) return 0.0;
  return block(l1, l2, l).at(m1, m2, m);
}

CGTable CGTable::perturbed(int l1, int m1, int l2, int m2, int l, int m, double delta) const {
  CGTable copy = *this;
  CgBlock b = block(l1, l2, l);
  const int d1 = 2 * l1 + 1, d2 = 2 * l2 + 1;
  b.dense[static_cast<std::size_t>(((m + l) * d1 + (m1 + l1)) * d2 + (m2 + l2))] += delta;
  b.entries.clear();
  for (int mm = -l; mm <= l; ++mm)
    for (int a = -l1; a <= l1; ++a)
      for (int c = -l2; c <= l2; ++c)
        if (const double v = b.at(a, c, mm); v != 0.0) b.entries.push_back({a, c, mm, v});
  copy.blocks_[static_cast<std::size_t>(index(l1, l2, l))] = std::make_shared<const CgBlock>(std::move(b));
  return copy;
}

namespace {

const CgBlock& cached_block(int l1, int l2, int l) {
  static std::mutex mutex;
  static std::map<std::array<int, 3>, std::unique_ptr<CgBlock>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[{l1, l2, l}];
  if (!slot) slot = std::make_unique<CgBlock>(make_cg_block(l1, l2, l));
  return *slot;
}

}  // namespace

double cg_coefficient(int l1, int m1, int l2, int m2, int l, int m) {
  if (!cg_admissible(l1, l2, l)) return 0.0;
  if (std::abs(m1) > l1 || std::abs(m2) > l2 || std::abs(m) > l) return 0.0;
  return cached_block(l1, l2, l).at(m1, m2, m);
}

Eigen::VectorXd cg_tensor_product(const Eigen::VectorXd& u, const Eigen::VectorXd& v, int l) {
  if (u.size() % 2 == 0 || v.size() % 2 == 0) {
    throw Error(ErrorCode::DimensionMismatch, "type-l blocks have odd length 2l+1");
  }
  const int l1 = static_cast<int>(u.size() - 1) / 2;
  const int l2 = static_cast<int>(v.size() - 1) / 2;
  if (l < 0) throw Error(ErrorCode::DimensionMismatch, "output degree must be non-negative");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(2 * l + 1);
  if (!cg_admissible(l1, l2, l)) return out;
  for (const auto& e : cached_block(l1, l2, l).entries) out(e.m + l) += e.value * u(e.m1 + l1) * v(e.m2 + l2);
  return out;
}

// ---------------------------------------------------------------------------
// Wigner-D

std::vector<Eigen::MatrixXd> wigner_d_all(int max_degree, const Rotationd& r) {
  check_degree(max_degree, "wigner_d");
  std::vector<Eigen::MatrixXd> d;
  d.reserve(static_cast<std::size_t>(max_degree + 1));
  d.push_back(Eigen::MatrixXd::Ones(1, 1));
  if (max_degree == 0) return d;
  const Eigen::MatrixXd d1 = r.matrix();
  d.push_back(d1);
  for (int l = 2; l <= max_degree; ++l) {
    const CgBlock& cg = cached_block(l - 1, 1, l);
    const Eigen::MatrixXd& prev = d.back();
    const int dp = 2 * l - 1, dim = 2 * l + 1;
    // K = prev (x) D^1 contracted against C on both sides, using C's sparsity.
    Eigen::MatrixXd left = Eigen::MatrixXd::Zero(dim, 3 * dp);  // C K
    for (const auto& e : cg.entries) {
      const int row = e.m + l;
      const int a = e.m1 + l - 1, b = e.m2 + 1;
      for (int a2 = 0; a2 < dp; ++a2) {
        const double pa = e.value * prev(a, a2);
        for (int b2 = 0; b2 < 3; ++b2) left(row, a2 * 3 + b2) += pa * d1(b, b2);
      }
    }
    Eigen::MatrixXd next = Eigen::MatrixXd::Zero(dim, dim);
    for (const auto& e : cg.entries) {
      const int col = e.m + l;
      const int k = (e.m1 + l - 1) * 3 + (e.m2 + 1);
      next.col(col) += e.value * left.col(k);
    }
    d.push_back(std::move(next));
  }
  return d;
}

Eigen::MatrixXd wigner_d(int l, const Rotationd& r) {
  check_degree(l, "wigner_d");
  return wigner_d_all(l, r)[static_cast<std::size_t>(l)];
}

Eigen::MatrixXd wigner_d_polar(int l, double angle) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2 * l + 1, 2 * l + 1);
  d(l, l) = 1.0;
  for (int m = 1; m <= l; ++m) {
    const double c = std::cos(m * angle), s = std::sin(m * angle);
    d(l + m, l + m) = c;
    d(l + m, l - m) = -s;
    d(l - m, l - m) = c;
    d(l - m, l + m) = s;
  }
  return d;
}

// ---------------------------------------------------------------------------
// Quadrature

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  if (n < 1) throw Error(ErrorCode::InsufficientSamples, "Gauss-Legendre needs at least one node");
  nodes.assign(static_cast<std::size_t>(n), 0.0);
  weights.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    if (n == 1) p0 = 1.0;
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    nodes[static_cast<std::size_t>(i)] = -x;
    nodes[static_cast<std::size_t>(n - 1 - i)] = x;
    weights[static_cast<std::size_t>(i)] = w;
    weights[static_cast<std::size_t>(n - 1 - i)] = w;
  }
  if (n % 2 == 1) nodes[static_cast<std::size_t>(n / 2)] = 0.0;
}

SphereQuadrature make_sphere_quadrature(int degree) {
  if (degree < 0) throw Error(ErrorCode::InsufficientSamples, "quadrature degree must be non-negative");
  const int n_theta = degree / 2 + 1;
  const int n_phi = degree + 1;
  std::vector<double> nodes, w;
  gauss_legendre(n_theta, nodes, w);
  SphereQuadrature q;
  q.exact_degree = degree;
  for (int i = 0; i < n_theta; ++i) {
    const double ct = nodes[static_cast<std::size_t>(i)];
    const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
    for (int j = 0; j < n_phi; ++j) {
      const double phi = 2.0 * kPi * j / n_phi;
      q.points.emplace_back(st * std::cos(phi), st * std::sin(phi), ct);
      q.weights.push_back(w[static_cast<std::size_t>(i)] * 2.0 * kPi / n_phi);
    }
  }
  return q;
}

So3Quadrature make_so3_quadrature(int degree) {
  if (degree < 0) throw Error(ErrorCode::InsufficientSamples, "quadrature degree must be non-negative");
  const int n_angle = degree + 1;
  const int n_beta = degree / 2 + 1;
  std::vector<double> nodes, w;
  gauss_legendre(n_beta, nodes, w);
  So3Quadrature q;
  q.exact_degree = degree;
  const Eigen::Vector3d ez = Eigen::Vector3d::UnitZ(), ey = Eigen::Vector3d::UnitY();
  for (int a = 0; a < n_angle; ++a) {
    const Rotationd ra = exp_so3<double>(ez * (2.0 * kPi * a / n_angle));
    for (int b = 0; b < n_beta; ++b) {
      const Rotationd rb = exp_so3<double>(ey * std::acos(nodes[static_cast<std::size_t>(b)]));
      for (int c = 0; c < n_angle; ++c) {
        const Rotationd rc = exp_so3<double>(ez * (2.0 * kPi * c / n_angle));
        q.rotations.push_back(ra * rb * rc);
        q.weights.push_back(w[static_cast<std::size_t>(b)] / 2.0 / (n_angle * n_angle));
      }
    }
  }
  return q;
}

// ---------------------------------------------------------------------------
// SO(3) Fourier series

So3FourierCoeffs So3FourierCoeffs::zeros(int max_degree) {
  So3FourierCoeffs c;
  c.max_degree = max_degree;
  for (int l = 0; l <= max_degree; ++l) c.blocks.push_back(Eigen::MatrixXd::Zero(2 * l + 1, 2 * l + 1));
  return c;
}

double so3_fourier_synthesize(const So3FourierCoeffs& coeffs, const Rotationd& r) {
  const auto d = wigner_d_all(coeffs.max_degree, r);
  double f = 0.0;
  for (int l = 0; l <= coeffs.max_degree; ++l) {
    f += coeffs.blocks[static_cast<std::size_t>(l)].cwiseProduct(d[static_cast<std::size_t>(l)]).sum();
  }
  return f;
}

So3FourierCoeffs so3_fourier_analyze(const std::vector<double>& values, const So3Quadrature& quad,
                                     int max_degree) {
  if (values.size() != quad.rotations.size()) {
    throw Error(ErrorCode::InsufficientSamples, "one sample per quadrature rotation is required");
  }
  if (quad.exact_degree < 2 * max_degree) {
    throw Error(ErrorCode::InsufficientSamples, "quadrature too coarse for the requested band limit");
  }
  So3FourierCoeffs c = So3FourierCoeffs::zeros(max_degree);
  for (std::size_t k = 0; k < values.size(); ++k) {
    const auto d = wigner_d_all(max_degree, quad.rotations[k]);
    for (int l = 0; l <= max_degree; ++l) {
      c.blocks[static_cast<std::size_t>(l)] += (quad.weights[k] * values[k]) * d[static_cast<std::size_t>(l)];
    }
  }
  for (int l = 0; l <= max_degree; ++l) c.blocks[static_cast<std::size_t>(l)] *= static_cast<double>(2 * l + 1);
  return c;
}

}  // namespace se3kit

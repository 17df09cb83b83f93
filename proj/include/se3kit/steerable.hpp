#pragma once

// Steerable features, TFN kernels and layers, the eSCN reduction and a
// discrete SE(2) group-convolution reference.

#include <array>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "se3kit/harmonics.hpp"

namespace se3kit {

/// Ordered degrees of the irreducible blocks, repeats allowed.
class IrrepLayout {
 public:
  IrrepLayout() = default;
  explicit IrrepLayout(std::vector<int> degrees);

  /// 0, 1, ..., max_degree, each `multiplicity` times.
  static IrrepLayout full(int max_degree, int multiplicity = 1);

  const std::vector<int>& degrees() const { return degrees_; }
  int blocks() const { return static_cast<int>(degrees_.size()); }
  int degree(int n) const { return degrees_[static_cast<std::size_t>(n)]; }
  int offset(int n) const { return offsets_[static_cast<std::size_t>(n)]; }
  int dim() const { return dim_; }
  int max_degree() const;

  bool operator==(const IrrepLayout& other) const { return degrees_ == other.degrees_; }

 private:
  std::vector<int> degrees_;
  std::vector<int> offsets_;
  int dim_ = 0;
};

/// Block-diagonal D(R) over a layout.
Eigen::MatrixXd layout_wigner_d(const IrrepLayout& layout, const Rotationd& r);

struct SteerableVector {
  IrrepLayout layout;
  Eigen::VectorXd data;

  SteerableVector() = default;
  SteerableVector(IrrepLayout layout_, Eigen::VectorXd data_);

  static SteerableVector zeros(const IrrepLayout& layout);
  static SteerableVector random(const IrrepLayout& layout, Rng& rng);

  auto block(int n) { return data.segment(layout.offset(n), 2 * layout.degree(n) + 1); }
  auto block(int n) const { return data.segment(layout.offset(n), 2 * layout.degree(n) + 1); }

  SteerableVector rotated(const Rotationd& r) const;
};

struct FeaturedPointCloud {
  IrrepLayout layout;
  std::vector<Eigen::Vector3d> points;
  std::vector<SteerableVector> features;

  std::size_t size() const { return points.size(); }

  /// Throws DimensionMismatch on unequal lengths or a foreign layout.
  void validate() const;

  /// g o X: points moved by g, features rotated by D(R).
  FeaturedPointCloud transformed(const Posed& g) const;

  static FeaturedPointCloud random(const IrrepLayout& layout, int points, double radius, Rng& rng);
};

/// Counts floating-point operations; a multiply-add is two.
struct FlopCounter {
  std::uint64_t flops = 0;
  void add(std::uint64_t n) { flops += n; }
};

/// Gaussian radial basis: B = 8 centers on [0, r_max] with width equal to the
/// spacing, one weight vector per (out block, in block, J).
class RadialProfile {
 public:
  static constexpr int kBasisSize = 8;

  RadialProfile() = default;
  explicit RadialProfile(double r_max, double cutoff = std::numeric_limits<double>::infinity());

  double r_max() const { return r_max_; }
  double cutoff() const { return cutoff_; }

  void set_weights(int n_out, int n_in, int J, const Eigen::VectorXd& w);
  const Eigen::VectorXd* weights(int n_out, int n_in, int J) const;

  /// The eight basis values at r; zero beyond the cutoff.
  Eigen::Matrix<double, kBasisSize, 1> basis(double r) const;

  double value(int n_out, int n_in, int J, double r) const;

 private:
  double r_max_ = 1.0;
  double cutoff_ = std::numeric_limits<double>::infinity();
  std::map<std::array<int, 3>, Eigen::VectorXd> weights_;
};

/// Kernel block W^{(n',n)}(x) = sum_J phi_J(|x|) C^{l_n, J -> l_n'} (. (x) Y^J(x/|x|)).
class TfnKernel {
 public:
  TfnKernel(IrrepLayout in, IrrepLayout out, RadialProfile radial, std::shared_ptr<const CGTable> cg);

  /// Random gaussian weights for every admissible (n', n, J).
  static TfnKernel random(const IrrepLayout& in, const IrrepLayout& out, double r_max, Rng& rng);

  const IrrepLayout& in_layout() const { return in_; }
  const IrrepLayout& out_layout() const { return out_; }
  const RadialProfile& radial() const { return radial_; }
  const CGTable& cg() const { return *cg_; }
  std::shared_ptr<const CGTable> cg_ptr() const { return cg_; }
  int max_filter_degree() const { return in_.max_degree() + out_.max_degree(); }

  /// Same weights, different table.
  TfnKernel with_table(std::shared_ptr<const CGTable> cg) const;

  /// CG table large enough for the two layouts.
  static std::shared_ptr<const CGTable> table_for(const IrrepLayout& in, const IrrepLayout& out);

 private:
  IrrepLayout in_, out_;
  RadialProfile radial_;
  std::shared_ptr<const CGTable> cg_;
};

/// dim(out) x dim(in). Throws ZeroDisplacement at x = 0.
Eigen::MatrixXd tfn_kernel_eval(const TfnKernel& k, const Eigen::Vector3d& x, FlopCounter* flops = nullptr);

/// sum_j W(query - x_j) f_j. Throws QueryOnPoint if the query hits a cloud point.
SteerableVector tfn_convolve(const TfnKernel& k, const FeaturedPointCloud& cloud, const Eigen::Vector3d& query);

/// Mixes blocks of equal degree; weight(n', n) must vanish across degrees.
class SelfInteraction {
 public:
  SelfInteraction(IrrepLayout in, IrrepLayout out, Eigen::MatrixXd weights);

  static SelfInteraction identity(const IrrepLayout& layout);
  static SelfInteraction random(const IrrepLayout& in, const IrrepLayout& out, Rng& rng);

  const IrrepLayout& in_layout() const { return in_; }
  const IrrepLayout& out_layout() const { return out_; }
  const Eigen::MatrixXd& weights() const { return w_; }

  SteerableVector apply(const SteerableVector& f) const;

 private:
  IrrepLayout in_, out_;
  Eigen::MatrixXd w_;
};

/// out_i = SI(f_i) + sum_{j != i} W(x_i - x_j) f_j
struct TfnLayer {
  TfnKernel kernel;
  SelfInteraction self;

  FeaturedPointCloud apply(const FeaturedPointCloud& cloud) const;
};

/// Simplified invariant attention:
///   a_ij = softmax_j (sum_n g_n <f_i^(n), f_j^(n)>),  j != i
///   out_i = SI(f_i) + sum_{j != i} a_ij W(x_i - x_j) f_j
struct AttentionLayer {
  TfnKernel kernel;
  SelfInteraction self;
  Eigen::VectorXd metric;  // one weight per input block

  AttentionLayer(TfnKernel kernel_, SelfInteraction self_);
  AttentionLayer(TfnKernel kernel_, SelfInteraction self_, Eigen::VectorXd metric_);

  /// Row i holds a_ij (a_ii = 0).
  Eigen::MatrixXd weights(const FeaturedPointCloud& cloud) const;

  FeaturedPointCloud apply(const FeaturedPointCloud& cloud) const;
};

FeaturedPointCloud invariant_attention(const FeaturedPointCloud& cloud, const AttentionLayer& layer);

// ---------------------------------------------------------------------------
// eSCN

/// Minimal-angle rotation with R x = |x| e_y, built as Ry(a) Rx(-b) Ry(-a).
Rotationd rotation_to_y(const Eigen::Vector3d& x);

/// Precomputed constants for the axis-aligned evaluation of a TFN kernel.
class EscnPlan {
 public:
  explicit EscnPlan(const TfnKernel& k);

  const TfnKernel& kernel() const { return k_; }

  /// Equals tfn_kernel_eval(k, x) * f. Throws ZeroDisplacement at x = 0.
  SteerableVector apply(const Eigen::Vector3d& x, const SteerableVector& f, FlopCounter* flops = nullptr) const;

  /// The aligned kernel W(r e_y); (m, -m) pairs only.
  Eigen::MatrixXd aligned_kernel(double r) const;

 private:
  struct Coupling {
    int J;
    std::vector<double> s, a;  // m = 0..m_max; a[0] unused
  };
  struct Pair {
    int n_out, n_in, m_max;
    std::vector<Coupling> couplings;
  };
  struct Angles {
    std::vector<double> ca, sa, cb, sb;  // cos/sin of m*a and m*b
  };

  /// v <- D^l(Ry(sign * a)) v, O(l).
  void rotate_about_y(int l, const std::vector<double>& c, const std::vector<double>& s, double sign,
                      double* v) const;
  /// v <- D^l(R) v for R = Ry(a) Rx(-b) Ry(-a), or D^l(R)^T v.
  void rotate(int l, const Angles& t, bool transpose, Eigen::VectorXd& v, FlopCounter* flops) const;

  TfnKernel k_;
  std::vector<Pair> pairs_;
  std::vector<Eigen::MatrixXd> swap_;        // D^l(Rz(-pi/2)), maps e_y to e_x
  std::vector<std::vector<double>> y_sign_;  // sign of the (m, -m) entry of D^l(Ry)
};

SteerableVector escn_kernel_apply(const TfnKernel& k, const Eigen::Vector3d& x, const SteerableVector& f,
                                  FlopCounter* flops = nullptr);

/// W(x) f through the dense kernel, with the same flop accounting.
SteerableVector direct_kernel_apply(const TfnKernel& k, const Eigen::Vector3d& x, const SteerableVector& f,
                                    FlopCounter* flops = nullptr);

struct EscnCost {
  int max_degree;
  std::uint64_t direct_flops;
  std::uint64_t escn_flops;
  double ratio() const { return static_cast<double>(direct_flops) / static_cast<double>(escn_flops); }
};

/// Work of one kernel application with in = out = IrrepLayout::full(L).
EscnCost escn_cost(int max_degree, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Equivariance reports

enum class LayerKind { Identity, SelfInteraction, Tfn, Escn, Attention };

LayerKind parse_layer_kind(const std::string& name);
std::string to_string(LayerKind kind);

struct EquivarianceOptions {
  LayerKind layer = LayerKind::Tfn;
  int trials = 200;
  int max_degree = 2;
  int points = 32;
  std::uint64_t seed = 1;
  double tolerance = 1e-8;
  bool perturb_cg = false;  // mutation check: shift one CG coefficient by 0.1
  std::optional<FeaturedPointCloud> cloud;  // fixed input; its layout replaces the default
};

struct EquivarianceReport {
  std::string layer;
  int trials = 0;
  int max_degree = 0;
  double max_residual = 0.0;
  double mean_residual = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

/// For escn the residual is the deviation from the direct path; for the
/// other layers it is |f(g.x | g o X) - D(R) f(x | X)| / (1 + |f|).
EquivarianceReport equivariance_report(const EquivarianceOptions& options);

// ---------------------------------------------------------------------------
// Discrete SE(2) reference on square pixel grids. Coordinates are measured
// from the centre pixel, the row index grows along y.

struct Se2 {
  double theta = 0.0;
  Eigen::Vector2d t = Eigen::Vector2d::Zero();

  Se2 operator*(const Se2& o) const;
  Se2 inverse() const;
  Eigen::Vector2d operator*(const Eigen::Vector2d& x) const;
};

/// (L_g f)(x) = f(g^{-1} x), bilinear, zero outside the grid.
Eigen::MatrixXd left_regular_apply(const Se2& g, const Eigen::MatrixXd& f);

/// out[k](x) = sum_u image(x + u) kernel(R_{-theta_k} u), theta_k = 2 pi k / n_theta.
std::vector<Eigen::MatrixXd> lifting_correlation_se2(const Eigen::MatrixXd& image, const Eigen::MatrixXd& kernel,
                                                     int n_theta);

/// out[k](x) = sum_k' sum_u lifted[k'](x + u) kernel[k' - k](R_{-theta_k} u).
std::vector<Eigen::MatrixXd> group_correlation_se2(const std::vector<Eigen::MatrixXd>& lifted,
                                                   const std::vector<Eigen::MatrixXd>& kernel);

}  // namespace se3kit

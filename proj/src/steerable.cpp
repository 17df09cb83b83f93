#include "se3kit/steerable.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace se3kit {

namespace {

constexpr double kMinDisplacement = 1e-12;
constexpr double kLatticeSnap = 1e-9;

// Nominal cost of one spherical-harmonic coefficient in the flop model.
constexpr std::uint64_t kShFlops = 10;

void count(FlopCounter* flops, std::uint64_t n) {
  if (flops) flops->add(n);
}

void require_layout(const IrrepLayout& got, const IrrepLayout& want, const char* what) {
  if (!(got == want)) throw Error(ErrorCode::DimensionMismatch, std::string(what) + ": layout mismatch");
}

}  // namespace

// ---------------------------------------------------------------------------
// Layouts and features

IrrepLayout::IrrepLayout(std::vector<int> degrees) : degrees_(std::move(degrees)) {
  for (int l : degrees_) {
    if (l < 0 || l > kMaxDegree) throw Error(ErrorCode::DomainError, "irrep degree out of range");
    offsets_.push_back(dim_);
    dim_ += 2 * l + 1;
  }
}

IrrepLayout IrrepLayout::full(int max_degree, int multiplicity) {
  std::vector<int> degrees;
  for (int l = 0; l <= max_degree; ++l)
    for (int k = 0; k < multiplicity; ++k) degrees.push_back(l);
  return IrrepLayout(std::move(degrees));
}

int IrrepLayout::max_degree() const {
  return degrees_.empty() ? 0 : *std::max_element(degrees_.begin(), degrees_.end());
}

Eigen::MatrixXd layout_wigner_d(const IrrepLayout& layout, const Rotationd& r) {
  const auto d = wigner_d_all(layout.max_degree(), r);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(layout.dim(), layout.dim());
  for (int n = 0; n < layout.blocks(); ++n) {
    const int l = layout.degree(n);
    out.block(layout.offset(n), layout.offset(n), 2 * l + 1, 2 * l + 1) = d[static_cast<std::size_t>(l)];
  }
  return out;
}

SteerableVector::SteerableVector(IrrepLayout layout_, Eigen::VectorXd data_)
    : layout(std::move(layout_)), data(std::move(data_)) {
  if (data.size() != layout.dim()) throw Error(ErrorCode::DimensionMismatch, "feature size does not match layout");
}

SteerableVector SteerableVector::zeros(const IrrepLayout& layout) {
  return SteerableVector(layout, Eigen::VectorXd::Zero(layout.dim()));
}

SteerableVector SteerableVector::random(const IrrepLayout& layout, Rng& rng) {
  return SteerableVector(layout, gaussian_vector(rng, layout.dim()));
}

SteerableVector SteerableVector::rotated(const Rotationd& r) const {
  const auto d = wigner_d_all(layout.max_degree(), r);
  SteerableVector out = *this;
  for (int n = 0; n < layout.blocks(); ++n) out.block(n) = d[static_cast<std::size_t>(layout.degree(n))] * block(n);
  return out;
}

void FeaturedPointCloud::validate() const {
  if (points.size() != features.size())
    throw Error(ErrorCode::DimensionMismatch, "point and feature counts differ");
  for (const auto& f : features) {
    require_layout(f.layout, layout, "point cloud feature");
    if (f.data.size() != layout.dim()) throw Error(ErrorCode::DimensionMismatch, "feature size does not match layout");
  }
}

FeaturedPointCloud FeaturedPointCloud::transformed(const Posed& g) const {
  validate();
  FeaturedPointCloud out = *this;
  const Eigen::MatrixXd d = layout_wigner_d(layout, g.rotation());
  for (std::size_t i = 0; i < size(); ++i) {
    out.points[i] = g * points[i];
    out.features[i].data = d * features[i].data;
  }
  return out;
}

FeaturedPointCloud FeaturedPointCloud::random(const IrrepLayout& layout, int points, double radius, Rng& rng) {
  FeaturedPointCloud cloud;
  cloud.layout = layout;
  for (int i = 0; i < points; ++i) {
    const Eigen::Vector3d dir = Eigen::Vector3d(gaussian(rng), gaussian(rng), gaussian(rng)).normalized();
    cloud.points.push_back(dir * radius * std::cbrt(uniform(rng, 0.0, 1.0)));
    cloud.features.push_back(SteerableVector::random(layout, rng));
  }
  return cloud;
}

// ---------------------------------------------------------------------------
// Radial functions and kernels

RadialProfile::RadialProfile(double r_max, double cutoff) : r_max_(r_max), cutoff_(cutoff) {
  if (!(r_max > 0.0) || !std::isfinite(r_max)) throw Error(ErrorCode::InvalidInput, "r_max must be positive");
  if (!(cutoff > 0.0)) throw Error(ErrorCode::InvalidInput, "cutoff must be positive");
}

void RadialProfile::set_weights(int n_out, int n_in, int J, const Eigen::VectorXd& w) {
  if (w.size() != kBasisSize) throw Error(ErrorCode::DimensionMismatch, "radial weights need 8 entries");
  weights_[{n_out, n_in, J}] = w;
}

const Eigen::VectorXd* RadialProfile::weights(int n_out, int n_in, int J) const {
  const auto it = weights_.find({n_out, n_in, J});
  return it == weights_.end() ? nullptr : &it->second;
}

Eigen::Matrix<double, RadialProfile::kBasisSize, 1> RadialProfile::basis(double r) const {
  Eigen::Matrix<double, kBasisSize, 1> b = Eigen::Matrix<double, kBasisSize, 1>::Zero();
  if (r > cutoff_) return b;
  const double h = r_max_ / (kBasisSize - 1);
  for (int i = 0; i < kBasisSize; ++i) {
    const double z = (r - i * h) / h;
    b(i) = std::exp(-z * z);
  }
  return b;
}

double RadialProfile::value(int n_out, int n_in, int J, double r) const {
  const Eigen::VectorXd* w = weights(n_out, n_in, J);
  return w ? w->dot(basis(r)) : 0.0;
}

TfnKernel::TfnKernel(IrrepLayout in, IrrepLayout out, RadialProfile radial, std::shared_ptr<const CGTable> cg)
    : in_(std::move(in)), out_(std::move(out)), radial_(std::move(radial)), cg_(std::move(cg)) {
  if (!cg_) throw Error(ErrorCode::InvalidInput, "kernel needs a CG table");
  if (max_filter_degree() > kMaxDegree) throw Error(ErrorCode::DomainError, "filter degree exceeds the table cap");
  if (cg_->l1_max() < in_.max_degree() || cg_->l2_max() < max_filter_degree() || cg_->l_max() < out_.max_degree())
    throw Error(ErrorCode::DimensionMismatch, "CG table too small for the kernel layouts");
}

std::shared_ptr<const CGTable> TfnKernel::table_for(const IrrepLayout& in, const IrrepLayout& out) {
  return std::make_shared<const CGTable>(in.max_degree(), in.max_degree() + out.max_degree(), out.max_degree());
}

TfnKernel TfnKernel::random(const IrrepLayout& in, const IrrepLayout& out, double r_max, Rng& rng) {
  RadialProfile radial(r_max);
  for (int no = 0; no < out.blocks(); ++no)
    for (int ni = 0; ni < in.blocks(); ++ni) {
      const int lo = out.degree(no), li = in.degree(ni);
      for (int J = std::abs(lo - li); J <= lo + li; ++J)
        radial.set_weights(no, ni, J, gaussian_vector(rng, RadialProfile::kBasisSize) / std::sqrt(8.0));
    }
  return TfnKernel(in, out, std::move(radial), table_for(in, out));
}

TfnKernel TfnKernel::with_table(std::shared_ptr<const CGTable> cg) const {
  return TfnKernel(in_, out_, radial_, std::move(cg));
}

Eigen::MatrixXd tfn_kernel_eval(const TfnKernel& k, const Eigen::Vector3d& x, FlopCounter* flops) {
  const double r = x.norm();
  if (!(r > kMinDisplacement)) throw Error(ErrorCode::ZeroDisplacement, "kernel is undefined at x = 0");
  const IrrepLayout& in = k.in_layout();
  const IrrepLayout& out = k.out_layout();
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(out.dim(), in.dim());
  if (r > k.radial().cutoff()) return w;

  const int jmax = k.max_filter_degree();
  const ShBasisEval y = sh_basis(jmax, x / r);
  const auto basis = k.radial().basis(r);
  count(flops, kShFlops * static_cast<std::uint64_t>((jmax + 1) * (jmax + 1)) + 4 * RadialProfile::kBasisSize);

  for (int no = 0; no < out.blocks(); ++no)
    for (int ni = 0; ni < in.blocks(); ++ni) {
      const int lo = out.degree(no), li = in.degree(ni);
      for (int J = std::abs(lo - li); J <= lo + li; ++J) {
        const Eigen::VectorXd* wr = k.radial().weights(no, ni, J);
        if (!wr) continue;
        const double phi = wr->dot(basis);
        const CgBlock& b = k.cg().block(li, J, lo);
        const Eigen::VectorXd& yj = y[J];
        for (const auto& e : b.entries)
          w(out.offset(no) + e.m + lo, in.offset(ni) + e.m1 + li) += phi * e.value * yj(e.m2 + J);
        count(flops, 2 * RadialProfile::kBasisSize + 3 * b.entries.size());
      }
    }
  return w;
}

SteerableVector direct_kernel_apply(const TfnKernel& k, const Eigen::Vector3d& x, const SteerableVector& f,
                                    FlopCounter* flops) {
  require_layout(f.layout, k.in_layout(), "kernel input");
  const Eigen::MatrixXd w = tfn_kernel_eval(k, x, flops);
  count(flops, 2 * static_cast<std::uint64_t>(w.rows() * w.cols()));
  return SteerableVector(k.out_layout(), w * f.data);
}

namespace {

Eigen::VectorXd convolve_except(const TfnKernel& k, const FeaturedPointCloud& cloud, const Eigen::Vector3d& query,
                                std::size_t skip, const Eigen::MatrixXd* attention = nullptr, std::size_t row = 0) {
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(k.out_layout().dim());
  for (std::size_t j = 0; j < cloud.size(); ++j) {
    if (j == skip) continue;
    const Eigen::Vector3d d = query - cloud.points[j];
    if (!(d.norm() > kMinDisplacement)) throw Error(ErrorCode::QueryOnPoint, "query coincides with a cloud point");
    const double a = attention ? (*attention)(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(j)) : 1.0;
    acc += a * (tfn_kernel_eval(k, d) * cloud.features[j].data);
  }
  return acc;
}

}  // namespace

SteerableVector tfn_convolve(const TfnKernel& k, const FeaturedPointCloud& cloud, const Eigen::Vector3d& query) {
  if (cloud.size() == 0) return SteerableVector::zeros(k.out_layout());
  cloud.validate();
  require_layout(cloud.layout, k.in_layout(), "convolution input");
  return SteerableVector(k.out_layout(), convolve_except(k, cloud, query, cloud.size()));
}

// ---------------------------------------------------------------------------
// Self-interaction and layers

SelfInteraction::SelfInteraction(IrrepLayout in, IrrepLayout out, Eigen::MatrixXd weights)
    : in_(std::move(in)), out_(std::move(out)), w_(std::move(weights)) {
  if (w_.rows() != out_.blocks() || w_.cols() != in_.blocks())
    throw Error(ErrorCode::DimensionMismatch, "self-interaction weights must be blocks(out) x blocks(in)");
  for (int no = 0; no < out_.blocks(); ++no)
    for (int ni = 0; ni < in_.blocks(); ++ni)
      if (out_.degree(no) != in_.degree(ni) && w_(no, ni) != 0.0)
        throw Error(ErrorCode::DimensionMismatch, "self-interaction cannot mix degrees");
}

SelfInteraction SelfInteraction::identity(const IrrepLayout& layout) {
  return SelfInteraction(layout, layout, Eigen::MatrixXd::Identity(layout.blocks(), layout.blocks()));
}

SelfInteraction SelfInteraction::random(const IrrepLayout& in, const IrrepLayout& out, Rng& rng) {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(out.blocks(), in.blocks());
  for (int no = 0; no < out.blocks(); ++no)
    for (int ni = 0; ni < in.blocks(); ++ni)
      if (out.degree(no) == in.degree(ni)) w(no, ni) = gaussian(rng);
  return SelfInteraction(in, out, w);
}

SteerableVector SelfInteraction::apply(const SteerableVector& f) const {
  require_layout(f.layout, in_, "self-interaction input");
  SteerableVector out = SteerableVector::zeros(out_);
  for (int no = 0; no < out_.blocks(); ++no)
    for (int ni = 0; ni < in_.blocks(); ++ni)
      if (w_(no, ni) != 0.0) out.block(no) += w_(no, ni) * f.block(ni);
  return out;
}

namespace {

void check_layer(const TfnKernel& k, const SelfInteraction& self, const FeaturedPointCloud& cloud) {
  cloud.validate();
  require_layout(self.in_layout(), k.in_layout(), "self-interaction");
  require_layout(self.out_layout(), k.out_layout(), "self-interaction");
  if (cloud.size() > 0) require_layout(cloud.layout, k.in_layout(), "layer input");
}

}  // namespace

FeaturedPointCloud TfnLayer::apply(const FeaturedPointCloud& cloud) const {
  check_layer(kernel, self, cloud);
  FeaturedPointCloud out;
  out.layout = kernel.out_layout();
  out.points = cloud.points;
  out.features.assign(cloud.size(), SteerableVector::zeros(out.layout));
  parallel_for(static_cast<int>(cloud.size()), [&](int i) {
    const auto u = static_cast<std::size_t>(i);
    out.features[u].data = self.apply(cloud.features[u]).data + convolve_except(kernel, cloud, cloud.points[u], u);
  });
  return out;
}

AttentionLayer::AttentionLayer(TfnKernel kernel_, SelfInteraction self_)
    : AttentionLayer(kernel_, std::move(self_), Eigen::VectorXd::Ones(kernel_.in_layout().blocks())) {}

AttentionLayer::AttentionLayer(TfnKernel kernel_, SelfInteraction self_, Eigen::VectorXd metric_)
    : kernel(std::move(kernel_)), self(std::move(self_)), metric(std::move(metric_)) {
  if (metric.size() != kernel.in_layout().blocks())
    throw Error(ErrorCode::DimensionMismatch, "attention metric needs one weight per input block");
}

Eigen::MatrixXd AttentionLayer::weights(const FeaturedPointCloud& cloud) const {
  check_layer(kernel, self, cloud);
  const auto n = static_cast<Eigen::Index>(cloud.size());
  Eigen::MatrixXd logits = Eigen::MatrixXd::Zero(n, n);
  const IrrepLayout& layout = kernel.in_layout();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto& fi = cloud.features[static_cast<std::size_t>(i)];
      const auto& fj = cloud.features[static_cast<std::size_t>(j)];
      for (int b = 0; b < layout.blocks(); ++b) logits(i, j) += metric(b) * fi.block(b).dot(fj.block(b));
    }
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double top = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) top = std::max(top, logits(i, j));
    double total = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) total += a(i, j) = std::exp(logits(i, j) - top);
    if (total > 0.0) a.row(i) /= total;
  }
  return a;
}

FeaturedPointCloud AttentionLayer::apply(const FeaturedPointCloud& cloud) const {
  const Eigen::MatrixXd a = weights(cloud);
  FeaturedPointCloud out;
  out.layout = kernel.out_layout();
  out.points = cloud.points;
  out.features.assign(cloud.size(), SteerableVector::zeros(out.layout));
  parallel_for(static_cast<int>(cloud.size()), [&](int i) {
    const auto u = static_cast<std::size_t>(i);
    out.features[u].data =
        self.apply(cloud.features[u]).data + convolve_except(kernel, cloud, cloud.points[u], u, &a, u);
  });
  return out;
}

FeaturedPointCloud invariant_attention(const FeaturedPointCloud& cloud, const AttentionLayer& layer) {
  return layer.apply(cloud);
}

// ---------------------------------------------------------------------------
// eSCN

namespace {

struct AxisAngles {
  double a, b;
};

AxisAngles axis_angles(const Eigen::Vector3d& u) {
  return {std::atan2(u.x(), u.z()), std::atan2(std::hypot(u.x(), u.z()), u.y())};
}

Eigen::Matrix3d rot_y(double t) {
  Eigen::Matrix3d m;
  m << std::cos(t), 0, std::sin(t), 0, 1, 0, -std::sin(t), 0, std::cos(t);
  return m;
}

Eigen::Matrix3d rot_x(double t) {
  Eigen::Matrix3d m;
  m << 1, 0, 0, 0, std::cos(t), -std::sin(t), 0, std::sin(t), std::cos(t);
  return m;
}

void multiple_angles(double t, int n, std::vector<double>& c, std::vector<double>& s) {
  c.assign(static_cast<std::size_t>(n + 1), 1.0);
  s.assign(static_cast<std::size_t>(n + 1), 0.0);
  const double c1 = std::cos(t), s1 = std::sin(t);
  for (int m = 1; m <= n; ++m) {
    const auto k = static_cast<std::size_t>(m);
    c[k] = c[k - 1] * c1 - s[k - 1] * s1;
    s[k] = s[k - 1] * c1 + c[k - 1] * s1;
  }
}

}  // namespace

Rotationd rotation_to_y(const Eigen::Vector3d& x) {
  const double r = x.norm();
  if (!(r > kMinDisplacement)) throw Error(ErrorCode::ZeroDisplacement, "direction of a zero vector");
  const AxisAngles t = axis_angles(x / r);
  return Rotationd::from_orthonormal(rot_y(t.a) * rot_x(-t.b) * rot_y(-t.a));
}

EscnPlan::EscnPlan(const TfnKernel& k) : k_(k) {
  const IrrepLayout& in = k_.in_layout();
  const IrrepLayout& out = k_.out_layout();
  const int lmax = std::max(in.max_degree(), out.max_degree());
  Eigen::Matrix3d q;
  q << 0, 1, 0, -1, 0, 0, 0, 0, 1;
  const auto swap = wigner_d_all(lmax, Rotationd::from_orthonormal(q));
  swap_.assign(swap.begin(), swap.end());
  const double probe = 0.3;
  for (int l = 0; l <= lmax; ++l) {
    const Eigen::MatrixXd d = wigner_d_polar(l, probe);
    std::vector<double> sign(static_cast<std::size_t>(l + 1), 1.0);
    for (int m = 1; m <= l; ++m) sign[static_cast<std::size_t>(m)] = d(l + m, l - m) >= 0.0 ? 1.0 : -1.0;
    y_sign_.push_back(std::move(sign));
  }

  for (int no = 0; no < out.blocks(); ++no)
    for (int ni = 0; ni < in.blocks(); ++ni) {
      const int lo = out.degree(no), li = in.degree(ni);
      Pair pair{no, ni, std::min(lo, li), {}};
      for (int J = std::abs(lo - li); J <= lo + li; ++J) {
        if (!k_.radial().weights(no, ni, J)) continue;
        Coupling c{J, std::vector<double>(static_cast<std::size_t>(pair.m_max + 1), 0.0),
                   std::vector<double>(static_cast<std::size_t>(pair.m_max + 1), 0.0)};
        const double cj = sh_polar_value(J);
        for (int m = 0; m <= pair.m_max; ++m) {
          c.s[static_cast<std::size_t>(m)] = cj * k_.cg()(li, m, J, 0, lo, m);
          if (m > 0) c.a[static_cast<std::size_t>(m)] = cj * k_.cg()(li, -m, J, 0, lo, m);
        }
        pair.couplings.push_back(std::move(c));
      }
      if (!pair.couplings.empty()) pairs_.push_back(std::move(pair));
    }
}

void EscnPlan::rotate_about_y(int l, const std::vector<double>& c, const std::vector<double>& s, double sign,
                              double* v) const {
  for (int m = 1; m <= l; ++m) {
    const auto k = static_cast<std::size_t>(m);
    const double cs = c[k], sn = sign * y_sign_[static_cast<std::size_t>(l)][k] * s[k];
    const double p = v[l + m], n = v[l - m];
    v[l + m] = cs * p + sn * n;
    v[l - m] = -sn * p + cs * n;
  }
}

void EscnPlan::rotate(int l, const Angles& t, bool transpose, Eigen::VectorXd& v, FlopCounter* flops) const {
  if (l == 0) return;
  const Eigen::MatrixXd& s = swap_[static_cast<std::size_t>(l)];
  rotate_about_y(l, t.ca, t.sa, -1.0, v.data());
  v = s.transpose() * v;
  rotate_about_y(l, t.cb, t.sb, transpose ? 1.0 : -1.0, v.data());
  v = s * v;
  rotate_about_y(l, t.ca, t.sa, 1.0, v.data());
  const auto d = static_cast<std::uint64_t>(2 * l + 1);
  count(flops, 3 * 6 * static_cast<std::uint64_t>(l) + 2 * 2 * d * d);
}

SteerableVector EscnPlan::apply(const Eigen::Vector3d& x, const SteerableVector& f, FlopCounter* flops) const {
  require_layout(f.layout, k_.in_layout(), "eSCN input");
  const double r = x.norm();
  if (!(r > kMinDisplacement)) throw Error(ErrorCode::ZeroDisplacement, "kernel is undefined at x = 0");
  const IrrepLayout& in = k_.in_layout();
  const IrrepLayout& out = k_.out_layout();
  SteerableVector result = SteerableVector::zeros(out);
  if (r > k_.radial().cutoff()) return result;

  const AxisAngles aa = axis_angles(x / r);
  const int lmax = std::max(in.max_degree(), out.max_degree());
  Angles t;
  multiple_angles(aa.a, lmax, t.ca, t.sa);
  multiple_angles(aa.b, lmax, t.cb, t.sb);
  const auto basis = k_.radial().basis(r);
  count(flops, 40 + 12 * static_cast<std::uint64_t>(lmax) + 4 * RadialProfile::kBasisSize);

  std::vector<Eigen::VectorXd> g(static_cast<std::size_t>(in.blocks()));
  for (int n = 0; n < in.blocks(); ++n) {
    g[static_cast<std::size_t>(n)] = f.block(n);
    rotate(in.degree(n), t, false, g[static_cast<std::size_t>(n)], flops);
  }
  std::vector<Eigen::VectorXd> h(static_cast<std::size_t>(out.blocks()));
  for (int n = 0; n < out.blocks(); ++n) h[static_cast<std::size_t>(n)] = Eigen::VectorXd::Zero(2 * out.degree(n) + 1);

  std::vector<double> sm, am;
  for (const Pair& p : pairs_) {
    sm.assign(static_cast<std::size_t>(p.m_max + 1), 0.0);
    am.assign(static_cast<std::size_t>(p.m_max + 1), 0.0);
    for (const Coupling& c : p.couplings) {
      const double phi = k_.radial().weights(p.n_out, p.n_in, c.J)->dot(basis);
      for (int m = 0; m <= p.m_max; ++m) {
        const auto k = static_cast<std::size_t>(m);
        sm[k] += phi * c.s[k];
        am[k] += phi * c.a[k];
      }
      count(flops, 2 * RadialProfile::kBasisSize + 2 + 4 * static_cast<std::uint64_t>(p.m_max));
    }
    const int li = in.degree(p.n_in), lo = out.degree(p.n_out);
    const Eigen::VectorXd& gi = g[static_cast<std::size_t>(p.n_in)];
    Eigen::VectorXd& ho = h[static_cast<std::size_t>(p.n_out)];
    ho(lo) += sm[0] * gi(li);
    // Each (m, -m) pair is one complex product (s - i a)(g_m + i g_-m).
    for (int m = 1; m <= p.m_max; ++m) {
      const auto k = static_cast<std::size_t>(m);
      const double gp = gi(li + m), gm = gi(li - m);
      ho(lo + m) += sm[k] * gp + am[k] * gm;
      ho(lo - m) += -am[k] * gp + sm[k] * gm;
    }
    count(flops, 2 + 8 * static_cast<std::uint64_t>(p.m_max));
  }

  for (int n = 0; n < out.blocks(); ++n) {
    rotate(out.degree(n), t, true, h[static_cast<std::size_t>(n)], flops);
    result.block(n) = h[static_cast<std::size_t>(n)];
  }
  return result;
}

Eigen::MatrixXd EscnPlan::aligned_kernel(double r) const {
  const IrrepLayout& in = k_.in_layout();
  const IrrepLayout& out = k_.out_layout();
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(out.dim(), in.dim());
  if (r > k_.radial().cutoff()) return w;
  const auto basis = k_.radial().basis(r);
  for (const Pair& p : pairs_) {
    const int li = in.degree(p.n_in), lo = out.degree(p.n_out);
    const int ri = in.offset(p.n_in) + li, ro = out.offset(p.n_out) + lo;
    for (const Coupling& c : p.couplings) {
      const double phi = k_.radial().weights(p.n_out, p.n_in, c.J)->dot(basis);
      w(ro, ri) += phi * c.s[0];
      for (int m = 1; m <= p.m_max; ++m) {
        const auto k = static_cast<std::size_t>(m);
        w(ro + m, ri + m) += phi * c.s[k];
        w(ro - m, ri - m) += phi * c.s[k];
        w(ro + m, ri - m) += phi * c.a[k];
        w(ro - m, ri + m) -= phi * c.a[k];
      }
    }
  }
  return w;
}

SteerableVector escn_kernel_apply(const TfnKernel& k, const Eigen::Vector3d& x, const SteerableVector& f,
                                  FlopCounter* flops) {
  return EscnPlan(k).apply(x, f, flops);
}

EscnCost escn_cost(int max_degree, std::uint64_t seed) {
  Rng rng(seed);
  const IrrepLayout layout = IrrepLayout::full(max_degree);
  const TfnKernel k = TfnKernel::random(layout, layout, 2.0, rng);
  const EscnPlan plan(k);
  const Eigen::Vector3d x(0.3, -0.7, 0.5);
  const SteerableVector f = SteerableVector::random(layout, rng);
  FlopCounter direct, escn;
  direct_kernel_apply(k, x, f, &direct);
  plan.apply(x, f, &escn);
  return {max_degree, direct.flops, escn.flops};
}

// ---------------------------------------------------------------------------
// Equivariance reports

LayerKind parse_layer_kind(const std::string& name) {
  if (name == "identity") return LayerKind::Identity;
  if (name == "self-interaction") return LayerKind::SelfInteraction;
  if (name == "tfn") return LayerKind::Tfn;
  if (name == "escn") return LayerKind::Escn;
  if (name == "attention") return LayerKind::Attention;
  throw Error(ErrorCode::InvalidInput, "unknown layer '" + name + "'");
}

std::string to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::Identity: return "identity";
    case LayerKind::SelfInteraction: return "self-interaction";
    case LayerKind::Tfn: return "tfn";
    case LayerKind::Escn: return "escn";
    case LayerKind::Attention: return "attention";
  }
  return "unknown";
}

namespace {

double cloud_residual(const FeaturedPointCloud& moved_out, const FeaturedPointCloud& out, const Rotationd& r) {
  const Eigen::MatrixXd d = layout_wigner_d(out.layout, r);
  double worst = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const Eigen::VectorXd& f = out.features[i].data;
    worst = std::max(worst, (moved_out.features[i].data - d * f).norm() / (1.0 + f.norm()));
  }
  return worst;
}

}  // namespace

EquivarianceReport equivariance_report(const EquivarianceOptions& o) {
  if (o.trials < 1) throw Error(ErrorCode::InvalidInput, "trials must be positive");
  if (o.max_degree < 0 || 2 * o.max_degree > kMaxDegree) throw Error(ErrorCode::DomainError, "max degree out of range");
  if (o.points < 1) throw Error(ErrorCode::InvalidInput, "points must be positive");

  Rng rng(o.seed);
  if (o.cloud) o.cloud->validate();
  const IrrepLayout in = o.cloud ? o.cloud->layout : IrrepLayout::full(o.max_degree, 2);
  const IrrepLayout out = IrrepLayout::full(o.max_degree, 2);
  TfnKernel kernel = TfnKernel::random(in, out, 2.0, rng);
  if (o.perturb_cg) {
    const CGTable broken = std::min(in.max_degree(), out.max_degree()) >= 1 ? kernel.cg().perturbed(1, 0, 1, 1, 1, -1, 0.1)
                                             : kernel.cg().perturbed(0, 0, 0, 0, 0, 0, 0.1);
    kernel = kernel.with_table(std::make_shared<const CGTable>(broken));
  }
  const SelfInteraction self = SelfInteraction::random(in, out, rng);
  const TfnLayer tfn{kernel, self};
  const AttentionLayer attention(kernel, self);
  const EscnPlan plan(kernel);

  EquivarianceReport report;
  report.layer = to_string(o.layer);
  report.trials = o.trials;
  report.max_degree = o.max_degree;
  report.tolerance = o.tolerance;
  double total = 0.0;
  for (int trial = 0; trial < o.trials; ++trial) {
    double residual = 0.0;
    switch (o.layer) {
      case LayerKind::Identity: {
        const SteerableVector f = SteerableVector::random(in, rng);
        const Rotationd r = random_rotation(rng);
        residual = (f.rotated(r).data - f.rotated(r).data).norm();
        break;
      }
      case LayerKind::SelfInteraction: {
        const SteerableVector f = SteerableVector::random(in, rng);
        const Rotationd r = random_rotation(rng);
        const SteerableVector y = self.apply(f);
        residual = (self.apply(f.rotated(r)).data - y.rotated(r).data).norm() / (1.0 + y.data.norm());
        break;
      }
      case LayerKind::Tfn:
      case LayerKind::Attention: {
        const FeaturedPointCloud cloud = o.cloud ? *o.cloud : FeaturedPointCloud::random(in, o.points, 1.0, rng);
        const Posed g = random_pose(rng, 1.0);
        const FeaturedPointCloud moved = cloud.transformed(g);
        if (o.layer == LayerKind::Tfn)
          residual = cloud_residual(tfn.apply(moved), tfn.apply(cloud), g.rotation());
        else
          residual = cloud_residual(attention.apply(moved), attention.apply(cloud), g.rotation());
        break;
      }
      case LayerKind::Escn: {
        const Eigen::Vector3d dir = Eigen::Vector3d(gaussian(rng), gaussian(rng), gaussian(rng)).normalized();
        const Eigen::Vector3d x = dir * uniform(rng, 0.05, 2.0);
        const SteerableVector f = SteerableVector::random(in, rng);
        residual = (plan.apply(x, f).data - direct_kernel_apply(kernel, x, f).data).cwiseAbs().maxCoeff();
        break;
      }
    }
    report.max_residual = std::max(report.max_residual, residual);
    total += residual;
  }
  report.mean_residual = total / o.trials;
  report.passed = report.max_residual <= o.tolerance;
  return report;
}

// ---------------------------------------------------------------------------
// SE(2) reference

Se2 Se2::operator*(const Se2& o) const {
  const Eigen::Rotation2Dd r(theta);
  return {theta + o.theta, r * o.t + t};
}

Se2 Se2::inverse() const {
  const Eigen::Rotation2Dd r(-theta);
  return {-theta, -(r * t)};
}

Eigen::Vector2d Se2::operator*(const Eigen::Vector2d& x) const { return Eigen::Rotation2Dd(theta) * x + t; }

namespace {

double snap(double v) {
  const double r = std::round(v);
  return std::abs(v - r) < kLatticeSnap ? r : v;
}

// Bilinear sample at centred coordinates (x along columns, y along rows).
double sample(const Eigen::MatrixXd& f, const Eigen::Vector2d& p) {
  const double ci = snap(p.y() + 0.5 * static_cast<double>(f.rows() - 1));
  const double cj = snap(p.x() + 0.5 * static_cast<double>(f.cols() - 1));
  const double i0 = std::floor(ci), j0 = std::floor(cj);
  const double fi = ci - i0, fj = cj - j0;
  double v = 0.0;
  for (int di = 0; di <= 1; ++di)
    for (int dj = 0; dj <= 1; ++dj) {
      const double w = (di ? fi : 1.0 - fi) * (dj ? fj : 1.0 - fj);
      if (w == 0.0) continue;
      const auto i = static_cast<Eigen::Index>(i0) + di, j = static_cast<Eigen::Index>(j0) + dj;
      if (i >= 0 && j >= 0 && i < f.rows() && j < f.cols()) v += w * f(i, j);
    }
  return v;
}

Eigen::Vector2d centred(const Eigen::MatrixXd& f, Eigen::Index i, Eigen::Index j) {
  return {static_cast<double>(j) - 0.5 * static_cast<double>(f.cols() - 1),
          static_cast<double>(i) - 0.5 * static_cast<double>(f.rows() - 1)};
}

// k(R_{-theta} u) on the kernel's own grid.
Eigen::MatrixXd rotate_kernel(const Eigen::MatrixXd& k, double theta) {
  Eigen::MatrixXd out(k.rows(), k.cols());
  const Eigen::Rotation2Dd back(-theta);
  for (Eigen::Index i = 0; i < k.rows(); ++i)
    for (Eigen::Index j = 0; j < k.cols(); ++j) out(i, j) = sample(k, back * centred(k, i, j));
  return out;
}

// sum_u image(x + u) k(u), same size, zero padding.
void correlate_into(const Eigen::MatrixXd& image, const Eigen::MatrixXd& k, Eigen::MatrixXd& out) {
  const Eigen::Index hr = k.rows() / 2, hc = k.cols() / 2;
  for (Eigen::Index i = 0; i < image.rows(); ++i)
    for (Eigen::Index j = 0; j < image.cols(); ++j) {
      double acc = 0.0;
      for (Eigen::Index p = 0; p < k.rows(); ++p) {
        const Eigen::Index ii = i + p - hr;
        if (ii < 0 || ii >= image.rows()) continue;
        for (Eigen::Index q = 0; q < k.cols(); ++q) {
          const Eigen::Index jj = j + q - hc;
          if (jj >= 0 && jj < image.cols()) acc += image(ii, jj) * k(p, q);
        }
      }
      out(i, j) += acc;
    }
}

void require_odd(const Eigen::MatrixXd& k) {
  if (k.rows() == 0 || k.cols() == 0 || k.rows() % 2 == 0 || k.cols() % 2 == 0)
    throw Error(ErrorCode::ShapeMismatch, "kernel sides must be odd");
}

}  // namespace

Eigen::MatrixXd left_regular_apply(const Se2& g, const Eigen::MatrixXd& f) {
  const Se2 inv = g.inverse();
  Eigen::MatrixXd out(f.rows(), f.cols());
  for (Eigen::Index i = 0; i < f.rows(); ++i)
    for (Eigen::Index j = 0; j < f.cols(); ++j) out(i, j) = sample(f, inv * centred(f, i, j));
  return out;
}

std::vector<Eigen::MatrixXd> lifting_correlation_se2(const Eigen::MatrixXd& image, const Eigen::MatrixXd& kernel,
                                                     int n_theta) {
  if (n_theta < 1) throw Error(ErrorCode::InvalidInput, "n_theta must be at least 1");
  require_odd(kernel);
  std::vector<Eigen::MatrixXd> out;
  for (int k = 0; k < n_theta; ++k) {
    Eigen::MatrixXd slice = Eigen::MatrixXd::Zero(image.rows(), image.cols());
    correlate_into(image, rotate_kernel(kernel, 2.0 * std::numbers::pi * k / n_theta), slice);
    out.push_back(std::move(slice));
  }
  return out;
}

std::vector<Eigen::MatrixXd> group_correlation_se2(const std::vector<Eigen::MatrixXd>& lifted,
                                                   const std::vector<Eigen::MatrixXd>& kernel) {
  const int n = static_cast<int>(lifted.size());
  if (n == 0 || kernel.size() != lifted.size())
    throw Error(ErrorCode::ShapeMismatch, "kernel and input need the same number of orientations");
  for (const auto& s : lifted)
    if (s.rows() != lifted[0].rows() || s.cols() != lifted[0].cols())
      throw Error(ErrorCode::ShapeMismatch, "orientation slices differ in size");
  for (const auto& k : kernel) {
    require_odd(k);
    if (k.rows() != kernel[0].rows() || k.cols() != kernel[0].cols())
      throw Error(ErrorCode::ShapeMismatch, "kernel slices differ in size");
  }
  std::vector<Eigen::MatrixXd> out;
  for (int k = 0; k < n; ++k) {
    const double theta = 2.0 * std::numbers::pi * k / n;
    Eigen::MatrixXd slice = Eigen::MatrixXd::Zero(lifted[0].rows(), lifted[0].cols());
    for (int kp = 0; kp < n; ++kp)
      correlate_into(lifted[static_cast<std::size_t>(kp)],
                     rotate_kernel(kernel[static_cast<std::size_t>(((kp - k) % n + n) % n)], theta), slice);
    out.push_back(std::move(slice));
  }
  return out;
}

}  // namespace se3kit

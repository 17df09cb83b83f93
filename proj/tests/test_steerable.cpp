#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "se3kit/steerable.hpp"

using namespace se3kit;

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::Vector3d random_direction(Rng& rng) {
  return Eigen::Vector3d(gaussian(rng), gaussian(rng), gaussian(rng)).normalized();
}

IrrepLayout random_layout(Rng& rng, int lmax) {
  std::vector<int> degrees;
  const int blocks = 1 + static_cast<int>(uniform(rng, 0.0, 4.0));
  for (int b = 0; b < blocks; ++b) degrees.push_back(static_cast<int>(uniform(rng, 0.0, lmax + 1.0)));
  return IrrepLayout(degrees);
}

template <typename Fn>
ErrorCode error_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::InvalidInput;
}

double max_abs(const Eigen::MatrixXd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

// Small integers keep every partial sum exact, so lattice identities can be
// compared with ==.
Eigen::MatrixXd integer_grid(int rows, int cols) {
  return (Eigen::MatrixXd::Random(rows, cols) * 9.0).array().round().matrix();
}

}  // namespace

TEST(Layout, OffsetsAndDimension) {
  const IrrepLayout layout({0, 2, 1, 1});
  EXPECT_EQ(layout.dim(), 1 + 5 + 3 + 3);
  EXPECT_EQ(layout.offset(2), 6);
  EXPECT_EQ(layout.max_degree(), 2);
  EXPECT_EQ(IrrepLayout::full(2, 2).dim(), 18);
  EXPECT_EQ(error_of([] { IrrepLayout({-1}); }), ErrorCode::DomainError);
  EXPECT_EQ(error_of([&] { SteerableVector(layout, Eigen::VectorXd::Zero(3)); }), ErrorCode::DimensionMismatch);
}

TEST(Layout, BlockDiagonalRepresentation) {
  Rng rng(61);
  const IrrepLayout layout({1, 0, 3, 2});
  const Rotationd a = random_rotation(rng), b = random_rotation(rng);
  const Eigen::MatrixXd da = layout_wigner_d(layout, a);
  EXPECT_LT((layout_wigner_d(layout, a * b) - da * layout_wigner_d(layout, b)).norm(), 1e-10);
  EXPECT_LT((da.transpose() * da - Eigen::MatrixXd::Identity(layout.dim(), layout.dim())).norm(), 1e-12);
  EXPECT_LT((da.block(0, 0, 3, 3) - a.matrix()).norm(), 1e-14);
  EXPECT_EQ(da(1, 3), 0.0);
}

TEST(PointCloud, ValidationAndAction) {
  Rng rng(62);
  const IrrepLayout layout({0, 1});
  FeaturedPointCloud cloud = FeaturedPointCloud::random(layout, 5, 1.0, rng);
  const Posed g = random_pose(rng, 1.0);
  const FeaturedPointCloud moved = cloud.transformed(g);
  EXPECT_LT((moved.points[2] - g * cloud.points[2]).norm(), 1e-14);
  EXPECT_LT((moved.features[2].data.tail(3) - g.R() * cloud.features[2].data.tail(3)).norm(), 1e-13);
  EXPECT_NEAR(moved.features[2].data(0), cloud.features[2].data(0), 1e-15);
  cloud.features.pop_back();
  EXPECT_EQ(error_of([&] { cloud.validate(); }), ErrorCode::DimensionMismatch);
}

TEST(Radial, BasisShapeAndCutoff) {
  const RadialProfile p(2.0, 1.5);
  const auto b0 = p.basis(0.0);
  EXPECT_DOUBLE_EQ(b0(0), 1.0);
  EXPECT_NEAR(b0(1), std::exp(-1.0), 1e-15);
  EXPECT_TRUE(p.basis(1e6).allFinite());
  EXPECT_EQ(p.basis(1.6).norm(), 0.0);
  EXPECT_EQ(p.value(0, 0, 0, 0.3), 0.0);
  EXPECT_EQ(error_of([] { RadialProfile(-1.0); }), ErrorCode::InvalidInput);
}

TEST(TfnKernelEval, ScalarBlock) {
  const IrrepLayout scalar({0});
  RadialProfile radial(2.0);
  Eigen::VectorXd w(8);
  w << 0.5, -1.0, 0.25, 2.0, 0.0, 1.0, -0.5, 0.3;
  radial.set_weights(0, 0, 0, w);
  const TfnKernel k(scalar, scalar, radial, TfnKernel::table_for(scalar, scalar));
  const Eigen::Vector3d x(0.3, -0.4, 1.2);
  const double expected = radial.value(0, 0, 0, x.norm()) * 0.5 / std::sqrt(kPi);
  EXPECT_NEAR(tfn_kernel_eval(k, x)(0, 0), expected, 1e-14);
  EXPECT_EQ(error_of([&] { tfn_kernel_eval(k, Eigen::Vector3d::Zero()); }), ErrorCode::ZeroDisplacement);
}

TEST(TfnKernelEval, IntertwiningPerBlock) {
  Rng rng(63);
  const IrrepLayout in({0, 1, 2, 3}), out({1, 0, 2, 3, 1});
  const TfnKernel k = TfnKernel::random(in, out, 2.0, rng);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const Rotationd r = random_rotation(rng);
    const Eigen::Vector3d x = random_direction(rng) * uniform(rng, 0.1, 2.0);
    const Eigen::MatrixXd lhs = tfn_kernel_eval(k, r * x);
    const Eigen::MatrixXd rhs = layout_wigner_d(out, r) * tfn_kernel_eval(k, x) * layout_wigner_d(in, r).transpose();
    worst = std::max(worst, max_abs(lhs - rhs));
  }
  EXPECT_LT(worst, 1e-9);
}

TEST(TfnKernelEval, BlocksWithoutRadialTermsVanish) {
  const IrrepLayout in({1, 2}), out({1});
  RadialProfile radial(2.0);
  radial.set_weights(0, 0, 2, Eigen::VectorXd::Ones(8));
  const TfnKernel k(in, out, radial, TfnKernel::table_for(in, out));
  const Eigen::MatrixXd w = tfn_kernel_eval(k, Eigen::Vector3d(0.2, 0.5, -0.3));
  EXPECT_GT(w.leftCols(3).norm(), 1e-3);
  EXPECT_EQ(w.rightCols(5).norm(), 0.0);
}

TEST(TfnConvolve, EmptyAndSinglePoint) {
  Rng rng(64);
  const IrrepLayout scalar({0});
  const TfnKernel k = TfnKernel::random(scalar, scalar, 2.0, rng);
  FeaturedPointCloud cloud;
  cloud.layout = scalar;
  EXPECT_EQ(tfn_convolve(k, cloud, Eigen::Vector3d(1, 2, 3)).data.norm(), 0.0);
  cloud.points.push_back(Eigen::Vector3d(0.1, 0.2, 0.3));
  cloud.features.push_back(SteerableVector(scalar, Eigen::VectorXd::Constant(1, 1.7)));
  const Eigen::Vector3d q(0.5, -0.2, 0.9);
  const double expected = k.radial().value(0, 0, 0, (q - cloud.points[0]).norm()) * 0.5 / std::sqrt(kPi) * 1.7;
  EXPECT_NEAR(tfn_convolve(k, cloud, q).data(0), expected, 1e-14);
  EXPECT_EQ(error_of([&] { tfn_convolve(k, cloud, cloud.points[0]); }), ErrorCode::QueryOnPoint);
}

TEST(TfnConvolve, TranslationInvarianceAndEquivariance) {
  Rng rng(65);
  const IrrepLayout in = IrrepLayout::full(2, 2), out = IrrepLayout::full(2);
  const TfnKernel k = TfnKernel::random(in, out, 2.0, rng);
  for (int trial = 0; trial < 20; ++trial) {
    const FeaturedPointCloud cloud = FeaturedPointCloud::random(in, 12, 1.0, rng);
    const Eigen::Vector3d q = random_direction(rng) * 1.3;
    const SteerableVector base = tfn_convolve(k, cloud, q);
    const Eigen::Vector3d p = random_direction(rng) * 0.7;
    const FeaturedPointCloud shifted = cloud.transformed(Posed::translation(p));
    EXPECT_LT((tfn_convolve(k, shifted, q + p).data - base.data).norm(), 1e-12 * (1 + base.data.norm()));
    const Posed g = random_pose(rng, 1.0);
    const SteerableVector moved = tfn_convolve(k, cloud.transformed(g), g * q);
    EXPECT_LT((moved.data - base.rotated(g.rotation()).data).norm(), 1e-8 * (1 + base.data.norm()));
  }
}

TEST(SelfInteractionTest, IdentityZeroAndCommutation) {
  Rng rng(66);
  const IrrepLayout in({0, 1, 1, 2}), out({1, 2, 0});
  const SteerableVector f = SteerableVector::random(in, rng);
  EXPECT_EQ((SelfInteraction::identity(in).apply(f).data - f.data).norm(), 0.0);
  const SelfInteraction zero(in, out, Eigen::MatrixXd::Zero(3, 4));
  EXPECT_EQ(zero.apply(f).data.norm(), 0.0);
  const SelfInteraction si = SelfInteraction::random(in, out, rng);
  for (int trial = 0; trial < 20; ++trial) {
    const Rotationd r = random_rotation(rng);
    EXPECT_LT((si.apply(f.rotated(r)).data - si.apply(f).rotated(r).data).norm(), 1e-10);
  }
  Eigen::MatrixXd mixing = Eigen::MatrixXd::Zero(3, 4);
  mixing(0, 0) = 1.0;
  EXPECT_EQ(error_of([&] { SelfInteraction(in, out, mixing); }), ErrorCode::DimensionMismatch);
  EXPECT_EQ(error_of([&] { si.apply(SteerableVector::random(out, rng)); }), ErrorCode::DimensionMismatch);
}

TEST(TfnLayerTest, FullLayerEquivariance) {
  Rng rng(67);
  const IrrepLayout in = IrrepLayout::full(2, 2), out = IrrepLayout::full(2, 2);
  const TfnLayer layer{TfnKernel::random(in, out, 2.0, rng), SelfInteraction::random(in, out, rng)};
  for (int trial = 0; trial < 10; ++trial) {
    const FeaturedPointCloud cloud = FeaturedPointCloud::random(in, 16, 1.0, rng);
    const Posed g = random_pose(rng, 1.0);
    const FeaturedPointCloud a = layer.apply(cloud.transformed(g)), b = layer.apply(cloud);
    for (std::size_t i = 0; i < cloud.size(); ++i)
      EXPECT_LT((a.features[i].data - b.features[i].rotated(g.rotation()).data).norm(),
                1e-8 * (1 + b.features[i].data.norm()));
  }
}

TEST(Attention, SinglePointAndUniformWeights) {
  Rng rng(68);
  const IrrepLayout layout({0, 1});
  const AttentionLayer layer(TfnKernel::random(layout, layout, 2.0, rng), SelfInteraction::random(layout, layout, rng));
  FeaturedPointCloud one = FeaturedPointCloud::random(layout, 1, 1.0, rng);
  EXPECT_LT((layer.apply(one).features[0].data - layer.self.apply(one.features[0]).data).norm(), 1e-15);

  FeaturedPointCloud same = FeaturedPointCloud::random(layout, 5, 1.0, rng);
  for (auto& f : same.features) f = same.features[0];
  const Eigen::MatrixXd a = layer.weights(same);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) EXPECT_NEAR(a(i, j), i == j ? 0.0 : 0.25, 1e-15);
}

TEST(Attention, InvariantWeightsEquivariantOutput) {
  Rng rng(69);
  const IrrepLayout in = IrrepLayout::full(2), out = IrrepLayout::full(2, 2);
  Eigen::VectorXd metric(3);
  metric << 0.5, 1.0, -0.3;
  const AttentionLayer layer(TfnKernel::random(in, out, 2.0, rng), SelfInteraction::random(in, out, rng), metric);
  for (int trial = 0; trial < 10; ++trial) {
    const FeaturedPointCloud cloud = FeaturedPointCloud::random(in, 10, 1.0, rng);
    const Posed g = random_pose(rng, 1.0);
    const FeaturedPointCloud moved = cloud.transformed(g);
    EXPECT_LT(max_abs(layer.weights(moved) - layer.weights(cloud)), 1e-9);
    const Eigen::MatrixXd a = layer.weights(cloud);
    EXPECT_LT((a.rowwise().sum() - Eigen::VectorXd::Ones(10)).norm(), 1e-12);
    const FeaturedPointCloud x = invariant_attention(moved, layer), y = invariant_attention(cloud, layer);
    for (std::size_t i = 0; i < cloud.size(); ++i)
      EXPECT_LT((x.features[i].data - y.features[i].rotated(g.rotation()).data).norm(),
                1e-8 * (1 + y.features[i].data.norm()));
  }
}

TEST(Escn, RotationToAxis) {
  Rng rng(70);
  const Eigen::Vector3d ey = Eigen::Vector3d::UnitY();
  std::vector<Eigen::Vector3d> dirs{ey, -ey, Eigen::Vector3d(1e-13, 1.0, -2e-13), Eigen::Vector3d(3e-14, -1.0, 1e-14),
                                    Eigen::Vector3d::UnitX(), Eigen::Vector3d::UnitZ()};
  for (int k = 0; k < 100; ++k) dirs.push_back(random_direction(rng) * uniform(rng, 0.01, 5.0));
  for (const auto& x : dirs) {
    const Eigen::Matrix3d r = rotation_to_y(x).matrix();
    EXPECT_LT((r * x / x.norm() - ey).norm(), 1e-12);
    EXPECT_LT((r.transpose() * r - Eigen::Matrix3d::Identity()).norm(), 1e-14);
    EXPECT_NEAR(r.determinant(), 1.0, 1e-14);
    const double angle = std::acos(std::clamp(0.5 * (r.trace() - 1.0), -1.0, 1.0));
    EXPECT_NEAR(angle, std::acos(std::clamp(x.normalized().y(), -1.0, 1.0)), 1e-7);
  }
  EXPECT_LT((rotation_to_y(ey).matrix() - Eigen::Matrix3d::Identity()).norm(), 1e-15);
  EXPECT_EQ(error_of([] { rotation_to_y(Eigen::Vector3d::Zero()); }), ErrorCode::ZeroDisplacement);
}

TEST(Escn, AlignedKernelIsSparse) {
  Rng rng(71);
  const IrrepLayout in({0, 1, 2, 3, 2}), out({3, 1, 2, 0});
  const TfnKernel k = TfnKernel::random(in, out, 2.0, rng);
  const EscnPlan plan(k);
  for (double r : {0.1, 0.7, 1.9}) {
    const Eigen::MatrixXd direct = tfn_kernel_eval(k, r * Eigen::Vector3d::UnitY());
    EXPECT_LT(max_abs(plan.aligned_kernel(r) - direct), 1e-13);
    for (int no = 0; no < out.blocks(); ++no)
      for (int ni = 0; ni < in.blocks(); ++ni) {
        const int lo = out.degree(no), li = in.degree(ni);
        for (int mo = -lo; mo <= lo; ++mo)
          for (int mi = -li; mi <= li; ++mi)
            if (std::abs(mo) != std::abs(mi)) EXPECT_EQ(direct(out.offset(no) + mo + lo, in.offset(ni) + mi + li), 0.0);
      }
  }
}

TEST(Escn, AlignedAndScalarCases) {
  Rng rng(72);
  const IrrepLayout layout = IrrepLayout::full(3);
  const TfnKernel k = TfnKernel::random(layout, layout, 2.0, rng);
  const SteerableVector f = SteerableVector::random(layout, rng);
  for (const Eigen::Vector3d x : {Eigen::Vector3d(0, 0.8, 0), Eigen::Vector3d(0, -0.8, 0)})
    EXPECT_LT(max_abs(escn_kernel_apply(k, x, f).data - direct_kernel_apply(k, x, f).data), 1e-12);

  const IrrepLayout scalar({0});
  const TfnKernel ks = TfnKernel::random(scalar, scalar, 2.0, rng);
  const SteerableVector s(scalar, Eigen::VectorXd::Constant(1, -0.4));
  const Eigen::Vector3d x(0.3, 0.2, -0.6);
  EXPECT_NEAR(escn_kernel_apply(ks, x, s).data(0), tfn_kernel_eval(ks, x)(0, 0) * -0.4, 1e-15);
  EXPECT_EQ(error_of([&] { escn_kernel_apply(k, Eigen::Vector3d::Zero(), f); }), ErrorCode::ZeroDisplacement);
}

TEST(Escn, MatchesDirectTensorProduct) {
  Rng rng(73);
  double worst = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const IrrepLayout in = random_layout(rng, 3), out = random_layout(rng, 3);
    const TfnKernel k = TfnKernel::random(in, out, 2.0, rng);
    const Eigen::Vector3d x = random_direction(rng) * uniform(rng, 0.05, 2.0);
    const SteerableVector f = SteerableVector::random(in, rng);
    worst = std::max(worst, max_abs(escn_kernel_apply(k, x, f).data - direct_kernel_apply(k, x, f).data));
  }
  EXPECT_LT(worst, 1e-8);
}

TEST(Escn, CutoffZeroesBothPaths) {
  Rng rng(74);
  const IrrepLayout layout({1, 2});
  TfnKernel base = TfnKernel::random(layout, layout, 2.0, rng);
  RadialProfile radial(2.0, 1.0);
  for (int no = 0; no < 2; ++no)
    for (int ni = 0; ni < 2; ++ni)
      for (int J = 0; J <= 4; ++J)
        if (const auto* w = base.radial().weights(no, ni, J)) radial.set_weights(no, ni, J, *w);
  const TfnKernel k(layout, layout, radial, base.cg_ptr());
  const SteerableVector f = SteerableVector::random(layout, rng);
  EXPECT_EQ(escn_kernel_apply(k, Eigen::Vector3d(0, 0, 1.2), f).data.norm(), 0.0);
  EXPECT_EQ(direct_kernel_apply(k, Eigen::Vector3d(0, 0, 1.2), f).data.norm(), 0.0);
}

TEST(Escn, WorkRatioGrowsWithDegree) {
  double previous = 0.0;
  for (int L = 2; L <= 4; ++L) {
    const EscnCost c = escn_cost(L, 7);
    EXPECT_GT(c.ratio(), previous) << "L = " << L;
    previous = c.ratio();
  }
}

TEST(Report, IdentityTfnAndMutation) {
  EquivarianceOptions o;
  o.layer = LayerKind::Identity;
  o.trials = 5;
  EXPECT_EQ(equivariance_report(o).max_residual, 0.0);

  o.layer = LayerKind::Tfn;
  o.trials = 3;
  o.points = 8;
  const EquivarianceReport good = equivariance_report(o);
  EXPECT_TRUE(good.passed);
  EXPECT_LT(good.max_residual, 1e-8);
  const EquivarianceReport again = equivariance_report(o);
  EXPECT_EQ(good.max_residual, again.max_residual);
  EXPECT_EQ(good.mean_residual, again.mean_residual);

  o.perturb_cg = true;
  const EquivarianceReport broken = equivariance_report(o);
  EXPECT_FALSE(broken.passed);
  EXPECT_GT(broken.max_residual, 1e-3);

  o.layer = LayerKind::Escn;
  o.trials = 20;
  EXPECT_GT(equivariance_report(o).max_residual, 1e-3);
  o.perturb_cg = false;
  EXPECT_LT(equivariance_report(o).max_residual, 1e-8);
  EXPECT_EQ(error_of([] { parse_layer_kind("conv"); }), ErrorCode::InvalidInput);
}

namespace {

Eigen::MatrixXd blob(int n, double cx, double cy, double s) {
  Eigen::MatrixXd f(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double x = j - 0.5 * (n - 1) - cx, y = i - 0.5 * (n - 1) - cy;
      f(i, j) = std::exp(-(x * x + y * y) / (2 * s * s));
    }
  return f;
}

std::vector<Eigen::MatrixXd> rotate_lifted(const std::vector<Eigen::MatrixXd>& f) {
  const std::size_t n = f.size();
  std::vector<Eigen::MatrixXd> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = left_regular_apply(Se2{kPi / 2}, f[(k + n - 1) % n]);
  return out;
}

}  // namespace

TEST(Se2, LeftRegularBasics) {
  const Eigen::MatrixXd f = Eigen::MatrixXd::Random(9, 9);
  EXPECT_EQ(max_abs(left_regular_apply(Se2{}, f) - f), 0.0);
  const Eigen::MatrixXd shifted = left_regular_apply(Se2{0.0, Eigen::Vector2d(2, 1)}, f);
  EXPECT_EQ(shifted(5, 6), f(4, 4));
  EXPECT_EQ(shifted(0, 0), 0.0);

  const Eigen::MatrixXd g = blob(21, 0.5, -0.5, 2.0);
  const Se2 a{kPi / 2, Eigen::Vector2d(1, 0)}, b{kPi, Eigen::Vector2d(0, -2)};
  EXPECT_LT(max_abs(left_regular_apply(a * b, g) - left_regular_apply(a, left_regular_apply(b, g))), 1e-12);

  const Se2 c{0.4, Eigen::Vector2d(0.3, -0.6)}, d{-1.1, Eigen::Vector2d(-0.5, 0.2)};
  const Eigen::MatrixXd smooth = blob(31, 0.0, 0.0, 4.0);
  EXPECT_LT(max_abs(left_regular_apply(c * d, smooth) - left_regular_apply(c, left_regular_apply(d, smooth))), 2e-2);
  EXPECT_LT(((c * c.inverse()).t).norm() + std::abs((c * c.inverse()).theta), 1e-15);
}

TEST(Se2, LiftingCorrelation) {
  const Eigen::MatrixXd kernel = integer_grid(5, 5);
  const auto constant = lifting_correlation_se2(Eigen::MatrixXd::Constant(15, 15, 2.0), kernel, 4);
  for (int k = 1; k < 4; ++k)
    EXPECT_LT(max_abs(constant[k].block(2, 2, 11, 11) - constant[0].block(2, 2, 11, 11)), 1e-12);

  const Eigen::MatrixXd image = integer_grid(11, 11);
  const auto plain = lifting_correlation_se2(image, kernel, 1);
  ASSERT_EQ(plain.size(), 1u);
  double manual = 0.0;
  for (int p = 0; p < 5; ++p)
    for (int q = 0; q < 5; ++q) manual += image(3 + p, 4 + q) * kernel(p, q);
  EXPECT_NEAR(plain[0](5, 6), manual, 1e-13);

  const auto lifted = lifting_correlation_se2(image, kernel, 4);
  const auto rotated = lifting_correlation_se2(left_regular_apply(Se2{kPi / 2}, image), kernel, 4);
  const auto expected = rotate_lifted(lifted);
  for (int k = 0; k < 4; ++k) EXPECT_EQ(max_abs(rotated[k] - expected[k]), 0.0);
  EXPECT_EQ(error_of([&] { lifting_correlation_se2(image, kernel, 0); }), ErrorCode::InvalidInput);
}

TEST(Se2, GroupCorrelation) {
  const int n = 4;
  std::vector<Eigen::MatrixXd> lifted, kernel, delta;
  for (int k = 0; k < n; ++k) {
    lifted.push_back(integer_grid(11, 11));
    kernel.push_back(integer_grid(3, 3));
    delta.push_back(Eigen::MatrixXd::Zero(3, 3));
  }
  delta[0](1, 1) = 1.0;
  const auto same = group_correlation_se2(lifted, delta);
  for (int k = 0; k < n; ++k) EXPECT_EQ(max_abs(same[k] - lifted[k]), 0.0);

  std::vector<Eigen::MatrixXd> flat(n, Eigen::MatrixXd::Constant(11, 11, 1.5));
  const auto c = group_correlation_se2(flat, kernel);
  for (int k = 1; k < n; ++k) EXPECT_LT(max_abs(c[k].block(1, 1, 9, 9) - c[0].block(1, 1, 9, 9)), 1e-12);
  EXPECT_LT(max_abs(c[0].block(1, 1, 9, 9) - Eigen::MatrixXd::Constant(9, 9, c[0](5, 5))), 1e-12);

  const auto out = group_correlation_se2(lifted, kernel);
  const auto rotated = group_correlation_se2(rotate_lifted(lifted), kernel);
  const auto expected = rotate_lifted(out);
  for (int k = 0; k < n; ++k) EXPECT_EQ(max_abs(rotated[k] - expected[k]), 0.0);

  kernel.pop_back();
  EXPECT_EQ(error_of([&] { group_correlation_se2(lifted, kernel); }), ErrorCode::ShapeMismatch);
}

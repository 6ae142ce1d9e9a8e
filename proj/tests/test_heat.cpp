#include <gtest/gtest.h>

#include <cmath>

#include "nlc/heat.hpp"
#include "nlc/solver.hpp"
#include "test_support.hpp"

using namespace nlc;
using nlc::testing::max_abs_diff;
using nlc::testing::random_field;

namespace {

const Grid kGrid{};

const DyadicPartition& partition() {
  static const DyadicPartition P = build_partition(kGrid);
  return P;
}

double step_ref(double s) {
  if (s <= 0) return 1;
  if (s >= 1) return 0;
  const double a = std::exp(-1 / (1 - s)), b = std::exp(-1 / s);
  return a / (a + b);
}

// Wide cutoff evaluated from its definition: rises on [3/8, 3/4], falls on [8/3, 10/3].
double phi_wide_ref(double r) {
  return (1 - step_ref((r - 0.375) / 0.375)) * step_ref((r - 8.0 / 3.0) / (2.0 / 3.0));
}

}  // namespace

TEST(HeatSemigroup, ZeroTimeIsIdentity) {
  const auto f = random_field(kGrid, 2, 1, 20);
  EXPECT_EQ(max_abs_diff(heat_semigroup(f, 0.0), f), 0.0);
  EXPECT_THROW(heat_semigroup(f, -1.0), std::invalid_argument);
}

TEST(HeatSemigroup, EigenmodeDecay) {
  SpectralField f(kGrid, 1);
  add_cosine_mode(f, 0, {16, 0, 0}, 2.0);  // |xi| = 1
  const auto h = heat_semigroup(f, 1.0);
  EXPECT_NEAR(h.component(0)[flat_index(kGrid, {16, 0, 0})].real(), std::exp(-1.0), 1e-15);
}

TEST(HeatSemigroup, SemigroupLaw) {
  const auto f = random_field(kGrid, 3, 2, 31);
  const auto two = heat_semigroup(heat_semigroup(f, 0.3), 0.7);
  const auto one = heat_semigroup(f, 1.0);
  EXPECT_LT(max_abs_diff(two, one), 1e-12 * f.max_coefficient());
}

TEST(HeatSemigroup, MaximumPrinciple) {
  for (unsigned s = 0; s < 10; ++s) {
    SpectralField f = random_field(kGrid, 1, 40 + s, 31);
    apply_dealias(f);
    const double m0 = to_physical(f).max_abs();
    for (double t : {0.05, 0.5, 4.0, 32.0})
      EXPECT_LE(to_physical(heat_semigroup(f, t)).max_abs(), m0 + 1e-10);
  }
}

TEST(Kernel, PlainKernelIsMeanFree) {
  const auto& P = partition();
  const auto g = kernel_samples({KernelVariant::g2, -2, 3.0}, P);
  cplx sum{0, 0};
  double mx = 0.0;
  for (const auto& v : g) {
    sum += v;
    mx = std::max(mx, std::abs(v));
  }
  EXPECT_LT(std::abs(sum) * kGrid.cell_volume(), 1e-12 * mx);
}

TEST(Kernel, RejectsEmptyShellAndBadTime) {
  const auto& P = partition();
  EXPECT_THROW(kernel_samples({KernelVariant::g2, P.j_max + 1, 1.0}, P), std::invalid_argument);
  EXPECT_THROW(kernel_samples({KernelVariant::g2, 0, 0.0}, P), std::invalid_argument);
}

TEST(Kernel, ProjectedGradientKernelMatchesBlockOfHeatFlow) {
  // sum_{j,k} (g^{ijk} * F_jk)(x) = -i (2 pi)^n [Delta_q e^{t Lap} P div F]_i(x).
  const auto& P = partition();
  const int q = -2;
  const double t = 2.0;
  const int n = 2;
  SpectralField F(kGrid, n * n);
  const double A[4] = {0.3, -0.7, 1.1, 0.4};
  for (int c = 0; c < 4; ++c) add_cosine_mode(F, c, {5, 3, 0}, A[c], 0.2 * c);
  SpectralField divF(kGrid, n);
  for (int i = 0; i < n; ++i) {
    const auto row = divergence(slice_components(F, i * n, n));
    std::copy(row.component(0).begin(), row.component(0).end(), divF.component(i).begin());
  }
  const PhysicalField expect = to_physical(block(heat_semigroup(leray_project(divF), t), P, q));
  const PhysicalField Fp = to_physical(F);
  const double scale = std::pow(kTwoPi, n);
  for (int i = 0; i < n; ++i) {
    std::vector<std::vector<cplx>> kernels;
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        KernelSpec s{KernelVariant::g, q, t, i, j, k};
        kernels.push_back(kernel_samples(s, P));
      }
    for (std::size_t x : {std::size_t{0}, std::size_t{77}, std::size_t{1234}, std::size_t{4000}}) {
      cplx acc{0, 0};
      for (int jk = 0; jk < 4; ++jk) {
        auto Fc = Fp.component(jk);
        for (std::size_t y = 0; y < kGrid.size(); ++y) {
          // index of x - y on the torus
          std::array<int, 3> ix{}, iy{};
          ix[0] = static_cast<int>(x / 64), ix[1] = static_cast<int>(x % 64);
          iy[0] = static_cast<int>(y / 64), iy[1] = static_cast<int>(y % 64);
          const std::size_t d = flat_index(kGrid, {ix[0] - iy[0], ix[1] - iy[1], 0});
          acc += kernels[jk][d] * Fc[y];
        }
      }
      acc *= kGrid.cell_volume();
      EXPECT_NEAR(acc.real(), 0.0, 1e-12);
      EXPECT_NEAR(acc.imag(), -scale * expect.component(i)[x], 1e-10);
    }
  }
}

TEST(Kernel, WeightedKernelOrderZeroIsWideBandHeatKernel) {
  const auto& P = partition();
  const int q = -1;
  const double t = 0.7;
  const auto g = kernel_samples({KernelVariant::g3, q, t}, P);
  const auto lat = lattice(kGrid);
  const double dxi = std::pow(kGrid.fundamental(), 2);
  for (std::size_t x : {std::size_t{0}, std::size_t{5}, std::size_t{321}, std::size_t{2080}}) {
    cplx acc{0, 0};
    const double x0 = grid_coordinate(kGrid, x, 0), x1 = grid_coordinate(kGrid, x, 1);
    for (std::size_t p = 0; p < kGrid.size(); ++p) {
      const double w = phi_wide_ref(std::ldexp(lat->norm[p], -q)) * std::exp(-t * lat->norm2[p]);
      acc += w * std::polar(1.0, lat->xi[0][p] * x0 + lat->xi[1][p] * x1);
    }
    EXPECT_NEAR(std::abs(g[x] - acc * dxi), 0.0, 1e-13);
  }
}

TEST(Kernel, SelfSimilarUnderDyadicScaling) {
  // g2(q+1, t/4)(x) = 2^n g2(q, t)(2x) up to periodization of the kernel tails,
  // so the comparison runs on a wide box where the coarse kernel is far from its images.
  const Grid wide = Grid::make(2, 256, kTwoPi * 64);
  const auto P = build_partition(wide);
  for (int q : {-2}) {
    const double t = std::ldexp(1.0, -2 * q);
    const auto a = kernel_samples({KernelVariant::g2, q, t}, P);
    const auto b = kernel_samples({KernelVariant::g2, q + 1, t / 4}, P);
    double mx = 0.0, err = 0.0;
    for (int i0 = -16; i0 <= 16; ++i0)
      for (int i1 = -16; i1 <= 16; ++i1) {
        const auto va = a[flat_index(wide, {2 * i0, 2 * i1, 0})];
        const auto vb = b[flat_index(wide, {i0, i1, 0})];
        mx = std::max(mx, std::abs(vb));
        err = std::max(err, std::abs(vb - 4.0 * va));
      }
    EXPECT_LT(err, 1e-5 * mx) << "q = " << q << " err " << err / mx;
  }
}

TEST(KernelBound, AllVariantsStableOnFineGrid) {
  const Grid fine = Grid::make(2, 256, kTwoPi * 16);
  const auto P = build_partition(fine);
  ASSERT_GE(resolvable_kernel_shells(P).size(), 3u);
  std::vector<KernelSpec> specs{{KernelVariant::g, 0, 1, 0, 1, 0}, {KernelVariant::g1, 0, 1, 0, 0},
                                {KernelVariant::g2}, {KernelVariant::g3, 0, 1, 0, 0, 0, {0, 0, 0}},
                                {KernelVariant::g3, 0, 1, 0, 0, 0, {1, 0, 0}},
                                {KernelVariant::g3, 0, 1, 0, 0, 0, {1, 1, 0}}};
  for (const auto& s : specs) {
    const auto rep = verify_kernel_bound(s, P);
    EXPECT_TRUE(rep.pass) << to_string(s.variant) << " m=" << s.order() << " stability " << rep.stability;
    EXPECT_GT(rep.fitted_c, 0.0);
  }
}

TEST(KernelBound, DecayRateScalesWithFourToTheQ) {
  const Grid fine = Grid::make(2, 256, kTwoPi * 16);
  const auto P = build_partition(fine);
  const auto rep = verify_kernel_bound({KernelVariant::g2}, P);
  ASSERT_GE(rep.c_per_q.size(), 3u);
  const auto [lo, hi] = std::minmax_element(rep.c_per_q.begin(), rep.c_per_q.end());
  EXPECT_LT(*hi / *lo, 1.1);
}

TEST(BlockDecay, RateProportionalToFourToTheJ) {
  const auto& P = partition();
  const auto f = random_field(kGrid, 1, 77, 31);
  std::vector<double> cs;
  for (int j = P.j_min + 1; j <= P.j_max - 1; ++j) cs.push_back(fit_block_heat_decay(f, P, j).c);
  const auto [lo, hi] = std::minmax_element(cs.begin(), cs.end());
  EXPECT_LT(*hi / *lo, 1.25);
}

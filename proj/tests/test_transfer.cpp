#include <gtest/gtest.h>

#include <random>

#include "support.hpp"
#include "xifrac/dofs.hpp"
#include "xifrac/fem.hpp"

using namespace xifrac;
using namespace xifrac::testing;

namespace {

double max_diff(const ScalarField& a, const ScalarField& b) { return (a.values() - b.values()).cwiseAbs().maxCoeff(); }

ScalarField random_field(const DofMap& dofs, std::mt19937_64& rng) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(dofs.n_dofs()));
  for (auto& xi : x) xi = uniform(rng, -1.0, 1.0);
  dofs.distribute(x);
  return ScalarField(dofs.mesh_id(), x);
}

}  // namespace

TEST(Transfer, ConstantSurvivesRefineAndCoarsen) {
  const Mesh m = Mesh::uniform(2, 2, 4);
  const DofMap d(m);
  const std::vector<std::size_t> flags{1, 6, 9};
  const Mesh r = refine(m, flags);
  const DofMap dr(r);
  const ScalarField one = ScalarField::constant(d, 1.0);
  const ScalarField fr = transfer(d, dr, one);
  EXPECT_LT((fr.values().array() - 1.0).abs().maxCoeff(), 1e-14);

  std::vector<std::size_t> kids;
  for (int k = 0; k < 4; ++k) kids.push_back(*r.find_cell(m.cell(6).child(k)));
  const Mesh c = coarsen(r, kids);
  const DofMap dc(c);
  const ScalarField fc = transfer(dr, dc, fr);
  EXPECT_LT((fc.values().array() - 1.0).abs().maxCoeff(), 1e-14);
}

TEST(Transfer, LinearExactUnderRefinement) {
  const auto f = [](Point p) { return 0.3 - 1.7 * p.x + 2.2 * p.y; };
  Mesh m = Mesh::uniform(2, 2, 6);
  std::mt19937_64 rng(3);
  for (int pass = 0; pass < 4; ++pass) {
    std::vector<std::size_t> flags;
    for (std::size_t c = 0; c < m.n_cells(); ++c) {
      if (uniform(rng) < 0.2) flags.push_back(c);
    }
    const Mesh r = refine(m, flags);
    const DofMap d(m), dr(r);
    const ScalarField moved = transfer(d, dr, ScalarField::interpolate(d, f));
    EXPECT_LT(max_diff(moved, ScalarField::interpolate(dr, f)), 1e-12);
    m = r;
  }
}

TEST(Transfer, CoarseningMatchesDenseProjection) {
  std::mt19937_64 rng(11);
  const Mesh m = Mesh::uniform(2, 2, 4);
  const CellKey parent = m.cell(m.locate({0.3, 0.6}));
  const std::vector<std::size_t> flags{*m.find_cell(parent)};
  const Mesh fine = refine(m, flags);
  const DofMap df(fine);
  const ScalarField f = random_field(df, rng);

  std::vector<std::size_t> kids;
  for (int k = 0; k < 4; ++k) kids.push_back(*fine.find_cell(parent.child(k)));
  const Mesh coarse = coarsen(fine, kids);
  ASSERT_EQ(coarse.cells(), m.cells());
  const DofMap dc(coarse);
  const ScalarField g = transfer(df, dc, f);

  // dense oracle: 4x4 mass solve on the parent against the fine field
  const std::size_t pc = *coarse.find_cell(parent);
  const Point ll = coarse.lower_left(pc);
  const double h = coarse.cell_size(pc);
  // the fine field kinks along the child boundaries, so integrate quadrant by quadrant
  const QuadratureRule rule = QuadratureRule::gauss(4);
  Eigen::Matrix4d mass = Eigen::Matrix4d::Zero();
  Eigen::Vector4d rhs = Eigen::Vector4d::Zero();
  for (double qs : {0.0, 0.5}) {
    for (double qt : {0.0, 0.5}) {
      for (std::size_t q = 0; q < rule.size(); ++q) {
        const double s = qs + 0.5 * rule.points[q][0], t = qt + 0.5 * rule.points[q][1];
        const double w = 0.25 * rule.weights[q];
        const double fx = evaluate(df, f, {ll.x + s * h, ll.y + t * h});
        for (int i = 0; i < 4; ++i) {
          rhs[i] += w * fx * q1(i, s, t);
          for (int j = 0; j < 4; ++j) mass(i, j) += w * q1(i, s, t) * q1(j, s, t);
        }
      }
    }
  }
  const Eigen::Vector4d coeff = mass.ldlt().solve(rhs);
  const auto& cv = dc.cell_dofs(pc);
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(g[cv[k]], coeff[k], 1e-12);
}

TEST(Transfer, RefineThenCoarsenIsIdentityOnCoarseSpace) {
  std::mt19937_64 rng(5);
  const Mesh m = Mesh::uniform(3, 3, 5);
  const DofMap d(m);
  const ScalarField f = random_field(d, rng);
  const std::vector<std::size_t> flags{10, 11, 30};
  const Mesh r = refine(m, flags);
  const DofMap dr(r);
  const ScalarField up = transfer(d, dr, f);
  std::vector<std::size_t> kids;
  for (std::size_t c : flags) {
    for (int k = 0; k < 4; ++k) kids.push_back(*r.find_cell(m.cell(c).child(k)));
  }
  const Mesh back = coarsen(r, kids);
  ASSERT_EQ(back.cells(), m.cells());
  const DofMap db(back);
  EXPECT_LT(max_diff(transfer(dr, db, up), f), 1e-12);
}

TEST(Transfer, WrongMeshIsFatal) {
  const Mesh a = Mesh::uniform(2), b = Mesh::uniform(2);
  const DofMap da(a), db(b);
  const ScalarField fb = ScalarField::constant(db, 1.0);
  EXPECT_THROW(transfer(da, db, fb), std::invalid_argument);
  EXPECT_THROW(transfer_field(a, b, fb), std::invalid_argument);
}

TEST(Interpolation, HangingNodesReproduceLinearsAcrossInterface) {
  const auto f = [](Point p) { return 1.0 + 4.0 * p.x - 2.5 * p.y; };
  const Mesh m = Mesh::uniform(2, 2, 4);
  const std::vector<std::size_t> flags{m.locate({0.6, 0.4})};
  const Mesh r = refine(m, flags);
  const DofMap d(r);
  ASSERT_FALSE(r.constraints().empty());
  const ScalarField fi = ScalarField::interpolate(d, f);
  std::mt19937_64 rng(9);
  for (int i = 0; i < 200; ++i) {
    const Point p{uniform(rng), uniform(rng)};
    EXPECT_NEAR(evaluate(d, fi, p), f(p), 1e-12);
  }
  for (const auto& hc : r.constraints()) EXPECT_NEAR(fi[hc.node], f(r.vertex(hc.node)), 1e-12);
}

TEST(Slit, DuplicatesDofsAboveTip) {
  const Mesh m = Mesh::uniform(2);
  const DofMap plain(m);
  const DofMap cut(m, Slit{0.5, 0.5});
  // vertices (0.5, 0.75) and (0.5, 1) get a copy; the tip does not
  EXPECT_EQ(cut.n_dofs(), plain.n_dofs() + 2);
  int partnered = 0;
  for (Index d = 0; d < static_cast<Index>(cut.n_dofs()); ++d) {
    if (auto p = cut.slit_partner(d)) {
      ++partnered;
      EXPECT_EQ(cut.vertex_of(*p), cut.vertex_of(d));
      EXPECT_GT(cut.support_point(d).y, 0.5);
    }
  }
  EXPECT_EQ(partnered, 4);
  // cells on either side of the cut share no dof above the tip
  const std::size_t left = m.locate({0.4, 0.9}), right = m.locate({0.6, 0.9});
  for (Index a : cut.cell_dofs(left))
    for (Index b : cut.cell_dofs(right)) EXPECT_NE(a, b);
}

TEST(Slit, StraddlingCellRejected) {
  const Mesh m = Mesh::uniform(1);
  EXPECT_THROW(DofMap(m, Slit{0.25, 0.5}), std::invalid_argument);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "e2plan/symmetry/field_type.hpp"
#include "e2plan/symmetry/group.hpp"
#include "e2plan/symmetry/intertwiner.hpp"
#include "e2plan/symmetry/representation.hpp"

using namespace e2plan;
using namespace e2plan::sym;

namespace {

// Independent intertwiner oracle: stack the linear constraints
//   (rho_in(g)^T (x) I - I (x) rho_out(g)) vec(W) = 0
// over all elements and null-space the stack (spectrally, via its normal
// matrix: null singular vectors = eigenvectors of A^T A below threshold).
struct NullSpace {
  int rank = 0;
  Mat basis;  // columns are vec(W) null vectors
};

NullSpace oracle_null_space(const Representation& in, const Representation& out) {
  const Group& g = in.group();
  const int di = in.dim();
  const int dop = out.dim();
  Mat stacked(g.order() * di * dop, di * dop);
  for (int e = 0; e < g.order(); ++e) {
    Mat block = Mat::Zero(di * dop, di * dop);
    const Mat& ri = in.matrix(e);
    const Mat& ro = out.matrix(e);
    for (int c = 0; c < di; ++c) {
      for (int cc = 0; cc < di; ++cc) {
        block.block(c * dop, cc * dop, dop, dop) =
            ri(cc, c) * Mat::Identity(dop, dop) - (c == cc ? 1.0 : 0.0) * ro;
      }
    }
    stacked.middleRows(e * di * dop, di * dop) = block;
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(stacked.transpose() * stacked);
  NullSpace ns;
  int null_count = 0;
  while (null_count < es.eigenvalues().size() && es.eigenvalues()(null_count) < 1e-10)
    ++null_count;
  ns.rank = null_count;
  ns.basis = es.eigenvectors().leftCols(null_count);
  return ns;
}

Vec vec_of(const Mat& m) {
  Vec v(m.size());
  for (int c = 0; c < m.cols(); ++c) v.segment(c * m.rows(), m.rows()) = m.col(c);
  return v;
}

void check_against_oracle(const Representation& in, const Representation& out) {
  const NullSpace ns = oracle_null_space(in, out);
  const IntertwinerBasis solved = solve_intertwiner_basis(in, out);
  CHECK(solved.rank == ns.rank);
  // Every solver basis matrix must lie in the oracle null space.
  for (const Mat& b : solved.basis) {
    const Vec v = vec_of(b);
    const Vec residual = v - ns.basis * (ns.basis.transpose() * v);
    CHECK(residual.norm() < 1e-8);
  }
  CHECK(check_intertwiner(solved, in, out) <= 1e-10);
}

Mat rotation90() {
  Mat r(2, 2);
  r << 0, -1, 1, 0;
  return r;
}

}  // namespace

TEST_SUITE("group") {
  TEST_CASE("cyclic group structure") {
    const Group c4 = make_group(GroupKind::cyclic, 4);
    CHECK(c4.order() == 4);

    GroupElement r = c4.element(1);
    GroupElement acc = c4.identity();
    for (int i = 0; i < 4; ++i) acc = c4.compose(acc, r);
    CHECK(acc == c4.identity());
  }

  TEST_CASE("dihedral element counts") {
    CHECK(make_group(GroupKind::dihedral, 4).order() == 8);
    CHECK(make_group(GroupKind::dihedral, 8).order() == 16);
  }

  TEST_CASE("invalid order rejected") {
    CHECK_THROWS_AS(make_group(GroupKind::cyclic, 0), ConfigError);
    CHECK_THROWS_AS(make_group(GroupKind::dihedral, -2), ConfigError);
  }

  TEST_CASE("closure, inverses, unique identity") {
    for (const Group& g : {make_group(GroupKind::cyclic, 6), make_group(GroupKind::dihedral, 6)}) {
      int identity_count = 0;
      for (int a = 0; a < g.order(); ++a) {
        if (g.element(a) == g.identity()) ++identity_count;
        CHECK(g.compose_index(a, g.inverse_index(a)) == g.index(g.identity()));
        CHECK(g.compose_index(g.inverse_index(a), a) == g.index(g.identity()));
        for (int b = 0; b < g.order(); ++b) {
          const int ab = g.compose_index(a, b);
          CHECK(ab >= 0);
          CHECK(ab < g.order());
        }
      }
      CHECK(identity_count == 1);
    }
  }

  TEST_CASE("dihedral relation f r f = r^-1") {
    const Group d8 = make_group(GroupKind::dihedral, 8);
    const GroupElement f = d8.element(d8.index({0, true}));
    const GroupElement r = d8.element(1);
    const GroupElement lhs = d8.compose(d8.compose(f, r), f);
    CHECK(lhs == d8.inverse(r));
  }

  TEST_CASE("associativity") {
    const Group d4 = make_group(GroupKind::dihedral, 4);
    for (int a = 0; a < d4.order(); ++a)
      for (int b = 0; b < d4.order(); ++b)
        for (int c = 0; c < d4.order(); ++c)
          CHECK(d4.compose_index(d4.compose_index(a, b), c) ==
                d4.compose_index(a, d4.compose_index(b, c)));
  }

  TEST_CASE("name parsing") {
    CHECK(parse_group("C4") == make_group(GroupKind::cyclic, 4));
    CHECK(parse_group("D8") == make_group(GroupKind::dihedral, 8));
    CHECK(parse_group("C16").order() == 16);
    CHECK_THROWS_AS(parse_group("E4"), ConfigError);
    CHECK_THROWS_AS(parse_group("C"), ConfigError);
    CHECK_THROWS_AS(parse_group("C4x"), ConfigError);
    CHECK(parse_group(make_group(GroupKind::dihedral, 3).name()) ==
          make_group(GroupKind::dihedral, 3));
  }

  TEST_CASE("canonical embedding C_K into larger groups") {
    const Group c4 = make_group(GroupKind::cyclic, 4);
    CHECK(canonical_embedding(c4, make_group(GroupKind::cyclic, 8)) ==
          std::vector<int>{0, 2, 4, 6});
    CHECK(canonical_embedding(c4, make_group(GroupKind::dihedral, 8)) ==
          std::vector<int>{0, 2, 4, 6});
    CHECK(canonical_embedding(c4, c4) == std::vector<int>{0, 1, 2, 3});
    CHECK_THROWS_AS(canonical_embedding(c4, make_group(GroupKind::cyclic, 6)), ConfigError);
    CHECK_THROWS_AS(canonical_embedding(make_group(GroupKind::dihedral, 4),
                                        make_group(GroupKind::dihedral, 8)),
                    ConfigError);
  }
}

TEST_SUITE("representation") {
  TEST_CASE("standard rep matrices") {
    const Group c4 = make_group(GroupKind::cyclic, 4);
    const Representation std4 = rep_standard(c4);
    CHECK((std4.matrix(1) - rotation90()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((std4.matrix(0) - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);

    const Group d4 = make_group(GroupKind::dihedral, 4);
    const Representation stdd = rep_standard(d4);
    Mat mirror(2, 2);
    mirror << 1, 0, 0, -1;
    CHECK((stdd.matrix(d4.index({0, true})) - mirror).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("regular rep is the left-translation permutation") {
    const Group c4 = make_group(GroupKind::cyclic, 4);
    const Representation reg = rep_regular(c4);
    for (int h = 0; h < 4; ++h) {
      Vec e = Vec::Zero(4);
      e(h) = 1.0;
      const Vec image = reg.matrix(1) * e;
      CHECK(image(c4.compose_index(1, h)) == 1.0);
      CHECK(image.sum() == 1.0);
    }

    // Image tuple (I1, I2, I3, I4) maps to (I4, I1, I2, I3) under the generator.
    Vec images(4);
    images << 1, 2, 3, 4;
    const Vec rotated = reg.matrix(1) * images;
    Vec expected(4);
    expected << 4, 1, 2, 3;
    CHECK((rotated - expected).cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("homomorphism property") {
    for (int n : {1, 2, 3, 4, 8, 16}) {
      CHECK(check_representation(rep_standard(make_group(GroupKind::cyclic, n))) <= 1e-10);
      CHECK(check_representation(rep_regular(make_group(GroupKind::cyclic, n))) <= 1e-10);
    }
    for (int n : {1, 2, 4, 8}) {
      CHECK(check_representation(rep_standard(make_group(GroupKind::dihedral, n))) <= 1e-10);
      CHECK(check_representation(rep_regular(make_group(GroupKind::dihedral, n))) <= 1e-10);
    }
  }

  TEST_CASE("corrupted matrix detected") {
    const Group c4 = make_group(GroupKind::cyclic, 4);
    const Representation reg = rep_regular(c4);
    std::vector<Mat> mats;
    for (int i = 0; i < 4; ++i) mats.push_back(reg.matrix(i));
    mats[2](0, 0) += 0.25;
    const Representation bad(c4, 4, mats, RepTag::custom);
    CHECK(check_representation(bad) > 0.0);
  }

  TEST_CASE("direct sum") {
    const Group d4 = make_group(GroupKind::dihedral, 4);
    const Representation sum =
        rep_direct_sum({rep_trivial(d4), rep_standard(d4), rep_regular(d4)});
    CHECK(sum.dim() == 1 + 2 + 8);
    CHECK(check_representation(sum) <= 1e-10);
    CHECK_THROWS_AS(
        rep_direct_sum({rep_trivial(d4), rep_trivial(make_group(GroupKind::cyclic, 4))}),
        ConfigError);
  }

  TEST_CASE("restriction of C8 regular rep to C4 is shift-by-2") {
    const Group c8 = make_group(GroupKind::cyclic, 8);
    const Group c4 = make_group(GroupKind::cyclic, 4);
    const Representation reg8 = rep_regular(c8);
    const Representation res = rep_restrict(reg8, c4, canonical_embedding(c4, c8));

    CHECK(res.dim() == 8);
    Mat shift2 = Mat::Zero(8, 8);
    for (int h = 0; h < 8; ++h) shift2((h + 2) % 8, h) = 1.0;
    CHECK((res.matrix(1) - shift2).cwiseAbs().maxCoeff() == 0.0);
    CHECK(check_representation(res) <= 1e-10);
  }

  TEST_CASE("restriction to the trivial subgroup is the identity") {
    const Group d8 = make_group(GroupKind::dihedral, 8);
    const Group e = make_group(GroupKind::cyclic, 1);
    const Representation res = rep_restrict(rep_standard(d8), e, {0});
    CHECK(res.dim() == 2);
    CHECK((res.matrix(0) - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("restriction keeps the dimension") {
    const Group d8 = make_group(GroupKind::dihedral, 8);
    const Group c4 = make_group(GroupKind::cyclic, 4);
    const Representation res =
        rep_restrict(rep_regular(d8), c4, canonical_embedding(c4, d8));
    CHECK(res.dim() == 16);
    CHECK(check_representation(res) <= 1e-10);
  }

  TEST_CASE("invalid embeddings rejected") {
    const Group c4 = make_group(GroupKind::cyclic, 4);
    const Group c2 = make_group(GroupKind::cyclic, 2);
    const Representation reg = rep_regular(c4);
    CHECK_THROWS_AS(rep_restrict(reg, c2, {0, 0}), ConfigError);     // not injective
    CHECK_THROWS_AS(rep_restrict(reg, c2, {0, 1}), ConfigError);     // not a homomorphism
    CHECK_THROWS_AS(rep_restrict(reg, c2, {0}), ConfigError);        // wrong length
    CHECK_THROWS_AS(rep_restrict(reg, c2, {0, 9}), ConfigError);     // out of range
    CHECK_NOTHROW(rep_restrict(reg, c2, {0, 2}));
  }

  TEST_CASE("json round trip") {
    const Group d8 = make_group(GroupKind::dihedral, 8);
    const Group c4 = make_group(GroupKind::cyclic, 4);
    std::vector<int> identity_embedding(d8.order());
    for (int i = 0; i < d8.order(); ++i) identity_embedding[i] = i;
    const Representation original = rep_direct_sum(
        {rep_trivial(d8), rep_standard(d8),
         rep_direct_sum({rep_regular(d8)}),
         rep_restrict(rep_regular(d8), d8, identity_embedding)});
    const Representation round = rep_from_json(rep_to_json(original));
    CHECK(round.dim() == original.dim());
    for (int i = 0; i < d8.order(); ++i) {
      CHECK((round.matrix(i) - original.matrix(i)).cwiseAbs().maxCoeff() == 0.0);
    }

    const Representation res =
        rep_restrict(rep_regular(d8), c4, canonical_embedding(c4, d8));
    const Representation res_round = rep_from_json(rep_to_json(res));
    CHECK(res_round.group() == c4);
    for (int i = 0; i < c4.order(); ++i) {
      CHECK((res_round.matrix(i) - res.matrix(i)).cwiseAbs().maxCoeff() == 0.0);
    }

    CHECK_THROWS_AS(rep_from_json("{"), ConfigError);
    CHECK_THROWS_AS(rep_from_json(R"({"type":"spin","group":"C4"})"), ConfigError);
  }
}

TEST_SUITE("field_type") {
  TEST_CASE("block diagonal action") {
    const Group c4 = make_group(GroupKind::cyclic, 4);
    const FieldType ft({rep_trivial(c4), rep_standard(c4), rep_regular(c4)});
    CHECK(ft.total_dim() == 7);

    Vec v(7);
    v << 5, 1, 0, 10, 20, 30, 40;
    const Vec out = field_transform(ft, 1, v);
    CHECK(out(0) == 5.0);                                   // trivial part untouched
    CHECK((out.segment(1, 2) - rotation90() * v.segment(1, 2)).norm() < 1e-12);
    Vec reg_expected(4);
    reg_expected << 40, 10, 20, 30;
    CHECK((out.tail(4) - reg_expected).norm() == 0.0);
  }

  TEST_CASE("inverse transform restores the vector") {
    const Group d8 = make_group(GroupKind::dihedral, 8);
    const FieldType ft({rep_standard(d8), rep_regular(d8), rep_trivial(d8)});
    Vec v = Vec::LinSpaced(ft.total_dim(), -1.0, 2.5);
    for (int e = 0; e < d8.order(); ++e) {
      const Vec back = field_transform(ft, d8.inverse_index(e), field_transform(ft, e, v));
      CHECK((back - v).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }

  TEST_CASE("shape and construction errors") {
    const Group c4 = make_group(GroupKind::cyclic, 4);
    const FieldType ft({rep_standard(c4)});
    CHECK_THROWS_AS(field_transform(ft, 1, Vec::Zero(3)), ShapeError);
    CHECK_THROWS_AS(FieldType(std::vector<Representation>{}), ConfigError);
    CHECK_THROWS_AS(
        FieldType({rep_trivial(c4), rep_trivial(make_group(GroupKind::cyclic, 2))}),
        ConfigError);
  }

  TEST_CASE("matrix cache matches field_transform") {
    const Group d4 = make_group(GroupKind::dihedral, 4);
    const FieldType ft = field_type_copies(rep_regular(d4), 2);
    Vec v = Vec::LinSpaced(16, 0.0, 15.0);
    for (int e = 0; e < d4.order(); ++e) {
      CHECK((ft.matrix(e) * v - field_transform(ft, e, v)).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }

  TEST_CASE("json round trip") {
    const Group d8 = make_group(GroupKind::dihedral, 8);
    const Group c4 = make_group(GroupKind::cyclic, 4);
    const FieldType ft({rep_standard(d8), rep_regular(d8), rep_trivial(d8)});
    const FieldType round = field_type_from_json(field_type_to_json(ft));
    CHECK(round.total_dim() == ft.total_dim());
    CHECK(round.parts().size() == ft.parts().size());
    for (int e = 0; e < d8.order(); ++e) {
      CHECK((round.matrix(e) - ft.matrix(e)).cwiseAbs().maxCoeff() == 0.0);
    }

    const FieldType lifted =
        field_type_copies(rep_restrict(rep_regular(d8), c4, canonical_embedding(c4, d8)), 3);
    const FieldType lifted_round = field_type_from_json(field_type_to_json(lifted));
    CHECK(lifted_round.group() == c4);
    CHECK(lifted_round.total_dim() == 48);
  }
}

TEST_SUITE("intertwiner") {
  TEST_CASE("frozen ranks") {
    const Group c4 = make_group(GroupKind::cyclic, 4);
    const Group d4 = make_group(GroupKind::dihedral, 4);
    CHECK(solve_intertwiner_basis(rep_trivial(c4), rep_trivial(c4)).rank == 1);
    CHECK(solve_intertwiner_basis(rep_regular(c4), rep_regular(c4)).rank == 4);
    CHECK(solve_intertwiner_basis(rep_standard(d4), rep_standard(d4)).rank == 1);
    CHECK(solve_intertwiner_basis(rep_standard(c4), rep_standard(c4)).rank == 2);
  }

  TEST_CASE("solver agrees with the stacked-constraint oracle") {
    const Group c4 = make_group(GroupKind::cyclic, 4);
    const Group d4 = make_group(GroupKind::dihedral, 4);
    const Group d8 = make_group(GroupKind::dihedral, 8);
    const Representation res_reg =
        rep_restrict(rep_regular(d8), c4, canonical_embedding(c4, d8));

    check_against_oracle(rep_trivial(c4), rep_regular(c4));
    check_against_oracle(rep_regular(c4), rep_trivial(c4));
    check_against_oracle(rep_standard(c4), rep_regular(c4));
    check_against_oracle(rep_regular(c4), rep_standard(c4));
    check_against_oracle(rep_standard(d4), rep_regular(d4));
    check_against_oracle(rep_regular(d4), rep_regular(d4));
    check_against_oracle(rep_trivial(d4), rep_standard(d4));
    check_against_oracle(rep_direct_sum({rep_trivial(c4), rep_standard(c4)}),
                         rep_regular(c4));
    check_against_oracle(rep_regular(c4), res_reg);
    check_against_oracle(res_reg, rep_regular(c4));
  }

  TEST_CASE("basis is orthonormal") {
    const Group d4 = make_group(GroupKind::dihedral, 4);
    const IntertwinerBasis b = solve_intertwiner_basis(rep_regular(d4), rep_regular(d4));
    CHECK(b.rank == 8);
    for (int i = 0; i < b.rank; ++i) {
      for (int j = 0; j < b.rank; ++j) {
        const double dot = (b.basis[i].array() * b.basis[j].array()).sum();
        CHECK(std::abs(dot - (i == j ? 1.0 : 0.0)) < 1e-10);
      }
    }
  }

  TEST_CASE("group mismatch rejected") {
    CHECK_THROWS_AS(solve_intertwiner_basis(rep_trivial(make_group(GroupKind::cyclic, 4)),
                                            rep_trivial(make_group(GroupKind::cyclic, 8))),
                    ConfigError);
  }
}

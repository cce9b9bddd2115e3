#include "xadapt/linalg.hpp"

#include <cmath>

#include <doctest.h>

#include "testutil.hpp"
#include "xadapt/error.hpp"

using namespace xadapt;

TEST_CASE("matmul identity and hand-computed product") {
  Matrix a(3, 3, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  const Matrix prod = matmul(Matrix::identity(3), a);
  for (int i = 0; i < 9; ++i) CHECK(prod.data()[i] == a.data()[i]);

  Matrix b(2, 2, {1, 2, 3, 4});
  Matrix c(2, 1, {0, 1});
  const Matrix bc = matmul(b, c);
  CHECK(bc(0, 0) == 2.0);
  CHECK(bc(1, 0) == 4.0);
}

TEST_CASE("matmul rejects dimension mismatch") {
  Matrix a(2, 3), b(2, 2);
  CHECK_THROWS_AS(matmul(a, b), std::invalid_argument);
}

TEST_CASE("matmul associativity on random 4x4 triples") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix a(4, 4), b(4, 4), c(4, 4);
    for (int i = 0; i < 16; ++i) {
      a.data()[i] = rng.gaussian();
      b.data()[i] = rng.gaussian();
      c.data()[i] = rng.gaussian();
    }
    const Matrix left = matmul(matmul(a, b), c);
    const Matrix right = matmul(a, matmul(b, c));
    const double scale = frobenius_norm(left);
    for (int i = 0; i < 16; ++i)
      CHECK(std::fabs(left.data()[i] - right.data()[i]) <= 1e-10 * scale);
  }
}

TEST_CASE("cholesky on identity and diagonal") {
  const Matrix l = cholesky(Matrix::identity(4));
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) CHECK(l(i, j) == (i == j ? 1.0 : 0.0));

  Matrix d(2, 2, {4, 0, 0, 9});
  const Matrix ld = cholesky(d);
  CHECK(ld(0, 0) == doctest::Approx(2.0));
  CHECK(ld(1, 1) == doctest::Approx(3.0));
  CHECK(ld(0, 1) == 0.0);
}

TEST_CASE("cholesky rejects indefinite input") {
  Matrix a(2, 2, {1, 2, 2, 1});
  CHECK_THROWS_AS(cholesky(a), DegenerateInputError);
}

TEST_CASE("cholesky reconstruction on random SPD matrices") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix a = testutil::random_spd(rng, 5);
    const Matrix l = cholesky(a);
    const Matrix rec = matmul(l, transpose(l));
    double err = 0.0;
    for (int i = 0; i < a.size(); ++i)
      err += (rec.data()[i] - a.data()[i]) * (rec.data()[i] - a.data()[i]);
    CHECK(std::sqrt(err) <= 1e-10 * frobenius_norm(a));
  }
}

TEST_CASE("sym_eig on diagonal and 2x2 hand case") {
  Matrix d(2, 2, {3, 0, 0, 1});
  const SymEig e1 = sym_eig(d);
  CHECK(e1.values[0] == doctest::Approx(3.0));
  CHECK(e1.values[1] == doctest::Approx(1.0));
  CHECK(std::fabs(e1.vectors(0, 0)) == doctest::Approx(1.0));
  CHECK(std::fabs(e1.vectors(1, 1)) == doctest::Approx(1.0));

  // [[2,1],[1,2]]: eigenvalues 3 and 1, eigenvectors (1,1)/sqrt2, (1,-1)/sqrt2.
  Matrix a(2, 2, {2, 1, 1, 2});
  const SymEig e2 = sym_eig(a);
  CHECK(e2.values[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(e2.values[1] == doctest::Approx(1.0).epsilon(1e-12));
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  CHECK(std::fabs(e2.vectors(0, 0) * e2.vectors(1, 0)) ==
        doctest::Approx(inv_sqrt2 * inv_sqrt2));
  CHECK(e2.vectors(0, 1) * e2.vectors(1, 1) ==
        doctest::Approx(-inv_sqrt2 * inv_sqrt2));

  const SymEig e3 = sym_eig(Matrix::identity(3));
  for (double v : e3.values) CHECK(v == doctest::Approx(1.0));
}

TEST_CASE("sym_eig rejects asymmetric input") {
  Matrix a(2, 2, {1, 2, 3, 4});
  CHECK_THROWS_AS(sym_eig(a), std::invalid_argument);
}

TEST_CASE("sym_eig orthonormality, trace and residual on random matrices") {
  Rng rng(17);
  for (int trial = 0; trial < 8; ++trial) {
    Matrix a(6, 6);
    for (int i = 0; i < 6; ++i)
      for (int j = i; j < 6; ++j) {
        const double v = rng.gaussian();
        a(i, j) = v;
        a(j, i) = v;
      }
    const SymEig e = sym_eig(a);

    const Matrix vtv = matmul(transpose(e.vectors), e.vectors);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j)
        CHECK(std::fabs(vtv(i, j) - (i == j ? 1.0 : 0.0)) <= 1e-10);

    double trace = 0.0, sum = 0.0;
    for (int i = 0; i < 6; ++i) {
      trace += a(i, i);
      sum += e.values[i];
    }
    CHECK(std::fabs(trace - sum) <= 1e-9 * std::max(1.0, std::fabs(trace)));

    // a V = V diag(values)
    const Matrix av = matmul(a, e.vectors);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j)
        CHECK(std::fabs(av(i, j) - e.vectors(i, j) * e.values[j]) <=
              1e-9 * frobenius_norm(a));

    for (int i = 1; i < 6; ++i) CHECK(e.values[i - 1] >= e.values[i]);
  }
}

TEST_CASE("solve_spd identity, hand case and error") {
  Matrix b(2, 1, {3, 7});
  const Matrix x0 = solve_spd(Matrix::identity(2), b);
  CHECK(x0(0, 0) == doctest::Approx(3.0));
  CHECK(x0(1, 0) == doctest::Approx(7.0));

  Matrix a(2, 2, {2, 0, 0, 4});
  Matrix rhs(2, 1, {2, 8});
  const Matrix x = solve_spd(a, rhs);
  CHECK(x(0, 0) == doctest::Approx(1.0));
  CHECK(x(1, 0) == doctest::Approx(2.0));

  Matrix indef(2, 2, {1, 2, 2, 1});
  CHECK_THROWS_AS(solve_spd(indef, rhs), DegenerateInputError);

  Rng rng(3);
  const Matrix spd = testutil::random_spd(rng, 5);
  Matrix rhs5(5, 2);
  for (int i = 0; i < rhs5.size(); ++i) rhs5.data()[i] = rng.gaussian();
  const Matrix sol = solve_spd(spd, rhs5);
  const Matrix back = matmul(spd, sol);
  double err = 0.0;
  for (int i = 0; i < back.size(); ++i)
    err += (back.data()[i] - rhs5.data()[i]) * (back.data()[i] - rhs5.data()[i]);
  CHECK(std::sqrt(err) <= 1e-9 * frobenius_norm(rhs5));
}

TEST_CASE("gaussian_sample determinism and moments") {
  Rng a(7), b(7);
  const std::vector<double> sa = gaussian_sample(a, 1000);
  const std::vector<double> sb = gaussian_sample(b, 1000);
  CHECK(sa == sb);

  Rng rng(123);
  const std::vector<double> big = gaussian_sample(rng, 100000);
  double mean = 0.0;
  for (double v : big) mean += v;
  mean /= big.size();
  double var = 0.0;
  for (double v : big) var += (v - mean) * (v - mean);
  var /= big.size();
  CHECK(std::fabs(mean) <= 0.02);
  CHECK(std::fabs(var - 1.0) <= 0.02);

  Rng one(99);
  const std::vector<double> single = gaussian_sample(one, 1);
  REQUIRE(single.size() == 1);
  CHECK(std::isfinite(single[0]));
}

TEST_CASE("rng substreams are independent of consumption order") {
  Rng root(42);
  Rng d1 = root.derive(1);
  root.next_u64();
  Rng d1_again = Rng(42).derive(1);
  CHECK(d1.next_u64() == d1_again.next_u64());
}

TEST_CASE("uniform_int stays in range and covers values") {
  Rng rng(8);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 7000; ++i) {
    const int v = rng.uniform_int(7);
    REQUIRE(v >= 0);
    REQUIRE(v < 7);
    ++counts[v];
  }
  for (int c : counts) CHECK(c > 700);
}

TEST_CASE("random_orthogonal produces orthogonal matrices") {
  Rng rng(31);
  for (int dim : {3, 16, 64}) {
    const Matrix r = random_orthogonal(rng, dim);
    const Matrix rtr = matmul(transpose(r), r);
    double err = 0.0;
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) {
        const double want = (i == j) ? 1.0 : 0.0;
        err = std::max(err, std::fabs(rtr(i, j) - want));
      }
    CHECK(err < 1e-10);
  }
}

#include <doctest.h>

#include <functional>

#include "slicesim/ad.hpp"
#include "slicesim/rng.hpp"

using namespace slicesim;
using ad::Mat;
using ad::Var;

namespace {

Mat random_mat(int r, int c, Rng& rng, double lo = -1.5, double hi = 1.5) {
  Mat m(r, c);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < c; ++j) m(i, j) = rng.uniform(lo, hi);
  }
  return m;
}

// Central-difference check of d(loss)/d(p). `build` must construct the loss
// (a 1x1 node) from a fresh tape, reading p via tape.param(p).
void check_gradient(ad::Param& p, const std::function<Var(ad::Tape&)>& build,
                    double tol = 1e-4) {
  p.zero_grad();
  {
    ad::Tape t;
    t.backward(build(t));
  }
  const Mat analytic = p.grad;
  const double h = 1e-5;
  for (int i = 0; i < p.value.rows(); ++i) {
    for (int j = 0; j < p.value.cols(); ++j) {
      const double saved = p.value(i, j);
      p.value(i, j) = saved + h;
      ad::Tape tp;
      const double up = build(tp).scalar();
      p.value(i, j) = saved - h;
      ad::Tape tm;
      const double down = build(tm).scalar();
      p.value(i, j) = saved;
      const double numeric = (up - down) / (2 * h);
      CHECK(analytic(i, j) == doctest::Approx(numeric).epsilon(tol).scale(1.0));
    }
  }
}

}  // namespace

TEST_CASE("forward values of core ops") {
  ad::Tape t;
  Mat a(2, 2), b(2, 2);
  a << 1, 2, 3, 4;
  b << 5, 6, 7, 8;
  Var va = t.constant(a), vb = t.constant(b);

  CHECK(ad::add(va, vb).val()(1, 1) == doctest::Approx(12.0));
  CHECK(ad::sub(va, vb).val()(0, 0) == doctest::Approx(-4.0));
  CHECK(ad::cmul(va, vb).val()(0, 1) == doctest::Approx(12.0));
  CHECK(ad::matmul(va, vb).val()(0, 0) == doctest::Approx(19.0));
  CHECK(ad::sum(va).scalar() == doctest::Approx(10.0));
  CHECK(ad::mean(va).scalar() == doctest::Approx(2.5));
  CHECK(ad::transpose(va).val()(0, 1) == doctest::Approx(3.0));

  Var sm = ad::row_softmax_masked(va, Mat::Ones(2, 2));
  CHECK(sm.val().row(0).sum() == doctest::Approx(1.0));
  CHECK(sm.val()(0, 1) > sm.val()(0, 0));

  Mat mask(2, 2);
  mask << 1, 0, 1, 1;
  Var sm2 = ad::row_softmax_masked(va, mask);
  CHECK(sm2.val()(0, 0) == doctest::Approx(1.0));
  CHECK(sm2.val()(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("gradients match central differences for every op") {
  Rng rng(31);
  ad::Param p("p", random_mat(3, 4, rng));
  ad::Param q("q", random_mat(4, 3, rng));

  SUBCASE("matmul+sum") {
    check_gradient(p, [&](ad::Tape& t) { return ad::sum(ad::matmul(t.param(p), t.param(q))); });
    check_gradient(q, [&](ad::Tape& t) { return ad::sum(ad::matmul(t.param(p), t.param(q))); });
  }
  SUBCASE("sigmoid") {
    check_gradient(p, [&](ad::Tape& t) { return ad::sum(ad::sigmoid(t.param(p))); });
  }
  SUBCASE("tanh") {
    check_gradient(p, [&](ad::Tape& t) { return ad::sum(ad::tanh_(t.param(p))); });
  }
  SUBCASE("softplus") {
    check_gradient(p, [&](ad::Tape& t) { return ad::sum(ad::softplus(t.param(p))); });
  }
  SUBCASE("exp log square chain") {
    check_gradient(p, [&](ad::Tape& t) {
      return ad::sum(ad::log_(ad::add(ad::square(ad::exp_(t.param(p))), 1.0)));
    });
  }
  SUBCASE("leaky relu") {
    check_gradient(p, [&](ad::Tape& t) { return ad::sum(ad::leaky_relu(t.param(p), 0.2)); });
  }
  SUBCASE("masked softmax") {
    Mat mask(3, 4);
    mask << 1, 1, 0, 1, 0, 1, 1, 1, 1, 0, 1, 0;
    Mat w(3, 4);
    w << 0.3, -0.2, 0.5, 1.0, -0.4, 0.1, 0.2, -0.7, 0.9, 0.6, -0.1, 0.4;
    check_gradient(p, [&](ad::Tape& t) {
      return ad::sum(ad::cmul(ad::row_softmax_masked(t.param(p), mask), t.constant(w)));
    });
  }
  SUBCASE("hcat of transpose") {
    check_gradient(q, [&](ad::Tape& t) {
      return ad::sum(ad::square(ad::hcat(ad::transpose(t.param(p)), t.param(q))));
    });
  }
  SUBCASE("gather rows and block cols") {
    check_gradient(p, [&](ad::Tape& t) {
      Var g = ad::gather_rows(t.param(p), {2, 0, 2});
      return ad::sum(ad::square(ad::block_cols(g, 1, 2)));
    });
  }
  SUBCASE("broadcast rowvec ops") {
    ad::Param rv("rv", random_mat(1, 4, rng));
    auto build = [&](ad::Tape& t) {
      Var y = ad::mul_rowvec(ad::add_rowvec(t.param(p), t.param(rv)), t.param(rv));
      return ad::sum(ad::tanh_(y));
    };
    check_gradient(p, build);
    check_gradient(rv, build);
  }
  SUBCASE("outer sum") {
    ad::Param ca("ca", random_mat(5, 1, rng));
    ad::Param cb("cb", random_mat(5, 1, rng));
    auto build = [&](ad::Tape& t) {
      return ad::sum(ad::sigmoid(ad::outer_sum(t.param(ca), t.param(cb))));
    };
    check_gradient(ca, build);
    check_gradient(cb, build);
  }
  SUBCASE("clamp and min route gradients") {
    auto build = [&](ad::Tape& t) {
      Var c = ad::clamp(t.param(p), -0.8, 0.8);
      return ad::sum(ad::min_(c, ad::transpose(t.param(q))));
    };
    check_gradient(p, build);
    check_gradient(q, build);
  }
  SUBCASE("reshape row_sums col_means") {
    check_gradient(p, [&](ad::Tape& t) {
      Var r = ad::reshape(t.param(p), 4, 3);
      return ad::add(ad::sum(ad::row_sums(ad::square(r))), ad::mean(ad::col_means(r)));
    });
  }
  SUBCASE("masked cmul with constant") {
    Mat mask = Mat::Zero(3, 4);
    mask(0, 0) = mask(1, 2) = mask(2, 3) = 1.0;
    check_gradient(p, [&](ad::Tape& t) { return ad::sum(ad::cmul(t.param(p), mask)); });
  }
}

TEST_CASE("backward accumulates into bound parameters across reuse") {
  Rng rng(32);
  ad::Param p("p", random_mat(2, 2, rng));
  p.zero_grad();
  ad::Tape t;
  Var a = t.param(p);
  Var y = ad::sum(ad::add(a, a));  // d(sum(2a))/da = 2
  t.backward(y);
  CHECK(p.grad(0, 0) == doctest::Approx(2.0));
  CHECK(p.grad(1, 1) == doctest::Approx(2.0));
}

TEST_CASE("shape mismatches throw") {
  ad::Tape t;
  Var a = t.constant(Mat::Zero(2, 3));
  Var b = t.constant(Mat::Zero(3, 2));
  CHECK_THROWS_AS(ad::add(a, b), InputError);
  CHECK_THROWS_AS(ad::cmul(a, b), InputError);
  CHECK_THROWS_AS(ad::matmul(a, a), InputError);
  CHECK_THROWS_AS(ad::hcat(a, b), InputError);
  CHECK_THROWS_AS(t.backward(a), InputError);
}

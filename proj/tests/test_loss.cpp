#include <doctest.h>

#include <cmath>
#include <vector>

#include "rankemb/loss.hpp"
#include "rankemb/rng.hpp"

using namespace rankemb;

TEST_CASE("triplet loss on an active hinge") {
  const std::vector<double> fa = {1.0, 0.0}, fp = {0.0, 1.0}, fn = {0.0, -1.0};
  // Both squared distances are 2; the margin alone stays in the hinge.
  const TripletLossResult r = triplet_loss(fa, fp, fn, 0.5);
  CHECK(r.loss == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(r.grad_anchor == std::vector<double>{0.0, -4.0});
  CHECK(r.grad_positive == std::vector<double>{-2.0, 2.0});
  CHECK(r.grad_negative == std::vector<double>{2.0, 2.0});
}

TEST_CASE("triplet loss when the hinge is closed") {
  const std::vector<double> fa = {0.0, 0.0}, fp = {0.1, 0.0}, fn = {3.0, 0.0};
  const TripletLossResult r = triplet_loss(fa, fp, fn, 0.5);
  CHECK(r.loss == 0.0);
  // Gradients keep the embedding size, filled with zeros.
  CHECK(r.grad_anchor == std::vector<double>(2, 0.0));
  CHECK(r.grad_positive == std::vector<double>(2, 0.0));
  CHECK(r.grad_negative == std::vector<double>(2, 0.0));
}

TEST_CASE("triplet loss takes the zero subgradient at the boundary") {
  // Exact dyadic arithmetic: 1 - 1.25 + 0.25 == 0.
  const std::vector<double> fa = {0.0, 0.0}, fp = {1.0, 0.0}, fn = {1.0, 0.5};
  const TripletLossResult r = triplet_loss(fa, fp, fn, 0.25);
  CHECK(r.loss == 0.0);
  CHECK(r.grad_anchor == std::vector<double>(2, 0.0));
}

TEST_CASE("triplet gradients match finite differences on the open hinge") {
  Rng rng(13);
  const double margin = 10.0;  // large enough that every draw stays active
  const double h = 1e-6;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> fa(4), fp(4), fn(4);
    for (int i = 0; i < 4; ++i) {
      fa[i] = rng.uniform(-1.0, 1.0);
      fp[i] = rng.uniform(-1.0, 1.0);
      fn[i] = rng.uniform(-1.0, 1.0);
    }
    const TripletLossResult r = triplet_loss(fa, fp, fn, margin);
    REQUIRE(r.loss > 0.0);
    for (int i = 0; i < 4; ++i) {
      auto probe = [&](std::vector<double>& v, int idx, double d) {
        v[idx] += d;
        const double loss = triplet_loss(fa, fp, fn, margin).loss;
        v[idx] -= d;
        return loss;
      };
      const double ga = (probe(fa, i, h) - probe(fa, i, -h)) / (2 * h);
      const double gp = (probe(fp, i, h) - probe(fp, i, -h)) / (2 * h);
      const double gn = (probe(fn, i, h) - probe(fn, i, -h)) / (2 * h);
      CHECK(r.grad_anchor[i] == doctest::Approx(ga).epsilon(1e-6));
      CHECK(r.grad_positive[i] == doctest::Approx(gp).epsilon(1e-6));
      CHECK(r.grad_negative[i] == doctest::Approx(gn).epsilon(1e-6));
    }
  }
}

TEST_CASE("scaling embeddings by c scales an active loss by c^2 with margin c^2 m") {
  Rng rng(29);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> fa(3), fp(3), fn(3);
    for (int i = 0; i < 3; ++i) {
      fa[i] = rng.uniform(-1.0, 1.0);
      fp[i] = rng.uniform(-1.0, 1.0);
      fn[i] = rng.uniform(-1.0, 1.0);
    }
    const double margin = 8.0;
    const double c = 2.0;
    std::vector<double> sa = fa, sp = fp, sn = fn;
    for (int i = 0; i < 3; ++i) {
      sa[i] *= c;
      sp[i] *= c;
      sn[i] *= c;
    }
    const double base = triplet_loss(fa, fp, fn, margin).loss;
    const double scaled = triplet_loss(sa, sp, sn, c * c * margin).loss;
    CHECK(scaled == doctest::Approx(c * c * base).epsilon(1e-12));
  }
}

TEST_CASE("triplet loss validates shapes and margin") {
  CHECK_THROWS_AS(triplet_loss({1.0}, {1.0, 2.0}, {1.0}, 0.5), DimensionError);
  CHECK_THROWS_AS(triplet_loss({}, {}, {}, 0.5), ValidationError);
  CHECK_THROWS_AS(triplet_loss({1.0}, {0.0}, {2.0}, -0.1), ValidationError);
}

TEST_CASE("bce of an uninformative predictor is m ln 2") {
  const std::vector<double> p(7, 0.5);
  const std::vector<int> t = {1, 0, 1, 1, 0, 0, 1};
  const BceLossResult r = bce_loss(p, t);
  CHECK(r.loss == doctest::Approx(7.0 * std::log(2.0)).epsilon(1e-14));
}

TEST_CASE("bce of a perfect predictor is tiny but finite thanks to clipping") {
  const BceLossResult r = bce_loss({1.0, 0.0, 1.0}, {1, 0, 1});
  CHECK(r.loss > 0.0);
  CHECK(r.loss < 1e-6);
  for (double g : r.grad) CHECK(std::isfinite(g));
}

TEST_CASE("bce agrees with the summed definitional form") {
  Rng rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> p(5);
    std::vector<int> t(5);
    for (int i = 0; i < 5; ++i) {
      p[i] = rng.uniform(0.01, 0.99);
      t[i] = rng.uniform() < 0.5 ? 0 : 1;
    }
    double want = 0.0;
    for (int i = 0; i < 5; ++i) {
      want -= t[i] * std::log(p[i]) + (1 - t[i]) * std::log(1.0 - p[i]);
    }
    const BceLossResult r = bce_loss(p, t);
    CHECK(r.loss == doctest::Approx(want).epsilon(1e-12));
    for (int i = 0; i < 5; ++i) {
      const double h = 1e-7;
      std::vector<double> plus = p, minus = p;
      plus[i] += h;
      minus[i] -= h;
      const double fd = (bce_loss(plus, t).loss - bce_loss(minus, t).loss) / (2 * h);
      CHECK(r.grad[i] == doctest::Approx(fd).epsilon(1e-5));
    }
  }
}

TEST_CASE("bce validates shapes and label values") {
  CHECK_THROWS_AS(bce_loss({0.5}, {1, 0}), DimensionError);
  CHECK_THROWS_AS(bce_loss({}, {}), ValidationError);
  CHECK_THROWS_AS(bce_loss({0.5}, {2}), ValidationError);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "tae/gradcheck.hpp"
#include "tae/rng.hpp"
#include "tae/tape.hpp"

using namespace tae;

namespace {

// Random values kept away from the kinks of relu/huber/clamp so central
// differences stay valid.
Array smooth_random(Rng& rng, std::vector<int> shape) {
  Array a = Array::zeros(shape);
  for (auto& x : a.v) {
    double v;
    do {
      v = rng.uniform(-2.0, 2.0);
    } while (std::abs(v) < 0.02 || std::abs(std::abs(v) - 1.0) < 0.02 ||
             std::abs(std::abs(v) - 0.5) < 0.02);
    x = float(v);
  }
  return a;
}

// Weighted scalarisation so every output element has a distinct pull.
int weighted_loss(Tape& t, int y) {
  int64_t n = t.count(y);
  std::vector<float> w(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) w[size_t(i)] = 0.3f + 0.1f * float(i % 11);
  int wc = t.constant({t.rows(y), t.cols(y)}, w, "w");
  return t.sum_all(t.mul(y, wc));
}

void expect_grads_ok(Tape& t, int loss, const std::vector<int>& leaves) {
  auto res = check_gradients(t, loss, leaves);
  INFO("worst: ", res.worst_where, " rel=", res.worst_rel);
  CHECK(res.ok);
  CHECK(res.checked > 0);
}

}  // namespace

TEST_CASE("matmul forward matches hand result") {
  Tape t;
  int a = t.constant({2, 3}, {1, 2, 3, 4, 5, 6});
  int b = t.constant({3, 2}, {7, 8, 9, 10, 11, 12});
  int c = t.matmul(a, b);
  Exec<float> ex(t);
  ex.forward();
  CHECK(ex.value(c) == std::vector<float>{58, 64, 139, 154});
}

TEST_CASE("huber values at the reference points") {
  Tape t;
  int x = t.constant({1, 4}, {0.5f, 2.0f, -0.5f, -2.0f});
  int h = t.huber(x);
  Exec<float> ex(t);
  ex.forward();
  CHECK(ex.value(h)[0] == doctest::Approx(0.125));
  CHECK(ex.value(h)[1] == doctest::Approx(1.5));
  CHECK(ex.value(h)[2] == doctest::Approx(0.125));
  CHECK(ex.value(h)[3] == doctest::Approx(1.5));
}

TEST_CASE("softmax rows normalises and orders") {
  Tape t;
  int x = t.constant({2, 3}, {1, 2, 3, 0, 0, 0});
  int s = t.softmax_rows(x);
  Exec<double> ex(t);
  ex.forward();
  const auto& v = ex.value(s);
  CHECK(v[0] + v[1] + v[2] == doctest::Approx(1.0));
  CHECK(v[2] > v[1]);
  CHECK(v[1] > v[0]);
  CHECK(v[3] == doctest::Approx(1.0 / 3));
  // e / (1 + e + e^2) for the first row, exact closed form
  double e = std::exp(1.0);
  CHECK(v[1] == doctest::Approx(e / (1 + e + e * e)));
}

TEST_CASE("segment softmax treats segments independently") {
  Tape t;
  int x = t.constant({5, 1}, {1, 1, 2, 2, 2});
  int s = t.segment_softmax(x, {0, 0, 1, 1, 1}, 2);
  Exec<double> ex(t);
  ex.forward();
  const auto& v = ex.value(s);
  CHECK(v[0] == doctest::Approx(0.5));
  CHECK(v[1] == doctest::Approx(0.5));
  CHECK(v[2] == doctest::Approx(1.0 / 3));
  CHECK(v[3] == doctest::Approx(1.0 / 3));
  CHECK(v[4] == doctest::Approx(1.0 / 3));
}

TEST_CASE("cumsum accumulates down each column") {
  Tape t;
  int x = t.constant({3, 2}, {1, 10, 2, 20, 3, 30});
  int c = t.cumsum_rows(x);
  Exec<float> ex(t);
  ex.forward();
  CHECK(ex.value(c) == std::vector<float>{1, 10, 3, 30, 6, 60});
}

TEST_CASE("gather and scatter are inverse-shaped") {
  Tape t;
  int x = t.constant({3, 2}, {1, 2, 3, 4, 5, 6});
  int g = t.gather_rows(x, {2, 0, 2});
  int s = t.scatter_add_rows(g, {1, 1, 0}, 2);
  Exec<float> ex(t);
  ex.forward();
  CHECK(ex.value(g) == std::vector<float>{5, 6, 1, 2, 5, 6});
  CHECK(ex.value(s) == std::vector<float>{5, 6, 6, 8});
}

TEST_CASE("shape violations raise structured errors") {
  Tape t;
  int a = t.constant({2, 3}, {1, 2, 3, 4, 5, 6}, "lhs");
  int b = t.constant({2, 2}, {1, 2, 3, 4}, "rhs");
  CHECK_THROWS_WITH_AS(t.matmul(a, b),
                       doctest::Contains("matmul: inner dimensions disagree"), DataError);
  CHECK_THROWS_WITH_AS(t.add(a, b), doctest::Contains("shape mismatch"), DataError);
  CHECK_THROWS_WITH_AS(t.add_row(a, b), doctest::Contains("add_row"), DataError);
  CHECK_THROWS_WITH_AS(t.reshape(a, 4, 4), doctest::Contains("reshape"), DataError);
  CHECK_THROWS_WITH_AS(t.gather_rows(a, {5}), doctest::Contains("out of range"), DataError);
}

TEST_CASE("float and double executors agree closely") {
  Rng rng(17);
  Tape t;
  int x = t.param(smooth_random(rng, {4, 6}), "x");
  int w = t.param(smooth_random(rng, {6, 5}), "w");
  int y = t.tanh(t.matmul(x, w));
  int loss = t.mean_all(y);
  Exec<float> ef(t);
  ef.forward();
  Exec<double> ed(t);
  ed.forward();
  CHECK(double(ef.scalar(loss)) == doctest::Approx(ed.scalar(loss)).epsilon(1e-5));
}

TEST_CASE("gradients: elementwise chain") {
  Rng rng(21);
  Tape t;
  int x = t.param(smooth_random(rng, {3, 4}), "x");
  int y = t.param(smooth_random(rng, {3, 4}), "y");
  SUBCASE("add/sub/mul") {
    int z = t.mul(t.add(x, y), t.sub(x, y));
    expect_grads_ok(t, weighted_loss(t, z), {x, y});
  }
  SUBCASE("relu") { expect_grads_ok(t, weighted_loss(t, t.relu(x)), {x}); }
  SUBCASE("tanh") { expect_grads_ok(t, weighted_loss(t, t.tanh(x)), {x}); }
  SUBCASE("sigmoid") { expect_grads_ok(t, weighted_loss(t, t.sigmoid(x)), {x}); }
  SUBCASE("exp") { expect_grads_ok(t, weighted_loss(t, t.exp(x)), {x}); }
  SUBCASE("huber") { expect_grads_ok(t, weighted_loss(t, t.huber(x)), {x}); }
  SUBCASE("clamp") { expect_grads_ok(t, weighted_loss(t, t.clamp(x, -0.7f, 0.9f)), {x}); }
  SUBCASE("scale/add_const") {
    expect_grads_ok(t, weighted_loss(t, t.add_const(t.scale(x, -1.7f), 0.3f)), {x});
  }
  SUBCASE("log of positive") {
    int p = t.add_const(t.sigmoid(x), 0.1f);
    expect_grads_ok(t, weighted_loss(t, t.log(p)), {x});
  }
}

TEST_CASE("gradients: linear algebra") {
  Rng rng(22);
  Tape t;
  int a = t.param(smooth_random(rng, {4, 3}), "a");
  int b = t.param(smooth_random(rng, {3, 5}), "b");
  SUBCASE("matmul both sides") { expect_grads_ok(t, weighted_loss(t, t.matmul(a, b)), {a, b}); }
  SUBCASE("transpose") { expect_grads_ok(t, weighted_loss(t, t.transpose(a)), {a}); }
  SUBCASE("bias row") {
    int bias = t.param(smooth_random(rng, {1, 5}), "bias");
    expect_grads_ok(t, weighted_loss(t, t.add_row(t.matmul(a, b), bias)), {a, b, bias});
  }
  SUBCASE("mul_col") {
    int col = t.param(smooth_random(rng, {4, 1}), "col");
    expect_grads_ok(t, weighted_loss(t, t.mul_col(a, col)), {a, col});
  }
}

TEST_CASE("gradients: reductions and shape ops") {
  Rng rng(23);
  Tape t;
  int x = t.param(smooth_random(rng, {4, 6}), "x");
  int y = t.param(smooth_random(rng, {2, 6}), "y");
  SUBCASE("sum_all") { expect_grads_ok(t, t.sum_all(x), {x}); }
  SUBCASE("mean_all") { expect_grads_ok(t, t.mean_all(x), {x}); }
  SUBCASE("concat_rows") { expect_grads_ok(t, weighted_loss(t, t.concat_rows(x, y)), {x, y}); }
  SUBCASE("concat_cols") {
    int z = t.param(smooth_random(rng, {4, 2}), "z");
    expect_grads_ok(t, weighted_loss(t, t.concat_cols(x, z)), {x, z});
  }
  SUBCASE("reshape + cumsum") {
    expect_grads_ok(t, weighted_loss(t, t.cumsum_rows(t.reshape(x, 12, 2))), {x});
  }
  SUBCASE("gather") { expect_grads_ok(t, weighted_loss(t, t.gather_rows(x, {1, 3, 1, 0})), {x}); }
  SUBCASE("scatter") {
    expect_grads_ok(t, weighted_loss(t, t.scatter_add_rows(x, {2, 0, 2, 1}, 3)), {x});
  }
}

TEST_CASE("gradients: softmax family") {
  Rng rng(24);
  Tape t;
  SUBCASE("softmax_rows with cross-entropy") {
    int x = t.param(smooth_random(rng, {5, 3}), "logits");
    int p = t.clamp(t.softmax_rows(x), 1e-7f, 1.f);
    std::vector<float> onehot(15, 0.f);
    for (int i = 0; i < 5; ++i) onehot[size_t(i) * 3 + i % 3] = 1.f;
    int lbl = t.constant({5, 3}, onehot, "labels");
    int loss = t.scale(t.sum_all(t.mul(lbl, t.log(p))), -1.f / 5);
    expect_grads_ok(t, loss, {x});
  }
  SUBCASE("segment_softmax") {
    int x = t.param(smooth_random(rng, {6, 1}), "scores");
    int a = t.segment_softmax(x, {0, 0, 1, 1, 1, 2}, 3);
    expect_grads_ok(t, weighted_loss(t, a), {x});
  }
}

TEST_CASE("gradients: composite attention block") {
  Rng rng(25);
  Tape t;
  const int n = 5, d = 4;
  int h = t.param(smooth_random(rng, {n, d}), "h");
  int wq = t.param(smooth_random(rng, {d, d}), "wq");
  int wk = t.param(smooth_random(rng, {d, d}), "wk");
  int wv = t.param(smooth_random(rng, {d, d}), "wv");
  int q = t.matmul(t.gather_rows(h, {2}), wq);           // [1,d]
  int keys = t.matmul(h, wk);                            // [n,d]
  int scores = t.scale(t.matmul(keys, t.transpose(q)), 1.f / std::sqrt(float(d)));
  int alpha = t.segment_softmax(scores, std::vector<int>(n, 0), 1);
  int mixed = t.scatter_add_rows(t.mul_col(t.matmul(h, wv), alpha), std::vector<int>(n, 0), 1);
  expect_grads_ok(t, weighted_loss(t, mixed), {h, wq, wk, wv});
}

TEST_CASE("gradients survive node reuse") {
  Rng rng(26);
  Tape t;
  int x = t.param(smooth_random(rng, {3, 3}), "x");
  int y = t.relu(x);
  int z = t.add(t.mul(y, y), t.scale(y, 0.5f));  // y consumed twice
  expect_grads_ok(t, weighted_loss(t, z), {x});
}

TEST_CASE("no gradient recorded for constants") {
  Tape t;
  int x = t.param(Array::full({2, 2}, 1.f), "x");
  int c = t.constant({2, 2}, {1, 2, 3, 4});
  int loss = t.sum_all(t.mul(x, c));
  Exec<float> ex(t);
  ex.forward();
  Grads<float> g(t, ex);
  g.run(loss);
  CHECK(g.has_grad(x));
  CHECK_FALSE(g.has_grad(c));
  CHECK(g.grad(x) == std::vector<float>{1, 2, 3, 4});
}

TEST_CASE("backward rejects non-scalar roots and non-finite losses") {
  Tape t;
  int x = t.param(Array::full({2, 2}, 2.f), "x");
  Exec<float> ex(t);
  ex.forward();
  Grads<float> g(t, ex);
  CHECK_THROWS_AS(g.run(x), DataError);
}

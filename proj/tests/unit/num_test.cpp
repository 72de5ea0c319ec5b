// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <vector>

#include "doctest.h"
#include "slotgen/errors.hpp"
#include "slotgen/num/ops.hpp"
#include "slotgen/num/optim.hpp"
#include "support/gradcheck.hpp"

using namespace slotgen;
using namespace slotgen::num;
using slotgen::testing::grad_check;
using slotgen::testing::random_tensor;

TEST_SUITE("numkernel") {

TEST_CASE("matmul identity and hand product") {
  Var eye(Tensor::matrix({{1, 0}, {0, 1}}));
  Var b(Tensor::matrix({{3, 4}, {5, 6}}));
  CHECK(matmul(eye, b).value() == b.value());

  Var a(Tensor::matrix({{2, 3}}));
  Var c(Tensor::matrix({{4}, {5}}));
  CHECK(matmul(a, c).item() == doctest::Approx(2 * 4 + 3 * 5));
}

TEST_CASE("matmul shape mismatch names both shapes") {
  Var a(Tensor::zeros(2, 3));
  Var b(Tensor::zeros(2, 3));
  try {
    matmul(a, b);
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[2x3]") != std::string::npos);
    CHECK(msg.find("and [2x3]") != std::string::npos);
  }
}

TEST_CASE("elementwise point values") {
  Var x(Tensor::row({-1, 0, 2}));
  CHECK(relu(x).value() == Tensor::row({0, 0, 2}));
  CHECK(sigmoid(Var(Tensor::row({0}))).item() == 0.5);
  CHECK_THROWS_AS(add(Var(Tensor::zeros(2, 3)), Var(Tensor::zeros(3, 2))), DimensionError);
  // Row broadcast is the only permitted broadcast; a column is rejected.
  CHECK_NOTHROW(add(Var(Tensor::zeros(2, 3)), Var(Tensor::zeros(1, 3))));
  CHECK_THROWS_AS(add(Var(Tensor::zeros(2, 3)), Var(Tensor::zeros(2, 1))), DimensionError);
  CHECK_THROWS_AS(mul(Var(Tensor::zeros(2, 3)), Var(Tensor::zeros(1, 3))), DimensionError);
}

TEST_CASE("tanh gradient at 0.5 matches central difference") {
  Var x(Tensor::row({0.5}), true);
  auto res = grad_check([&] { return sum(num::tanh(x)); }, {x});
  CHECK(res.max_rel_error < 1e-6);
  const double t = std::tanh(0.5);
  CHECK(x.grad()[0] == doctest::Approx(1 - t * t).epsilon(1e-12));
}

TEST_CASE("softmax values") {
  auto u = softmax_values(Tensor::row({0, 0, 0}));
  for (double v : u.values()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  auto big = softmax_values(Tensor::row({1000, 1000}));
  CHECK(big[0] == 0.5);
  CHECK(big[1] == 0.5);

  // Direct exponential oracle.
  const double e1 = std::exp(1.0), e2 = std::exp(2.0), e3 = std::exp(3.0), z = e1 + e2 + e3;
  auto s = softmax_values(Tensor::row({1, 2, 3}));
  CHECK(std::fabs(s[0] - e1 / z) < 1e-15);
  CHECK(std::fabs(s[1] - e2 / z) < 1e-15);
  CHECK(std::fabs(s[2] - e3 / z) < 1e-15);
  CHECK(std::fabs(s[0] - 0.09003057) < 1e-8);
  CHECK(std::fabs(s[1] - 0.24472847) < 1e-8);
  CHECK(std::fabs(s[2] - 0.66524096) < 1e-8);

  auto cols = softmax_values(Tensor::matrix({{1, 5}, {2, 5}, {3, 5}}), 0);
  CHECK(std::fabs(cols.at(2, 0) - e3 / z) < 1e-15);
  CHECK(cols.at(0, 1) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("softmax output is on the simplex for random finite input") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    auto t = random_tensor(3, 1 + rng.below(9), rng, -50, 50);
    auto s = softmax_values(t);
    for (std::size_t i = 0; i < s.rows(); ++i) {
      double total = 0;
      for (std::size_t j = 0; j < s.cols(); ++j) {
        CHECK(s.at(i, j) >= 0.0);
        total += s.at(i, j);
      }
      CHECK(std::fabs(total - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("backward: sum(W x) gives column-broadcast of x") {
  Var w(Tensor::matrix({{0.3, -1.0, 2.0}, {1.5, 0.2, -0.7}}), true);
  Var x(Tensor::matrix({{1.0}, {2.0}, {3.0}}));
  Graph g;
  g.backward(sum(matmul(w, x)));
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 3; ++j) CHECK(w.grad().at(i, j) == x.value()[j]);
  CHECK_FALSE(x.has_grad());
}

TEST_CASE("backward: disconnected parameter has zero gradient") {
  Var w(Tensor::matrix({{1, 2}}), true);
  Var v(Tensor::matrix({{3, 4}}), true);
  w.node().ensure_grad();
  Graph g;
  g.backward(sum(num::tanh(v)));
  for (double d : w.grad().values()) CHECK(d == 0.0);
}

TEST_CASE("backward contract errors") {
  Var w(Tensor::matrix({{1, 2}}), true);
  {
    Graph g;
    CHECK_THROWS_AS(g.backward(num::tanh(w)), ContractError);
  }
  {
    Graph g;
    Var loss = sum(num::tanh(w));
    g.backward(loss);
    CHECK_THROWS_AS(g.backward(loss), ContractError);
  }
}

TEST_CASE("no recording without an active graph") {
  Var w(Tensor::matrix({{1, 2}}), true);
  Var y = num::tanh(w);
  CHECK_FALSE(y.requires_grad());
  Graph g;
  CHECK(num::tanh(w).requires_grad());
  CHECK(g.size() == 1);
}

TEST_CASE("every differentiable op matches finite differences on [-2,2]") {
  Rng rng(11);
  auto param = [&](std::size_t r, std::size_t c) { return Var(random_tensor(r, c, rng), true); };
  // A fixed random projection turns any output into a scalar with non-trivial
  // upstream gradient.
  auto project = [&](const Var& y) {
    Var coeff(random_tensor(y.rows(), y.cols(), rng));
    return [y_shape = y.shape(), coeff](const Var& out) { return sum(mul(out, coeff)); };
  };
  auto check = [&](const char* name, auto build, std::vector<Var> inputs) {
    auto reduce = project(build());
    auto res = grad_check([&] { return reduce(build()); }, inputs);
    INFO(name << " worst: " << res.worst);
    CHECK(res.max_rel_error < 1e-4);
  };

  Var a = param(3, 4), b = param(4, 2), c = param(3, 4), bias = param(1, 4);
  check("matmul", [&] { return matmul(a, b); }, {a, b});
  check("transpose", [&] { return transpose(a); }, {a});
  check("add", [&] { return add(a, c); }, {a, c});
  check("add-bias", [&] { return add(a, bias); }, {a, bias});
  check("sub", [&] { return sub(a, bias); }, {a, bias});
  check("mul", [&] { return mul(a, c); }, {a, c});
  check("scale", [&] { return scale(a, -1.7); }, {a});
  check("tanh", [&] { return num::tanh(a); }, {a});
  check("sigmoid", [&] { return sigmoid(a); }, {a});
  check("relu", [&] { return relu(a); }, {a});
  check("softmax-1", [&] { return softmax(a, 1); }, {a});
  check("softmax-0", [&] { return softmax(a, 0); }, {a});
  check("mean_rows", [&] { return mean_rows(a); }, {a});
  check("concat_cols", [&] { std::vector<Var> p{a, c}; return concat_cols(p); }, {a, c});
  check("concat_rows", [&] { std::vector<Var> p{a, c, bias}; return concat_rows(p); }, {a, c, bias});
  check("slice_rows", [&] { return slice_rows(a, 1, 3); }, {a});
  check("slice_cols", [&] { return slice_cols(a, 1, 3); }, {a});
  Var gain = param(1, 4), shift = param(1, 4);
  check("layer_norm", [&] { return layer_norm(a, gain, shift); }, {a, gain, shift});
  Var table = param(6, 3);
  std::vector<std::int64_t> ids{2, 0, 2, 5};
  check("embedding", [&] { return embedding(table, ids); }, {table});
  check("dropout", [&] { Rng r(3); return dropout(a, 0.4, true, r); }, {a});
  Var logits = param(1, 7);
  auto ce = grad_check([&] { return cross_entropy(logits, 4); }, {logits});
  CHECK(ce.max_rel_error < 1e-4);
  Var block = param(3, 7);
  std::vector<std::size_t> targets{4, 0, 6};
  auto ce_rows = grad_check([&] { return cross_entropy_rows(block, targets); }, {block});
  CHECK(ce_rows.max_rel_error < 1e-4);
  double separate = 0;
  for (std::size_t i = 0; i < 3; ++i) separate += cross_entropy(row(block, i), targets[i]).item();
  CHECK(cross_entropy_rows(block, targets).item() == doctest::Approx(separate).epsilon(1e-12));

  Var proj = param(2, 9), h = param(2, 3), u = param(3, 9);
  check("gru_step", [&] { return gru_step(proj, h, u); }, {proj, h, u});
}

TEST_CASE("two identical forward+backward passes give bit-identical gradients") {
  Rng rng(5);
  Var a(random_tensor(4, 5, rng), true), b(random_tensor(5, 3, rng), true);
  auto run = [&] {
    a.zero_grad();
    b.zero_grad();
    Graph g;
    Rng drop(99);
    g.backward(sum(softmax(dropout(matmul(a, b), 0.3, true, drop))));
    return std::make_pair(a.grad(), b.grad());
  };
  auto first = run();
  auto second = run();
  CHECK(first.first == second.first);
  CHECK(first.second == second.second);
}

TEST_CASE("gradient accumulation is additive") {
  Rng rng(9);
  Var w(random_tensor(3, 3, rng), true);
  Var x(random_tensor(3, 2, rng));
  auto f = [&] { return sum(num::tanh(matmul(w, x))); };
  auto g = [&] { return sum(sigmoid(w)); };
  auto grad_of = [&](auto fn) {
    w.zero_grad();
    Graph graph;
    graph.backward(fn());
    return w.grad();
  };
  Tensor gf = grad_of(f), gg = grad_of(g), gsum = grad_of([&] { return add(f(), g()); });
  for (std::size_t i = 0; i < gsum.size(); ++i) CHECK(std::fabs(gsum[i] - (gf[i] + gg[i])) < 1e-12);
}

TEST_CASE("dropout is identity at eval and scales survivors at train") {
  Rng rng(1);
  Var x(Tensor::row(std::vector<double>(1000, 1.0)));
  CHECK(dropout(x, 0.5, false, rng).value() == x.value());
  auto y = dropout(x, 0.5, true, rng).value();
  std::size_t kept = 0;
  for (double v : y.values()) {
    CHECK((v == 0.0 || v == 2.0));
    kept += v != 0.0;
  }
  CHECK(kept > 400);
  CHECK(kept < 600);
}

TEST_CASE("AdamW update rules") {
  SUBCASE("zero gradient, zero decay leaves parameters unchanged") {
    ParameterSet ps;
    Var p = ps.add("p", Tensor::row({1.0, -2.0}));
    p.node().ensure_grad();
    AdamW opt({.lr = 0.1, .weight_decay = 0.0});
    opt.step(ps);
    CHECK(p.value() == Tensor::row({1.0, -2.0}));
  }
  SUBCASE("one step with g=1 moves by lr") {
    ParameterSet ps;
    Var p = ps.add("p", Tensor::row({1.0}));
    p.node().ensure_grad();
    p.node().grad[0] = 1.0;
    AdamW opt({.lr = 0.1, .beta1 = 0.9, .beta2 = 0.999, .eps = 1e-8, .weight_decay = 0.0});
    opt.step(ps);
    // m_hat = v_hat = 1 after bias correction.
    CHECK(p.value()[0] == doctest::Approx(1.0 - 0.1 / (1.0 + 1e-8)).epsilon(1e-14));
    CHECK(p.value()[0] == doctest::Approx(0.9).epsilon(1e-7));
  }
  SUBCASE("decoupled decay acts on the parameter") {
    ParameterSet ps;
    Var p = ps.add("p", Tensor::row({1.0}));
    p.node().ensure_grad();
    AdamW opt({.lr = 0.1, .weight_decay = 0.1});
    opt.step(ps);
    CHECK(p.value()[0] == doctest::Approx(0.99).epsilon(1e-14));
  }
  SUBCASE("NaN gradient names the parameter") {
    ParameterSet ps;
    ps.add("good", Tensor::row({1.0})).node().ensure_grad();
    Var bad = ps.add("decoder.W_S", Tensor::row({1.0}));
    bad.node().ensure_grad();
    bad.node().grad[0] = std::nan("");
    AdamW opt;
    try {
      opt.step(ps);
      FAIL("expected NumericError");
    } catch (const NumericError& e) {
      CHECK(std::string(e.what()).find("decoder.W_S") != std::string::npos);
    }
  }
}

TEST_CASE("global-norm clipping") {
  ParameterSet ps;
  Var a = ps.add("a", Tensor::row({0.0, 0.0}));
  Var b = ps.add("b", Tensor::row({0.0}));
  a.node().ensure_grad();
  b.node().ensure_grad();
  a.node().grad = Tensor::row({3.0, 0.0});
  b.node().grad = Tensor::row({4.0});
  CHECK(ps.clip_grad_norm(1.0) == doctest::Approx(5.0));
  CHECK(ps.grad_norm() == doctest::Approx(1.0));
  CHECK(a.grad()[0] == doctest::Approx(0.6));
  CHECK(b.grad()[0] == doctest::Approx(0.8));
}

TEST_CASE("tensor invariants") {
  CHECK_THROWS_AS(Tensor({2, 3}, std::vector<double>(5)), DimensionError);
  CHECK_THROWS_AS(Tensor({0, 3}), DimensionError);
  Tensor t({2, 3, 4});
  CHECK(t.size() == 24);
}

}  // TEST_SUITE

#include <cstdio>
#include <filesystem>

#include "doctest.h"
#include "gradcheck.hpp"
#include "gwn/checkpoint.hpp"
#include "gwn/nn.hpp"
#include "gwn/pmf.hpp"

using namespace gwn;

TEST_CASE("every op matches central differences") {
  for (const auto& rep : testing::run_gradient_suite()) {
    INFO(rep.op << " worst " << rep.worst);
    CHECK(rep.worst < 1e-5);
  }
}

TEST_CASE("straight-through quantiser and clamp pass gradients unchanged") {
  CHECK(testing::straight_through_is_identity());
}

TEST_CASE("rounding is half away from zero") {
  CHECK(round_half_away(0.5) == 1.0);
  CHECK(round_half_away(-0.5) == -1.0);
  CHECK(round_half_away(2.49) == 2.0);
  CHECK(round_half_away(-2.5) == -3.0);
}

TEST_CASE("gaussian mass sums to one over the integers") {
  for (double mu : {-3.3, 0.0, 0.4, 7.9})
    for (double s : {0.05, 0.7, 4.0}) {
      double total = 0.0;
      for (int y = -200; y <= 200; ++y) total += gaussian_mass(y, mu, s);
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
  // Far tail keeps relative precision instead of cancelling to zero.
  CHECK(gaussian_mass(30.0, 0.0, 1.0) > 0.0);
}

TEST_CASE("gradients accumulate through reused nodes") {
  Tape t;
  Var x = t.leaf(Tensor::matrix(1, 2, {1.5, -2.0}));
  Var y = add(mul(x, x), x);
  t.backward(sum(y));
  const Tensor g = t.grad(x);
  CHECK(g[0] == doctest::Approx(4.0));
  CHECK(g[1] == doctest::Approx(-3.0));
}

TEST_CASE("ops reject mismatched shapes") {
  Tape t;
  Var a = t.leaf(Tensor({2, 3})), b = t.leaf(Tensor({3, 2}));
  CHECK_THROWS(add(a, b));
  CHECK_THROWS(matmul(a, a));
  CHECK_THROWS(softmax_cross_entropy(a, {0}));
}

TEST_CASE("adam clips the global gradient norm") {
  Tensor p = Tensor::matrix(1, 2, {0.0, 0.0});
  Tensor g = Tensor::matrix(1, 2, {30.0, 40.0});
  AdamState st;
  AdamOptions o;
  o.lr = 0.1;
  o.clip_norm = 1.0;
  const double norm = adam_step({&p}, {&g}, st, o);
  CHECK(norm == doctest::Approx(50.0));
  // First Adam step moves each coordinate by lr regardless of magnitude.
  CHECK(p[0] == doctest::Approx(-0.1).epsilon(1e-6));
  CHECK(p[1] == doctest::Approx(-0.1).epsilon(1e-6));
}

TEST_CASE("adam minimises a quadratic") {
  ParamStore store;
  Parameter& w = store.add("w", Tensor::matrix(1, 3, {3.0, -2.0, 1.0}));
  AdamState st;
  AdamOptions o;
  o.lr = 0.05;
  for (int i = 0; i < 2000; ++i) {
    Tape t;
    store.bind(t);
    Var loss = sum_of_squares(add_scalar(w.var, -1.0));
    t.backward(loss);
    store.collect_grads(t);
    adam_step(store, st, o);
  }
  for (double v : w.value.data()) CHECK(v == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("checkpoint round trip and mismatch detection") {
  Rng rng(4);
  ParamStore a;
  Mlp net(a, "net", {3, 5, 2}, rng);
  const auto dir = std::filesystem::temp_directory_path() / "gwn_ckpt_test";
  std::filesystem::create_directories(dir);
  const std::string bin = (dir / "p.bin").string(), man = (dir / "m.json").string();
  save_checkpoint(a, bin, man, R"({"note":"x"})");

  ParamStore b;
  Rng other(99);
  Mlp net2(b, "net", {3, 5, 2}, other);
  const std::string meta = load_checkpoint(b, bin, man);
  CHECK(meta.find("note") != std::string::npos);
  for (std::size_t i = 0; i < a.params().size(); ++i)
    CHECK(a.params()[i].value.data() == b.params()[i].value.data());

  ParamStore c;
  Mlp net3(c, "net", {3, 4, 2}, other);
  CHECK_THROWS_AS(load_checkpoint(c, bin, man), ValidationError);
  std::filesystem::remove_all(dir);
}

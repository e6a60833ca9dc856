#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <vector>

#include "nerfdyn/params.hpp"
#include "nerfdyn/random.hpp"
#include "nerfdyn/tape.hpp"

using namespace nerfdyn;

TEST_CASE("forward basics") {
  Tape tape;
  NodeId x = tape.input(Tensor::scalar(3.0f));
  NodeId f = tape.square(x);
  CHECK(tape.scalar_value(f) == doctest::Approx(9.0f));

  NodeId r = tape.relu(tape.constant_scalar(-2.0f));
  CHECK(tape.scalar_value(r) == 0.0f);

  NodeId s = tape.sigmoid(tape.constant_scalar(0.0f));
  CHECK(tape.scalar_value(s) == doctest::Approx(0.5f));
}

TEST_CASE("backward of square") {
  Tape tape;
  NodeId x = tape.input(Tensor::scalar(3.0f));
  NodeId f = tape.square(x);
  tape.backward(f);
  CHECK(tape.grad(x)[0] == doctest::Approx(6.0f));
}

TEST_CASE("relu gradient in the flat region") {
  Tape tape;
  NodeId x = tape.input(Tensor::scalar(-1.0f));
  NodeId f = tape.relu(x);
  tape.backward(f);
  CHECK(tape.grad(x)[0] == 0.0f);
}

TEST_CASE("loss must be scalar") {
  Tape tape;
  NodeId x = tape.input(Tensor::row({1.0f, 2.0f}));
  CHECK_THROWS_AS(tape.backward(x), ShapeError);
}

TEST_CASE("matmul gradient matches a double-precision finite-difference oracle") {
  // f(A) = sum(A*B). The oracle evaluates the same expression in double with
  // central differences at step 1e-4; the expected pattern is dA[i,k] = sum_j B[k,j].
  RandomStream rng(7);
  const int n = 3;
  std::vector<float> a(n * n), b(n * n);
  for (auto& x : a) x = rng.uniform(-1.0f, 1.0f);
  for (auto& x : b) x = rng.uniform(-1.0f, 1.0f);

  Tape tape;
  NodeId A = tape.input(a, n, n);
  NodeId B = tape.constant(b, n, n);
  NodeId f = tape.sum(tape.matmul(A, B));
  tape.backward(f);
  auto grad = tape.grad(A);

  auto f_ref = [&](const std::vector<float>& av) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double c = 0.0;
        for (int k = 0; k < n; ++k) c += double(av[i * n + k]) * double(b[k * n + j]);
        acc += c;
      }
    return acc;
  };
  const double h = 1e-4;
  double max_rel = 0.0;
  for (int i = 0; i < n * n; ++i) {
    std::vector<float> ap = a, am = a;
    ap[i] += float(h);
    am[i] -= float(h);
    double span = double(ap[i]) - double(am[i]);  // actual float perturbation
    double fd = (f_ref(ap) - f_ref(am)) / span;
    double rel = std::abs(fd - grad[i]) / std::max({1.0, std::abs(fd), std::abs(double(grad[i]))});
    max_rel = std::max(max_rel, rel);
    // dA = B^T row-sum pattern.
    int k = i % n;
    double pattern = 0.0;
    for (int j = 0; j < n; ++j) pattern += b[k * n + j];
    CHECK(grad[i] == doctest::Approx(pattern).epsilon(1e-4));
  }
  CHECK(max_rel < 1e-4);
}

TEST_CASE("elementwise chain matches double oracle") {
  // f(x) = mean((sin x + sigmoid(x) cos x)^2), checked coordinatewise.
  RandomStream rng(21);
  const int n = 6;
  std::vector<float> x(n);
  for (auto& v : x) v = rng.uniform(-2.0f, 2.0f);

  Tape tape;
  NodeId X = tape.input(x, 2, 3);
  NodeId f = tape.mean(tape.square(tape.add(tape.sin_op(X), tape.mul(tape.sigmoid(X), tape.cos_op(X)))));
  tape.backward(f);
  auto grad = tape.grad(X);

  auto f_ref = [&](const std::vector<float>& xv) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      double v = xv[i];
      double t = std::sin(v) + 1.0 / (1.0 + std::exp(-v)) * std::cos(v);
      acc += t * t;
    }
    return acc / n;
  };
  const double h = 1e-5;
  for (int i = 0; i < n; ++i) {
    std::vector<float> xp = x, xm = x;
    xp[i] += float(h);
    xm[i] -= float(h);
    double span = double(xp[i]) - double(xm[i]);  // actual float perturbation
    double fd = (f_ref(xp) - f_ref(xm)) / span;
    CHECK(grad[i] == doctest::Approx(fd).epsilon(2e-4));
  }
}

TEST_CASE("structural ops: concat, slice, gather, row_sum, cumsum") {
  Tape tape;
  NodeId a = tape.input(std::vector<float>{1, 2, 3, 4}, 2, 2);
  NodeId b = tape.input(std::vector<float>{5, 6}, 2, 1);
  NodeId cat = tape.concat_cols(a, b);  // [[1,2,5],[3,4,6]]
  CHECK(tape.value(cat)[2] == 5.0f);
  CHECK(tape.value(cat)[5] == 6.0f);

  NodeId sl = tape.slice_cols(cat, 1, 2);  // [[2,5],[4,6]]
  CHECK(tape.value(sl)[0] == 2.0f);
  CHECK(tape.value(sl)[3] == 6.0f);

  auto idx = std::make_shared<std::vector<std::int32_t>>(std::vector<std::int32_t>{3, -1, 0});
  NodeId g = tape.gather(sl, idx, 1, 3);  // [6, 0, 2]
  CHECK(tape.value(g)[0] == 6.0f);
  CHECK(tape.value(g)[1] == 0.0f);
  CHECK(tape.value(g)[2] == 2.0f);

  NodeId rs = tape.row_sum(a);  // [3, 7]
  CHECK(tape.value(rs)[0] == 3.0f);
  CHECK(tape.value(rs)[1] == 7.0f);

  NodeId cs = tape.cumsum_exclusive_rows(a);  // [[0,1],[0,3]]
  CHECK(tape.value(cs)[0] == 0.0f);
  CHECK(tape.value(cs)[1] == 1.0f);
  CHECK(tape.value(cs)[3] == 3.0f);

  // One scalar loss touching everything; gradients verified by hand.
  // loss = sum(g) + sum(rs) + sum(cs)
  NodeId loss = tape.add(tape.add(tape.sum(g), tape.sum(rs)), tape.sum(cs));
  tape.backward(loss);
  // d loss / d a: from rs: ones. From cs (exclusive row cumsum of a): [[1,0],[1,0]].
  // From g via slice: gather picked slice idx 3 -> a[1][1]... slice col1..2 of cat:
  // sl = [[a01, b0],[a11, b1]]; gather [3,-1,0] -> [b1, 0, a01].
  auto ga = tape.grad(a);
  CHECK(ga[0] == doctest::Approx(2.0f));  // rs + cs
  CHECK(ga[1] == doctest::Approx(2.0f));  // rs + gather(a01)
  CHECK(ga[2] == doctest::Approx(2.0f));
  CHECK(ga[3] == doctest::Approx(1.0f));
  auto gb = tape.grad(b);
  CHECK(gb[0] == doctest::Approx(0.0f));
  CHECK(gb[1] == doctest::Approx(1.0f));
}

TEST_CASE("shape errors name the op and shapes") {
  Tape tape;
  NodeId a = tape.input(std::vector<float>{1, 2, 3, 4, 5, 6}, 2, 3);
  NodeId b = tape.input(std::vector<float>{1, 2, 3, 4}, 2, 2);
  try {
    tape.matmul(a, b);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    std::string msg = e.what();
    CHECK(msg.find("matmul") != std::string::npos);
    CHECK(msg.find("[2x3]") != std::string::npos);
    CHECK(msg.find("[2x2]") != std::string::npos);
  }
  CHECK_THROWS_AS(tape.add(a, b), ShapeError);
}

TEST_CASE("non-finite outputs raise instead of propagating") {
  Tape tape;
  NodeId x = tape.input(Tensor::scalar(-1.0f));
  CHECK_THROWS_AS(tape.sqrt_op(x), NumericalError);

  Tape tape2;
  NodeId y = tape2.input(Tensor::scalar(1000.0f));
  CHECK_THROWS_AS(tape2.exp_op(y), NumericalError);
}

TEST_CASE("deterministic forward and gradients for a fixed seed") {
  auto run = [] {
    RandomStream rng(99);
    std::vector<float> a(12), b(8);
    for (auto& x : a) x = rng.normal();
    for (auto& x : b) x = rng.normal();
    Tape tape;
    NodeId A = tape.input(a, 3, 4);
    NodeId B = tape.input(b, 4, 2);
    NodeId f = tape.sum(tape.sigmoid(tape.matmul(A, B)));
    tape.backward(f);
    std::vector<float> out(tape.value(f).begin(), tape.value(f).end());
    out.insert(out.end(), tape.grad(A).begin(), tape.grad(A).end());
    out.insert(out.end(), tape.grad(B).begin(), tape.grad(B).end());
    return out;
  };
  auto r1 = run(), r2 = run();
  REQUIRE(r1.size() == r2.size());
  for (std::size_t i = 0; i < r1.size(); ++i) CHECK(r1[i] == r2[i]);  // bit-identical
}

TEST_CASE("multi-seed backward accumulates both cotangents") {
  // loss1 = sum(x^2), loss2 = sum(3x); seeding both equals d(loss1+loss2)/dx.
  Tape tape;
  NodeId x = tape.input(std::vector<float>{1.0f, -2.0f}, 1, 2);
  NodeId l1 = tape.sum(tape.square(x));
  NodeId l2 = tape.sum(tape.mul(x, tape.constant_scalar(3.0f)));
  std::vector<Tape::Seed> seeds;
  seeds.push_back({l1, {}});
  seeds.push_back({l2, {}});
  tape.backward(seeds);
  CHECK(tape.grad(x)[0] == doctest::Approx(2.0f * 1.0f + 3.0f));
  CHECK(tape.grad(x)[1] == doctest::Approx(2.0f * -2.0f + 3.0f));
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  ParamStore store;
  RandomStream rng(5);
  Parameter& p = store.create_normal("w", {4}, 1.0f, rng);
  Tensor before = p.value;
  auto params = store.all();
  adam_step(params, {.lr = 1e-3f}, 1);
  for (int i = 0; i < 4; ++i) CHECK(p.value.v[i] == before.v[i]);
}

TEST_CASE("adam: first step from zero moments is ~ -lr*sign(g)") {
  ParamStore store;
  Parameter& p = store.create("w", Tensor::row({0.5f, -0.25f}));
  p.grad.v = {0.37f, -1.4f};
  auto params = store.all();
  const float lr = 1e-2f;
  adam_step(params, {.lr = lr}, 1);
  CHECK(p.value.v[0] == doctest::Approx(0.5f - lr).epsilon(1e-3));
  CHECK(p.value.v[1] == doctest::Approx(-0.25f + lr).epsilon(1e-3));
}

TEST_CASE("adam: constant gradient step magnitude approaches lr") {
  // Iterating the recursion with g = 0.8: bias-corrected m/sqrt(v) -> 1.
  ParamStore store;
  Parameter& p = store.create("w", Tensor::scalar(0.0f));
  auto params = store.all();
  const float lr = 1e-3f;
  float prev = p.value.v[0];
  float step = 0.0f;
  for (int t = 1; t <= 400; ++t) {
    p.grad.v[0] = 0.8f;
    adam_step(params, {.lr = lr}, t);
    step = prev - p.value.v[0];
    prev = p.value.v[0];
  }
  CHECK(step == doctest::Approx(lr).epsilon(0.01));
}

TEST_CASE("adam: non-finite gradient names the parameter") {
  ParamStore store;
  Parameter& p = store.create("enc.bad", Tensor::scalar(0.0f));
  p.grad.v[0] = std::numeric_limits<float>::quiet_NaN();
  auto params = store.all();
  try {
    adam_step(params, {}, 1);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("enc.bad") != std::string::npos);
  }
}

TEST_CASE("checkpoint round-trip is bit-exact") {
  ParamStore store;
  RandomStream rng(17);
  store.create_normal("enc.conv0.w", {27, 16}, 0.3f, rng);
  store.create_normal("field.trunk0.b", {32}, 0.1f, rng);
  store.create("meta.scalar", Tensor::scalar(-1.25e-7f));

  auto path = std::filesystem::temp_directory_path() / "nerfdyn_ckpt_test.bin";
  save_checkpoint(path, store);

  ParamStore loaded;
  load_checkpoint(path, loaded);
  REQUIRE(loaded.size() == store.size());
  for (Parameter* p : store.all()) {
    Parameter* q = loaded.find(p->name);
    REQUIRE(q != nullptr);
    REQUIRE(q->value.shape == p->value.shape);
    for (std::size_t i = 0; i < p->value.v.size(); ++i) CHECK(q->value.v[i] == p->value.v[i]);
  }

  // Saving the loaded store reproduces the file byte for byte.
  auto path2 = std::filesystem::temp_directory_path() / "nerfdyn_ckpt_test2.bin";
  save_checkpoint(path2, loaded);
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  std::vector<char> b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::vector<char> b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(b1 == b2);
  std::filesystem::remove(path);
  std::filesystem::remove(path2);
}

TEST_CASE("param leaves reduce gradients into the store") {
  ParamStore store;
  Parameter& w = store.create("w", Tensor::row({2.0f, -1.0f}));
  Tape tape;
  NodeId W = tape.param(w);
  NodeId loss = tape.sum(tape.square(W));
  tape.backward(loss);
  tape.accumulate_param_grads(0.5f);
  CHECK(w.grad.v[0] == doctest::Approx(2.0f));   // 0.5 * 2*2
  CHECK(w.grad.v[1] == doctest::Approx(-1.0f));
}

// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "nerfgan/rng.hpp"
#include "nerfgan/tape.hpp"
#include "nerfgan/tape_conv.hpp"
#include "support/gradcheck.hpp"

using namespace nerfgan;
using nerfgan::testing::check_gradients;

namespace {

Tensor<double> random_tensor(std::vector<int> shape, RngStream& rng, double lo = -1, double hi = 1) {
  Tensor<double> t(std::move(shape));
  for (std::int64_t i = 0; i < t.numel(); ++i) t.data[i] = rng.uniform(lo, hi);
  return t;
}

// Checks d(scalar output)/d(every input element) against finite differences.
// The builder appends the scalar root Var to the passed vector and returns
// its value.
void check_op(const std::function<double(Tape<double>&, std::vector<Tape<double>::Var>&)>& build,
              std::vector<Tensor<double>> inputs, double tol = 1e-6) {
  auto eval = [&]() {
    Tape<double> tape;
    std::vector<Tape<double>::Var> vars;
    for (auto& t : inputs) vars.push_back(tape.leaf(t, false));
    return build(tape, vars);
  };

  Tape<double> tape;
  std::vector<Tape<double>::Var> vars;
  for (auto& t : inputs) vars.push_back(tape.leaf(t, true));
  const std::vector<Tape<double>::Var> leaves = vars;
  (void)build(tape, vars);
  tape.backward(vars.back());

  std::vector<Tensor<double>> grads(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i)
    grads[i] = tape.has_grad(leaves[i]) ? tape.grad(leaves[i]) : Tensor<double>(inputs[i].shape);

  std::vector<std::pair<std::string, Tensor<double>*>> slots;
  for (std::size_t i = 0; i < inputs.size(); ++i)
    slots.emplace_back("in" + std::to_string(i), &inputs[i]);
  auto analytic = [&](const std::string& name) -> const Tensor<double>& {
    return grads[static_cast<std::size_t>(std::stoi(name.substr(2)))];
  };
  auto res = check_gradients(eval, slots, analytic);
  INFO("worst: ", res.worst);
  CHECK(res.max_rel_err < tol);
  CHECK(res.checked > 0);
}

}  // namespace

TEST_CASE("rng: determinism and serialization") {
  RngStream a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  RngStream c(7);
  c.uniform01();
  c.normal();
  const std::string s = c.serialize();
  RngStream d = RngStream::deserialize(s);
  CHECK(c == d);
  for (int i = 0; i < 10; ++i) CHECK(c.next_u64() == d.next_u64());

  CHECK_THROWS(RngStream::deserialize("nonsense"));
}

TEST_CASE("rng: uniform support and rough moments") {
  RngStream rng(3);
  double sum = 0, sumsq = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform(-1, 1);
    CHECK(u >= -1);
    CHECK(u < 1);
    sum += u;
    sumsq += u * u;
  }
  CHECK(std::abs(sum / n) < 3.0 / std::sqrt(3.0 * n));  // 3*stderr of U(-1,1)
  CHECK(std::abs(sumsq / n - 1.0 / 3) < 0.01);
}

TEST_CASE("rng: derived streams differ from parent and are stable") {
  const RngStream parent(5);
  RngStream d1 = parent.derive(1);
  RngStream d2 = parent.derive(2);
  RngStream d1b = parent.derive(1);
  CHECK(d1.next_u64() != d2.next_u64());
  RngStream d1c = parent.derive(1);
  CHECK(d1b.next_u64() == d1c.next_u64());
}

TEST_CASE("tape: elementwise op gradients match finite differences") {
  RngStream rng(11);
  auto t = [&](std::vector<int> s) { return random_tensor(std::move(s), rng, -0.9, 0.9); };

  // Each builder pushes its root onto the passed vector and returns the value.
  auto scalarize = [](Tape<double>& tp, Tape<double>::Var v) { return tp.mean_all(tp.square(v)); };

  auto run = [&](auto op, std::vector<Tensor<double>> inputs, double tol = 1e-6) {
    check_op(
        [&](Tape<double>& tp, std::vector<Tape<double>::Var>& vars) {
          auto out = op(tp, vars);
          auto root = scalarize(tp, out);
          vars.push_back(root);
          return tp.val(root).data[0];
        },
        std::move(inputs), tol);
  };

  run([](Tape<double>& tp, auto& v) { return tp.add(v[0], v[1]); }, {t({3, 4}), t({3, 4})});
  run([](Tape<double>& tp, auto& v) { return tp.sub(v[0], v[1]); }, {t({3, 4}), t({3, 4})});
  run([](Tape<double>& tp, auto& v) { return tp.mul(v[0], v[1]); }, {t({3, 4}), t({3, 4})});
  run([](Tape<double>& tp, auto& v) { return tp.div(v[0], tp.add_scalar(tp.square(v[1]), 0.5)); },
      {t({3, 4}), t({3, 4})});
  run([](Tape<double>& tp, auto& v) { return tp.affine(v[0], 2.5, -0.3); }, {t({2, 5})});
  run([](Tape<double>& tp, auto& v) { return tp.sin_(v[0]); }, {t({2, 5})});
  run([](Tape<double>& tp, auto& v) { return tp.cos_(v[0]); }, {t({2, 5})});
  run([](Tape<double>& tp, auto& v) { return tp.exp_(v[0]); }, {t({2, 5})});
  run([](Tape<double>& tp, auto& v) { return tp.tanh_(v[0]); }, {t({2, 5})});
  run([](Tape<double>& tp, auto& v) { return tp.sigmoid(v[0]); }, {t({2, 5})});
  run([](Tape<double>& tp, auto& v) { return tp.softplus(v[0]); }, {t({2, 5})});
  run([](Tape<double>& tp, auto& v) { return tp.square(v[0]); }, {t({2, 5})});
  run([](Tape<double>& tp, auto& v) { return tp.rsqrt(tp.add_scalar(tp.square(v[0]), 0.7)); },
      {t({2, 5})});
  // leaky_relu has a kink at 0; keep samples away from it.
  run([](Tape<double>& tp, auto& v) { return tp.leaky_relu(tp.add_scalar(v[0], 1.5), 0.2); },
      {t({2, 5})});
  run([](Tape<double>& tp, auto& v) { return tp.leaky_relu(tp.add_scalar(v[0], -1.5), 0.2); },
      {t({2, 5})});
}

TEST_CASE("tape: linear algebra and broadcast gradients") {
  RngStream rng(13);
  auto t = [&](std::vector<int> s) { return random_tensor(std::move(s), rng); };
  auto run = [&](auto op, std::vector<Tensor<double>> inputs, double tol = 1e-6) {
    check_op(
        [&](Tape<double>& tp, std::vector<Tape<double>::Var>& vars) {
          auto out = op(tp, vars);
          auto root = tp.mean_all(tp.square(out));
          vars.push_back(root);
          return tp.val(root).data[0];
        },
        std::move(inputs), tol);
  };

  run([](Tape<double>& tp, auto& v) { return tp.linear(v[0], v[1], v[2]); },
      {t({4, 3}), t({5, 3}), t({5})});
  run([](Tape<double>& tp, auto& v) { return tp.matmul(v[0], v[1]); }, {t({3, 4}), t({4, 2})});
  run([](Tape<double>& tp, auto& v) { return tp.transpose(v[0]); }, {t({3, 4})});
  run([](Tape<double>& tp, auto& v) { return tp.film(v[0], v[1], v[2], 3); },
      {t({6, 4}), t({2, 4}), t({2, 4})});
  run([](Tape<double>& tp, auto& v) { return tp.row_tile(v[0], 5); }, {t({1, 4})});
  run([](Tape<double>& tp, auto& v) { return tp.mul_rowvec(v[0], v[1]); }, {t({4, 3}), t({1, 3})});
  run([](Tape<double>& tp, auto& v) { return tp.add_rowvec(v[0], v[1]); }, {t({4, 3}), t({1, 3})});
  run([](Tape<double>& tp, auto& v) { return tp.mul_colvec(v[0], v[1]); }, {t({4, 3}), t({4, 1})});
  run([](Tape<double>& tp, auto& v) { return tp.concat_cols(v[0], v[1]); }, {t({3, 2}), t({3, 4})});
  run([](Tape<double>& tp, auto& v) { return tp.slice_cols(v[0], 1, 3); }, {t({3, 5})});
  run([](Tape<double>& tp, auto& v) { return tp.slice_rows(v[0], 0, 2); }, {t({5, 3})});
  run([](Tape<double>& tp, auto& v) { return tp.stack({v[0], v[1], v[2]}); },
      {t({2, 3}), t({2, 3}), t({2, 3})});
  run([](Tape<double>& tp, auto& v) { return tp.sum_rows(v[0]); }, {t({4, 3})});
  run([](Tape<double>& tp, auto& v) { return tp.reshape(v[0], {2, 6}); }, {t({3, 4})});
}

TEST_CASE("tape: conv, pooling and depthwise gradients") {
  RngStream rng(17);
  auto t = [&](std::vector<int> s) { return random_tensor(std::move(s), rng); };
  auto run = [&](auto op, std::vector<Tensor<double>> inputs, double tol = 1e-6) {
    check_op(
        [&](Tape<double>& tp, std::vector<Tape<double>::Var>& vars) {
          auto out = op(tp, vars);
          auto root = tp.mean_all(tp.square(out));
          vars.push_back(root);
          return tp.val(root).data[0];
        },
        std::move(inputs), tol);
  };

  run([](Tape<double>& tp, auto& v) { return conv2d(tp, v[0], v[1], v[2], 3, 3, 2, 1); },
      {t({2, 2, 6, 6}), t({3, 2 * 9}), t({3})});
  run([](Tape<double>& tp, auto& v) { return conv2d(tp, v[0], v[1], v[2], 3, 3, 1, 1); },
      {t({1, 2, 5, 5}), t({2, 2 * 9}), t({2})});
  run([](Tape<double>& tp, auto& v) { return avg_pool2(tp, v[0]); }, {t({2, 3, 4, 4})});
  run([](Tape<double>& tp, auto& v) {
        const std::vector<double> k = {0.1, 0.2, 0.1, 0.2, 0.3, 0.2, 0.1, 0.2, 0.1};
        return depthwise_valid_conv(tp, v[0], k, 3, 3);
      },
      {t({1, 2, 6, 6})});
}

TEST_CASE("tape: gradient accumulates when a leaf is used twice") {
  Tensor<double> x({2, 2});
  x.data << 0.3, -0.2, 0.5, 0.1;
  Tape<double> tape;
  auto v = tape.leaf(x, true);
  auto y = tape.mean_all(tape.add(tape.square(v), tape.mul_scalar(v, 3.0)));
  tape.backward(y);
  for (int i = 0; i < 4; ++i)
    CHECK(tape.grad(v).data[i] == doctest::Approx((2 * x.data[i] + 3.0) / 4).epsilon(1e-12));
}

TEST_CASE("tape: backward requires scalar root") {
  Tape<double> tape;
  auto v = tape.leaf(Tensor<double>({2, 2}), true);
  CHECK_THROWS(tape.backward(v));
}

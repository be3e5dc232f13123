#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "nodegae/diffcore/adam.hpp"
#include "nodegae/diffcore/checkpoint.hpp"
#include "nodegae/diffcore/ops.hpp"
#include "nodegae/errors.hpp"
#include "support/oracles.hpp"
#include "support/op_cases.hpp"

using namespace nodegae;

namespace {

std::vector<double> values(const DiffTensor& t) { return {t.data().begin(), t.data().end()}; }
std::vector<double> grads(const DiffTensor& t) { return {t.grad().begin(), t.grad().end()}; }

}  // namespace

TEST_CASE("tensor construction validates shapes") {
  CHECK_THROWS_AS(DiffTensor::from({2, 2}, {1, 2, 3}), DimensionError);
  CHECK_THROWS_AS(DiffTensor::zeros({0, 3}), DimensionError);
  CHECK_THROWS_AS(DiffTensor::zeros({}), DimensionError);
  auto t = DiffTensor::full({2, 3}, 1.5);
  CHECK(t.numel() == 6);
  CHECK(t.rank() == 2);
  CHECK_FALSE(t.has_grad());
}

TEST_CASE("matmul with identity returns the input") {
  auto a = DiffTensor::from({2, 2}, {1, 2, 3, 4});
  auto eye = DiffTensor::from({2, 2}, {1, 0, 0, 1});
  CHECK(values(matmul(a, eye)) == std::vector<double>{1, 2, 3, 4});
}

TEST_CASE("shape mismatch names the op and shapes") {
  auto a = DiffTensor::zeros({2, 3}), b = DiffTensor::zeros({2, 3});
  try {
    matmul(a, b);
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("matmul") != std::string::npos);
    CHECK(msg.find("[2,3]") != std::string::npos);
  }
  CHECK_THROWS_AS(add(DiffTensor::zeros({2, 3}), DiffTensor::zeros({4})), DimensionError);
  CHECK_THROWS_AS(reshape(a, {4, 2}), DimensionError);
}

TEST_CASE("softmax of equal logits is uniform") {
  auto s = softmax_lastdim(DiffTensor::from({3}, {0, 0, 0}));
  for (double v : s.data()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("cross entropy of uniform logits is ln V") {
  for (std::size_t vocab : {2u, 7u, 2048u}) {
    auto logits = DiffTensor::full({3, vocab}, 0.25);
    std::vector<std::int64_t> t{0, static_cast<std::int64_t>(vocab - 1), 1};
    CHECK(std::abs(cross_entropy_logits(logits, t).item() - std::log(static_cast<double>(vocab))) < 1e-12);
  }
}

TEST_CASE("cross entropy matches direct NLL and honours ignore_index") {
  Rng rng(3);
  auto logits = oracle::random_tensor({5, 6}, rng, false);
  std::vector<std::int64_t> t{2, -1, 5, 0, -1};
  double expected = 0.0;
  for (std::size_t r : {0u, 2u, 3u}) {
    std::vector<double> row(logits.data().begin() + r * 6, logits.data().begin() + r * 6 + 6);
    expected += oracle::direct_nll(row, static_cast<std::size_t>(t[r]));
  }
  CHECK(cross_entropy_logits(logits, t, -1).item() == doctest::Approx(expected / 3.0).epsilon(1e-12));
  std::vector<std::int64_t> all_ignored{-1, -1, -1, -1, -1};
  CHECK_THROWS_AS(cross_entropy_logits(logits, all_ignored, -1), ContractError);
}

TEST_CASE("backward examples") {
  auto w = DiffTensor::from({3}, {1, 2, 3}, true);
  sum_all(mul(w, w)).backward();
  CHECK(grads(w) == std::vector<double>{2, 4, 6});

  auto r = DiffTensor::from({2}, {-1, 1}, true);
  mean_all(relu(r)).backward();
  CHECK(grads(r) == std::vector<double>{0, 0.5});
}

TEST_CASE("backward rejects non-scalar and unrecorded losses") {
  auto w = DiffTensor::from({3}, {1, 2, 3}, true);
  CHECK_THROWS_AS(mul(w, w).backward(), ContractError);
  CHECK_THROWS_AS(DiffTensor::scalar(1.0).backward(), ContractError);
}

TEST_CASE("a tensor used twice accumulates both contributions") {
  auto x = DiffTensor::from({2}, {3, -2}, true);
  sum_all(add(mul(x, x), scale(x, 5.0))).backward();
  CHECK(grads(x) == std::vector<double>{11, 1});
}

TEST_CASE("two backward sweeps double every leaf gradient exactly") {
  Rng rng(11);
  auto a = oracle::random_tensor({3, 4}, rng), b = oracle::random_tensor({4, 2}, rng);
  auto loss = sum_all(gelu(matmul(layernorm_lastdim(a), b)));
  loss.backward();
  const auto ga = grads(a), gb = grads(b);
  loss.backward();
  for (std::size_t i = 0; i < ga.size(); ++i) CHECK(a.grad()[i] == 2.0 * ga[i]);
  for (std::size_t i = 0; i < gb.size(); ++i) CHECK(b.grad()[i] == 2.0 * gb[i]);
}

TEST_CASE("every requires_grad tensor reachable from the loss gets a gradient") {
  Rng rng(5);
  auto a = oracle::random_tensor({2, 3}, rng), b = oracle::random_tensor({3}, rng), c = oracle::random_tensor({2, 3}, rng);
  auto unused = oracle::random_tensor({2}, rng);
  const std::vector<DiffTensor> parts{a, c};
  sum_all(softmax_lastdim(add(concat(parts, 0), b))).backward();
  CHECK(a.has_grad());
  CHECK(b.has_grad());
  CHECK(c.has_grad());
  CHECK_FALSE(unused.has_grad());
}

TEST_CASE("no-grad guard suppresses recording") {
  auto w = DiffTensor::from({2}, {1, 2}, true);
  {
    NoGradGuard guard;
    CHECK_FALSE(grad_recording_enabled());
    auto y = sum_all(mul(w, w));
    CHECK_THROWS_AS(y.backward(), ContractError);
  }
  CHECK(grad_recording_enabled());
}

TEST_CASE("every op passes finite-difference checks over 10 seeds") {
  std::set<std::string> covered;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    for (auto& c : oracle::all_op_cases(seed)) {
      std::size_t n = 0;
      for (const auto& p : c.params) n += p.numel();
      CHECK(n <= 64);
      const auto r = oracle::finite_difference_check(c.loss, c.params, 64, seed);
      INFO(c.name << " seed " << seed);
      CHECK(r.max_rel_error < 1e-4);
      covered.insert(c.name.substr(0, c.name.find('/')));
    }
  }
  for (OpKind k : all_op_kinds()) CHECK(covered.count(std::string(op_kind_name(k))) == 1);
}

TEST_CASE("softmax rows sum to one and layernorm rows are standardized") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(seed);
    auto x = oracle::random_tensor({4, 7}, rng, false);
    for (std::size_t i = 0; i < x.numel(); ++i) x.mutable_data()[i] *= 10.0;
    auto s = softmax_lastdim(x);
    auto l = layernorm_lastdim(x);
    for (std::size_t r = 0; r < 4; ++r) {
      double sum = 0, mean = 0, var = 0;
      for (std::size_t j = 0; j < 7; ++j) {
        sum += s.at(r * 7 + j);
        mean += l.at(r * 7 + j) / 7.0;
      }
      for (std::size_t j = 0; j < 7; ++j) var += (l.at(r * 7 + j) - mean) * (l.at(r * 7 + j) - mean) / 7.0;
      CHECK(std::abs(sum - 1.0) < 1e-9);
      CHECK(std::abs(mean) < 1e-7);
      CHECK(std::abs(var - 1.0) < 1e-6);
    }
  }
}

TEST_CASE("forward values are bitwise deterministic") {
  auto run = [] {
    Rng rng(42);
    auto a = oracle::random_tensor({3, 4}, rng), b = oracle::random_tensor({4, 4}, rng);
    return values(softmax_lastdim(gelu(matmul(layernorm_lastdim(a), b))));
  };
  CHECK(run() == run());
}

TEST_CASE("l2 normalize rejects a zero row") {
  CHECK_THROWS_AS(l2_normalize_lastdim(DiffTensor::zeros({2, 3})), ContractError);
}

TEST_CASE("spmm matches dense product") {
  const CsrMatrix m = CsrMatrix::from_triplets(2, 3, {0, 1, 1, 0}, {2, 0, 0, 1}, {1.5, 2.0, 1.0, -1.0});
  CHECK(m.at(1, 0) == 3.0);
  auto d = DiffTensor::from({3, 2}, {1, 2, 3, 4, 5, 6});
  auto y = spmm(m, d);
  const auto dense = m.to_dense();
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      double e = 0;
      for (std::size_t k = 0; k < 3; ++k) e += dense[i * 3 + k] * d.at(k * 2 + j);
      CHECK(y.at(i * 2 + j) == doctest::Approx(e).epsilon(1e-15));
    }
  }
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  auto p = DiffTensor::from({3}, {1, -2, 3}, true);
  p.zero_grad();
  AdamState st(AdamConfig{.base_lr = 0.1});
  std::vector<DiffTensor> ps{p};
  adam_step(ps, st);
  CHECK(values(p) == std::vector<double>{1, -2, 3});
  CHECK(st.step_count == 1);
}

TEST_CASE("adam: warmup scales the first step") {
  AdamState st(AdamConfig{.base_lr = 1e-4, .warmup_steps = 10000});
  CHECK(st.lr_at(1) == doctest::Approx(1e-8).epsilon(1e-15));
  CHECK(st.lr_at(10000) == 1e-4);
  CHECK(st.lr_at(20000) == 1e-4);
  AdamState flat(AdamConfig{.base_lr = 3e-4});
  CHECK(flat.effective_lr() == 3e-4);
}

TEST_CASE("adam: one hand-computed step") {
  auto p = DiffTensor::from({1}, {1.0}, true);
  p.mutable_grad()[0] = 1.0;
  AdamState st(AdamConfig{.base_lr = 0.1, .clip_norm = 0.0});
  std::vector<DiffTensor> ps{p};
  adam_step(ps, st);
  // m = 0.1, v = 0.001, m_hat = 1, v_hat = 1
  const double m_hat = (0.1 * 1.0) / (1.0 - 0.9);
  const double v_hat = (0.001 * 1.0) / (1.0 - 0.999);
  CHECK(p.at(0) == doctest::Approx(1.0 - 0.1 * m_hat / (std::sqrt(v_hat) + 1e-8)).epsilon(1e-15));
  CHECK(p.grad()[0] == 0.0);
}

TEST_CASE("adam: global norm clipping and missing gradient") {
  auto p = DiffTensor::from({2}, {0.0, 0.0}, true);
  p.mutable_grad()[0] = 3.0;
  p.mutable_grad()[1] = 4.0;
  AdamState st(AdamConfig{.base_lr = 0.1, .clip_norm = 1.0});
  std::vector<DiffTensor> ps{p};
  CHECK(adam_step(ps, st) == doctest::Approx(5.0));
  // After clipping, first moments carry the clipped gradient.
  CHECK(st.first_moment[0][0] == doctest::Approx(0.1 * 0.6));
  auto q = DiffTensor::from({1}, {0.0}, true);
  std::vector<DiffTensor> qs{q};
  AdamState st2;
  CHECK_THROWS_AS(adam_step(qs, st2), ContractError);
}

TEST_CASE("checkpoint round-trips bitwise") {
  Rng rng(9);
  Checkpoint c;
  c.metadata["k"] = "v with spaces";
  c.put("w", oracle::random_tensor({3, 5}, rng, false));
  c.put("b", DiffTensor::from({1}, {-0.0}));
  const auto path = std::filesystem::temp_directory_path() / "nodegae_ckpt_test.bin";
  save_checkpoint(path, c);
  const Checkpoint back = load_checkpoint(path);
  CHECK(back == c);
  auto w = DiffTensor::zeros({3, 5});
  back.restore("w", w);
  CHECK(values(w) == c.tensors.at("w").data);
  auto wrong = DiffTensor::zeros({5, 3});
  CHECK_THROWS_AS(back.restore("w", wrong), DimensionError);
  std::filesystem::remove(path);
}

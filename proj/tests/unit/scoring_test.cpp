#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "helpers.hpp"
#include "visprompt/scoring.hpp"

using namespace visprompt;
using testing::code_of;

TEST_CASE("similarity vector") {
  VisualPrompt p;
  p.vectors = {Embedding{0, 1, 0}, Embedding{0, 0, 1}};
  CHECK(similarity_vector(Embedding{1, 0, 0}, p) == std::vector<double>{0.0, 0.0});
  VisualPrompt one;
  one.vectors = {Embedding{1, 2, 3}};
  CHECK(similarity_vector(Embedding{1, 1, 1}, one) == std::vector<double>{6.0});
  CHECK(code_of([&] { similarity_vector(Embedding{1, 1}, one); }) == ErrorCode::DimensionMismatch);

  Rng rng(1);
  for (int t = 0; t < 200; ++t) {
    const std::size_t dim = 1 + rng.uniform_index(16);
    VisualPrompt q;
    for (std::size_t k = 0, n = 1 + rng.uniform_index(10); k < n; ++k) q.vectors.push_back(testing::random_embedding(dim, rng));
    const Embedding f = testing::random_embedding(dim, rng);
    const auto w = similarity_vector(f, q);
    for (std::size_t k = 0; k < q.size(); ++k) {
      double ref = 0.0;
      for (std::size_t d = 0; d < dim; ++d) ref += f[d] * q.vectors[k][d];
      CHECK(std::abs(w[k] - ref) <= 1e-12);
    }
  }
}

TEST_CASE("gumbel score basics") {
  Rng rng(2);
  for (double tau : {0.01, 1.0, 50.0}) {
    const GumbelScore s = score_train(std::vector<double>{-1.25}, tau, rng);
    CHECK(s.score == -1.25);
    CHECK(s.weights == std::vector<double>{1.0});
  }
  CHECK(code_of([&] { score_train(std::vector<double>{1.0}, 0.0, rng); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { score_train(std::vector<double>{}, 1.0, rng); }) == ErrorCode::EmptyInput);

  for (int t = 0; t < 2000; ++t) {
    std::vector<double> w(1 + rng.uniform_index(12));
    for (auto& x : w) x = rng.normal(0.0, 4.0);
    const GumbelScore s = score_train(w, std::exp(rng.normal()), rng);
    CHECK(s.score >= *std::min_element(w.begin(), w.end()));
    CHECK(s.score <= *std::max_element(w.begin(), w.end()));
    CHECK(std::abs(std::accumulate(s.weights.begin(), s.weights.end(), 0.0) - 1.0) <= 1e-12);
    for (double x : s.weights) CHECK(x >= 0.0);
  }
}

TEST_CASE("gumbel score approaches the max at low temperature") {
  Rng rng(3);
  std::vector<double> dev;
  // As tau -> 0 the soft weights pick the arg-max of w + g, which is the
  // arg-max of w with probability softmax(w)_max, here about 0.58.
  const std::vector<double> w = {-2.0, 1.5, -1.0, 1.0};
  for (int t = 0; t < 1000; ++t) dev.push_back(std::abs(score_train(w, 1e-3, rng).score - 1.5));
  std::sort(dev.begin(), dev.end());
  CHECK(dev[500] < 1e-2);
}

TEST_CASE("eval score is the max") {
  CHECK(score_eval(std::vector<double>{3, 1, 2}) == 3.0);
  CHECK(score_eval(std::vector<double>{-4}) == -4.0);
  CHECK(code_of([] { score_eval(std::vector<double>{}); }) == ErrorCode::EmptyInput);
  Rng rng(4);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> w(1 + rng.uniform_index(20));
    for (auto& x : w) x = rng.normal();
    double ref = w[0];
    for (double x : w) ref = x > ref ? x : ref;
    CHECK(score_eval(w) == ref);
  }
}

TEST_CASE("gumbel score gradient matches finite differences") {
  Rng rng(5);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + rng.uniform_index(8);
    std::vector<double> w(n);
    std::vector<double> g(n);
    for (auto& x : w) x = rng.normal();
    for (auto& x : g) x = rng.gumbel();
    const double tau = 0.2 + 2.0 * rng.uniform();
    const GumbelScore base = gumbel_soft_score(w, g, tau);
    const auto grad = gumbel_score_gradient(w, base.weights, tau);
    for (std::size_t m = 0; m < n; ++m) {
      auto plus = w;
      auto minus = w;
      plus[m] += 1e-6;
      minus[m] -= 1e-6;
      const double fd = (gumbel_soft_score(plus, g, tau).score - gumbel_soft_score(minus, g, tau).score) / 2e-6;
      CHECK(std::abs(fd - grad[m]) <= 1e-6 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("logistic is stable at extremes") {
  CHECK(logistic(0.0) == 0.5);
  CHECK(logistic(800.0) == 1.0);
  CHECK(logistic(-800.0) == 0.0);
  CHECK(logistic(2.0) + logistic(-2.0) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("detector forward") {
  ImageSample img;
  img.id = 5;
  const Embedding r = Embedding{0.6, 0.8};
  img.proposals.push_back({r, Box{0.1, 0.2, 0.3, 0.4}, std::nullopt});
  img.proposals.push_back({Embedding{0, 0}, Box{0.5, 0.5, 0.9, 0.9}, std::nullopt});

  VisualPrompt p;
  p.category_id = 1;
  p.vectors = {Embedding{1, 0}, r, Embedding{0, -1}};
  const Embedding neg{0.0, 1.0};
  const std::vector<CategorySlot> slots = {visual_slot(p), negative_slot(neg)};

  const DetectionResult eval = detector_forward(img, slots, ScoreMode::Eval, 1.0, nullptr);
  CHECK(eval.image_id == 5);
  REQUIRE(eval.proposals.size() == 2);
  CHECK(eval.proposals[0].box == img.proposals[0].box);
  CHECK(eval.proposals[0].slots[0].score >= 1.0 - 1e-15);
  CHECK(eval.proposals[0].slots[1].score == 0.8);
  for (const auto& s : eval.proposals[1].slots) {
    CHECK(s.score == 0.0);
    CHECK(s.probability == 0.5);
  }

  Rng a(9);
  Rng b(9);
  const DetectionResult t1 = detector_forward(img, slots, ScoreMode::Train, 1.0, &a);
  const DetectionResult t2 = detector_forward(img, slots, ScoreMode::Train, 1.0, &b);
  CHECK(t1.proposals[0].slots[0].score == t2.proposals[0].slots[0].score);
  CHECK(t1.proposals[0].slots[0].weights.size() == 3);
  CHECK(t1.proposals[0].slots[1].score == 0.8);  // single-row slot

  CHECK(code_of([&] { detector_forward(img, {}, ScoreMode::Eval, 1.0, nullptr); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { detector_forward(img, slots, ScoreMode::Train, 1.0, nullptr); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("extra negative slots never change visual prompt scores") {
  Rng rng(10);
  ImageSample img;
  for (int i = 0; i < 5; ++i) img.proposals.push_back({testing::random_embedding(6, rng), Box{0, 0, 1, 1}, std::nullopt});
  VisualPrompt p;
  for (int k = 0; k < 4; ++k) p.vectors.push_back(testing::random_embedding(6, rng));
  std::vector<Embedding> negs;
  for (int k = 0; k < 3; ++k) negs.push_back(testing::random_embedding(6, rng));

  std::vector<CategorySlot> few = {visual_slot(p)};
  std::vector<CategorySlot> many = few;
  for (const auto& n : negs) many.push_back(negative_slot(n));
  const auto a = detector_forward(img, few, ScoreMode::Eval, 1.0, nullptr);
  const auto b = detector_forward(img, many, ScoreMode::Eval, 1.0, nullptr);
  for (std::size_t i = 0; i < img.proposals.size(); ++i) {
    CHECK(a.proposals[i].slots[0].score == b.proposals[i].slots[0].score);
  }
}

#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "visprompt/prompt_builder.hpp"

using namespace visprompt;
using testing::code_of;

namespace {

VisualPrompt prompt_of(std::vector<Embedding> rows) {
  VisualPrompt p;
  p.params_used.n_vectors = rows.size();
  p.vectors = std::move(rows);
  return p;
}

VisualPrompt random_prompt(std::size_t n, std::size_t dim, Rng& rng) {
  std::vector<Embedding> rows;
  for (std::size_t i = 0; i < n; ++i) rows.push_back(testing::random_embedding(dim, rng));
  return prompt_of(std::move(rows));
}

}  // namespace

TEST_CASE("init from a degenerate prior gives copies of the mean") {
  Rng rng(1);
  const GaussianPrior prior{Embedding{1, -1, 0.5}, Embedding(3, 0.0)};
  const VisualPrompt p = init_visual_prompt(prior, 7, 3, rng);
  CHECK(p.size() == 7);
  CHECK(p.category_id == 3);
  CHECK(p.params_used.n_vectors == 7);
  for (const auto& row : p.vectors) CHECK(row == prior.mu);
  CHECK(code_of([&] { init_visual_prompt(prior, 0, 3, rng); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("init is seed-deterministic") {
  const GaussianPrior prior{Embedding(4, 0.0), Embedding(4, 1.0)};
  Rng a(77);
  Rng b(77);
  CHECK(init_visual_prompt(prior, 20, 0, a) == init_visual_prompt(prior, 20, 0, b));
}

TEST_CASE("init row statistics match a standard normal prior") {
  const GaussianPrior prior{Embedding(8, 0.0), Embedding(8, 1.0)};
  Rng rng(2);
  std::vector<double> sum(8, 0.0);
  std::size_t count = 0;
  for (int t = 0; t < 1000; ++t) {
    const VisualPrompt p = init_visual_prompt(prior, 20, 0, rng);
    for (const auto& row : p.vectors) {
      for (std::size_t d = 0; d < 8; ++d) sum[d] += row[d];
    }
    count += 20;
  }
  for (double s : sum) CHECK(std::abs(s / count) < 0.15);
}

TEST_CASE("stochastic similarity analytic fusion") {
  // Two rows, a = 0.6, fusion forced: before mean correction row 0 becomes
  // 0.6*(1,0) + 0.8*(0,1).
  const VisualPrompt in = prompt_of({Embedding{1, 0}, Embedding{0, 1}});
  Rng rng(3);
  const VisualPrompt fused = fuse_rows(in, 0.6, 1.0, rng);
  CHECK(fused.vectors[0][0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(fused.vectors[0][1] == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(fused.vectors[1][0] == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(fused.vectors[1][1] == doctest::Approx(0.6).epsilon(1e-15));
}

TEST_CASE("stochastic similarity identities are exact") {
  Rng rng(4);
  for (int t = 0; t < 200; ++t) {
    const VisualPrompt in = random_prompt(1 + rng.uniform_index(20), 1 + rng.uniform_index(8), rng);
    CHECK(stochastic_similarity(in, 1.0, rng.uniform(), rng).vectors == in.vectors);
    CHECK(stochastic_similarity(in, rng.uniform(), 0.0, rng).vectors == in.vectors);
  }
  const VisualPrompt single = random_prompt(1, 5, rng);
  CHECK(stochastic_similarity(single, 0.3, 1.0, rng).vectors == single.vectors);
}

TEST_CASE("stochastic similarity preserves the per-dimension mean") {
  Rng rng(5);
  for (int t = 0; t < 500; ++t) {
    const VisualPrompt in = random_prompt(1 + rng.uniform_index(30), 1 + rng.uniform_index(10), rng);
    const VisualPrompt out = stochastic_similarity(in, rng.uniform(), rng.uniform(), rng);
    for (std::size_t d = 0; d < in.dim(); ++d) {
      long double before = 0.0L;
      long double after = 0.0L;
      for (std::size_t i = 0; i < in.size(); ++i) {
        before += in.vectors[i][d];
        after += out.vectors[i][d];
      }
      CHECK(std::abs(static_cast<double>((after - before) / in.size())) <= 1e-9);
    }
  }
}

TEST_CASE("stochastic similarity records parameters and validates them") {
  Rng rng(6);
  const VisualPrompt in = random_prompt(4, 3, rng);
  const VisualPrompt out = stochastic_similarity(in, 0.9, 0.25, rng);
  CHECK(out.params_used.independence == 0.9);
  CHECK(out.params_used.fusion_probability == 0.25);
  CHECK(out.params_used.n_vectors == 4);
  CHECK(code_of([&] { stochastic_similarity(in, 1.5, 0.5, rng); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { stochastic_similarity(in, -0.1, 0.5, rng); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { stochastic_similarity(in, 0.5, 2.0, rng); }) == ErrorCode::InvalidArgument);

  Rng a(8);
  Rng b(8);
  CHECK(stochastic_similarity(in, 0.5, 0.5, a) == stochastic_similarity(in, 0.5, 0.5, b));
}

TEST_CASE("donors come from the unfused rows") {
  // Three rows, every row fused with a = 0: each output row before the mean
  // shift is a copy of some original row other than itself.
  const VisualPrompt in = prompt_of({Embedding{1, 0, 0}, Embedding{0, 1, 0}, Embedding{0, 0, 1}});
  Rng rng(9);
  for (int t = 0; t < 100; ++t) {
    const VisualPrompt out = fuse_rows(in, 0.0, 1.0, rng);
    for (std::size_t i = 0; i < 3; ++i) {
      bool from_other = false;
      for (std::size_t j = 0; j < 3; ++j) from_other = from_other || (j != i && out.vectors[i] == in.vectors[j]);
      CHECK(from_other);
    }
  }
}

TEST_CASE("text init") {
  const Embedding text{0.3, -0.4, 1.2};
  const VisualPrompt one = text_init_prompt(text, 1, 2);
  CHECK(one.size() == 1);
  CHECK(one.vectors[0] == text);
  const VisualPrompt many = text_init_prompt(text, 20, 2);
  CHECK(many.size() == 20);
  for (const auto& row : many.vectors) CHECK(row == text);
  CHECK(code_of([&] { text_init_prompt(text, 0, 2); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("identical rows stay identical when every row fuses") {
  // Every row becomes (a + sqrt(1-a^2)) * text and the mean shift undoes the
  // scaling exactly up to rounding.
  const Embedding text{0.3, -0.4, 1.2, 0.05};
  Rng rng(10);
  for (double a : {0.0, 0.3, 0.6, 0.99}) {
    const VisualPrompt out = stochastic_similarity(text_init_prompt(text, 20, 0), a, 1.0, rng);
    for (const auto& row : out.vectors) {
      for (std::size_t d = 0; d < text.size(); ++d) CHECK(std::abs(row[d] - text[d]) <= 1e-9);
    }
  }
}

#pragma once

#include <doctest.h>

#include <functional>
#include <vector>

#include "visprompt/embedding.hpp"
#include "visprompt/error.hpp"
#include "visprompt/rng.hpp"

namespace testing {

// Code of the visprompt::Error thrown by f; fails the test if none is thrown.
inline visprompt::ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const visprompt::Error& e) {
    return e.code();
  }
  FAIL("expected visprompt::Error");
  return visprompt::ErrorCode::Io;
}

inline visprompt::Embedding random_embedding(std::size_t dim, visprompt::Rng& rng, double sd = 1.0) {
  std::vector<double> v(dim);
  for (auto& x : v) x = rng.normal(0.0, sd);
  return visprompt::Embedding(std::move(v));
}

}  // namespace testing

#pragma once

#include <cmath>
#include <numbers>

#include "doctest.h"
#include "ricci_lab/error.hpp"

#define CHECK_ERROR_CODE(expr, expected)                         \
  do {                                                           \
    bool thrown_ = false;                                        \
    try {                                                        \
      (void)(expr);                                              \
    } catch (const rlab::Error& e_) {                            \
      thrown_ = true;                                            \
      CHECK_MESSAGE(e_.code() == (expected), e_.what());         \
    }                                                            \
    CHECK_MESSAGE(thrown_, "expected rlab::Error from " #expr);  \
  } while (0)

namespace testing {
inline constexpr double kPi = std::numbers::pi;
inline constexpr double kVolCp1 = 4.0 * kPi;
inline constexpr double kVolF1 = 16.0 * kPi * kPi;
// Root of the endpoint condition of the closed-form F1 soliton profile (mpmath, 40 digits).
inline constexpr double kSolitonF1 = -0.527619519896962824848607;
}  // namespace testing

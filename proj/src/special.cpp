#include "restorl/special.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace restorl {

namespace {

// Lanczos g = 7, n = 9 coefficient set.
constexpr double kLanczos[9] = {
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
};

constexpr double kHalfLogTwoPi = 0.91893853320467274178;  // 0.5*ln(2*pi)

void require_positive(double x, const char* fn) {
  if (!(x > 0.0)) {
    throw std::domain_error(std::string(fn) + ": argument must be positive, got " +
                            std::to_string(x));
  }
}

}  // namespace

double log_gamma(double x) {
  require_positive(x, "log_gamma");
  // Recurrence keeps us out of the small-argument regime: lg(x) = lg(x+1) - ln(x).
  if (x < 0.5) {
    return log_gamma(x + 1.0) - std::log(x);
  }
  const double z = x - 1.0;
  double acc = kLanczos[0];
  for (int k = 1; k < 9; ++k) {
    acc += kLanczos[k] / (z + k);
  }
  const double t = z + 7.5;
  return kHalfLogTwoPi + (z + 0.5) * std::log(t) - t + std::log(acc);
}

double digamma(double x) {
  require_positive(x, "digamma");
  double shift = 0.0;
  while (x < 6.0) {
    shift -= 1.0 / x;
    x += 1.0;
  }
  // psi(x) ~ ln x - 1/(2x) - sum B_2n / (2n x^2n)
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  double series = 0.0;
  series += inv2 * (1.0 / 12.0);
  series -= inv2 * inv2 * (1.0 / 120.0);
  series += inv2 * inv2 * inv2 * (1.0 / 252.0);
  series -= inv2 * inv2 * inv2 * inv2 * (1.0 / 240.0);
  series += inv2 * inv2 * inv2 * inv2 * inv2 * (1.0 / 132.0);
  series -= inv2 * inv2 * inv2 * inv2 * inv2 * inv2 * (691.0 / 32760.0);
  return shift + std::log(x) - 0.5 * inv - series;
}

double trigamma(double x) {
  require_positive(x, "trigamma");
  double shift = 0.0;
  while (x < 6.0) {
    shift += 1.0 / (x * x);
    x += 1.0;
  }
  // psi'(x) ~ 1/x + 1/(2x^2) + sum B_2n / x^(2n+1)
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  double series = inv + 0.5 * inv2;
  double p = inv2 * inv;  // x^-3
  series += p * (1.0 / 6.0);
  p *= inv2;  // x^-5
  series -= p * (1.0 / 30.0);
  p *= inv2;  // x^-7
  series += p * (1.0 / 42.0);
  p *= inv2;  // x^-9
  series -= p * (1.0 / 30.0);
  p *= inv2;  // x^-11
  series += p * (5.0 / 66.0);
  return shift + series;
}

double log_beta(double a, double b) {
  return log_gamma(a) + log_gamma(b) - log_gamma(a + b);
}

}  // namespace restorl

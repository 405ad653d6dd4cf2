#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "restorl/policy.hpp"
#include "restorl/special.hpp"

using namespace restorl;

namespace {

// random head parameters kept well inside the softplus clamp band
PolicyParams random_policy(std::mt19937_64& rng, double scale = 0.6) {
  PolicyParams p{MlpHead::zeros(), MlpHead::zeros()};
  for (MlpHead* h : {&p.rate, &p.fuse}) {
    for (double& w : h->w1) w = oracle::uniform(rng, -scale, scale);
    for (double& b : h->b1) b = oracle::uniform(rng, -scale, scale);
    for (double& w : h->w2) w = oracle::uniform(rng, -scale, scale);
    for (double& b : h->b2) b = oracle::uniform(rng, 0.2, 1.5);
  }
  return p;
}

std::array<double, kFeatureDim> random_features(std::mt19937_64& rng) {
  std::array<double, kFeatureDim> f;
  for (double& v : f) v = oracle::uniform(rng, 0.0, 2.0);
  return f;
}

BetaHeadOutput random_output(std::mt19937_64& rng, double lo = 0.3, double hi = 8.0) {
  BetaHeadOutput out;
  for (int k = 0; k < kActionDim; ++k) {
    out.alpha[k] = oracle::uniform(rng, lo, hi);
    out.beta[k] = oracle::uniform(rng, lo, hi);
  }
  return out;
}

Action random_action(std::mt19937_64& rng) {
  return Action{oracle::uniform(rng, 0.05, 0.95), oracle::uniform(rng, 0.05, 0.95),
                oracle::uniform(rng, 0.05, 0.95), oracle::uniform(rng, 0.05, 0.95)};
}

BetaHeadOutput uniform_output() {
  BetaHeadOutput out;
  out.alpha.fill(1.0);
  out.beta.fill(1.0);
  return out;
}

// finite differences are only a valid oracle where the map is smooth at the
// probe scale: keep outputs away from the clamp and from the trigamma blowup
// near the parameter floor
void draw_gradcheck_config(std::mt19937_64& rng, PolicyParams* params,
                           std::array<double, kFeatureDim>* features) {
  while (true) {
    *params = random_policy(rng);
    *features = random_features(rng);
    const BetaHeadOutput out = head_forward(*params, *features);
    bool ok = true;
    for (int k = 0; k < kActionDim; ++k) {
      if (out.alpha[k] < 0.2 || out.alpha[k] > 45.0 || out.beta[k] < 0.2 ||
          out.beta[k] > 45.0) {
        ok = false;
      }
    }
    if (ok) return;
  }
}

}  // namespace

TEST_CASE("extract_features: constant gray") {
  const auto f = extract_features(Image(16, 16, 3, 0.5));
  CHECK(f[0] == doctest::Approx(0.5).epsilon(1e-12));   // mean luminance
  CHECK(f[1] == doctest::Approx(0.0).epsilon(1e-12));   // std
  CHECK(f[2] == doctest::Approx(0.0).epsilon(1e-12));   // |gx|
  CHECK(f[3] == doctest::Approx(0.0).epsilon(1e-12));   // |gy|
  CHECK(f[4] == doctest::Approx(1e-6).epsilon(1e-9));   // magnitude floor
  CHECK(f[5] == doctest::Approx(1.0).epsilon(1e-9));    // all energy at DC
  CHECK(f[6] == doctest::Approx(0.0).epsilon(1e-12));   // R-B gap
  CHECK(f[7] == doctest::Approx(0.0).epsilon(1e-12));   // channel spread
}

TEST_CASE("extract_features: vertical stripes excite |gx| only") {
  // period-4 stripes; period 2 would make the two Sobel side columns equal
  Image stripes(16, 16, 3);
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 16; ++x) {
      for (int c = 0; c < 3; ++c) stripes.at(y, x, c) = (x % 4 < 2) ? 1.0 : 0.0;
    }
  }
  const auto f = extract_features(stripes);
  CHECK(f[2] > 0.5);
  CHECK(f[3] == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("extract_features matches a straight-line recomputation") {
  std::mt19937_64 rng(33);
  const Image img = oracle::random_image(16, 16, 3, rng);
  const auto f = extract_features(img);

  const auto lum = oracle::ref_luminance(img);
  const double mean_lum = oracle::mean_of(lum);
  double var = 0.0;
  for (double v : lum) var += (v - mean_lum) * (v - mean_lum);
  const double std_lum = std::sqrt(var / static_cast<double>(lum.size()));

  const oracle::RefSobel g = oracle::ref_sobel([&] {
    Image tmp(img.height, img.width, 1);
    tmp.data = lum;
    return tmp;
  }());
  double mean_gx = 0.0, mean_gy = 0.0, mean_mag = 0.0;
  for (std::size_t i = 0; i < g.gx.size(); ++i) {
    mean_gx += std::fabs(g.gx[i]);
    mean_gy += std::fabs(g.gy[i]);
    mean_mag += g.mag[i];
  }
  mean_gx /= static_cast<double>(g.gx.size());
  mean_gy /= static_cast<double>(g.gx.size());
  mean_mag /= static_cast<double>(g.gx.size());

  const double low_ratio = oracle::ref_low_energy_ratio(lum, img.height, img.width, 0.25);

  double mean_r = 0.0, mean_b = 0.0, spread = 0.0;
  for (int p = 0; p < img.pixel_count(); ++p) {
    const double r = img.data[3 * p], gg = img.data[3 * p + 1], b = img.data[3 * p + 2];
    mean_r += r;
    mean_b += b;
    spread += std::max({r, gg, b}) - std::min({r, gg, b});
  }
  mean_r /= img.pixel_count();
  mean_b /= img.pixel_count();
  spread /= img.pixel_count();

  CHECK(f[0] == doctest::Approx(mean_lum).epsilon(1e-9));
  CHECK(f[1] == doctest::Approx(std_lum).epsilon(1e-9));
  CHECK(f[2] == doctest::Approx(mean_gx).epsilon(1e-9));
  CHECK(f[3] == doctest::Approx(mean_gy).epsilon(1e-9));
  CHECK(f[4] == doctest::Approx(mean_mag).epsilon(1e-9));
  CHECK(f[5] == doctest::Approx(low_ratio).epsilon(1e-9));
  CHECK(f[6] == doctest::Approx(std::fabs(mean_r - mean_b)).epsilon(1e-9));
  CHECK(f[7] == doctest::Approx(spread).epsilon(1e-9));
}

TEST_CASE("head_forward: zero parameters give softplus(0) everywhere") {
  const PolicyParams p{MlpHead::zeros(), MlpHead::zeros()};
  const auto out = head_forward(p, {0, 0, 0, 0, 0, 0, 0, 0});
  for (int k = 0; k < kActionDim; ++k) {
    CHECK(out.alpha[k] == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(out.beta[k] == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }
}

TEST_CASE("head_forward: zero output layer collapses to softplus(bias)") {
  std::mt19937_64 rng(40);
  PolicyParams p{MlpHead::zeros(), MlpHead::zeros()};
  for (MlpHead* h : {&p.rate, &p.fuse}) {
    for (double& w : h->w1) w = oracle::uniform(rng, -1.0, 1.0);
    for (double& b : h->b1) b = oracle::uniform(rng, -1.0, 1.0);
    for (double& b : h->b2) b = 0.9;
  }
  const auto out = head_forward(p, random_features(rng));
  for (int k = 0; k < kActionDim; ++k) {
    CHECK(out.alpha[k] == doctest::Approx(std::log1p(std::exp(0.9))).epsilon(1e-12));
  }
}

TEST_CASE("head_forward matches an independent matrix oracle") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    const PolicyParams p = random_policy(rng);
    const auto f = random_features(rng);
    const auto out = head_forward(p, f);

    auto run_head = [&](const MlpHead& h, double* a2, double* b2) {
      double hidden[kHiddenDim];
      for (int i = 0; i < kHiddenDim; ++i) {
        double acc = h.b1[i];
        for (int j = 0; j < kFeatureDim; ++j) acc += h.w1[i * kFeatureDim + j] * f[j];
        hidden[i] = std::tanh(acc);
      }
      for (int o = 0; o < 4; ++o) {
        double acc = h.b2[o];
        for (int i = 0; i < kHiddenDim; ++i) acc += h.w2[o * kHiddenDim + i] * hidden[i];
        const double sp = std::log1p(std::exp(acc));
        const double clamped = std::clamp(sp, kBetaParamFloor, kBetaParamCap);
        if (o % 2 == 0) a2[o / 2] = clamped; else b2[o / 2] = clamped;
      }
    };
    double alpha[4], beta[4];
    run_head(p.rate, &alpha[0], &beta[0]);
    run_head(p.fuse, &alpha[2], &beta[2]);
    for (int k = 0; k < kActionDim; ++k) {
      CHECK(out.alpha[k] == doctest::Approx(alpha[k]).epsilon(1e-9));
      CHECK(out.beta[k] == doctest::Approx(beta[k]).epsilon(1e-9));
    }
  }
}

TEST_CASE("init_policy starts every action at Beta(2,2)") {
  std::mt19937_64 rng(42);
  const PolicyParams p = init_policy(rng);
  const auto out = head_forward(p, random_features(rng));
  for (int k = 0; k < kActionDim; ++k) {
    CHECK(out.alpha[k] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(out.beta[k] == doctest::Approx(2.0).epsilon(1e-12));
  }
}

TEST_CASE("beta_sample: uniform and skewed Monte Carlo means") {
  std::mt19937_64 rng(43);
  double acc = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) acc += beta_sample(1.0, 1.0, rng);
  CHECK(acc / n == doctest::Approx(0.5).epsilon(0.02));

  acc = 0.0;
  for (int i = 0; i < n; ++i) acc += beta_sample(5.0, 1.0, rng);
  CHECK(std::fabs(acc / n - 5.0 / 6.0) < 0.01);
}

TEST_CASE("beta_sample is bit-reproducible under a fixed seed") {
  std::mt19937_64 a(7), b(7);
  for (int i = 0; i < 200; ++i) {
    const double alpha = 0.2 + (i % 9) * 0.9;
    const double beta = 0.3 + (i % 7) * 1.1;
    CHECK(beta_sample(alpha, beta, a) == beta_sample(alpha, beta, b));
  }
}

TEST_CASE("samples respect the action clamp") {
  std::mt19937_64 rng(44);
  for (int i = 0; i < 2000; ++i) {
    const double v = beta_sample(0.05, 0.05, rng);  // mass piles at the ends
    CHECK(v >= kActionFloor);
    CHECK(v <= kActionCeil);
  }
}

TEST_CASE("joint_logprob: closed-form spot values") {
  const auto uniform_out = uniform_output();
  CHECK(joint_logprob(uniform_out, Action{0.3, 0.6, 0.9, 0.11}) ==
        doctest::Approx(0.0).epsilon(1e-12));

  BetaHeadOutput one = uniform_output();
  one.alpha[0] = 2.0;
  one.beta[0] = 2.0;
  CHECK(joint_logprob(one, Action{0.5, 0.5, 0.5, 0.5}) ==
        doctest::Approx(std::log(1.5)).epsilon(1e-12));

  CHECK_THROWS_AS(joint_logprob(uniform_out, Action{0.0, 0.5, 0.5, 0.5}),
                  std::invalid_argument);
}

TEST_CASE("exp(joint_logprob) integrates to one in every dimension") {
  std::mt19937_64 rng(45);
  for (int trial = 0; trial < 10; ++trial) {
    const BetaHeadOutput out = random_output(rng, 0.05, 30.0);
    for (int k = 0; k < kActionDim; ++k) {
      const double a = out.alpha[k], b = out.beta[k];
      const double log_b_oracle = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
      // weight the oracle density by exp(lp_impl - lp_oracle) so the
      // integral probes the implementation's normalizer
      const double integral = oracle::beta_weighted_integral(
          a, b, [&](double, double lnx, double ln1mx) {
            const double lp_impl =
                (a - 1.0) * lnx + (b - 1.0) * ln1mx - log_beta(a, b);
            const double lp_oracle = (a - 1.0) * lnx + (b - 1.0) * ln1mx - log_b_oracle;
            return std::exp(lp_impl - lp_oracle);
          });
      CHECK(integral == doctest::Approx(1.0).epsilon(1e-6));
    }
  }
}

TEST_CASE("entropy: uniform zero, Beta(2,2) value, sharpening monotonicity") {
  CHECK(entropy(uniform_output()) == doctest::Approx(0.0).epsilon(1e-12));

  BetaHeadOutput two;
  two.alpha.fill(2.0);
  two.beta.fill(2.0);
  const double expected = 4.0 * oracle::beta_entropy_quadrature(2.0, 2.0);
  CHECK(entropy(two) == doctest::Approx(expected).epsilon(1e-4));
  CHECK(entropy(two) == doctest::Approx(-0.5).epsilon(2e-3));

  double prev = 1.0;
  for (double c = 1.0; c <= 20.0; c += 1.0) {
    BetaHeadOutput out;
    out.alpha.fill(c);
    out.beta.fill(c);
    const double h = entropy(out);
    CHECK(h < prev + 1e-12);
    prev = h;
  }
}

TEST_CASE("entropy matches the quadrature oracle on random parameters") {
  std::mt19937_64 rng(46);
  for (int trial = 0; trial < 10; ++trial) {
    const BetaHeadOutput out = random_output(rng, 0.2, 20.0);
    double expected = 0.0;
    for (int k = 0; k < kActionDim; ++k) {
      expected += oracle::beta_entropy_quadrature(out.alpha[k], out.beta[k]);
    }
    CHECK(entropy(out) == doctest::Approx(expected).epsilon(1e-4));
  }
}

TEST_CASE("logprob_grads: analytic value and finite differences") {
  const BetaHeadOutput u = uniform_output();
  const Action a{0.5, 0.5, 0.5, 0.5};
  const BetaGrads g = logprob_grads(u, a);
  // psi(1) = -gamma, psi(2) = 1 - gamma
  CHECK(g.d_alpha[0] == doctest::Approx(std::log(0.5) + 1.0).epsilon(1e-10));
  CHECK(g.d_alpha[0] == doctest::Approx(0.3069).epsilon(1e-3));

  std::mt19937_64 rng(47);
  for (int trial = 0; trial < 20; ++trial) {
    const BetaHeadOutput out = random_output(rng);
    const Action act = random_action(rng);
    const BetaGrads grads = logprob_grads(out, act);
    for (int k = 0; k < kActionDim; ++k) {
      auto value = [&](double alpha, double beta) {
        BetaHeadOutput o = out;
        o.alpha[k] = alpha;
        o.beta[k] = beta;
        return joint_logprob(o, act);
      };
      const double h = 1e-5;
      const double fd_a = (value(out.alpha[k] + h, out.beta[k]) -
                           value(out.alpha[k] - h, out.beta[k])) /
                          (2 * h);
      const double fd_b = (value(out.alpha[k], out.beta[k] + h) -
                           value(out.alpha[k], out.beta[k] - h)) /
                          (2 * h);
      CHECK(grads.d_alpha[k] == doctest::Approx(fd_a).epsilon(1e-4));
      CHECK(grads.d_beta[k] == doctest::Approx(fd_b).epsilon(1e-4));
    }
  }
}

TEST_CASE("logprob gradients stay finite at the action clamp floor") {
  std::mt19937_64 rng(48);
  const BetaHeadOutput out = random_output(rng);
  const Action a{kActionFloor, kActionCeil, 0.5, 0.5};
  const BetaGrads g = logprob_grads(out, a);
  for (int k = 0; k < kActionDim; ++k) {
    CHECK(std::isfinite(g.d_alpha[k]));
    CHECK(std::isfinite(g.d_beta[k]));
  }
}

TEST_CASE("full MLP chain gradient matches finite differences") {
  std::mt19937_64 rng(49);
  int checked = 0;
  for (int trial = 0; trial < 25; ++trial) {
    PolicyParams params;
    std::array<double, kFeatureDim> features;
    draw_gradcheck_config(rng, &params, &features);
    const Action act = random_action(rng);

    PolicyTrace trace;
    const BetaHeadOutput out = head_forward(params, features, &trace);
    PolicyGrads analytic;
    backprop_head(params, trace, logprob_grads(out, act), analytic);

    auto value = [&](const std::vector<double>& flat) {
      PolicyParams p = params;
      unflatten(flat, p);
      return joint_logprob(head_forward(p, features), act);
    };
    const auto fd = oracle::fd_gradient(flatten(params), value);
    CHECK(oracle::max_rel_err(flatten(analytic), fd, 1e-6) < 1e-3);
    ++checked;
  }
  CHECK(checked == 25);
}

TEST_CASE("entropy chain gradient matches finite differences") {
  std::mt19937_64 rng(50);
  for (int trial = 0; trial < 10; ++trial) {
    PolicyParams params;
    std::array<double, kFeatureDim> features;
    draw_gradcheck_config(rng, &params, &features);

    PolicyTrace trace;
    const BetaHeadOutput out = head_forward(params, features, &trace);
    PolicyGrads analytic;
    backprop_head(params, trace, entropy_grads(out), analytic);

    auto value = [&](const std::vector<double>& flat) {
      PolicyParams p = params;
      unflatten(flat, p);
      return entropy(head_forward(p, features));
    };
    const auto fd = oracle::fd_gradient(flatten(params), value);
    CHECK(oracle::max_rel_err(flatten(analytic), fd, 1e-6) < 1e-3);
  }
}

TEST_CASE("clamp-saturated outputs receive zero gradient") {
  std::mt19937_64 rng(51);
  PolicyParams p{MlpHead::zeros(), MlpHead::zeros()};
  // huge bias drives softplus far beyond the cap
  for (MlpHead* h : {&p.rate, &p.fuse}) {
    for (double& b : h->b2) b = 80.0;
    for (double& w : h->w1) w = oracle::uniform(rng, -0.5, 0.5);
  }
  PolicyTrace trace;
  const BetaHeadOutput out = head_forward(p, random_features(rng), &trace);
  for (int k = 0; k < kActionDim; ++k) CHECK(out.alpha[k] == kBetaParamCap);
  PolicyGrads grads;
  backprop_head(p, trace, logprob_grads(out, random_action(rng)), grads);
  for (double v : flatten(grads)) CHECK(v == 0.0);
}

TEST_CASE("deterministic_action: beta means, range, Monte Carlo agreement") {
  BetaHeadOutput out;
  out.alpha.fill(3.0);
  out.beta.fill(1.0);
  const Action a = deterministic_action(out);
  CHECK(a.r_h == doctest::Approx(0.75).epsilon(1e-12));

  BetaHeadOutput sym;
  sym.alpha.fill(4.2);
  sym.beta.fill(4.2);
  CHECK(deterministic_action(sym).g_o == doctest::Approx(0.5).epsilon(1e-12));

  std::mt19937_64 rng(52);
  const BetaHeadOutput rnd = random_output(rng);
  const Action mean = deterministic_action(rnd);
  double acc = 0.0;
  for (int i = 0; i < 100000; ++i) acc += beta_sample(rnd.alpha[0], rnd.beta[0], rng);
  CHECK(acc / 100000.0 == doctest::Approx(mean.r_h).epsilon(0.02));

  for (int trial = 0; trial < 50; ++trial) {
    const Action d = deterministic_action(random_output(rng, 0.011, 49.0));
    for (double v : d.as_array()) {
      CHECK(v > 0.0);
      CHECK(v < 1.0);
    }
  }
}

TEST_CASE("policy json roundtrip is exact") {
  std::mt19937_64 rng(53);
  const PolicyParams p = random_policy(rng);
  const PolicyParams back = policy_from_json(policy_to_json(p));
  CHECK(flatten(back) == flatten(p));

  nlohmann::json bad = policy_to_json(p);
  bad["shape"]["hidden"] = 99;
  CHECK_THROWS_AS(policy_from_json(bad), std::runtime_error);
}

TEST_CASE("flatten and unflatten are inverse") {
  std::mt19937_64 rng(54);
  const PolicyParams p = random_policy(rng);
  const auto flat = flatten(p);
  CHECK(flat.size() == policy_param_count());
  PolicyParams q{MlpHead::zeros(), MlpHead::zeros()};
  unflatten(flat, q);
  CHECK(flatten(q) == flat);
}

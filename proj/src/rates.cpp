#include "chaoslab/rates.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "chaoslab/exact_sum.hpp"

namespace chaoslab {

namespace {

void validate(const RateParams& params) {
  if (params.n < 1) throw std::invalid_argument("rate reference: n must be at least 1");
  if (params.m < 1) throw std::invalid_argument("rate reference: m must be at least 1");
  if (params.p < 1.0 || params.p > 2.0) {
    throw std::invalid_argument("rate reference: p must lie in [1, 2]");
  }
  if (params.k < 2.0) throw std::invalid_argument("rate reference: k must be at least 2");
  if (!(params.p < params.q && params.q < params.k)) {
    throw std::invalid_argument("rate reference: parameters must satisfy p<q<k");
  }
  const double half_m = 0.5 * params.m;
  if (params.p >= half_m && params.q == 2.0 * params.p) {
    throw std::invalid_argument(
        "rate reference: excluded boundary case q = 2p (p >= m/2)");
  }
  if (params.p < half_m && params.q == params.m / (params.m - params.p)) {
    throw std::invalid_argument(
        "rate reference: excluded boundary case q = m/(m-p) (p < m/2)");
  }
}

}  // namespace

double rate_reference(const RateParams& params) {
  validate(params);
  const double n = static_cast<double>(params.n);
  const double tail = std::pow(n, -(params.q - params.p) / params.q);
  const double half_m = 0.5 * params.m;
  if (params.p > half_m) return std::pow(n, -0.5) + tail;
  if (params.p == half_m) return std::pow(n, -0.5) * std::log1p(n) + tail;
  return std::pow(n, -params.p / params.m) + tail;
}

double epsilon_cd(std::size_t n, int d) {
  if (n < 1) throw std::invalid_argument("epsilon_cd: n must be at least 1");
  if (d < 1) throw std::invalid_argument("epsilon_cd: d must be at least 1");
  const double nn = static_cast<double>(n);
  if (d < 4) return std::pow(nn, -0.5);
  if (d == 4) return std::pow(nn, -0.5) * std::log(nn);
  return std::pow(nn, -2.0 / d);
}

double sup_rate_reference(std::size_t n, int m, double p) {
  if (n < 1 || m < 1 || p < 1.0) throw std::invalid_argument("sup rate: bad parameters");
  return std::pow(static_cast<double>(n), -p / (m + 8.0));
}

double sup_rate_reference_strong(std::size_t n, int m, double p) {
  if (n < 1 || m < 1 || p < 1.0) throw std::invalid_argument("sup rate: bad parameters");
  return std::pow(static_cast<double>(n), -p / (m + 4.0));
}

double tail_envelope_a(std::size_t n, double epsilon, int m, double p) {
  if (n < 1 || m < 1) throw std::invalid_argument("tail envelope: bad parameters");
  if (epsilon < 0.0) throw std::invalid_argument("tail envelope: epsilon must be nonnegative");
  if (p < 1.0 || p > 2.0) throw std::invalid_argument("tail envelope: p must lie in [1, 2]");
  if (epsilon == 0.0) return 1.0;  // continuous limit of every branch
  const double nn = static_cast<double>(n);
  const double half_m = 0.5 * m;
  if (p > half_m) return std::exp(-nn * epsilon * epsilon);
  if (p == half_m) {
    const double damped = epsilon / std::log(2.0 + 1.0 / epsilon);
    return std::exp(-nn * damped * damped);
  }
  return std::exp(-nn * std::pow(epsilon, m / p));
}

double tail_envelope_b(std::size_t n, double epsilon, double k, double p, double delta) {
  if (n < 1) throw std::invalid_argument("tail envelope: n must be at least 1");
  if (epsilon <= 0.0) throw std::invalid_argument("tail envelope: epsilon must be positive");
  if (delta <= 0.0 || delta >= k) {
    throw std::invalid_argument("tail envelope: delta must lie in (0, k)");
  }
  const double nn = static_cast<double>(n);
  return nn * std::pow(nn * epsilon, -(k - delta) / p);
}

double coupling_constant(double lipschitz_f, double horizon) {
  return std::exp(horizon * std::exp(lipschitz_f * horizon));
}

double coupled_threshold(double epsilon, double lipschitz_f, double horizon) {
  return epsilon / coupling_constant(lipschitz_f, horizon);
}

double talagrand_constant(double lipschitz_g, double lipschitz_f, double horizon) {
  const double base = lipschitz_g + horizon * lipschitz_f;
  return 2.0 * base * base * std::exp(2.0 * horizon * lipschitz_f);
}

RateFit fit_rate(std::span<const double> ns, std::span<const double> errors) {
  if (ns.size() != errors.size()) throw std::invalid_argument("rate fit: size mismatch");
  if (ns.size() < 4) throw std::invalid_argument("rate fit: need at least 4 points");
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (ns[i] <= 0.0) throw std::invalid_argument("rate fit: n values must be positive");
    if (i > 0 && ns[i] <= ns[i - 1]) {
      throw std::invalid_argument("rate fit: n values must be strictly increasing");
    }
    if (errors[i] <= 0.0) throw std::invalid_argument("rate fit: errors must be positive");
  }

  const std::size_t count = ns.size();
  std::vector<double> xs(count), ys(count);
  for (std::size_t i = 0; i < count; ++i) {
    xs[i] = std::log(ns[i]);
    ys[i] = std::log(errors[i]);
  }
  const double xbar = exact_mean(xs);
  const double ybar = exact_mean(ys);
  ExactSum sxx, sxy;
  for (std::size_t i = 0; i < count; ++i) {
    sxx.add((xs[i] - xbar) * (xs[i] - xbar));
    sxy.add((xs[i] - xbar) * (ys[i] - ybar));
  }
  RateFit fit;
  fit.slope = sxy.round() / sxx.round();
  fit.intercept = ybar - fit.slope * xbar;

  ExactSum ssr;
  for (std::size_t i = 0; i < count; ++i) {
    const double r = ys[i] - fit.intercept - fit.slope * xs[i];
    ssr.add(r * r);
  }
  const double dof = static_cast<double>(count) - 2.0;
  const double var = std::max(0.0, ssr.round()) / dof;
  fit.slope_stderr = std::sqrt(var / sxx.round());
  const boost::math::students_t dist(dof);
  const double crit = boost::math::quantile(dist, 0.975);
  fit.ci_low = fit.slope - crit * fit.slope_stderr;
  fit.ci_high = fit.slope + crit * fit.slope_stderr;
  return fit;
}

}  // namespace chaoslab

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "perivol/csv.hpp"
#include "perivol/errors.hpp"
#include "perivol/measures.hpp"
#include "perivol/optim.hpp"

namespace perivol {

enum class GarchFamily { garch, egarch, egarchx };

inline constexpr const char* family_name(GarchFamily f) {
  switch (f) {
    case GarchFamily::garch: return "garch";
    case GarchFamily::egarch: return "egarch";
    case GarchFamily::egarchx: return "egarchx";
  }
  return "?";
}

inline GarchFamily parse_family(std::string_view s) {
  if (s == "garch") return GarchFamily::garch;
  if (s == "egarch") return GarchFamily::egarch;
  if (s == "egarchx") return GarchFamily::egarchx;
  throw std::invalid_argument("unknown model family '" + std::string(s) + "'");
}

struct ModelSpec {
  GarchFamily family = GarchFamily::garch;
  bool periodic = false;
};

// daily conditional-variance parameters.  Returns are in percent, so omega and
// the variance path are in percent^2 per day.  lambda holds day-of-week log
// offsets (Monday..Sunday, sum 0) and is all-zero for non-periodic models.
struct GarchParams {
  double mu = 0.0;
  double omega = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double tau = 0.0;    // egarch sign-asymmetry loading
  double gamma = 0.0;  // egarchx realized-variance loading
  std::array<double, 7> lambda{};
};

// half-open index range into a DailyReturns sample
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
  bool unset() const { return begin == end; }
};

struct DailyReturns {
  std::vector<std::int64_t> epoch_day;
  std::vector<double> r;        // percent log returns
  std::vector<double> rv;       // percent^2 daily realized variance; empty if absent
  std::vector<int> weekday;     // 1 (Monday) .. 7 (Sunday)
  std::size_t size() const { return r.size(); }
};

inline int weekday_of(std::int64_t epoch_day) {
  return static_cast<int>(detail::floor_mod(epoch_day - 4, 7)) + 1;  // day 4 = 1970-01-05, a Monday
}

// csv columns: date, return[, rv]; dates strictly increasing; empty rv cells
// become NaN (treated as missing by the filters)
inline DailyReturns load_daily_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error(path + ": cannot open file");
  std::string line;
  if (!std::getline(in, line)) throw data_error(path + ": empty file");
  const auto header = split_csv(line);
  std::size_t c_date = header.size(), c_ret = header.size(), c_rv = header.size();
  for (std::size_t i = 0; i < header.size(); ++i) {
    const auto name = trim(header[i]);
    if (name == "date") c_date = i;
    else if (name == "return") c_ret = i;
    else if (name == "rv") c_rv = i;
  }
  if (c_date == header.size() || c_ret == header.size())
    throw data_error(path + ": needs 'date' and 'return' columns");
  DailyReturns out;
  std::int64_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto fields = split_csv(line);
    const std::string where = path + ":" + std::to_string(lineno);
    if (fields.size() < header.size())
      throw data_error(where + ": expected " + std::to_string(header.size()) + " fields");
    const std::int64_t day =
        detail::floor_div(parse_timestamp_ms(fields[c_date], where), 86400000);
    if (!out.epoch_day.empty() && day <= out.epoch_day.back())
      throw data_error(where + ": dates must be strictly increasing");
    out.epoch_day.push_back(day);
    out.weekday.push_back(weekday_of(day));
    out.r.push_back(parse_double(fields[c_ret], where + " return"));
    if (c_rv < header.size()) {
      const auto cell = trim(fields[c_rv]);
      out.rv.push_back(cell.empty() ? std::numeric_limits<double>::quiet_NaN()
                                    : parse_double(cell, where + " rv"));
    }
  }
  if (out.r.empty()) throw data_error(path + ": no data rows");
  return out;
}

// daily percent returns and percent^2 realized variance from a one-minute
// grid, using the 00:00 UTC day convention: day t closes at the next
// midnight, which is also where its realized variance ends
inline DailyReturns daily_from_grid(const MinuteGrid& g) {
  const DailyRV rv = realized_variance(g);
  DailyReturns out;
  std::vector<std::int64_t> days;
  std::vector<double> close, dayrv;
  for (std::size_t i = 0; i < rv.epoch_day.size(); ++i) {
    if (!rv.complete[i]) continue;  // complete day: its closing midnight is on the grid
    const std::int64_t next_midnight = (rv.epoch_day[i] + 1) * detail::kSecPerDay;
    days.push_back(rv.epoch_day[i]);
    close.push_back(g.log_price[(next_midnight - g.spec.start) / 60]);
    dayrv.push_back(rv.rv[i] * 1e4);
  }
  if (days.size() < 2) throw data_error("daily_from_grid: fewer than 2 complete days");
  for (std::size_t i = 1; i < days.size(); ++i)
    if (days[i] != days[i - 1] + 1)
      throw data_error("daily_from_grid: complete days not contiguous around " +
                       format_date(days[i]));
  for (std::size_t i = 1; i < days.size(); ++i) {
    out.epoch_day.push_back(days[i]);
    out.weekday.push_back(weekday_of(days[i]));
    out.r.push_back(100.0 * (close[i] - close[i - 1]));
    out.rv.push_back(dayrv[i]);
  }
  return out;
}

namespace detail {

inline void validate_params(const ModelSpec& spec, const GarchParams& p) {
  if (!std::isfinite(p.mu)) throw std::domain_error("garch: mu not finite");
  if (spec.periodic && spec.family == GarchFamily::garch)
    throw std::invalid_argument(
        "garch: periodic day effects are only defined for the egarch families");
  if (spec.family == GarchFamily::garch) {
    if (!(p.omega > 0.0)) throw std::domain_error("garch: omega must be positive");
    if (!(p.alpha >= 0.0) || !(p.beta >= 0.0))
      throw std::domain_error("garch: alpha and beta must be non-negative");
    if (!(p.alpha + p.beta < 1.0))
      throw std::domain_error("garch: alpha + beta must be below 1");
  } else {
    if (!(std::abs(p.beta) < 1.0)) throw std::domain_error("garch: |beta| must be below 1");
    if (!std::isfinite(p.omega) || !std::isfinite(p.alpha) || !std::isfinite(p.tau) ||
        !std::isfinite(p.gamma))
      throw std::domain_error("garch: non-finite parameter");
  }
  for (double l : p.lambda)
    if (!std::isfinite(l)) throw std::domain_error("garch: non-finite lambda");
}

inline void validate_data(const ModelSpec& spec, const DailyReturns& data) {
  if (data.r.size() < 2) throw data_error("garch: need at least 2 observations");
  if (spec.periodic) {
    if (data.weekday.size() != data.r.size())
      throw data_error("garch: periodic model needs a weekday for every observation");
    for (int d : data.weekday)
      if (d < 1 || d > 7) throw data_error("garch: weekday outside 1..7");
  }
  if (spec.family == GarchFamily::egarchx && data.rv.size() != data.r.size())
    throw data_error("garch: egarchx needs a realized-variance column");
}

inline double init_variance(const DailyReturns& data, const Span& span) {
  double m = 0.0;
  for (std::size_t t = span.begin; t < span.end; ++t) m += data.r[t];
  m /= static_cast<double>(span.size());
  double v = 0.0;
  for (std::size_t t = span.begin; t < span.end; ++t)
    v += (data.r[t] - m) * (data.r[t] - m);
  v /= static_cast<double>(span.size());
  if (!(v > 0.0)) throw data_error("garch: zero-variance returns in the initialization span");
  return v;
}

inline Span check_span(Span s, std::size_t T, const char* op) {
  if (s.unset()) return Span{0, T};
  if (s.end > T || s.begin >= s.end)
    throw std::invalid_argument(std::string(op) + ": invalid span [" +
                                std::to_string(s.begin) + "," + std::to_string(s.end) + ")");
  return s;
}

}  // namespace detail

// observation-level conditional variance path over the whole sample.  The
// recursion starts at the sample variance of `init` (defaults to the whole
// sample; fits pass their in-sample span).  For periodic models the recursion
// evolves the base process h*_t and h_t = exp(lambda_{d(t)}) * h*_t; the
// shocks z_t and the egarchx regressor log(rv_t / h_t) standardize by the
// observation-level h_t.  Missing or non-positive rv contributes zero (the
// count is reported through rv_substituted when given).
inline std::vector<double> filter_variance(const ModelSpec& spec, const GarchParams& p,
                                           const DailyReturns& data, Span init = {},
                                           std::int64_t* rv_substituted = nullptr) {
  detail::validate_params(spec, p);
  detail::validate_data(spec, data);
  const std::size_t T = data.r.size();
  init = detail::check_span(init, T, "filter_variance");
  const double hbar = detail::init_variance(data, init);

  std::vector<double> h(T);
  if (spec.family == GarchFamily::garch) {
    h[0] = hbar;
    for (std::size_t t = 1; t < T; ++t) {
      const double e = data.r[t - 1] - p.mu;
      h[t] = p.omega + p.beta * h[t - 1] + p.alpha * e * e;
      if (!std::isfinite(h[t]))
        throw numeric_error("filter_variance: diverged at t=" + std::to_string(t));
    }
    return h;
  }

  double log_hstar = std::log(hbar);
  for (std::size_t t = 0; t < T; ++t) {
    const double lam = spec.periodic ? p.lambda[data.weekday[t] - 1] : 0.0;
    const double log_h = lam + log_hstar;
    h[t] = std::exp(log_h);
    if (!std::isfinite(h[t]) || !(h[t] > 0.0))
      throw numeric_error("filter_variance: diverged at t=" + std::to_string(t));
    if (t + 1 == T) break;
    const double z = (data.r[t] - p.mu) / std::sqrt(h[t]);
    double x = 0.0;
    if (spec.family == GarchFamily::egarchx) {
      const double rv = data.rv[t];
      if (std::isfinite(rv) && rv > 0.0) {
        x = p.gamma * (std::log(rv) - log_h);
      } else if (rv_substituted) {
        ++*rv_substituted;  // as if rv_t == h_t: the term drops out
      }
    }
    log_hstar = p.omega + p.beta * log_hstar + p.alpha * std::abs(z) + p.tau * z + x;
    if (!std::isfinite(log_hstar))
      throw numeric_error("filter_variance: diverged at t=" + std::to_string(t + 1));
  }
  return h;
}

struct Loglik {
  double total = 0.0;
  std::vector<double> per_obs;  // aligned with [span.begin, span.end)
};

// Gaussian quasi log-likelihood over `span`; the filter runs continuously
// from observation 0, so out-of-sample evaluation warm-starts from the last
// in-sample state.  `init` picks the variance-initialization span and
// defaults to `span` itself (fits use their in-sample span for both).
inline Loglik log_likelihood(const ModelSpec& spec, const GarchParams& p,
                             const DailyReturns& data, Span span, Span init = {}) {
  const std::size_t T = data.r.size();
  span = detail::check_span(span, T, "log_likelihood");
  if (init.unset()) init = span;
  const std::vector<double> h = filter_variance(spec, p, data, init);
  constexpr double log_2pi = 1.8378770664093454;
  Loglik out;
  out.per_obs.reserve(span.size());
  double sum = 0.0, comp = 0.0;  // compensated: totals feed difference-based derivatives
  for (std::size_t t = span.begin; t < span.end; ++t) {
    const double e = data.r[t] - p.mu;
    const double ll = -0.5 * (std::log(h[t]) + e * e / h[t] + log_2pi);
    out.per_obs.push_back(ll);
    const double y = ll - comp;
    const double s = sum + y;
    comp = (s - sum) - y;
    sum = s;
  }
  out.total = sum;
  return out;
}

// identification-free reporting map: omega = (1-beta)/7 * sum(kappa),
// lambda_d = kappa_d - mean(kappa); by construction sum(lambda) ~ 0
inline std::pair<double, std::array<double, 7>> recover_periodic_params(
    const std::array<double, 7>& kappa, double beta) {
  if (!(std::abs(beta) < 1.0)) throw std::domain_error("recover_periodic_params: |beta| >= 1");
  double sum = 0.0;
  for (double k : kappa) sum += k;
  const double mean = sum / 7.0;
  std::array<double, 7> lambda;
  for (int d = 0; d < 7; ++d) lambda[d] = kappa[d] - mean;
  return {(1.0 - beta) * mean, lambda};
}

namespace detail {

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double logit(double p) { return std::log(p / (1.0 - p)); }

// bounded transforms can round onto the closed boundary at extreme psi; pull
// them back inside the open interval so every psi maps to a valid parameter
inline double clamp_unit(double v) {
  constexpr double lim = 1.0 - 1e-15;
  return v > lim ? lim : (v < -lim ? -lim : v);
}

// maps between GarchParams, the unconstrained optimization vector psi, and
// the original-coordinate vector phi used for standard-error derivatives.
// psi layouts:
//   garch:             [mu, log omega, logit(alpha+beta), logit(beta/(alpha+beta))]
//   egarch(x):         [mu, omega, atanh beta, alpha, tau (, gamma)]
//   periodic egarch(x): [mu, kappa_1..7, atanh beta, alpha, tau (, gamma)]
// phi layouts:
//   garch:             [mu, omega, alpha, beta]
//   egarch(x):         [mu, omega, alpha, beta, tau (, gamma)]
//   periodic egarch(x): [mu, kappa_1..7, alpha, beta, tau (, gamma)]
struct ParamMap {
  ModelSpec spec;

  int psi_dim() const {
    if (spec.family == GarchFamily::garch) return 4;
    const int base = spec.family == GarchFamily::egarch ? 5 : 6;
    return spec.periodic ? base + 6 : base;
  }
  int phi_dim() const { return psi_dim(); }

  GarchParams unpack(const Eigen::VectorXd& psi) const {
    GarchParams p;
    p.mu = psi[0];
    if (spec.family == GarchFamily::garch) {
      p.omega = std::max(std::exp(psi[1]), std::numeric_limits<double>::denorm_min());
      const double s = clamp_unit(logistic(psi[2]));
      const double f = logistic(psi[3]);
      p.beta = s * f;
      p.alpha = s * (1.0 - f);
      return p;
    }
    int i = 1;
    std::array<double, 7> kappa{};
    if (spec.periodic) {
      for (int d = 0; d < 7; ++d) kappa[d] = psi[i++];
    } else {
      p.omega = psi[i++];
    }
    p.beta = clamp_unit(std::tanh(psi[i++]));
    p.alpha = psi[i++];
    p.tau = psi[i++];
    if (spec.family == GarchFamily::egarchx) p.gamma = psi[i++];
    if (spec.periodic) {
      auto [omega, lambda] = recover_periodic_params(kappa, p.beta);
      p.omega = omega;
      p.lambda = lambda;
    }
    return p;
  }

  Eigen::VectorXd pack(const GarchParams& p) const {
    Eigen::VectorXd psi(psi_dim());
    psi[0] = p.mu;
    if (spec.family == GarchFamily::garch) {
      psi[1] = std::log(p.omega);
      const double s = p.alpha + p.beta;
      psi[2] = logit(s);
      psi[3] = logit(p.beta / s);
      return psi;
    }
    int i = 1;
    if (spec.periodic) {
      const double base = p.omega / (1.0 - p.beta);
      for (int d = 0; d < 7; ++d) psi[i++] = p.lambda[d] + base;  // kappa_d
    } else {
      psi[i++] = p.omega;
    }
    psi[i++] = std::atanh(p.beta);
    psi[i++] = p.alpha;
    psi[i++] = p.tau;
    if (spec.family == GarchFamily::egarchx) psi[i++] = p.gamma;
    return psi;
  }

  GarchParams from_phi(const Eigen::VectorXd& phi) const {
    GarchParams p;
    p.mu = phi[0];
    if (spec.family == GarchFamily::garch) {
      p.omega = phi[1];
      p.alpha = phi[2];
      p.beta = phi[3];
      return p;
    }
    int i = 1;
    std::array<double, 7> kappa{};
    if (spec.periodic) {
      for (int d = 0; d < 7; ++d) kappa[d] = phi[i++];
    } else {
      p.omega = phi[i++];
    }
    p.alpha = phi[i++];
    p.beta = phi[i++];
    p.tau = phi[i++];
    if (spec.family == GarchFamily::egarchx) p.gamma = phi[i++];
    if (spec.periodic) {
      auto [omega, lambda] = recover_periodic_params(kappa, p.beta);
      p.omega = omega;
      p.lambda = lambda;
    }
    return p;
  }

  Eigen::VectorXd to_phi(const GarchParams& p) const {
    Eigen::VectorXd phi(phi_dim());
    phi[0] = p.mu;
    if (spec.family == GarchFamily::garch) {
      phi[1] = p.omega;
      phi[2] = p.alpha;
      phi[3] = p.beta;
      return phi;
    }
    int i = 1;
    if (spec.periodic) {
      const double base = p.omega / (1.0 - p.beta);
      for (int d = 0; d < 7; ++d) phi[i++] = p.lambda[d] + base;
    } else {
      phi[i++] = p.omega;
    }
    phi[i++] = p.alpha;
    phi[i++] = p.beta;
    phi[i++] = p.tau;
    if (spec.family == GarchFamily::egarchx) phi[i++] = p.gamma;
    return phi;
  }

  std::vector<std::string> phi_names() const {
    std::vector<std::string> n{"mu"};
    if (spec.family == GarchFamily::garch) {
      n.insert(n.end(), {"omega", "alpha", "beta"});
      return n;
    }
    if (spec.periodic)
      for (int d = 1; d <= 7; ++d) n.push_back("kappa_" + std::to_string(d));
    else
      n.push_back("omega");
    n.insert(n.end(), {"alpha", "beta", "tau"});
    if (spec.family == GarchFamily::egarchx) n.push_back("gamma");
    return n;
  }

  // parameters as reported to users (lambda instead of kappa)
  std::vector<std::string> report_names() const {
    if (spec.family == GarchFamily::garch) return {"mu", "omega", "alpha", "beta"};
    std::vector<std::string> n{"mu", "omega", "alpha", "beta", "tau"};
    if (spec.family == GarchFamily::egarchx) n.push_back("gamma");
    if (spec.periodic)
      for (int d = 1; d <= 7; ++d) n.push_back("lambda_" + std::to_string(d));
    return n;
  }

  std::vector<double> report_values(const GarchParams& p) const {
    if (spec.family == GarchFamily::garch) return {p.mu, p.omega, p.alpha, p.beta};
    std::vector<double> v{p.mu, p.omega, p.alpha, p.beta, p.tau};
    if (spec.family == GarchFamily::egarchx) v.push_back(p.gamma);
    if (spec.periodic) v.insert(v.end(), p.lambda.begin(), p.lambda.end());
    return v;
  }

  // jacobian of the reported parameters w.r.t. phi (delta method for the
  // periodic kappa -> (omega, lambda) map; identity otherwise)
  Eigen::MatrixXd report_jacobian(const GarchParams& p) const {
    const int k = phi_dim();
    const auto names = phi_names();
    if (!spec.periodic) return Eigen::MatrixXd::Identity(k, k);
    const int rows = static_cast<int>(report_names().size());
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(rows, k);
    const int i_alpha = 8, i_beta = 9, i_tau = 10;  // after mu + kappa_1..7
    double kappa_sum = 7.0 * p.omega / (1.0 - p.beta);
    J(0, 0) = 1.0;  // mu
    for (int d = 0; d < 7; ++d) J(1, 1 + d) = (1.0 - p.beta) / 7.0;  // omega
    J(1, i_beta) = -kappa_sum / 7.0;
    J(2, i_alpha) = 1.0;
    J(3, i_beta) = 1.0;
    J(4, i_tau) = 1.0;
    int row = 5;
    if (spec.family == GarchFamily::egarchx) J(row++, 11) = 1.0;  // gamma
    for (int d = 0; d < 7; ++d, ++row)
      for (int e = 0; e < 7; ++e) J(row, 1 + e) = (d == e ? 1.0 : 0.0) - 1.0 / 7.0;
    return J;
  }
};

}  // namespace detail

struct FitOptions {
  int starts = 5;            // default start + jittered restarts
  int max_iter = 500;
  double grad_tol = 1e-6;    // max-norm of the mean per-obs loglik gradient
  double rel_step = 1e-5;    // step for all central differences
  std::uint64_t seed = 0;    // jitter rng seed
};

struct GarchFit {
  ModelSpec spec;
  GarchParams params;
  std::vector<std::string> param_names;
  std::vector<double> std_errors;  // qmle sandwich, aligned with param_names
  double loglik_in = 0.0;
  Span in_sample;
  std::vector<double> h_path;  // observation-level variance over the full sample
  int iterations = 0;
  bool converged = false;
  double grad_norm = 0.0;          // mean-loglik gradient max-norm at the optimum
  std::int64_t rv_substituted = 0; // egarchx observations with missing rv
};

// thrown when no restart reaches the gradient tolerance; carries the best iterate
class convergence_error : public numeric_error {
 public:
  convergence_error(const std::string& msg, GarchParams best, double loglik, double gnorm)
      : numeric_error(msg), best_params(std::move(best)), best_loglik(loglik),
        grad_max_norm(gnorm) {}
  GarchParams best_params;
  double best_loglik;
  double grad_max_norm;
};

// qmle sandwich standard errors H^{-1} S H^{-1} at the fitted optimum, with
// the Hessian of the total in-sample log-likelihood and the outer product of
// per-observation scores, both by central differences in original coordinates
// (periodic models differentiate in kappa space and delta-map to the reported
// (omega, lambda)).  Near-singular Hessians name the offending parameter.
inline std::vector<double> robust_std_errors(const GarchFit& fit, const DailyReturns& data,
                                             double rel_step = 1e-5) {
  const detail::ParamMap map{fit.spec};
  const Eigen::VectorXd phi0 = map.to_phi(fit.params);
  const int k = map.phi_dim();
  const Span span = fit.in_sample;
  const std::size_t n = span.size();

  auto eval = [&](const Eigen::VectorXd& phi) {
    return log_likelihood(fit.spec, map.from_phi(phi), data, span, span);
  };

  std::vector<double> step(k);
  for (int i = 0; i < k; ++i) step[i] = rel_step * std::max(std::abs(phi0[i]), 1.0);

  // scores by central differences; the same evaluations provide the diagonal
  // second differences of the total
  Eigen::MatrixXd scores(n, k);
  Eigen::VectorXd diag(k);
  const Loglik base = eval(phi0);
  Eigen::VectorXd phi = phi0;
  for (int i = 0; i < k; ++i) {
    phi[i] = phi0[i] + step[i];
    const Loglik up = eval(phi);
    phi[i] = phi0[i] - step[i];
    const Loglik dn = eval(phi);
    phi[i] = phi0[i];
    for (std::size_t t = 0; t < n; ++t)
      scores(t, i) = (up.per_obs[t] - dn.per_obs[t]) / (2.0 * step[i]);
    diag[i] = (up.total - 2.0 * base.total + dn.total) / (step[i] * step[i]);
  }
  Eigen::MatrixXd H(k, k);
  H.diagonal() = diag;
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j) {
      phi[i] = phi0[i] + step[i];
      phi[j] = phi0[j] + step[j];
      const double fpp = eval(phi).total;
      phi[j] = phi0[j] - step[j];
      const double fpm = eval(phi).total;
      phi[i] = phi0[i] - step[i];
      const double fmm = eval(phi).total;
      phi[j] = phi0[j] + step[j];
      const double fmp = eval(phi).total;
      phi[i] = phi0[i];
      phi[j] = phi0[j];
      H(i, j) = H(j, i) = (fpp - fpm - fmp + fmm) / (4.0 * step[i] * step[j]);
    }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv[0] <= 0.0 || sv[k - 1] < 1e-12 * sv[0]) {
    int worst = 0;
    svd.matrixV().col(k - 1).cwiseAbs().maxCoeff(&worst);
    throw numeric_error("robust_std_errors: Hessian numerically singular; parameter '" +
                        map.phi_names()[worst] + "' not identified");
  }
  const Eigen::MatrixXd Hinv = svd.solve(Eigen::MatrixXd::Identity(k, k));
  const Eigen::MatrixXd S = scores.transpose() * scores;
  Eigen::MatrixXd cov = Hinv * S * Hinv;
  const Eigen::MatrixXd J = map.report_jacobian(fit.params);
  if (J.rows() != k || !J.isIdentity(0.0)) cov = (J * cov * J.transpose()).eval();

  std::vector<double> se(cov.rows());
  for (Eigen::Index i = 0; i < cov.rows(); ++i)
    se[i] = std::sqrt(std::max(cov(i, i), 0.0));  // clip score-noise negatives at 0
  return se;
}

// maximize the in-sample Gaussian quasi log-likelihood by BFGS in the
// unconstrained parameterization, multi-started from the documented default
// plus jittered copies; deterministic given (data, options.seed).  Convergence
// means the mean per-observation gradient max-norm fell below grad_tol.
inline GarchFit fit(const ModelSpec& spec, const DailyReturns& data, Span in_sample = {},
                    const FitOptions& opts = {}) {
  detail::validate_data(spec, data);
  const std::size_t T = data.r.size();
  const Span span = detail::check_span(in_sample, T, "fit");
  if (span.size() < 300)
    throw std::invalid_argument("fit: in-sample span has " + std::to_string(span.size()) +
                                " observations; need at least 300");
  const double hbar = detail::init_variance(data, span);
  const double n_in = static_cast<double>(span.size());
  const detail::ParamMap map{spec};

  const Objective objective = [&](const Eigen::VectorXd& psi) {
    try {
      return -log_likelihood(spec, map.unpack(psi), data, span, span).total / n_in;
    } catch (const numeric_error&) {
      return std::numeric_limits<double>::infinity();  // reject the trial point
    } catch (const std::domain_error&) {
      return std::numeric_limits<double>::infinity();  // non-finite trial coordinates
    }
  };

  // documented default start
  GarchParams p0;
  {
    double m = 0.0;
    for (std::size_t t = span.begin; t < span.end; ++t) m += data.r[t];
    p0.mu = m / n_in;
  }
  if (spec.family == GarchFamily::garch) {
    p0.alpha = 0.05;
    p0.beta = 0.90;
    p0.omega = hbar * (1.0 - p0.alpha - p0.beta);
  } else {
    p0.beta = 0.9;
    p0.alpha = 0.1;
    p0.tau = 0.0;
    p0.omega = (1.0 - p0.beta) * std::log(hbar);
    if (spec.family == GarchFamily::egarchx) p0.gamma = 0.05;
  }
  const Eigen::VectorXd psi0 = map.pack(p0);

  BfgsOptions bopt;
  bopt.max_iter = opts.max_iter;
  bopt.grad_tol = opts.grad_tol;
  bopt.rel_step = opts.rel_step;

  std::mt19937_64 rng(opts.seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> jitter(-0.5, 0.5);
  bool have_best = false;
  BfgsResult best;
  for (int s = 0; s < opts.starts; ++s) {
    Eigen::VectorXd start = psi0;
    if (s > 0)
      for (Eigen::Index i = 0; i < start.size(); ++i) start[i] += jitter(rng);
    if (!std::isfinite(objective(start))) {
      if (s == 0) throw numeric_error("fit: objective not finite at the default start");
      continue;  // jittered start landed in a divergent region
    }
    BfgsResult r = bfgs_minimize(objective, start, bopt);
    if (!have_best || r.f < best.f) {
      best = r;
      have_best = true;
    }
  }
  if (!best.converged)
    throw convergence_error(
        "fit: no restart reached gradient tolerance " + format_double(opts.grad_tol) +
            " (best max-norm " + format_double(best.grad.lpNorm<Eigen::Infinity>()) + ")",
        map.unpack(best.x), -best.f * n_in, best.grad.lpNorm<Eigen::Infinity>());

  GarchFit out;
  out.spec = spec;
  out.params = map.unpack(best.x);
  out.param_names = map.report_names();
  out.in_sample = span;
  out.loglik_in = log_likelihood(spec, out.params, data, span, span).total;
  out.h_path = filter_variance(spec, out.params, data, span, &out.rv_substituted);
  out.iterations = best.iterations;
  out.converged = best.converged;
  out.grad_norm = best.grad.lpNorm<Eigen::Infinity>();
  try {
    out.std_errors = robust_std_errors(out, data, opts.rel_step);
  } catch (const std::exception&) {
    // undefined at a degenerate optimum (boundary fit, unidentified parameter);
    // the point estimates and likelihoods above are still valid
    out.std_errors.assign(map.report_names().size(), std::numeric_limits<double>::quiet_NaN());
  }
  return out;
}

// one-step-ahead variance path for `horizon` observations past the in-sample
// span, from the continuous filter under the fitted parameters.  Variances
// are percent^2 per day, so sqrt(365 h) is already an annualized percent.
struct ForecastPath {
  std::vector<std::int64_t> epoch_day;
  std::vector<double> h;
  std::vector<double> ann_vol_pct;
};

inline ForecastPath forecast_variance(const GarchFit& fit, const DailyReturns& data,
                                      std::size_t horizon) {
  if (horizon < 1) throw std::invalid_argument("forecast_variance: horizon must be >= 1");
  if (fit.in_sample.end + horizon > data.size())
    throw std::invalid_argument(
        "forecast_variance: one-step-ahead forecasts need realized returns through the "
        "horizon; have " +
        std::to_string(data.size() - fit.in_sample.end) + " past the in-sample span");
  const std::vector<double> h = filter_variance(fit.spec, fit.params, data, fit.in_sample);
  ForecastPath out;
  for (std::size_t t = fit.in_sample.end; t < fit.in_sample.end + horizon; ++t) {
    out.epoch_day.push_back(data.epoch_day.empty() ? static_cast<std::int64_t>(t)
                                                   : data.epoch_day[t]);
    out.h.push_back(h[t]);
    out.ann_vol_pct.push_back(std::sqrt(365.0 * h[t]));
  }
  return out;
}

}  // namespace perivol

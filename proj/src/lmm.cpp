#include "divebias/lmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

namespace divebias {

namespace {

// Per-group sufficient statistics. With V = I + lambda·Z·Z' each group block is
// I + lambda·1·1', whose inverse is I - c·1·1' with c = lambda / (1 + lambda·m).
struct GroupStats {
  double m{0.0};
  Eigen::VectorXd col_sums;  // X_i' 1
};

struct Evaluation {
  double lambda{0.0};
  double criterion{0.0};
  double gradient{0.0};
  Eigen::VectorXd beta;
  Eigen::MatrixXd a_inv;  // (X' V^-1 X)^-1
  double quad{0.0};       // r' V^-1 r
};

class RemlProfile {
 public:
  explicit RemlProfile(const LmmDesign& d) : d_(d), p_(static_cast<int>(d.x.cols())), stats_(d.groups) {
    for (auto& s : stats_) s.col_sums = Eigen::VectorXd::Zero(p_);
    for (Eigen::Index i = 0; i < d.x.rows(); ++i) {
      auto& s = stats_[static_cast<std::size_t>(d.group[static_cast<std::size_t>(i)])];
      s.m += 1.0;
      s.col_sums += d.x.row(i).transpose();
    }
    xtx_ = d.x.transpose() * d.x;
    xty_ = d.x.transpose() * d.y;
    group_y_ = Eigen::VectorXd::Zero(d.groups);
    for (Eigen::Index i = 0; i < d.y.size(); ++i) group_y_[d.group[static_cast<std::size_t>(i)]] += d.y[i];
  }

  Evaluation evaluate(double lambda, bool want_gradient) const {
    if (!(lambda >= 0.0)) throw std::domain_error(fmt::format("variance ratio {} is negative", lambda));
    const auto n = static_cast<double>(d_.y.size());
    const double dof = n - p_;

    Eigen::MatrixXd a = xtx_;
    Eigen::VectorXd b = xty_;
    double logdet_v = 0.0;
    for (std::size_t i = 0; i < stats_.size(); ++i) {
      const auto& s = stats_[i];
      const double c = lambda / (1.0 + lambda * s.m);
      a.noalias() -= c * s.col_sums * s.col_sums.transpose();
      b.noalias() -= (c * group_y_[static_cast<Eigen::Index>(i)]) * s.col_sums;
      logdet_v += std::log1p(lambda * s.m);
    }
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success) {
      throw std::runtime_error(fmt::format("X' V^-1 X is not positive definite at lambda = {}", lambda));
    }
    Evaluation e;
    e.lambda = lambda;
    e.beta = llt.solve(b);
    e.a_inv = llt.solve(Eigen::MatrixXd::Identity(p_, p_));
    double logdet_a = 0.0;
    for (int k = 0; k < p_; ++k) logdet_a += 2.0 * std::log(llt.matrixL()(k, k));

    const Eigen::VectorXd r = d_.y - d_.x * e.beta;
    Eigen::VectorXd group_r = Eigen::VectorXd::Zero(d_.groups);
    double rr = 0.0;
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      rr += r[i] * r[i];
      group_r[d_.group[static_cast<std::size_t>(i)]] += r[i];
    }
    double quad = rr;
    for (std::size_t i = 0; i < stats_.size(); ++i) {
      const double c = lambda / (1.0 + lambda * stats_[i].m);
      const double gr = group_r[static_cast<Eigen::Index>(i)];
      quad -= c * gr * gr;
    }
    e.quad = quad;
    e.criterion = logdet_v + logdet_a + dof * std::log(quad / dof) + dof * (1.0 + std::log(2.0 * std::numbers::pi));
    if (!std::isfinite(e.criterion)) {
      throw std::runtime_error(fmt::format("REML criterion is not finite at lambda = {}", lambda));
    }

    if (want_gradient) {
      // d/dlambda = tr(P Z Z') - (n - p) · |Z' P y|^2 / (y' P y)
      double trace = 0.0;
      double score = 0.0;
      for (std::size_t i = 0; i < stats_.size(); ++i) {
        const auto& s = stats_[i];
        const double w = 1.0 / (1.0 + lambda * s.m);
        trace += s.m * w - w * w * s.col_sums.dot(e.a_inv * s.col_sums);
        const double zr = w * group_r[static_cast<Eigen::Index>(i)];
        score += zr * zr;
      }
      e.gradient = trace - dof * score / quad;
    }
    return e;
  }

 private:
  const LmmDesign& d_;
  int p_;
  std::vector<GroupStats> stats_;
  Eigen::MatrixXd xtx_;
  Eigen::VectorXd xty_;
  Eigen::VectorXd group_y_;
};

struct BrentResult {
  double x{0.0};
  double fx{0.0};
  int iterations{0};
  bool converged{false};
};

// Brent's minimizer (golden section with parabolic steps) on [lo, hi].
template <typename F>
BrentResult brent_minimize(F&& f, double lo, double hi, double tol, int max_iter) {
  constexpr double kGolden = 0.3819660112501051;  // (3 - sqrt(5)) / 2
  const double eps = std::sqrt(std::numeric_limits<double>::epsilon());
  double a = lo, b = hi;
  double x = a + kGolden * (b - a);
  double w = x, v = x;
  double fx = f(x);
  double fw = fx, fv = fx;
  double d = 0.0, e = 0.0;
  BrentResult res;
  for (int iter = 1; iter <= max_iter; ++iter) {
    res.iterations = iter;
    const double xm = 0.5 * (a + b);
    const double tol1 = eps * std::abs(x) + tol / 3.0;
    const double tol2 = 2.0 * tol1;
    if (std::abs(x - xm) <= tol2 - 0.5 * (b - a)) {
      res.converged = true;
      break;
    }
    bool golden = true;
    if (std::abs(e) > tol1) {
      double r = (x - w) * (fx - fv);
      double q = (x - v) * (fx - fw);
      double p = (x - v) * q - (x - w) * r;
      q = 2.0 * (q - r);
      if (q > 0.0) p = -p;
      q = std::abs(q);
      const double etemp = e;
      e = d;
      if (std::abs(p) < std::abs(0.5 * q * etemp) && p > q * (a - x) && p < q * (b - x)) {
        d = p / q;
        const double u = x + d;
        if (u - a < tol2 || b - u < tol2) d = xm >= x ? tol1 : -tol1;
        golden = false;
      }
    }
    if (golden) {
      e = (x >= xm) ? a - x : b - x;
      d = kGolden * e;
    }
    const double u = std::abs(d) >= tol1 ? x + d : x + (d > 0.0 ? tol1 : -tol1);
    const double fu = f(u);
    if (fu <= fx) {
      if (u >= x) a = x; else b = x;
      v = w; fv = fw;
      w = x; fw = fx;
      x = u; fx = fu;
    } else {
      if (u < x) a = u; else b = u;
      if (fu <= fw || w == x) {
        v = w; fv = fw;
        w = u; fw = fu;
      } else if (fu <= fv || v == x || v == w) {
        v = u; fv = fu;
      }
    }
  }
  res.x = x;
  res.fx = fx;
  return res;
}

std::string strip_zeros(std::string s) {
  if (s.find('.') == std::string::npos) return s;
  while (s.back() == '0') s.pop_back();
  if (s.back() == '.') s.push_back('0');
  return s;
}

std::string no_negative_zero(std::string s) {
  if (s.starts_with('-') && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

}  // namespace

LmmDesign make_design(Eigen::VectorXd y, Eigen::MatrixXd x, std::vector<int> group,
                      std::vector<std::string> column_names) {
  const auto n = y.size();
  if (n == 0) throw std::invalid_argument("empty design");
  if (x.rows() != n || static_cast<Eigen::Index>(group.size()) != n) {
    throw std::invalid_argument(fmt::format("design shape mismatch: y {} rows, X {} rows, {} group labels", n,
                                            x.rows(), group.size()));
  }
  if (x.cols() == 0 || x.cols() >= n) {
    throw std::invalid_argument(fmt::format("{} fixed effects need more than that many rows (have {})", x.cols(), n));
  }
  if (!y.allFinite() || !x.allFinite()) throw std::invalid_argument("design contains non-finite values");
  const int groups = group.empty() ? 0 : *std::max_element(group.begin(), group.end()) + 1;
  std::vector<int> sizes(static_cast<std::size_t>(std::max(groups, 0)), 0);
  for (const int gi : group) {
    if (gi < 0) throw std::invalid_argument("negative group index");
    ++sizes[static_cast<std::size_t>(gi)];
  }
  if (std::find(sizes.begin(), sizes.end(), 0) != sizes.end()) throw std::invalid_argument("group indices are not dense");
  if (groups < 2) throw std::invalid_argument(fmt::format("need at least 2 groups, have {}", groups));

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() < x.cols()) {
    throw std::invalid_argument(fmt::format("fixed-effect design is rank deficient (rank {} of {})", qr.rank(), x.cols()));
  }

  if (column_names.empty()) {
    for (Eigen::Index k = 0; k < x.cols(); ++k) column_names.push_back(fmt::format("x{}", k));
  }
  if (static_cast<Eigen::Index>(column_names.size()) != x.cols()) throw std::invalid_argument("column name count mismatch");

  LmmDesign d;
  d.y = std::move(y);
  d.x = std::move(x);
  d.group = std::move(group);
  d.groups = groups;
  d.column_names = std::move(column_names);
  for (int gi = 0; gi < groups; ++gi) d.group_ids.push_back(std::to_string(gi));
  return d;
}

LmmDesign build_design(std::span<const DiscrepancyRecord> records, Gender gender) {
  std::vector<const DiscrepancyRecord*> rows;
  for (const auto& r : records) {
    if (r.gender == gender) rows.push_back(&r);
  }
  if (rows.empty()) throw std::invalid_argument(fmt::format("no records for gender {}", to_string(gender)));
  std::sort(rows.begin(), rows.end(), [](const auto* a, const auto* b) {
    return std::tie(a->diver_id, a->meet_id, a->round) < std::tie(b->diver_id, b->meet_id, b->round);
  });

  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::VectorXd y(n);
  Eigen::MatrixXd x(n, 4);
  std::vector<int> group(rows.size());
  std::vector<std::string> ids;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = *rows[static_cast<std::size_t>(i)];
    if (ids.empty() || ids.back() != r.diver_id) ids.push_back(r.diver_id);
    group[static_cast<std::size_t>(i)] = static_cast<int>(ids.size()) - 1;
    y[i] = r.discrepancy;
    x(i, 0) = 1.0;
    x(i, 1) = r.round;
    x(i, 2) = r.age;
    x(i, 3) = r.dd.as_double();
  }
  LmmDesign d = make_design(std::move(y), std::move(x), std::move(group), {"Intercept", "Round", "Age", "DD"});
  d.group_ids = std::move(ids);
  d.gender = gender;
  return d;
}

double reml_criterion(const LmmDesign& design, double lambda) {
  return RemlProfile(design).evaluate(lambda, false).criterion;
}

double reml_gradient(const LmmDesign& design, double lambda) {
  return RemlProfile(design).evaluate(lambda, true).gradient;
}

LmmFit fit_lmm(const LmmDesign& design, const LmmOptions& options) {
  const RemlProfile profile(design);
  const double theta_max = std::log1p(options.lambda_max);
  auto lambda_of = [](double theta) { return std::expm1(theta); };
  auto objective = [&](double theta) { return profile.evaluate(lambda_of(theta), false).criterion; };

  const BrentResult coarse = brent_minimize(objective, 0.0, theta_max, options.tolerance, options.max_iterations);
  if (!coarse.converged) {
    throw std::runtime_error(fmt::format("REML search did not converge in {} iterations", options.max_iterations));
  }
  int iterations = coarse.iterations;

  // The criterion is flat to rounding near its minimum, so the Brent point is
  // only good to ~sqrt(eps). Bisect on the gradient sign to finish.
  double theta = coarse.x;
  auto slope = [&](double t) { return profile.evaluate(lambda_of(t), true).gradient; };
  bool boundary = false;
  const double g0 = slope(0.0);
  if (g0 >= 0.0 && objective(0.0) <= coarse.fx) {
    theta = 0.0;
    boundary = true;
  } else {
    double step = std::max(1e-6, 1e-4 * theta);
    double lo = std::max(0.0, theta - step);
    double hi = std::min(theta_max, theta + step);
    double glo = slope(lo);
    double ghi = slope(hi);
    while ((glo > 0.0 || ghi < 0.0) && iterations < options.max_iterations) {
      ++iterations;
      step *= 2.0;
      if (glo > 0.0) {
        if (lo == 0.0) break;
        lo = std::max(0.0, theta - step);
        glo = slope(lo);
      }
      if (ghi < 0.0) {
        if (hi == theta_max) break;
        hi = std::min(theta_max, theta + step);
        ghi = slope(hi);
      }
    }
    if (glo <= 0.0 && ghi >= 0.0) {
      for (int k = 0; k < 200 && hi - lo > options.tolerance * 1e-4 * std::max(1.0, hi); ++k) {
        ++iterations;
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (slope(mid) < 0.0) lo = mid; else hi = mid;
      }
      theta = 0.5 * (lo + hi);
    } else if (ghi < 0.0 && hi == theta_max) {
      theta = theta_max;
      boundary = true;
    }
    if (theta == 0.0) boundary = true;
  }

  const Evaluation e = profile.evaluate(lambda_of(theta), false);
  const auto n = static_cast<double>(design.y.size());
  const auto p = static_cast<double>(design.x.cols());

  LmmFit fit;
  fit.names = design.column_names;
  fit.lambda = e.lambda;
  fit.beta = e.beta;
  fit.sigma2_e = e.quad / (n - p);
  fit.sigma2_b = fit.lambda * fit.sigma2_e;
  fit.se = (e.a_inv.diagonal() * fit.sigma2_e).array().sqrt();
  fit.t = fit.beta.array() / fit.se.array();
  fit.n = static_cast<std::size_t>(design.y.size());
  fit.g = design.groups;
  fit.reml_value = e.criterion;
  fit.converged = true;
  fit.at_boundary = boundary;
  fit.iterations = iterations;
  fit.icc_adj = icc_adjusted(fit);
  return fit;
}

double icc_adjusted(const LmmFit& fit) {
  const double total = fit.sigma2_b + fit.sigma2_e;
  return total > 0.0 ? fit.sigma2_b / total : 0.0;
}

std::string format_estimate(double v) { return no_negative_zero(strip_zeros(fmt::format("{:.2f}", v))); }

std::string format_standard_error(double v) {
  if (v == 0.0 || !std::isfinite(v)) return fmt::format("{}", v);
  const int decimals = std::max(0, 1 - static_cast<int>(std::floor(std::log10(std::abs(v)))));
  return strip_zeros(fmt::format("{:.{}f}", v, decimals));
}

std::string format_t(double v) { return no_negative_zero(fmt::format("{:.2f}", v)); }

std::string format_fit_table(std::span<const std::pair<std::string, LmmFit>> panels) {
  if (panels.empty()) throw std::invalid_argument("no fits to tabulate");
  const auto& names = panels.front().second.names;
  for (const auto& [label, fit] : panels) {
    if (fit.names != names) throw std::invalid_argument("fits have different fixed effects");
  }
  constexpr int kLabel = 11;
  constexpr int kCol = 10;
  constexpr int kPanel = 3 * kCol + 2;
  std::string out = fmt::format("{:<{}}", "", kLabel);
  for (const auto& [label, fit] : panels) {
    const int icc = static_cast<int>(std::lround(fit.icc_adj * 100.0));
    out += fmt::format("  {:<{}}", fmt::format("{}, n={}, g={}, ICC = {}%", label, fit.n, fit.g, icc), kPanel);
  }
  while (out.back() == ' ') out.pop_back();
  out += '\n';
  out += fmt::format("{:<{}}", "Effect", kLabel);
  for (std::size_t i = 0; i < panels.size(); ++i) {
    out += fmt::format("  {:>{}}{:>{}}{:>{}}", "Estimate", kCol, "SE", kCol, "t-statistic", kCol + 2);
  }
  out += '\n';
  for (std::size_t k = 0; k < names.size(); ++k) {
    out += fmt::format("{:<{}}", names[k], kLabel);
    for (const auto& [label, fit] : panels) {
      const auto i = static_cast<Eigen::Index>(k);
      out += fmt::format("  {:>{}}{:>{}}{:>{}}", format_estimate(fit.beta[i]), kCol,
                         format_standard_error(fit.se[i]), kCol, format_t(fit.t[i]), kCol + 2);
    }
    out += '\n';
  }
  return out;
}

std::string format_fit_table(const LmmFit& girls, const LmmFit& boys) {
  const std::pair<std::string, LmmFit> panels[] = {{"Girls", girls}, {"Boys", boys}};
  return format_fit_table(panels);
}

}  // namespace divebias

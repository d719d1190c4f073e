#include "mrp/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <iomanip>
#include <map>
#include <ostream>
#include <stdexcept>

#include <unsupported/Eigen/FFT>

namespace mrp {

double quantile(std::span<const double> values, double p) {
  if (values.empty()) return quiet_nan();
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double h = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

Summary summarize(std::span<const double> values) {
  Summary s;
  if (values.empty()) return s;
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  double sum = 0.0;
  for (double v : sorted) sum += v;
  s.mean = sum / n;
  double ss = 0.0;
  for (double v : sorted) ss += (v - s.mean) * (v - s.mean);
  s.sd = sorted.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  auto q = [&](double p) {
    const double h = p * (n - 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
  };
  s.q05 = q(0.05);
  s.q25 = q(0.25);
  s.q50 = q(0.50);
  s.q75 = q(0.75);
  s.q95 = q(0.95);
  return s;
}

Summary summarize(const Vector& values) {
  return summarize(std::span<const double>(values.data(), static_cast<std::size_t>(values.size())));
}

namespace {

/// Halves of every chain as separate columns; drops the middle draw of odd
/// lengths.
Matrix split_chains(const Matrix& draws) {
  const Index n = draws.rows() / 2;
  Matrix out(n, 2 * draws.cols());
  for (Index c = 0; c < draws.cols(); ++c) {
    out.col(2 * c) = draws.col(c).head(n);
    out.col(2 * c + 1) = draws.col(c).tail(n);
  }
  return out;
}

/// Biased autocovariance of x at all lags via FFT.
Vector autocovariance(const Vector& x) {
  const Index n = x.size();
  Index size = 1;
  while (size < 2 * n) size *= 2;
  std::vector<double> padded(static_cast<std::size_t>(size), 0.0);
  const double mean = x.mean();
  for (Index i = 0; i < n; ++i) padded[static_cast<std::size_t>(i)] = x(i) - mean;
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> freq;
  fft.fwd(freq, padded);
  for (auto& f : freq) f = std::complex<double>(std::norm(f), 0.0);
  std::vector<double> back;
  fft.inv(back, freq);
  Vector acov(n);
  for (Index i = 0; i < n; ++i) acov(i) = back[static_cast<std::size_t>(i)] / static_cast<double>(n);
  return acov;
}

}  // namespace

double split_rhat(const Matrix& draws) {
  if (draws.cols() < 1 || draws.rows() < 4) return quiet_nan();
  const Matrix split = split_chains(draws);
  const auto n = static_cast<double>(split.rows());
  const auto m = static_cast<double>(split.cols());
  const Vector means = split.colwise().mean();
  Vector vars(split.cols());
  for (Index c = 0; c < split.cols(); ++c) {
    vars(c) = (split.col(c).array() - means(c)).square().sum() / (n - 1.0);
  }
  const double W = vars.mean();
  const double B = n * (means.array() - means.mean()).square().sum() / (m - 1.0);
  if (!(W > 0.0) || !std::isfinite(W)) return quiet_nan();
  const double var_plus = (n - 1.0) / n * W + B / n;
  return std::sqrt(var_plus / W);
}

double effective_sample_size(const Matrix& draws) {
  if (draws.rows() < 4) return quiet_nan();
  const Matrix split = split_chains(draws);
  const Index n = split.rows();
  const Index m = split.cols();
  const auto nd = static_cast<double>(n);

  Matrix acov(n, m);
  Vector means(m), vars(m);
  for (Index c = 0; c < m; ++c) {
    acov.col(c) = autocovariance(split.col(c));
    means(c) = split.col(c).mean();
    vars(c) = acov(0, c) * nd / (nd - 1.0);
  }
  const double W = vars.mean();
  if (!(W > 0.0)) return quiet_nan();
  double var_plus = W * (nd - 1.0) / nd;
  if (m > 1) var_plus += (means.array() - means.mean()).square().sum() / static_cast<double>(m - 1);

  const Vector mean_acov = acov.rowwise().mean();
  auto rho = [&](Index t) { return 1.0 - (W - mean_acov(t)) / var_plus; };

  // Geyer's initial positive sequence with monotone correction.
  double tau = 0.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (Index t = 0; t + 1 < n; t += 2) {
    double pair = rho(t) + rho(t + 1);
    if (pair <= 0.0) break;
    pair = std::min(pair, prev_pair);
    prev_pair = pair;
    tau += pair;
  }
  tau = 2.0 * tau - 1.0;
  const double total = nd * static_cast<double>(m);
  tau = std::max(tau, 1.0 / std::log10(total));
  return total / tau;
}

DiagnosticsReport diagnose(const Matrix& draws, const std::vector<int>& chain,
                           const std::vector<std::string>& names, int divergences,
                           const ConvergenceThresholds& thresholds) {
  if (static_cast<Index>(chain.size()) != draws.rows()) {
    throw std::invalid_argument("diagnose: chain ids do not match draws");
  }
  std::map<int, std::vector<Index>> rows_by_chain;
  for (std::size_t i = 0; i < chain.size(); ++i) rows_by_chain[chain[i]].push_back(static_cast<Index>(i));

  DiagnosticsReport report;
  report.chains = static_cast<int>(rows_by_chain.size());
  report.divergences = divergences;
  std::size_t per_chain = std::numeric_limits<std::size_t>::max();
  for (const auto& [id, rows] : rows_by_chain) per_chain = std::min(per_chain, rows.size());
  if (rows_by_chain.empty()) per_chain = 0;
  report.draws_per_chain = static_cast<int>(per_chain);

  if (report.chains < 2) report.warnings.push_back("fewer than 2 chains: R-hat is not meaningful");

  report.max_rhat = 0.0;
  report.min_ess = std::numeric_limits<double>::infinity();
  for (Index p = 0; p < draws.cols(); ++p) {
    ParameterDiagnostic d;
    d.name = p < static_cast<Index>(names.size()) ? names[static_cast<std::size_t>(p)]
                                                  : "p" + std::to_string(p);
    const Vector column = draws.col(p);
    d.summary = summarize(column);
    Matrix by_chain(static_cast<Index>(per_chain), report.chains);
    Index c = 0;
    for (const auto& [id, rows] : rows_by_chain) {
      for (std::size_t i = 0; i < per_chain; ++i) by_chain(static_cast<Index>(i), c) = draws(rows[i], p);
      ++c;
    }
    d.rhat = split_rhat(by_chain);
    d.ess = effective_sample_size(by_chain);
    if (std::isnan(d.rhat)) {
      ++report.undefined_rhat;
    } else {
      report.max_rhat = std::max(report.max_rhat, d.rhat);
    }
    if (!std::isnan(d.ess)) report.min_ess = std::min(report.min_ess, d.ess);
    report.parameters.push_back(std::move(d));
  }
  if (!std::isfinite(report.min_ess)) report.min_ess = quiet_nan();

  const double total = static_cast<double>(draws.rows());
  if (total > 0 && divergences > thresholds.divergence_fraction * total) {
    report.warnings.push_back(std::to_string(divergences) + " divergent transitions (" +
                              std::to_string(100.0 * divergences / total) + "% of draws)");
  }
  report.converged = report.chains >= 2 && report.undefined_rhat == 0 &&
                     report.max_rhat <= thresholds.max_rhat && report.min_ess >= thresholds.min_ess;
  if (report.undefined_rhat > 0) {
    report.warnings.push_back(std::to_string(report.undefined_rhat) +
                              " parameter(s) never moved: R-hat undefined");
  }
  if (report.max_rhat > thresholds.max_rhat) {
    report.warnings.push_back("R-hat above " + std::to_string(thresholds.max_rhat));
  }
  if (report.min_ess < thresholds.min_ess) {
    report.warnings.push_back("effective sample size below " + std::to_string(thresholds.min_ess));
  }
  return report;
}

namespace {

std::string fmt_or_undefined(double v, int precision) {
  if (std::isnan(v)) return "undefined";
  std::ostringstream s;
  s << std::fixed << std::setprecision(precision) << v;
  return s.str();
}

}  // namespace

void write_report_table(std::ostream& out, const DiagnosticsReport& report) {
  out << "chains: " << report.chains << "  draws/chain: " << report.draws_per_chain
      << "  divergences: " << report.divergences << "\n";
  out << "status: " << (report.converged ? "converged" : "non-converged") << "\n";
  for (const auto& w : report.warnings) out << "warning: " << w << "\n";
  out << "\n"
      << std::left << std::setw(28) << "parameter" << std::right << std::setw(11) << "mean"
      << std::setw(10) << "sd" << std::setw(11) << "q05" << std::setw(11) << "q50"
      << std::setw(11) << "q95" << std::setw(10) << "rhat" << std::setw(10) << "ess" << "\n";
  for (const auto& p : report.parameters) {
    out << std::left << std::setw(28) << p.name << std::right << std::fixed << std::setprecision(4)
        << std::setw(11) << p.summary.mean << std::setw(10) << p.summary.sd << std::setw(11)
        << p.summary.q05 << std::setw(11) << p.summary.q50 << std::setw(11) << p.summary.q95
        << std::setw(10) << fmt_or_undefined(p.rhat, 3) << std::setw(10)
        << fmt_or_undefined(p.ess, 0) << "\n";
  }
}

void write_report_kv(std::ostream& out, const DiagnosticsReport& report) {
  out << "chains=" << report.chains << "\n";
  out << "draws_per_chain=" << report.draws_per_chain << "\n";
  out << "divergences=" << report.divergences << "\n";
  out << "converged=" << (report.converged ? "true" : "false") << "\n";
  out << "max_rhat=" << fmt_or_undefined(report.max_rhat, 6) << "\n";
  out << "min_ess=" << fmt_or_undefined(report.min_ess, 1) << "\n";
  out << "undefined_rhat=" << report.undefined_rhat << "\n";
  for (const auto& p : report.parameters) {
    out << "rhat." << p.name << "=" << fmt_or_undefined(p.rhat, 6) << "\n";
    out << "ess." << p.name << "=" << fmt_or_undefined(p.ess, 1) << "\n";
  }
}

}  // namespace mrp

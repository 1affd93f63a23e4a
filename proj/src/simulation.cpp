#include "wit/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "wit/data.hpp"
#include "wit/distributions.hpp"
#include "wit/pipeline.hpp"
#include "wit/rng.hpp"

namespace wit {

MatrixXd ZCovSpec::materialize(Index p) const {
  MatrixXd s(p, p);
  if (identity) {
    s.setIdentity();
    return s;
  }
  for (Index j = 0; j < p; ++j) {
    s(j, j) = var;
    for (Index k = 0; k < j; ++k) {
      const double d = static_cast<double>(j - k);
      const double corr = std::pow(corr_base, std::pow(d, corr_expo));
      s(j, k) = s(k, j) = var * corr;
    }
  }
  return s;
}

void DGPSpec::validate() const {
  if (n <= p()) throw ConfigError("dgp: requires n > p");
  if (alpha_star.size() != gamma_star.size())
    throw ConfigError("dgp: alpha and gamma lengths disagree");
  if (sigma_eps < 0.0 || sigma_eta <= 0.0)
    throw ConfigError("dgp: error scales must be positive");
  const double cov = corr_eps_eta * sigma_eps * sigma_eta;
  const double det = sigma_eps * sigma_eps * sigma_eta * sigma_eta - cov * cov;
  if (sigma_eps > 0.0 && det <= 0.0)
    throw ConfigError("dgp: error covariance not positive definite");
}

std::pair<IVDataset, TruthLabels> generate(const DGPSpec& spec) {
  spec.validate();
  const Index n = spec.n, p = spec.p();

  const MatrixXd sigma_z = spec.z_cov.materialize(p);
  Eigen::LLT<MatrixXd> llt(sigma_z);
  if (llt.info() != Eigen::Success)
    throw ConfigError("dgp: instrument covariance not positive definite");
  const MatrixXd chol_l = llt.matrixL();

  SubstreamRng rng(spec.seed, 0);
  MatrixXd z(n, p);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < p; ++j) z(i, j) = rng.normal();
  z = z * chol_l.transpose();

  const double cov = spec.corr_eps_eta * spec.sigma_eps * spec.sigma_eta;
  const double l11 = spec.sigma_eps;
  const double l21 = l11 > 0.0 ? cov / l11 : 0.0;
  const double l22 =
      std::sqrt(std::max(spec.sigma_eta * spec.sigma_eta - l21 * l21, 0.0));
  VectorXd eps(n), eta(n);
  for (Index i = 0; i < n; ++i) {
    const double u1 = rng.normal(), u2 = rng.normal();
    eps[i] = l11 * u1;
    eta[i] = l21 * u1 + l22 * u2;
  }

  VectorXd d = z * spec.gamma_star + eta;
  VectorXd y = d * spec.beta_star + z * spec.alpha_star + eps;

  TruthLabels truth;
  truth.beta_star = spec.beta_star;
  truth.alpha_star = spec.alpha_star;
  truth.gamma_star = spec.gamma_star;
  truth.valid_set = zero_pattern(spec.alpha_star);
  truth.validate();
  return {make_dataset(std::move(y), std::move(d), std::move(z)), truth};
}

CaseName parse_case_name(const std::string& name) {
  std::string u;
  for (char c : name) u += static_cast<char>(std::toupper(c));
  std::replace(u.begin(), u.end(), '(', '_');
  std::replace(u.begin(), u.end(), '-', '_');
  u.erase(std::remove(u.begin(), u.end(), ')'), u.end());
  if (u == "C1_I") return CaseName::C1_I;
  if (u == "C1_II") return CaseName::C1_II;
  if (u == "C1_III") return CaseName::C1_III;
  if (u == "C1_IV") return CaseName::C1_IV;
  if (u == "C2_I") return CaseName::C2_I;
  if (u == "C2_II") return CaseName::C2_II;
  if (u == "EXAMPLE_1" || u == "EXAMPLE1") return CaseName::EXAMPLE_1;
  throw ConfigError("unknown case name: " + name);
}

std::string case_name_string(CaseName c) {
  switch (c) {
    case CaseName::C1_I: return "C1_I";
    case CaseName::C1_II: return "C1_II";
    case CaseName::C1_III: return "C1_III";
    case CaseName::C1_IV: return "C1_IV";
    case CaseName::C2_I: return "C2_I";
    case CaseName::C2_II: return "C2_II";
    case CaseName::EXAMPLE_1: return "EXAMPLE_1";
  }
  return "?";
}

namespace {

VectorXd blocks(std::initializer_list<std::pair<double, Index>> parts) {
  Index total = 0;
  for (const auto& [v, c] : parts) total += c;
  VectorXd out(total);
  Index at = 0;
  for (const auto& [v, c] : parts) {
    out.segment(at, c).setConstant(v);
    at += c;
  }
  return out;
}

}  // namespace

DGPSpec builtin_case(CaseName name, Index n, std::uint64_t seed) {
  DGPSpec s;
  s.n = n;
  s.seed = seed;
  switch (name) {
    case CaseName::C1_I:
      s.gamma_star = blocks({{0.5, 4}, {0.6, 6}});
      s.alpha_star = blocks({{0.0, 5}, {0.4, 3}, {0.8, 2}});
      break;
    case CaseName::C1_II:
    case CaseName::EXAMPLE_1:
      s.gamma_star = blocks({{0.04, 3}, {0.5, 2}, {0.2, 1}, {0.1, 4}});
      s.alpha_star = blocks({{0.0, 5}, {1.0, 1}, {0.7, 4}});
      break;
    case CaseName::C1_III:
      s.gamma_star = blocks({{0.4, 21}});
      s.alpha_star = blocks({{0.0, 9}, {0.4, 6}, {0.2, 6}});
      s.z_cov.identity = true;
      break;
    case CaseName::C1_IV:
      s.gamma_star = blocks({{0.15, 21}});
      s.alpha_star = blocks({{0.0, 9}, {0.4, 6}, {0.2, 6}});
      s.z_cov.identity = true;
      break;
    case CaseName::C2_I: {
      const Index p = static_cast<Index>(std::llround(0.5 * n));
      const double s0 =
          std::sqrt(std::log(static_cast<double>(p)) / std::pow(n, 0.99));
      const Index n_valid = static_cast<Index>(0.6 * p);
      s.gamma_star = blocks({{2.0 * s0, p}});
      s.alpha_star = blocks({{0.0, n_valid}, {2.0 * s0, p - n_valid}});
      s.z_cov.var = 1.0;
      break;
    }
    case CaseName::C2_II: {
      const Index p = static_cast<Index>(std::llround(0.6 * n));
      const double s0 =
          std::sqrt(std::log(static_cast<double>(p)) / std::pow(n, 0.99));
      const Index n_valid = static_cast<Index>(0.5 * p);
      const Index n_neg = static_cast<Index>(0.2 * p);
      const Index n_pos = p - n_valid - n_neg;  // remainder joins last group
      s.gamma_star = blocks({{2.0 * s0, p}});
      s.alpha_star =
          blocks({{0.0, n_valid}, {-2.0 * s0, n_neg}, {4.0 * s0, n_pos}});
      s.z_cov.var = 1.0;
      break;
    }
  }
  if (name == CaseName::C2_I || name == CaseName::C2_II) {
    // sigma_eta holds the concentration-to-sample-size ratio at 0.5
    const MatrixXd sz = s.z_cov.materialize(s.p());
    const double quad = s.gamma_star.dot(sz * s.gamma_star);
    s.sigma_eta = std::sqrt(quad / 0.5);
  }
  s.validate();
  return s;
}

EquivalentDGP transform_dgp(const TruthLabels& truth, double c) {
  EquivalentDGP e;
  e.c = c;
  e.beta_tilde = truth.beta_star + c;
  e.alpha_tilde = truth.alpha_star - c * truth.gamma_star;
  e.zero_set = zero_pattern(e.alpha_tilde, 1e-12);
  return e;
}

std::vector<EquivalentDGP> enumerate_solutions(const TruthLabels& truth) {
  const Index p = truth.alpha_star.size();
  std::vector<double> ratios;
  for (Index j = 0; j < p; ++j) {
    if (truth.alpha_star[j] == 0.0) continue;
    if (truth.gamma_star[j] == 0.0)
      throw EnumerationError(
          "enumerate_solutions: alpha[" + std::to_string(j + 1) +
          "] is nonzero with gamma[" + std::to_string(j + 1) +
          "] = 0, ratio undefined");
    ratios.push_back(truth.alpha_star[j] / truth.gamma_star[j]);
  }
  std::sort(ratios.begin(), ratios.end());
  std::vector<double> distinct;
  for (double r : ratios) {
    if (distinct.empty() ||
        std::abs(r - distinct.back()) > 1e-9 * std::max(1.0, std::abs(r)))
      distinct.push_back(r);
  }

  std::vector<EquivalentDGP> family;
  family.push_back(transform_dgp(truth, 0.0));
  for (double c : distinct) family.push_back(transform_dgp(truth, c));

  // Theorem-style sanity: the zero sets must partition {1..p}
  std::vector<int> hits(static_cast<size_t>(p), 0);
  for (const auto& e : family)
    for (Index j : e.zero_set) hits[static_cast<size_t>(j)]++;
  for (Index j = 0; j < p; ++j)
    if (hits[static_cast<size_t>(j)] != 1)
      throw EnumerationError(
          "enumerate_solutions: zero sets do not partition the instruments "
          "(index " + std::to_string(j + 1) + ")");
  return family;
}

const EquivalentDGP& sparsest_pick(const std::vector<EquivalentDGP>& family) {
  if (family.empty()) throw ConfigError("sparsest_pick: empty family");
  size_t best = 0;
  bool tie = false;
  for (size_t i = 1; i < family.size(); ++i) {
    if (family[i].zero_set.size() > family[best].zero_set.size()) {
      best = i;
      tie = false;
    } else if (family[i].zero_set.size() == family[best].zero_set.size()) {
      tie = true;
    }
  }
  if (tie && family.size() > 1)
    throw IdentificationError(
        "sparsest_pick: tie in maximal zero set, identification fails");
  return family[best];
}

MetricsReport evaluate(const std::string& method,
                       const std::vector<ReplicationOutcome>& results,
                       const TruthLabels& truth) {
  if (results.empty()) throw ConfigError("evaluate: no replications");
  MetricsReport rep;
  rep.method = method;
  rep.n_reps = static_cast<int>(results.size());

  std::vector<double> abs_err, betas;
  double covered = 0.0;
  int n_ok = 0;
  double fpr_sum = 0.0, fnr_sum = 0.0;
  int n_sel = 0;
  const Index p = truth.alpha_star.size();
  const double p_valid = static_cast<double>(truth.valid_set.size());
  const double p_invalid = static_cast<double>(p) - p_valid;

  for (const auto& r : results) {
    if (r.failed) {
      rep.failures++;
      continue;
    }
    ++n_ok;
    abs_err.push_back(std::abs(r.beta_hat - truth.beta_star));
    betas.push_back(r.beta_hat);
    if (r.ci_low <= truth.beta_star && truth.beta_star <= r.ci_high)
      covered += 1.0;
    if (r.valid_set) {
      std::vector<bool> declared_valid(static_cast<size_t>(p), false);
      for (Index j : *r.valid_set) declared_valid[static_cast<size_t>(j)] = true;
      double fp = 0.0, fn = 0.0;
      for (Index j = 0; j < p; ++j) {
        const bool truly_valid = truth.alpha_star[j] == 0.0;
        const bool decl_valid = declared_valid[static_cast<size_t>(j)];
        if (truly_valid && !decl_valid) fp += 1.0;    // valid declared invalid
        if (!truly_valid && decl_valid) fn += 1.0;    // invalid declared valid
      }
      if (p_valid > 0.0) fpr_sum += fp / p_valid;
      if (p_invalid > 0.0) fnr_sum += fn / p_invalid;
      ++n_sel;
    }
  }
  if (n_ok == 0) return rep;

  std::sort(abs_err.begin(), abs_err.end());
  const size_t m = abs_err.size();
  rep.mad = m % 2 == 1 ? abs_err[m / 2]
                       : 0.5 * (abs_err[m / 2 - 1] + abs_err[m / 2]);
  double mean = 0.0;
  for (double b : betas) mean += b;
  mean /= static_cast<double>(n_ok);
  double ss = 0.0;
  for (double b : betas) ss += (b - mean) * (b - mean);
  rep.std_dev = n_ok > 1 ? std::sqrt(ss / static_cast<double>(n_ok - 1)) : 0.0;
  rep.cp = covered / static_cast<double>(n_ok);
  if (n_sel > 0) {
    rep.fpr = fpr_sum / static_cast<double>(n_sel);
    rep.fnr = fnr_sum / static_cast<double>(n_sel);
  }
  return rep;
}

std::vector<std::string> known_methods() {
  return {"wit",  "wit-scad", "lasso-baseline", "tsls",
          "liml", "ols",      "oracle-tsls",    "oracle-liml"};
}

namespace {

ReplicationOutcome run_method(const std::string& method, const IVDataset& raw,
                              const TruthLabels& truth) {
  ReplicationOutcome out;
  try {
    const IVDataset ds = standardize(raw);
    const Index p = ds.p();
    IndexSet all;
    for (Index j = 0; j < p; ++j) all.push_back(j);

    auto kclass_row = [&](const IndexSet& valid) {
      KClassFit kf = kclass(ds, valid, 1.0);
      const double var = kclass_classical_variance(ds, kf);
      out.beta_hat = kf.beta_hat;
      std::tie(out.ci_low, out.ci_high) =
          confidence_interval(kf.beta_hat, var, 0.95);
    };

    if (method == "wit" || method == "wit-scad" ||
        method == "lasso-baseline") {
      WitOptions opt;
      if (method == "wit-scad")
        opt.penalty = PenaltyKind::SCAD;
      else if (method == "lasso-baseline")
        opt.penalty = PenaltyKind::Lasso;
      const WitPipelineResult res = fit_wit(ds, opt);
      out.beta_hat = res.fit.beta_hat;
      out.ci_low = res.fit.ci_low;
      out.ci_high = res.fit.ci_high;
      out.valid_set = res.fit.valid_set;
    } else if (method == "oracle-liml") {
      const WITFit fit = wit_estimate(ds, truth.valid_set);
      out.beta_hat = fit.beta_hat;
      out.ci_low = fit.ci_low;
      out.ci_high = fit.ci_high;
    } else if (method == "oracle-tsls") {
      kclass_row(truth.valid_set);
    } else if (method == "liml") {
      const WITFit fit = wit_estimate(ds, all);
      out.beta_hat = fit.beta_hat;
      out.ci_low = fit.ci_low;
      out.ci_high = fit.ci_high;
    } else if (method == "tsls") {
      kclass_row(all);
    } else if (method == "ols") {
      MatrixXd x(ds.n(), 1);
      x.col(0) = ds.d;
      const VectorXd beta = ols(ds.y, x);
      const VectorXd e = ds.y - x * beta;
      const double sigma2 =
          e.squaredNorm() / static_cast<double>(ds.n() - 1);
      const double var = sigma2 / ds.d.squaredNorm();
      out.beta_hat = beta[0];
      std::tie(out.ci_low, out.ci_high) =
          confidence_interval(beta[0], var, 0.95);
    } else {
      throw ConfigError("unknown method: " + method);
    }
  } catch (const Error&) {
    out.failed = true;
  }
  return out;
}

}  // namespace

std::vector<StudyRow> run_study(const StudyConfig& cfg) {
  if (cfg.reps < 1) throw ConfigError("run_study: reps must be >= 1");
  if (cfg.n_values.empty()) throw ConfigError("run_study: no sample sizes");
  std::vector<std::string> methods =
      cfg.methods.empty() ? std::vector<std::string>{"wit"} : cfg.methods;

  int workers = cfg.workers > 0
                    ? cfg.workers
                    : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min(workers, cfg.reps));

  std::vector<StudyRow> rows;
  for (Index n : cfg.n_values) {
    const size_t n_methods = methods.size();
    std::vector<std::vector<ReplicationOutcome>> per_method(
        n_methods, std::vector<ReplicationOutcome>(cfg.reps));

    const DGPSpec spec0 = builtin_case(cfg.case_name, n, cfg.seed);
    TruthLabels truth;
    truth.beta_star = spec0.beta_star;
    truth.alpha_star = spec0.alpha_star;
    truth.gamma_star = spec0.gamma_star;
    truth.valid_set = zero_pattern(spec0.alpha_star);

    std::atomic<int> next{0};
    auto worker = [&]() {
      for (;;) {
        const int r = next.fetch_add(1);
        if (r >= cfg.reps) return;
        const DGPSpec spec = builtin_case(
            cfg.case_name, n, cfg.seed + static_cast<std::uint64_t>(r));
        auto [ds, tr] = generate(spec);
        for (size_t mi = 0; mi < n_methods; ++mi)
          per_method[mi][static_cast<size_t>(r)] =
              run_method(methods[mi], ds, tr);
      }
    };
    std::vector<std::thread> pool;
    for (int t = 1; t < workers; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    for (size_t mi = 0; mi < n_methods; ++mi) {
      StudyRow row;
      row.case_name = case_name_string(cfg.case_name);
      row.n = n;
      row.metrics = evaluate(methods[mi], per_method[mi], truth);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace wit

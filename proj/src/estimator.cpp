#include "peerfx/estimator.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "peerfx/error.h"
#include "peerfx/parallel.h"

namespace peerfx {

namespace {

constexpr std::size_t kRowBlock = 1 << 16;
constexpr std::size_t kClusterBlock = 1 << 12;
constexpr double kWeakThreshold = 1e-7;
constexpr double kCollinearTol = 1e-10;
constexpr const char* kIntercept = "(intercept)";

std::vector<std::uint32_t> dense_ids(std::span<const std::uint64_t> keys, std::size_t* count) {
  std::vector<std::uint64_t> unique(keys.begin(), keys.end());
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  std::vector<std::uint32_t> ids(keys.size());
  parallel_for(keys.size(), kRowBlock, [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      ids[r] = static_cast<std::uint32_t>(
          std::lower_bound(unique.begin(), unique.end(), keys[r]) - unique.begin());
    }
  });
  if (count != nullptr) *count = unique.size();
  return ids;
}

// Rows grouped by cluster, each group in ascending row order.
struct ClusterLayout {
  std::vector<std::uint32_t> ids;
  std::size_t count = 0;
  std::vector<std::size_t> offsets;
  std::vector<std::uint32_t> rows;

  void build() {
    offsets.assign(count + 1, 0);
    for (const auto id : ids) ++offsets[id + 1];
    std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
    rows.resize(ids.size());
    std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
    for (std::size_t r = 0; r < ids.size(); ++r) rows[cursor[ids[r]]++] = static_cast<std::uint32_t>(r);
  }
};

void demean(std::vector<double>& column, std::span<const std::uint32_t> group, std::size_t groups,
            std::span<const double> inv_size, std::vector<double>& sums, double& max_change) {
  sums.assign(groups, 0.0);
  for (std::size_t r = 0; r < column.size(); ++r) sums[group[r]] += column[r];
  for (std::size_t g = 0; g < groups; ++g) {
    sums[g] *= inv_size[g];
    max_change = std::max(max_change, std::abs(sums[g]));
  }
  for (std::size_t r = 0; r < column.size(); ++r) column[r] -= sums[group[r]];
}

std::vector<double> inverse_sizes(std::span<const std::uint32_t> group, std::size_t groups,
                                  std::size_t* singletons) {
  std::vector<double> size(groups, 0.0);
  for (const auto g : group) size[g] += 1.0;
  std::size_t ones = 0;
  for (auto& s : size) {
    if (s == 1.0) ++ones;
    s = s > 0 ? 1.0 / s : 0.0;
  }
  if (singletons != nullptr) *singletons += ones;
  return size;
}

// Within-transformed columns plus everything the fits share.
struct Workspace {
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;
  std::vector<double> raw_ss;
  std::size_t n = 0;
  int sweeps = 0;
  bool converged = true;
  std::size_t singletons = 0;
  ClusterLayout clusters;
  Eigen::MatrixXd gram;

  std::size_t at(const std::string& name) const {
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw NotFound("column '" + name + "' not in design");
    return static_cast<std::size_t>(it - names.begin());
  }
  std::vector<std::size_t> at(const std::vector<std::string>& list) const {
    std::vector<std::size_t> out;
    for (const auto& name : list) out.push_back(at(name));
    return out;
  }
  Eigen::MatrixXd cross(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) const {
    Eigen::MatrixXd out(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      for (std::size_t j = 0; j < b.size(); ++j) out(i, j) = gram(a[i], b[j]);
    }
    return out;
  }
};

Eigen::MatrixXd gram_matrix(const std::vector<std::vector<double>>& columns, std::size_t n) {
  const std::size_t c = columns.size();
  std::vector<Eigen::MatrixXd> parts(chunk_count(n, kRowBlock), Eigen::MatrixXd::Zero(c, c));
  parallel_for(n, kRowBlock, [&](std::size_t begin, std::size_t end) {
    auto& part = parts[begin / kRowBlock];
    for (std::size_t i = 0; i < c; ++i) {
      for (std::size_t j = i; j < c; ++j) {
        const double* a = columns[i].data();
        const double* b = columns[j].data();
        double sum = 0.0;
        for (std::size_t r = begin; r < end; ++r) sum += a[r] * b[r];
        part(i, j) = sum;
        part(j, i) = sum;
      }
    }
  });
  if (parts.empty()) return Eigen::MatrixXd::Zero(c, c);
  return tree_reduce(std::move(parts), [](const Eigen::MatrixXd& l, const Eigen::MatrixXd& r) {
    return Eigen::MatrixXd(l + r);
  });
}

std::vector<std::string> unique_names(const DesignSpec& spec) {
  std::vector<std::string> names{spec.outcome};
  for (const auto* list : {&spec.endogenous, &spec.instruments, &spec.exogenous}) {
    for (const auto& name : *list) {
      if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(name);
    }
  }
  return names;
}

Workspace prepare(const DesignSpec& spec, const Frame& frame, std::vector<std::string> extra = {}) {
  for (const auto& z : spec.instruments) {
    if (std::find(spec.exogenous.begin(), spec.exogenous.end(), z) != spec.exogenous.end()) {
      throw InvalidParameter("instrument '" + z + "' is also listed as exogenous");
    }
  }
  if (spec.intercept && spec.fixed_effects != FixedEffects::None) {
    throw InvalidParameter("an intercept is absorbed by fixed effects");
  }
  if (frame.rows() == 0) throw EmptyPanel("no rows to estimate on");

  Workspace ws;
  ws.n = frame.rows();
  ws.names = unique_names(spec);
  for (auto& name : extra) {
    if (std::find(ws.names.begin(), ws.names.end(), name) == ws.names.end()) ws.names.push_back(name);
  }
  auto within = within_transform(frame, ws.names, spec.fixed_effects, spec.fe_tol, spec.fe_max_sweeps);
  ws.columns = std::move(within.columns);
  ws.sweeps = within.sweeps;
  ws.converged = within.converged;
  for (const auto& name : ws.names) {
    const auto col = frame.column(name);
    double ss = 0.0;
    for (const double v : col) ss += v * v;
    ws.raw_ss.push_back(ss);
  }
  if (spec.intercept) {
    ws.names.push_back(kIntercept);
    ws.columns.emplace_back(ws.n, 1.0);
    ws.raw_ss.push_back(static_cast<double>(ws.n));
  }
  if (spec.fixed_effects == FixedEffects::Player || spec.fixed_effects == FixedEffects::Both) {
    std::size_t groups = 0;
    const auto ids = cluster_index(frame, ClusterBy::Player, &groups);
    inverse_sizes(ids, groups, &ws.singletons);
  }
  if (spec.fixed_effects == FixedEffects::Week || spec.fixed_effects == FixedEffects::Both) {
    std::size_t groups = 0;
    const auto ids = cluster_index(frame, ClusterBy::Week, &groups);
    inverse_sizes(ids, groups, &ws.singletons);
  }
  ws.clusters.ids = cluster_index(frame, spec.cluster, &ws.clusters.count);
  ws.clusters.build();
  ws.gram = gram_matrix(ws.columns, ws.n);
  return ws;
}

// Columns whose within variation vanishes, or that add nothing to the span
// of the columns before them.
std::vector<std::string> collinear_columns(const Workspace& ws, const std::vector<std::size_t>& cols) {
  std::vector<std::string> bad;
  std::vector<std::size_t> kept;
  for (const std::size_t c : cols) {
    const double ss = ws.gram(c, c);
    if (ss <= 1e-14 * std::max(ws.raw_ss[c], 1.0)) {
      bad.push_back(ws.names[c]);
      continue;
    }
    auto trial = kept;
    trial.push_back(c);
    Eigen::MatrixXd g = ws.cross(trial, trial);
    const Eigen::VectorXd scale = g.diagonal().cwiseSqrt().cwiseInverse();
    g = scale.asDiagonal() * g * scale.asDiagonal();
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(g);
    qr.setThreshold(kCollinearTol);
    if (static_cast<std::size_t>(qr.rank()) < trial.size()) {
      bad.push_back(ws.names[c]);
    } else {
      kept = std::move(trial);
    }
  }
  return bad;
}

std::vector<double> residuals(const Workspace& ws, std::size_t outcome, const std::vector<std::size_t>& cols,
                              const Eigen::VectorXd& beta) {
  std::vector<double> u(ws.n);
  parallel_for(ws.n, kRowBlock, [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      double fit = 0.0;
      for (std::size_t k = 0; k < cols.size(); ++k) fit += beta[static_cast<Eigen::Index>(k)] * ws.columns[cols[k]][r];
      u[r] = ws.columns[outcome][r] - fit;
    }
  });
  return u;
}

Eigen::MatrixXd sandwich(const Workspace& ws, std::span<const double> u, const std::vector<std::size_t>& score_cols,
                         const Eigen::MatrixXd& bread) {
  const std::size_t g_count = ws.clusters.count;
  if (g_count < 2) throw InsufficientClusters("need at least 2 clusters, have " + std::to_string(g_count));
  const std::size_t k = score_cols.size();
  std::vector<Eigen::MatrixXd> parts(chunk_count(g_count, kClusterBlock), Eigen::MatrixXd::Zero(k, k));
  parallel_for(g_count, kClusterBlock, [&](std::size_t begin, std::size_t end) {
    auto& part = parts[begin / kClusterBlock];
    Eigen::VectorXd s(k);
    for (std::size_t g = begin; g < end; ++g) {
      s.setZero();
      for (std::size_t p = ws.clusters.offsets[g]; p < ws.clusters.offsets[g + 1]; ++p) {
        const std::uint32_t r = ws.clusters.rows[p];
        for (std::size_t j = 0; j < k; ++j) s[static_cast<Eigen::Index>(j)] += ws.columns[score_cols[j]][r] * u[r];
      }
      part.noalias() += s * s.transpose();
    }
  });
  const Eigen::MatrixXd meat = tree_reduce(std::move(parts), [](const Eigen::MatrixXd& l, const Eigen::MatrixXd& r) {
    return Eigen::MatrixXd(l + r);
  });
  const double n = static_cast<double>(ws.n);
  const double g = static_cast<double>(g_count);
  const double kk = static_cast<double>(k);
  const double factor = (g / (g - 1.0)) * (n > kk ? (n - 1.0) / (n - kk) : 1.0);
  Eigen::MatrixXd v = bread * meat * bread.transpose() * factor;
  return (v + v.transpose()) * 0.5;
}

Eigen::MatrixXd solve_inverse(const Eigen::MatrixXd& m) {
  return m.colPivHouseholderQr().inverse();
}

double r_squared(const Workspace& ws, std::size_t outcome, std::span<const double> u) {
  const double sst = ws.gram(outcome, outcome);
  if (sst <= 0.0) return 0.0;
  double ssr = 0.0;
  for (const double v : u) ssr += v * v;
  if (ws.names.back() == kIntercept) {
    double mean = 0.0;
    for (const double v : ws.columns[outcome]) mean += v;
    mean /= static_cast<double>(ws.n);
    const double centered = sst - static_cast<double>(ws.n) * mean * mean;
    return centered > 0 ? 1.0 - ssr / centered : 0.0;
  }
  return 1.0 - ssr / sst;
}

FitResult finish(const Workspace& ws, std::string model, const std::vector<std::size_t>& cols) {
  FitResult fit;
  fit.model = std::move(model);
  for (const auto c : cols) fit.terms.push_back(ws.names[c]);
  fit.n_obs = ws.n;
  fit.n_clusters = ws.clusters.count;
  fit.n_singleton_groups = ws.singletons;
  fit.within_sweeps = ws.sweeps;
  fit.within_converged = ws.converged;
  return fit;
}

FitResult ols_on(const Workspace& ws, std::size_t outcome, const std::vector<std::size_t>& cols, std::string model) {
  if (cols.empty()) throw InvalidParameter("design has no regressors");
  const auto bad = collinear_columns(ws, cols);
  if (!bad.empty()) throw RankDeficient(bad);
  const Eigen::MatrixXd xx = ws.cross(cols, cols);
  const Eigen::VectorXd xy = ws.cross(cols, {outcome}).col(0);
  FitResult fit = finish(ws, std::move(model), cols);
  fit.coef = xx.colPivHouseholderQr().solve(xy);
  const auto u = residuals(ws, outcome, cols, fit.coef);
  fit.vcov = sandwich(ws, u, cols, solve_inverse(xx));
  fit.r_squared = r_squared(ws, outcome, u);
  return fit;
}

// Cluster-robust Wald statistic of the leading `count` coefficients.
double wald(const FitResult& fit, std::size_t count) {
  const auto k = static_cast<Eigen::Index>(count);
  const Eigen::VectorXd b = fit.coef.head(k);
  const Eigen::MatrixXd v = fit.vcov.topLeftCorner(k, k);
  return b.dot(v.colPivHouseholderQr().solve(b));
}

// Smallest canonical correlation between endogenous and excluded
// instruments after partialling out the exogenous columns.
double canonical_correlation(const Workspace& ws, const std::vector<std::size_t>& endo,
                             const std::vector<std::size_t>& inst, const std::vector<std::size_t>& exog) {
  Eigen::MatrixXd sxx = ws.cross(endo, endo);
  Eigen::MatrixXd szz = ws.cross(inst, inst);
  Eigen::MatrixXd sxz = ws.cross(endo, inst);
  if (!exog.empty()) {
    const Eigen::MatrixXd ww_inv = solve_inverse(ws.cross(exog, exog));
    const Eigen::MatrixXd xw = ws.cross(endo, exog);
    const Eigen::MatrixXd zw = ws.cross(inst, exog);
    sxx -= xw * ww_inv * xw.transpose();
    szz -= zw * ww_inv * zw.transpose();
    sxz -= xw * ww_inv * zw.transpose();
  }
  for (Eigen::Index i = 0; i < sxx.rows(); ++i) {
    if (sxx(i, i) <= 0.0 || szz(i, i) <= 0.0) return 0.0;
  }
  Eigen::LLT<Eigen::MatrixXd> lx(sxx);
  Eigen::LLT<Eigen::MatrixXd> lz(szz);
  if (lx.info() != Eigen::Success || lz.info() != Eigen::Success) return 0.0;
  // Singular values of Lx^-1 Sxz Lz^-T are the canonical correlations.
  const Eigen::MatrixXd a = lx.matrixL().solve(sxz);
  const Eigen::MatrixXd m = lz.matrixL().solve(a.transpose()).transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues().minCoeff();
}

}  // namespace

// ---- FitResult ------------------------------------------------------------------

double FitResult::se(std::size_t k) const {
  const auto i = static_cast<Eigen::Index>(k);
  return std::sqrt(std::max(vcov(i, i), 0.0));
}

std::size_t FitResult::index(const std::string& term) const {
  const auto it = std::find(terms.begin(), terms.end(), term);
  if (it == terms.end()) throw NotFound("term '" + term + "' not in " + model + " fit");
  return static_cast<std::size_t>(it - terms.begin());
}

double FitResult::estimate(const std::string& term) const {
  return coef[static_cast<Eigen::Index>(index(term))];
}

double FitResult::se(const std::string& term) const { return se(index(term)); }

// ---- Building blocks --------------------------------------------------------------

std::vector<std::uint32_t> cluster_index(const Frame& frame, ClusterBy by, std::size_t* count) {
  const std::size_t n = frame.rows();
  if (by == ClusterBy::Row) {
    std::vector<std::uint32_t> ids(n);
    std::iota(ids.begin(), ids.end(), 0u);
    if (count != nullptr) *count = n;
    return ids;
  }
  std::vector<std::uint64_t> keys(n);
  if (by == ClusterBy::Player) {
    const auto players = frame.players();
    for (std::size_t r = 0; r < n; ++r) keys[r] = raw(players[r]);
  } else {
    const auto weeks = frame.weeks();
    for (std::size_t r = 0; r < n; ++r) keys[r] = static_cast<std::uint64_t>(static_cast<std::int64_t>(weeks[r]) + (INT64_C(1) << 40));
  }
  return dense_ids(keys, count);
}

WithinResult within_transform(const Frame& frame, std::span<const std::string> columns, FixedEffects fe,
                              double tol, int max_sweeps) {
  if (!(tol > 0.0)) throw InvalidParameter("within-transform tolerance must be positive");
  WithinResult result;
  result.columns.reserve(columns.size());
  for (const auto& name : columns) {
    const auto col = frame.column(name);
    result.columns.emplace_back(col.begin(), col.end());
  }
  if (fe == FixedEffects::None || frame.rows() == 0) return result;

  struct Dimension {
    std::vector<std::uint32_t> ids;
    std::size_t groups = 0;
    std::vector<double> inv_size;
  };
  std::vector<Dimension> dims;
  if (fe == FixedEffects::Player || fe == FixedEffects::Both) {
    Dimension d;
    d.ids = cluster_index(frame, ClusterBy::Player, &d.groups);
    d.inv_size = inverse_sizes(d.ids, d.groups, nullptr);
    dims.push_back(std::move(d));
  }
  if (fe == FixedEffects::Week || fe == FixedEffects::Both) {
    Dimension d;
    d.ids = cluster_index(frame, ClusterBy::Week, &d.groups);
    d.inv_size = inverse_sizes(d.ids, d.groups, nullptr);
    dims.push_back(std::move(d));
  }

  std::vector<int> sweeps(columns.size(), 0);
  std::vector<char> converged(columns.size(), 1);
  parallel_for(columns.size(), 1, [&](std::size_t begin, std::size_t end) {
    std::vector<double> sums;
    for (std::size_t c = begin; c < end; ++c) {
      auto& column = result.columns[c];
      if (dims.size() == 1) {
        double change = 0.0;
        demean(column, dims[0].ids, dims[0].groups, dims[0].inv_size, sums, change);
        sweeps[c] = 1;
        continue;
      }
      converged[c] = 0;
      for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
        double change = 0.0;
        for (const auto& d : dims) demean(column, d.ids, d.groups, d.inv_size, sums, change);
        sweeps[c] = sweep;
        if (change < tol) {
          converged[c] = 1;
          break;
        }
      }
    }
  });
  result.sweeps = *std::max_element(sweeps.begin(), sweeps.end());
  result.converged = std::all_of(converged.begin(), converged.end(), [](char c) { return c != 0; });
  return result;
}

Eigen::MatrixXd clustered_vcov(std::span<const double> residuals, const Eigen::MatrixXd& scores,
                               std::span<const std::uint32_t> cluster_ids, const Eigen::MatrixXd& bread) {
  const auto n = static_cast<std::size_t>(scores.rows());
  if (residuals.size() != n || cluster_ids.size() != n) {
    throw InvalidParameter("residuals, scores and cluster ids must be aligned");
  }
  Workspace ws;
  ws.n = n;
  const std::vector<std::uint64_t> keys(cluster_ids.begin(), cluster_ids.end());
  ws.clusters.ids = dense_ids(keys, &ws.clusters.count);
  ws.clusters.build();
  std::vector<std::size_t> cols;
  for (Eigen::Index j = 0; j < scores.cols(); ++j) {
    ws.columns.emplace_back(scores.col(j).data(), scores.col(j).data() + n);
    cols.push_back(static_cast<std::size_t>(j));
  }
  return sandwich(ws, residuals, cols, bread);
}

Eigen::MatrixXd clustered_vcov(std::span<const double> residuals, const Eigen::MatrixXd& design,
                               std::span<const std::uint32_t> cluster_ids) {
  const Eigen::MatrixXd bread = solve_inverse(design.transpose() * design);
  return clustered_vcov(residuals, design, cluster_ids, bread);
}

// ---- Fits ----------------------------------------------------------------------

FitResult ols_fit(const DesignSpec& spec, const Frame& frame) {
  if (!spec.instruments.empty()) throw InvalidParameter("ols_fit takes no instruments");
  DesignSpec design = spec;
  const Workspace ws = prepare(design, frame);
  std::vector<std::string> regressors = spec.endogenous;
  regressors.insert(regressors.end(), spec.exogenous.begin(), spec.exogenous.end());
  if (spec.intercept) regressors.push_back(kIntercept);
  return ols_on(ws, ws.at(spec.outcome), ws.at(regressors), "ols");
}

FitResult tsls_fit(const DesignSpec& spec, const Frame& frame) {
  if (spec.endogenous.empty()) throw InvalidParameter("tsls_fit needs at least one endogenous regressor");
  if (spec.instruments.size() != spec.endogenous.size()) {
    throw InvalidParameter("just-identified designs need one instrument per endogenous regressor");
  }
  const Workspace ws = prepare(spec, frame);
  std::vector<std::string> x_names = spec.endogenous;
  std::vector<std::string> z_names = spec.instruments;
  std::vector<std::string> w_names = spec.exogenous;
  if (spec.intercept) w_names.push_back(kIntercept);
  x_names.insert(x_names.end(), w_names.begin(), w_names.end());
  z_names.insert(z_names.end(), w_names.begin(), w_names.end());
  const auto x = ws.at(x_names);
  const auto z = ws.at(z_names);
  const auto endo = ws.at(spec.endogenous);
  const auto inst = ws.at(spec.instruments);
  const auto exog = ws.at(w_names);
  const std::size_t outcome = ws.at(spec.outcome);

  if (!w_names.empty()) {
    const auto bad = collinear_columns(ws, exog);
    if (!bad.empty()) throw RankDeficient(bad);
  }
  const auto bad_x = collinear_columns(ws, x);
  if (!bad_x.empty()) throw RankDeficient(bad_x);

  std::vector<FitResult> first_stages;
  std::optional<double> first_stat;
  const double cc = canonical_correlation(ws, endo, inst, exog);
  if (collinear_columns(ws, z).empty()) {
    for (const std::size_t e : endo) first_stages.push_back(ols_on(ws, e, z, "first_stage"));
    if (endo.size() == 1) first_stat = wald(first_stages.front(), inst.size());
  }
  if (cc < kWeakThreshold) {
    throw WeakIdentification(first_stat.value_or(0.0), cc);
  }

  const Eigen::MatrixXd zx = ws.cross(z, x);
  const Eigen::VectorXd zy = ws.cross(z, {outcome}).col(0);
  const Eigen::MatrixXd bread = solve_inverse(zx);
  FitResult fit = finish(ws, "2sls", x);
  fit.coef = bread * zy;
  const auto u = residuals(ws, outcome, x, fit.coef);
  fit.vcov = sandwich(ws, u, z, bread);
  fit.r_squared = r_squared(ws, outcome, u);
  fit.first_stages = std::move(first_stages);
  fit.first_stage_stat = first_stat;
  const FitResult reduced = ols_on(ws, outcome, z, "reduced_form");
  fit.ar_stat = wald(reduced, inst.size());
  return fit;
}

ArResult anderson_rubin(const DesignSpec& spec, const Frame& frame) {
  if (spec.instruments.size() != 1 || spec.endogenous.size() != 1) {
    throw InvalidParameter("the Anderson-Rubin statistic is defined for one instrument");
  }
  const Workspace ws = prepare(spec, frame);
  std::vector<std::string> z_names = spec.instruments;
  z_names.insert(z_names.end(), spec.exogenous.begin(), spec.exogenous.end());
  if (spec.intercept) z_names.push_back(kIntercept);
  const auto z = ws.at(z_names);
  const FitResult reduced = ols_on(ws, ws.at(spec.outcome), z, "reduced_form");
  const FitResult first = ols_on(ws, ws.at(spec.endogenous.front()), z, "first_stage");
  ArResult ar;
  ar.reduced_form_coef = reduced.coef[0];
  ar.reduced_form_se = reduced.se(0);
  ar.statistic = wald(reduced, 1);
  ar.first_stage_statistic = wald(first, 1);
  return ar;
}

FitResult heterogeneity_fit(const Frame& panel, HeterogeneityEstimator estimator, ClusterBy cluster,
                            FixedEffects fixed_effects) {
  DesignSpec spec;
  spec.cluster = cluster;
  spec.fixed_effects = fixed_effects;
  std::vector<std::string> dropped;
  const std::pair<const char*, const char*> pairs[] = {{"x_kp", "z_kp_lag"}, {"x_of", "z_of_lag"}};
  for (const auto& [x, z] : pairs) {
    const auto col = panel.column(x);
    const bool all_zero = std::all_of(col.begin(), col.end(), [](double v) { return v == 0.0; });
    if (all_zero) {
      dropped.push_back(x);
      continue;
    }
    spec.endogenous.push_back(x);
    if (estimator == HeterogeneityEstimator::TwoStage) spec.instruments.push_back(z);
  }
  if (spec.endogenous.empty()) throw RankDeficient(dropped);
  FitResult fit;
  if (estimator == HeterogeneityEstimator::TwoStage) {
    fit = tsls_fit(spec, panel);
  } else {
    fit = ols_fit(spec, panel);
  }
  fit.model = estimator == HeterogeneityEstimator::TwoStage ? "heterogeneity_2sls" : "heterogeneity_ols";
  fit.dropped_terms = std::move(dropped);
  return fit;
}

std::vector<std::string> playtime_terms(int variant) {
  switch (variant) {
    case 1: return {"kp_purchase"};
    case 2: return {"of_purchase"};
    case 3: return {"no_friend_purchase"};
    case 4: return {"kp_purchase", "of_purchase", "no_friend_purchase"};
    default: throw InvalidParameter("playtime variant must be 1-4, got " + std::to_string(variant));
  }
}

FitResult playtime_fit(const Frame& rows, int variant) {
  if (rows.rows() == 0) throw EmptyPanel("playtime cross-section is empty");
  DesignSpec spec;
  spec.outcome = "log_playtime";
  spec.fixed_effects = FixedEffects::None;
  spec.cluster = ClusterBy::Row;
  spec.intercept = true;
  std::vector<std::string> dropped;
  auto candidates = playtime_terms(variant);
  candidates.insert(candidates.end(), playtime_covariates().begin(), playtime_covariates().end());
  for (const auto& name : candidates) {
    if (!rows.has_column(name)) continue;
    const auto col = rows.column(name);
    const bool constant = std::all_of(col.begin(), col.end(), [&](double v) { return v == col.front(); });
    if (constant) {
      dropped.push_back(name);
    } else {
      spec.exogenous.push_back(name);
    }
  }
  FitResult fit = ols_fit(spec, rows);
  fit.model = "playtime_" + std::to_string(variant);
  fit.dropped_terms = std::move(dropped);
  return fit;
}

}  // namespace peerfx

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "peerfx/frame.h"

namespace peerfx {

enum class FixedEffects { None, Player, Week, Both };
enum class ClusterBy { Player, Week, Row };

struct DesignSpec {
  std::string outcome = "y";
  std::vector<std::string> endogenous;
  std::vector<std::string> instruments;  // same count as endogenous
  std::vector<std::string> exogenous;
  FixedEffects fixed_effects = FixedEffects::Both;
  ClusterBy cluster = ClusterBy::Player;
  // Adds a constant regressor; only meaningful without fixed effects.
  bool intercept = false;
  double fe_tol = 1e-10;
  int fe_max_sweeps = 100;
};

struct FitResult {
  std::string model;
  std::vector<std::string> terms;
  Eigen::VectorXd coef;
  Eigen::MatrixXd vcov;
  std::size_t n_obs = 0;
  std::size_t n_clusters = 0;
  std::size_t n_singleton_groups = 0;
  int within_sweeps = 0;
  bool within_converged = true;
  double r_squared = 0.0;
  // Anderson-Rubin statistic (cluster-robust reduced-form Wald) for
  // single-instrument IV fits.
  std::optional<double> ar_stat;
  // Cluster-robust Wald statistic of the excluded instruments in the first
  // stage.
  std::optional<double> first_stage_stat;
  std::vector<FitResult> first_stages;
  std::vector<std::string> dropped_terms;

  double se(std::size_t k) const;
  double estimate(const std::string& term) const;
  double se(const std::string& term) const;
  std::size_t index(const std::string& term) const;  // throws NotFound
};

struct WithinResult {
  std::vector<std::vector<double>> columns;
  int sweeps = 0;
  bool converged = true;
};

// Alternating within-group demeaning (player sweep, then week sweep) until
// the largest absolute change in a sweep falls below tol. Returns copies; the
// frame is untouched. Columns are processed in parallel, each sequentially,
// so results do not depend on the thread count.
WithinResult within_transform(const Frame& frame, std::span<const std::string> columns,
                              FixedEffects fe, double tol = 1e-10, int max_sweeps = 100);

// CR1 cluster-robust covariance
//   bread * (sum_g s_g s_g') * bread' * G/(G-1) * (N-1)/(N-K)
// with s_g = sum over the cluster of scores_r * residual_r. For OLS pass the
// design as scores and bread = (X'X)^-1; for IV pass the instruments and
// bread = (Z'X)^-1. Throws InsufficientClusters when G < 2.
Eigen::MatrixXd clustered_vcov(std::span<const double> residuals, const Eigen::MatrixXd& scores,
                               std::span<const std::uint32_t> cluster_ids,
                               const Eigen::MatrixXd& bread);

// Convenience form for OLS: bread = (X'X)^-1.
Eigen::MatrixXd clustered_vcov(std::span<const double> residuals, const Eigen::MatrixXd& design,
                               std::span<const std::uint32_t> cluster_ids);

// Dense cluster index per row for the requested dimension.
std::vector<std::uint32_t> cluster_index(const Frame& frame, ClusterBy by, std::size_t* count);

// OLS on within-transformed data. Throws RankDeficient naming the collinear
// columns.
FitResult ols_fit(const DesignSpec& spec, const Frame& frame);

// Just-identified 2SLS: beta = (Z'X)^-1 Z'y on within-transformed data, with
// exogenous columns instrumenting themselves. First stages are attached.
// Throws WeakIdentification when the instruments' canonical correlation with
// the endogenous regressors is below 1e-7.
FitResult tsls_fit(const DesignSpec& spec, const Frame& frame);

struct ArResult {
  double statistic = 0.0;           // (delta_rf / se_rf)^2
  double first_stage_statistic = 0.0;  // (pi_fs / se_fs)^2
  double reduced_form_coef = 0.0;
  double reduced_form_se = 0.0;
};

// Anderson-Rubin test of beta = 0 for a single-instrument spec.
ArResult anderson_rubin(const DesignSpec& spec, const Frame& frame);

enum class HeterogeneityEstimator { TwoStage, Ols };

// y on x_kp and x_of (instrumented by z_kp_lag, z_of_lag) with player and
// week effects by default. An interaction that is identically zero is dropped
// with its instrument and listed in dropped_terms.
FitResult heterogeneity_fit(const Frame& panel,
                            HeterogeneityEstimator estimator = HeterogeneityEstimator::TwoStage,
                            ClusterBy cluster = ClusterBy::Player,
                            FixedEffects fixed_effects = FixedEffects::Both);

// Variants mirror the four columns of the playtime table:
//   1 key-player purchase, 2 old-friend purchase, 3 no-friend purchase, 4 all.
std::vector<std::string> playtime_terms(int variant);

// Cross-sectional OLS of log playtime with HC1 standard errors. Covariates
// that are constant in the sample (e.g. an own-game indicator in a one-game
// sample) are dropped and listed in dropped_terms.
FitResult playtime_fit(const Frame& rows, int variant);

inline const std::vector<std::string>& playtime_covariates() {
  static const std::vector<std::string> names{"num_games",   "num_groups", "start_week",
                                              "num_friends", "owns_smb",   "owns_nv"};
  return names;
}

}  // namespace peerfx

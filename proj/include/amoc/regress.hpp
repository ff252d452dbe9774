#pragma once

// Ordinary least squares with classical t-test inference, forward stepwise
// selection, and the JSON report that mirrors a coefficient table
// (term, beta, se, t, p, delta adjusted R^2).

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "amoc/features.hpp"

namespace amoc {

// I_x(a, b), the regularized incomplete beta function.
double regularized_incomplete_beta(double a, double b, double x);
double student_t_cdf(double t, double dof);
// P(|T| >= |t|) for T ~ t(dof).
double two_sided_p_value(double t, double dof);

inline constexpr const char* kInterceptName = "const";
inline constexpr double kRankTolerance = 1e-10;
inline constexpr double kDefaultStepwiseAlpha = 0.01;

// Predictor columns (row-major, no intercept column: the intercept is always
// added by the fitting routines) and the response.
class DesignMatrix {
 public:
  DesignMatrix(std::vector<std::string> columns, std::size_t rows);

  std::size_t rows() const { return response_.size(); }
  std::size_t cols() const { return columns_.size(); }
  const std::vector<std::string>& columns() const { return columns_; }
  std::size_t column_index(const std::string& name) const;

  double& at(std::size_t r, std::size_t c) { return values_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return values_[r * cols() + c]; }
  double& response(std::size_t r) { return response_[r]; }
  double response(std::size_t r) const { return response_[r]; }
  std::span<const double> response() const { return response_; }

  // Rows are the records; columns are the named terms; the response is
  // target_f1 (InputError if absent).
  static DesignMatrix from_records(std::span<const CandidateRecord> records, std::span<const std::string> terms);

 private:
  std::vector<std::string> columns_;
  std::vector<double> values_;
  std::vector<double> response_;
};

struct OlsFit {
  std::vector<std::string> terms;  // kInterceptName first
  std::vector<double> beta;
  std::vector<double> se;
  std::vector<double> t;
  std::vector<double> p;
  std::vector<double> fitted;
  std::vector<double> residuals;
  double rss = 0.0;
  double r2 = 0.0;
  double adjusted_r2 = 0.0;
  std::size_t n = 0;
  std::size_t k = 0;  // predictors, excluding the intercept
};

// Householder QR solve of y on [1, X_terms]. Throws InsufficientDataError when
// n <= k + 1 and SingularityError (naming the first dependent column) when a
// diagonal of R falls below kRankTolerance times the largest column norm.
// R^2 is 0 when the response is constant.
OlsFit ols_fit(const DesignMatrix& design, std::span<const std::string> terms);

struct RegressionTerm {
  std::string name;
  double beta = 0.0;
  double se = 0.0;
  double t = 0.0;
  double p = 1.0;
  double delta_r2 = 0.0;  // adjusted-R^2 gain when the term entered
};

struct RegressionModel {
  RegressionTerm intercept;
  std::vector<RegressionTerm> terms;  // in selection order
  double r2 = 0.0;
  double adjusted_r2 = 0.0;
  std::size_t n = 0;
  double alpha = kDefaultStepwiseAlpha;

  std::vector<std::string> term_names() const;
};

// Forward selection: each round adds the candidate term with the smallest
// entry p-value (ties: larger |t|, then candidate order) while that p-value is
// below alpha. Terms that would make the design singular or leave no residual
// degrees of freedom are skipped for that round. No significant term gives an
// intercept-only model.
RegressionModel stepwise_fit(const DesignMatrix& design, std::span<const std::string> candidate_terms,
                             double alpha = kDefaultStepwiseAlpha);

// Linear prediction, not clipped. Throws InputError if the record lacks a term.
double predict(const RegressionModel& model, const CandidateRecord& record);

std::string regression_to_json(const RegressionModel& model);
RegressionModel regression_from_json(const std::string& text);
void save_regression(const std::filesystem::path& path, const RegressionModel& model);
RegressionModel load_regression(const std::filesystem::path& path);

}  // namespace amoc

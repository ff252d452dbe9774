#include "amoc/regress.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "amoc/error.hpp"

namespace amoc {

DesignMatrix::DesignMatrix(std::vector<std::string> columns, std::size_t rows)
    : columns_(std::move(columns)), values_(rows * columns_.size(), 0.0), response_(rows, 0.0) {}

std::size_t DesignMatrix::column_index(const std::string& name) const {
  const auto it = std::find(columns_.begin(), columns_.end(), name);
  if (it == columns_.end()) throw InputError("design matrix has no column '" + name + "'");
  return static_cast<std::size_t>(it - columns_.begin());
}

DesignMatrix DesignMatrix::from_records(std::span<const CandidateRecord> records, std::span<const std::string> terms) {
  DesignMatrix design(std::vector<std::string>(terms.begin(), terms.end()), records.size());
  for (std::size_t r = 0; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (!rec.target_f1) throw InputError("record " + rec.pair_id + " " + rec.spec.to_json() + " has no target_f1");
    design.response(r) = *rec.target_f1;
    for (std::size_t c = 0; c < terms.size(); ++c) design.at(r, c) = rec.term(terms[c]);
  }
  return design;
}

OlsFit ols_fit(const DesignMatrix& design, std::span<const std::string> terms) {
  const std::size_t n = design.rows();
  const std::size_t k = terms.size();
  if (n <= k + 1) {
    throw InsufficientDataError("ols_fit: " + std::to_string(n) + " rows cannot support " + std::to_string(k) +
                                " predictors plus an intercept");
  }
  const auto p = static_cast<Eigen::Index>(k + 1);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), p);
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  std::vector<std::size_t> cols;
  for (const auto& name : terms) cols.push_back(design.column_index(name));
  for (std::size_t r = 0; r < n; ++r) {
    const auto ri = static_cast<Eigen::Index>(r);
    x(ri, 0) = 1.0;
    for (std::size_t c = 0; c < k; ++c) x(ri, static_cast<Eigen::Index>(c + 1)) = design.at(r, cols[c]);
    y(ri) = design.response(r);
  }

  const double max_norm = x.colwise().norm().maxCoeff();
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(x);
  const Eigen::MatrixXd r_full = qr.matrixQR().topRows(p).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < p; ++j) {
    if (std::abs(r_full(j, j)) <= kRankTolerance * max_norm) {
      const std::string column = j == 0 ? kInterceptName : std::string(terms[static_cast<std::size_t>(j - 1)]);
      throw SingularityError(column, "ols_fit: column '" + column + "' is linearly dependent on earlier columns");
    }
  }
  const Eigen::VectorXd beta = qr.solve(y);
  const Eigen::VectorXd fitted = x * beta;
  const Eigen::VectorXd resid = y - fitted;

  OlsFit fit;
  fit.n = n;
  fit.k = k;
  fit.terms.push_back(kInterceptName);
  fit.terms.insert(fit.terms.end(), terms.begin(), terms.end());
  fit.rss = resid.squaredNorm();
  const double mean = y.mean();
  const double tss = (y.array() - mean).square().sum();
  fit.r2 = tss > 0.0 ? 1.0 - fit.rss / tss : 0.0;
  const double dof = static_cast<double>(n - k - 1);
  fit.adjusted_r2 = 1.0 - (1.0 - fit.r2) * static_cast<double>(n - 1) / dof;

  const Eigen::MatrixXd r_inv =
      r_full.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
  const double sigma2 = fit.rss / dof;
  for (Eigen::Index j = 0; j < p; ++j) {
    const double b = beta(j);
    const double se = std::sqrt(sigma2 * r_inv.row(j).squaredNorm());
    double t = 0.0;
    if (se > 0.0) {
      t = b / se;
    } else if (b != 0.0) {
      t = std::copysign(std::numeric_limits<double>::infinity(), b);
    }
    fit.beta.push_back(b);
    fit.se.push_back(se);
    fit.t.push_back(t);
    fit.p.push_back(two_sided_p_value(t, dof));
  }
  fit.fitted.assign(fitted.data(), fitted.data() + fitted.size());
  fit.residuals.assign(resid.data(), resid.data() + resid.size());
  return fit;
}

std::vector<std::string> RegressionModel::term_names() const {
  std::vector<std::string> out;
  for (const auto& t : terms) out.push_back(t.name);
  return out;
}

RegressionModel stepwise_fit(const DesignMatrix& design, std::span<const std::string> candidate_terms, double alpha) {
  std::vector<std::string> selected;
  std::vector<double> deltas;
  std::vector<bool> used(candidate_terms.size(), false);
  OlsFit current = ols_fit(design, selected);

  while (true) {
    std::size_t best = candidate_terms.size();
    double best_p = 2.0;
    double best_abs_t = -1.0;
    OlsFit best_fit;
    for (std::size_t i = 0; i < candidate_terms.size(); ++i) {
      if (used[i]) continue;
      std::vector<std::string> trial = selected;
      trial.push_back(candidate_terms[i]);
      OlsFit fit;
      try {
        fit = ols_fit(design, trial);
      } catch (const SingularityError&) {
        continue;
      } catch (const InsufficientDataError&) {
        continue;
      }
      const double p = fit.p.back();
      const double abs_t = std::abs(fit.t.back());
      if (std::isnan(p)) continue;
      if (p < best_p || (p == best_p && abs_t > best_abs_t)) {
        best = i;
        best_p = p;
        best_abs_t = abs_t;
        best_fit = std::move(fit);
      }
    }
    if (best == candidate_terms.size() || !(best_p < alpha)) break;
    used[best] = true;
    selected.push_back(candidate_terms[best]);
    deltas.push_back(best_fit.adjusted_r2 - current.adjusted_r2);
    current = std::move(best_fit);
  }

  RegressionModel model;
  model.alpha = alpha;
  model.n = current.n;
  model.r2 = current.r2;
  model.adjusted_r2 = current.adjusted_r2;
  model.intercept = RegressionTerm{kInterceptName, current.beta[0], current.se[0], current.t[0], current.p[0], 0.0};
  for (std::size_t i = 0; i < selected.size(); ++i) {
    model.terms.push_back(RegressionTerm{selected[i], current.beta[i + 1], current.se[i + 1], current.t[i + 1],
                                         current.p[i + 1], deltas[i]});
  }
  return model;
}

double predict(const RegressionModel& model, const CandidateRecord& record) {
  double y = model.intercept.beta;
  for (const auto& t : model.terms) y += t.beta * record.term(t.name);
  return y;
}

namespace {

nlohmann::json term_json(const RegressionTerm& t) {
  return {{"name", t.name}, {"beta", t.beta}, {"se", t.se}, {"t", t.t}, {"p", t.p}, {"delta_r2", t.delta_r2}};
}

RegressionTerm term_from(const nlohmann::json& j) {
  RegressionTerm t;
  t.name = j.at("name").get<std::string>();
  t.beta = j.at("beta").get<double>();
  t.se = j.at("se").get<double>();
  t.t = j.at("t").get<double>();
  t.p = j.at("p").get<double>();
  t.delta_r2 = j.at("delta_r2").get<double>();
  return t;
}

}  // namespace

std::string regression_to_json(const RegressionModel& model) {
  nlohmann::json j;
  j["terms"] = nlohmann::json::array();
  for (const auto& t : model.terms) j["terms"].push_back(term_json(t));
  j["const"] = term_json(model.intercept);
  j["r2"] = model.r2;
  j["adjusted_r2"] = model.adjusted_r2;
  j["n"] = model.n;
  j["alpha"] = model.alpha;
  return j.dump(2);
}

RegressionModel regression_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    RegressionModel m;
    for (const auto& t : j.at("terms")) m.terms.push_back(term_from(t));
    m.intercept = term_from(j.at("const"));
    m.r2 = j.at("r2").get<double>();
    m.adjusted_r2 = j.at("adjusted_r2").get<double>();
    m.n = j.at("n").get<std::size_t>();
    m.alpha = j.at("alpha").get<double>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("regression report: ") + e.what());
  }
}

void save_regression(const std::filesystem::path& path, const RegressionModel& model) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out << regression_to_json(model) << '\n';
}

RegressionModel load_regression(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open regression report " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return regression_from_json(buf.str());
}

}  // namespace amoc

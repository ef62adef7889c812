#include "wordscores/construct.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "wordscores/csv.hpp"
#include "wordscores/error.hpp"

namespace wordscores {

// --- design ------------------------------------------------------------------------

DesignMatrix DesignMatrix::select_features(std::span<const std::string> names) const {
  std::vector<std::size_t> cols;
  for (const auto& name : names) {
    auto it = std::find(feature_names.begin(), feature_names.end(), name);
    if (it == feature_names.end()) throw ValidationError("unknown feature '" + name + "'");
    cols.push_back(static_cast<std::size_t>(it - feature_names.begin()));
  }
  DesignMatrix out;
  out.row_ids = row_ids;
  out.feature_names.assign(names.begin(), names.end());
  out.class_names = class_names;
  out.labels = labels;
  out.dropped_rows = dropped_rows;
  out.predictors.reserve(rows() * cols.size());
  for (std::size_t i = 0; i < rows(); ++i)
    for (auto c : cols) out.predictors.push_back(predictors[i * features() + c]);
  return out;
}

DesignMatrix DesignMatrix::intercept_only() const { return select_features({}); }

void DesignMatrix::validate() const {
  if (classes() < 2) throw ValidationError("multinomial model needs at least 2 classes");
  if (rows() == 0) throw ValidationError("design has no rows");
  if (predictors.size() != rows() * features())
    throw ValidationError("predictor block does not match rows x features");
  if (row_ids.size() != rows()) throw ValidationError("row ids do not match labels");
  for (int y : labels)
    if (y < 0 || static_cast<std::size_t>(y) >= classes())
      throw ValidationError("class label out of range");
  for (double x : predictors)
    if (!std::isfinite(x)) throw ValidationError("non-finite predictor");
}

DesignMatrix make_design(std::vector<std::string> row_ids, std::vector<std::string> feature_names,
                         std::vector<double> predictors, std::span<const std::string> labels,
                         std::optional<std::vector<std::string>> class_order) {
  DesignMatrix d;
  d.row_ids = std::move(row_ids);
  d.feature_names = std::move(feature_names);
  d.predictors = std::move(predictors);
  if (class_order) {
    d.class_names = std::move(*class_order);
  } else {
    d.class_names.assign(labels.begin(), labels.end());
    std::sort(d.class_names.begin(), d.class_names.end());
    d.class_names.erase(std::unique(d.class_names.begin(), d.class_names.end()),
                        d.class_names.end());
  }
  for (const auto& label : labels) {
    auto it = std::find(d.class_names.begin(), d.class_names.end(), label);
    if (it == d.class_names.end()) throw ValidationError("label '" + label + "' not in class order");
    d.labels.push_back(static_cast<int>(it - d.class_names.begin()));
  }
  if (d.row_ids.size() != d.labels.size())
    throw ValidationError("row ids do not match labels");
  if (d.predictors.size() != d.labels.size() * d.feature_names.size())
    throw ValidationError("predictor block does not match rows x features");
  return d;
}

DesignMatrix parse_design(std::string_view text, std::string_view context) {
  const auto table = csv::parse(text, context);
  csv::require_header(table, {"party_id", "class_label"}, context);
  std::vector<std::string> features(table.header.begin() + 2, table.header.end());
  std::vector<std::string> ids, labels;
  std::vector<double> x;
  std::size_t dropped = 0;
  for (const auto& row : table.rows) {
    std::vector<double> values;
    bool missing = row[1].empty() || row[1] == "NA";
    for (std::size_t c = 2; c < row.size() && !missing; ++c) {
      std::optional<double> v;
      try {
        v = csv::parse_optional_double(row[c]);
      } catch (const LoadError&) {
        throw LoadError(std::string(context) + ": row '" + row[0] + "': not a number in '" +
                        table.header[c] + "'");
      }
      if (!v) missing = true;
      else values.push_back(*v);
    }
    if (missing) {
      ++dropped;
      continue;
    }
    ids.push_back(row[0]);
    labels.push_back(row[1]);
    x.insert(x.end(), values.begin(), values.end());
  }
  auto d = make_design(std::move(ids), std::move(features), std::move(x), labels);
  d.dropped_rows = dropped;
  return d;
}

DesignMatrix load_design(const std::filesystem::path& path) {
  return parse_design(csv::read_text_file(path), path.string());
}

// --- likelihood ----------------------------------------------------------------------

namespace {

std::size_t parameter_count(std::size_t classes, std::size_t features) {
  return (classes - 1) * (features + 1);
}

/// Class probabilities of one row; returns log of the normalizer.
double row_probabilities(std::span<const double> coef, std::size_t classes,
                         std::span<const double> x, std::span<double> prob) {
  const std::size_t stride = x.size() + 1;
  prob[0] = 0.0;
  for (std::size_t j = 1; j < classes; ++j) {
    const double* b = coef.data() + (j - 1) * stride;
    double eta = b[0];
    for (std::size_t c = 0; c < x.size(); ++c) eta += b[c + 1] * x[c];
    prob[j] = eta;
  }
  const double top = *std::max_element(prob.begin(), prob.end());
  double sum = 0.0;
  for (auto& p : prob) {
    p = std::exp(p - top);
    sum += p;
  }
  for (auto& p : prob) p /= sum;
  return top + std::log(sum);
}

void check_shape(const DesignMatrix& data, std::span<const double> coef) {
  if (coef.size() != parameter_count(data.classes(), data.features()))
    throw ValidationError("coefficient vector has the wrong length");
}

}  // namespace

double log_likelihood(const DesignMatrix& data, std::span<const double> coefficients) {
  check_shape(data, coefficients);
  const std::size_t stride = data.features() + 1;
  std::vector<double> prob(data.classes());
  double ll = 0.0;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const auto x = data.row(i);
    const double lse = row_probabilities(coefficients, data.classes(), x, prob);
    const int y = data.labels[i];
    double eta = 0.0;
    if (y > 0) {
      const double* b = coefficients.data() + (y - 1) * stride;
      eta = b[0];
      for (std::size_t c = 0; c < x.size(); ++c) eta += b[c + 1] * x[c];
    }
    ll += eta - lse;
  }
  return ll;
}

std::vector<double> gradient(const DesignMatrix& data, std::span<const double> coefficients) {
  check_shape(data, coefficients);
  const std::size_t stride = data.features() + 1;
  std::vector<double> g(coefficients.size(), 0.0);
  std::vector<double> prob(data.classes());
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const auto x = data.row(i);
    row_probabilities(coefficients, data.classes(), x, prob);
    for (std::size_t j = 1; j < data.classes(); ++j) {
      const double r = (data.labels[i] == static_cast<int>(j) ? 1.0 : 0.0) - prob[j];
      double* gj = g.data() + (j - 1) * stride;
      gj[0] += r;
      for (std::size_t c = 0; c < x.size(); ++c) gj[c + 1] += r * x[c];
    }
  }
  return g;
}

namespace {

Eigen::MatrixXd information(const DesignMatrix& data, std::span<const double> coef) {
  const std::size_t stride = data.features() + 1;
  const std::size_t q = data.classes() - 1;
  const auto p = static_cast<Eigen::Index>(q * stride);
  Eigen::MatrixXd info = Eigen::MatrixXd::Zero(p, p);
  std::vector<double> prob(data.classes());
  Eigen::VectorXd xt(static_cast<Eigen::Index>(stride));
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const auto x = data.row(i);
    row_probabilities(coef, data.classes(), x, prob);
    xt[0] = 1.0;
    for (std::size_t c = 0; c < x.size(); ++c) xt[static_cast<Eigen::Index>(c + 1)] = x[c];
    const Eigen::MatrixXd outer = xt * xt.transpose();
    for (std::size_t j = 0; j < q; ++j)
      for (std::size_t l = 0; l < q; ++l) {
        const double w = (j == l ? prob[j + 1] : 0.0) - prob[j + 1] * prob[l + 1];
        info.block(static_cast<Eigen::Index>(j * stride), static_cast<Eigen::Index>(l * stride),
                   static_cast<Eigen::Index>(stride), static_cast<Eigen::Index>(stride)) +=
            w * outer;
      }
  }
  return info;
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

ModelFit fit_multinomial(const DesignMatrix& data, const FitOptions& options) {
  data.validate();
  if (!(options.tolerance > 0.0) || options.max_iterations < 0 || !(options.clamp > 0.0))
    throw ValidationError("invalid fit options");

  ModelFit fit;
  fit.classes = data.classes();
  fit.features = data.features();
  fit.n = data.rows();
  fit.k = parameter_count(fit.classes, fit.features);
  if (fit.n <= fit.k)
    fit.warnings.push_back("n = " + std::to_string(fit.n) + " does not exceed k = " +
                           std::to_string(fit.k));

  const std::size_t stride = fit.features + 1;
  std::vector<double> theta(fit.k, 0.0);
  // Intercepts start at the closed-form intercept-only MLE.
  std::vector<double> freq(fit.classes, 0.0);
  for (int y : data.labels) freq[static_cast<std::size_t>(y)] += 1.0;
  if (freq[0] > 0)
    for (std::size_t j = 1; j < fit.classes; ++j)
      if (freq[j] > 0) theta[(j - 1) * stride] = std::clamp(std::log(freq[j] / freq[0]), -options.clamp, options.clamp);

  double ll = log_likelihood(data, theta);
  fit.loglik_trace.push_back(ll);
  bool warned_ridge = false;

  for (int it = 1; it <= options.max_iterations; ++it) {
    const auto g = gradient(data, theta);
    if (max_abs(g) < options.tolerance) {
      fit.converged = true;
      break;
    }
    const Eigen::MatrixXd info = information(data, theta);
    const Eigen::Map<const Eigen::VectorXd> gv(g.data(), static_cast<Eigen::Index>(g.size()));
    Eigen::VectorXd step;
    double ridge = 0.0;
    const double scale = std::max(1.0, info.diagonal().cwiseAbs().maxCoeff());
    for (int attempt = 0; attempt < 30; ++attempt) {
      Eigen::MatrixXd m = info;
      m.diagonal().array() += ridge;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(m);
      const auto d = ldlt.vectorD();
      const bool positive =
          ldlt.info() == Eigen::Success && d.minCoeff() > 1e-12 * std::max(1.0, d.maxCoeff());
      if (positive) {
        step = ldlt.solve(gv);
        if (step.allFinite()) break;
      }
      step.resize(0);
      ridge = ridge == 0.0 ? 1e-10 * scale : ridge * 10.0;
    }
    if (ridge > 0.0 && !warned_ridge) {
      fit.warnings.push_back("singular information matrix: ridge-damped steps");
      warned_ridge = true;
    }
    if (step.size() == 0) break;

    bool accepted = false;
    double t = 1.0;
    std::vector<double> candidate(theta.size());
    for (int half = 0; half < 50; ++half, t *= 0.5) {
      bool clamped = false;
      for (std::size_t p = 0; p < theta.size(); ++p) {
        double v = theta[p] + t * step[static_cast<Eigen::Index>(p)];
        if (std::abs(v) > options.clamp) {
          v = std::copysign(options.clamp, v);
          clamped = true;
        }
        candidate[p] = v;
      }
      const double llc = log_likelihood(data, candidate);
      if (std::isfinite(llc) && llc >= ll) {
        accepted = true;
        if (clamped) fit.separation = true;
        ll = llc;
        break;
      }
    }
    if (!accepted || candidate == theta) break;  // no further progress possible
    theta = candidate;
    fit.loglik_trace.push_back(ll);
    fit.iterations = it;
  }
  if (!fit.converged && max_abs(gradient(data, theta)) < options.tolerance) fit.converged = true;

  // Perfect prediction of any row means the likelihood has no interior maximum there.
  std::vector<double> prob(fit.classes);
  for (std::size_t i = 0; i < data.rows(); ++i) {
    row_probabilities(theta, fit.classes, data.row(i), prob);
    if (prob[static_cast<std::size_t>(data.labels[i])] > 1.0 - options.separation_probability)
      fit.separation = true;
  }
  for (double b : theta)
    if (std::abs(b) >= options.clamp) fit.separation = true;
  if (fit.separation) fit.warnings.push_back("separation detected");

  fit.coefficients = std::move(theta);
  fit.loglik = ll;
  return fit;
}

std::vector<ModelFit> fit_many(std::span<const DesignMatrix> designs, const FitOptions& options) {
  std::vector<ModelFit> fits(designs.size());
  std::vector<std::string> errors(designs.size());
  const auto n = static_cast<std::ptrdiff_t>(designs.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      fits[static_cast<std::size_t>(i)] = fit_multinomial(designs[static_cast<std::size_t>(i)], options);
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(i)] = e.what();
    }
  }
  for (std::size_t i = 0; i < errors.size(); ++i)
    if (!errors[i].empty()) throw ValidationError("model " + std::to_string(i) + ": " + errors[i]);
  return fits;
}

// --- prediction and fit statistics -------------------------------------------------

Prediction predict(const ModelFit& model, std::span<const double> predictors, std::size_t rows) {
  if (predictors.size() != rows * model.features)
    throw ValidationError("predictor rows have " +
                          std::to_string(rows ? predictors.size() / rows : 0) +
                          " features, model expects " + std::to_string(model.features));
  Prediction out;
  out.classes = model.classes;
  out.probabilities.resize(rows * model.classes);
  for (std::size_t i = 0; i < rows; ++i) {
    std::span<double> prob(out.probabilities.data() + i * model.classes, model.classes);
    row_probabilities(model.coefficients, model.classes,
                      predictors.subspan(i * model.features, model.features), prob);
    out.labels.push_back(static_cast<int>(std::max_element(prob.begin(), prob.end()) - prob.begin()));
  }
  return out;
}

Prediction predict(const ModelFit& model, const DesignMatrix& data) {
  return predict(model, data.predictors, data.rows());
}

double count_r2(const ModelFit& model, const DesignMatrix& data) {
  if (data.rows() == 0) return 0.0;
  const auto pred = predict(model, data);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < data.rows(); ++i) hits += pred.labels[i] == data.labels[i];
  return static_cast<double>(hits) / static_cast<double>(data.rows());
}

double mcfadden_r2(const ModelFit& model, const ModelFit& null_model) {
  if (model.n != null_model.n)
    throw StatisticsError("McFadden R2: model and null fits use different rows");
  if (null_model.loglik == 0.0) throw StatisticsError("McFadden R2 undefined: null log-likelihood is 0");
  return 1.0 - model.loglik / null_model.loglik;
}

double bic(double loglik, std::size_t k, std::size_t n) {
  return -2.0 * loglik + static_cast<double>(k) * std::log(static_cast<double>(n));
}

double bic(const ModelFit& model) { return bic(model.loglik, model.k, model.n); }

std::string_view to_string(Evidence e) {
  switch (e) {
    case Evidence::weak: return "weak";
    case Evidence::positive: return "positive";
    case Evidence::strong: return "strong";
    case Evidence::very_strong: return "very strong";
  }
  return "weak";
}

Evidence classify_bic_difference(double delta) {
  delta = std::abs(delta);
  if (delta <= 2.0) return Evidence::weak;
  if (delta <= 6.0) return Evidence::positive;
  if (delta <= 10.0) return Evidence::strong;
  return Evidence::very_strong;
}

std::vector<BicComparison> compare_models(std::span<const ModelFit> fits,
                                          std::span<const std::string> labels) {
  if (fits.size() != labels.size()) throw ValidationError("one label per fit required");
  for (const auto& f : fits)
    if (f.n != fits.front().n)
      throw ValidationError("fits were estimated on different rows (n = " +
                            std::to_string(fits.front().n) + " vs " + std::to_string(f.n) + ")");
  std::vector<BicComparison> out;
  for (std::size_t a = 0; a < fits.size(); ++a)
    for (std::size_t b = a + 1; b < fits.size(); ++b) {
      BicComparison c;
      c.first = labels[a];
      c.second = labels[b];
      c.bic_first = bic(fits[a]);
      c.bic_second = bic(fits[b]);
      c.difference = std::abs(c.bic_first - c.bic_second);
      c.preferred = c.bic_second < c.bic_first ? c.second : c.first;
      c.evidence = classify_bic_difference(c.difference);
      out.push_back(std::move(c));
    }
  return out;
}

FitStatistics fit_statistics(std::string model, const ModelFit& fit, const ModelFit& null_model,
                             const DesignMatrix& data) {
  FitStatistics s;
  s.model = std::move(model);
  s.n = fit.n;
  s.k = fit.k;
  s.loglik = fit.loglik;
  s.count_r2 = count_r2(fit, data);
  s.mcfadden_r2 = mcfadden_r2(fit, null_model);
  s.bic = bic(fit);
  s.separation = fit.separation;
  s.converged = fit.converged;
  return s;
}

std::string fit_statistics_to_csv(std::span<const FitStatistics> rows) {
  std::ostringstream out;
  csv::write_row(out, {"model", "n", "k", "loglik", "count_r2", "mcfadden_r2", "bic"});
  for (const auto& r : rows)
    csv::write_row(out, {r.model, std::to_string(r.n), std::to_string(r.k), csv::format6(r.loglik),
                         csv::format6(r.count_r2), csv::format6(r.mcfadden_r2), csv::format6(r.bic)});
  return out.str();
}

std::string comparisons_to_csv(std::span<const BicComparison> rows) {
  std::ostringstream out;
  csv::write_row(out, {"first", "second", "bic_first", "bic_second", "difference", "preferred",
                       "evidence"});
  for (const auto& r : rows)
    csv::write_row(out, {r.first, r.second, csv::format6(r.bic_first), csv::format6(r.bic_second),
                         csv::format6(r.difference), r.preferred, std::string(to_string(r.evidence))});
  return out.str();
}

std::string coefficients_to_csv(std::span<const std::string> models, std::span<const ModelFit> fits,
                                std::span<const DesignMatrix> designs) {
  if (models.size() != fits.size() || fits.size() != designs.size())
    throw ValidationError("coefficients_to_csv: mismatched inputs");
  std::ostringstream out;
  csv::write_row(out, {"model", "class", "term", "estimate"});
  for (std::size_t m = 0; m < fits.size(); ++m) {
    const auto& fit = fits[m];
    const std::size_t stride = fit.features + 1;
    for (std::size_t j = 1; j < fit.classes; ++j)
      for (std::size_t c = 0; c < stride; ++c)
        csv::write_row(out, {models[m], designs[m].class_names[j],
                             c == 0 ? "(intercept)" : designs[m].feature_names[c - 1],
                             csv::format6(fit.coefficients[(j - 1) * stride + c])});
  }
  return out.str();
}

}  // namespace wordscores

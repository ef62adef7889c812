#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace wordscores {

/// Rows of party predictors with a categorical outcome. Class indices are
/// 0-based positions in `class_names`; index 0 is the reference class.
struct DesignMatrix {
  std::vector<std::string> row_ids;
  std::vector<std::string> feature_names;
  std::vector<std::string> class_names;
  std::vector<double> predictors;  // rows x features, row-major
  std::vector<int> labels;
  std::size_t dropped_rows = 0;  // listwise deletions at load time

  std::size_t rows() const noexcept { return labels.size(); }
  std::size_t features() const noexcept { return feature_names.size(); }
  std::size_t classes() const noexcept { return class_names.size(); }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(predictors).subspan(i * features(), features());
  }

  /// Same rows restricted to the named features (in the given order).
  DesignMatrix select_features(std::span<const std::string> names) const;
  /// Intercept-only design on the same rows.
  DesignMatrix intercept_only() const;
  /// Throws ValidationError unless J >= 2, every row is labelled in range and
  /// all predictors are finite.
  void validate() const;
};

/// Builds a design from string labels. Classes are sorted unless
/// `class_order` is given, in which case it must list every label.
DesignMatrix make_design(std::vector<std::string> row_ids, std::vector<std::string> feature_names,
                         std::vector<double> predictors, std::span<const std::string> labels,
                         std::optional<std::vector<std::string>> class_order = std::nullopt);

/// CSV `party_id,class_label,feature_1,...,feature_m`. Rows with a missing
/// label or predictor are deleted and counted in `dropped_rows`.
DesignMatrix parse_design(std::string_view text, std::string_view context);
DesignMatrix load_design(const std::filesystem::path& path);

struct FitOptions {
  double tolerance = 1e-8;  // on the gradient max-norm
  int max_iterations = 100;
  double clamp = 30.0;      // |beta| bound under separation
  double separation_probability = 1e-9;  // a row fitted within this of certainty
};

struct ModelFit {
  std::size_t classes = 0;
  std::size_t features = 0;
  /// (J-1) x (features+1), row-major; each row is [intercept, b_1..b_m] for
  /// classes 1..J-1 against the reference class.
  std::vector<double> coefficients;
  double loglik = 0.0;
  std::size_t n = 0;
  std::size_t k = 0;
  bool converged = false;
  int iterations = 0;
  bool separation = false;
  std::vector<double> loglik_trace;  // one entry per accepted iterate, starting point first
  std::vector<std::string> warnings;
};

/// Log-likelihood and its gradient at `coefficients` (layout as in ModelFit).
double log_likelihood(const DesignMatrix& data, std::span<const double> coefficients);
std::vector<double> gradient(const DesignMatrix& data, std::span<const double> coefficients);

/// Newton-Raphson with step-halving; ridge damping when the information
/// matrix is singular.
ModelFit fit_multinomial(const DesignMatrix& data, const FitOptions& options = {});

/// Fits every design independently, in parallel.
std::vector<ModelFit> fit_many(std::span<const DesignMatrix> designs,
                               const FitOptions& options = {});

struct Prediction {
  std::size_t classes = 0;
  std::vector<double> probabilities;  // rows x classes
  std::vector<int> labels;            // argmax, ties to the lowest index
};

/// `predictors` is rows x model.features, row-major.
Prediction predict(const ModelFit& model, std::span<const double> predictors, std::size_t rows);
Prediction predict(const ModelFit& model, const DesignMatrix& data);

double count_r2(const ModelFit& model, const DesignMatrix& data);
double mcfadden_r2(const ModelFit& model, const ModelFit& null_model);
double bic(double loglik, std::size_t k, std::size_t n);
double bic(const ModelFit& model);

enum class Evidence { weak, positive, strong, very_strong };
std::string_view to_string(Evidence e);
/// <= 2 weak, (2, 6] positive, (6, 10] strong, > 10 very strong.
Evidence classify_bic_difference(double delta);

struct BicComparison {
  std::string first;
  std::string second;
  double bic_first = 0.0;
  double bic_second = 0.0;
  double difference = 0.0;  // |bic_first - bic_second|
  std::string preferred;    // lower BIC; `first` on a tie
  Evidence evidence = Evidence::weak;
};

/// Every unordered pair in input order. Throws ValidationError when the fits
/// were estimated on different numbers of rows.
std::vector<BicComparison> compare_models(std::span<const ModelFit> fits,
                                          std::span<const std::string> labels);

struct FitStatistics {
  std::string model;
  std::size_t n = 0;
  std::size_t k = 0;
  double loglik = 0.0;
  double count_r2 = 0.0;
  double mcfadden_r2 = 0.0;
  double bic = 0.0;
  bool separation = false;
  bool converged = false;
};

FitStatistics fit_statistics(std::string model, const ModelFit& fit, const ModelFit& null_model,
                             const DesignMatrix& data);

std::string fit_statistics_to_csv(std::span<const FitStatistics> rows);
std::string comparisons_to_csv(std::span<const BicComparison> rows);
/// Long form `model,class,term,estimate`.
std::string coefficients_to_csv(std::span<const std::string> models, std::span<const ModelFit> fits,
                                std::span<const DesignMatrix> designs);

}  // namespace wordscores

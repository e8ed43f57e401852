#pragma once

#include "scenectx/inference.hpp"
#include "scenectx/learning.hpp"
#include "scenectx/model.hpp"
#include "scenectx/scene.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace scenectx {

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double true_positives = 0.0;
  double predicted = 0.0;
  double actual = 0.0;
  bool precision_undefined = false;  // no predictions: precision reported as 0
  bool recall_undefined = false;     // class absent from the ground truth: recall reported as 0
};

struct Metrics {
  double micro_precision = 0.0;
  double micro_recall = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  std::vector<ClassMetrics> per_class;
  std::size_t segments = 0;

  nlohmann::json to_json(const Taxonomy* taxonomy = nullptr) const;
};

/// Counts per (true class, predicted class) plus a trailing `unlabeled`
/// predicted column. A ground-truth entry whose class is among the
/// predictions lands on the diagonal; otherwise on the lowest predicted
/// class, or in the unlabeled column.
struct ConfusionMatrix {
  int classes = 0;
  Eigen::MatrixXd counts;  // K x (K + 1)

  explicit ConfusionMatrix(int k = 0) : classes(k), counts(Eigen::MatrixXd::Zero(k, k + 1)) {}
  void add(const Labeling& prediction, const Labeling& truth);
  std::string to_csv(const Taxonomy& taxonomy) const;
};

/// Micro and macro precision and recall over entries y_i^k of all scenes.
/// Prediction entries below 1 (fractional) count as not predicted.
Metrics compute_metrics(const std::vector<Labeling>& predictions, const std::vector<Labeling>& truths);
/// Same formulas read off a confusion matrix (single-label ground truth).
Metrics metrics_from_confusion(const ConfusionMatrix& confusion);

/// Most frequent class of the training labels (ties to the lowest index).
int most_frequent_class(const std::vector<Labeling>& training_truths);
/// Every vertex of every graph labeled with the most frequent class.
std::vector<Labeling> max_class_baseline(const std::vector<Labeling>& training_truths, const std::vector<int>& test_sizes);

/// Graphs with raw features plus exactly-one ground truth.
struct Dataset {
  Taxonomy taxonomy;
  std::vector<SceneGraph> graphs;
  std::vector<Labeling> truths;
};

enum class Method { MaxClass, Svm };

struct CvConfig {
  int folds = 4;
  std::uint64_t seed = 0;
  int bins = 10;
  Method method = Method::Svm;
  Variant variant = Variant::Parsimon;
  TrainConfig train;
  LabelMode mode = LabelMode::ExactlyOne;
  ExactOptions exact;
  int threads = 1;
  bool training_loss = false;  // also run exact inference on the training scenes
};

struct FoldResult {
  std::vector<int> test_scenes;
  Metrics metrics;
  double xi = 0.0;
  double epsilon = 0.0;
  bool converged = true;
  int iterations = 0;
  double training_loss = 0.0;  // mean exact-inference Hamming loss (when requested)
  double integrality = 1.0;    // relaxed predictions on the test scenes
  bool all_optimal = true;
  double seconds = 0.0;
};

struct CvResult {
  std::vector<FoldResult> folds;
  Metrics mean;  // fold averages (per-class values averaged too)
  double micro_precision_std = 0.0;
  double micro_recall_std = 0.0;

  nlohmann::json to_json(const Taxonomy& taxonomy) const;
};

/// Scene index -> fold, a seeded shuffle dealt round-robin.
std::vector<int> fold_assignment(std::size_t scenes, int folds, std::uint64_t seed);

CvResult cross_validate(const Dataset& data, const CvConfig& config);

}  // namespace scenectx

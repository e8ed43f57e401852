#include "scenectx/eval.hpp"

#include "scenectx/binner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace scenectx {

using json = nlohmann::json;

namespace {

Metrics finish_metrics(std::vector<ClassMetrics> per_class, std::size_t segments) {
  Metrics m;
  m.segments = segments;
  double tp = 0, pred = 0, actual = 0;
  for (auto& c : per_class) {
    tp += c.true_positives;
    pred += c.predicted;
    actual += c.actual;
    c.precision_undefined = c.predicted == 0;
    c.recall_undefined = c.actual == 0;
    c.precision = c.precision_undefined ? 0.0 : c.true_positives / c.predicted;
    c.recall = c.recall_undefined ? 0.0 : c.true_positives / c.actual;
    m.macro_precision += c.precision;
    m.macro_recall += c.recall;
  }
  const double K = static_cast<double>(std::max<std::size_t>(1, per_class.size()));
  m.macro_precision /= K;
  m.macro_recall /= K;
  m.micro_precision = pred > 0 ? tp / pred : 0.0;
  m.micro_recall = actual > 0 ? tp / actual : 0.0;
  m.per_class = std::move(per_class);
  return m;
}

double stddev(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double s = 0;
  for (double x : v) s += (x - mean) * (x - mean);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

json metrics_json(const Metrics& m, const Taxonomy* taxonomy) {
  json j{{"micro_precision", m.micro_precision},
         {"micro_recall", m.micro_recall},
         {"macro_precision", m.macro_precision},
         {"macro_recall", m.macro_recall},
         {"segments", m.segments}};
  j["per_class"] = json::array();
  for (std::size_t k = 0; k < m.per_class.size(); ++k) {
    const auto& c = m.per_class[k];
    json q{{"precision", c.precision}, {"recall", c.recall}, {"true_positives", c.true_positives},
           {"predicted", c.predicted}, {"actual", c.actual}};
    if (taxonomy) q["class"] = taxonomy->class_name(static_cast<int>(k));
    if (c.precision_undefined) q["precision_undefined"] = true;
    if (c.recall_undefined) q["recall_undefined"] = true;
    j["per_class"].push_back(q);
  }
  return j;
}

}  // namespace

json Metrics::to_json(const Taxonomy* taxonomy) const { return metrics_json(*this, taxonomy); }

void ConfusionMatrix::add(const Labeling& prediction, const Labeling& truth) {
  if (prediction.nodes() != truth.nodes() || prediction.classes() != classes || truth.classes() != classes) {
    throw DataError("confusion matrix: labeling dimensions differ");
  }
  for (int i = 0; i < truth.nodes(); ++i) {
    int first = -1;
    for (int k = 0; k < classes && first < 0; ++k) {
      if (prediction.values(i, k) >= 1.0) first = k;
    }
    for (int k = 0; k < classes; ++k) {
      if (truth.values(i, k) < 1.0) continue;
      const int column = prediction.values(i, k) >= 1.0 ? k : (first >= 0 ? first : classes);
      counts(k, column) += 1.0;
    }
  }
}

std::string ConfusionMatrix::to_csv(const Taxonomy& taxonomy) const {
  std::ostringstream out;
  out << "true\\predicted";
  for (int k = 0; k < classes; ++k) out << ',' << taxonomy.class_name(k);
  out << ",UNLABELED\n";
  for (int k = 0; k < classes; ++k) {
    out << taxonomy.class_name(k);
    for (int c = 0; c <= classes; ++c) out << ',' << format_double(counts(k, c));
    out << '\n';
  }
  return out.str();
}

Metrics compute_metrics(const std::vector<Labeling>& predictions, const std::vector<Labeling>& truths) {
  if (predictions.size() != truths.size()) throw DataError("metrics: prediction and ground-truth counts differ");
  if (truths.empty()) throw DataError("metrics: no ground truth");
  const int K = truths.front().classes();
  std::vector<ClassMetrics> per_class(static_cast<std::size_t>(K));
  std::size_t segments = 0;
  for (std::size_t s = 0; s < truths.size(); ++s) {
    const auto& p = predictions[s];
    const auto& t = truths[s];
    if (p.nodes() != t.nodes() || p.classes() != K || t.classes() != K) {
      throw DataError("metrics: scene " + std::to_string(s) + " has mismatched labelings");
    }
    segments += static_cast<std::size_t>(t.nodes());
    for (int i = 0; i < t.nodes(); ++i) {
      for (int k = 0; k < K; ++k) {
        const bool predicted = p.values(i, k) >= 1.0, actual = t.values(i, k) >= 1.0;
        auto& c = per_class[static_cast<std::size_t>(k)];
        c.predicted += predicted;
        c.actual += actual;
        c.true_positives += predicted && actual;
      }
    }
  }
  return finish_metrics(std::move(per_class), segments);
}

Metrics metrics_from_confusion(const ConfusionMatrix& confusion) {
  const int K = confusion.classes;
  std::vector<ClassMetrics> per_class(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    auto& c = per_class[static_cast<std::size_t>(k)];
    c.true_positives = confusion.counts(k, k);
    c.actual = confusion.counts.row(k).sum();
    c.predicted = confusion.counts.col(k).sum();
  }
  return finish_metrics(std::move(per_class), static_cast<std::size_t>(confusion.counts.sum()));
}

int most_frequent_class(const std::vector<Labeling>& training_truths) {
  if (training_truths.empty()) throw DataError("max_class: no training labels");
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(training_truths.front().classes());
  for (const auto& y : training_truths) {
    if (y.classes() != counts.size()) throw DataError("max_class: class counts differ");
    counts += (y.values.array() >= 1.0).cast<double>().matrix().colwise().sum().transpose();
  }
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < counts.size(); ++k) {
    if (counts[k] > counts[best]) best = k;
  }
  return static_cast<int>(best);
}

std::vector<Labeling> max_class_baseline(const std::vector<Labeling>& training_truths, const std::vector<int>& test_sizes) {
  const int top = most_frequent_class(training_truths);
  const int K = training_truths.front().classes();
  std::vector<Labeling> out;
  for (int n : test_sizes) out.push_back(Labeling::from_classes(std::vector<int>(static_cast<std::size_t>(n), top), K));
  return out;
}

std::vector<int> fold_assignment(std::size_t scenes, int folds, std::uint64_t seed) {
  if (folds < 2) throw UsageError("cross-validation needs at least 2 folds");
  if (scenes < static_cast<std::size_t>(folds)) throw DataError("cross-validation: fewer scenes than folds");
  std::vector<std::size_t> order(scenes);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  // Fisher-Yates with explicit draws so the split does not depend on the standard library.
  for (std::size_t i = scenes; i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
  std::vector<int> fold(scenes);
  for (std::size_t r = 0; r < scenes; ++r) fold[order[r]] = static_cast<int>(r % static_cast<std::size_t>(folds));
  return fold;
}

CvResult cross_validate(const Dataset& data, const CvConfig& config) {
  if (data.graphs.size() != data.truths.size()) throw DataError("cross-validation: graph and label counts differ");
  const auto fold_of = fold_assignment(data.graphs.size(), config.folds, config.seed);
  CvResult result;
  std::vector<double> micro_p, micro_r;
  for (int f = 0; f < config.folds; ++f) {
    const auto start = std::chrono::steady_clock::now();
    FoldResult fold;
    std::vector<int> train_idx;
    for (std::size_t s = 0; s < fold_of.size(); ++s) {
      (fold_of[s] == f ? fold.test_scenes : train_idx).push_back(static_cast<int>(s));
    }
    std::vector<Labeling> train_truths, test_truths, predictions;
    for (int s : train_idx) train_truths.push_back(data.truths[static_cast<std::size_t>(s)]);
    for (int s : fold.test_scenes) test_truths.push_back(data.truths[static_cast<std::size_t>(s)]);

    if (config.method == Method::MaxClass) {
      std::vector<int> sizes;
      for (int s : fold.test_scenes) sizes.push_back(data.graphs[static_cast<std::size_t>(s)].size());
      predictions = max_class_baseline(train_truths, sizes);
    } else {
      std::vector<SceneGraph> graphs = data.graphs;
      std::vector<const SceneGraph*> fit_on;
      for (int s : train_idx) fit_on.push_back(&graphs[static_cast<std::size_t>(s)]);
      const FeatureBinners binners = FeatureBinners::fit(fit_on, config.bins);
      for (auto& g : graphs) binners.apply(g);
      const ModelStructure structure(data.taxonomy, config.variant, binners);
      std::vector<TrainingExample> examples;
      for (int s : train_idx) {
        examples.push_back({&graphs[static_cast<std::size_t>(s)], data.truths[static_cast<std::size_t>(s)]});
      }
      TrainConfig tc = config.train;
      tc.threads = config.threads;
      const TrainResult trained = train(examples, structure, tc);
      fold.xi = trained.xi;
      fold.epsilon = tc.epsilon;
      fold.converged = trained.converged;
      fold.iterations = static_cast<int>(trained.history.size());

      std::vector<InferenceResult> exact(fold.test_scenes.size());
      std::vector<double> integral(fold.test_scenes.size());
      parallel_for(fold.test_scenes.size(), config.threads, [&](std::size_t q) {
        const auto& g = graphs[static_cast<std::size_t>(fold.test_scenes[q])];
        exact[q] = infer_exact(trained.weights, g, config.mode, config.exact);
        integral[q] = infer_relaxed(trained.weights, g).integrality;
      });
      double variables = 0, integral_variables = 0;
      for (std::size_t q = 0; q < exact.size(); ++q) {
        predictions.push_back(exact[q].labeling);
        fold.all_optimal &= exact[q].stats.optimal;
        const double n = static_cast<double>(exact[q].labeling.values.size());
        variables += n;
        integral_variables += integral[q] * n;
      }
      fold.integrality = variables > 0 ? integral_variables / variables : 1.0;

      if (config.training_loss) {
        std::vector<double> losses(examples.size());
        parallel_for(examples.size(), config.threads, [&](std::size_t q) {
          const auto r = infer_exact(trained.weights, *examples[q].graph, LabelMode::ExactlyOne, config.exact);
          losses[q] = hamming_loss(examples[q].truth, r.labeling);
        });
        fold.training_loss = std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(losses.size());
      }
    }
    fold.metrics = compute_metrics(predictions, test_truths);
    fold.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    micro_p.push_back(fold.metrics.micro_precision);
    micro_r.push_back(fold.metrics.micro_recall);
    result.folds.push_back(std::move(fold));
  }

  const double n = static_cast<double>(result.folds.size());
  Metrics& mean = result.mean;
  mean.per_class.assign(static_cast<std::size_t>(data.taxonomy.size()), {});
  for (const auto& fold : result.folds) {
    const auto& m = fold.metrics;
    mean.micro_precision += m.micro_precision / n;
    mean.micro_recall += m.micro_recall / n;
    mean.macro_precision += m.macro_precision / n;
    mean.macro_recall += m.macro_recall / n;
    mean.segments += m.segments;
    for (std::size_t k = 0; k < mean.per_class.size(); ++k) {
      auto& c = mean.per_class[k];
      const auto& d = m.per_class[k];
      c.precision += d.precision / n;
      c.recall += d.recall / n;
      c.true_positives += d.true_positives;
      c.predicted += d.predicted;
      c.actual += d.actual;
      c.precision_undefined |= d.precision_undefined;
      c.recall_undefined |= d.recall_undefined;
    }
  }
  result.micro_precision_std = stddev(micro_p);
  result.micro_recall_std = stddev(micro_r);
  return result;
}

json CvResult::to_json(const Taxonomy& taxonomy) const {
  json j;
  j["mean"] = mean.to_json(&taxonomy);
  j["micro_precision_std"] = micro_precision_std;
  j["micro_recall_std"] = micro_recall_std;
  j["folds"] = json::array();
  for (const auto& f : folds) {
    j["folds"].push_back({{"test_scenes", f.test_scenes},
                          {"metrics", f.metrics.to_json(&taxonomy)},
                          {"xi", f.xi},
                          {"epsilon", f.epsilon},
                          {"converged", f.converged},
                          {"iterations", f.iterations},
                          {"training_loss", f.training_loss},
                          {"integrality", f.integrality},
                          {"all_optimal", f.all_optimal},
                          {"seconds", f.seconds}});
  }
  return j;
}

}  // namespace scenectx

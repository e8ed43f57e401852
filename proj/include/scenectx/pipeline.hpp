#pragma once

#include "scenectx/eval.hpp"
#include "scenectx/features.hpp"
#include "scenectx/io.hpp"
#include "scenectx/synth.hpp"

#include <vector>

namespace scenectx {

/// Segments, proximity edges and raw features (not binned).
SceneGraph graph_from_segmentation(const Scene& scene, const std::vector<int>& segment_of_point, double context_range,
                                   const FeatureConfig& features = {});

/// Each segment of `segmentation` takes the labels of the ground-truth
/// segment covering most of its points (ties to the lower id); segments
/// mostly made of ground-truth noise stay unlabeled.
SegmentLabels transfer_labels(const std::vector<int>& gt_segmentation, const SegmentLabels& gt_labels,
                              const std::vector<int>& segmentation);

/// Graphs on the bundles' ground-truth segmentation with exactly-one truth.
Dataset dataset_from_bundles(const std::vector<SceneBundle>& bundles, double context_range,
                             const FeatureConfig& features = {}, int threads = 1);

struct SweepRow {
  double context_range = 0.0;
  double micro_precision = 0.0;
  double micro_recall = 0.0;
  double mean_edges = 0.0;  // per scene
};

/// Featurize, cross-validate and score once per range.
std::vector<SweepRow> sweep_context_range(const std::vector<SceneBundle>& bundles, const std::vector<double>& ranges,
                                          const CvConfig& config, const FeatureConfig& features = {});

}  // namespace scenectx

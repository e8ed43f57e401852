#include "scenectx/pipeline.hpp"

#include <map>

namespace scenectx {

SceneGraph graph_from_segmentation(const Scene& scene, const std::vector<int>& segment_of_point, double context_range,
                                   const FeatureConfig& features) {
  if (segment_of_point.size() != scene.points.size()) throw DataError("segmentation does not cover the scene's points");
  SceneGraph g = build_graph(scene, group_segments(segment_of_point), context_range);
  compute_raw_features(scene, g, features);
  return g;
}

SegmentLabels transfer_labels(const std::vector<int>& gt_segmentation, const SegmentLabels& gt_labels,
                              const std::vector<int>& segmentation) {
  if (gt_segmentation.size() != segmentation.size()) throw DataError("segmentations cover different point counts");
  std::map<int, std::map<int, std::size_t>> votes;
  for (std::size_t p = 0; p < segmentation.size(); ++p) {
    if (segmentation[p] >= 0) ++votes[segmentation[p]][gt_segmentation[p]];
  }
  SegmentLabels out;
  for (const auto& [segment, counts] : votes) {
    int best = -1;
    std::size_t most = 0;
    for (const auto& [gt, n] : counts) {
      if (n > most) {
        most = n;
        best = gt;
      }
    }
    const auto it = gt_labels.find(best);
    out[segment] = (best >= 0 && it != gt_labels.end()) ? it->second : std::vector<int>{};
  }
  return out;
}

Dataset dataset_from_bundles(const std::vector<SceneBundle>& bundles, double context_range, const FeatureConfig& features,
                             int threads) {
  if (bundles.empty()) throw DataError("dataset: no scenes");
  Dataset d;
  d.taxonomy = bundles.front().taxonomy;
  d.graphs.resize(bundles.size());
  d.truths.resize(bundles.size());
  for (const auto& b : bundles) {
    if (!(b.taxonomy == d.taxonomy)) throw DataError("dataset: scenes use different taxonomies");
  }
  parallel_for(bundles.size(), threads, [&](std::size_t s) {
    d.graphs[s] = graph_from_segmentation(bundles[s].scene, bundles[s].segmentation, context_range, features);
    d.truths[s] = labeling_for_graph(d.graphs[s], bundles[s].labels, d.taxonomy.size(), LabelMode::ExactlyOne);
  });
  return d;
}

std::vector<SweepRow> sweep_context_range(const std::vector<SceneBundle>& bundles, const std::vector<double>& ranges,
                                          const CvConfig& config, const FeatureConfig& features) {
  if (ranges.empty()) throw UsageError("sweep: no context ranges given");
  std::vector<SweepRow> rows;
  for (double range : ranges) {
    const Dataset d = dataset_from_bundles(bundles, range, features, config.threads);
    const CvResult cv = cross_validate(d, config);
    SweepRow row;
    row.context_range = range;
    row.micro_precision = cv.mean.micro_precision;
    row.micro_recall = cv.mean.micro_recall;
    for (const auto& g : d.graphs) row.mean_edges += static_cast<double>(g.edges.size());
    row.mean_edges /= static_cast<double>(d.graphs.size());
    rows.push_back(row);
  }
  return rows;
}

}  // namespace scenectx

#pragma once

#include "scenectx/scene.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <string>
#include <vector>

namespace scenectx {

/// Scene bundle directory: points.csv (x,y,z,r,g,b,cam) and meta.json.
Scene load_scene(const std::string& directory);
void save_scene(const Scene& scene, const std::string& directory);

/// segments.csv (point_row,segment_id); rows not listed are noise (-1).
std::vector<int> load_segmentation(const std::string& path, std::size_t point_count);
void save_segmentation(const std::vector<int>& segment_of_point, const std::string& path);

/// taxonomy.json: {"class": "object", ...} in class order.
Taxonomy load_taxonomy(const std::string& path);
void save_taxonomy(const Taxonomy& taxonomy, const std::string& path);

/// labels.csv (segment_id,class_name); UNLABELED marks a segment without a
/// class and a segment may appear on several rows (multilabel).
using SegmentLabels = std::map<int, std::vector<int>>;
SegmentLabels load_labels(const std::string& path, const Taxonomy& taxonomy);
void save_labels(const SegmentLabels& labels, const Taxonomy& taxonomy, const std::string& path);

/// Labels of the graph's vertices (by segment id) as an integral labeling.
/// Vertices without an entry are unlabeled.
Labeling labeling_for_graph(const SceneGraph& graph, const SegmentLabels& labels, int classes, LabelMode mode);
/// Entries equal to 1 of each vertex; fractional entries are dropped.
SegmentLabels labels_from_labeling(const SceneGraph& graph, const Labeling& labeling);

/// Full-precision labeling with segment ids and class names.
nlohmann::json labeling_to_json(const SceneGraph& graph, const Labeling& labeling, const Taxonomy& taxonomy);
Labeling labeling_from_json(const nlohmann::json& j, const SceneGraph& graph, const Taxonomy& taxonomy);

/// Graph with geometry, raw and binned features, and optional labels.
nlohmann::json graph_to_json(const SceneGraph& graph);
SceneGraph graph_from_json(const nlohmann::json& j);
void save_graph(const SceneGraph& graph, const std::string& path, const SegmentLabels* labels = nullptr,
                const Taxonomy* taxonomy = nullptr);
SceneGraph load_graph(const std::string& path);
/// Labels embedded by save_graph; empty when none were stored.
SegmentLabels load_graph_labels(const std::string& path, const Taxonomy& taxonomy);

nlohmann::json read_json(const std::string& path);
void write_json(const nlohmann::json& j, const std::string& path);
void write_text(const std::string& text, const std::string& path);

}  // namespace scenectx

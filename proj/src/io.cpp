#include "scenectx/io.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace scenectx {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::vector<std::string_view> split(std::string_view line, char sep = ',') {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return in;
}

std::ofstream open_output(const std::string& path) {
  const auto parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  return out;
}

/// Reads a CSV with the expected header; calls row(fields, line_number).
template <typename F>
void read_csv(const std::string& path, const std::vector<std::string>& header, F&& row) {
  auto in = open_input(path);
  std::string line;
  std::size_t number = 0;
  bool seen_header = false;
  while (std::getline(in, line)) {
    ++number;
    const auto text = trim(line);
    if (text.empty()) continue;
    auto fields = split(text);
    for (auto& f : fields) f = trim(f);
    if (!seen_header) {
      seen_header = true;
      if (fields.size() != header.size()) throw DataError(path + ": unexpected header");
      for (std::size_t c = 0; c < header.size(); ++c) {
        if (fields[c] != header[c]) throw DataError(path + ": unexpected header column '" + std::string(fields[c]) + "'");
      }
      continue;
    }
    if (fields.size() != header.size()) {
      throw DataError(path + ":" + std::to_string(number) + ": expected " + std::to_string(header.size()) + " fields");
    }
    row(fields, number);
  }
  if (!seen_header) throw DataError(path + ": empty file");
}

json vec_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index q = 0; q < v.size(); ++q) a.push_back(v[q]);
  return a;
}

Eigen::VectorXd vec_from_json(const json& a) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t q = 0; q < a.size(); ++q) v[static_cast<Eigen::Index>(q)] = a[q].get<double>();
  return v;
}

json bits_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index q = 0; q < v.size(); ++q) a.push_back(static_cast<int>(v[q]));
  return a;
}

json vec3_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3_from_json(const json& a) {
  if (!a.is_array() || a.size() != 3) throw DataError("expected a 3-vector");
  return {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
}

std::vector<int> vertex_ids(const SceneGraph& graph) {
  std::vector<int> ids;
  for (const auto& v : graph.vertices) ids.push_back(v.id);
  return ids;
}

}  // namespace

json read_json(const std::string& path) {
  auto in = open_input(path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
}

void write_json(const json& j, const std::string& path) {
  auto out = open_output(path);
  out << j.dump(1) << '\n';
}

void write_text(const std::string& text, const std::string& path) {
  auto out = open_output(path);
  out << text;
}

Scene load_scene(const std::string& directory) {
  Scene scene;
  const auto meta_path = (fs::path(directory) / "meta.json").string();
  const auto meta = read_json(meta_path);
  try {
    scene.name = meta.value("name", fs::path(directory).filename().string());
    for (const auto& c : meta.at("cameras")) scene.cameras.push_back(vec3_from_json(c));
  } catch (const json::exception& e) {
    throw DataError(meta_path + ": " + e.what());
  }
  const auto points_path = (fs::path(directory) / "points.csv").string();
  read_csv(points_path, {"x", "y", "z", "r", "g", "b", "cam"}, [&](const auto& f, std::size_t line) {
    const std::string where = points_path + ":" + std::to_string(line);
    ScenePoint p;
    for (int a = 0; a < 3; ++a) p.position[a] = parse_double(f[static_cast<std::size_t>(a)], where);
    for (int a = 0; a < 3; ++a) p.color[a] = parse_double(f[static_cast<std::size_t>(3 + a)], where);
    const auto cam = parse_integer(f[6], where);
    if (!p.position.allFinite() || !p.color.allFinite()) throw DataError(where + ": non-finite value");
    if (cam < 0 || static_cast<std::size_t>(cam) >= scene.cameras.size()) {
      throw DataError(where + ": camera index out of range (" + std::to_string(cam) + " of " +
                      std::to_string(scene.cameras.size()) + ")");
    }
    p.camera = static_cast<int>(cam);
    scene.points.push_back(p);
  });
  validate_scene(scene);
  return scene;
}

void save_scene(const Scene& scene, const std::string& directory) {
  fs::create_directories(directory);
  json meta;
  meta["name"] = scene.name;
  meta["cameras"] = json::array();
  for (const auto& c : scene.cameras) meta["cameras"].push_back(vec3_to_json(c));
  write_json(meta, (fs::path(directory) / "meta.json").string());
  auto out = open_output((fs::path(directory) / "points.csv").string());
  out << "x,y,z,r,g,b,cam\n";
  for (const auto& p : scene.points) {
    for (int a = 0; a < 3; ++a) out << format_double(p.position[a]) << ',';
    for (int a = 0; a < 3; ++a) out << format_double(p.color[a]) << ',';
    out << p.camera << '\n';
  }
}

std::vector<int> load_segmentation(const std::string& path, std::size_t point_count) {
  std::vector<int> seg(point_count, -1);
  read_csv(path, {"point_row", "segment_id"}, [&](const auto& f, std::size_t line) {
    const std::string where = path + ":" + std::to_string(line);
    const auto row = parse_integer(f[0], where);
    const auto id = parse_integer(f[1], where);
    if (row < 0 || static_cast<std::size_t>(row) >= point_count) throw DataError(where + ": point row out of range");
    seg[static_cast<std::size_t>(row)] = static_cast<int>(id);
  });
  return seg;
}

void save_segmentation(const std::vector<int>& segment_of_point, const std::string& path) {
  auto out = open_output(path);
  out << "point_row,segment_id\n";
  for (std::size_t r = 0; r < segment_of_point.size(); ++r) out << r << ',' << segment_of_point[r] << '\n';
}

Taxonomy load_taxonomy(const std::string& path) {
  auto in = open_input(path);
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  if (!j.is_object() || j.empty()) throw DataError(path + ": taxonomy must be a non-empty object");
  std::vector<std::string> classes, objects;
  for (const auto& [name, object] : j.items()) {
    if (!object.is_string()) throw DataError(path + ": object of class '" + name + "' must be a string");
    classes.push_back(name);
    objects.push_back(object.get<std::string>());
  }
  return Taxonomy(classes, objects);
}

void save_taxonomy(const Taxonomy& taxonomy, const std::string& path) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (int k = 0; k < taxonomy.size(); ++k) j[taxonomy.class_name(k)] = taxonomy.object_of(k);
  auto out = open_output(path);
  out << j.dump(1) << '\n';
}

SegmentLabels load_labels(const std::string& path, const Taxonomy& taxonomy) {
  SegmentLabels labels;
  read_csv(path, {"segment_id", "class_name"}, [&](const auto& f, std::size_t line) {
    const std::string where = path + ":" + std::to_string(line);
    const int id = static_cast<int>(parse_integer(f[0], where));
    auto& entry = labels[id];
    if (f[1] == "UNLABELED") return;
    const auto k = taxonomy.find(std::string(f[1]));
    if (!k) throw DataError(where + ": unknown class '" + std::string(f[1]) + "'");
    if (std::find(entry.begin(), entry.end(), *k) == entry.end()) entry.push_back(*k);
  });
  for (auto& [id, classes] : labels) std::sort(classes.begin(), classes.end());
  return labels;
}

void save_labels(const SegmentLabels& labels, const Taxonomy& taxonomy, const std::string& path) {
  auto out = open_output(path);
  out << "segment_id,class_name\n";
  for (const auto& [id, classes] : labels) {
    if (classes.empty()) out << id << ",UNLABELED\n";
    for (int k : classes) out << id << ',' << taxonomy.class_name(k) << '\n';
  }
}

Labeling labeling_for_graph(const SceneGraph& graph, const SegmentLabels& labels, int classes, LabelMode mode) {
  Labeling y(graph.size(), classes, mode);
  for (int i = 0; i < graph.size(); ++i) {
    const auto it = labels.find(graph.vertices[static_cast<std::size_t>(i)].id);
    if (it == labels.end()) continue;
    for (int k : it->second) {
      if (k < 0 || k >= classes) throw DataError("label class index out of range");
      y.values(i, k) = 1.0;
    }
  }
  return y;
}

SegmentLabels labels_from_labeling(const SceneGraph& graph, const Labeling& labeling) {
  if (labeling.nodes() != graph.size()) throw DataError("labeling does not match the graph");
  SegmentLabels out;
  for (int i = 0; i < graph.size(); ++i) {
    auto& entry = out[graph.vertices[static_cast<std::size_t>(i)].id];
    for (int k = 0; k < labeling.classes(); ++k) {
      if (labeling.values(i, k) == 1.0) entry.push_back(k);
    }
  }
  return out;
}

json labeling_to_json(const SceneGraph& graph, const Labeling& labeling, const Taxonomy& taxonomy) {
  if (labeling.nodes() != graph.size() || labeling.classes() != taxonomy.size()) {
    throw DataError("labeling does not match the graph / taxonomy");
  }
  json j;
  j["mode"] = to_string(labeling.mode);
  j["classes"] = taxonomy.classes();
  j["segments"] = vertex_ids(graph);
  j["values"] = json::array();
  for (int i = 0; i < labeling.nodes(); ++i) j["values"].push_back(vec_to_json(labeling.values.row(i).transpose()));
  return j;
}

Labeling labeling_from_json(const json& j, const SceneGraph& graph, const Taxonomy& taxonomy) {
  try {
    if (j.at("classes").get<std::vector<std::string>>() != taxonomy.classes()) {
      throw DataError("labeling classes differ from the taxonomy");
    }
    if (j.at("segments").get<std::vector<int>>() != vertex_ids(graph)) throw DataError("labeling segments differ from the graph");
    Labeling y(graph.size(), taxonomy.size(), label_mode_from_string(j.at("mode").get<std::string>()));
    const auto& rows = j.at("values");
    if (rows.size() != static_cast<std::size_t>(graph.size())) throw DataError("labeling row count mismatch");
    for (int i = 0; i < graph.size(); ++i) {
      const auto row = vec_from_json(rows[static_cast<std::size_t>(i)]);
      if (row.size() != taxonomy.size()) throw DataError("labeling column count mismatch");
      y.values.row(i) = row.transpose();
    }
    y.validate();
    return y;
  } catch (const json::exception& e) {
    throw DataError(std::string("labeling: ") + e.what());
  }
}

json graph_to_json(const SceneGraph& graph) {
  json j;
  j["scene"] = graph.scene_name;
  j["context_range"] = graph.context_range;
  j["bounds"] = {{"center", json::array({graph.bounds.center.x(), graph.bounds.center.y()})},
                 {"angle", graph.bounds.angle},
                 {"half_extent", json::array({graph.bounds.half_extent.x(), graph.bounds.half_extent.y()})}};
  json vertices = json::array();
  for (std::size_t i = 0; i < graph.vertices.size(); ++i) {
    const auto& s = graph.vertices[i];
    json v;
    v["id"] = s.id;
    v["point_indices"] = s.point_indices;
    json pos = json::array();
    for (const auto& p : s.positions) pos.push_back(vec3_to_json(p));
    v["positions"] = std::move(pos);
    v["centroid"] = vec3_to_json(s.centroid);
    v["normal"] = vec3_to_json(s.normal);
    v["camera"] = s.camera;
    v["camera_position"] = vec3_to_json(s.camera_position);
    v["eigenvalues"] = vec3_to_json(s.eigenvalues);
    v["degenerate"] = s.degenerate;
    if (graph.has_raw_features()) v["raw"] = vec_to_json(graph.node_raw[i]);
    if (graph.has_binned_features()) v["binned"] = bits_to_json(graph.node_features[i]);
    vertices.push_back(std::move(v));
  }
  j["vertices"] = std::move(vertices);
  json edges = json::array();
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    const auto& g = graph.edges[e];
    json v;
    v["i"] = g.i;
    v["j"] = g.j;
    v["min_distance"] = g.min_distance;
    if (graph.has_raw_features()) v["raw"] = {vec_to_json(graph.edge_raw[e][0]), vec_to_json(graph.edge_raw[e][1])};
    if (graph.has_binned_features()) {
      v["binned"] = {bits_to_json(graph.edge_features[e][0]), bits_to_json(graph.edge_features[e][1])};
    }
    edges.push_back(std::move(v));
  }
  j["edges"] = std::move(edges);
  return j;
}

SceneGraph graph_from_json(const json& j) {
  SceneGraph g;
  try {
    g.scene_name = j.value("scene", "");
    g.context_range = j.at("context_range").get<double>();
    const auto& b = j.at("bounds");
    g.bounds.center = {b.at("center")[0].get<double>(), b.at("center")[1].get<double>()};
    g.bounds.angle = b.at("angle").get<double>();
    g.bounds.half_extent = {b.at("half_extent")[0].get<double>(), b.at("half_extent")[1].get<double>()};
    bool raw = true, binned = true;
    for (const auto& v : j.at("vertices")) {
      Segment s;
      s.id = v.at("id").get<int>();
      s.point_indices = v.at("point_indices").get<std::vector<std::size_t>>();
      for (const auto& p : v.at("positions")) s.positions.push_back(vec3_from_json(p));
      s.centroid = vec3_from_json(v.at("centroid"));
      s.normal = vec3_from_json(v.at("normal"));
      s.camera = v.at("camera").get<int>();
      s.camera_position = vec3_from_json(v.at("camera_position"));
      s.camera_ray = s.centroid - s.camera_position;
      s.horizontal_ray = Vec3(s.camera_ray.x(), s.camera_ray.y(), 0.0);
      s.eigenvalues = vec3_from_json(v.at("eigenvalues"));
      s.degenerate = v.at("degenerate").get<bool>();
      g.vertices.push_back(std::move(s));
      raw = raw && v.contains("raw");
      binned = binned && v.contains("binned");
      if (raw) g.node_raw.push_back(vec_from_json(v.at("raw")));
      if (binned) g.node_features.push_back(vec_from_json(v.at("binned")));
    }
    for (const auto& v : j.at("edges")) {
      GraphEdge e{v.at("i").get<int>(), v.at("j").get<int>(), v.at("min_distance").get<double>()};
      if (e.i < 0 || e.j <= e.i || e.j >= g.size()) throw DataError("graph edge endpoints out of order or range");
      g.edges.push_back(e);
      raw = raw && v.contains("raw");
      binned = binned && v.contains("binned");
      if (raw) g.edge_raw.push_back({vec_from_json(v.at("raw")[0]), vec_from_json(v.at("raw")[1])});
      if (binned) g.edge_features.push_back({vec_from_json(v.at("binned")[0]), vec_from_json(v.at("binned")[1])});
    }
    if (!raw) {
      g.node_raw.clear();
      g.edge_raw.clear();
    }
    if (!binned) {
      g.node_features.clear();
      g.edge_features.clear();
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("graph: ") + e.what());
  }
  return g;
}

void save_graph(const SceneGraph& graph, const std::string& path, const SegmentLabels* labels, const Taxonomy* taxonomy) {
  json j = graph_to_json(graph);
  if (labels != nullptr) {
    if (taxonomy == nullptr) throw UsageError("saving labels needs the taxonomy");
    json l = json::object();
    for (const auto& [id, classes] : *labels) {
      json names = json::array();
      for (int k : classes) names.push_back(taxonomy->class_name(k));
      l[std::to_string(id)] = std::move(names);
    }
    j["labels"] = std::move(l);
  }
  write_json(j, path);
}

SceneGraph load_graph(const std::string& path) {
  try {
    return graph_from_json(read_json(path));
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

SegmentLabels load_graph_labels(const std::string& path, const Taxonomy& taxonomy) {
  const auto j = read_json(path);
  SegmentLabels out;
  if (!j.contains("labels")) return out;
  for (const auto& [key, names] : j.at("labels").items()) {
    auto& entry = out[static_cast<int>(parse_integer(key, path))];
    for (const auto& n : names) entry.push_back(taxonomy.index_of(n.get<std::string>()));
    std::sort(entry.begin(), entry.end());
  }
  return out;
}

}  // namespace scenectx

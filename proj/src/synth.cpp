#include "scenectx/synth.hpp"

#include "scenectx/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <set>

namespace scenectx {

using json = nlohmann::json;

namespace {

const std::set<std::string>& known_rules() {
  static const std::set<std::string> rules{"floor_plane", "wall_plane", "free", "leg_of", "backrest", "on_top_of", "in_front_of"};
  return rules;
}

bool needs_parent(const std::string& rule) {
  return rule == "leg_of" || rule == "backrest" || rule == "on_top_of" || rule == "in_front_of";
}

json range_to_json(const Range& r) { return json::array({r.first, r.second}); }

Range range_from_json(const json& j, const char* key, Range fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (v.is_number()) return {v.get<double>(), v.get<double>()};
  if (!v.is_array() || v.size() != 2) throw DataError(std::string("template: '") + key + "' must be a number or [min, max]");
  Range r{v[0].get<double>(), v[1].get<double>()};
  if (r.first > r.second) throw DataError(std::string("template: '") + key + "' has min > max");
  return r;
}

Vec3 hsv_to_rgb(const Vec3& hsv) {
  const double h = std::fmod(std::fmod(hsv[0], 360.0) + 360.0, 360.0) / 60.0;
  const double s = std::clamp(hsv[1], 0.0, 1.0), v = std::clamp(hsv[2], 0.0, 1.0);
  const double c = v * s;
  const double x = c * (1.0 - std::abs(std::fmod(h, 2.0) - 1.0));
  Vec3 rgb;
  switch (static_cast<int>(h) % 6) {
    case 0: rgb = {c, x, 0}; break;
    case 1: rgb = {x, c, 0}; break;
    case 2: rgb = {0, c, x}; break;
    case 3: rgb = {0, x, c}; break;
    case 4: rgb = {x, 0, c}; break;
    default: rgb = {c, 0, x}; break;
  }
  return rgb + Vec3::Constant(v - c);
}

/// A placed rectangle plus the horizontal frame its children use.
struct Placed {
  Vec3 center = Vec3::Zero();
  Vec3 a = Vec3::UnitX(), b = Vec3::UnitY();  // spanning unit axes
  double ha = 0, hb = 0;                      // half extents
  Vec3 u = Vec3::UnitX(), v = Vec3::UnitY();  // long axis, inward (front) axis
  double length = 0, width = 0, top = 0;
};

class Generator {
 public:
  Generator(const SceneTemplate& t, std::uint64_t seed) : t_(t), rng_(seed) {}

  SceneBundle run() {
    t_.validate();
    SceneBundle out;
    out.taxonomy = t_.taxonomy;
    out.scene.name = t_.name;
    const Vec3 room_center(0.5 * t_.room_width, 0.5 * t_.room_depth, 0.0);
    const double phase = uniform(0.0, 2.0 * M_PI);
    for (int c = 0; c < t_.camera_count; ++c) {
      const double angle = phase + 2.0 * M_PI * c / t_.camera_count;
      out.scene.cameras.push_back(room_center + Vec3(t_.camera_radius * std::cos(angle), t_.camera_radius * std::sin(angle),
                                                     t_.camera_height));
    }
    std::vector<Vec3> cams = out.scene.cameras;
    const KdTree camera_tree(cams);

    std::map<std::string, Placed> placed;
    int segment = 0;
    for (const auto& part : t_.parts) {
      if (!part.parent.empty() && !placed.count(part.parent)) continue;  // parent was skipped
      if (!part.anchor.empty() && !placed.count(part.anchor)) continue;
      if (part.probability < 1.0 && !bernoulli(part.probability)) continue;
      const auto found = place(part, placed);
      if (!found) continue;
      const Placed& p = placed[part.name] = *found;
      const int k = t_.taxonomy.index_of(part.class_name);
      out.labels[segment] = {k};
      const Vec3 color_hsv = part.color.hsv + Vec3(uniform(-part.color.jitter[0], part.color.jitter[0]),
                                                   uniform(-part.color.jitter[1], part.color.jitter[1]),
                                                   uniform(-part.color.jitter[2], part.color.jitter[2]));
      const Vec3 rgb = hsv_to_rgb(color_hsv);
      sample(p, rgb, segment, camera_tree, out);
      ++segment;
    }
    validate_scene(out.scene);
    return out;
  }

 private:
  double uniform(double lo, double hi) { return lo == hi ? lo : std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double uniform(const Range& r) { return uniform(r.first, r.second); }
  bool bernoulli(double p) { return std::bernoulli_distribution(p)(rng_); }
  double gauss(double sigma) { return sigma > 0 ? std::normal_distribution<double>(0.0, sigma)(rng_) : 0.0; }

  std::optional<Placed> place(const PartBlueprint& part, const std::map<std::string, Placed>& placed) {
    Placed p;
    const double W = t_.room_width, D = t_.room_depth, H = t_.room_height;
    if (part.rule == "floor_plane") {
      p.center = Vec3(W / 2, D / 2, 0);
      p.a = Vec3::UnitX();
      p.b = Vec3::UnitY();
      p.ha = W / 2;
      p.hb = D / 2;
      return p;
    }
    if (part.rule == "wall_plane") {
      p.center = Vec3(W / 2, D, kClearance + (H - kClearance) / 2);
      p.a = Vec3::UnitX();
      p.b = Vec3::UnitZ();
      p.ha = W / 2;
      p.hb = (H - kClearance) / 2;
      return p;
    }
    if (part.rule == "free") {
      p.length = uniform(part.length);
      p.width = uniform(part.width);
      p.top = uniform(part.elevation);
      const double margin = uniform(part.margin);
      // Sides: 0 front (y = 0), 1 right (x = W), 2 back (y = D), 3 left (x = 0).
      std::vector<int> sides;
      for (int s = 0; s < 4; ++s) {
        if (!used_sides_.count(s)) sides.push_back(s);
      }
      std::shuffle(sides.begin(), sides.end(), rng_);
      const double inset = margin + 0.5 * p.width;
      Vec3 wall_point, u, v;
      bool placed_ok = false;
      for (int side : sides) {
        const double along = side % 2 == 0 ? W : D;
        const double across = side % 2 == 0 ? D : W;
        const double slack = 0.5 * along - 0.5 * p.length - 0.1;
        if (slack < 0 || 2 * (margin + p.width) > across) continue;
        for (int attempt = 0; attempt < 50 && !placed_ok; ++attempt) {
          const double shift = uniform(-slack, slack);
          switch (side) {
            case 0: wall_point = Vec3(W / 2 + shift, 0, 0); u = Vec3::UnitX(); v = Vec3::UnitY(); break;
            case 1: wall_point = Vec3(W, D / 2 + shift, 0); u = Vec3::UnitY(); v = -Vec3::UnitX(); break;
            case 2: wall_point = Vec3(W / 2 + shift, D, 0); u = -Vec3::UnitX(); v = -Vec3::UnitY(); break;
            default: wall_point = Vec3(0, D / 2 + shift, 0); u = -Vec3::UnitY(); v = Vec3::UnitX(); break;
          }
          const Vec3 c = wall_point + inset * v;
          const Eigen::Vector2d half = (0.5 * p.length * u.cwiseAbs() + 0.5 * p.width * v.cwiseAbs()).head<2>();
          const Eigen::Vector2d lo = c.head<2>() - half, hi = c.head<2>() + half;
          bool clear = true;
          for (const auto& [a, b] : footprints_) {
            clear &= (lo.array() > b.array() + kSpacing).any() || (hi.array() + kSpacing < a.array()).any();
          }
          if (clear) {
            footprints_.emplace_back(lo, hi);
            used_sides_.insert(side);
            placed_ok = true;
          }
        }
        if (placed_ok) break;
      }
      if (!placed_ok) {
        if (part.probability < 1.0) return std::nullopt;
        throw DataError("template: no room left for part '" + part.name + "'");
      }
      p.u = u;
      p.v = v;
      p.center = wall_point + inset * v + Vec3(0, 0, p.top);
      p.a = u;
      p.b = v;
      p.ha = p.length / 2;
      p.hb = p.width / 2;
      return p;
    }

    const Placed& parent = placed.at(part.parent);
    p.u = parent.u;
    p.v = parent.v;
    if (part.rule == "leg_of") {
      const double inset = 0.06;
      const double height = parent.top - 2 * kClearance;
      if (height <= 0) throw DataError("template: '" + part.parent + "' is too low for legs");
      p.center = parent.center + part.side * (parent.length / 2 - inset) * parent.u;
      p.center.z() = kClearance + height / 2;
      p.a = parent.v;
      p.b = Vec3::UnitZ();
      p.ha = 0.4 * parent.width;
      p.hb = height / 2;
      p.length = 2 * p.ha;
      p.width = 2 * p.hb;
      return p;
    }
    p.length = uniform(part.length);
    p.width = uniform(part.width);
    const double gap = uniform(part.offset);
    if (part.rule == "backrest") {
      const double shift = uniform(-0.1, 0.1) * std::max(0.0, parent.length - p.length);
      p.center = parent.center + shift * parent.u + (-parent.width / 2 + 0.04) * parent.v;
      p.center.z() = parent.top + gap + p.width / 2;
      p.a = parent.u;
      p.b = Vec3::UnitZ();
      p.ha = p.length / 2;
      p.hb = p.width / 2;
      p.top = parent.top + gap + p.width;
      return p;
    }
    p.top = parent.top + gap;
    p.a = parent.u;
    p.b = parent.v;
    p.ha = p.length / 2;
    p.hb = p.width / 2;
    const double max_u = std::max(0.0, parent.length / 2 - p.length / 2);
    const double max_v = std::max(0.0, parent.width / 2 - p.width / 2);
    double cu = 0, cv = 0;
    if (part.rule == "on_top_of") {
      cu = uniform(-max_u, max_u);
      cv = uniform(-max_v, max_v);
    } else {  // in_front_of
      const Placed& anchor = placed.at(part.anchor);
      const Vec3 rel = anchor.center - parent.center;
      cu = std::clamp(rel.dot(parent.u), -max_u, max_u);
      cv = std::clamp(rel.dot(parent.v) + uniform(part.distance), -max_v, max_v);
    }
    p.center = parent.center + cu * parent.u + cv * parent.v;
    p.center.z() = p.top;
    return p;
  }

  void sample(const Placed& p, const Vec3& rgb, int segment, const KdTree& cameras, SceneBundle& out) {
    const double s = t_.point_spacing;
    const int na = std::max(2, static_cast<int>(std::ceil(2 * p.ha / s)));
    const int nb = std::max(2, static_cast<int>(std::ceil(2 * p.hb / s)));
    const double da = 2 * p.ha / na, db = 2 * p.hb / nb;
    for (int i = 0; i < na; ++i) {
      for (int j = 0; j < nb; ++j) {
        const double ca = -p.ha + (i + uniform(0.2, 0.8)) * da;
        const double cb = -p.hb + (j + uniform(0.2, 0.8)) * db;
        ScenePoint pt;
        pt.position = p.center + ca * p.a + cb * p.b +
                      Vec3(gauss(t_.position_sigma), gauss(t_.position_sigma), gauss(t_.position_sigma));
        if (pt.position.z() < 0) pt.position.z() = -pt.position.z();
        for (int c = 0; c < 3; ++c) pt.color[c] = std::clamp(rgb[c] + gauss(t_.color_sigma), 0.0, 1.0);
        pt.camera = static_cast<int>(cameras.nearest(pt.position).first);
        out.scene.points.push_back(pt);
        out.segmentation.push_back(segment);
      }
    }
  }

  // Gaps between touching panels and between free parts; they keep the
  // normal estimates of neighboring surfaces apart.
  static constexpr double kClearance = 0.1;
  static constexpr double kSpacing = 0.3;

  const SceneTemplate& t_;
  std::mt19937_64 rng_;
  std::set<int> used_sides_;
  std::vector<std::pair<Eigen::Vector2d, Eigen::Vector2d>> footprints_;
};

}  // namespace

void SceneTemplate::validate() const {
  if (taxonomy.size() < 1) throw DataError("template: empty taxonomy");
  if (!(room_width > 0 && room_depth > 0 && room_height > 0)) throw DataError("template: room dimensions must be positive");
  if (!(point_spacing > 0)) throw DataError("template: point spacing must be positive");
  if (camera_count < 1) throw DataError("template: at least one camera is required");
  std::set<std::string> seen;
  for (const auto& part : parts) {
    if (!known_rules().count(part.rule)) throw DataError("template: unknown rule '" + part.rule + "'");
    if (!taxonomy.find(part.class_name)) throw DataError("template: unknown class '" + part.class_name + "'");
    if (needs_parent(part.rule) && !seen.count(part.parent)) {
      throw DataError("template: part '" + part.name + "' needs an earlier parent");
    }
    if (part.rule == "in_front_of" && !seen.count(part.anchor)) {
      throw DataError("template: part '" + part.name + "' needs an earlier anchor");
    }
    if (!seen.insert(part.name).second) throw DataError("template: duplicate part name '" + part.name + "'");
  }
}

SceneTemplate template_from_json(const json& j) {
  SceneTemplate t;
  try {
    t.name = j.value("name", t.name);
    if (j.contains("room")) {
      const auto& r = j.at("room");
      t.room_width = r.value("width", t.room_width);
      t.room_depth = r.value("depth", t.room_depth);
      t.room_height = r.value("height", t.room_height);
    }
    t.point_spacing = j.value("point_spacing", t.point_spacing);
    if (j.contains("noise")) {
      t.position_sigma = j.at("noise").value("position_sigma", t.position_sigma);
      t.color_sigma = j.at("noise").value("color_sigma", t.color_sigma);
    }
    if (j.contains("cameras")) {
      const auto& c = j.at("cameras");
      t.camera_count = c.value("count", t.camera_count);
      t.camera_height = c.value("height", t.camera_height);
      t.camera_radius = c.value("radius", t.camera_radius);
    }
    std::vector<std::string> classes, objects;
    for (const auto& entry : j.at("classes")) {
      classes.push_back(entry.at(0).get<std::string>());
      objects.push_back(entry.at(1).get<std::string>());
    }
    t.taxonomy = Taxonomy(classes, objects);
    for (const auto& q : j.at("parts")) {
      PartBlueprint p;
      p.name = q.at("name").get<std::string>();
      p.class_name = q.at("class").get<std::string>();
      p.rule = q.at("rule").get<std::string>();
      p.parent = q.value("parent", "");
      p.anchor = q.value("anchor", "");
      p.side = q.value("side", 1);
      p.length = range_from_json(q, "length", p.length);
      p.width = range_from_json(q, "width", p.width);
      p.elevation = range_from_json(q, "elevation", p.elevation);
      p.offset = range_from_json(q, "offset", p.offset);
      p.distance = range_from_json(q, "distance", p.distance);
      p.margin = range_from_json(q, "margin", p.margin);
      p.probability = q.value("probability", 1.0);
      if (q.contains("color")) {
        const auto& c = q.at("color");
        const auto hsv = c.at("hsv").get<std::vector<double>>();
        const auto jitter = c.value("jitter", std::vector<double>{0, 0, 0});
        if (hsv.size() != 3 || jitter.size() != 3) throw DataError("template: color needs 3 components");
        p.color.hsv = Vec3(hsv[0], hsv[1], hsv[2]);
        p.color.jitter = Vec3(jitter[0], jitter[1], jitter[2]);
      }
      t.parts.push_back(p);
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("template: ") + e.what());
  }
  t.validate();
  return t;
}

json template_to_json(const SceneTemplate& t) {
  json j;
  j["name"] = t.name;
  j["room"] = {{"width", t.room_width}, {"depth", t.room_depth}, {"height", t.room_height}};
  j["point_spacing"] = t.point_spacing;
  j["noise"] = {{"position_sigma", t.position_sigma}, {"color_sigma", t.color_sigma}};
  j["cameras"] = {{"count", t.camera_count}, {"height", t.camera_height}, {"radius", t.camera_radius}};
  j["classes"] = json::array();
  for (int k = 0; k < t.taxonomy.size(); ++k) j["classes"].push_back({t.taxonomy.class_name(k), t.taxonomy.object_of(k)});
  j["parts"] = json::array();
  for (const auto& p : t.parts) {
    json q;
    q["name"] = p.name;
    q["class"] = p.class_name;
    q["rule"] = p.rule;
    if (!p.parent.empty()) q["parent"] = p.parent;
    if (!p.anchor.empty()) q["anchor"] = p.anchor;
    if (p.rule == "leg_of") q["side"] = p.side;
    if (p.rule != "floor_plane" && p.rule != "wall_plane" && p.rule != "leg_of") {
      q["length"] = range_to_json(p.length);
      q["width"] = range_to_json(p.width);
    }
    if (p.rule == "free") {
      q["elevation"] = range_to_json(p.elevation);
      q["margin"] = range_to_json(p.margin);
    }
    if (p.rule == "backrest" || p.rule == "on_top_of" || p.rule == "in_front_of") q["offset"] = range_to_json(p.offset);
    if (p.rule == "in_front_of") q["distance"] = range_to_json(p.distance);
    if (p.probability != 1.0) q["probability"] = p.probability;
    q["color"] = {{"hsv", {p.color.hsv[0], p.color.hsv[1], p.color.hsv[2]}},
                  {"jitter", {p.color.jitter[0], p.color.jitter[1], p.color.jitter[2]}}};
    j["parts"].push_back(q);
  }
  return j;
}

SceneTemplate load_template(const std::string& path) { return template_from_json(read_json(path)); }

SceneTemplate office_template() {
  SceneTemplate t;
  t.name = "office_small";
  t.taxonomy = Taxonomy({"floor", "wall", "tableTop", "tableLeg", "monitor", "keyboard", "chairBase", "chairBackRest"},
                        {"floor", "wall", "table", "table", "monitor", "keyboard", "chair", "chair"});
  auto part = [](std::string name, std::string cls, std::string rule, ColorSpec color) {
    PartBlueprint p;
    p.name = std::move(name);
    p.class_name = std::move(cls);
    p.rule = std::move(rule);
    p.color = color;
    return p;
  };
  // Table tops and chair seats share size, height and color; so do
  // monitors and backrests. Legs and keyboards tell them apart.
  const ColorSpec surface{Vec3(30, 0.45, 0.55), Vec3(6, 0.08, 0.08)};
  const ColorSpec panel{Vec3(220, 0.15, 0.2), Vec3(10, 0.05, 0.05)};
  const Range top_length{0.9, 1.3}, top_width{0.55, 0.75}, top_elevation{0.6, 0.75};
  const Range panel_length{0.4, 0.6}, panel_height{0.3, 0.45}, panel_gap{0.08, 0.12};

  t.parts.push_back(part("floor", "floor", "floor_plane", {Vec3(40, 0.15, 0.35), Vec3(5, 0.04, 0.05)}));
  t.parts.push_back(part("wall", "wall", "wall_plane", {Vec3(60, 0.05, 0.85), Vec3(10, 0.03, 0.05)}));

  auto top = [&](std::string name, std::string cls) {
    auto p = part(std::move(name), std::move(cls), "free", surface);
    p.length = top_length;
    p.width = top_width;
    p.elevation = top_elevation;
    p.margin = {0.3, 0.45};
    return p;
  };
  auto upright = [&](std::string name, std::string cls, std::string parent) {
    auto p = part(std::move(name), std::move(cls), "backrest", panel);
    p.parent = std::move(parent);
    p.length = panel_length;
    p.width = panel_height;
    p.offset = panel_gap;
    return p;
  };

  t.parts.push_back(top("table", "tableTop"));
  for (int side : {-1, 1}) {
    auto leg = part(side < 0 ? "leg_left" : "leg_right", "tableLeg", "leg_of", {Vec3(0, 0.0, 0.6), Vec3(0, 0.02, 0.06)});
    leg.parent = "table";
    leg.side = side;
    t.parts.push_back(leg);
  }
  t.parts.push_back(upright("monitor", "monitor", "table"));
  auto keyboard = part("keyboard", "keyboard", "in_front_of", {Vec3(0, 0.0, 0.95), Vec3(0, 0.02, 0.03)});
  keyboard.parent = "table";
  keyboard.anchor = "monitor";
  keyboard.length = {0.4, 0.48};
  keyboard.width = {0.13, 0.17};
  keyboard.offset = {0.02, 0.03};
  keyboard.distance = {0.18, 0.28};
  t.parts.push_back(keyboard);

  t.parts.push_back(top("chair", "chairBase"));
  t.parts.push_back(upright("backrest", "chairBackRest", "chair"));
  auto second = top("chair2", "chairBase");
  second.probability = 0.5;
  t.parts.push_back(second);
  t.parts.push_back(upright("backrest2", "chairBackRest", "chair2"));
  return t;
}

SceneBundle generate(const SceneTemplate& t, std::uint64_t seed) { return Generator(t, seed).run(); }

std::vector<SceneBundle> generate_suite(const SceneTemplate& t, int count, std::uint64_t base_seed) {
  std::vector<SceneBundle> out;
  for (int s = 0; s < count; ++s) {
    out.push_back(generate(t, base_seed + static_cast<std::uint64_t>(s)));
    out.back().scene.name = t.name + "_" + std::to_string(base_seed + static_cast<std::uint64_t>(s));
  }
  return out;
}

AblationResult ablate(const SceneBundle& bundle, const std::string& class_name) {
  const auto k = bundle.taxonomy.find(class_name);
  if (!k) throw DataError("ablate: unknown class '" + class_name + "'");
  std::set<int> removed_segments;
  for (const auto& [id, classes] : bundle.labels) {
    if (std::find(classes.begin(), classes.end(), *k) != classes.end()) removed_segments.insert(id);
  }
  if (removed_segments.empty()) throw DataError("ablate: class '" + class_name + "' is not present in the scene");
  AblationResult out;
  out.class_name = class_name;
  out.bundle.taxonomy = bundle.taxonomy;
  out.bundle.scene.name = bundle.scene.name;
  out.bundle.scene.cameras = bundle.scene.cameras;
  for (std::size_t i = 0; i < bundle.scene.points.size(); ++i) {
    if (removed_segments.count(bundle.segmentation[i])) {
      out.hidden_centroid += bundle.scene.points[i].position;
      ++out.removed_points;
      continue;
    }
    out.bundle.scene.points.push_back(bundle.scene.points[i]);
    out.bundle.segmentation.push_back(bundle.segmentation[i]);
  }
  out.hidden_centroid /= static_cast<double>(std::max<std::size_t>(1, out.removed_points));
  for (const auto& [id, classes] : bundle.labels) {
    if (!removed_segments.count(id)) out.bundle.labels[id] = classes;
  }
  return out;
}

void save_bundle(const SceneBundle& bundle, const std::string& directory) {
  namespace fs = std::filesystem;
  save_scene(bundle.scene, directory);
  save_segmentation(bundle.segmentation, (fs::path(directory) / "segments.csv").string());
  save_labels(bundle.labels, bundle.taxonomy, (fs::path(directory) / "labels.csv").string());
  save_taxonomy(bundle.taxonomy, (fs::path(directory) / "taxonomy.json").string());
}

SceneBundle load_bundle(const std::string& directory) {
  namespace fs = std::filesystem;
  SceneBundle b;
  b.scene = load_scene(directory);
  b.taxonomy = load_taxonomy((fs::path(directory) / "taxonomy.json").string());
  b.segmentation = load_segmentation((fs::path(directory) / "segments.csv").string(), b.scene.points.size());
  b.labels = load_labels((fs::path(directory) / "labels.csv").string(), b.taxonomy);
  return b;
}

}  // namespace scenectx

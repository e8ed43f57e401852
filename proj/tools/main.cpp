#include "json_config.hpp"
#include "log.hpp"

#include "scenectx/eval.hpp"
#include "scenectx/features.hpp"
#include "scenectx/inference.hpp"
#include "scenectx/io.hpp"
#include "scenectx/learning.hpp"
#include "scenectx/model.hpp"
#include "scenectx/pipeline.hpp"
#include "scenectx/search.hpp"
#include "scenectx/segmentation.hpp"
#include "scenectx/synth.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace scenectx::cli {
namespace {

// Non-convergence or a timed-out solve under --strict.
struct StrictFailure : Error {
  using Error::Error;
};

struct Globals {
  std::uint64_t seed = 0;
  int threads = 1;
  bool strict = false;
  int verbosity = 2;
};

Log g_log;

std::uint64_t substream(std::uint64_t seed, std::string_view name) { return fnv1a(name, fnv1a(std::to_string(seed))); }

void soft_failure(const Globals& g, const std::string& what) {
  if (g.strict) throw StrictFailure(what);
  g_log.warn("warning", {{"message", what}});
}

Vec3 parse_vec3(const std::string& text) {
  std::vector<double> v;
  std::stringstream in(text);
  std::string part;
  while (std::getline(in, part, ',')) v.push_back(parse_double(part, "--camera"));
  if (v.size() != 3) throw UsageError("expected three comma-separated numbers, got '" + text + "'");
  return Vec3(v[0], v[1], v[2]);
}

// Every graph file (a JSON object with "vertices") in a directory, sorted by name.
std::vector<fs::path> graph_files(const std::string& directory) {
  if (!fs::is_directory(directory)) throw DataError("not a directory: " + directory);
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(directory)) {
    if (entry.path().extension() != ".json") continue;
    const json j = read_json(entry.path().string());
    if (j.is_object() && j.contains("vertices")) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw DataError("no graph files in " + directory);
  return out;
}

Dataset dataset_from_graphs(const std::string& directory, const Taxonomy& taxonomy) {
  Dataset d;
  d.taxonomy = taxonomy;
  for (const auto& path : graph_files(directory)) {
    d.graphs.push_back(load_graph(path.string()));
    const auto labels = load_graph_labels(path.string(), taxonomy);
    if (labels.empty()) throw DataError("graph has no embedded labels: " + path.string());
    d.truths.push_back(labeling_for_graph(d.graphs.back(), labels, taxonomy.size(), LabelMode::ExactlyOne));
    for (int i = 0; i < d.truths.back().nodes(); ++i) {
      if (d.truths.back().values.row(i).sum() != 1.0) {
        throw DataError(path.string() + ": every segment needs exactly one label for training");
      }
    }
  }
  return d;
}

LabelMode exact_mode(const std::string& mode) {
  if (mode == "exact") return LabelMode::ExactlyOne;
  if (mode == "detect") return LabelMode::AtMostOne;
  throw UsageError("mode must be exact or detect");
}

void write_rows(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    write_text(text, path);
  }
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::string template_path;
  std::string out;
  int count = 1;
  std::string write_template;
};

void run_synth(const Globals& g, const SynthArgs& a) {
  const SceneTemplate t = a.template_path.empty() ? office_template() : load_template(a.template_path);
  if (!a.write_template.empty()) write_json(template_to_json(t), a.write_template);
  if (a.out.empty()) return;
  if (a.count < 1) throw UsageError("--count must be positive");
  const std::uint64_t base = substream(g.seed, "synth");
  for (int s = 0; s < a.count; ++s) {
    SceneBundle b = generate(t, base + static_cast<std::uint64_t>(s));
    fs::path dir = a.out;
    if (a.count > 1) {
      char name[32];
      std::snprintf(name, sizeof(name), "scene_%03d", s);
      dir /= name;
    }
    b.scene.name = dir.filename().string();
    save_bundle(b, dir.string());
    g_log.info("scene", {{"dir", dir.string()}, {"points", b.scene.points.size()}, {"segments", b.labels.size()}});
  }
}

// -------------------------------------------------------------- segment

struct SegmentArgs {
  std::string scene;
  std::string out;
  SegParams params;
};

void run_segment(const Globals& g, SegmentArgs a) {
  a.params.seed = substream(g.seed, "segmentation");
  validate(a.params);
  const Scene scene = load_scene(a.scene);
  const auto result = segment_cloud(scene, a.params);
  save_segmentation(result.segment_of_point, a.out);
  const auto noise = std::count(result.segment_of_point.begin(), result.segment_of_point.end(), -1);
  g_log.info("segmented", {{"segments", result.segments}, {"clusters", result.clusters}, {"noise_points", noise}});
}

// ------------------------------------------------------------ featurize

struct FeaturizeArgs {
  std::string scene;
  std::string segments;
  std::string out;
  double context_range = 0.3;
  int bins = 10;
  double alpha = 30.0;
  double tau = 0.05;
  std::string binner_in;
  std::string binner_out;
  std::string labels;
  std::string gt_segments;
  std::string labels_out;
  std::string taxonomy;
  std::string features_in;
};

// Rows: segment_id followed by 31 values (replaces the gradient histogram)
// or by all 56 raw node values.
void inject_node_features(SceneGraph& graph, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line[0] == '#' || (row == 1 && !std::isdigit(static_cast<unsigned char>(line[0])) && line[0] != '-')) {
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    const std::string where = path + " line " + std::to_string(row);
    const int id = static_cast<int>(parse_integer(cells.at(0), where));
    const std::size_t n = cells.size() - 1;
    if (n != static_cast<std::size_t>(node_raw::kHogDim) && n != static_cast<std::size_t>(node_raw::kSize)) {
      throw DataError(where + ": expected 31 or 56 values");
    }
    auto it = std::find_if(graph.vertices.begin(), graph.vertices.end(), [&](const Segment& s) { return s.id == id; });
    if (it == graph.vertices.end()) throw DataError(where + ": unknown segment " + std::to_string(id));
    auto& raw = graph.node_raw[static_cast<std::size_t>(it - graph.vertices.begin())];
    const int begin = n == static_cast<std::size_t>(node_raw::kSize) ? 0 : node_raw::kHog;
    for (std::size_t q = 0; q < n; ++q) raw[begin + static_cast<int>(q)] = parse_double(cells[q + 1], where);
  }
}

void run_featurize(const Globals&, const FeaturizeArgs& a) {
  const Scene scene = load_scene(a.scene);
  const auto segmentation = load_segmentation(a.segments, scene.points.size());
  if (!(a.context_range > 0)) throw UsageError("--context-range must be positive");
  FeatureConfig fc;
  fc.bins = a.bins;
  fc.alpha_degrees = a.alpha;
  fc.tau = a.tau;
  SceneGraph graph = graph_from_segmentation(scene, segmentation, a.context_range, fc);
  if (!a.features_in.empty()) inject_node_features(graph, a.features_in);

  FeatureBinners binners;
  if (!a.binner_in.empty()) {
    binners = FeatureBinners::from_json(read_json(a.binner_in));
  } else {
    binners = FeatureBinners::fit({&graph}, a.bins);
  }
  binners.apply(graph);
  if (!a.binner_out.empty()) write_json(binners.to_json(), a.binner_out);

  if (a.labels.empty()) {
    save_graph(graph, a.out);
  } else {
    const std::string tax_path = a.taxonomy.empty() ? (fs::path(a.scene) / "taxonomy.json").string() : a.taxonomy;
    const Taxonomy taxonomy = load_taxonomy(tax_path);
    SegmentLabels labels = load_labels(a.labels, taxonomy);
    if (!a.gt_segments.empty()) {
      labels = transfer_labels(load_segmentation(a.gt_segments, scene.points.size()), labels, segmentation);
    }
    if (!a.labels_out.empty()) save_labels(labels, taxonomy, a.labels_out);
    save_graph(graph, a.out, &labels, &taxonomy);
  }
  g_log.info("featurized", {{"vertices", graph.size()}, {"edges", graph.edges.size()}, {"out", a.out}});
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string data;
  std::string taxonomy;
  std::string variant = "parsimon";
  double C = 1.0;
  double epsilon = 0.01;
  int max_iterations = 500;
  int bins = 10;
  std::string out;
  std::string log;
};

void run_train(const Globals& g, const TrainArgs& a) {
  const Taxonomy taxonomy = load_taxonomy(a.taxonomy);
  Dataset d = dataset_from_graphs(a.data, taxonomy);
  std::vector<const SceneGraph*> fit_on;
  for (const auto& graph : d.graphs) fit_on.push_back(&graph);
  Model model;
  model.binners = FeatureBinners::fit(fit_on, a.bins);
  model.features.bins = a.bins;
  for (auto& graph : d.graphs) model.binners.apply(graph);
  const ModelStructure structure(taxonomy, variant_from_string(a.variant), model.binners);
  std::vector<TrainingExample> examples;
  for (std::size_t s = 0; s < d.graphs.size(); ++s) examples.push_back({&d.graphs[s], d.truths[s]});

  TrainConfig tc;
  tc.C = a.C;
  tc.epsilon = a.epsilon;
  tc.max_iterations = a.max_iterations;
  tc.threads = g.threads;
  if (!(tc.C > 0) || !(tc.epsilon > 0)) throw UsageError("--C and --eps must be positive");
  std::ofstream iteration_log;
  if (!a.log.empty()) {
    iteration_log.open(a.log);
    if (!iteration_log) throw DataError("cannot write " + a.log);
  }
  const TrainResult r = train(examples, structure, tc, [&](const IterationRecord& rec) {
    json line{{"iteration", rec.iteration}, {"xi", rec.xi},           {"violation", rec.violation},
              {"objective", rec.objective}, {"mean_loss", rec.mean_loss}, {"constraints", rec.constraints},
              {"seconds", rec.seconds}};
    if (iteration_log) iteration_log << line.dump() << '\n';
    g_log.write(Level::Debug, "iteration", line);
  });
  model.weights = r.weights;
  model.training = {{"C", tc.C},           {"epsilon", tc.epsilon}, {"max_iterations", tc.max_iterations},
                    {"iterations", r.history.size()}, {"xi", r.xi}, {"converged", r.converged},
                    {"scenes", d.graphs.size()}};
  save_model(model, a.out);
  g_log.info("trained", {{"iterations", r.history.size()}, {"xi", r.xi}, {"converged", r.converged},
                         {"parameters", structure.parameter_count()}});
  if (!r.converged) soft_failure(g, "training stopped at the iteration limit before converging");
}

// -------------------------------------------------------------- predict

struct PredictArgs {
  std::string model;
  std::string graph;
  std::string mode = "exact";
  std::string out;
  std::string stats;
  std::string labeling_out;
  double time_limit = 60.0;
};

void run_predict(const Globals& g, const PredictArgs& a) {
  const Model model = load_model(a.model);
  SceneGraph graph = load_graph(a.graph);
  if (graph.has_raw_features()) model.binners.apply(graph);
  ExactOptions opt;
  opt.time_limit_seconds = a.time_limit;
  InferenceResult r;
  if (a.mode == "relaxed") {
    r = infer_relaxed(model.weights, graph);
  } else if (a.mode == "multilabel") {
    r = infer_multilabel(model.weights, graph);
  } else {
    r = infer_exact(model.weights, graph, exact_mode(a.mode), opt);
  }
  const Taxonomy& taxonomy = model.weights.structure.taxonomy();
  if (!a.out.empty()) save_labels(labels_from_labeling(graph, r.labeling), taxonomy, a.out);
  if (!a.labeling_out.empty()) write_json(labeling_to_json(graph, r.labeling, taxonomy), a.labeling_out);
  const json stats{{"mode", a.mode},
                   {"objective", r.objective},
                   {"integrality", r.integrality},
                   {"wall_seconds", r.stats.wall_seconds},
                   {"nodes_expanded", r.stats.nodes_expanded},
                   {"optimal", r.stats.optimal},
                   {"vertices", graph.size()},
                   {"classes", taxonomy.size()}};
  if (!a.stats.empty()) write_json(stats, a.stats);
  g_log.info("predicted", stats);
  if (!r.stats.optimal) soft_failure(g, "exact inference hit the time limit; the labeling is the best found");
}

// --------------------------------------------------------------- search

struct SearchArgs {
  std::string model;
  std::string graph;
  std::string labels;
  std::string class_name;
  int samples = 1000;
  std::string camera;
  std::string out;
  bool argmax_only = false;
};

void run_search(const Globals& g, const SearchArgs& a) {
  const Model model = load_model(a.model);
  const Taxonomy& taxonomy = model.weights.structure.taxonomy();
  const SceneGraph graph = load_graph(a.graph);
  const SegmentLabels labels = a.labels.empty() ? load_graph_labels(a.graph, taxonomy) : load_labels(a.labels, taxonomy);
  std::optional<Vec3> camera;
  if (!a.camera.empty()) camera = parse_vec3(a.camera);
  const int k = taxonomy.index_of(a.class_name);
  const ContextSearch search(model.weights, model.binners, graph, labels, camera);
  const SearchField f = search.field(k, a.samples, g.threads);
  const Vec3& best = f.optimal_location();
  if (a.argmax_only) {
    std::cout << format_double(best.x()) << ' ' << format_double(best.y()) << ' ' << format_double(best.z()) << ' '
              << format_double(f.best_score()) << '\n';
  } else {
    std::ostringstream csv;
    csv << "x,y,z,score,normalized\n";
    for (std::size_t i = 0; i < f.locations.size(); ++i) {
      const auto& p = f.locations[i];
      csv << format_double(p.x()) << ',' << format_double(p.y()) << ',' << format_double(p.z()) << ','
          << format_double(f.scores[i]) << ',' << format_double(f.normalized[i]) << '\n';
    }
    write_rows(a.out, csv.str());
  }
  json fields{{"class", a.class_name}, {"samples", f.locations.size()}, {"best", {best.x(), best.y(), best.z()}},
              {"score", f.best_score()}};
  if (f.no_context) fields["no_context"] = true;
  if (f.degenerate) fields["degenerate"] = true;
  g_log.info("searched", fields);
}

// ----------------------------------------------------------------- eval

struct EvalArgs {
  std::vector<std::string> pred;
  std::vector<std::string> gt;
  std::string taxonomy;
  std::string out;
  std::string confusion;
};

void run_eval(const Globals&, const EvalArgs& a) {
  if (a.pred.size() != a.gt.size()) throw UsageError("give one --gt file per --pred file");
  const Taxonomy taxonomy = load_taxonomy(a.taxonomy);
  const int K = taxonomy.size();
  std::vector<Labeling> predictions, truths;
  ConfusionMatrix confusion(K);
  for (std::size_t f = 0; f < a.pred.size(); ++f) {
    const SegmentLabels pred = load_labels(a.pred[f], taxonomy);
    const SegmentLabels gt = load_labels(a.gt[f], taxonomy);
    std::vector<int> ids;
    for (const auto& [id, _] : gt) ids.push_back(id);
    for (const auto& [id, _] : pred) {
      if (!gt.count(id)) ids.push_back(id);
    }
    std::sort(ids.begin(), ids.end());
    Labeling p(static_cast<int>(ids.size()), K, LabelMode::Multilabel), t = p;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (auto it = pred.find(ids[i]); it != pred.end()) {
        for (int k : it->second) p.values(static_cast<Eigen::Index>(i), k) = 1.0;
      }
      if (auto it = gt.find(ids[i]); it != gt.end()) {
        for (int k : it->second) t.values(static_cast<Eigen::Index>(i), k) = 1.0;
      }
    }
    confusion.add(p, t);
    predictions.push_back(std::move(p));
    truths.push_back(std::move(t));
  }
  const Metrics m = compute_metrics(predictions, truths);
  const json j = m.to_json(&taxonomy);
  if (!a.out.empty()) write_json(j, a.out);
  else std::cout << j.dump(1) << '\n';
  if (!a.confusion.empty()) write_text(confusion.to_csv(taxonomy), a.confusion);
  g_log.info("evaluated", {{"micro_precision", m.micro_precision}, {"micro_recall", m.micro_recall},
                           {"macro_precision", m.macro_precision}, {"macro_recall", m.macro_recall}});
}

// ------------------------------------------------------------ cv, sweep

struct CvArgs {
  std::string data;
  std::string taxonomy;
  int suite = 0;
  std::string template_path;
  double context_range = 0.3;
  int folds = 4;
  std::string method = "svm";
  std::string variant = "parsimon";
  double C = 1.0;
  double epsilon = 0.01;
  int max_iterations = 500;
  std::string mode = "exact";
  double time_limit = 60.0;
  int bins = 10;
  bool training_loss = false;
  std::string out;
  std::vector<double> ranges{0.1, 0.3, 0.6, 1.2};
};

void add_cv_options(CLI::App* sub, CvArgs& a, bool sweep) {
  if (!sweep) {
    sub->add_option("--data", a.data, "Directory of labeled graph files");
    sub->add_option("--taxonomy", a.taxonomy, "taxonomy.json (with --data)");
    sub->add_option("--context-range", a.context_range, "Edge range for --suite scenes, meters")->capture_default_str();
  } else {
    sub->add_option("--ranges", a.ranges, "Context ranges, meters")->delimiter(',')->capture_default_str();
  }
  sub->add_option("--suite", a.suite, "Generate this many synthetic scenes instead of reading --data");
  sub->add_option("--template", a.template_path, "Scene template for --suite (default: built-in office)");
  sub->add_option("--folds", a.folds, "Number of folds")->capture_default_str();
  sub->add_option("--method", a.method, "svm or max_class")->check(CLI::IsMember({"svm", "max_class"}))->capture_default_str();
  sub->add_option("--variant", a.variant, "node_only, assoc, nonassoc or parsimon")->capture_default_str();
  sub->add_option("--C", a.C, "Regularization trade-off")->capture_default_str();
  sub->add_option("--eps", a.epsilon, "Cutting-plane tolerance")->capture_default_str();
  sub->add_option("--max-iter", a.max_iterations, "Cutting-plane iteration limit")->capture_default_str();
  sub->add_option("--mode", a.mode, "Test-time inference: exact or detect")->capture_default_str();
  sub->add_option("--time-limit", a.time_limit, "Exact inference limit per scene, seconds")->capture_default_str();
  sub->add_option("--bins", a.bins, "Bins per feature")->capture_default_str();
  sub->add_flag("--training-loss", a.training_loss, "Also report the exact-inference training loss per fold");
  sub->add_option("--out", a.out, "Output file (default: stdout)");
}

CvConfig cv_config(const Globals& g, const CvArgs& a) {
  CvConfig c;
  c.folds = a.folds;
  c.seed = substream(g.seed, "folds");
  c.bins = a.bins;
  c.method = a.method == "max_class" ? Method::MaxClass : Method::Svm;
  c.variant = variant_from_string(a.variant);
  c.train.C = a.C;
  c.train.epsilon = a.epsilon;
  c.train.max_iterations = a.max_iterations;
  c.mode = exact_mode(a.mode);
  c.exact.time_limit_seconds = a.time_limit;
  c.threads = g.threads;
  c.training_loss = a.training_loss;
  return c;
}

std::vector<SceneBundle> suite_bundles(const Globals& g, const CvArgs& a) {
  const SceneTemplate t = a.template_path.empty() ? office_template() : load_template(a.template_path);
  return generate_suite(t, a.suite, substream(g.seed, "synth"));
}

void check_cv(const Globals& g, const CvResult& r) {
  for (const auto& f : r.folds) {
    if (!f.converged) soft_failure(g, "training did not converge on a fold");
    if (!f.all_optimal) soft_failure(g, "exact inference hit the time limit on a fold");
  }
}

void run_cv(const Globals& g, const CvArgs& a) {
  Dataset d;
  if (a.suite > 0) {
    d = dataset_from_bundles(suite_bundles(g, a), a.context_range, {}, g.threads);
  } else {
    if (a.data.empty() || a.taxonomy.empty()) throw UsageError("cv needs --data and --taxonomy, or --suite");
    d = dataset_from_graphs(a.data, load_taxonomy(a.taxonomy));
  }
  const CvResult r = cross_validate(d, cv_config(g, a));
  json j = r.to_json(d.taxonomy);
  j["method"] = a.method;
  if (a.method == "svm") j["variant"] = a.variant;
  if (a.out.empty()) std::cout << j.dump(1) << '\n';
  else write_json(j, a.out);
  g_log.info("cross_validated", {{"micro_precision", r.mean.micro_precision}, {"micro_recall", r.mean.micro_recall},
                                 {"std", r.micro_precision_std}});
  check_cv(g, r);
}

void run_sweep(const Globals& g, const CvArgs& a) {
  if (a.suite <= 0) throw UsageError("sweep needs --suite N");
  const auto bundles = suite_bundles(g, a);
  const auto rows = sweep_context_range(bundles, a.ranges, cv_config(g, a));
  std::ostringstream csv;
  csv << "context_range,micro_precision,micro_recall,mean_edges\n";
  for (const auto& row : rows) {
    csv << format_double(row.context_range) << ',' << format_double(row.micro_precision) << ','
        << format_double(row.micro_recall) << ',' << format_double(row.mean_edges) << '\n';
    g_log.info("range", {{"context_range", row.context_range}, {"micro_precision", row.micro_precision}});
  }
  write_rows(a.out, csv.str());
}

// --------------------------------------------------------------- ablate

struct AblateArgs {
  std::string scene;
  std::string class_name;
  std::string out;
};

void run_ablate(const Globals&, const AblateArgs& a) {
  const SceneBundle b = load_bundle(a.scene);
  const AblationResult r = ablate(b, a.class_name);
  save_bundle(r.bundle, a.out);
  const json hidden{{"class", r.class_name},
                    {"centroid", {r.hidden_centroid.x(), r.hidden_centroid.y(), r.hidden_centroid.z()}},
                    {"removed_points", r.removed_points}};
  write_json(hidden, (fs::path(a.out) / "hidden.json").string());
  g_log.info("ablated", hidden);
}

// ----------------------------------------------------------------- main

json resolved_options(const CLI::App* app) {
  json j = json::object();
  for (const CLI::Option* opt : app->get_options({})) {
    if (opt->get_lnames().empty()) continue;
    const std::string name = opt->get_lnames()[0];
    if (name == "help" || name == "config") continue;
    if (opt->count() > 0) {
      const auto& r = opt->results();
      j[name] = r.size() == 1 ? json(r[0]) : json(r);
    } else if (!opt->get_default_str().empty()) {
      j[name] = opt->get_default_str();
    }
  }
  return j;
}

int run(int argc, char** argv) {
  CLI::App app{"Segment labeling and contextual search for indoor point clouds", "scenectx"};
  app.require_subcommand(1);
  app.fallthrough();
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON file with option values (nested objects per subcommand)");

  Globals g;
  app.add_option("--seed", g.seed, "Master seed")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_flag("--strict", g.strict, "Exit with code 3 on non-convergence or solver time-outs");
  app.add_option("--verbosity", g.verbosity, "0 errors, 1 warnings, 2 info, 3 debug")
      ->check(CLI::Range(0, 3))
      ->capture_default_str();

  SynthArgs synth;
  auto* s_synth = app.add_subcommand("synth", "Generate synthetic scene bundles");
  s_synth->add_option("--template", synth.template_path, "Template JSON (default: built-in office)");
  s_synth->add_option("--out", synth.out, "Output directory");
  s_synth->add_option("--count", synth.count, "Number of scenes (subdirectories scene_000, ...)")->capture_default_str();
  s_synth->add_option("--write-template", synth.write_template, "Also write the template as JSON");

  SegmentArgs seg;
  auto* s_segment = app.add_subcommand("segment", "Over-segment a scene by region growing");
  s_segment->add_option("--scene", seg.scene, "Scene bundle directory")->required();
  s_segment->add_option("--out", seg.out, "segments.csv to write")->required();
  s_segment->add_option("--dist-factor", seg.params.distance_factor, "Distance threshold per meter of camera distance")
      ->capture_default_str();
  s_segment->add_option("--angle", seg.params.angle_degrees, "Normal angle threshold, degrees")->capture_default_str();
  s_segment->add_option("--min-points", seg.params.min_points, "Smaller segments become noise")->capture_default_str();
  s_segment->add_option("--normal-k", seg.params.normal_neighborhood, "Neighbors for local normals")->capture_default_str();

  FeaturizeArgs feat;
  auto* s_feat = app.add_subcommand("featurize", "Build the segment graph with raw and binned features");
  s_feat->add_option("--scene", feat.scene, "Scene bundle directory")->required();
  s_feat->add_option("--segments", feat.segments, "segments.csv")->required();
  s_feat->add_option("--out", feat.out, "graph.json to write")->required();
  s_feat->add_option("--context-range", feat.context_range, "Edge range, meters")->capture_default_str();
  s_feat->add_option("--bins", feat.bins, "Bins per feature")->capture_default_str();
  s_feat->add_option("--alpha", feat.alpha, "Angle tolerance for coplanarity and convexity, degrees")->capture_default_str();
  s_feat->add_option("--tau", feat.tau, "Convexity distance tolerance, meters")->capture_default_str();
  s_feat->add_option("--binner-in", feat.binner_in, "Apply this binner instead of fitting one");
  s_feat->add_option("--binner-out", feat.binner_out, "Write the binner used");
  s_feat->add_option("--labels", feat.labels, "labels.csv to embed in the graph");
  s_feat->add_option("--gt-segments", feat.gt_segments, "Segmentation the labels refer to (labels move by majority)");
  s_feat->add_option("--labels-out", feat.labels_out, "Write the embedded labels as labels.csv");
  s_feat->add_option("--taxonomy", feat.taxonomy, "taxonomy.json (default: the scene's)");
  s_feat->add_option("--features-in", feat.features_in, "CSV of precomputed node features per segment");

  TrainArgs tr;
  auto* s_train = app.add_subcommand("train", "Train a model by cutting-plane max-margin learning");
  s_train->add_option("--data", tr.data, "Directory of labeled graph files")->required();
  s_train->add_option("--taxonomy", tr.taxonomy, "taxonomy.json")->required();
  s_train->add_option("--variant", tr.variant, "node_only, assoc, nonassoc or parsimon")->capture_default_str();
  s_train->add_option("--C", tr.C, "Regularization trade-off")->capture_default_str();
  s_train->add_option("--eps", tr.epsilon, "Cutting-plane tolerance")->capture_default_str();
  s_train->add_option("--max-iter", tr.max_iterations, "Iteration limit")->capture_default_str();
  s_train->add_option("--bins", tr.bins, "Bins per feature")->capture_default_str();
  s_train->add_option("--out", tr.out, "model.json to write")->required();
  s_train->add_option("--log", tr.log, "Per-iteration JSON lines");

  PredictArgs pr;
  auto* s_predict = app.add_subcommand("predict", "Label the segments of a graph");
  s_predict->add_option("--model", pr.model, "model.json")->required();
  s_predict->add_option("--graph", pr.graph, "graph.json")->required();
  s_predict->add_option("--mode", pr.mode, "exact, relaxed, detect or multilabel")
      ->check(CLI::IsMember({"exact", "relaxed", "detect", "multilabel"}))
      ->capture_default_str();
  s_predict->add_option("--out", pr.out, "labels.csv to write");
  s_predict->add_option("--stats", pr.stats, "stats.json to write");
  s_predict->add_option("--labeling-out", pr.labeling_out, "Full labeling (with fractional values) as JSON");
  s_predict->add_option("--time-limit", pr.time_limit, "Exact inference limit, seconds")->capture_default_str();

  SearchArgs se;
  auto* s_search = app.add_subcommand("search", "Score placements of a missing object");
  s_search->add_option("--model", se.model, "model.json")->required();
  s_search->add_option("--graph", se.graph, "Labeled graph.json")->required();
  s_search->add_option("--labels", se.labels, "labels.csv (default: labels embedded in the graph)");
  s_search->add_option("--class", se.class_name, "Class to place")->required();
  s_search->add_option("--samples", se.samples, "Grid samples")->capture_default_str();
  s_search->add_option("--camera", se.camera, "Current camera position X,Y,Z");
  s_search->add_option("--out", se.out, "field.csv (default: stdout)");
  s_search->add_flag("--argmax-only", se.argmax_only, "Print only 'x y z score' of the best sample");

  EvalArgs ev;
  auto* s_eval = app.add_subcommand("eval", "Precision and recall of predicted labels");
  s_eval->add_option("--pred", ev.pred, "Predicted labels.csv (repeatable)")->required();
  s_eval->add_option("--gt", ev.gt, "Ground-truth labels.csv (repeatable)")->required();
  s_eval->add_option("--taxonomy", ev.taxonomy, "taxonomy.json")->required();
  s_eval->add_option("--out", ev.out, "metrics.json (default: stdout)");
  s_eval->add_option("--confusion", ev.confusion, "confusion.csv");

  CvArgs cv;
  auto* s_cv = app.add_subcommand("cv", "Cross-validate a method");
  add_cv_options(s_cv, cv, false);

  CvArgs sw;
  auto* s_sweep = app.add_subcommand("sweep", "Cross-validated precision per context range");
  add_cv_options(s_sweep, sw, true);

  AblateArgs ab;
  auto* s_ablate = app.add_subcommand("ablate", "Remove every segment of a class from a scene bundle");
  s_ablate->add_option("--scene", ab.scene, "Scene bundle directory")->required();
  s_ablate->add_option("--class", ab.class_name, "Class to remove")->required();
  s_ablate->add_option("--out", ab.out, "Output bundle directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  CLI::App* sub = app.get_subcommands().front();
  g_log.configure(sub->get_name(), g.verbosity);
  json config = resolved_options(&app);
  config[sub->get_name()] = resolved_options(sub);
  g_log.info("config", {{"config", config}});

  try {
    if (sub == s_synth) run_synth(g, synth);
    else if (sub == s_segment) run_segment(g, seg);
    else if (sub == s_feat) run_featurize(g, feat);
    else if (sub == s_train) run_train(g, tr);
    else if (sub == s_predict) run_predict(g, pr);
    else if (sub == s_search) run_search(g, se);
    else if (sub == s_eval) run_eval(g, ev);
    else if (sub == s_cv) run_cv(g, cv);
    else if (sub == s_sweep) run_sweep(g, sw);
    else if (sub == s_ablate) run_ablate(g, ab);
  } catch (const StrictFailure& e) {
    g_log.error("strict", {{"message", e.what()}});
    return 3;
  } catch (const UsageError& e) {
    g_log.error("usage", {{"message", e.what()}});
    return 1;
  } catch (const Error& e) {
    g_log.error("data", {{"message", e.what()}});
    return 2;
  } catch (const json::exception& e) {
    g_log.error("data", {{"message", e.what()}});
    return 2;
  } catch (const fs::filesystem_error& e) {
    g_log.error("data", {{"message", e.what()}});
    return 2;
  }
  return 0;
}

}  // namespace
}  // namespace scenectx::cli

int main(int argc, char** argv) { return scenectx::cli::run(argc, argv); }

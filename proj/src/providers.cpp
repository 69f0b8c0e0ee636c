#include "fan/providers.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "fan/json_util.hpp"
#include "fan/kernels.hpp"

namespace fan {
namespace {

constexpr std::size_t kNoiseBankSize = std::size_t{1} << 14;
constexpr double kMaxClassCosine = 0.5;

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// out = normalize(mix + scale * g)
void perturb(const float* __restrict mix, const float* __restrict g, float scale,
             float* __restrict out, int d) noexcept {
  float acc[8] = {};
  int k = 0;
  for (; k + 8 <= d; k += 8) {
    for (int j = 0; j < 8; ++j) {
      const float x = mix[k + j] + scale * g[k + j];
      out[k + j] = x;
      acc[j] += x * x;
    }
  }
  for (; k < d; ++k) {
    out[k] = mix[k] + scale * g[k];
    acc[0] += out[k] * out[k];
  }
  const float sq = ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
  const float inv = 1.0f / std::sqrt(sq);
  for (k = 0; k < d; ++k) out[k] *= inv;
}

std::vector<double> gaussian_vector(std::uint64_t seed, int dim) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(dim);
  for (auto& x : v) x = normal(rng);
  return v;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void normalize(std::vector<double>& v) {
  const double n = std::sqrt(dot(v, v));
  if (!(n > 0.0)) throw ConfigError("degenerate class base vector");
  for (auto& x : v) x /= n;
}

// Removes the component along `u` (unit) from `v`.
void reject(std::vector<double>& v, const std::vector<double>& u) {
  const double p = dot(v, u);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] -= p * u[i];
}

}  // namespace

void SceneScript::validate() const {
  if (!(duration > 0.0)) throw ConfigError("scene duration must be positive");
  if (!(frame_rate > 0.0)) throw ConfigError("scene frame_rate must be positive");
  if (!(world_extent > 0.0)) throw ConfigError("scene world_extent must be positive");
  if (dim < 1) throw ConfigError("scene dim must be at least 1");
  if (!(noise_sigma >= 0.0)) throw ConfigError("scene noise_sigma must be non-negative");
  if (feature_stride < 1) throw ConfigError("scene feature_stride must be at least 1");
  if (classes.empty()) throw ConfigError("scene needs at least one class");

  std::set<int> class_ids;
  for (const auto& c : classes) {
    if (!class_ids.insert(c.id).second) {
      throw ConfigError("duplicate class id " + std::to_string(c.id));
    }
  }
  for (const auto& c : classes) {
    if (!c.similar_to) continue;
    if (!class_ids.contains(*c.similar_to) || *c.similar_to == c.id) {
      throw ConfigError("class " + std::to_string(c.id) + " is similar_to an unknown class");
    }
    if (!(std::abs(c.similarity) < kMaxClassCosine)) {
      throw ConfigError("class similarity must be below 0.5 in magnitude");
    }
  }
  if (!class_ids.contains(background_class)) throw ConfigError("unknown background class");

  const double half = world_extent / 2.0;
  std::set<int> object_ids;
  std::set<int> object_classes;
  for (const auto& o : objects) {
    if (!object_ids.insert(o.id).second) {
      throw ConfigError("duplicate object id " + std::to_string(o.id));
    }
    if (!class_ids.contains(o.class_id)) {
      throw ConfigError("object " + std::to_string(o.id) + " has unknown class");
    }
    object_classes.insert(o.class_id);
    if (!(o.size > 0.0)) throw ConfigError("object size must be positive");
    if (o.waypoints.empty()) throw ConfigError("object " + std::to_string(o.id) + " has no waypoints");
    for (std::size_t i = 0; i < o.waypoints.size(); ++i) {
      const auto& w = o.waypoints[i];
      if (i > 0 && !(w.t > o.waypoints[i - 1].t)) {
        throw ConfigError("waypoint times must be strictly increasing");
      }
      if (std::abs(w.x) > half || std::abs(w.y) > half) {
        throw ConfigError("waypoint outside the world extent");
      }
    }
  }
  for (const auto& oc : occluders) {
    if (!(oc.rect.x0 < oc.rect.x1 && oc.rect.y0 < oc.rect.y1)) {
      throw ConfigError("occluder rect must have positive area");
    }
    if (!(oc.t0 <= oc.t1)) throw ConfigError("occluder interval must be ordered");
  }
  if (occluder_class) {
    if (!class_ids.contains(*occluder_class)) throw ConfigError("unknown occluder class");
    if (object_classes.contains(*occluder_class) || *occluder_class == background_class) {
      throw ConfigError("occluder class must differ from object and background classes");
    }
  }
  if (target_object && !object_ids.contains(*target_object)) {
    throw ConfigError("target object " + std::to_string(*target_object) + " does not exist");
  }
}

const SceneObject& SceneScript::object(int id) const {
  for (const auto& o : objects) {
    if (o.id == id) return o;
  }
  throw RangeError("no object with id " + std::to_string(id));
}

SceneScript scene_from_json(const nlohmann::json& j) {
  json_util::check_keys(j, {"duration", "frame_rate", "world_extent", "background_class",
                            "classes", "objects", "occluders", "noise_sigma", "dim", "seed",
                            "feature_stride", "occluder_class", "target"},
                        "scene");
  SceneScript s;
  s.duration = j.value("duration", s.duration);
  s.frame_rate = j.value("frame_rate", s.frame_rate);
  s.world_extent = j.value("world_extent", s.world_extent);
  s.background_class = j.value("background_class", s.background_class);
  s.noise_sigma = j.value("noise_sigma", s.noise_sigma);
  s.dim = j.value("dim", s.dim);
  s.seed = j.value("seed", s.seed);
  s.feature_stride = j.value("feature_stride", s.feature_stride);
  if (j.contains("occluder_class")) s.occluder_class = j.at("occluder_class").get<int>();
  if (j.contains("target")) s.target_object = j.at("target").get<int>();

  for (const auto& c : j.value("classes", nlohmann::json::array())) {
    json_util::check_keys(c, {"id", "seed", "similar_to", "similarity"}, "scene class");
    ClassSpec spec;
    spec.id = c.at("id").get<int>();
    spec.seed = c.value("seed", std::uint64_t{0});
    if (c.contains("similar_to")) {
      spec.similar_to = c.at("similar_to").get<int>();
      spec.similarity = c.at("similarity").get<double>();
    }
    s.classes.push_back(spec);
  }
  for (const auto& o : j.value("objects", nlohmann::json::array())) {
    json_util::check_keys(o, {"id", "class", "shape", "size", "waypoints"}, "scene object");
    SceneObject obj;
    obj.id = o.at("id").get<int>();
    obj.class_id = o.at("class").get<int>();
    const auto shape = o.value("shape", std::string("disc"));
    if (shape == "disc") {
      obj.shape = ObjectShape::disc;
    } else if (shape == "rect") {
      obj.shape = ObjectShape::rect;
    } else {
      throw ConfigError("unknown object shape '" + shape + "'");
    }
    obj.size = o.at("size").get<double>();
    for (const auto& w : o.at("waypoints")) {
      if (!w.is_array() || w.size() != 3) throw ConfigError("waypoints are [t, x, y] triples");
      obj.waypoints.push_back({w[0].get<double>(), w[1].get<double>(), w[2].get<double>()});
    }
    s.objects.push_back(std::move(obj));
  }
  for (const auto& oc : j.value("occluders", nlohmann::json::array())) {
    json_util::check_keys(oc, {"rect", "active"}, "scene occluder");
    const auto& r = oc.at("rect");
    const auto& a = oc.at("active");
    if (r.size() != 4 || a.size() != 2) {
      throw ConfigError("occluder needs rect [x0,y0,x1,y1] and active [t0,t1]");
    }
    s.occluders.push_back({{r[0].get<double>(), r[1].get<double>(), r[2].get<double>(),
                            r[3].get<double>()},
                           a[0].get<double>(),
                           a[1].get<double>()});
  }
  s.validate();
  return s;
}

nlohmann::json scene_to_json(const SceneScript& s) {
  nlohmann::json j;
  j["duration"] = s.duration;
  j["frame_rate"] = s.frame_rate;
  j["world_extent"] = s.world_extent;
  j["background_class"] = s.background_class;
  j["noise_sigma"] = s.noise_sigma;
  j["dim"] = s.dim;
  j["seed"] = s.seed;
  j["feature_stride"] = s.feature_stride;
  if (s.occluder_class) j["occluder_class"] = *s.occluder_class;
  if (s.target_object) j["target"] = *s.target_object;
  j["classes"] = nlohmann::json::array();
  for (const auto& c : s.classes) {
    nlohmann::json cj{{"id", c.id}, {"seed", c.seed}};
    if (c.similar_to) {
      cj["similar_to"] = *c.similar_to;
      cj["similarity"] = c.similarity;
    }
    j["classes"].push_back(cj);
  }
  j["objects"] = nlohmann::json::array();
  for (const auto& o : s.objects) {
    nlohmann::json wps = nlohmann::json::array();
    for (const auto& w : o.waypoints) wps.push_back({w.t, w.x, w.y});
    j["objects"].push_back({{"id", o.id},
                            {"class", o.class_id},
                            {"shape", o.shape == ObjectShape::disc ? "disc" : "rect"},
                            {"size", o.size},
                            {"waypoints", wps}});
  }
  j["occluders"] = nlohmann::json::array();
  for (const auto& oc : s.occluders) {
    j["occluders"].push_back({{"rect", {oc.rect.x0, oc.rect.y0, oc.rect.x1, oc.rect.y1}},
                              {"active", {oc.t0, oc.t1}}});
  }
  return j;
}

SceneScript load_scene(const std::filesystem::path& path) {
  return scene_from_json(json_util::load_file(path));
}

Point2 object_position(const SceneObject& object, double t) {
  const auto& w = object.waypoints;
  if (t <= w.front().t) return {w.front().x, w.front().y};
  if (t >= w.back().t) return {w.back().x, w.back().y};
  const auto next = std::upper_bound(w.begin(), w.end(), t,
                                     [](double v, const Waypoint& p) { return v < p.t; });
  const auto& b = *next;
  const auto& a = *(next - 1);
  const double f = (t - a.t) / (b.t - a.t);
  return {a.x + f * (b.x - a.x), a.y + f * (b.y - a.y)};
}

const GroundTruthObject* GroundTruth::find(int object_id) const noexcept {
  for (const auto& o : objects) {
    if (o.object_id == object_id) return &o;
  }
  return nullptr;
}

SceneRenderer::SceneRenderer(SceneScript scene) : scene_(std::move(scene)) {
  scene_.validate();
  const int d = scene_.dim;

  std::vector<ClassSpec> specs = scene_.classes;
  if (scene_.occluder_class) {
    occluder_class_ = *scene_.occluder_class;
  } else {
    int max_id = 0;
    for (const auto& c : specs) max_id = std::max(max_id, c.id);
    occluder_class_ = max_id + 1;
    specs.push_back({occluder_class_, splitmix64(scene_.seed ^ 0x0CC1'0DE5ull), {}, 0.0});
  }

  // Independent classes first so decoys can be built against any of them.
  std::stable_partition(specs.begin(), specs.end(),
                        [](const ClassSpec& c) { return !c.similar_to; });

  std::vector<std::vector<double>> bases;
  for (const auto& spec : specs) {
    std::vector<double> v = gaussian_vector(spec.seed, d);
    if (spec.similar_to) {
      const auto it = std::find_if(specs.begin(), specs.end(),
                                   [&](const ClassSpec& c) { return c.id == *spec.similar_to; });
      const auto& ref = bases[static_cast<std::size_t>(it - specs.begin())];
      reject(v, ref);
      normalize(v);
      const double c = spec.similarity;
      for (int i = 0; i < d; ++i) v[i] = c * ref[i] + std::sqrt(1.0 - c * c) * v[i];
    } else {
      normalize(v);
      for (int round = 0; round < 8; ++round) {
        bool moved = false;
        for (const auto& u : bases) {
          if (dot(v, u) >= kMaxClassCosine) {
            reject(v, u);
            normalize(v);
            moved = true;
          }
        }
        if (!moved) break;
      }
    }
    normalize(v);
    bases.push_back(std::move(v));
  }
  for (std::size_t a = 0; a < bases.size(); ++a) {
    for (std::size_t b = a + 1; b < bases.size(); ++b) {
      if (dot(bases[a], bases[b]) >= kMaxClassCosine) {
        throw ConfigError("class base vectors " + std::to_string(specs[a].id) + " and " +
                          std::to_string(specs[b].id) + " are not separable (cosine >= 0.5)");
      }
    }
  }
  for (std::size_t i = 0; i < specs.size(); ++i) {
    classes_.push_back({specs[i].id, std::vector<float>(bases[i].begin(), bases[i].end())});
  }
  std::sort(classes_.begin(), classes_.end(),
            [](const ClassEntry& a, const ClassEntry& b) { return a.id < b.id; });

  std::mt19937_64 rng(splitmix64(scene_.seed ^ 0x9015'EBA4ull));
  std::normal_distribution<float> normal(0.0f, 1.0f);
  noise_bank_.resize(kNoiseBankSize + static_cast<std::size_t>(d));
  for (auto& x : noise_bank_) x = normal(rng);
}

std::size_t SceneRenderer::class_slot(int class_id) const {
  const auto it = std::lower_bound(classes_.begin(), classes_.end(), class_id,
                                   [](const ClassEntry& e, int id) { return e.id < id; });
  if (it == classes_.end() || it->id != class_id) {
    throw RangeError("unknown class id " + std::to_string(class_id));
  }
  return static_cast<std::size_t>(it - classes_.begin());
}

const SceneRenderer::ClassEntry& SceneRenderer::entry(int class_id) const {
  return classes_[class_slot(class_id)];
}

std::span<const float> SceneRenderer::class_base(int class_id) const {
  return entry(class_id).base;
}

std::vector<int> SceneRenderer::class_ids() const {
  std::vector<int> ids;
  for (const auto& c : classes_) ids.push_back(c.id);
  return ids;
}

RenderedFrame SceneRenderer::render(double t, const CameraModel& camera) const {
  return render(t, camera, {});
}

RenderedFrame SceneRenderer::render(double t, const CameraModel& camera,
                                    std::vector<float> storage) const {
  if (!(t >= 0.0 && t <= scene_.duration)) {
    throw RangeError("render time " + std::to_string(t) + " outside [0, " +
                     std::to_string(scene_.duration) + "]");
  }
  if (camera.view_width < 1 || camera.view_height < 1 || !(camera.scale > 0.0)) {
    throw RangeError("invalid camera model");
  }
  const int w = camera.view_width;
  const int h = camera.view_height;
  const int d = scene_.dim;
  const std::size_t n = static_cast<std::size_t>(w) * h;

  // Owner per pixel: object index, -1 background, -2 occluder.
  std::vector<int> owner(n, -1);
  const double inv = 1.0 / camera.scale;
  for (std::size_t oi = 0; oi < scene_.objects.size(); ++oi) {
    const auto& o = scene_.objects[oi];
    const Point2 p = object_position(o, t);
    const Point2 centre = camera.world_to_pixel(p);
    const double half_px = o.size / 2.0 * inv;
    const int c0 = std::max(0, static_cast<int>(std::floor(centre.x - half_px)));
    const int c1 = std::min(w - 1, static_cast<int>(std::ceil(centre.x + half_px)));
    const int r0 = std::max(0, static_cast<int>(std::floor(centre.y - half_px)));
    const int r1 = std::min(h - 1, static_cast<int>(std::ceil(centre.y + half_px)));
    for (int r = r0; r <= r1; ++r) {
      for (int c = c0; c <= c1; ++c) {
        const double dx = c - centre.x, dy = r - centre.y;
        const bool inside = o.shape == ObjectShape::disc
                                ? dx * dx + dy * dy <= half_px * half_px
                                : std::abs(dx) <= half_px && std::abs(dy) <= half_px;
        if (inside) owner[static_cast<std::size_t>(r) * w + c] = static_cast<int>(oi);
      }
    }
  }
  for (const auto& oc : scene_.occluders) {
    if (!oc.active(t)) continue;
    const Point2 a = camera.world_to_pixel({oc.rect.x0, oc.rect.y0});
    const Point2 b = camera.world_to_pixel({oc.rect.x1, oc.rect.y1});
    const int c0 = std::max(0, static_cast<int>(std::ceil(a.x)));
    const int c1 = std::min(w - 1, static_cast<int>(std::floor(b.x)));
    const int r0 = std::max(0, static_cast<int>(std::ceil(a.y)));
    const int r1 = std::min(h - 1, static_cast<int>(std::floor(b.y)));
    for (int r = r0; r <= r1; ++r)
      for (int c = c0; c <= c1; ++c) owner[static_cast<std::size_t>(r) * w + c] = -2;
  }

  const std::size_t background_slot = class_slot(scene_.background_class);
  const std::size_t occluder_slot = class_slot(occluder_class_);
  std::vector<std::size_t> object_slot;
  for (const auto& o : scene_.objects) object_slot.push_back(class_slot(o.class_id));
  auto slot_of = [&](int own) {
    if (own == -1) return background_slot;
    if (own == -2) return occluder_slot;
    return object_slot[static_cast<std::size_t>(own)];
  };

  const std::uint64_t frame_key = splitmix64(scene_.seed ^ std::bit_cast<std::uint64_t>(t));
  const auto noise_scale = static_cast<float>(scene_.noise_sigma / std::sqrt(static_cast<double>(d)));
  const int stride = scene_.feature_stride;
  std::vector<float> data = std::move(storage);
  data.resize(n * d);
  std::vector<float> mixed(d);
  std::vector<double> fractions(classes_.size());

  for (int cr = 0; cr < h; cr += stride) {
    for (int cc = 0; cc < w; cc += stride) {
      const int rend = std::min(cr + stride, h), cend = std::min(cc + stride, w);
      int pure_slot = -1;
      const float* mix = mixed.data();
      if (stride == 1) {
        pure_slot = static_cast<int>(slot_of(owner[static_cast<std::size_t>(cr) * w + cc]));
        mix = classes_[static_cast<std::size_t>(pure_slot)].base.data();
      } else {
        std::fill(fractions.begin(), fractions.end(), 0.0);
        for (int r = cr; r < rend; ++r)
          for (int c = cc; c < cend; ++c) fractions[slot_of(owner[static_cast<std::size_t>(r) * w + c])] += 1.0;
        const double cell = static_cast<double>((rend - cr) * (cend - cc));
        std::vector<double> acc(d, 0.0);
        for (std::size_t s = 0; s < fractions.size(); ++s) {
          if (fractions[s] == 0.0) continue;
          if (fractions[s] == cell) pure_slot = static_cast<int>(s);
          const double f = fractions[s] / cell;
          for (int k = 0; k < d; ++k) acc[k] += f * classes_[s].base[k];
        }
        for (int k = 0; k < d; ++k) mixed[k] = static_cast<float>(acc[k]);
      }
      // One descriptor per cell, shared by all of its pixels.
      const std::size_t first = static_cast<std::size_t>(cr) * w + cc;
      const float* cell_value = data.data() + first * d;
      if (scene_.noise_sigma == 0.0 && pure_slot >= 0) {
        cell_value = classes_[pure_slot].base.data();
      } else {
        const std::size_t offset =
            splitmix64(frame_key ^ (first * 0x9E3779B97F4A7C15ull)) & (kNoiseBankSize - 1);
        perturb(mix, noise_bank_.data() + offset, noise_scale, data.data() + first * d, d);
      }
      for (int r = cr; r < rend; ++r) {
        for (int c = cc; c < cend; ++c) {
          float* out = data.data() + (static_cast<std::size_t>(r) * w + c) * d;
          if (out != cell_value) std::copy(cell_value, cell_value + d, out);
        }
      }
    }
  }

  GroundTruth truth;
  for (std::size_t oi = 0; oi < scene_.objects.size(); ++oi) {
    Mask m(h, w);
    for (std::size_t i = 0; i < n; ++i) {
      if (owner[i] == static_cast<int>(oi)) m.set(i);
    }
    truth.objects.push_back({scene_.objects[oi].id, scene_.objects[oi].class_id, std::move(m)});
  }
  return {DescriptorField(h, w, d, std::move(data)), std::move(truth)};
}

RenderedFrame render_frame(const SceneScript& scene, double t, const CameraModel& camera) {
  return SceneRenderer(scene).render(t, camera);
}

QueryDescriptor query_from_click(const DescriptorField& field, int x, int y, std::string label) {
  if (x < 0 || y < 0 || x >= field.width() || y >= field.height()) {
    throw RangeError("click (" + std::to_string(x) + ", " + std::to_string(y) +
                     ") outside " + std::to_string(field.width()) + "x" +
                     std::to_string(field.height()) + " frame");
  }
  const auto p = field.pixel(y, x);
  return {std::move(label), std::vector<float>(p.begin(), p.end()), QueryKind::click};
}

QueryDescriptor query_from_region(const DescriptorField& field, const Mask& mask,
                                  std::string label) {
  validate_shapes(field, mask);
  const auto sum = kernels::masked_sum(field, mask);
  if (sum.count == 0) throw EmptyRegionError("query region is empty");
  std::vector<float> v(sum.sum.size());
  for (std::size_t k = 0; k < v.size(); ++k) {
    v[k] = static_cast<float>(sum.sum[k] / static_cast<double>(sum.count));
  }
  return {std::move(label), std::move(v), QueryKind::region};
}

QuerySet queries_from_json(const nlohmann::json& j) {
  json_util::check_keys(j, {"target", "queries"}, "query file");
  QuerySet set;
  for (const auto& q : j.at("queries")) {
    json_util::check_keys(q, {"label", "vector", "kind"}, "query");
    const auto kind_name = q.value("kind", std::string("precomputed"));
    QueryKind kind = QueryKind::precomputed;
    if (kind_name == "click") {
      kind = QueryKind::click;
    } else if (kind_name == "region") {
      kind = QueryKind::region;
    } else if (kind_name != "precomputed") {
      throw ConfigError("unknown query kind '" + kind_name + "'");
    }
    set.queries.emplace_back(q.at("label").get<std::string>(),
                             q.at("vector").get<std::vector<float>>(), kind);
  }
  if (set.queries.empty()) throw ConfigError("query file has no queries");
  set.target = j.value("target", set.queries.front().label());
  const bool known = std::any_of(set.queries.begin(), set.queries.end(),
                                 [&](const QueryDescriptor& q) { return q.label() == set.target; });
  if (!known) throw ConfigError("target label '" + set.target + "' has no query");
  return set;
}

nlohmann::json queries_to_json(const QuerySet& set) {
  nlohmann::json j{{"target", set.target}, {"queries", nlohmann::json::array()}};
  for (const auto& q : set.queries) {
    j["queries"].push_back({{"label", q.label()},
                            {"vector", std::vector<float>(q.vector().begin(), q.vector().end())},
                            {"kind", std::string(to_string(q.kind()))}});
  }
  return j;
}

QuerySet load_queries(const std::filesystem::path& path) {
  return queries_from_json(json_util::load_file(path));
}

}  // namespace fan

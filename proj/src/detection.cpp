#include "fan/detection.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <random>

#include <spdlog/spdlog.h>

namespace fan {
namespace {

void check_queries(const DescriptorField& field, std::span<const QueryDescriptor> queries) {
  if (queries.empty()) throw DimensionError("at least one query is required");
  for (const auto& q : queries) {
    if (q.dim() != field.dim()) {
      throw DimensionError("query '" + q.label() + "' has dim " + std::to_string(q.dim()) +
                           " but the field has dim " + std::to_string(field.dim()));
    }
  }
}

struct Match {
  int index = 0;
  double score = 0.0;
};

Match best_query(std::span<const float> v, std::span<const QueryDescriptor> queries,
                 double epsilon) {
  Match best{0, cosine_similarity(v, queries[0].vector(), epsilon)};
  for (std::size_t k = 1; k < queries.size(); ++k) {
    const double s = cosine_similarity(v, queries[k].vector(), epsilon);
    if (s > best.score) best = {static_cast<int>(k), s};
  }
  return best;
}

LabeledRegion unlabeled(Mask mask, double score) {
  return {std::move(mask), std::nullopt, score, -1};
}

LabeledRegion mean_region(const DescriptorField& field, const Mask& mask,
                          std::span<const QueryDescriptor> queries, const DetectionConfig& cfg) {
  const auto v = region_descriptor(field, mask, cfg.exec);
  const Match m = best_query(v, queries, cfg.similarity.epsilon);
  if (m.score >= cfg.alpha()) {
    return {mask, queries[m.index].label(), m.score, m.index};
  }
  return unlabeled(mask, m.score);
}

LabeledRegion from_vote(const Mask& mask, std::span<const QueryDescriptor> queries,
                        const RegionVote& vote) {
  if (vote.query_index < 0) return unlabeled(mask, vote.score);
  return {mask, queries[vote.query_index].label(), vote.score, vote.query_index};
}

// Mode of the votes; ties go to the lower query index.
int vote_winner(const std::vector<int>& votes) {
  int winner = -1;
  int best = 0;
  for (std::size_t k = 0; k < votes.size(); ++k) {
    if (votes[k] > best) {
      best = votes[k];
      winner = static_cast<int>(k);
    }
  }
  return winner;
}

std::vector<std::size_t> mask_pixels(const Mask& mask) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask.at(i)) idx.push_back(i);
  }
  return idx;
}

}  // namespace

void DetectionConfig::validate() const {
  similarity.validate();
  if (connectivity != 4 && connectivity != 8) throw ConfigError("connectivity must be 4 or 8");
  if (min_component_area < 1) throw ConfigError("min_component_area must be at least 1");
  if (strategy == Strategy::kmeans && kmeans_k < 2) throw ConfigError("k-means needs k >= 2");
  if (kmeans_iterations < 1) throw ConfigError("k-means needs at least one iteration");
}

std::vector<float> region_descriptor(const DescriptorField& field, const Mask& mask,
                                     Execution exec) {
  validate_shapes(field, mask);
  const auto sum = kernels::masked_sum(field, mask, exec);
  if (sum.count == 0) throw EmptyRegionError("region descriptor of an empty mask");
  std::vector<float> v(sum.sum.size());
  const double n = static_cast<double>(sum.count);
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = static_cast<float>(sum.sum[k] / n);
  return v;
}

std::vector<LabeledRegion> classify_regions(const DescriptorField& field,
                                            std::span<const Mask> masks,
                                            std::span<const QueryDescriptor> queries,
                                            const DetectionConfig& cfg) {
  check_queries(field, queries);
  std::vector<LabeledRegion> out;
  out.reserve(masks.size());
  for (std::size_t j = 0; j < masks.size(); ++j) {
    const Mask& mask = masks[j];
    validate_shapes(field, mask);
    if (mask.empty()) {
      spdlog::warn("region {} has an empty mask; left unlabeled", j);
      out.push_back(unlabeled(mask, 0.0));
      continue;
    }
    switch (cfg.strategy) {
      case Strategy::mean:
        out.push_back(mean_region(field, mask, queries, cfg));
        break;
      case Strategy::majority_vote:
        out.push_back(from_vote(mask, queries,
                                classify_region_majority(field, mask, queries, cfg.alpha(),
                                                         cfg.similarity.epsilon)));
        break;
      case Strategy::kmeans:
        if (mask.count() < static_cast<std::size_t>(cfg.kmeans_k)) {
          spdlog::warn("region {} has fewer than k={} pixels; using the mean descriptor", j,
                       cfg.kmeans_k);
          out.push_back(mean_region(field, mask, queries, cfg));
        } else {
          out.push_back(from_vote(mask, queries, classify_region_kmeans(field, mask, queries, cfg)));
        }
        break;
    }
  }
  return out;
}

std::vector<LabeledRegion> classify_single(const DescriptorField& field,
                                           std::span<const Mask> masks,
                                           const QueryDescriptor& query,
                                           const DetectionConfig& cfg) {
  return classify_regions(field, masks, std::span<const QueryDescriptor>(&query, 1), cfg);
}

PixelLabels pixel_label_map(const DescriptorField& field,
                            std::span<const QueryDescriptor> queries, double alpha,
                            double epsilon, Execution exec) {
  check_queries(field, queries);
  auto match = kernels::pixel_best_match(field, kernels::QueryMatrix::from(queries), epsilon, exec);
  PixelLabels out{field.height(), field.width(), std::move(match.index), std::move(match.score)};
  for (std::size_t i = 0; i < out.label.size(); ++i) {
    out.score[i] = std::clamp(out.score[i], -1.0, 1.0);
    if (out.score[i] < alpha) out.label[i] = -1;
  }
  return out;
}

std::vector<LabeledRegion> coarse_detect(const DescriptorField& field,
                                         std::span<const QueryDescriptor> queries,
                                         const std::string& target_label,
                                         const DetectionConfig& cfg) {
  check_queries(field, queries);
  std::vector<bool> is_target(queries.size(), false);
  int first_target = -1;
  for (std::size_t k = 0; k < queries.size(); ++k) {
    if (queries[k].label() != target_label) continue;
    is_target[k] = true;
    if (first_target < 0) first_target = static_cast<int>(k);
  }
  if (first_target < 0) throw ConfigError("no query carries the target label '" + target_label + "'");

  const PixelLabels labels =
      pixel_label_map(field, queries, cfg.alpha(), cfg.similarity.epsilon, cfg.exec);
  Mask binary(field.height(), field.width());
  for (std::size_t i = 0; i < labels.label.size(); ++i) {
    if (labels.label[i] >= 0 && is_target[labels.label[i]]) binary.set(i);
  }
  const LabelMap cc = connected_components(binary, cfg.connectivity, cfg.min_component_area);

  std::vector<double> score_sum(cc.count, 0.0);
  std::vector<Mask> masks(cc.count, Mask(field.height(), field.width()));
  for (std::size_t i = 0; i < cc.labels.size(); ++i) {
    const int l = cc.labels[i];
    if (l == 0) continue;
    score_sum[l - 1] += labels.score[i];
    masks[l - 1].set(i);
  }
  std::vector<LabeledRegion> out;
  out.reserve(cc.count);
  for (int l = 0; l < cc.count; ++l) {
    const double score = score_sum[l] / static_cast<double>(cc.areas[l]);
    out.push_back({std::move(masks[l]), target_label, score, first_target});
  }
  return out;
}

RegionVote classify_region_majority(const DescriptorField& field, const Mask& mask,
                                    std::span<const QueryDescriptor> queries, double alpha,
                                    double epsilon) {
  validate_shapes(field, mask);
  check_queries(field, queries);
  if (mask.empty()) throw EmptyRegionError("majority vote over an empty mask");
  std::vector<int> votes(queries.size(), 0);
  std::vector<double> score_sum(queries.size(), 0.0);
  for (std::size_t i : mask_pixels(mask)) {
    const Match m = best_query(field.pixel(i), queries, epsilon);
    if (m.score < alpha) continue;
    ++votes[m.index];
    score_sum[m.index] += m.score;
  }
  const int winner = vote_winner(votes);
  if (winner < 0) return {};
  return {winner, score_sum[winner] / votes[winner]};
}

RegionVote classify_region_kmeans(const DescriptorField& field, const Mask& mask,
                                  std::span<const QueryDescriptor> queries,
                                  const DetectionConfig& cfg) {
  validate_shapes(field, mask);
  check_queries(field, queries);
  const auto pixels = mask_pixels(mask);
  if (pixels.empty()) throw EmptyRegionError("k-means over an empty mask");
  const int k = cfg.kmeans_k;
  const int d = field.dim();
  if (pixels.size() < static_cast<std::size_t>(k)) {
    spdlog::warn("mask has fewer than k={} pixels; using the mean descriptor", k);
    const auto v = region_descriptor(field, mask, cfg.exec);
    const Match m = best_query(v, queries, cfg.similarity.epsilon);
    return m.score >= cfg.alpha() ? RegionVote{m.index, m.score} : RegionVote{-1, m.score};
  }

  auto dist2 = [&](std::size_t pixel, const std::vector<double>& c) {
    const auto p = field.pixel(pixel);
    double s = 0.0;
    for (int j = 0; j < d; ++j) {
      const double diff = p[j] - c[j];
      s += diff * diff;
    }
    return s;
  };
  auto as_centroid = [&](std::size_t pixel) {
    const auto p = field.pixel(pixel);
    return std::vector<double>(p.begin(), p.end());
  };

  // k-means++ seeding.
  std::mt19937_64 rng(cfg.kmeans_seed);
  std::vector<std::vector<double>> centroids;
  centroids.push_back(as_centroid(pixels[std::uniform_int_distribution<std::size_t>(0, pixels.size() - 1)(rng)]));
  std::vector<double> nearest(pixels.size(), std::numeric_limits<double>::infinity());
  while (static_cast<int>(centroids.size()) < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < pixels.size(); ++i) {
      nearest[i] = std::min(nearest[i], dist2(pixels[i], centroids.back()));
      total += nearest[i];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      double target = std::uniform_real_distribution<double>(0.0, total)(rng);
      for (pick = 0; pick + 1 < pixels.size(); ++pick) {
        target -= nearest[pick];
        if (target <= 0.0 && nearest[pick] > 0.0) break;
      }
    } else {
      pick = std::uniform_int_distribution<std::size_t>(0, pixels.size() - 1)(rng);
    }
    centroids.push_back(as_centroid(pixels[pick]));
  }

  // Lloyd iterations.
  std::vector<int> assign(pixels.size(), -1);
  for (int iter = 0; iter < cfg.kmeans_iterations; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < pixels.size(); ++i) {
      int best = 0;
      double best_d = dist2(pixels[i], centroids[0]);
      for (int c = 1; c < k; ++c) {
        const double dd = dist2(pixels[i], centroids[c]);
        if (dd < best_d) {
          best_d = dd;
          best = c;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }
    if (!changed) break;
    std::vector<std::vector<double>> sums(k, std::vector<double>(d, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < pixels.size(); ++i) {
      const auto p = field.pixel(pixels[i]);
      for (int j = 0; j < d; ++j) sums[assign[i]][j] += p[j];
      ++counts[assign[i]];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      for (int j = 0; j < d; ++j) centroids[c][j] = sums[c][j] / static_cast<double>(counts[c]);
    }
  }

  std::vector<int> votes(queries.size(), 0);
  std::vector<double> score_sum(queries.size(), 0.0);
  for (const auto& c : centroids) {
    const std::vector<float> cf(c.begin(), c.end());
    const Match m = best_query(cf, queries, cfg.similarity.epsilon);
    if (m.score < cfg.alpha()) continue;
    ++votes[m.index];
    score_sum[m.index] += m.score;
  }
  const int winner = vote_winner(votes);
  if (winner < 0) return {};
  return {winner, score_sum[winner] / votes[winner]};
}

std::optional<LabeledRegion> best_region(std::span<const LabeledRegion> regions,
                                         const std::string& label) {
  const LabeledRegion* best = nullptr;
  for (const auto& r : regions) {
    if (!r.label || *r.label != label) continue;
    if (best == nullptr || r.score > best->score) best = &r;
  }
  if (best == nullptr) return std::nullopt;
  return *best;
}

}  // namespace fan

#include "imgep/meta_policy.hpp"

#include <algorithm>
#include <limits>

#include "imgep/error.hpp"

namespace imgep {

MetaPolicy::MetaPolicy(std::vector<std::vector<std::size_t>> projections, std::size_t context_dim,
                       double noise_sigma)
    : context_dim_(context_dim), noise_sigma_(noise_sigma) {
  if (projections.empty()) throw ArgumentError("meta-policy needs at least one module");
  if (noise_sigma < 0.0) throw ArgumentError("exploration noise must be >= 0");
  for (auto& dims : projections) {
    Database db;
    db.stride = context_dim + dims.size();
    db.dims = std::move(dims);
    databases_.push_back(std::move(db));
  }
}

void MetaPolicy::update(std::size_t episode, std::span<const double> context, const DmpParams& params,
                        std::span<const double> embedding) {
  if (context.size() != context_dim_) throw ArgumentError("meta-policy update: context dimension mismatch");
  for (auto& db : databases_) {
    if (!db.episodes.empty() && episode <= db.episodes.back()) {
      throw ArgumentError("meta-policy update: episodes must be strictly increasing");
    }
    db.keys.insert(db.keys.end(), context.begin(), context.end());
    for (std::size_t d : db.dims) {
      if (d >= embedding.size()) throw ArgumentError("meta-policy update: embedding too short");
      db.keys.push_back(embedding[d]);
    }
    db.episodes.push_back(episode);
    db.params.push_back(params);
  }
}

std::span<const double> MetaPolicy::key(std::size_t module, std::size_t record) const {
  const Database& db = databases_.at(module);
  return std::span<const double>(db.keys).subspan(record * db.stride, db.stride);
}

MetaPolicy::Match MetaPolicy::nearest(std::size_t module, std::span<const double> context,
                                      std::span<const double> goal) const {
  const Database& db = databases_.at(module);
  if (db.episodes.empty()) throw StateError("meta-policy: empty database");
  if (context.size() != context_dim_ || goal.size() != db.dims.size()) {
    throw ArgumentError("meta-policy query: key dimension mismatch");
  }
  std::vector<double> query(context.begin(), context.end());
  query.insert(query.end(), goal.begin(), goal.end());

  Match best{0, db.episodes.front(), std::numeric_limits<double>::infinity()};
  const std::size_t stride = db.stride;
  const double* row = db.keys.data();
  for (std::size_t r = 0; r < db.episodes.size(); ++r, row += stride) {
    // Partial sums only grow, so a row is dropped as soon as it is worse.
    // Equal distances keep the earlier record.
    double acc = 0.0;
    std::size_t i = 0;
    for (; i < stride; ++i) {
      double d = row[i] - query[i];
      acc += d * d;
      if (acc > best.squared_distance) break;
    }
    if (i == stride && acc < best.squared_distance) best = {r, db.episodes[r], acc};
  }
  return best;
}

DmpParams MetaPolicy::infer(std::size_t module, std::span<const double> context, std::span<const double> goal,
                            Rng& rng) const {
  Match m = nearest(module, context, goal);
  auto base = databases_[module].params[m.record].values();
  std::vector<double> theta(base.begin(), base.end());
  if (noise_sigma_ > 0.0) {
    std::normal_distribution<double> noise(0.0, noise_sigma_);
    for (double& v : theta) v += noise(rng);
  }
  return DmpParams(std::move(theta));
}

}  // namespace imgep

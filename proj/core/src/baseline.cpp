#include "alarmhmm/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "alarmhmm/errors.hpp"

namespace alarmhmm {

std::vector<Symbol> dechatter(std::span<const Symbol> symbols) {
  std::vector<Symbol> out;
  for (Symbol s : symbols) {
    if (out.empty() || out.back() != s) out.push_back(s);
  }
  return out;
}

AlarmSequence dechatter(const AlarmSequence& sequence) {
  AlarmSequence out;
  out.fault = sequence.fault;
  for (std::size_t i = 0; i < sequence.size(); ++i) {
    if (!out.symbols.empty() && out.symbols.back() == sequence.symbols[i]) continue;
    out.symbols.push_back(sequence.symbols[i]);
    if (i < sequence.activation_times.size()) {
      out.activation_times.push_back(sequence.activation_times[i]);
    }
  }
  return out;
}

FeatureMatrix::FeatureMatrix(std::span<const Symbol> symbols, std::size_t n_symbols)
    : counts_(n_symbols, n_symbols, 0) {
  for (std::size_t t = 0; t < symbols.size(); ++t) {
    if (symbols[t] >= n_symbols) {
      throw UnknownSymbolError("symbol " + std::to_string(symbols[t]) + " at position " +
                               std::to_string(t) + " exceeds the feature matrix size");
    }
  }
  const auto clean = dechatter(symbols);
  for (std::size_t t = 1; t < clean.size(); ++t) ++counts_(clean[t - 1], clean[t]);
}

std::size_t FeatureMatrix::total() const noexcept {
  const auto d = counts_.data();
  return std::accumulate(d.begin(), d.end(), std::size_t{0});
}

double feature_distance(const FeatureMatrix& a, const FeatureMatrix& b) {
  if (a.n_symbols() != b.n_symbols()) throw DomainError("feature matrices differ in size");
  const auto x = a.counts().data();
  const auto y = b.counts().data();
  double ss = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double d = static_cast<double>(x[k]) - static_cast<double>(y[k]);
    ss += d * d;
  }
  return std::sqrt(ss);
}

Dendrogram average_linkage(const Matrix& distances) {
  const std::size_t n = distances.rows();
  if (n == 0 || distances.cols() != n) throw DomainError("distance matrix must be square");

  Dendrogram tree;
  tree.n_leaves = n;
  // Active clusters by slot; slot i starts as leaf i. The merged cluster takes
  // the lower slot.
  std::vector<std::size_t> id(n);
  std::iota(id.begin(), id.end(), 0);
  std::vector<std::size_t> size(n, 1);
  std::vector<bool> active(n, true);
  Matrix d = distances;

  for (std::size_t step = 0; step + 1 < n; ++step) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0;
    std::size_t bj = 0;
    std::size_t best_lo = 0;
    std::size_t best_hi = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!active[j]) continue;
        const std::size_t lo = std::min(id[i], id[j]);
        const std::size_t hi = std::max(id[i], id[j]);
        if (d(i, j) < best || (d(i, j) == best && std::pair(lo, hi) < std::pair(best_lo, best_hi))) {
          best = d(i, j);
          bi = i;
          bj = j;
          best_lo = lo;
          best_hi = hi;
        }
      }
    }
    const std::size_t merged_size = size[bi] + size[bj];
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == bi || k == bj) continue;
      const double v = (static_cast<double>(size[bi]) * d(bi, k) +
                        static_cast<double>(size[bj]) * d(bj, k)) /
                       static_cast<double>(merged_size);
      d(bi, k) = v;
      d(k, bi) = v;
    }
    tree.merges.push_back({best_lo, best_hi, best, merged_size});
    id[bi] = n + step;
    size[bi] = merged_size;
    active[bj] = false;
  }
  return tree;
}

std::vector<std::size_t> Dendrogram::cut(std::size_t n_clusters) const {
  if (n_clusters < 1 || n_clusters > n_leaves) {
    throw DomainError("number of clusters must lie in [1, " + std::to_string(n_leaves) + "]");
  }
  // Union-find over leaves and merge nodes.
  std::vector<std::size_t> parent(n_leaves + merges.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&parent](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t k = 0; k < n_leaves - n_clusters; ++k) {
    const std::size_t node = n_leaves + k;
    parent[find(merges[k].cluster_a)] = node;
    parent[find(merges[k].cluster_b)] = node;
  }
  std::vector<std::size_t> label(n_leaves);
  std::vector<std::size_t> root_to_cluster(parent.size(), std::numeric_limits<std::size_t>::max());
  std::size_t next = 0;
  for (std::size_t leaf = 0; leaf < n_leaves; ++leaf) {
    const std::size_t root = find(leaf);
    if (root_to_cluster[root] == std::numeric_limits<std::size_t>::max()) {
      root_to_cluster[root] = next++;
    }
    label[leaf] = root_to_cluster[root];
  }
  return label;
}

BaselineResult cluster_and_classify(std::span<const LabeledSequence> training,
                                    std::span<const AlarmSequence> test, std::size_t n_clusters,
                                    std::size_t n_symbols) {
  if (training.empty()) throw DomainError("training set is empty");
  if (n_clusters < 1 || n_clusters > training.size()) {
    throw DomainError("number of clusters must lie in [1, " + std::to_string(training.size()) +
                      "]");
  }
  const std::size_t n = training.size();
  std::vector<FeatureMatrix> features;
  features.reserve(n);
  for (const auto& s : training) features.emplace_back(s.sequence.symbols, n_symbols);

  Matrix distances(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      distances(i, j) = distances(j, i) = feature_distance(features[i], features[j]);
    }
  }

  BaselineResult result;
  result.dendrogram = average_linkage(distances);
  result.training_clusters = result.dendrogram.cut(n_clusters);

  FaultIndex max_fault = 0;
  for (const auto& s : training) max_fault = std::max(max_fault, s.fault);
  CountMatrix votes(n_clusters, max_fault + 1, 0);
  Matrix centroids(n_clusters, n_symbols * n_symbols, 0.0);
  std::vector<std::size_t> members(n_clusters, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = result.training_clusters[i];
    ++votes(c, training[i].fault);
    ++members[c];
    const auto x = features[i].counts().data();
    auto row = centroids.row(c);
    for (std::size_t k = 0; k < x.size(); ++k) row[k] += static_cast<double>(x[k]);
  }
  for (std::size_t c = 0; c < n_clusters; ++c) {
    for (double& v : centroids.row(c)) v /= static_cast<double>(members[c]);
    const auto row = votes.row(c);
    result.cluster_labels.push_back(
        static_cast<FaultIndex>(std::max_element(row.begin(), row.end()) - row.begin()));
  }

  for (const auto& seq : test) {
    const FeatureMatrix f(seq.symbols, n_symbols);
    const auto x = f.counts().data();
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_cluster = 0;
    for (std::size_t c = 0; c < n_clusters; ++c) {
      const auto row = centroids.row(c);
      double ss = 0.0;
      for (std::size_t k = 0; k < x.size(); ++k) {
        const double d = static_cast<double>(x[k]) - row[k];
        ss += d * d;
      }
      if (ss < best) {
        best = ss;
        best_cluster = c;
      }
    }
    result.predictions.push_back(result.cluster_labels[best_cluster]);
  }
  return result;
}

void write_dendrogram_csv(std::ostream& out, const Dendrogram& dendrogram) {
  out << "step,cluster_a,cluster_b,distance\n";
  for (std::size_t k = 0; k < dendrogram.merges.size(); ++k) {
    const auto& m = dendrogram.merges[k];
    out << k << ',' << m.cluster_a << ',' << m.cluster_b << ',' << format_double(m.distance)
        << '\n';
  }
}

}  // namespace alarmhmm

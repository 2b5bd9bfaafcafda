#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "alarmhmm/alarm.hpp"
#include "alarmhmm/diagnoser.hpp"

namespace alarmhmm {

// Collapses consecutive repeats of the same symbol.
std::vector<Symbol> dechatter(std::span<const Symbol> symbols);
AlarmSequence dechatter(const AlarmSequence& sequence);

// M x M successor counts: (i, j) counts alarm j immediately following alarm i
// in the de-chattered sequence.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::span<const Symbol> symbols, std::size_t n_symbols);

  std::size_t n_symbols() const noexcept { return counts_.rows(); }
  std::size_t operator()(Symbol from, Symbol to) const { return counts_(from, to); }
  std::size_t total() const noexcept;
  const CountMatrix& counts() const noexcept { return counts_; }

 private:
  CountMatrix counts_;
};

// Frobenius (elementwise Euclidean) distance.
double feature_distance(const FeatureMatrix& a, const FeatureMatrix& b);

struct Merge {
  std::size_t cluster_a;  // ids < n are leaves, merge k creates id n + k
  std::size_t cluster_b;
  double distance;
  std::size_t size;
};

struct Dendrogram {
  std::size_t n_leaves = 0;
  std::vector<Merge> merges;

  // Flat cluster id of every leaf after undoing merges beyond n_leaves - n_clusters.
  // Clusters are numbered in order of their smallest member.
  std::vector<std::size_t> cut(std::size_t n_clusters) const;
};

// Average-linkage agglomerative clustering on a symmetric distance matrix.
// The closest pair is merged first; ties go to the pair with the smallest
// (lower id, higher id).
Dendrogram average_linkage(const Matrix& distances);

struct BaselineResult {
  Dendrogram dendrogram;
  std::vector<std::size_t> training_clusters;
  std::vector<FaultIndex> cluster_labels;  // majority label, lowest fault on ties
  std::vector<FaultIndex> predictions;     // one per test sequence
};

// Clusters the training sequences, labels clusters by majority vote and
// assigns each test sequence the label of its nearest cluster centroid
// (lowest cluster id on ties).
BaselineResult cluster_and_classify(std::span<const LabeledSequence> training,
                                    std::span<const AlarmSequence> test, std::size_t n_clusters,
                                    std::size_t n_symbols);

// `step,cluster_a,cluster_b,distance`
void write_dendrogram_csv(std::ostream& out, const Dendrogram& dendrogram);

}  // namespace alarmhmm

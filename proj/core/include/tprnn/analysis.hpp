#pragma once

#include <string>
#include <vector>

#include "tprnn/data_babi.hpp"
#include "tprnn/model.hpp"

namespace tprnn {

/// One row per unique sentence, columns are representation dims.
struct RepMatrix {
  std::vector<std::string> sentences;
  Tensor reps;  // n x d
  std::string which;
};

/// Encodes the unique statement sentences of the given samples and runs
/// them through the chosen update MLP (e1|e2|r1|r2|r3); q_r1 instead uses
/// the unique question sentences through the first query-relation MLP.
RepMatrix collect_reps(const ModelParams& params,
                       const std::vector<TextSample>& samples,
                       const Vocabulary& vocab, const std::string& which);

/// S[i][j] = <xi,xj>/(|xi||xj|), exactly symmetric with unit diagonal.
/// Zero-norm rows get similarity 0 to every other row.
Tensor cosine_matrix(const Tensor& reps);

/// Agglomerative average-linkage clustering on distance 1 - S. Leaves are
/// 0..n-1; merge i forms cluster n+i. Merge distances are non-decreasing.
struct Dendrogram {
  struct Merge {
    int a = 0, b = 0;
    double distance = 0.0;
  };
  std::vector<Merge> merges;
  std::vector<int> leaf_order;
};

Dendrogram hcluster(const Tensor& similarity);

Tensor reorder_matrix(const Tensor& S, const std::vector<int>& order);

/// Cluster labels after undoing the last merges until n_clusters remain.
std::vector<int> cut_clusters(const Dendrogram& d, int n_leaves, int n_clusters);

/// Writes similarity.csv (headers are sentence ids in leaf order),
/// similarity.pgm (reordered matrix, [-1,1] mapped to [0,255]) and
/// sentences.txt (leaf-order listing) into out_dir.
void export_analysis(const std::string& out_dir, const Tensor& similarity,
                     const Dendrogram& dendro,
                     const std::vector<std::string>& sentences);

}  // namespace tprnn

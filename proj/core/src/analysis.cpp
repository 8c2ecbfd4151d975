#include "tprnn/analysis.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <stdexcept>

namespace tprnn {

RepMatrix collect_reps(const ModelParams& params,
                       const std::vector<TextSample>& samples,
                       const Vocabulary& vocab, const std::string& which) {
  const bool question_rep = which == "q_r1";
  const MlpParams* mlp = nullptr;
  if (which == "e1") mlp = &params.f_e1;
  else if (which == "e2") mlp = &params.f_e2;
  else if (which == "r1") mlp = &params.f_r1;
  else if (which == "r2") mlp = &params.f_r2;
  else if (which == "r3") mlp = &params.f_r3;
  else if (question_rep) mlp = &params.f_l1;
  else throw std::invalid_argument("unknown representation: " + which);

  std::vector<std::string> texts;
  std::vector<std::vector<std::string>> sentences;
  std::set<std::string> seen;
  auto keep = [&](const std::vector<std::string>& sentence) {
    const std::string text = detokenize(sentence);
    if (seen.insert(text).second) {
      texts.push_back(text);
      sentences.push_back(sentence);
    }
  };
  for (const TextSample& s : samples) {
    if (question_rep) {
      keep(s.question);
    } else {
      for (const auto& sentence : s.story) keep(sentence);
    }
  }
  if (texts.empty()) throw std::invalid_argument("collect_reps: no sentences");

  const int d = mlp->W2.value.dim(0);
  Tensor reps({static_cast<int>(texts.size()), d});
  for (size_t i = 0; i < sentences.size(); ++i) {
    std::vector<int> ids;
    ids.reserve(sentences[i].size());
    for (const auto& tok : sentences[i]) ids.push_back(vocab.id(tok));
    const Tensor rep = mlp_forward(encode_sentence(ids, params.encoder), *mlp);
    for (int j = 0; j < d; ++j) reps.at(static_cast<int>(i), j) = rep[j];
  }
  return RepMatrix{std::move(texts), std::move(reps), which};
}

Tensor cosine_matrix(const Tensor& reps) {
  if (reps.order() != 2) throw std::invalid_argument("cosine_matrix expects a matrix");
  const int n = reps.dim(0);
  const int d = reps.dim(1);
  std::vector<double> norms(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int j = 0; j < d; ++j) acc += reps.at(i, j) * reps.at(i, j);
    norms[static_cast<size_t>(i)] = std::sqrt(acc);
  }
  Tensor S({n, n});
  for (int i = 0; i < n; ++i) {
    S.at(i, i) = 1.0;
    for (int j = i + 1; j < n; ++j) {
      double sim = 0.0;
      const double denom = norms[static_cast<size_t>(i)] * norms[static_cast<size_t>(j)];
      if (denom > 0.0) {
        double acc = 0.0;
        for (int c = 0; c < d; ++c) acc += reps.at(i, c) * reps.at(j, c);
        sim = acc / denom;
      }
      S.at(i, j) = sim;
      S.at(j, i) = sim;
    }
  }
  return S;
}

namespace {

struct Cluster {
  int id = 0;      // leaf index or n + merge index
  int size = 0;
  bool alive = false;
};

void expand_leaves(const Dendrogram& d, int n, int cluster, std::vector<int>& out) {
  if (cluster < n) {
    out.push_back(cluster);
    return;
  }
  const auto& m = d.merges[static_cast<size_t>(cluster - n)];
  expand_leaves(d, n, m.a, out);
  expand_leaves(d, n, m.b, out);
}

}  // namespace

Dendrogram hcluster(const Tensor& similarity) {
  if (similarity.order() != 2 || similarity.dim(0) != similarity.dim(1)) {
    throw std::invalid_argument("hcluster expects a square matrix");
  }
  const int n = similarity.dim(0);
  Dendrogram out;
  if (n == 1) {
    out.leaf_order = {0};
    return out;
  }

  // dist[i][j] between active clusters, Lance-Williams average linkage.
  std::vector<std::vector<double>> dist(static_cast<size_t>(n),
                                        std::vector<double>(static_cast<size_t>(n), 0.0));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j) dist[static_cast<size_t>(i)][static_cast<size_t>(j)] =
          1.0 - similarity.at(i, j);
    }
  }
  std::vector<int> active(static_cast<size_t>(n));      // slot -> cluster id
  std::vector<int> size(static_cast<size_t>(n), 1);     // slot -> leaf count
  std::vector<bool> alive(static_cast<size_t>(n), true);
  for (int i = 0; i < n; ++i) active[static_cast<size_t>(i)] = i;

  for (int merge = 0; merge < n - 1; ++merge) {
    int bi = -1, bj = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      if (!alive[static_cast<size_t>(i)]) continue;
      for (int j = i + 1; j < n; ++j) {
        if (!alive[static_cast<size_t>(j)]) continue;
        const double d = dist[static_cast<size_t>(i)][static_cast<size_t>(j)];
        if (d < best) {
          best = d;
          bi = i;
          bj = j;
        }
      }
    }
    out.merges.push_back({active[static_cast<size_t>(bi)],
                          active[static_cast<size_t>(bj)], best});
    const int si = size[static_cast<size_t>(bi)];
    const int sj = size[static_cast<size_t>(bj)];
    for (int k = 0; k < n; ++k) {
      if (!alive[static_cast<size_t>(k)] || k == bi || k == bj) continue;
      const double dk = (si * dist[static_cast<size_t>(bi)][static_cast<size_t>(k)] +
                         sj * dist[static_cast<size_t>(bj)][static_cast<size_t>(k)]) /
                        (si + sj);
      dist[static_cast<size_t>(bi)][static_cast<size_t>(k)] = dk;
      dist[static_cast<size_t>(k)][static_cast<size_t>(bi)] = dk;
    }
    active[static_cast<size_t>(bi)] = n + merge;
    size[static_cast<size_t>(bi)] = si + sj;
    alive[static_cast<size_t>(bj)] = false;
  }

  expand_leaves(out, n, n + (n - 2), out.leaf_order);
  return out;
}

Tensor reorder_matrix(const Tensor& S, const std::vector<int>& order) {
  const int n = S.dim(0);
  if (static_cast<int>(order.size()) != n) {
    throw std::invalid_argument("reorder_matrix: order size mismatch");
  }
  Tensor out({n, n});
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      out.at(i, j) = S.at(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
    }
  }
  return out;
}

std::vector<int> cut_clusters(const Dendrogram& d, int n_leaves, int n_clusters) {
  if (n_clusters < 1) throw std::invalid_argument("cut_clusters: need >= 1 cluster");
  std::vector<int> parent(static_cast<size_t>(n_leaves), 0);
  for (int i = 0; i < n_leaves; ++i) parent[static_cast<size_t>(i)] = i;
  const int merges_applied =
      std::max(0, std::min<int>(n_leaves - n_clusters,
                                static_cast<int>(d.merges.size())));
  // Map leaf -> top cluster by replaying the first merges_applied merges.
  std::vector<int> top(static_cast<size_t>(n_leaves));
  for (int i = 0; i < n_leaves; ++i) top[static_cast<size_t>(i)] = i;
  for (int m = 0; m < merges_applied; ++m) {
    const auto& mg = d.merges[static_cast<size_t>(m)];
    std::vector<int> leaves;
    expand_leaves(d, n_leaves, n_leaves + m, leaves);
    (void)mg;
    for (int leaf : leaves) top[static_cast<size_t>(leaf)] = n_leaves + m;
  }
  // Relabel compactly, in first-appearance order over leaves.
  std::vector<int> labels(static_cast<size_t>(n_leaves), -1);
  std::vector<int> relabel;
  for (int i = 0; i < n_leaves; ++i) {
    const int t = top[static_cast<size_t>(i)];
    int id = -1;
    for (size_t r = 0; r < relabel.size(); ++r) {
      if (relabel[r] == t) {
        id = static_cast<int>(r);
        break;
      }
    }
    if (id < 0) {
      id = static_cast<int>(relabel.size());
      relabel.push_back(t);
    }
    labels[static_cast<size_t>(i)] = id;
  }
  return labels;
}

void export_analysis(const std::string& out_dir, const Tensor& similarity,
                     const Dendrogram& dendro,
                     const std::vector<std::string>& sentences) {
  const int n = similarity.dim(0);
  const Tensor R = reorder_matrix(similarity, dendro.leaf_order);

  std::ofstream csv(out_dir + "/similarity.csv");
  if (!csv) throw std::runtime_error("cannot write " + out_dir + "/similarity.csv");
  csv.precision(17);
  csv << "id";
  for (int id : dendro.leaf_order) csv << ',' << id;
  csv << '\n';
  for (int i = 0; i < n; ++i) {
    csv << dendro.leaf_order[static_cast<size_t>(i)];
    for (int j = 0; j < n; ++j) csv << ',' << R.at(i, j);
    csv << '\n';
  }

  std::ofstream pgm(out_dir + "/similarity.pgm", std::ios::binary);
  if (!pgm) throw std::runtime_error("cannot write " + out_dir + "/similarity.pgm");
  pgm << "P5\n" << n << ' ' << n << "\n255\n";
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double v = (R.at(i, j) + 1.0) * 0.5 * 255.0;
      v = std::min(255.0, std::max(0.0, v));
      pgm.put(static_cast<char>(static_cast<unsigned char>(std::lround(v))));
    }
  }

  std::ofstream txt(out_dir + "/sentences.txt");
  if (!txt) throw std::runtime_error("cannot write " + out_dir + "/sentences.txt");
  for (int id : dendro.leaf_order) {
    txt << id << ": " << sentences[static_cast<size_t>(id)] << '\n';
  }
}

}  // namespace tprnn

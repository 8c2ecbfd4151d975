#include "tprnn/autodiff.hpp"

#include <cmath>
#include <stdexcept>

namespace tprnn {

void zero_grads(const std::vector<Param*>& params) {
  for (Param* p : params) {
    std::fill(p->grad.data(), p->grad.data() + p->grad.size(), 0.0);
  }
}

void Tape::own(Var v) const {
  if (v.tape != this || v.id < 0 || v.id >= static_cast<int>(nodes_.size())) {
    throw std::invalid_argument("variable does not belong to this tape");
  }
}

Var Tape::push(Tensor value, std::function<void(Tape&)> backprop, Param* p) {
  Node n;
  n.grad = Tensor(value.dims());
  n.value = std::move(value);
  n.backprop = std::move(backprop);
  n.param = p;
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::leaf(Param& p) { return push(p.value, nullptr, &p); }

Var Tape::constant(Tensor value) { return push(std::move(value), nullptr); }

Var Tape::add(Var a, Var b) {
  own(a);
  own(b);
  Tensor out = tprnn::add(val(a.id), val(b.id));
  return push(std::move(out), [ia = a.id, ib = b.id, io = nodes_.size()](Tape& t) {
    const Tensor& go = t.g(static_cast<int>(io));
    Tensor& ga = t.g(ia);
    Tensor& gb = t.g(ib);
    for (int i = 0; i < go.size(); ++i) {
      ga[i] += go[i];
      gb[i] += go[i];
    }
  });
}

Var Tape::sub(Var a, Var b) {
  own(a);
  own(b);
  Tensor out = tprnn::sub(val(a.id), val(b.id));
  return push(std::move(out), [ia = a.id, ib = b.id, io = nodes_.size()](Tape& t) {
    const Tensor& go = t.g(static_cast<int>(io));
    Tensor& ga = t.g(ia);
    Tensor& gb = t.g(ib);
    for (int i = 0; i < go.size(); ++i) {
      ga[i] += go[i];
      gb[i] -= go[i];
    }
  });
}

Var Tape::scale(Var a, double c) {
  own(a);
  Tensor out = tprnn::scale(val(a.id), c);
  return push(std::move(out), [ia = a.id, c, io = nodes_.size()](Tape& t) {
    const Tensor& go = t.g(static_cast<int>(io));
    Tensor& ga = t.g(ia);
    for (int i = 0; i < go.size(); ++i) ga[i] += c * go[i];
  });
}

Var Tape::hadamard(Var a, Var b) {
  own(a);
  own(b);
  Tensor out = tprnn::hadamard(val(a.id), val(b.id));
  return push(std::move(out), [ia = a.id, ib = b.id, io = nodes_.size()](Tape& t) {
    const Tensor& go = t.g(static_cast<int>(io));
    const Tensor& va = t.val(ia);
    const Tensor& vb = t.val(ib);
    Tensor& ga = t.g(ia);
    Tensor& gb = t.g(ib);
    for (int i = 0; i < go.size(); ++i) {
      ga[i] += go[i] * vb[i];
      gb[i] += go[i] * va[i];
    }
  });
}

Var Tape::dot(Var a, Var b) {
  own(a);
  own(b);
  double out = tprnn::dot(val(a.id), val(b.id));
  return push(Tensor::scalar(out),
              [ia = a.id, ib = b.id, io = nodes_.size()](Tape& t) {
                const double go = t.g(static_cast<int>(io)).at(0);
                const Tensor& va = t.val(ia);
                const Tensor& vb = t.val(ib);
                Tensor& ga = t.g(ia);
                Tensor& gb = t.g(ib);
                for (int i = 0; i < va.size(); ++i) {
                  ga[i] += go * vb[i];
                  gb[i] += go * va[i];
                }
              });
}

Var Tape::matvec(Var W, Var x) {
  own(W);
  own(x);
  Tensor out = tprnn::unbind2(val(W.id), val(x.id));
  return push(std::move(out), [iw = W.id, ix = x.id, io = nodes_.size()](Tape& t) {
    const Tensor& go = t.g(static_cast<int>(io));
    const Tensor& w = t.val(iw);
    const Tensor& v = t.val(ix);
    Tensor& gw = t.g(iw);
    Tensor& gx = t.g(ix);
    const int m = w.dim(0), n = w.dim(1);
    for (int i = 0; i < m; ++i) {
      const double gi = go[i];
      for (int j = 0; j < n; ++j) {
        gw.at(i, j) += gi * v[j];
        gx[j] += w.at(i, j) * gi;
      }
    }
  });
}

Var Tape::matmul(Var A, Var B) {
  own(A);
  own(B);
  const Tensor& a = val(A.id);
  const Tensor& b = val(B.id);
  if (a.order() != 2 || b.order() != 2 || a.dim(1) != b.dim(0)) {
    throw std::invalid_argument("matmul dimension mismatch");
  }
  Tensor out({a.dim(0), b.dim(1)});
  for (int i = 0; i < a.dim(0); ++i) {
    for (int k = 0; k < a.dim(1); ++k) {
      const double aik = a.at(i, k);
      for (int j = 0; j < b.dim(1); ++j) {
        out.at(i, j) += aik * b.at(k, j);
      }
    }
  }
  if (!out.all_finite()) throw NonFiniteError("matmul produced non-finite entry");
  return push(std::move(out), [ia = A.id, ib = B.id, io = nodes_.size()](Tape& t) {
    const Tensor& go = t.g(static_cast<int>(io));
    const Tensor& a = t.val(ia);
    const Tensor& b = t.val(ib);
    Tensor& ga = t.g(ia);
    Tensor& gb = t.g(ib);
    for (int i = 0; i < a.dim(0); ++i) {
      for (int k = 0; k < a.dim(1); ++k) {
        double acc = 0.0;
        for (int j = 0; j < b.dim(1); ++j) {
          acc += go.at(i, j) * b.at(k, j);
          gb.at(k, j) += a.at(i, k) * go.at(i, j);
        }
        ga.at(i, k) += acc;
      }
    }
  });
}

Var Tape::affine(Var W, Var x, Var b) {
  own(W);
  own(x);
  own(b);
  Tensor out = tprnn::add(tprnn::unbind2(val(W.id), val(x.id)), val(b.id));
  return push(std::move(out),
              [iw = W.id, ix = x.id, ib = b.id, io = nodes_.size()](Tape& t) {
                const Tensor& go = t.g(static_cast<int>(io));
                const Tensor& w = t.val(iw);
                const Tensor& v = t.val(ix);
                Tensor& gw = t.g(iw);
                Tensor& gx = t.g(ix);
                Tensor& gb = t.g(ib);
                const int m = w.dim(0), n = w.dim(1);
                for (int i = 0; i < m; ++i) {
                  const double gi = go[i];
                  gb[i] += gi;
                  for (int j = 0; j < n; ++j) {
                    gw.at(i, j) += gi * v[j];
                    gx[j] += w.at(i, j) * gi;
                  }
                }
              });
}

Var Tape::outer2(Var a, Var b) {
  own(a);
  own(b);
  Tensor out = tprnn::outer2(val(a.id), val(b.id));
  return push(std::move(out), [ia = a.id, ib = b.id, io = nodes_.size()](Tape& t) {
    const Tensor& go = t.g(static_cast<int>(io));
    const Tensor& va = t.val(ia);
    const Tensor& vb = t.val(ib);
    Tensor& ga = t.g(ia);
    Tensor& gb = t.g(ib);
    for (int i = 0; i < va.size(); ++i) {
      for (int j = 0; j < vb.size(); ++j) {
        const double gij = go.at(i, j);
        ga[i] += gij * vb[j];
        gb[j] += gij * va[i];
      }
    }
  });
}

Var Tape::outer3(Var a, Var b, Var c) {
  own(a);
  own(b);
  own(c);
  Tensor out = tprnn::outer3(val(a.id), val(b.id), val(c.id));
  return push(std::move(out),
              [ia = a.id, ib = b.id, ic = c.id, io = nodes_.size()](Tape& t) {
                const Tensor& go = t.g(static_cast<int>(io));
                const Tensor& va = t.val(ia);
                const Tensor& vb = t.val(ib);
                const Tensor& vc = t.val(ic);
                Tensor& ga = t.g(ia);
                Tensor& gb = t.g(ib);
                Tensor& gc = t.g(ic);
                const int ni = va.size(), nj = vb.size(), nk = vc.size();
                const double* gp = go.data();
                for (int i = 0; i < ni; ++i) {
                  for (int j = 0; j < nj; ++j) {
                    const double ab = va[i] * vb[j];
                    double acc_ab = 0.0;
                    for (int k = 0; k < nk; ++k) {
                      const double gv = gp[(i * nj + j) * nk + k];
                      acc_ab += gv * vc[k];
                      gc[k] += gv * ab;
                    }
                    ga[i] += acc_ab * vb[j];
                    gb[j] += acc_ab * va[i];
                  }
                }
              });
}

Var Tape::unbind2(Var T, Var u) {
  own(T);
  own(u);
  Tensor out = tprnn::unbind2(val(T.id), val(u.id));
  return push(std::move(out), [it = T.id, iu = u.id, io = nodes_.size()](Tape& t) {
    const Tensor& go = t.g(static_cast<int>(io));
    const Tensor& T = t.val(it);
    const Tensor& u = t.val(iu);
    Tensor& gT = t.g(it);
    Tensor& gu = t.g(iu);
    for (int i = 0; i < T.dim(0); ++i) {
      const double gi = go[i];
      for (int j = 0; j < T.dim(1); ++j) {
        gT.at(i, j) += gi * u[j];
        gu[j] += T.at(i, j) * gi;
      }
    }
  });
}

Var Tape::unbind3(Var F, Var e, Var r) {
  own(F);
  own(e);
  own(r);
  Tensor out = tprnn::unbind3(val(F.id), val(e.id), val(r.id));
  return push(std::move(out),
              [iF = F.id, ie = e.id, ir = r.id, io = nodes_.size()](Tape& t) {
                const Tensor& go = t.g(static_cast<int>(io));
                const Tensor& F = t.val(iF);
                const Tensor& e = t.val(ie);
                const Tensor& r = t.val(ir);
                Tensor& gF = t.g(iF);
                Tensor& ge = t.g(ie);
                Tensor& gr = t.g(ir);
                const int ni = F.dim(0), nj = F.dim(1), nk = F.dim(2);
                for (int i = 0; i < ni; ++i) {
                  const double ei = e[i];
                  double acc_e = 0.0;
                  for (int j = 0; j < nj; ++j) {
                    const double rj = r[j];
                    const double er = ei * rj;
                    double acc_r = 0.0;
                    for (int k = 0; k < nk; ++k) {
                      const double fv = F.at(i, j, k);
                      const double gk = go[k];
                      gF.at(i, j, k) += er * gk;
                      acc_r += fv * gk;
                    }
                    acc_e += acc_r * rj;
                    gr[j] += acc_r * ei;
                  }
                  ge[i] += acc_e;
                }
              });
}

Var Tape::tanh(Var x) {
  own(x);
  Tensor out = val(x.id);
  for (int i = 0; i < out.size(); ++i) out[i] = std::tanh(out[i]);
  return push(std::move(out), [ix = x.id, io = nodes_.size()](Tape& t) {
    const Tensor& go = t.g(static_cast<int>(io));
    const Tensor& y = t.val(static_cast<int>(io));
    Tensor& gx = t.g(ix);
    for (int i = 0; i < go.size(); ++i) gx[i] += go[i] * (1.0 - y[i] * y[i]);
  });
}

Var Tape::sum(Var x) {
  own(x);
  double acc = 0.0;
  const Tensor& v = val(x.id);
  for (int i = 0; i < v.size(); ++i) acc += v[i];
  return push(Tensor::scalar(acc), [ix = x.id, io = nodes_.size()](Tape& t) {
    const double go = t.g(static_cast<int>(io)).at(0);
    Tensor& gx = t.g(ix);
    for (int i = 0; i < gx.size(); ++i) gx[i] += go;
  });
}

Var Tape::sum_rows(Var M) {
  own(M);
  const Tensor& m = val(M.id);
  if (m.order() != 2) throw std::invalid_argument("sum_rows expects a matrix");
  Tensor out({m.dim(1)});
  for (int i = 0; i < m.dim(0); ++i) {
    for (int j = 0; j < m.dim(1); ++j) out[j] += m.at(i, j);
  }
  if (!out.all_finite()) throw NonFiniteError("sum_rows produced non-finite entry");
  return push(std::move(out), [im = M.id, io = nodes_.size()](Tape& t) {
    const Tensor& go = t.g(static_cast<int>(io));
    Tensor& gm = t.g(im);
    const int rows = gm.dim(0), cols = gm.dim(1);
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) gm.at(i, j) += go[j];
    }
  });
}

Var Tape::layer_norm(Var x, Var gamma, Var beta, double epsilon) {
  own(x);
  own(gamma);
  own(beta);
  const Tensor& v = val(x.id);
  if (v.order() != 1 || v.size() < 2) {
    throw std::invalid_argument("layer_norm expects a vector of size >= 2");
  }
  const int n = v.size();
  double mean = 0.0;
  for (int i = 0; i < n; ++i) mean += v[i];
  mean /= n;
  double var = 0.0;
  for (int i = 0; i < n; ++i) var += (v[i] - mean) * (v[i] - mean);
  var /= n;  // population variance
  const double inv_std = 1.0 / std::sqrt(var + epsilon);
  Tensor xhat({n});
  for (int i = 0; i < n; ++i) xhat[i] = (v[i] - mean) * inv_std;
  const double ga = val(gamma.id).at(0);
  const double be = val(beta.id).at(0);
  Tensor out({n});
  for (int i = 0; i < n; ++i) out[i] = ga * xhat[i] + be;
  if (!out.all_finite()) throw NonFiniteError("layer_norm produced non-finite entry");
  return push(std::move(out),
              [ix = x.id, ig = gamma.id, ib = beta.id, xhat = std::move(xhat),
               inv_std, io = nodes_.size()](Tape& t) {
                const Tensor& go = t.g(static_cast<int>(io));
                const double gam = t.val(ig).at(0);
                Tensor& gx = t.g(ix);
                Tensor& gg = t.g(ig);
                Tensor& gb = t.g(ib);
                const int n = go.size();
                double sum_g = 0.0, sum_gx = 0.0;
                for (int i = 0; i < n; ++i) {
                  sum_g += go[i];
                  sum_gx += go[i] * xhat[i];
                }
                gg.at(0) += sum_gx;
                gb.at(0) += sum_g;
                const double mg = sum_g / n;
                const double mgx = sum_gx / n;
                const double c = gam * inv_std;
                for (int i = 0; i < n; ++i) {
                  gx[i] += c * (go[i] - mg - xhat[i] * mgx);
                }
              });
}

Var Tape::softmax_xent(Var logits, int target) {
  own(logits);
  const Tensor& l = val(logits.id);
  if (l.order() != 1) throw std::invalid_argument("softmax_xent expects a vector");
  if (target < 0 || target >= l.size()) {
    throw std::invalid_argument("softmax_xent target out of range");
  }
  const int n = l.size();
  double mx = l[0];
  for (int i = 1; i < n; ++i) mx = std::max(mx, l[i]);
  double z = 0.0;
  for (int i = 0; i < n; ++i) z += std::exp(l[i] - mx);
  const double lse = mx + std::log(z);
  const double loss = lse - l[target];
  if (!std::isfinite(loss)) throw NonFiniteError("softmax_xent non-finite loss");
  Tensor probs({n});
  for (int i = 0; i < n; ++i) probs[i] = std::exp(l[i] - lse);
  return push(Tensor::scalar(loss),
              [il = logits.id, target, probs = std::move(probs),
               io = nodes_.size()](Tape& t) {
                const double go = t.g(static_cast<int>(io)).at(0);
                Tensor& gl = t.g(il);
                for (int i = 0; i < probs.size(); ++i) {
                  gl[i] += go * (probs[i] - (i == target ? 1.0 : 0.0));
                }
              });
}

Var Tape::embedding_gather(Var table, const std::vector<int>& ids) {
  own(table);
  const Tensor& tab = val(table.id);
  if (tab.order() != 2) throw std::invalid_argument("embedding_gather expects a matrix");
  const int d = tab.dim(1);
  const int k = static_cast<int>(ids.size());
  if (k == 0) throw std::invalid_argument("embedding_gather needs at least one id");
  Tensor out({k, d});
  for (int i = 0; i < k; ++i) {
    const int row = ids[static_cast<size_t>(i)];
    if (row < 0 || row >= tab.dim(0)) {
      throw std::invalid_argument("embedding_gather id out of range");
    }
    for (int j = 0; j < d; ++j) out.at(i, j) = tab.at(row, j);
  }
  return push(std::move(out), [it = table.id, ids, io = nodes_.size()](Tape& t) {
    const Tensor& go = t.g(static_cast<int>(io));
    Tensor& gt = t.g(it);
    const int d = gt.dim(1);
    for (size_t i = 0; i < ids.size(); ++i) {
      const int row = ids[i];
      for (int j = 0; j < d; ++j) {
        gt.at(row, j) += go.at(static_cast<int>(i), j);
      }
    }
  });
}

void Tape::backward(Var loss) {
  own(loss);
  const Tensor& lv = value(loss);
  if (lv.order() != 1 || lv.size() != 1) {
    throw std::invalid_argument("backward requires a scalar loss");
  }
  g(loss.id).at(0) = 1.0;
  for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
    Node& n = nodes_[static_cast<size_t>(i)];
    if (n.backprop) {
      n.backprop(*this);
    } else if (n.param != nullptr && n.param->trainable) {
      Tensor& pg = n.param->grad;
      for (int j = 0; j < pg.size(); ++j) pg[j] += n.grad[j];
    }
  }
}

GradCheckReport grad_check(const std::function<Var(Tape&)>& build,
                           const std::vector<Param*>& params, double eps) {
  if (eps <= 0.0) throw std::invalid_argument("grad_check eps must be positive");

  auto eval = [&]() {
    Tape t;
    Var loss = build(t);
    const double v = t.scalar(loss);
    if (!std::isfinite(v)) throw NonFiniteError("grad_check: non-finite loss");
    return v;
  };

  zero_grads(params);
  std::vector<Tensor> analytic;
  {
    Tape t;
    Var loss = build(t);
    if (!std::isfinite(t.scalar(loss))) {
      throw NonFiniteError("grad_check: non-finite loss");
    }
    t.backward(loss);
  }
  analytic.reserve(params.size());
  for (Param* p : params) analytic.push_back(p->grad);

  GradCheckReport rep;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    Param* p = params[pi];
    for (int i = 0; i < p->value.size(); ++i) {
      const double saved = p->value[i];
      p->value[i] = saved + eps;
      const double f_plus = eval();
      p->value[i] = saved - eps;
      const double f_minus = eval();
      p->value[i] = saved;
      const double fd = (f_plus - f_minus) / (2.0 * eps);
      const double a = analytic[pi][i];
      const double err = std::abs(a - fd);
      const double rel = std::abs(a) < 1e-8 ? err : err / std::abs(a);
      if (rel > rep.max_rel_err) {
        rep.max_rel_err = rel;
        rep.worst_param = p->name;
        rep.worst_index = i;
      }
    }
  }
  return rep;
}

}  // namespace tprnn

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "crosstype/common.hpp"

namespace crosstype {

// A tracked dense float64 tensor. Handles are shared_ptr so the recorded
// graph (parents + backward rule) stays alive until backward() runs.
struct TensorValue {
  std::vector<int> shape;
  std::vector<double> data;
  std::vector<double> grad;  // materialized lazily, same length as data
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorValue>> parents;
  std::function<void(TensorValue&)> backward_fn;

  int64_t size() const {
    int64_t n = 1;
    for (int d : shape) n *= d;
    return n;
  }
  int rows() const { return shape.empty() ? 1 : shape[0]; }
  int cols() const { return shape.size() < 2 ? 1 : shape[1]; }
  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
  }
};

using Tensor = std::shared_ptr<TensorValue>;

namespace detail {

inline std::string shape_str(const std::vector<int>& s) {
  std::ostringstream os;
  os << "(";
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
  os << ")";
  return os.str();
}

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a->shape != b->shape) {
    throw InternalError(std::string(op) + ": shape mismatch " +
                        shape_str(a->shape) + " vs " + shape_str(b->shape));
  }
}

using EigenRowMajor =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<EigenRowMajor>;
using CMapM = Eigen::Map<const EigenRowMajor>;

inline bool tracked(const Tensor& t) { return t->requires_grad; }

inline Tensor make_node(std::vector<int> shape, bool track,
                        std::vector<Tensor> parents) {
  auto t = std::make_shared<TensorValue>();
  t->shape = std::move(shape);
  t->data.assign(static_cast<size_t>(t->size()), 0.0);
  t->requires_grad = track;
  if (track) t->parents = std::move(parents);
  return t;
}

}  // namespace detail

inline Tensor constant(std::vector<int> shape, std::vector<double> data) {
  auto t = std::make_shared<TensorValue>();
  t->shape = std::move(shape);
  if (static_cast<int64_t>(data.size()) != t->size()) {
    throw InternalError("constant: data length " + std::to_string(data.size()) +
                        " does not match shape " + detail::shape_str(t->shape));
  }
  t->data = std::move(data);
  return t;
}

inline Tensor zeros(std::vector<int> shape) {
  auto t = std::make_shared<TensorValue>();
  t->shape = std::move(shape);
  t->data.assign(static_cast<size_t>(t->size()), 0.0);
  return t;
}

// A learnable parameter with uniform init in [-scale, scale].
inline Tensor param(std::vector<int> shape, Rng& rng, double scale) {
  Tensor t = zeros(std::move(shape));
  for (double& v : t->data) v = (rng.real() * 2.0 - 1.0) * scale;
  t->requires_grad = true;
  return t;
}

inline Tensor param_full(std::vector<int> shape, double value) {
  Tensor t = zeros(std::move(shape));
  for (double& v : t->data) v = value;
  t->requires_grad = true;
  return t;
}

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a->shape.size() != 2 || b->shape.size() != 2 || a->shape[1] != b->shape[0]) {
    throw InternalError("matmul: shape mismatch " + detail::shape_str(a->shape) +
                        " vs " + detail::shape_str(b->shape));
  }
  const int m = a->shape[0], k = a->shape[1], n = b->shape[1];
  Tensor out = detail::make_node({m, n}, detail::tracked(a) || detail::tracked(b),
                                 {a, b});
  detail::MapM(out->data.data(), m, n) =
      detail::CMapM(a->data.data(), m, k) * detail::CMapM(b->data.data(), k, n);
  if (out->requires_grad) {
    Tensor pa = a, pb = b;
    out->backward_fn = [pa, pb, m, k, n](TensorValue& self) {
      detail::CMapM g(self.grad.data(), m, n);
      if (pa->requires_grad) {
        pa->ensure_grad();
        detail::MapM(pa->grad.data(), m, k) +=
            g * detail::CMapM(pb->data.data(), k, n).transpose();
      }
      if (pb->requires_grad) {
        pb->ensure_grad();
        detail::MapM(pb->grad.data(), k, n) +=
            detail::CMapM(pa->data.data(), m, k).transpose() * g;
      }
    };
  }
  return out;
}

namespace detail {

// Elementwise binary op with per-input gradient multipliers computed from
// the forward values.
template <typename Fwd, typename DA, typename DB>
Tensor elementwise2(const Tensor& a, const Tensor& b, const char* name, Fwd fwd,
                    DA da, DB db) {
  require_same_shape(a, b, name);
  Tensor out = make_node(a->shape, tracked(a) || tracked(b), {a, b});
  for (size_t i = 0; i < out->data.size(); ++i) {
    out->data[i] = fwd(a->data[i], b->data[i]);
  }
  if (out->requires_grad) {
    Tensor pa = a, pb = b;
    out->backward_fn = [pa, pb, da, db](TensorValue& self) {
      if (pa->requires_grad) {
        pa->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) {
          pa->grad[i] += self.grad[i] * da(pa->data[i], pb->data[i]);
        }
      }
      if (pb->requires_grad) {
        pb->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) {
          pb->grad[i] += self.grad[i] * db(pa->data[i], pb->data[i]);
        }
      }
    };
  }
  return out;
}

}  // namespace detail

inline Tensor add(const Tensor& a, const Tensor& b) {
  return detail::elementwise2(
      a, b, "add", [](double x, double y) { return x + y; },
      [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
  return detail::elementwise2(
      a, b, "sub", [](double x, double y) { return x - y; },
      [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
  return detail::elementwise2(
      a, b, "mul", [](double x, double y) { return x * y; },
      [](double, double y) { return y; }, [](double x, double) { return x; });
}

inline Tensor scale(const Tensor& a, double c) {
  Tensor out = detail::make_node(a->shape, detail::tracked(a), {a});
  for (size_t i = 0; i < out->data.size(); ++i) out->data[i] = a->data[i] * c;
  if (out->requires_grad) {
    Tensor pa = a;
    out->backward_fn = [pa, c](TensorValue& self) {
      pa->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) {
        pa->grad[i] += self.grad[i] * c;
      }
    };
  }
  return out;
}

inline Tensor transpose(const Tensor& a) {
  if (a->shape.size() != 2) {
    throw InternalError("transpose: want matrix, got " +
                        detail::shape_str(a->shape));
  }
  const int m = a->shape[0], n = a->shape[1];
  Tensor out = detail::make_node({n, m}, detail::tracked(a), {a});
  detail::MapM(out->data.data(), n, m) =
      detail::CMapM(a->data.data(), m, n).transpose();
  if (out->requires_grad) {
    Tensor pa = a;
    out->backward_fn = [pa, m, n](TensorValue& self) {
      pa->ensure_grad();
      detail::MapM(pa->grad.data(), m, n) +=
          detail::CMapM(self.grad.data(), n, m).transpose();
    };
  }
  return out;
}

// Broadcast a length-n vector across every row of an m-by-n matrix.
inline Tensor add_rowvec(const Tensor& a, const Tensor& v) {
  if (a->shape.size() != 2 || v->size() != a->shape[1]) {
    throw InternalError("add_rowvec: shape mismatch " +
                        detail::shape_str(a->shape) + " vs " +
                        detail::shape_str(v->shape));
  }
  const int m = a->shape[0], n = a->shape[1];
  Tensor out = detail::make_node({m, n}, detail::tracked(a) || detail::tracked(v),
                                 {a, v});
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      out->data[i * n + j] = a->data[i * n + j] + v->data[j];
    }
  }
  if (out->requires_grad) {
    Tensor pa = a, pv = v;
    out->backward_fn = [pa, pv, m, n](TensorValue& self) {
      if (pa->requires_grad) {
        pa->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += self.grad[i];
      }
      if (pv->requires_grad) {
        pv->ensure_grad();
        for (int i = 0; i < m; ++i) {
          for (int j = 0; j < n; ++j) pv->grad[j] += self.grad[i * n + j];
        }
      }
    };
  }
  return out;
}

// Scale each row of an m-by-n matrix elementwise by a length-n vector.
inline Tensor mul_rowvec(const Tensor& a, const Tensor& v) {
  if (a->shape.size() != 2 || v->size() != a->shape[1]) {
    throw InternalError("mul_rowvec: shape mismatch " +
                        detail::shape_str(a->shape) + " vs " +
                        detail::shape_str(v->shape));
  }
  const int m = a->shape[0], n = a->shape[1];
  Tensor out = detail::make_node({m, n}, detail::tracked(a) || detail::tracked(v),
                                 {a, v});
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      out->data[i * n + j] = a->data[i * n + j] * v->data[j];
    }
  }
  if (out->requires_grad) {
    Tensor pa = a, pv = v;
    out->backward_fn = [pa, pv, m, n](TensorValue& self) {
      if (pa->requires_grad) {
        pa->ensure_grad();
        for (int i = 0; i < m; ++i) {
          for (int j = 0; j < n; ++j) {
            pa->grad[i * n + j] += self.grad[i * n + j] * pv->data[j];
          }
        }
      }
      if (pv->requires_grad) {
        pv->ensure_grad();
        for (int i = 0; i < m; ++i) {
          for (int j = 0; j < n; ++j) {
            pv->grad[j] += self.grad[i * n + j] * pa->data[i * n + j];
          }
        }
      }
    };
  }
  return out;
}

inline Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw InternalError("concat_cols: empty input");
  const int m = parts[0]->shape[0];
  int total = 0;
  bool track = false;
  for (const Tensor& p : parts) {
    if (p->shape.size() != 2 || p->shape[0] != m) {
      throw InternalError("concat_cols: shape mismatch " +
                          detail::shape_str(parts[0]->shape) + " vs " +
                          detail::shape_str(p->shape));
    }
    total += p->shape[1];
    track = track || detail::tracked(p);
  }
  Tensor out = detail::make_node({m, total}, track, parts);
  int off = 0;
  for (const Tensor& p : parts) {
    const int n = p->shape[1];
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) {
        out->data[i * total + off + j] = p->data[i * n + j];
      }
    }
    off += n;
  }
  if (out->requires_grad) {
    std::vector<Tensor> ps = parts;
    out->backward_fn = [ps, m, total](TensorValue& self) {
      int off = 0;
      for (const Tensor& p : ps) {
        const int n = p->shape[1];
        if (p->requires_grad) {
          p->ensure_grad();
          for (int i = 0; i < m; ++i) {
            for (int j = 0; j < n; ++j) {
              p->grad[i * n + j] += self.grad[i * total + off + j];
            }
          }
        }
        off += n;
      }
    };
  }
  return out;
}

inline Tensor slice_cols(const Tensor& a, int c0, int c1) {
  if (a->shape.size() != 2 || c0 < 0 || c1 > a->shape[1] || c0 >= c1) {
    throw InternalError("slice_cols: [" + std::to_string(c0) + "," +
                        std::to_string(c1) + ") out of " +
                        detail::shape_str(a->shape));
  }
  const int m = a->shape[0], n = a->shape[1], w = c1 - c0;
  Tensor out = detail::make_node({m, w}, detail::tracked(a), {a});
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < w; ++j) out->data[i * w + j] = a->data[i * n + c0 + j];
  }
  if (out->requires_grad) {
    Tensor pa = a;
    out->backward_fn = [pa, m, n, w, c0](TensorValue& self) {
      pa->ensure_grad();
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < w; ++j) {
          pa->grad[i * n + c0 + j] += self.grad[i * w + j];
        }
      }
    };
  }
  return out;
}

// Gathers rows; gradients scatter back additively. Doubles as the
// embedding lookup (table rows by token id).
inline Tensor take_rows(const Tensor& a, const std::vector<int>& rows) {
  if (a->shape.size() != 2) {
    throw InternalError("take_rows: want matrix, got " +
                        detail::shape_str(a->shape));
  }
  const int m = a->shape[0], n = a->shape[1];
  for (int r : rows) {
    if (r < 0 || r >= m) {
      throw InternalError("take_rows: index " + std::to_string(r) +
                          " out of range for " + detail::shape_str(a->shape));
    }
  }
  const int k = static_cast<int>(rows.size());
  Tensor out = detail::make_node({k, n}, detail::tracked(a), {a});
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < n; ++j) out->data[i * n + j] = a->data[rows[i] * n + j];
  }
  if (out->requires_grad) {
    Tensor pa = a;
    std::vector<int> idx = rows;
    out->backward_fn = [pa, idx, n](TensorValue& self) {
      pa->ensure_grad();
      for (size_t i = 0; i < idx.size(); ++i) {
        for (int j = 0; j < n; ++j) {
          pa->grad[idx[i] * n + j] += self.grad[i * n + j];
        }
      }
    };
  }
  return out;
}

inline Tensor embedding_lookup(const Tensor& table, const std::vector<int>& ids) {
  return take_rows(table, ids);
}

inline Tensor softmax_rows(const Tensor& a) {
  if (a->shape.size() != 2 || a->shape[1] == 0) {
    throw InternalError("softmax_rows: want nonempty matrix, got " +
                        detail::shape_str(a->shape));
  }
  const int m = a->shape[0], n = a->shape[1];
  Tensor out = detail::make_node({m, n}, detail::tracked(a), {a});
  for (int i = 0; i < m; ++i) {
    double mx = a->data[i * n];
    for (int j = 1; j < n; ++j) mx = std::max(mx, a->data[i * n + j]);
    double z = 0.0;
    for (int j = 0; j < n; ++j) {
      out->data[i * n + j] = std::exp(a->data[i * n + j] - mx);
      z += out->data[i * n + j];
    }
    for (int j = 0; j < n; ++j) out->data[i * n + j] /= z;
  }
  if (out->requires_grad) {
    Tensor pa = a;
    out->backward_fn = [pa, m, n](TensorValue& self) {
      pa->ensure_grad();
      for (int i = 0; i < m; ++i) {
        double dot = 0.0;
        for (int j = 0; j < n; ++j) {
          dot += self.grad[i * n + j] * self.data[i * n + j];
        }
        for (int j = 0; j < n; ++j) {
          pa->grad[i * n + j] +=
              self.data[i * n + j] * (self.grad[i * n + j] - dot);
        }
      }
    };
  }
  return out;
}

inline Tensor log_softmax_rows(const Tensor& a) {
  if (a->shape.size() != 2 || a->shape[1] == 0) {
    throw InternalError("log_softmax_rows: want nonempty matrix, got " +
                        detail::shape_str(a->shape));
  }
  const int m = a->shape[0], n = a->shape[1];
  Tensor out = detail::make_node({m, n}, detail::tracked(a), {a});
  for (int i = 0; i < m; ++i) {
    double mx = a->data[i * n];
    for (int j = 1; j < n; ++j) mx = std::max(mx, a->data[i * n + j]);
    double z = 0.0;
    for (int j = 0; j < n; ++j) z += std::exp(a->data[i * n + j] - mx);
    const double lz = mx + std::log(z);
    for (int j = 0; j < n; ++j) out->data[i * n + j] = a->data[i * n + j] - lz;
  }
  if (out->requires_grad) {
    Tensor pa = a;
    out->backward_fn = [pa, m, n](TensorValue& self) {
      pa->ensure_grad();
      for (int i = 0; i < m; ++i) {
        double gsum = 0.0;
        for (int j = 0; j < n; ++j) gsum += self.grad[i * n + j];
        for (int j = 0; j < n; ++j) {
          pa->grad[i * n + j] +=
              self.grad[i * n + j] - std::exp(self.data[i * n + j]) * gsum;
        }
      }
    };
  }
  return out;
}

// Sum over rows of -log_softmax(row)[target]. Scalar output; zero targets
// give a zero scalar (empty sum).
inline Tensor cross_entropy_sum(const Tensor& logits,
                                const std::vector<int>& targets) {
  if (logits->shape.size() != 2 ||
      static_cast<int>(targets.size()) != logits->shape[0]) {
    throw InternalError("cross_entropy_sum: " + detail::shape_str(logits->shape) +
                        " vs " + std::to_string(targets.size()) + " targets");
  }
  const int m = logits->shape[0], n = logits->shape[1];
  for (int t : targets) {
    if (t < 0 || t >= n) {
      throw InternalError("cross_entropy_sum: target " + std::to_string(t) +
                          " out of range for " + detail::shape_str(logits->shape));
    }
  }
  Tensor out = detail::make_node({1}, detail::tracked(logits), {logits});
  // softmax rows cached for the backward rule
  std::vector<double> probs(static_cast<size_t>(m) * n);
  double total = 0.0;
  for (int i = 0; i < m; ++i) {
    double mx = logits->data[i * n];
    for (int j = 1; j < n; ++j) mx = std::max(mx, logits->data[i * n + j]);
    double z = 0.0;
    for (int j = 0; j < n; ++j) {
      probs[i * n + j] = std::exp(logits->data[i * n + j] - mx);
      z += probs[i * n + j];
    }
    for (int j = 0; j < n; ++j) probs[i * n + j] /= z;
    total -= logits->data[i * n + targets[i]] - (mx + std::log(z));
  }
  out->data[0] = total;
  if (out->requires_grad) {
    Tensor pl = logits;
    std::vector<int> tg = targets;
    out->backward_fn = [pl, tg, probs, m, n](TensorValue& self) {
      pl->ensure_grad();
      const double g = self.grad[0];
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
          double oh = (j == tg[i]) ? 1.0 : 0.0;
          pl->grad[i * n + j] += g * (probs[i * n + j] - oh);
        }
      }
    };
  }
  return out;
}

// Normalizes the last dimension to mean 0 / variance 1, then applies the
// learned gain and bias vectors.
inline Tensor layer_norm(const Tensor& a, const Tensor& gain, const Tensor& bias) {
  if (a->shape.size() != 2 || gain->size() != a->shape[1] ||
      bias->size() != a->shape[1]) {
    throw InternalError("layer_norm: shape mismatch " +
                        detail::shape_str(a->shape) + " vs " +
                        detail::shape_str(gain->shape));
  }
  constexpr double kEps = 1e-12;
  const int m = a->shape[0], n = a->shape[1];
  Tensor out = detail::make_node(
      a->shape, detail::tracked(a) || detail::tracked(gain) || detail::tracked(bias),
      {a, gain, bias});
  std::vector<double> inv_std(m), mean(m);
  std::vector<double> xhat(static_cast<size_t>(m) * n);
  for (int i = 0; i < m; ++i) {
    double mu = 0.0;
    for (int j = 0; j < n; ++j) mu += a->data[i * n + j];
    mu /= n;
    double var = 0.0;
    for (int j = 0; j < n; ++j) {
      double d = a->data[i * n + j] - mu;
      var += d * d;
    }
    var /= n;
    mean[i] = mu;
    inv_std[i] = 1.0 / std::sqrt(var + kEps);
    for (int j = 0; j < n; ++j) {
      xhat[i * n + j] = (a->data[i * n + j] - mu) * inv_std[i];
      out->data[i * n + j] = xhat[i * n + j] * gain->data[j] + bias->data[j];
    }
  }
  if (out->requires_grad) {
    Tensor pa = a, pg = gain, pb = bias;
    out->backward_fn = [pa, pg, pb, xhat, inv_std, m, n](TensorValue& self) {
      if (pg->requires_grad) pg->ensure_grad();
      if (pb->requires_grad) pb->ensure_grad();
      if (pa->requires_grad) pa->ensure_grad();
      for (int i = 0; i < m; ++i) {
        double sum_gx = 0.0, sum_gxx = 0.0;
        for (int j = 0; j < n; ++j) {
          double gx = self.grad[i * n + j] * pg->data[j];
          sum_gx += gx;
          sum_gxx += gx * xhat[i * n + j];
          if (pg->requires_grad) {
            pg->grad[j] += self.grad[i * n + j] * xhat[i * n + j];
          }
          if (pb->requires_grad) pb->grad[j] += self.grad[i * n + j];
        }
        if (pa->requires_grad) {
          for (int j = 0; j < n; ++j) {
            double gx = self.grad[i * n + j] * pg->data[j];
            pa->grad[i * n + j] +=
                inv_std[i] *
                (gx - sum_gx / n - xhat[i * n + j] * sum_gxx / n);
          }
        }
      }
    };
  }
  return out;
}

inline Tensor gelu(const Tensor& a) {
  // tanh approximation
  constexpr double kC = 0.7978845608028654;  // sqrt(2/pi)
  constexpr double kK = 0.044715;
  Tensor out = detail::make_node(a->shape, detail::tracked(a), {a});
  for (size_t i = 0; i < out->data.size(); ++i) {
    double x = a->data[i];
    double u = kC * (x + kK * x * x * x);
    out->data[i] = 0.5 * x * (1.0 + std::tanh(u));
  }
  if (out->requires_grad) {
    Tensor pa = a;
    out->backward_fn = [pa](TensorValue& self) {
      pa->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) {
        double x = pa->data[i];
        double u = kC * (x + kK * x * x * x);
        double t = std::tanh(u);
        double du = kC * (1.0 + 3.0 * kK * x * x);
        double d = 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du;
        pa->grad[i] += self.grad[i] * d;
      }
    };
  }
  return out;
}

inline Tensor exp_elem(const Tensor& a) {
  Tensor out = detail::make_node(a->shape, detail::tracked(a), {a});
  for (size_t i = 0; i < out->data.size(); ++i) {
    out->data[i] = std::exp(a->data[i]);
  }
  if (out->requires_grad) {
    Tensor pa = a;
    out->backward_fn = [pa](TensorValue& self) {
      pa->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) {
        pa->grad[i] += self.grad[i] * self.data[i];
      }
    };
  }
  return out;
}

inline Tensor sum(const Tensor& a) {
  Tensor out = detail::make_node({1}, detail::tracked(a), {a});
  out->data[0] = std::accumulate(a->data.begin(), a->data.end(), 0.0);
  if (out->requires_grad) {
    Tensor pa = a;
    out->backward_fn = [pa](TensorValue& self) {
      pa->ensure_grad();
      for (double& g : pa->grad) g += self.grad[0];
    };
  }
  return out;
}

// RBF weights over squared distances: exp(-d^2 / (2 sigma^2)), with an
// exact zero wherever the distance carries the unreachable sentinel.
// `sigma` is a one-element tensor; d/dsigma of each entry is w * d^2 / sigma^3.
inline Tensor rbf_from_distances(const Tensor& sigma,
                                 const std::vector<int32_t>& dist, int n) {
  if (sigma->size() != 1) {
    throw InternalError("rbf_from_distances: sigma must be scalar, got " +
                        detail::shape_str(sigma->shape));
  }
  if (static_cast<int64_t>(dist.size()) != static_cast<int64_t>(n) * n) {
    throw InternalError("rbf_from_distances: distance length mismatch");
  }
  Tensor out = detail::make_node({n, n}, detail::tracked(sigma), {sigma});
  const double s = sigma->data[0];
  for (size_t i = 0; i < dist.size(); ++i) {
    if (dist[i] == kInfDistance) {
      out->data[i] = 0.0;
    } else {
      double d = static_cast<double>(dist[i]);
      out->data[i] = std::exp(-d * d / (2.0 * s * s));
    }
  }
  if (out->requires_grad) {
    Tensor ps = sigma;
    std::vector<int32_t> dd = dist;
    out->backward_fn = [ps, dd](TensorValue& self) {
      ps->ensure_grad();
      const double s = ps->data[0];
      double acc = 0.0;
      for (size_t i = 0; i < dd.size(); ++i) {
        if (dd[i] == kInfDistance) continue;
        double d = static_cast<double>(dd[i]);
        acc += self.grad[i] * self.data[i] * d * d / (s * s * s);
      }
      ps->grad[0] += acc;
    };
  }
  return out;
}

// Divides each row by its sum. Rows summing to zero (everything masked)
// fall back to identity on the diagonal with no gradient flow.
inline Tensor normalize_rows(const Tensor& a) {
  if (a->shape.size() != 2) {
    throw InternalError("normalize_rows: want matrix, got " +
                        detail::shape_str(a->shape));
  }
  const int m = a->shape[0], n = a->shape[1];
  Tensor out = detail::make_node({m, n}, detail::tracked(a), {a});
  std::vector<double> rowsum(m);
  for (int i = 0; i < m; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += a->data[i * n + j];
    rowsum[i] = s;
    if (s > 0.0) {
      for (int j = 0; j < n; ++j) out->data[i * n + j] = a->data[i * n + j] / s;
    } else {
      for (int j = 0; j < n; ++j) out->data[i * n + j] = (i == j) ? 1.0 : 0.0;
    }
  }
  if (out->requires_grad) {
    Tensor pa = a;
    out->backward_fn = [pa, rowsum, m, n](TensorValue& self) {
      pa->ensure_grad();
      for (int i = 0; i < m; ++i) {
        if (rowsum[i] <= 0.0) continue;
        double dot = 0.0;
        for (int j = 0; j < n; ++j) {
          dot += self.grad[i * n + j] * self.data[i * n + j];
        }
        for (int j = 0; j < n; ++j) {
          pa->grad[i * n + j] += (self.grad[i * n + j] - dot) / rowsum[i];
        }
      }
    };
  }
  return out;
}

// Reverse-mode sweep from a scalar loss. Gradients accumulate (+=) into
// every reachable tracked tensor; the recorded graph is released after.
inline void backward(const Tensor& loss) {
  if (loss->size() != 1) {
    throw InternalError("backward: loss must be scalar, got " +
                        detail::shape_str(loss->shape));
  }
  std::vector<TensorValue*> order;
  std::unordered_set<TensorValue*> seen;
  std::vector<std::pair<TensorValue*, size_t>> stack{{loss.get(), 0}};
  seen.insert(loss.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      TensorValue* p = node->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.push_back({p, 0});
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  loss->ensure_grad();
  loss->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorValue* node = *it;
    if (node->backward_fn) {
      node->ensure_grad();
      node->backward_fn(*node);
    }
  }
  for (TensorValue* node : order) {
    if (node->backward_fn) {
      node->backward_fn = nullptr;
      node->parents.clear();
    }
  }
}

inline void zero_grad(const std::vector<Tensor>& params) {
  for (const Tensor& p : params) p->grad.assign(p->data.size(), 0.0);
}

inline double global_grad_norm(const std::vector<Tensor>& params) {
  double sq = 0.0;
  for (const Tensor& p : params) {
    for (double g : p->grad) sq += g * g;
  }
  return std::sqrt(sq);
}

inline void clip_global_norm(const std::vector<Tensor>& params, double max_norm) {
  double norm = global_grad_norm(params);
  if (norm > max_norm && norm > 0.0) {
    double f = max_norm / norm;
    for (const Tensor& p : params) {
      for (double& g : p->grad) g *= f;
    }
  }
}

struct AdamState {
  std::vector<std::vector<double>> m, v;
  int64_t step = 0;

  void init(const std::vector<Tensor>& params) {
    m.clear();
    v.clear();
    for (const Tensor& p : params) {
      m.emplace_back(p->data.size(), 0.0);
      v.emplace_back(p->data.size(), 0.0);
    }
    step = 0;
  }
};

inline void adam_step(const std::vector<Tensor>& params, AdamState& state,
                      double lr = 1e-4, double beta1 = 0.9, double beta2 = 0.999,
                      double eps = 1e-8) {
  if (state.m.size() != params.size()) state.init(params);
  ++state.step;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  for (size_t k = 0; k < params.size(); ++k) {
    Tensor p = params[k];
    p->ensure_grad();
    for (size_t i = 0; i < p->data.size(); ++i) {
      double g = p->grad[i];
      state.m[k][i] = beta1 * state.m[k][i] + (1.0 - beta1) * g;
      state.v[k][i] = beta2 * state.v[k][i] + (1.0 - beta2) * g * g;
      double mhat = state.m[k][i] / bc1;
      double vhat = state.v[k][i] / bc2;
      p->data[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

}  // namespace crosstype

#pragma once

// Building blocks with hand-written backward passes: affine maps, tanh,
// log-softmax, vocabularies and a windowed feed-forward token encoder.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "sanskritshala/ml.hpp"

namespace sshala {

using Vec = std::vector<double>;

namespace nn {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

// W[out,in] x (+ b[out]).
inline Vec affine(const Tensor& W, const Tensor* b, std::span<const double> x) {
  Vec y(W.rows());
  for (std::size_t o = 0; o < y.size(); ++o) y[o] = dot(W.row(o), x) + (b ? b->data[o] : 0.0);
  return y;
}

// Accumulates dW, db and (optionally) dx for y = W x + b given dy.
inline void affine_backward(Gradients& g, std::size_t pW, std::optional<std::size_t> pb, const Tensor& W,
                            std::span<const double> x, std::span<const double> dy, std::span<double> dx = {}) {
  for (std::size_t o = 0; o < dy.size(); ++o) {
    if (dy[o] == 0) continue;
    axpy(dy[o], x, g.row(pW, o));
    if (pb) g.row(*pb, o)[0] += dy[o];
    if (!dx.empty()) axpy(dy[o], W.row(o), dx);
  }
}

inline void tanh_inplace(Vec& v) {
  for (auto& x : v) x = std::tanh(x);
}

// dpre = dh * (1 - h^2)
inline Vec tanh_backward(const Vec& h, std::span<const double> dh) {
  Vec d(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) d[i] = dh[i] * (1 - h[i] * h[i]);
  return d;
}

inline double logistic(double x) { return x >= 0 ? 1 / (1 + std::exp(-x)) : std::exp(x) / (1 + std::exp(x)); }

inline double logsumexp(std::span<const double> v) {
  if (v.empty()) return -std::numeric_limits<double>::infinity();
  double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

inline Vec softmax(std::span<const double> v) {
  const double z = logsumexp(v);
  Vec p(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) p[i] = std::exp(v[i] - z);
  return p;
}

// First index of the maximum.
inline std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

// Cross-entropy of softmax(scores) against `gold`; writes dscores when asked.
inline double softmax_xent(std::span<const double> scores, std::size_t gold, Vec* dscores) {
  Vec p = softmax(scores);
  if (dscores) {
    *dscores = p;
    (*dscores)[gold] -= 1.0;
  }
  return logsumexp(scores) - scores[gold];
}

}  // namespace nn

// String <-> dense id. Id 0 is reserved for unknown items.
class Vocab {
 public:
  static constexpr std::size_t kUnk = 0;

  Vocab() : items_{"<unk>"} {}

  std::size_t add(const std::string& s) {
    auto [it, fresh] = ids_.emplace(s, items_.size());
    if (fresh) items_.push_back(s);
    return it->second;
  }
  std::size_t id(const std::string& s) const {
    auto it = ids_.find(s);
    return it == ids_.end() ? kUnk : it->second;
  }
  bool contains(const std::string& s) const { return ids_.count(s) > 0; }
  const std::string& item(std::size_t i) const { return items_.at(i); }
  std::size_t size() const noexcept { return items_.size(); }
  const std::vector<std::string>& items() const noexcept { return items_; }

  json to_json() const { return std::vector<std::string>(items_.begin() + 1, items_.end()); }
  static Vocab from_json(const json& j) {
    Vocab v;
    for (const auto& s : j) v.add(s.get<std::string>());
    return v;
  }

 private:
  std::vector<std::string> items_;
  std::unordered_map<std::string, std::size_t> ids_;
};

// Per-token representation h_i = tanh(W [e(t_{i-r}); ...; e(t_{i+r})] + b),
// where e(t) concatenates one embedding per feature table. Positions outside
// the sentence use each table's padding row (its last row).
class WindowEncoder {
 public:
  struct Table {
    std::string name;
    std::size_t vocab = 0;  // rows excluding padding
    std::size_t dim = 0;
  };

  struct Cache {
    std::vector<Vec> x;
    std::vector<Vec> h;
  };

  WindowEncoder() = default;

  WindowEncoder(ParamStore& ps, const std::string& prefix, std::vector<Table> tables, std::size_t radius,
                std::size_t hidden, const std::string& group = {})
      : tables_(std::move(tables)), radius_(radius), hidden_(hidden) {
    for (const auto& t : tables_) {
      emb_.push_back(ps.add(prefix + ".emb." + t.name, {t.vocab + 1, t.dim}, group));
      token_dim_ += t.dim;
    }
    W_ = ps.add(prefix + ".W", {hidden_, input_dim()}, group);
    b_ = ps.add(prefix + ".b", {hidden_, 1}, group);
  }

  std::size_t input_dim() const { return (2 * radius_ + 1) * token_dim_; }
  std::size_t hidden() const { return hidden_; }
  std::size_t radius() const { return radius_; }
  std::size_t table_count() const { return tables_.size(); }
  const std::vector<std::size_t>& emb_params() const { return emb_; }

  // feats[i][t] is token i's row in table t.
  Cache forward(const ParamStore& ps, const std::vector<std::vector<std::size_t>>& feats) const {
    Cache c;
    const std::size_t n = feats.size();
    c.x.resize(n);
    c.h.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      Vec& x = c.x[i];
      x.reserve(input_dim());
      for (std::ptrdiff_t o = -static_cast<std::ptrdiff_t>(radius_); o <= static_cast<std::ptrdiff_t>(radius_); ++o) {
        const std::ptrdiff_t j = static_cast<std::ptrdiff_t>(i) + o;
        for (std::size_t t = 0; t < tables_.size(); ++t) {
          auto r = ps[emb_[t]].row(row_of(feats, j, t));
          x.insert(x.end(), r.begin(), r.end());
        }
      }
      c.h[i] = nn::affine(ps[W_], &ps[b_], x);
      nn::tanh_inplace(c.h[i]);
    }
    return c;
  }

  void backward(const ParamStore& ps, Gradients& g, const std::vector<std::vector<std::size_t>>& feats,
                const Cache& c, const std::vector<Vec>& dh) const {
    const std::size_t n = feats.size();
    for (std::size_t i = 0; i < n; ++i) {
      Vec dpre = nn::tanh_backward(c.h[i], dh[i]);
      Vec dx(input_dim(), 0.0);
      nn::affine_backward(g, W_, b_, ps[W_], c.x[i], dpre, dx);
      std::size_t off = 0;
      for (std::ptrdiff_t o = -static_cast<std::ptrdiff_t>(radius_); o <= static_cast<std::ptrdiff_t>(radius_); ++o) {
        const std::ptrdiff_t j = static_cast<std::ptrdiff_t>(i) + o;
        for (std::size_t t = 0; t < tables_.size(); ++t) {
          auto gr = g.row(emb_[t], row_of(feats, j, t));
          for (std::size_t k = 0; k < tables_[t].dim; ++k) gr[k] += dx[off + k];
          off += tables_[t].dim;
        }
      }
    }
  }

 private:
  std::size_t row_of(const std::vector<std::vector<std::size_t>>& feats, std::ptrdiff_t j, std::size_t t) const {
    if (j < 0 || j >= static_cast<std::ptrdiff_t>(feats.size())) return tables_[t].vocab;
    return std::min(feats[static_cast<std::size_t>(j)][t], tables_[t].vocab - 1);
  }

  std::vector<Table> tables_;
  std::vector<std::size_t> emb_;
  std::size_t radius_ = 2;
  std::size_t hidden_ = 0;
  std::size_t token_dim_ = 0;
  std::size_t W_ = 0;
  std::size_t b_ = 0;
};

}  // namespace sshala

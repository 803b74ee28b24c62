#pragma once

// Trainable-model substrate: named parameter arrays, row-sparse gradients,
// deterministic mini-batch SGD, central-difference gradient checking and the
// binary model file format.
//
// A model type M used with sgd_train / grad_check provides
//
//   const ParamStore& params() const;  ParamStore& params();
//   double loss(const Example&, Gradients* grads, const TaskWeights&) const;
//
// where `loss` accumulates d(loss)/d(param) into `grads` when non-null.

#include <algorithm>
#include <bit>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sanskritshala/error.hpp"

namespace sshala {

using json = nlohmann::json;

// Seeded generator whose outputs do not depend on the standard library's
// distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next() { return eng_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer in [0, n).
  std::size_t below(std::size_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
      x = next();
    } while (x >= limit);
    return static_cast<std::size_t>(x % n);
  }

  template <class T>
  void shuffle(std::span<T> v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::mt19937_64 eng_;
};

// Dense row-major array; rank 1 or 2.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    data.assign(n, 0.0);
  }

  std::size_t rows() const { return shape.empty() ? 1 : shape[0]; }
  std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }
  std::size_t size() const { return data.size(); }

  double& at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }

  std::span<double> row(std::size_t r) { return {data.data() + r * cols(), cols()}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols(), cols()}; }

  bool operator==(const Tensor&) const = default;
};

struct ParamInfo {
  std::string name;
  // Task the parameter belongs to; "" for shared parameters. A parameter
  // whose task weight is zero is not updated.
  std::string group;
  bool trainable = true;

  bool operator==(const ParamInfo&) const = default;
};

class ParamStore {
 public:
  std::size_t add(std::string name, std::vector<std::size_t> shape, std::string group = {}) {
    for (const auto& i : info_) {
      if (i.name == name) throw Error(ErrorCode::kInvalidArgument, "duplicate parameter " + name);
    }
    info_.push_back({std::move(name), std::move(group), true});
    values_.emplace_back(std::move(shape));
    return values_.size() - 1;
  }

  std::size_t size() const noexcept { return values_.size(); }
  Tensor& operator[](std::size_t i) { return values_[i]; }
  const Tensor& operator[](std::size_t i) const { return values_[i]; }
  const ParamInfo& info(std::size_t i) const { return info_[i]; }
  void set_trainable(std::size_t i, bool t) { info_[i].trainable = t; }

  std::optional<std::size_t> find(std::string_view name) const {
    for (std::size_t i = 0; i < info_.size(); ++i) {
      if (info_[i].name == name) return i;
    }
    return std::nullopt;
  }

  std::size_t count() const {
    std::size_t n = 0;
    for (const auto& t : values_) n += t.size();
    return n;
  }

  void init_uniform(Rng& rng, double lo = -0.1, double hi = 0.1) {
    for (auto& t : values_) {
      for (auto& v : t.data) v = rng.uniform(lo, hi);
    }
  }

  void fill(double v) {
    for (auto& t : values_) std::fill(t.data.begin(), t.data.end(), v);
  }

  bool all_finite() const {
    for (const auto& t : values_) {
      for (double v : t.data) {
        if (!std::isfinite(v)) return false;
      }
    }
    return true;
  }

  double squared_norm() const {
    double s = 0;
    for (const auto& t : values_) {
      for (double v : t.data) s += v * v;
    }
    return s;
  }

  const std::string& version_tag() const noexcept { return version_; }
  void set_version_tag(std::string v) { version_ = std::move(v); }

  bool operator==(const ParamStore& o) const { return info_ == o.info_ && values_ == o.values_; }

 private:
  std::vector<ParamInfo> info_;
  std::vector<Tensor> values_;
  std::string version_ = "0";
};

// Gradient buffers shaped like a ParamStore. Rows are tracked as touched so
// that clearing and updating cost O(touched) for large embedding tables.
class Gradients {
 public:
  explicit Gradients(const ParamStore& ps) {
    g_.reserve(ps.size());
    touched_.resize(ps.size());
    flags_.resize(ps.size());
    for (std::size_t i = 0; i < ps.size(); ++i) {
      g_.emplace_back(ps[i].shape);
      flags_[i].assign(ps[i].rows(), 0);
    }
  }

  std::span<double> row(std::size_t p, std::size_t r) {
    if (!flags_[p][r]) {
      flags_[p][r] = 1;
      touched_[p].push_back(r);
    }
    return g_[p].row(r);
  }

  std::span<double> all(std::size_t p) {
    for (std::size_t r = 0; r < g_[p].rows(); ++r) row(p, r);
    return g_[p].data;
  }

  const Tensor& operator[](std::size_t p) const { return g_[p]; }
  const std::vector<std::size_t>& touched(std::size_t p) const { return touched_[p]; }
  std::size_t size() const { return g_.size(); }

  void clear() {
    for (std::size_t p = 0; p < g_.size(); ++p) {
      for (auto r : touched_[p]) {
        auto row = g_[p].row(r);
        std::fill(row.begin(), row.end(), 0.0);
        flags_[p][r] = 0;
      }
      touched_[p].clear();
    }
  }

  double value(std::size_t p, std::size_t k) const { return g_[p].data[k]; }

 private:
  std::vector<Tensor> g_;
  std::vector<std::vector<std::size_t>> touched_;
  std::vector<std::vector<char>> flags_;
};

// Task name -> loss weight; tasks not listed weigh 1.
class TaskWeights {
 public:
  TaskWeights() = default;
  TaskWeights(std::initializer_list<std::pair<const std::string, double>> init) : w_(init) {}
  explicit TaskWeights(std::map<std::string, double> w) : w_(std::move(w)) {}

  double operator()(const std::string& task) const {
    if (task.empty()) return 1.0;
    auto it = w_.find(task);
    return it == w_.end() ? 1.0 : it->second;
  }
  const std::map<std::string, double>& map() const { return w_; }

 private:
  std::map<std::string, double> w_;
};

struct TrainConfig {
  double learning_rate = 0.05;
  std::size_t epochs = 10;
  double l2 = 0.0;
  std::uint64_t seed = 1;
  std::size_t batch_size = 1;
  TaskWeights loss_weights;

  void validate() const {
    if (!(learning_rate > 0)) throw Error(ErrorCode::kInvalidArgument, "learning_rate must be positive");
    if (l2 < 0) throw Error(ErrorCode::kInvalidArgument, "l2 must be non-negative");
    if (batch_size == 0) throw Error(ErrorCode::kInvalidArgument, "batch_size must be positive");
    double sum = 0;
    for (const auto& [_, w] : loss_weights.map()) {
      if (w < 0) throw Error(ErrorCode::kInvalidArgument, "negative loss weight");
      sum += w;
    }
    if (!loss_weights.map().empty() && sum <= 0) {
      throw Error(ErrorCode::kInvalidArgument, "loss weights must not all be zero");
    }
  }
};

template <class M, class E>
concept TrainableOn = requires(const M& cm, M& m, const E& e, Gradients* g, const TaskWeights& w) {
  { cm.params() } -> std::convertible_to<const ParamStore&>;
  { m.params() } -> std::convertible_to<ParamStore&>;
  { cm.loss(e, g, w) } -> std::convertible_to<double>;
};

template <class M>
struct TrainResult {
  M model;
  std::vector<double> epoch_loss;  // mean example loss per epoch
};

namespace detail {

inline bool updates(const ParamStore& ps, std::size_t p, const TaskWeights& w) {
  return ps.info(p).trainable && w(ps.info(p).group) > 0;
}

inline void sgd_step(ParamStore& ps, const Gradients& g, double lr, double l2, std::size_t batch,
                     const TaskWeights& w) {
  const double scale = lr / static_cast<double>(batch);
  for (std::size_t p = 0; p < ps.size(); ++p) {
    if (!updates(ps, p, w)) continue;
    Tensor& t = ps[p];
    if (l2 > 0) {
      const double decay = 1.0 - lr * l2;
      for (auto& v : t.data) v *= decay;
    }
    for (auto r : g.touched(p)) {
      auto dst = t.row(r);
      auto src = g[p].row(r);
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] -= scale * src[k];
    }
  }
}

}  // namespace detail

// Mini-batch SGD with a fixed, seeded shuffle per epoch. Returns the trained
// copy; the argument is taken by value.
template <class M, class E>
  requires TrainableOn<M, E>
TrainResult<M> sgd_train(M model, std::span<const E> data, const TrainConfig& cfg) {
  cfg.validate();
  TrainResult<M> result{std::move(model), {}};
  if (cfg.epochs == 0) return result;
  if (data.empty()) throw Error(ErrorCode::kInvalidArgument, "empty training set");
  Rng rng(cfg.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  Gradients grads(result.model.params());
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double total = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      grads.clear();
      for (std::size_t i = start; i < end; ++i) {
        double l = result.model.loss(data[order[i]], &grads, cfg.loss_weights);
        if (!std::isfinite(l)) throw Error(ErrorCode::kNonFiniteLoss, "loss is not finite", epoch);
        total += l;
      }
      detail::sgd_step(result.model.params(), grads, cfg.learning_rate, cfg.l2, end - start, cfg.loss_weights);
    }
    result.epoch_loss.push_back(total / static_cast<double>(data.size()));
  }
  return result;
}

template <class M, class E>
  requires TrainableOn<M, E>
TrainResult<M> sgd_train(M model, const std::vector<E>& data, const TrainConfig& cfg) {
  return sgd_train(std::move(model), std::span<const E>(data), cfg);
}

struct GradCheckReport {
  double max_relative_error = 0;
  std::string worst_param;
  std::size_t checked = 0;
};

// Component-wise comparison of analytic gradients with central differences
// (f(θ+ε) − f(θ−ε)) / 2ε. The relative error of one component is
// |a − n| / max(|a|, |n|, floor); components where both are exactly zero
// count as 0. The floor keeps round-off on structurally tiny components from
// dominating.
template <class M, class E>
  requires TrainableOn<M, E>
GradCheckReport grad_check_report(M model, const E& example, double epsilon, const TaskWeights& w = {},
                                  double floor = 1e-4) {
  if (!(epsilon > 0)) throw Error(ErrorCode::kInvalidArgument, "epsilon must be positive");
  Gradients g(model.params());
  model.loss(example, &g, w);
  GradCheckReport rep;
  ParamStore& ps = model.params();
  for (std::size_t p = 0; p < ps.size(); ++p) {
    if (!detail::updates(ps, p, w)) continue;
    for (std::size_t k = 0; k < ps[p].size(); ++k) {
      const double orig = ps[p].data[k];
      ps[p].data[k] = orig + epsilon;
      const double up = model.loss(example, nullptr, w);
      ps[p].data[k] = orig - epsilon;
      const double down = model.loss(example, nullptr, w);
      ps[p].data[k] = orig;
      const double numeric = (up - down) / (2 * epsilon);
      const double analytic = g.value(p, k);
      ++rep.checked;
      if (numeric == 0 && analytic == 0) continue;
      const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
      const double rel = std::abs(analytic - numeric) / denom;
      if (rel > rep.max_relative_error) {
        rep.max_relative_error = rel;
        rep.worst_param = ps.info(p).name + "[" + std::to_string(k) + "]";
      }
    }
  }
  return rep;
}

template <class M, class E>
  requires TrainableOn<M, E>
double grad_check(M model, const E& example, double epsilon, const TaskWeights& w = {}) {
  return grad_check_report(std::move(model), example, epsilon, w).max_relative_error;
}

// ---------------------------------------------------------------------------
// Model files: magic "SSHALA", u32 format version, u32 length + module id,
// u64 length + JSON metadata (including parameter names and shapes), then
// every parameter value as a little-endian IEEE-754 double in declared order.

inline constexpr std::uint32_t kModelFormatVersion = 2;
inline constexpr char kModelMagic[6] = {'S', 'S', 'H', 'A', 'L', 'A'};

struct ModelFile {
  std::string module_id;
  json meta;
  ParamStore params;
};

namespace detail {

inline void put_u32(std::ostream& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xFF));
}
inline void put_u64(std::ostream& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xFF));
}
inline std::uint64_t get_uint(std::istream& in, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) {
    int c = in.get();
    if (c == EOF) throw Error(ErrorCode::kCorruptFile, "truncated model file");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return v;
}

}  // namespace detail

inline void write_model(std::ostream& out, const std::string& module_id, json meta, const ParamStore& ps,
                        std::uint32_t version = kModelFormatVersion) {
  json params = json::array();
  for (std::size_t i = 0; i < ps.size(); ++i) {
    params.push_back({{"name", ps.info(i).name},
                      {"shape", ps[i].shape},
                      {"group", ps.info(i).group},
                      {"trainable", ps.info(i).trainable}});
  }
  meta["params"] = params;
  meta["version_tag"] = ps.version_tag();
  const std::string blob = meta.dump();
  out.write(kModelMagic, sizeof kModelMagic);
  detail::put_u32(out, version);
  detail::put_u32(out, static_cast<std::uint32_t>(module_id.size()));
  out.write(module_id.data(), static_cast<std::streamsize>(module_id.size()));
  detail::put_u64(out, blob.size());
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  for (std::size_t i = 0; i < ps.size(); ++i) {
    for (double v : ps[i].data) detail::put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  if (!out) throw Error(ErrorCode::kIoError, "write failed");
}

inline ModelFile read_model(std::istream& in, std::string_view expected_module = {},
                            std::uint32_t expected_version = kModelFormatVersion) {
  char magic[sizeof kModelMagic];
  in.read(magic, sizeof magic);
  if (in.gcount() != sizeof magic || std::memcmp(magic, kModelMagic, sizeof magic) != 0) {
    throw Error(ErrorCode::kCorruptFile, "bad magic");
  }
  const auto version = static_cast<std::uint32_t>(detail::get_uint(in, 4));
  if (version != expected_version) {
    throw Error(ErrorCode::kVersionMismatch,
                "file version " + std::to_string(version) + ", reader expects " + std::to_string(expected_version));
  }
  ModelFile mf;
  const auto id_len = detail::get_uint(in, 4);
  if (id_len > 4096) throw Error(ErrorCode::kCorruptFile, "module id too long");
  mf.module_id.resize(id_len);
  in.read(mf.module_id.data(), static_cast<std::streamsize>(id_len));
  if (!expected_module.empty() && mf.module_id != expected_module) {
    throw Error(ErrorCode::kCorruptFile, "module is '" + mf.module_id + "', expected '" + std::string(expected_module) + "'");
  }
  const auto blob_len = detail::get_uint(in, 8);
  if (blob_len > (std::uint64_t{1} << 31)) throw Error(ErrorCode::kCorruptFile, "metadata too large");
  std::string blob(blob_len, '\0');
  in.read(blob.data(), static_cast<std::streamsize>(blob_len));
  if (static_cast<std::uint64_t>(in.gcount()) != blob_len) throw Error(ErrorCode::kCorruptFile, "truncated metadata");
  try {
    mf.meta = json::parse(blob);
    for (const auto& p : mf.meta.at("params")) {
      auto id = mf.params.add(p.at("name").get<std::string>(), p.at("shape").get<std::vector<std::size_t>>(),
                              p.at("group").get<std::string>());
      mf.params.set_trainable(id, p.at("trainable").get<bool>());
    }
    mf.params.set_version_tag(mf.meta.at("version_tag").get<std::string>());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCorruptFile, std::string("bad metadata: ") + e.what());
  }
  for (std::size_t i = 0; i < mf.params.size(); ++i) {
    for (auto& v : mf.params[i].data) v = std::bit_cast<double>(detail::get_uint(in, 8));
  }
  if (in.peek() != EOF) throw Error(ErrorCode::kCorruptFile, "trailing bytes");
  return mf;
}

inline void save_model(const std::filesystem::path& path, const std::string& module_id, const json& meta,
                       const ParamStore& ps) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  write_model(out, module_id, meta, ps);
}

inline ModelFile load_model(const std::filesystem::path& path, std::string_view expected_module = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  return read_model(in, expected_module);
}

// Copies values for parameters present in both stores (by name and shape).
inline void copy_matching(const ParamStore& from, ParamStore& to) {
  for (std::size_t i = 0; i < to.size(); ++i) {
    if (auto j = from.find(to.info(i).name); j && from[*j].shape == to[i].shape) to[i].data = from[*j].data;
  }
}

}  // namespace sshala

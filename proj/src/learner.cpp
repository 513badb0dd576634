#include "lwpd/learner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

namespace lwpd {

namespace {

double u01(std::mt19937_64& rng) {
  return (rng() >> 11) * (1.0 / 9007199254740992.0);  // 53-bit mantissa
}

double normal(std::mt19937_64& rng) {
  double u1 = std::max(u01(rng), std::numeric_limits<double>::min());
  double u2 = u01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

int uniform_below(std::mt19937_64& rng, int n) {
  return std::min(n - 1, static_cast<int>(u01(rng) * n));
}

struct LayerView {
  int in = 0, out = 0, offset = 0;
};

std::vector<LayerView> layer_views(const std::vector<int>& sizes) {
  std::vector<LayerView> views;
  int off = 0;
  for (size_t l = 0; l + 1 < sizes.size(); ++l) {
    views.push_back({sizes[l], sizes[l + 1], off});
    off += sizes[l + 1] * (sizes[l] + 1);
  }
  return views;
}

void affine(const double* w, const LayerView& lv, const double* in, double* out) {
  for (int j = 0; j < lv.out; ++j) {
    const double* wj = w + lv.offset + j * (lv.in + 1);
    double z = wj[lv.in];  // bias
    for (int c = 0; c < lv.in; ++c) z += wj[c] * in[c];
    out[j] = z;
  }
}

// Returns the cross-entropy for one record and fills probs.
double softmax_ce(const std::vector<double>& z, int label, std::vector<double>& p) {
  double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0;
  p.resize(z.size());
  for (size_t j = 0; j < z.size(); ++j) {
    p[j] = std::exp(z[j] - zmax);
    sum += p[j];
  }
  for (auto& v : p) v /= sum;
  return std::log(sum) + zmax - z[label];
}

struct Scratch {
  std::vector<std::vector<double>> act;    // post-activation per layer
  std::vector<std::vector<double>> pre;    // pre-activation per layer
  std::vector<std::vector<double>> delta;  // backprop errors
  std::vector<double> probs;
};

// Forward pass; returns the record loss. Activations stay in `s` for backprop.
double forward(const Model& m, const std::vector<LayerView>& views, const double* x,
               int label, Scratch& s) {
  size_t L = views.size();
  s.act.resize(L);
  s.pre.resize(L);
  const double* in = x;
  for (size_t l = 0; l < L; ++l) {
    s.pre[l].resize(views[l].out);
    affine(m.w.data(), views[l], in, s.pre[l].data());
    s.act[l] = s.pre[l];
    if (l + 1 < L)
      for (auto& v : s.act[l]) v = std::max(0.0, v);  // hidden layers are relu
    in = s.act[l].data();
  }
  const std::vector<double>& out = s.pre[L - 1];
  if (m.family == ModelFamily::LinearMse) {
    double t = static_cast<double>(label);
    double r = out[0] - t;
    return 0.5 * r * r;
  }
  return softmax_ce(out, label, s.probs);
}

// Accumulates the record gradient into g (not averaged).
void backward(const Model& m, const std::vector<LayerView>& views, const double* x,
              int label, Scratch& s, std::vector<double>& g) {
  size_t L = views.size();
  s.delta.resize(L);
  std::vector<double>& dlast = s.delta[L - 1];
  const std::vector<double>& out = s.pre[L - 1];
  dlast.resize(out.size());
  if (m.family == ModelFamily::LinearMse) {
    dlast[0] = out[0] - static_cast<double>(label);
  } else {
    for (size_t j = 0; j < out.size(); ++j)
      dlast[j] = s.probs[j] - (static_cast<int>(j) == label ? 1.0 : 0.0);
  }
  for (size_t l = L; l-- > 0;) {
    const LayerView& lv = views[l];
    const double* in = l == 0 ? x : s.act[l - 1].data();
    for (int j = 0; j < lv.out; ++j) {
      double dj = s.delta[l][j];
      double* gj = g.data() + lv.offset + j * (lv.in + 1);
      for (int c = 0; c < lv.in; ++c) gj[c] += dj * in[c];
      gj[lv.in] += dj;
    }
    if (l == 0) break;
    std::vector<double>& dprev = s.delta[l - 1];
    dprev.assign(lv.in, 0.0);
    for (int j = 0; j < lv.out; ++j) {
      double dj = s.delta[l][j];
      const double* wj = m.w.data() + lv.offset + j * (lv.in + 1);
      for (int c = 0; c < lv.in; ++c) dprev[c] += wj[c] * dj;
    }
    for (int c = 0; c < lv.in; ++c)
      if (s.pre[l - 1][c] <= 0.0) dprev[c] = 0.0;
  }
}

void check_slice(const DataSlice& slice) {
  if (!slice.ds) throw std::invalid_argument("slice has no dataset");
  if (slice.count() <= 0) throw std::invalid_argument("empty data slice");
  for (auto [b, e] : slice.spans)
    if (b < 0 || e > slice.ds->total() || b >= e)
      throw std::invalid_argument("slice span out of range");
}

}  // namespace

Dataset gen_mixture(int classes, int components, int dim, int records,
                    double separation, double sigma, std::uint64_t seed) {
  if (classes < 2) throw std::invalid_argument("need at least two classes");
  if (components < classes) throw std::invalid_argument("need components >= classes");
  if (dim < 1 || records < 10) throw std::invalid_argument("bad dataset shape");
  if (separation <= 0 || sigma <= 0) throw std::invalid_argument("bad mixture scale");

  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  std::vector<double> means(static_cast<size_t>(components) * dim);
  for (auto& v : means) v = 2.0 * u01(rng) - 1.0;
  double min_dist = std::numeric_limits<double>::infinity();
  for (int a = 0; a < components; ++a)
    for (int b = a + 1; b < components; ++b) {
      double d2 = 0;
      for (int c = 0; c < dim; ++c) {
        double dd = means[a * dim + c] - means[b * dim + c];
        d2 += dd * dd;
      }
      min_dist = std::min(min_dist, std::sqrt(d2));
    }
  double scale = min_dist > 0 ? separation * sigma / min_dist : 1.0;
  for (auto& v : means) v *= scale;

  Dataset ds;
  ds.dim = dim;
  ds.classes = classes;
  ds.x.resize(static_cast<size_t>(records) * dim);
  ds.y.resize(records);
  for (int i = 0; i < records; ++i) {
    int label = uniform_below(rng, classes);
    int per_class = 1 + (components - 1 - label) / classes;
    int comp = label + classes * uniform_below(rng, per_class);
    for (int c = 0; c < dim; ++c)
      ds.x[static_cast<size_t>(i) * dim + c] = means[comp * dim + c] + sigma * normal(rng);
    ds.y[i] = label;
  }
  ds.train_count = records * 8 / 10;
  return ds;
}

void save_dataset_csv(const Dataset& ds, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  for (int c = 0; c < ds.dim; ++c) f << "x" << c << ",";
  f << "label\n";
  char buf[64];
  for (int i = 0; i < ds.total(); ++i) {
    for (int c = 0; c < ds.dim; ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", ds.row(i)[c]);
      f << buf << ",";
    }
    f << ds.y[i] << "\n";
  }
  if (!f) throw std::runtime_error("write failed: " + path);
}

Dataset load_dataset_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(f, line)) throw std::runtime_error("empty dataset file");
  int cols = 1 + static_cast<int>(std::count(line.begin(), line.end(), ','));
  if (cols < 2) throw std::runtime_error("bad dataset header");
  Dataset ds;
  ds.dim = cols - 1;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream is(line);
    for (int c = 0; c < ds.dim; ++c) {
      double v;
      if (!(is >> v)) throw std::runtime_error("bad dataset row");
      ds.x.push_back(v);
    }
    int label;
    if (!(is >> label) || label < 0) throw std::runtime_error("bad dataset label");
    ds.y.push_back(label);
  }
  if (ds.y.empty()) throw std::runtime_error("dataset has no records");
  ds.classes = 1 + *std::max_element(ds.y.begin(), ds.y.end());
  ds.train_count = ds.total() * 8 / 10;
  return ds;
}

ModelFamily parse_family(const std::string& s) {
  if (s == "logistic") return ModelFamily::Logistic;
  if (s == "mlp") return ModelFamily::Mlp;
  if (s == "linear-mse") return ModelFamily::LinearMse;
  throw std::invalid_argument("unknown model family: " + s);
}

std::string family_name(ModelFamily f) {
  switch (f) {
    case ModelFamily::Logistic: return "logistic";
    case ModelFamily::Mlp: return "mlp";
    default: return "linear-mse";
  }
}

Model make_model(ModelFamily family, const std::vector<int>& layer_sizes,
                 std::uint64_t seed) {
  if (family == ModelFamily::Logistic && layer_sizes.size() != 2)
    throw std::invalid_argument("logistic model takes exactly input and output sizes");
  if (family == ModelFamily::LinearMse &&
      (layer_sizes.size() != 2 || layer_sizes.back() != 1))
    throw std::invalid_argument("linear-mse fixture has a single output");
  Model m;
  m.family = family;
  m.layer_sizes = layer_sizes;
  m.w.assign(param_count_for(layer_sizes), 0.0);
  std::mt19937_64 rng(seed ^ 0xd1b54a32d192ed03ull);
  for (const LayerView& lv : layer_views(layer_sizes)) {
    double sc = 1.0 / std::sqrt(static_cast<double>(lv.in));
    for (int j = 0; j < lv.out * (lv.in + 1); ++j)
      m.w[lv.offset + j] = (u01(rng) - 0.5) * sc;
  }
  return m;
}

long DataSlice::count() const {
  long n = 0;
  for (auto [b, e] : spans) n += e - b;
  return n;
}

DataSlice train_slice(const Dataset& ds) { return {&ds, {{0, ds.train_count}}}; }

DataSlice test_slice(const Dataset& ds) { return {&ds, {{ds.train_count, ds.total()}}}; }

DataSlice partition_slice(const Dataset& ds, int k, int part) {
  auto spans = partition_spans(ds.train_count, k);
  if (part < 0 || part >= k) throw std::invalid_argument("partition out of range");
  return {&ds, {spans[part]}};
}

DataSlice partitions_slice(const Dataset& ds, int k, const std::vector<int>& parts) {
  auto spans = partition_spans(ds.train_count, k);
  DataSlice s{&ds, {}};
  for (int p : parts) {
    if (p < 0 || p >= k) throw std::invalid_argument("partition out of range");
    s.spans.push_back(spans[p]);
  }
  return s;
}

std::vector<double> full_gradient(const Model& m, const DataSlice& slice) {
  check_slice(slice);
  auto views = layer_views(m.layer_sizes);
  std::vector<double> g(m.w.size(), 0.0);
  Scratch s;
  for (auto [b, e] : slice.spans)
    for (int i = b; i < e; ++i) {
      forward(m, views, slice.ds->row(i), slice.ds->y[i], s);
      backward(m, views, slice.ds->row(i), slice.ds->y[i], s, g);
    }
  double inv = 1.0 / slice.count();
  for (auto& v : g) v *= inv;
  return g;
}

std::vector<double> block_gradient(const Model& m, const GradientBlockLayout& layout,
                                   int block, const DataSlice& slice) {
  if (block < 0 || block >= layout.k) throw std::invalid_argument("block out of range");
  if (layout.param_count != static_cast<int>(m.w.size()))
    throw std::invalid_argument("layout does not match the model");
  std::vector<double> g = full_gradient(m, slice);
  std::vector<double> out(layout.block_dim, 0.0);
  int pos = 0;
  for (const LayerRange& r : layout.blocks[block].weight_ranges)
    for (int c = r.begin; c < r.end; ++c) out[pos++] = g[c];
  return out;
}

CodedTaskResult coded_task(const Model& m, const Codebook& cb,
                           const GradientBlockLayout& layout, int worker, long round,
                           const DataSlice& local) {
  check_slice(local);
  ScatterPlan plan = scatter_plan(cb, layout, worker, round);
  CodedTaskResult res;
  res.worker = worker;
  res.round = round;
  res.v.assign(layout.block_dim, 0.0);
  for (auto [block, sign] : plan.entries) {
    std::vector<double> g;
    if (layout.mode == LayoutMode::DataOnly) {
      DataSlice part = partition_slice(*local.ds, layout.k, block);
      bool held = false;
      for (auto sp : local.spans)
        held = held || (sp.first <= part.spans[0].first && part.spans[0].second <= sp.second);
      if (!held) throw std::invalid_argument("local data does not cover the plan");
      g = block_gradient(m, layout, block, part);
    } else {
      g = block_gradient(m, layout, block, local);
    }
    for (int i = 0; i < layout.block_dim; ++i) res.v[i] += sign * g[i];
  }
  res.floats_communicated = layout.block_dim + 4;
  return res;
}

double eval_loss(const Model& m, const DataSlice& slice) {
  check_slice(slice);
  auto views = layer_views(m.layer_sizes);
  Scratch s;
  double sum = 0;
  for (auto [b, e] : slice.spans)
    for (int i = b; i < e; ++i)
      sum += forward(m, views, slice.ds->row(i), slice.ds->y[i], s);
  return sum / slice.count();
}

double eval_accuracy(const Model& m, const DataSlice& slice) {
  check_slice(slice);
  auto views = layer_views(m.layer_sizes);
  Scratch s;
  long hits = 0;
  for (auto [b, e] : slice.spans)
    for (int i = b; i < e; ++i) {
      forward(m, views, slice.ds->row(i), slice.ds->y[i], s);
      const std::vector<double>& out = s.pre[views.size() - 1];
      int arg = static_cast<int>(std::max_element(out.begin(), out.end()) - out.begin());
      hits += arg == slice.ds->y[i];
    }
  return static_cast<double>(hits) / slice.count();
}

}  // namespace lwpd

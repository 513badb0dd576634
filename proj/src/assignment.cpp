#include "lwpd/assignment.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace lwpd {

LayoutMode parse_mode(const std::string& s) {
  if (s == "data-only") return LayoutMode::DataOnly;
  if (s == "two-dimensional") return LayoutMode::TwoDimensional;
  throw std::invalid_argument("unknown layout mode: " + s);
}

std::string mode_name(LayoutMode m) {
  return m == LayoutMode::DataOnly ? "data-only" : "two-dimensional";
}

int GradientBlockLayout::output_group(int block) const {
  if (block < 0 || block >= k) throw std::invalid_argument("block out of range");
  return mode == LayoutMode::DataOnly ? 0 : block % t;
}

int GradientBlockLayout::data_partition(int block) const {
  if (block < 0 || block >= k) throw std::invalid_argument("block out of range");
  return blocks[block].data_partition;
}

std::vector<int> GradientBlockLayout::block_coords(int block) const {
  if (block < 0 || block >= k) throw std::invalid_argument("block out of range");
  std::vector<int> coords;
  coords.reserve(blocks[block].unpadded_len);
  for (const LayerRange& r : blocks[block].weight_ranges)
    for (int c = r.begin; c < r.end; ++c) coords.push_back(c);
  return coords;
}

int param_count_for(const std::vector<int>& layer_sizes) {
  if (layer_sizes.size() < 2) throw std::invalid_argument("need input and output sizes");
  int p = 0;
  for (size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    if (layer_sizes[l] < 1 || layer_sizes[l + 1] < 1)
      throw std::invalid_argument("layer sizes must be positive");
    p += layer_sizes[l + 1] * (layer_sizes[l] + 1);
  }
  return p;
}

GradientBlockLayout partition_gradient(const std::vector<int>& layer_sizes,
                                       const CodeParams& params, LayoutMode mode) {
  if (params.t < 2) throw std::invalid_argument("t must be at least 2");
  if (params.k < 1) throw std::invalid_argument("k must be positive");
  GradientBlockLayout lay;
  lay.mode = mode;
  lay.k = params.k;
  lay.t = params.t;
  lay.layer_sizes = layer_sizes;
  lay.param_count = param_count_for(layer_sizes);

  int num_layers = static_cast<int>(layer_sizes.size()) - 1;
  std::vector<int> offsets(num_layers + 1, 0);
  for (int l = 0; l < num_layers; ++l)
    offsets[l + 1] = offsets[l] + layer_sizes[l + 1] * (layer_sizes[l] + 1);

  if (mode == LayoutMode::DataOnly) {
    for (int j = 0; j < lay.k; ++j) {
      BlockDesc b;
      b.block_id = j;
      b.data_partition = j;
      for (int l = 0; l < num_layers; ++l)
        b.weight_ranges.push_back({offsets[l], offsets[l + 1]});
      b.unpadded_len = lay.param_count;
      lay.blocks.push_back(std::move(b));
    }
    lay.block_dim = lay.param_count;
    return lay;
  }

  if (lay.k % lay.t != 0)
    throw std::invalid_argument("two-dimensional mode needs t dividing k");
  for (int l = 0; l < num_layers; ++l)
    if (layer_sizes[l + 1] < lay.t)
      throw std::invalid_argument("layer smaller than t cannot be split");

  // Same t-way split applied to every weighted layer's outputs.
  for (int l = 0; l < num_layers; ++l) {
    std::vector<int> cuts(lay.t + 1);
    for (int g = 0; g <= lay.t; ++g)
      cuts[g] = static_cast<int>(static_cast<long>(g) * layer_sizes[l + 1] / lay.t);
    lay.layer_splits.push_back(std::move(cuts));
  }

  for (int j = 0; j < lay.k; ++j) {
    BlockDesc b;
    b.block_id = j;
    b.data_partition = j / lay.t;
    int o = j % lay.t;
    int len = 0;
    for (int l = 0; l < num_layers; ++l) {
      int stride = layer_sizes[l] + 1;  // weights plus bias per neuron
      int a = lay.layer_splits[l][o], e = lay.layer_splits[l][o + 1];
      LayerRange r{offsets[l] + a * stride, offsets[l] + e * stride};
      len += r.end - r.begin;
      b.weight_ranges.push_back(r);
    }
    b.unpadded_len = len;
    lay.blocks.push_back(std::move(b));
  }
  lay.block_dim = 0;
  for (const BlockDesc& b : lay.blocks) lay.block_dim = std::max(lay.block_dim, b.unpadded_len);
  return lay;
}

std::vector<std::pair<int, int>> partition_spans(int num_records, int parts) {
  if (parts < 1) throw std::invalid_argument("parts must be positive");
  if (num_records < parts) throw std::invalid_argument("fewer records than partitions");
  std::vector<std::pair<int, int>> spans;
  int base = num_records / parts;
  for (int p = 0; p < parts; ++p) {
    int b = p * base;
    int e = (p == parts - 1) ? num_records : b + base;
    spans.push_back({b, e});
  }
  return spans;
}

std::map<int, std::vector<int>> assign_data(const Codebook& cb, int num_records) {
  int k = cb.params.k;
  if (num_records < k) throw std::invalid_argument("fewer records than partitions");
  std::map<int, std::vector<int>> asg;
  for (int w = 0; w < cb.params.n; ++w) {
    std::set<int> parts;
    const auto& row = cb.signs[w];  // round 0: worker w holds row w
    for (size_t x = 0; x < row.size(); ++x)
      if (row[x] != 0) parts.insert(static_cast<int>(x) % k);
    asg[w] = std::vector<int>(parts.begin(), parts.end());
  }
  return asg;
}

ScatterPlan scatter_plan(const Codebook& cb, const GradientBlockLayout& layout,
                         int worker, long round) {
  if (layout.k != cb.params.k) throw std::invalid_argument("layout and codebook disagree on k");
  if (round < 0) throw std::invalid_argument("round must be non-negative");
  ScatterPlan plan;
  plan.worker = worker;
  plan.row = cb.row_for(worker, round);
  int rot = cb.rotation(round), k = cb.params.k;
  const auto& row = cb.signs[plan.row];
  for (size_t x = 0; x < row.size(); ++x)
    if (row[x] != 0)
      plan.entries.push_back({(static_cast<int>(x) + rot) % k, row[x]});
  std::stable_sort(plan.entries.begin(), plan.entries.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  return plan;
}

void save_layout(const GradientBlockLayout& layout, const std::string& path) {
  std::ostringstream os;
  os << "mode " << mode_name(layout.mode) << " k " << layout.k << " t " << layout.t
     << " block_dim " << layout.block_dim << "\n";
  for (const BlockDesc& b : layout.blocks) {
    os << b.block_id << " ";
    for (size_t i = 0; i < b.weight_ranges.size(); ++i)
      os << (i ? "," : "") << b.weight_ranges[i].begin << ":" << b.weight_ranges[i].end;
    os << " " << b.data_partition << " " << b.unpadded_len << "\n";
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << os.str();
  if (!f) throw std::runtime_error("write failed: " + path);
}

void save_assignment(const std::map<int, std::vector<int>>& asg, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  for (const auto& [w, parts] : asg) {
    f << w << ":";
    for (int p : parts) f << " " << p;
    f << "\n";
  }
  if (!f) throw std::runtime_error("write failed: " + path);
}

}  // namespace lwpd

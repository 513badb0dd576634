// Mapping between derivative blocks, model coordinates, data partitions and
// workers. A block is either a full-parameter gradient over one data partition
// (data-only mode) or an output-group slice crossed with a coarse partition
// (two-dimensional mode).
#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "lwpd/codebook.hpp"

namespace lwpd {

enum class LayoutMode { DataOnly, TwoDimensional };

LayoutMode parse_mode(const std::string& s);
std::string mode_name(LayoutMode m);

struct LayerRange {
  int begin = 0;  // flat parameter coordinates, half open
  int end = 0;
  bool operator==(const LayerRange&) const = default;
};

struct BlockDesc {
  int block_id = 0;
  std::vector<LayerRange> weight_ranges;  // one per weighted layer
  int data_partition = 0;                 // nominal partition: j in data-only, j/t in 2-d
  int unpadded_len = 0;
};

struct GradientBlockLayout {
  LayoutMode mode = LayoutMode::DataOnly;
  int k = 0;
  int t = 0;
  std::vector<int> layer_sizes;  // full chain, input first
  int param_count = 0;
  int block_dim = 0;  // B: common padded block length
  std::vector<BlockDesc> blocks;
  std::vector<std::vector<int>> layer_splits;  // per weighted layer, t+1 neuron boundaries

  int output_group(int block) const;
  int data_partition(int block) const;
  std::vector<int> block_coords(int block) const;  // flat coords, unpadded_len entries
};

// Flat parameter count for a dense chain: sum over layers of out * (in + 1).
int param_count_for(const std::vector<int>& layer_sizes);

// Splits every weighted layer's outputs into t contiguous groups (sizes as
// even as possible) and derives the k block descriptors. Two-dimensional mode
// needs t | k and every weighted layer at least t outputs.
GradientBlockLayout partition_gradient(const std::vector<int>& layer_sizes,
                                       const CodeParams& params, LayoutMode mode);

// Contiguous equal partitions, remainder to the last.
std::vector<std::pair<int, int>> partition_spans(int num_records, int parts);

// Worker -> sorted k-way partition ids named by the non-zero columns of the
// worker's round-0 row (folded mod k for scheduled codebooks).
std::map<int, std::vector<int>> assign_data(const Codebook& cb, int num_records);

struct ScatterPlan {
  int worker = 0;
  int row = 0;  // codebook row evaluated
  std::vector<std::pair<int, int>> entries;  // (block id, sign), sorted by block
};

// The worker's plan for one round: the non-zero columns of its scheduled row,
// rotated by the round's task rotation. Entries may repeat a block id when
// virtual columns alias (virtual_k > k).
ScatterPlan scatter_plan(const Codebook& cb, const GradientBlockLayout& layout,
                         int worker, long round);

void save_layout(const GradientBlockLayout& layout, const std::string& path);
void save_assignment(const std::map<int, std::vector<int>>& asg, const std::string& path);

}  // namespace lwpd

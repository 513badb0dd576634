// Synthetic classification tasks and the gradient pieces workers compute:
// block gradients of a flat-parameter model and their signed sums.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lwpd/assignment.hpp"

namespace lwpd {

struct Dataset {
  int dim = 0;
  int classes = 0;
  std::vector<double> x;  // row major, total() * dim
  std::vector<int> y;
  int train_count = 0;  // records [0, train_count) train, the rest test

  int total() const { return static_cast<int>(y.size()); }
  const double* row(int i) const { return x.data() + static_cast<size_t>(i) * dim; }
};

// Gaussian mixture with `components` seeded means assigned round robin to
// classes; component means are rescaled so the closest pair sits exactly
// separation * sigma apart. 80/20 train/test split, deterministic per seed.
Dataset gen_mixture(int classes, int components, int dim, int records,
                    double separation, double sigma, std::uint64_t seed);

void save_dataset_csv(const Dataset& ds, const std::string& path);
Dataset load_dataset_csv(const std::string& path);

enum class ModelFamily { Logistic, Mlp, LinearMse };

ModelFamily parse_family(const std::string& s);
std::string family_name(ModelFamily f);

// Flat parameter vector; per weighted layer the coordinates run neuron by
// neuron, each neuron's incoming weights followed by its bias.
struct Model {
  ModelFamily family = ModelFamily::Logistic;
  std::vector<int> layer_sizes;  // full chain, input first
  std::vector<double> w;
};

Model make_model(ModelFamily family, const std::vector<int>& layer_sizes,
                 std::uint64_t seed);

// A view of dataset record ranges (half open index spans).
struct DataSlice {
  const Dataset* ds = nullptr;
  std::vector<std::pair<int, int>> spans;

  long count() const;
};

DataSlice train_slice(const Dataset& ds);
DataSlice test_slice(const Dataset& ds);
DataSlice partition_slice(const Dataset& ds, int k, int part);
DataSlice partitions_slice(const Dataset& ds, int k, const std::vector<int>& parts);

// Mean-loss gradient over the slice, full parameter vector.
std::vector<double> full_gradient(const Model& m, const DataSlice& slice);

// Gradient of the mean loss restricted to one block's coordinates, embedded
// in a zero-padded vector of length layout.block_dim.
std::vector<double> block_gradient(const Model& m, const GradientBlockLayout& layout,
                                   int block, const DataSlice& slice);

struct CodedTaskResult {
  int worker = 0;
  long round = 0;
  std::vector<double> v;  // signed block-gradient sum, length block_dim
  long floats_communicated = 0;  // block_dim + header
};

// The worker-side computation: the signed sum of the plan's block gradients.
// No code scaling is applied here; the master folds 1/sqrt(t) into its step.
// Data-only blocks are evaluated on their own partitions (which must lie
// inside `local`); two-dimensional blocks use the full local slice.
CodedTaskResult coded_task(const Model& m, const Codebook& cb,
                           const GradientBlockLayout& layout, int worker,
                           long round, const DataSlice& local);

double eval_loss(const Model& m, const DataSlice& slice);
double eval_accuracy(const Model& m, const DataSlice& slice);

}  // namespace lwpd

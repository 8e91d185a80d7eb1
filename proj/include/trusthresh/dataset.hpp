#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "trusthresh/matrix.hpp"

namespace trusthresh {

// Per-subtask prediction scores plus a binary decision label per sample.
// Immutable after construction; all downstream code treats it read-only.
//
// Invariants enforced by the constructor:
//   - scores is N x n with every value in [0,1], N >= 1, n >= 1
//   - labels has length N with every value 0 or 1
//   - subtask names are unique, non-empty, and match [A-Za-z_][A-Za-z0-9_]*
class Dataset {
 public:
  Dataset(std::vector<std::string> subtask_names, Matrix scores, std::vector<int> labels);

  std::size_t n_samples() const { return scores_.rows(); }
  std::size_t n_subtasks() const { return scores_.cols(); }

  const std::vector<std::string>& subtask_names() const { return subtask_names_; }
  const Matrix& scores() const { return scores_; }
  const std::vector<int>& labels() const { return labels_; }

  double score(std::size_t sample, std::size_t subtask) const {
    return scores_(sample, subtask);
  }

  std::size_t positive_count() const { return positives_; }
  std::size_t negative_count() const { return n_samples() - positives_; }

 private:
  std::vector<std::string> subtask_names_;
  Matrix scores_;
  std::vector<int> labels_;
  std::size_t positives_ = 0;
};

// Validates and assembles a Dataset. Column order is fixed by subtask_names order.
Dataset build_dataset(std::vector<std::string> subtask_names, Matrix scores,
                      std::vector<int> labels);

// Multi-label problem: one score column and one binary label column per class,
// thresholded independently (identity decision function per class).
class MultiLabelDataset {
 public:
  MultiLabelDataset(std::vector<std::string> class_names, Matrix scores,
                    std::vector<int> labels);

  std::size_t n_samples() const { return scores_.rows(); }
  std::size_t n_classes() const { return scores_.cols(); }

  const std::vector<std::string>& class_names() const { return class_names_; }
  const Matrix& scores() const { return scores_; }
  // Row-major N x C, flattened in the same order as scores.
  const std::vector<int>& labels() const { return labels_; }

  int label(std::size_t sample, std::size_t cls) const {
    return labels_[sample * n_classes() + cls];
  }

 private:
  std::vector<std::string> class_names_;
  Matrix scores_;
  std::vector<int> labels_;
};

MultiLabelDataset build_multilabel_dataset(std::vector<std::string> class_names,
                                           Matrix scores, std::vector<int> labels);

}  // namespace trusthresh

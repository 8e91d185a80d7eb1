#include "trusthresh/dataset.hpp"

#include <unordered_set>
#include <utility>

namespace trusthresh {

namespace {

bool valid_identifier(const std::string& name) {
  if (name.empty()) return false;
  auto head = [](char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_';
  };
  auto tail = [&](char c) { return head(c) || (c >= '0' && c <= '9'); };
  if (!head(name.front())) return false;
  for (std::size_t i = 1; i < name.size(); ++i) {
    if (!tail(name[i])) return false;
  }
  return true;
}

void check_names(const std::vector<std::string>& names) {
  std::unordered_set<std::string> seen;
  for (const auto& name : names) {
    if (!valid_identifier(name)) throw InvalidSubtaskName(name);
    if (!seen.insert(name).second) throw DuplicateSubtaskName(name);
  }
}

void check_scores(const Matrix& scores) {
  for (std::size_t j = 0; j < scores.rows(); ++j) {
    for (std::size_t i = 0; i < scores.cols(); ++i) {
      const double q = scores(j, i);
      if (!(q >= 0.0 && q <= 1.0)) throw ScoreOutOfRange(j, i, q);
    }
  }
}

}  // namespace

Dataset::Dataset(std::vector<std::string> subtask_names, Matrix scores,
                 std::vector<int> labels)
    : subtask_names_(std::move(subtask_names)),
      scores_(std::move(scores)),
      labels_(std::move(labels)) {
  if (scores_.rows() == 0 || scores_.cols() == 0) {
    throw EmptyDataset("dataset requires at least one sample and one subtask");
  }
  if (subtask_names_.size() != scores_.cols()) {
    throw DimensionMismatch("got " + std::to_string(subtask_names_.size()) +
                            " subtask names for " + std::to_string(scores_.cols()) +
                            " score columns");
  }
  if (labels_.size() != scores_.rows()) {
    throw DimensionMismatch("got " + std::to_string(labels_.size()) + " labels for " +
                            std::to_string(scores_.rows()) + " samples");
  }
  check_names(subtask_names_);
  check_scores(scores_);
  for (std::size_t j = 0; j < labels_.size(); ++j) {
    if (labels_[j] != 0 && labels_[j] != 1) {
      throw InvalidLabel(j, static_cast<double>(labels_[j]));
    }
    positives_ += static_cast<std::size_t>(labels_[j]);
  }
}

Dataset build_dataset(std::vector<std::string> subtask_names, Matrix scores,
                      std::vector<int> labels) {
  return Dataset(std::move(subtask_names), std::move(scores), std::move(labels));
}

MultiLabelDataset::MultiLabelDataset(std::vector<std::string> class_names, Matrix scores,
                                     std::vector<int> labels)
    : class_names_(std::move(class_names)),
      scores_(std::move(scores)),
      labels_(std::move(labels)) {
  if (scores_.rows() == 0 || scores_.cols() == 0) {
    throw EmptyDataset("multi-label dataset requires at least one sample and one class");
  }
  if (class_names_.size() != scores_.cols()) {
    throw DimensionMismatch("got " + std::to_string(class_names_.size()) +
                            " class names for " + std::to_string(scores_.cols()) +
                            " score columns");
  }
  if (labels_.size() != scores_.rows() * scores_.cols()) {
    throw DimensionMismatch("got " + std::to_string(labels_.size()) +
                            " labels for an N x C grid of " +
                            std::to_string(scores_.rows() * scores_.cols()));
  }
  check_names(class_names_);
  check_scores(scores_);
  for (std::size_t k = 0; k < labels_.size(); ++k) {
    if (labels_[k] != 0 && labels_[k] != 1) {
      throw InvalidLabel(k / scores_.cols(), static_cast<double>(labels_[k]));
    }
  }
}

MultiLabelDataset build_multilabel_dataset(std::vector<std::string> class_names,
                                           Matrix scores, std::vector<int> labels) {
  return MultiLabelDataset(std::move(class_names), std::move(scores), std::move(labels));
}

}  // namespace trusthresh

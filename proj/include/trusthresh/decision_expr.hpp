#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "trusthresh/errors.hpp"

namespace trusthresh {

// Boolean decision function over named subtasks, stored as a flat AST in
// evaluation order (children always precede parents, root is the last node).
// The same structure serves hard bit evaluation and the differentiable
// product-form compilation:
//   A AND B -> A*B        A OR B -> 1 - (1-A)(1-B)        NOT A -> 1-A
class DecisionExpr {
 public:
  enum class Op : std::uint8_t { leaf, logical_not, logical_and, logical_or };

  struct Node {
    Op op;
    // leaf: a = subtask column index. not: a = child. and/or: a = left, b = right.
    std::uint32_t a = 0;
    std::uint32_t b = 0;
  };

  // Assembles an expression from nodes already in evaluation order.
  // Child indices must point at earlier nodes, leaf indices at columns
  // below n_subtasks. Used by the parser and by generated-AST tests.
  static DecisionExpr from_nodes(std::vector<Node> nodes, std::size_t n_subtasks);

  const std::vector<Node>& nodes() const { return nodes_; }
  std::size_t n_subtasks() const { return n_subtasks_; }
  std::size_t root() const { return nodes_.size() - 1; }

  // Renders the AST back to DSL text (fully parenthesized).
  std::string to_string(std::span<const std::string> subtask_names) const;

 private:
  DecisionExpr() = default;
  std::vector<Node> nodes_;
  std::size_t n_subtasks_ = 0;
};

// Parses the decision DSL and binds identifiers to dataset column indices.
// Grammar: identifiers; NOT (highest precedence), AND, OR (lowest);
// parentheses; keywords case-insensitive; binary operators left-associative.
DecisionExpr parse_and_bind(std::string_view text,
                            std::span<const std::string> subtask_names);

// Hard boolean semantics over a full bit row (one bit per dataset column).
int eval_boolean(const DecisionExpr& expr, std::span<const int> bits);

// Scratch buffers for repeated numeric evaluation without reallocation.
class ExprWorkspace {
 public:
  void resize(std::size_t n_nodes) {
    values_.resize(n_nodes);
    adjoints_.resize(n_nodes);
  }
  std::vector<double> values_;
  std::vector<double> adjoints_;
};

// Product-form numeric value plus exact partials d(value)/d(values[i]) via one
// reverse accumulation pass. Repeated leaves accumulate additively. `partials`
// must have length expr.n_subtasks(); it is overwritten.
double eval_numeric_with_partials(const DecisionExpr& expr,
                                  std::span<const double> values,
                                  std::span<double> partials);
double eval_numeric_with_partials(const DecisionExpr& expr,
                                  std::span<const double> values,
                                  std::span<double> partials, ExprWorkspace& ws);

}  // namespace trusthresh

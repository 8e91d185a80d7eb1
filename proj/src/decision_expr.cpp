#include "trusthresh/decision_expr.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_map>
#include <utility>

namespace trusthresh {

DecisionExpr DecisionExpr::from_nodes(std::vector<Node> nodes, std::size_t n_subtasks) {
  if (nodes.empty()) throw EmptyExpression("expression has no nodes");
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const Node& node = nodes[k];
    switch (node.op) {
      case Op::leaf:
        if (node.a >= n_subtasks) {
          throw DimensionMismatch("leaf index " + std::to_string(node.a) +
                                  " exceeds subtask count " + std::to_string(n_subtasks));
        }
        break;
      case Op::logical_not:
        if (node.a >= k) throw DimensionMismatch("child index out of evaluation order");
        break;
      case Op::logical_and:
      case Op::logical_or:
        if (node.a >= k || node.b >= k) {
          throw DimensionMismatch("child index out of evaluation order");
        }
        break;
    }
  }
  DecisionExpr expr;
  expr.nodes_ = std::move(nodes);
  expr.n_subtasks_ = n_subtasks;
  return expr;
}

std::string DecisionExpr::to_string(std::span<const std::string> subtask_names) const {
  std::vector<std::string> rendered(nodes_.size());
  for (std::size_t k = 0; k < nodes_.size(); ++k) {
    const Node& node = nodes_[k];
    switch (node.op) {
      case Op::leaf:
        rendered[k] = node.a < subtask_names.size() ? subtask_names[node.a]
                                                    : "#" + std::to_string(node.a);
        break;
      case Op::logical_not:
        rendered[k] = "NOT " + rendered[node.a];
        break;
      case Op::logical_and:
        rendered[k] = "(" + rendered[node.a] + " AND " + rendered[node.b] + ")";
        break;
      case Op::logical_or:
        rendered[k] = "(" + rendered[node.a] + " OR " + rendered[node.b] + ")";
        break;
    }
  }
  return rendered.back();
}

namespace {

enum class TokenKind { identifier, kw_and, kw_or, kw_not, lparen, rparen, end };

struct Token {
  TokenKind kind;
  std::string text;
  std::size_t position;
};

std::string ascii_upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return out;
}

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '(') {
      tokens.push_back({TokenKind::lparen, "(", i});
      ++i;
      continue;
    }
    if (c == ')') {
      tokens.push_back({TokenKind::rparen, ")", i});
      ++i;
      continue;
    }
    auto head = [](char ch) {
      return (ch >= 'A' && ch <= 'Z') || (ch >= 'a' && ch <= 'z') || ch == '_';
    };
    auto tail = [&](char ch) { return head(ch) || (ch >= '0' && ch <= '9'); };
    if (head(c)) {
      std::size_t start = i;
      while (i < text.size() && tail(text[i])) ++i;
      std::string word(text.substr(start, i - start));
      const std::string upper = ascii_upper(word);
      if (upper == "AND") {
        tokens.push_back({TokenKind::kw_and, std::move(word), start});
      } else if (upper == "OR") {
        tokens.push_back({TokenKind::kw_or, std::move(word), start});
      } else if (upper == "NOT") {
        tokens.push_back({TokenKind::kw_not, std::move(word), start});
      } else {
        tokens.push_back({TokenKind::identifier, std::move(word), start});
      }
      continue;
    }
    throw SyntaxError(i, std::string("unexpected character '") + c + "'");
  }
  tokens.push_back({TokenKind::end, "", text.size()});
  return tokens;
}

// Recursive-descent parser emitting nodes in evaluation order.
//   or_expr  := and_expr (OR and_expr)*
//   and_expr := unary (AND unary)*
//   unary    := NOT unary | '(' or_expr ')' | identifier
class Parser {
 public:
  Parser(std::vector<Token> tokens, std::span<const std::string> names)
      : tokens_(std::move(tokens)) {
    for (std::size_t i = 0; i < names.size(); ++i) {
      index_by_name_.emplace(names[i], static_cast<std::uint32_t>(i));
    }
  }

  DecisionExpr parse(std::size_t n_subtasks) {
    const std::uint32_t root = parse_or();
    if (peek().kind != TokenKind::end) {
      throw SyntaxError(peek().position,
                        "unexpected '" + peek().text + "', expected AND, OR, or end of input");
    }
    (void)root;
    return DecisionExpr::from_nodes(std::move(nodes_), n_subtasks);
  }

 private:
  const Token& peek() const { return tokens_[pos_]; }
  Token advance() { return tokens_[pos_++]; }

  std::uint32_t emit(DecisionExpr::Node node) {
    nodes_.push_back(node);
    return static_cast<std::uint32_t>(nodes_.size() - 1);
  }

  std::uint32_t parse_or() {
    std::uint32_t left = parse_and();
    while (peek().kind == TokenKind::kw_or) {
      advance();
      const std::uint32_t right = parse_and();
      left = emit({DecisionExpr::Op::logical_or, left, right});
    }
    return left;
  }

  std::uint32_t parse_and() {
    std::uint32_t left = parse_unary();
    while (peek().kind == TokenKind::kw_and) {
      advance();
      const std::uint32_t right = parse_unary();
      left = emit({DecisionExpr::Op::logical_and, left, right});
    }
    return left;
  }

  std::uint32_t parse_unary() {
    const Token& tok = peek();
    switch (tok.kind) {
      case TokenKind::kw_not: {
        advance();
        const std::uint32_t child = parse_unary();
        return emit({DecisionExpr::Op::logical_not, child, 0});
      }
      case TokenKind::lparen: {
        advance();
        const std::uint32_t inner = parse_or();
        if (peek().kind != TokenKind::rparen) {
          throw SyntaxError(peek().position, "expected ')'");
        }
        advance();
        return inner;
      }
      case TokenKind::identifier: {
        Token ident = advance();
        auto it = index_by_name_.find(ident.text);
        if (it == index_by_name_.end()) {
          throw UnknownSubtask(ident.position, ident.text);
        }
        return emit({DecisionExpr::Op::leaf, it->second, 0});
      }
      case TokenKind::end:
        throw SyntaxError(tok.position, "expected NOT, '(', or a subtask name");
      default:
        throw SyntaxError(tok.position, "unexpected '" + tok.text +
                                            "', expected NOT, '(', or a subtask name");
    }
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  std::vector<DecisionExpr::Node> nodes_;
  std::unordered_map<std::string, std::uint32_t> index_by_name_;
};

}  // namespace

DecisionExpr parse_and_bind(std::string_view text,
                            std::span<const std::string> subtask_names) {
  std::vector<Token> tokens = tokenize(text);
  if (tokens.size() == 1) {  // just the end marker
    throw EmptyExpression("expression is empty");
  }
  Parser parser(std::move(tokens), subtask_names);
  return parser.parse(subtask_names.size());
}

int eval_boolean(const DecisionExpr& expr, std::span<const int> bits) {
  const auto& nodes = expr.nodes();
  // Bool values fit in the workspace-free path; expressions are small.
  std::vector<int> value(nodes.size());
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const auto& node = nodes[k];
    switch (node.op) {
      case DecisionExpr::Op::leaf:
        value[k] = bits[node.a];
        break;
      case DecisionExpr::Op::logical_not:
        value[k] = 1 - value[node.a];
        break;
      case DecisionExpr::Op::logical_and:
        value[k] = value[node.a] & value[node.b];
        break;
      case DecisionExpr::Op::logical_or:
        value[k] = value[node.a] | value[node.b];
        break;
    }
  }
  return value.back();
}

double eval_numeric_with_partials(const DecisionExpr& expr,
                                  std::span<const double> values,
                                  std::span<double> partials, ExprWorkspace& ws) {
  const auto& nodes = expr.nodes();
  ws.resize(nodes.size());
  auto& val = ws.values_;
  auto& adj = ws.adjoints_;

  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const auto& node = nodes[k];
    switch (node.op) {
      case DecisionExpr::Op::leaf:
        val[k] = values[node.a];
        break;
      case DecisionExpr::Op::logical_not:
        val[k] = 1.0 - val[node.a];
        break;
      case DecisionExpr::Op::logical_and:
        val[k] = val[node.a] * val[node.b];
        break;
      case DecisionExpr::Op::logical_or:
        val[k] = 1.0 - (1.0 - val[node.a]) * (1.0 - val[node.b]);
        break;
    }
  }

  std::fill(partials.begin(), partials.end(), 0.0);
  std::fill(adj.begin(), adj.end(), 0.0);
  adj[nodes.size() - 1] = 1.0;

  for (std::size_t k = nodes.size(); k-- > 0;) {
    const auto& node = nodes[k];
    const double a = adj[k];
    if (a == 0.0 && node.op != DecisionExpr::Op::leaf) continue;
    switch (node.op) {
      case DecisionExpr::Op::leaf:
        partials[node.a] += a;
        break;
      case DecisionExpr::Op::logical_not:
        adj[node.a] -= a;
        break;
      case DecisionExpr::Op::logical_and:
        adj[node.a] += a * val[node.b];
        adj[node.b] += a * val[node.a];
        break;
      case DecisionExpr::Op::logical_or:
        adj[node.a] += a * (1.0 - val[node.b]);
        adj[node.b] += a * (1.0 - val[node.a]);
        break;
    }
  }
  return val[nodes.size() - 1];
}

double eval_numeric_with_partials(const DecisionExpr& expr,
                                  std::span<const double> values,
                                  std::span<double> partials) {
  ExprWorkspace ws;
  return eval_numeric_with_partials(expr, values, partials, ws);
}

}  // namespace trusthresh

#include "mfswitch/expression.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>

namespace mfc {

namespace {

struct Token {
  enum Kind { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, End } kind;
  double number = 0.0;
  std::string ident;
  size_t pos = 0;
};

class Lexer {
 public:
  explicit Lexer(const std::string& src) : src_(src) { advance(); }

  const Token& peek() const { return tok_; }

  Token take() {
    Token t = tok_;
    advance();
    return t;
  }

 private:
  void advance() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    tok_.pos = pos_;
    if (pos_ >= src_.size()) {
      tok_.kind = Token::End;
      return;
    }
    char c = src_[pos_];
    switch (c) {
      case '+': tok_.kind = Token::Plus; ++pos_; return;
      case '-': tok_.kind = Token::Minus; ++pos_; return;
      case '*': tok_.kind = Token::Star; ++pos_; return;
      case '/': tok_.kind = Token::Slash; ++pos_; return;
      case '^': tok_.kind = Token::Caret; ++pos_; return;
      case '(': tok_.kind = Token::LParen; ++pos_; return;
      case ')': tok_.kind = Token::RParen; ++pos_; return;
      default: break;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      char* end = nullptr;
      tok_.number = std::strtod(src_.c_str() + pos_, &end);
      if (end == src_.c_str() + pos_)
        throw ExpressionError("bad number at offset " + std::to_string(pos_));
      pos_ = end - src_.c_str();
      tok_.kind = Token::Number;
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      size_t start = pos_;
      while (pos_ < src_.size() && std::isalpha(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      tok_.kind = Token::Ident;
      tok_.ident = src_.substr(start, pos_ - start);
      return;
    }
    throw ExpressionError(std::string("unexpected character '") + c + "' at offset " +
                          std::to_string(pos_));
  }

  const std::string& src_;
  size_t pos_ = 0;
  Token tok_;
};

}  // namespace

class ExpressionParser {
 public:
  explicit ExpressionParser(const std::string& src) : lex_(src) {}

  Expression run(const std::string& src) {
    Expression e;
    e.source_ = src;
    out_ = &e;
    sum();
    if (lex_.peek().kind != Token::End)
      throw ExpressionError("trailing input at offset " + std::to_string(lex_.peek().pos));
    return e;
  }

 private:
  using Op = Expression::Op;

  void emit(Op op) { out_->code_.push_back(op); }
  void emit_const(double v) {
    out_->code_.push_back(Op::PushConst);
    out_->consts_.push_back(v);
  }

  void sum() {
    product();
    for (;;) {
      if (lex_.peek().kind == Token::Plus) {
        lex_.take();
        product();
        emit(Op::Add);
      } else if (lex_.peek().kind == Token::Minus) {
        lex_.take();
        product();
        emit(Op::Sub);
      } else {
        return;
      }
    }
  }

  void product() {
    unary();
    for (;;) {
      if (lex_.peek().kind == Token::Star) {
        lex_.take();
        unary();
        emit(Op::Mul);
      } else if (lex_.peek().kind == Token::Slash) {
        lex_.take();
        unary();
        emit(Op::Div);
      } else {
        return;
      }
    }
  }

  void unary() {
    if (lex_.peek().kind == Token::Minus) {
      lex_.take();
      unary();
      emit(Op::Neg);
      return;
    }
    power();
  }

  void power() {
    atom();
    if (lex_.peek().kind == Token::Caret) {
      lex_.take();
      unary();  // right-associative, allows 2^-3
      emit(Op::Pow);
    }
  }

  void atom() {
    Token t = lex_.take();
    switch (t.kind) {
      case Token::Number:
        emit_const(t.number);
        return;
      case Token::LParen:
        sum();
        expect(Token::RParen, ")");
        return;
      case Token::Ident:
        if (t.ident == "t") { emit(Op::PushT); return; }
        if (t.ident == "s") { emit(Op::PushS); return; }
        if (t.ident == "sin" || t.ident == "cos" || t.ident == "exp") {
          expect(Token::LParen, "(");
          sum();
          expect(Token::RParen, ")");
          emit(t.ident == "sin" ? Op::Sin : t.ident == "cos" ? Op::Cos : Op::Exp);
          return;
        }
        throw ExpressionError("unknown identifier '" + t.ident + "' at offset " +
                              std::to_string(t.pos));
      default:
        throw ExpressionError("unexpected token at offset " + std::to_string(t.pos));
    }
  }

  void expect(Token::Kind kind, const char* what) {
    Token t = lex_.take();
    if (t.kind != kind)
      throw ExpressionError(std::string("expected '") + what + "' at offset " +
                            std::to_string(t.pos));
  }

  Lexer lex_;
  Expression* out_ = nullptr;
};

Expression Expression::parse(const std::string& source) {
  ExpressionParser p(source);
  Expression e = p.run(source);
  // The evaluator uses a fixed 64-slot stack; reject programs that need more.
  int depth = 0, peak = 0;
  for (Op op : e.code_) {
    if (op == Op::PushConst || op == Op::PushT || op == Op::PushS)
      peak = std::max(peak, ++depth);
    else if (op == Op::Add || op == Op::Sub || op == Op::Mul || op == Op::Div || op == Op::Pow)
      --depth;
  }
  if (peak > 62) throw ExpressionError("expression too deeply nested");
  return e;
}

double Expression::eval(double t, double s) const {
  double stack[64];
  int top = -1;
  size_t ci = 0;
  for (Op op : code_) {
    if (top >= 62) throw ExpressionError("expression too deeply nested");
    switch (op) {
      case Op::PushConst: stack[++top] = consts_[ci++]; break;
      case Op::PushT: stack[++top] = t; break;
      case Op::PushS: stack[++top] = s; break;
      case Op::Add: --top; stack[top] += stack[top + 1]; break;
      case Op::Sub: --top; stack[top] -= stack[top + 1]; break;
      case Op::Mul: --top; stack[top] *= stack[top + 1]; break;
      case Op::Div: --top; stack[top] /= stack[top + 1]; break;
      case Op::Pow: --top; stack[top] = std::pow(stack[top], stack[top + 1]); break;
      case Op::Neg: stack[top] = -stack[top]; break;
      case Op::Sin: stack[top] = std::sin(stack[top]); break;
      case Op::Cos: stack[top] = std::cos(stack[top]); break;
      case Op::Exp: stack[top] = std::exp(stack[top]); break;
    }
  }
  return top >= 0 ? stack[top] : 0.0;
}

}  // namespace mfc

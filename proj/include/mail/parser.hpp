// Recursive-descent parser for MAIL text. Accepts the base grammar plus
// the documented extensions (call statements, test statements, and/or
// condition joiners, UNKNOWN statements); see docs/mail_format.md. Keywords
// are matched case-insensitively so the uppercase statement forms used in
// examples ("JMP", "HALT;") parse as well as the canonical lowercase output.
#pragma once

#include <cctype>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mail/core.hpp"

namespace mail {

struct ParseError : std::runtime_error {
  std::size_t line;
  std::size_t column;
  ParseError(std::size_t line, std::size_t column, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ":" + std::to_string(column) +
                           ": " + what),
        line(line),
        column(column) {}
};

namespace detail {

enum class Tok : std::uint8_t {
  End, Ident, Number,
  Assign,       // =
  Semi, Comma, Colon, LParen, RParen, LBracket, RBracket,
  Plus, Minus, Star, Slash, Percent, Shl, Shr, Bang,
  Lt, Gt, Le, Ge, EqEq, Ne,
};

struct Token {
  Tok kind = Tok::End;
  std::string_view text;
  std::uint64_t number = 0;
  std::size_t line = 1, col = 1;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) { advance(); }

  const Token& peek() const { return tok_; }
  Token take() {
    Token t = tok_;
    advance();
    return t;
  }

 private:
  void advance() {
    skip_ws_and_comments();
    tok_ = Token{};
    tok_.line = line_;
    tok_.col = col_;
    if (pos_ >= src_.size()) {
      tok_.kind = Tok::End;
      return;
    }
    char c = src_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
        bump();
      tok_.kind = Tok::Ident;
      tok_.text = src_.substr(start, pos_ - start);
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      lex_number();
      return;
    }
    bump();
    switch (c) {
      case ';': tok_.kind = Tok::Semi; return;
      case ',': tok_.kind = Tok::Comma; return;
      case ':': tok_.kind = Tok::Colon; return;
      case '(': tok_.kind = Tok::LParen; return;
      case ')': tok_.kind = Tok::RParen; return;
      case '[': tok_.kind = Tok::LBracket; return;
      case ']': tok_.kind = Tok::RBracket; return;
      case '+': tok_.kind = Tok::Plus; return;
      case '*': tok_.kind = Tok::Star; return;
      case '/': tok_.kind = Tok::Slash; return;
      case '%': tok_.kind = Tok::Percent; return;
      case '-': tok_.kind = Tok::Minus; return;
      case '=':
        if (pos_ < src_.size() && src_[pos_] == '=') {
          bump();
          tok_.kind = Tok::EqEq;
        } else {
          tok_.kind = Tok::Assign;
        }
        return;
      case '!':
        if (pos_ < src_.size() && src_[pos_] == '=') {
          bump();
          tok_.kind = Tok::Ne;
        } else {
          tok_.kind = Tok::Bang;
        }
        return;
      case '<':
        if (pos_ < src_.size() && src_[pos_] == '<') {
          bump();
          tok_.kind = Tok::Shl;
        } else if (pos_ < src_.size() && src_[pos_] == '=') {
          bump();
          tok_.kind = Tok::Le;
        } else {
          tok_.kind = Tok::Lt;
        }
        return;
      case '>':
        if (pos_ < src_.size() && src_[pos_] == '>') {
          bump();
          tok_.kind = Tok::Shr;
        } else if (pos_ < src_.size() && src_[pos_] == '=') {
          bump();
          tok_.kind = Tok::Ge;
        } else {
          tok_.kind = Tok::Gt;
        }
        return;
      default:
        throw ParseError(tok_.line, tok_.col, std::string("unexpected character '") + c + "'");
    }
  }

  void lex_number() {
    std::size_t start = pos_;
    std::uint64_t value = 0;
    if (src_[pos_] == '0' && pos_ + 1 < src_.size() &&
        (src_[pos_ + 1] == 'x' || src_[pos_ + 1] == 'X')) {
      bump();
      bump();
      std::size_t digits = 0;
      while (pos_ < src_.size() && std::isxdigit(static_cast<unsigned char>(src_[pos_]))) {
        char d = src_[pos_];
        std::uint64_t nibble = std::isdigit(static_cast<unsigned char>(d))
                                   ? static_cast<std::uint64_t>(d - '0')
                                   : static_cast<std::uint64_t>(std::tolower(d) - 'a' + 10);
        value = (value << 4) | nibble;
        ++digits;
        bump();
      }
      if (digits == 0) throw ParseError(tok_.line, tok_.col, "expected hex digits after 0x");
    } else {
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        value = value * 10 + static_cast<std::uint64_t>(src_[pos_] - '0');
        bump();
      }
    }
    tok_.kind = Tok::Number;
    tok_.number = value;
    tok_.text = src_.substr(start, pos_ - start);
  }

  void skip_ws_and_comments() {
    for (;;) {
      while (pos_ < src_.size() &&
             std::isspace(static_cast<unsigned char>(src_[pos_])))
        bump();
      // Line comments start with "--".
      if (pos_ + 1 < src_.size() && src_[pos_] == '-' && src_[pos_ + 1] == '-') {
        while (pos_ < src_.size() && src_[pos_] != '\n') bump();
        continue;
      }
      break;
    }
  }

  void bump() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1, col_ = 1;
  Token tok_;
};

inline bool ieq(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::tolower(static_cast<unsigned char>(a[i])) !=
        std::tolower(static_cast<unsigned char>(b[i])))
      return false;
  return true;
}

inline bool is_kw(const Token& t, std::string_view kw) {
  return t.kind == Tok::Ident && ieq(t.text, kw);
}

// Uppercase architecture names; gr_<n>/fr_<n> stay lowercase; "eflags" and
// "sp" canonicalize to EFLAGS / SP.
inline std::string canonical_register(std::string_view raw) {
  std::string name(raw);
  bool synthetic = (name.rfind("gr_", 0) == 0 || name.rfind("fr_", 0) == 0 ||
                    name.rfind("GR_", 0) == 0 || name.rfind("FR_", 0) == 0);
  if (synthetic) {
    bool digits = name.size() > 3;
    for (std::size_t i = 3; i < name.size(); ++i)
      digits &= std::isdigit(static_cast<unsigned char>(name[i])) != 0;
    if (digits) {
      name[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(name[0])));
      name[1] = static_cast<char>(std::tolower(static_cast<unsigned char>(name[1])));
      return name;
    }
  }
  for (char& c : name) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return name;
}

class Parser {
 public:
  explicit Parser(std::string_view src) : lex_(src) {}

  MailProgram parse_program() {
    MailProgram program;
    struct OpenMarker {
      std::uint32_t index;
      std::size_t stmt_pos;
      std::size_t line;
    };
    std::vector<OpenMarker> open;
    while (lex_.peek().kind != Tok::End) {
      Token at = lex_.peek();
      MailStatement stmt = parse_any_statement();
      std::size_t pos = program.statements.size();
      if (const auto* m = stmt.as<FunctionMarkerStmt>()) {
        if (m->is_start) {
          open.push_back({m->index, pos, at.line});
        } else {
          if (open.empty() || open.back().index != m->index)
            throw ParseError(at.line, at.col,
                             "end_function_" + std::to_string(m->index) +
                                 " without matching start_function_" + std::to_string(m->index));
          FunctionSpan span;
          span.index = m->index;
          span.name = "f" + std::to_string(m->index);
          span.first_stmt = open.back().stmt_pos;
          span.stmt_count = pos - open.back().stmt_pos + 1;
          span.start_addr = open.back().stmt_pos;
          span.end_addr = pos;
          program.functions.push_back(span);
          open.pop_back();
        }
      }
      program.statements.push_back({pos, std::move(stmt)});
    }
    if (!open.empty())
      throw ParseError(open.back().line, 1,
                       "start_function_" + std::to_string(open.back().index) +
                           " without matching end marker");
    program.instruction_addrs.resize(program.statements.size());
    for (std::size_t i = 0; i < program.statements.size(); ++i)
      program.instruction_addrs[i] = i;
    return program;
  }

  // Statement entry. Identifiers that open a lib call ("compare(...)") need
  // two tokens of lookahead, handled here before dispatching on keywords.
  MailStatement parse_any_statement() {
    const Token& t = lex_.peek();
    if (t.kind == Tok::Ident && !is_reserved(t.text) && t.text != "UNKNOWN" &&
        t.text.rfind("start_function_", 0) != 0 && t.text.rfind("end_function_", 0) != 0) {
      Token ident = lex_.take();
      if (lex_.peek().kind == Tok::LParen) return finish_libcall_statement(ident);
      return continue_after_ident(ident);
    }
    return parse_statement();
  }

 private:
  MailStatement continue_after_ident(const Token& ident) {
    Register reg = finish_register(ident);
    const Token& next = lex_.peek();
    if (next.kind == Tok::Assign) {
      lex_.take();
      AssignmentStmt s;
      s.dest = std::move(reg);
      s.rhs = parse_rhs();
      expect(Tok::Semi, "';'");
      return MailStatement{std::move(s)};
    }
    return finish_test_or_condition(Expr{std::move(reg)});
  }

  MailStatement parse_statement() {
    const Token& t = lex_.peek();
    if (t.kind == Tok::Ident) {
      if (ieq(t.text, "if")) return parse_control();
      if (ieq(t.text, "jmp")) return parse_jump();
      if (ieq(t.text, "call")) return parse_call();
      if (ieq(t.text, "halt")) {
        lex_.take();
        expect(Tok::Semi, "';'");
        return MailStatement{HaltStmt{}};
      }
      if (ieq(t.text, "lock")) {
        lex_.take();
        expect(Tok::Semi, "';'");
        return MailStatement{LockStmt{}};
      }
      if (t.text.rfind("start_function_", 0) == 0 || t.text.rfind("end_function_", 0) == 0)
        return finish_semi(parse_marker());
      if (t.text == "UNKNOWN") {
        lex_.take();
        if (lex_.peek().kind == Tok::Semi) {
          lex_.take();
          return MailStatement{UnknownStmt{}};
        }
        if (lex_.peek().kind == Tok::Assign) {
          // "UNKNOWN = expr;" is a (degenerate) address-destination assignment.
          lex_.take();
          AssignmentStmt s;
          s.dest = Address{UnknownAddr{}};
          s.rhs = parse_rhs();
          expect(Tok::Semi, "';'");
          return MailStatement{std::move(s)};
        }
        // Otherwise UNKNOWN opens a test or condition statement.
        return finish_test_or_condition(Expr{Address{UnknownAddr{}}});
      }
    }
    return finish_expr_statement();
  }

  MailStatement finish_semi(MailStatement stmt) {
    expect(Tok::Semi, "';'");
    return stmt;
  }

  MailStatement parse_marker() {
    Token t = lex_.take();
    bool is_start = t.text.rfind("start_function_", 0) == 0;
    std::string_view digits = t.text.substr(is_start ? 15 : 13);
    if (digits.empty()) throw ParseError(t.line, t.col, "expected function index");
    std::uint32_t index = 0;
    for (char c : digits) {
      if (!std::isdigit(static_cast<unsigned char>(c)))
        throw ParseError(t.line, t.col, "malformed function index");
      index = index * 10 + static_cast<std::uint32_t>(c - '0');
    }
    return MailStatement{FunctionMarkerStmt{is_start, index}};
  }

  MailStatement parse_jump() {
    lex_.take();  // jmp
    JumpStmt s{parse_branch_target()};
    expect(Tok::Semi, "';'");
    return MailStatement{std::move(s)};
  }

  MailStatement parse_call() {
    lex_.take();  // call
    CallStmt s;
    const Token& t = lex_.peek();
    if (t.kind == Tok::Number) {
      s.target = Address{ConstAddr{lex_.take().number}};
    } else if (t.kind == Tok::Ident && t.text == "UNKNOWN") {
      lex_.take();
      s.target = Address{UnknownAddr{}};
    } else if (t.kind == Tok::Ident) {
      s.target = parse_register();
    } else if (t.kind == Tok::LBracket) {
      s.target = parse_bracket_address();
    } else {
      throw ParseError(t.line, t.col, "expected call target");
    }
    expect(Tok::Semi, "';'");
    return MailStatement{std::move(s)};
  }

  MailStatement parse_control() {
    lex_.take();  // if
    expect(Tok::LParen, "'('");
    ControlStmt s;
    s.cond = parse_condition();
    expect(Tok::RParen, "')'");
    s.then_arm = parse_arm();
    expect(Tok::Semi, "';'");
    if (is_kw(lex_.peek(), "else")) {
      lex_.take();
      s.else_arm = parse_arm();
      expect(Tok::Semi, "';'");
    }
    return MailStatement{std::move(s)};
  }

  ControlStmt::Arm parse_arm() {
    if (is_kw(lex_.peek(), "jmp")) {
      lex_.take();
      return JumpStmt{parse_branch_target()};
    }
    return parse_assignment_body();
  }

  AssignmentStmt parse_assignment_body() {
    AssignmentStmt s;
    const Token& t = lex_.peek();
    if (t.kind == Tok::LBracket) {
      s.dest = parse_bracket_address();
    } else if (t.kind == Tok::Ident && t.text == "UNKNOWN") {
      lex_.take();
      s.dest = Address{UnknownAddr{}};
    } else if (t.kind == Tok::Ident) {
      s.dest = parse_register();
    } else {
      throw ParseError(t.line, t.col, "expected assignment destination");
    }
    expect(Tok::Assign, "'='");
    s.rhs = parse_rhs();
    return s;
  }

  // Statements introduced by an expression: assignment, test, or condition.
  MailStatement finish_expr_statement() {
    const Token& t = lex_.peek();
    if (t.kind == Tok::LBracket || t.kind == Tok::Ident) {
      // Could be an assignment destination; look at what follows.
      std::variant<Register, Address> dest;
      bool dest_is_addr = false;
      if (t.kind == Tok::LBracket) {
        dest = parse_bracket_address();
        dest_is_addr = true;
      } else {
        dest = parse_register();
      }
      const Token& next = lex_.peek();
      if (next.kind == Tok::Assign) {
        lex_.take();
        AssignmentStmt s;
        s.dest = std::move(dest);
        s.rhs = parse_rhs();
        expect(Tok::Semi, "';'");
        return MailStatement{std::move(s)};
      }
      Expr lhs = dest_is_addr ? Expr{std::get<Address>(dest)}
                              : Expr{std::get<Register>(dest)};
      return finish_test_or_condition(std::move(lhs));
    }
    Expr lhs = parse_expr();
    return finish_test_or_condition(std::move(lhs));
  }

  MailStatement finish_test_or_condition(Expr lhs) {
    const Token& t = lex_.peek();
    if (auto rel = rel_op(t)) {
      ConditionStmt s;
      s.cond = parse_condition_tail(std::move(lhs), *rel);
      expect(Tok::Semi, "';'");
      return MailStatement{std::move(s)};
    }
    if (auto op = math_op(t)) {
      lex_.take();
      TestStmt s;
      s.lhs = std::move(lhs);
      s.op = *op;
      s.rhs = parse_expr();
      expect(Tok::Semi, "';'");
      return MailStatement{std::move(s)};
    }
    throw ParseError(t.line, t.col, "expected '=', comparison or operator");
  }

  Condition parse_condition() {
    Expr lhs = parse_expr();
    const Token& t = lex_.peek();
    auto rel = rel_op(t);
    if (!rel) throw ParseError(t.line, t.col, "expected relational operator");
    return parse_condition_tail(std::move(lhs), *rel);
  }

  Condition parse_condition_tail(Expr lhs, RelOp first_op) {
    lex_.take();  // the relational operator
    Condition cond;
    cond.comparisons.push_back({std::move(lhs), first_op, parse_expr()});
    while (is_kw(lex_.peek(), "and") || is_kw(lex_.peek(), "or")) {
      CondJoin join = ieq(lex_.take().text, "and") ? CondJoin::And : CondJoin::Or;
      Expr l = parse_expr();
      const Token& t = lex_.peek();
      auto rel = rel_op(t);
      if (!rel) throw ParseError(t.line, t.col, "expected relational operator");
      lex_.take();
      cond.joins.push_back(join);
      cond.comparisons.push_back({std::move(l), *rel, parse_expr()});
    }
    return cond;
  }

  AssignRhs parse_rhs() {
    const Token& t = lex_.peek();
    if (auto op = math_op(t)) {
      // Leading operator: either a negative constant or a unary application.
      if (*op == MathOp::Sub) {
        lex_.take();
        if (lex_.peek().kind == Tok::Number) {
          Expr first{-static_cast<std::int64_t>(lex_.take().number)};
          return maybe_binary(std::move(first));
        }
        return AssignRhs{UnaryRhs{MathOp::Sub, parse_expr()}};
      }
      lex_.take();
      return AssignRhs{UnaryRhs{*op, parse_expr()}};
    }
    if (t.kind == Tok::Ident && !is_reserved(t.text) && t.text != "UNKNOWN") {
      // Lib call on the right-hand side needs two tokens of lookahead, so
      // parse the register first and patch up if '(' follows.
      Token ident = lex_.take();
      if (lex_.peek().kind == Tok::LParen) return AssignRhs{parse_libcall_args(ident)};
      Expr first{finish_register(ident)};
      return maybe_binary(std::move(first));
    }
    return maybe_binary(parse_expr());
  }

  AssignRhs maybe_binary(Expr first) {
    const Token& t = lex_.peek();
    if (auto op = math_op(t)) {
      lex_.take();
      BinaryRhs b;
      b.lhs = std::move(first);
      b.op = *op;
      b.rhs = parse_signed_expr();
      return AssignRhs{std::move(b)};
    }
    return AssignRhs{std::move(first)};
  }

  // Expression with optional '-' folded into a constant ("EAX + -0x1").
  Expr parse_signed_expr() {
    if (lex_.peek().kind == Tok::Minus) {
      Token minus = lex_.take();
      if (lex_.peek().kind != Tok::Number)
        throw ParseError(minus.line, minus.col, "expected number after '-'");
      return Expr{-static_cast<std::int64_t>(lex_.take().number)};
    }
    return parse_expr();
  }

  Expr parse_expr() {
    const Token& t = lex_.peek();
    if (t.kind == Tok::Number) return Expr{static_cast<std::int64_t>(lex_.take().number)};
    if (t.kind == Tok::Minus) return parse_signed_expr();
    if (t.kind == Tok::LBracket) return Expr{parse_bracket_address()};
    if (t.kind == Tok::Ident) {
      if (t.text == "UNKNOWN") {
        lex_.take();
        return Expr{Address{UnknownAddr{}}};
      }
      if (is_reserved(t.text))
        throw ParseError(t.line, t.col,
                         "keyword '" + std::string(t.text) + "' not valid in expression");
      return Expr{parse_register()};
    }
    throw ParseError(t.line, t.col, "expected register, address or constant");
  }

  Register parse_register() {
    Token t = lex_.take();
    if (t.kind != Tok::Ident) throw ParseError(t.line, t.col, "expected register name");
    return finish_register(t);
  }

  Register finish_register(const Token& ident) {
    std::string name = canonical_register(ident.text);
    if (lex_.peek().kind == Tok::Colon) {
      lex_.take();
      Token second = lex_.take();
      if (second.kind != Tok::Ident)
        throw ParseError(second.line, second.col, "expected register name after ':'");
      name += ":";
      name += canonical_register(second.text);
    }
    return Register{std::move(name)};
  }

  Address parse_branch_target() {
    const Token& t = lex_.peek();
    if (t.kind == Tok::Number) return Address{ConstAddr{lex_.take().number}};
    if (t.kind == Tok::Ident && t.text == "UNKNOWN") {
      lex_.take();
      return Address{UnknownAddr{}};
    }
    if (t.kind == Tok::LBracket) return parse_bracket_address();
    throw ParseError(t.line, t.col, "expected branch target");
  }

  Address parse_bracket_address() {
    lex_.take();  // '['
    const Token& first = lex_.peek();
    // Stack expression [SP=SP+0xk].
    if (first.kind == Tok::Ident && ieq(first.text, "sp")) {
      Token sp = lex_.take();
      if (lex_.peek().kind == Tok::Assign) {
        lex_.take();
        Token sp2 = lex_.take();
        if (!(sp2.kind == Tok::Ident && ieq(sp2.text, "sp")))
          throw ParseError(sp2.line, sp2.col, "expected 'SP' in stack expression");
        Token sign = lex_.take();
        if (sign.kind != Tok::Plus && sign.kind != Tok::Minus)
          throw ParseError(sign.line, sign.col, "expected '+' or '-' in stack expression");
        Token num = lex_.take();
        if (num.kind != Tok::Number)
          throw ParseError(num.line, num.col, "expected offset in stack expression");
        if (num.number == 0)
          throw ParseError(num.line, num.col, "stack offset must be positive");
        expect(Tok::RBracket, "']'");
        return Address{StackRef{sign.kind == Tok::Plus, num.number}};
      }
      // Plain register expression starting with SP.
      return parse_reg_addr_tail(RegAddr::Term{finish_register(sp)});
    }
    if (first.kind == Tok::Number) {
      Token num = lex_.take();
      if (lex_.peek().kind == Tok::RBracket) {
        lex_.take();
        return Address{ConstAddr{num.number}};
      }
      return parse_reg_addr_tail(RegAddr::Term{static_cast<std::int64_t>(num.number)});
    }
    if (first.kind == Tok::Minus) {
      lex_.take();
      Token num = lex_.take();
      if (num.kind != Tok::Number)
        throw ParseError(num.line, num.col, "expected number after '-' in address");
      return parse_reg_addr_tail(RegAddr::Term{-static_cast<std::int64_t>(num.number)});
    }
    if (first.kind == Tok::Ident) {
      Token ident = lex_.take();
      return parse_reg_addr_tail(RegAddr::Term{finish_register(ident)});
    }
    throw ParseError(first.line, first.col, "expected register or constant in address");
  }

  Address parse_reg_addr_tail(RegAddr::Term first) {
    RegAddr addr;
    addr.terms.push_back(std::move(first));
    for (;;) {
      const Token& t = lex_.peek();
      if (t.kind == Tok::RBracket) {
        lex_.take();
        return Address{std::move(addr)};
      }
      MathOp op;
      if (t.kind == Tok::Plus) op = MathOp::Add;
      else if (t.kind == Tok::Minus) op = MathOp::Sub;
      else if (t.kind == Tok::Star) op = MathOp::Mul;
      else throw ParseError(t.line, t.col, "expected '+', '-', '*' or ']' in address");
      lex_.take();
      const Token& term = lex_.peek();
      if (term.kind == Tok::Number) {
        addr.ops.push_back(op);
        addr.terms.push_back(static_cast<std::int64_t>(lex_.take().number));
      } else if (term.kind == Tok::Minus) {
        // Signed constant term, e.g. "[RAX+-0x10]".
        lex_.take();
        const Token& num = lex_.peek();
        if (num.kind != Tok::Number)
          throw ParseError(num.line, num.col, "expected number after '-' in address");
        addr.ops.push_back(op);
        addr.terms.push_back(-static_cast<std::int64_t>(lex_.take().number));
      } else if (term.kind == Tok::Ident) {
        addr.ops.push_back(op);
        addr.terms.push_back(finish_register(lex_.take()));
      } else {
        throw ParseError(term.line, term.col, "expected register or constant in address");
      }
    }
  }

  LibCallExpr parse_libcall_args(const Token& name_tok) {
    LibCallExpr call;
    for (char c : name_tok.text)
      call.callee += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    expect(Tok::LParen, "'('");
    if (lex_.peek().kind != Tok::RParen) {
      call.args.push_back(parse_signed_expr());
      while (lex_.peek().kind == Tok::Comma) {
        lex_.take();
        call.args.push_back(parse_signed_expr());
      }
    }
    expect(Tok::RParen, "')'");
    if (!validate_libcall(call.callee, static_cast<int>(call.args.size())))
      throw ParseError(name_tok.line, name_tok.col,
                       "unknown library function '" + call.callee + "/" +
                           std::to_string(call.args.size()) + "'");
    return call;
  }

  MailStatement finish_libcall_statement(const Token& name_tok) {
    LibCallStmt s{parse_libcall_args(name_tok)};
    expect(Tok::Semi, "';'");
    return MailStatement{std::move(s)};
  }

  static bool is_reserved(std::string_view text) {
    return ieq(text, "if") || ieq(text, "else") || ieq(text, "jmp") || ieq(text, "call") ||
           ieq(text, "halt") || ieq(text, "lock") || ieq(text, "and") || ieq(text, "or") ||
           ieq(text, "xor") || ieq(text, "not");
  }

  static std::optional<MathOp> math_op(const Token& t) {
    switch (t.kind) {
      case Tok::Plus: return MathOp::Add;
      case Tok::Minus: return MathOp::Sub;
      case Tok::Star: return MathOp::Mul;
      case Tok::Slash: return MathOp::Div;
      case Tok::Percent: return MathOp::Mod;
      case Tok::Shl: return MathOp::Shl;
      case Tok::Shr: return MathOp::Shr;
      case Tok::Ident:
        if (ieq(t.text, "and")) return MathOp::And;
        if (ieq(t.text, "or")) return MathOp::Or;
        if (ieq(t.text, "xor")) return MathOp::Xor;
        if (ieq(t.text, "not")) return MathOp::Not;
        return std::nullopt;
      default: return std::nullopt;
    }
  }

  static std::optional<RelOp> rel_op(const Token& t) {
    switch (t.kind) {
      case Tok::Lt: return RelOp::Lt;
      case Tok::Gt: return RelOp::Gt;
      case Tok::Le: return RelOp::Le;
      case Tok::Ge: return RelOp::Ge;
      case Tok::EqEq: return RelOp::Eq;
      case Tok::Ne: return RelOp::Ne;
      default: return std::nullopt;
    }
  }

  void expect(Tok kind, const char* what) {
    const Token& t = lex_.peek();
    if (t.kind != kind)
      throw ParseError(t.line, t.col, std::string("expected ") + what);
    lex_.take();
  }

  Lexer lex_;
};

}  // namespace detail

// Parse MAIL source text into a program. Statement addresses are assigned
// sequentially (0, 1, ...) since MAIL text carries no addresses; function
// spans are reconstructed from the markers. Throws ParseError.
inline MailProgram parse_mail(std::string_view text) {
  detail::Parser parser(text);
  return parser.parse_program();
}

// Parse exactly one statement (used by the ACFG deserializer and tests).
inline MailStatement parse_mail_statement(std::string_view text) {
  detail::Parser parser(text);
  return parser.parse_any_statement();
}

}  // namespace mail

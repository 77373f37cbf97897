#include "ivqr/milp/lp_format.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <vector>

#include "ivqr/common/error.hpp"

namespace ivqr::milp {

namespace {

constexpr std::size_t kLineWidth = 78;

std::string number(double v) {
  if (v == kInf) return "+inf";
  if (v == -kInf) return "-inf";
  if (v == 0.0) return "0";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// Accumulates tokens into lines no wider than kLineWidth; continuation lines
// are indented.
class LineWriter {
 public:
  explicit LineWriter(std::string& out) : out_(out) {}
  void start(const std::string& head) {
    flush();
    line_ = " " + head;
  }
  void token(const std::string& tok) {
    if (line_.size() + 1 + tok.size() > kLineWidth && line_.find_first_not_of(' ') != std::string::npos) {
      flush();
      line_ = "  ";
      line_ += tok;
      return;
    }
    if (!line_.empty() && line_.back() != ' ') line_ += ' ';
    line_ += tok;
  }
  void flush() {
    if (!line_.empty()) out_ += line_ + "\n";
    line_.clear();
  }

 private:
  std::string& out_;
  std::string line_;
};

void write_expression(LineWriter& w, const MilpProblem& p, const std::vector<std::pair<int, double>>& terms,
                      bool first_sign_explicit) {
  bool first = true;
  for (const auto& [j, a] : terms) {
    std::string tok;
    if (a < 0.0 || std::signbit(a)) {
      tok = "- " + number(-a);
    } else {
      tok = (first && !first_sign_explicit) ? number(a) : "+ " + number(a);
    }
    tok += " " + p.variable(j).name;
    w.token(tok);
    first = false;
  }
  if (terms.empty()) w.token("0 " + p.variable(0).name);
}

const char* sense_text(Sense s) {
  switch (s) {
    case Sense::kLessEqual: return "<=";
    case Sense::kEqual: return "=";
    case Sense::kGreaterEqual: return ">=";
  }
  return "=";
}

}  // namespace

std::string write_lp(const MilpProblem& problem) {
  if (problem.num_variables() == 0) throw ConfigError("cannot export a problem without variables", "empty");
  std::string out = "\\ generated by ivqr\nMinimize\n";
  LineWriter w(out);
  std::vector<std::pair<int, double>> objective;
  for (int j = 0; j < problem.num_variables(); ++j) objective.emplace_back(j, problem.variable(j).objective);
  w.start("obj:");
  write_expression(w, problem, objective, false);
  w.flush();

  out += "Subject To\n";
  for (const auto& c : problem.constraints()) {
    w.start(c.name + ":");
    write_expression(w, problem, c.terms, false);
    w.token(std::string(sense_text(c.sense)) + " " + number(c.rhs));
    w.flush();
  }

  out += "Bounds\n";
  for (const auto& v : problem.variables()) {
    if (v.binary && v.lower == 0.0 && v.upper == 1.0) continue;
    if (v.lower == -kInf && v.upper == kInf) {
      out += " " + v.name + " free\n";
    } else if (v.lower == v.upper) {
      out += " " + v.name + " = " + number(v.lower) + "\n";
    } else if (v.upper == kInf) {
      out += " " + v.name + " >= " + number(v.lower) + "\n";
    } else {
      out += " " + number(v.lower) + " <= " + v.name + " <= " + number(v.upper) + "\n";
    }
  }

  bool any_binary = false;
  for (const auto& v : problem.variables()) {
    if (!v.binary) continue;
    if (!any_binary) {
      out += "Binaries\n";
      w.start("");
    }
    any_binary = true;
    w.token(v.name);
  }
  w.flush();
  out += "End\n";
  return out;
}

void export_lp_file(const MilpProblem& problem, const std::filesystem::path& path) {
  const std::string text = write_lp(problem);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot open '" + path.string() + "' for writing", "io");
  f << text;
  f.flush();
  if (!f) throw DataError("failed writing '" + path.string() + "'", "io");
}

namespace {

enum class Section { kNone, kObjective, kConstraints, kBounds, kBinaries, kEnd };

struct Token {
  enum Kind { kNumber, kName, kSense, kColon, kSign } kind;
  std::string text;
  double value = 0.0;
  int line = 0;
};

[[noreturn]] void fail(int line, const std::string& what) {
  throw DataError("LP parse error at line " + std::to_string(line) + ": " + what, "lp-parse");
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::optional<Section> section_keyword(const std::string& line) {
  std::string t = lower(line);
  t.erase(0, t.find_first_not_of(" \t"));
  t.erase(t.find_last_not_of(" \t\r") + 1);
  if (t == "minimize" || t == "minimise" || t == "minimum" || t == "min") return Section::kObjective;
  if (t == "subject to" || t == "such that" || t == "st" || t == "s.t.") return Section::kConstraints;
  if (t == "bounds" || t == "bound") return Section::kBounds;
  if (t == "binaries" || t == "binary" || t == "bin") return Section::kBinaries;
  if (t == "end") return Section::kEnd;
  if (t == "maximize" || t == "maximise" || t == "max" || t == "generals" || t == "general") {
    return std::nullopt;  // handled by the caller as unsupported
  }
  return Section::kNone;
}

bool name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '[' || c == ']' || c == '#' ||
         c == '$' || c == '%' || c == '&' || c == '(' || c == ')' || c == ',' || c == ';' || c == '?' || c == '@' ||
         c == '{' || c == '}' || c == '~' || c == '"' || c == '\'' || c == '!' || c == '/';
}

void tokenize(const std::string& line, int lineno, std::vector<Token>& out) {
  std::size_t i = 0;
  while (i < line.size()) {
    const char c = line[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == '\\') {
      return;
    } else if (c == ':') {
      out.push_back({Token::kColon, ":", 0.0, lineno});
      ++i;
    } else if (c == '<' || c == '>' || c == '=') {
      std::size_t j = i + 1;
      while (j < line.size() && (line[j] == '<' || line[j] == '>' || line[j] == '=')) ++j;
      const std::string op = line.substr(i, j - i);
      std::string norm;
      if (op == "<=" || op == "=<" || op == "<") norm = "<=";
      else if (op == ">=" || op == "=>" || op == ">") norm = ">=";
      else if (op == "=") norm = "=";
      else fail(lineno, "unknown operator '" + op + "'");
      out.push_back({Token::kSense, norm, 0.0, lineno});
      i = j;
    } else if (c == '+' || c == '-') {
      // Signed infinity is a number; otherwise the sign stands alone.
      const std::string rest = lower(line.substr(i + 1, 8));
      if (rest.rfind("infinity", 0) == 0 || rest.rfind("inf", 0) == 0) {
        const std::size_t len = rest.rfind("infinity", 0) == 0 ? 8 : 3;
        out.push_back({Token::kNumber, line.substr(i, len + 1), c == '-' ? -kInf : kInf, lineno});
        i += len + 1;
      } else {
        out.push_back({Token::kSign, std::string(1, c), c == '-' ? -1.0 : 1.0, lineno});
        ++i;
      }
    } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      double v = 0.0;
      const auto res = std::from_chars(line.data() + i, line.data() + line.size(), v);
      if (res.ec != std::errc()) fail(lineno, "bad number");
      const auto len = static_cast<std::size_t>(res.ptr - (line.data() + i));
      out.push_back({Token::kNumber, line.substr(i, len), v, lineno});
      i += len;
    } else if (name_char(c)) {
      std::size_t j = i;
      while (j < line.size() && name_char(line[j])) ++j;
      std::string name = line.substr(i, j - i);
      const std::string low = lower(name);
      if (low == "inf" || low == "infinity") out.push_back({Token::kNumber, name, kInf, lineno});
      else out.push_back({Token::kName, std::move(name), 0.0, lineno});
      i = j;
    } else {
      fail(lineno, std::string("unexpected character '") + c + "'");
    }
  }
}

struct LinearTerm {
  std::string name;
  double coef;
};

// Parses [sign] [number] name ... starting at `pos`; stops at a sense token
// or the end.
std::vector<LinearTerm> parse_expression(const std::vector<Token>& toks, std::size_t& pos) {
  std::vector<LinearTerm> terms;
  while (pos < toks.size() && toks[pos].kind != Token::kSense) {
    double sign = 1.0;
    bool any = false;
    while (pos < toks.size() && toks[pos].kind == Token::kSign) {
      sign *= toks[pos].value;
      ++pos;
      any = true;
    }
    double coef = 1.0;
    if (pos < toks.size() && toks[pos].kind == Token::kNumber) {
      coef = toks[pos].value;
      ++pos;
      any = true;
    }
    if (pos >= toks.size() || toks[pos].kind != Token::kName) {
      if (any && pos < toks.size() && toks[pos].kind == Token::kSense) {
        fail(toks[pos].line, "constant terms on the left-hand side are not supported");
      }
      fail(pos < toks.size() ? toks[pos].line : (toks.empty() ? 0 : toks.back().line), "expected a variable name");
    }
    terms.push_back({toks[pos].text, sign * coef});
    ++pos;
  }
  return terms;
}

double parse_signed_number(const std::vector<Token>& toks, std::size_t& pos, int line) {
  double sign = 1.0;
  while (pos < toks.size() && toks[pos].kind == Token::kSign) sign *= toks[pos++].value;
  if (pos >= toks.size() || toks[pos].kind != Token::kNumber) fail(line, "expected a number");
  return sign * toks[pos++].value;
}

Sense to_sense(const std::string& s) {
  if (s == "<=") return Sense::kLessEqual;
  if (s == ">=") return Sense::kGreaterEqual;
  return Sense::kEqual;
}

}  // namespace

MilpProblem parse_lp(const std::string& text) {
  struct PendingRow {
    std::string name;
    std::vector<LinearTerm> terms;
    Sense sense;
    double rhs;
  };
  struct Bounds {
    double lo = 0.0;
    double hi = kInf;
  };

  std::vector<std::string> order;
  std::vector<double> objective;
  std::vector<Bounds> bounds;
  std::vector<bool> binary;
  std::unordered_map<std::string, int> index;
  auto var = [&](const std::string& name) {
    const auto it = index.find(name);
    if (it != index.end()) return it->second;
    const int j = static_cast<int>(order.size());
    index.emplace(name, j);
    order.push_back(name);
    objective.push_back(0.0);
    bounds.push_back({});
    binary.push_back(false);
    return j;
  };

  std::vector<PendingRow> rows;
  Section section = Section::kNone;
  std::vector<Token> pending;  // tokens of the current multi-line statement
  int row_counter = 0;

  auto finish_objective = [&] {
    std::size_t pos = 0;
    if (pending.size() >= 2 && pending[0].kind == Token::kName && pending[1].kind == Token::kColon) pos = 2;
    for (const auto& t : parse_expression(pending, pos)) objective[static_cast<std::size_t>(var(t.name))] += t.coef;
    if (pos != pending.size()) fail(pending[pos].line, "unexpected token in objective");
    pending.clear();
  };

  // Constraints end after the right-hand side following a sense token.
  auto consume_constraints = [&] {
    for (;;) {
      std::size_t s = 0;
      while (s < pending.size() && pending[s].kind != Token::kSense) ++s;
      if (s == pending.size()) return;
      std::size_t after = s + 1;
      while (after < pending.size() && pending[after].kind == Token::kSign) ++after;
      if (after >= pending.size()) return;
      PendingRow row;
      std::size_t pos = 0;
      if (pending.size() >= 2 && pending[0].kind == Token::kName && pending[1].kind == Token::kColon) {
        row.name = pending[0].text;
        pos = 2;
      } else {
        row.name = "R" + std::to_string(++row_counter);
      }
      row.terms = parse_expression(pending, pos);
      for (const auto& t : row.terms) var(t.name);
      row.sense = to_sense(pending[pos].text);
      ++pos;
      row.rhs = parse_signed_number(pending, pos, pending[s].line);
      rows.push_back(std::move(row));
      pending.erase(pending.begin(), pending.begin() + static_cast<std::ptrdiff_t>(pos));
    }
  };

  auto bound_line = [&](const std::vector<Token>& t, int line) {
    if (t.empty()) return;
    if (t.size() == 2 && t[0].kind == Token::kName && lower(t[1].text) == "free") {
      bounds[static_cast<std::size_t>(var(t[0].text))] = {-kInf, kInf};
      return;
    }
    std::size_t pos = 0;
    auto is_number_start = [&](std::size_t k) {
      return k < t.size() && (t[k].kind == Token::kNumber || t[k].kind == Token::kSign);
    };
    if (is_number_start(pos)) {
      // l <= x [<= u]
      const double l = parse_signed_number(t, pos, line);
      if (pos >= t.size() || t[pos].kind != Token::kSense) fail(line, "expected a comparison");
      const std::string op1 = t[pos++].text;
      if (pos >= t.size() || t[pos].kind != Token::kName) fail(line, "expected a variable name");
      auto& b = bounds[static_cast<std::size_t>(var(t[pos++].text))];
      if (op1 == "<=") b.lo = l;
      else if (op1 == ">=") b.hi = l;
      else b.lo = b.hi = l;
      if (pos < t.size()) {
        if (t[pos].kind != Token::kSense) fail(line, "expected a comparison");
        const std::string op2 = t[pos++].text;
        const double u = parse_signed_number(t, pos, line);
        if (op2 == "<=") b.hi = u;
        else if (op2 == ">=") b.lo = u;
        else fail(line, "bad double bound");
      }
    } else if (t[pos].kind == Token::kName) {
      auto& b = bounds[static_cast<std::size_t>(var(t[pos++].text))];
      if (pos >= t.size() || t[pos].kind != Token::kSense) fail(line, "expected a comparison");
      const std::string op = t[pos++].text;
      const double v = parse_signed_number(t, pos, line);
      if (op == "<=") b.hi = v;
      else if (op == ">=") b.lo = v;
      else b.lo = b.hi = v;
    } else {
      fail(line, "malformed bound");
    }
    if (pos != t.size()) fail(line, "trailing tokens in bound");
  };

  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  bool ended = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto kw = section_keyword(line);
    if (!kw) fail(lineno, "unsupported section '" + line + "'");
    if (*kw != Section::kNone) {
      if (section == Section::kObjective) finish_objective();
      if (section == Section::kConstraints) {
        consume_constraints();
        if (!pending.empty()) fail(pending.front().line, "incomplete constraint");
      }
      section = *kw;
      if (section == Section::kEnd) {
        ended = true;
        break;
      }
      continue;
    }
    std::vector<Token> toks;
    tokenize(line, lineno, toks);
    if (toks.empty()) continue;
    switch (section) {
      case Section::kNone: fail(lineno, "content before the objective section");
      case Section::kObjective: pending.insert(pending.end(), toks.begin(), toks.end()); break;
      case Section::kConstraints:
        pending.insert(pending.end(), toks.begin(), toks.end());
        consume_constraints();
        break;
      case Section::kBounds: bound_line(toks, lineno); break;
      case Section::kBinaries:
        for (const auto& t : toks) {
          if (t.kind != Token::kName) fail(lineno, "expected variable names");
          binary[static_cast<std::size_t>(var(t.text))] = true;
        }
        break;
      case Section::kEnd: break;
    }
  }
  if (!ended) fail(lineno, "missing End");

  MilpProblem p;
  for (std::size_t j = 0; j < order.size(); ++j) {
    if (binary[j]) {
      p.add_binary(order[j], objective[j]);
    } else {
      p.add_variable(order[j], bounds[j].lo, bounds[j].hi, objective[j]);
    }
  }
  for (auto& r : rows) {
    std::vector<std::pair<int, double>> terms;
    for (const auto& t : r.terms) terms.emplace_back(p.index_of(t.name), t.coef);
    p.add_constraint(r.name, std::move(terms), r.sense, r.rhs);
  }
  return p;
}

}  // namespace ivqr::milp

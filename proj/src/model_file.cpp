#include "typeiia/model_file.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

namespace typeiia {

ModelParseError::ModelParseError(int line_no, const std::string& what)
    : std::runtime_error(line_no > 0 ? "line " + std::to_string(line_no) + ": " + what : what), line(line_no) {}

namespace {

struct Token {
  enum Kind { Number, Name, Op, End } kind = End;
  std::string text;
  double value = 0;
};

class Lexer {
 public:
  Lexer(const std::string& s, int line) : s_(s), line_(line) {}

  Token next() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    Token t;
    if (pos_ >= s_.size()) return t;
    const char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = s_.c_str() + pos_;
      char* end = nullptr;
      t.value = std::strtod(begin, &end);
      if (end == begin) throw ModelParseError(line_, "malformed number");
      t.kind = Token::Number;
      t.text.assign(begin, static_cast<std::size_t>(end - begin));
      pos_ += static_cast<std::size_t>(end - begin);
      return t;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t e = pos_;
      while (e < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[e])) || s_[e] == '_')) ++e;
      t.kind = Token::Name;
      t.text = s_.substr(pos_, e - pos_);
      pos_ = e;
      return t;
    }
    if (c == '+' || c == '-' || c == '*' || c == '^') {
      t.kind = Token::Op;
      t.text = std::string(1, c);
      ++pos_;
      return t;
    }
    throw ModelParseError(line_, std::string("unexpected character '") + c + "'");
  }

 private:
  const std::string& s_;
  std::size_t pos_ = 0;
  int line_;
};

struct Context {
  std::array<std::string, kDim> gens;
  bool have_gens = false;
  std::map<std::string, double> consts;
};

int generator_index(const Context& ctx, const std::string& name) {
  for (int i = 0; i < kDim; ++i)
    if (ctx.gens[i] == name) return i;
  return -1;
}

// Signed sum of coefficient * g^h terms.
Form parse_two_form(const std::string& text, const Context& ctx, int line) {
  Lexer lex(text, line);
  Form out(2);
  Token t = lex.next();
  if (t.kind == Token::End) throw ModelParseError(line, "empty expression");
  bool first = true;
  while (t.kind != Token::End) {
    double sign = 1;
    if (t.kind == Token::Op && (t.text == "+" || t.text == "-")) {
      sign = t.text == "-" ? -1 : 1;
      t = lex.next();
    } else if (!first) {
      throw ModelParseError(line, "expected '+' or '-' between terms");
    }
    first = false;
    double coef = sign;
    std::optional<std::pair<int, int>> pair;
    while (true) {
      if (t.kind == Token::Number) {
        coef *= t.value;
      } else if (t.kind == Token::Name) {
        const int g = generator_index(ctx, t.text);
        if (g >= 0) {
          if (pair) throw ModelParseError(line, "more than one wedge pair in a term");
          Token caret = lex.next();
          if (caret.kind != Token::Op || caret.text != "^")
            throw ModelParseError(line, "generator '" + t.text + "' must be followed by '^'");
          Token h = lex.next();
          const int gh = h.kind == Token::Name ? generator_index(ctx, h.text) : -1;
          if (gh < 0) throw ModelParseError(line, "expected a generator after '^'");
          if (gh == g) throw ModelParseError(line, "repeated generator in '" + t.text + "^" + h.text + "'");
          pair = std::make_pair(g, gh);
        } else {
          const auto it = ctx.consts.find(t.text);
          if (it == ctx.consts.end()) throw ModelParseError(line, "unknown name '" + t.text + "'");
          coef *= it->second;
        }
      } else {
        throw ModelParseError(line, "expected a number, constant or generator");
      }
      t = lex.next();
      if (t.kind == Token::Op && t.text == "*") {
        t = lex.next();
        continue;
      }
      break;
    }
    if (!pair) throw ModelParseError(line, "term without a wedge pair");
    const int idx[2] = {pair->first, pair->second};
    out.set_component(idx, out.component(idx) + coef);
  }
  return out;
}

std::string strip(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string render_two_form(const Form& f, const std::array<std::string, kDim>& gens) {
  std::string out;
  for (int i = 0; i < kDim; ++i)
    for (int j = i + 1; j < kDim; ++j) {
      const int idx[2] = {i, j};
      const double v = f.component(idx);
      if (v == 0) continue;
      if (out.empty())
        out += v < 0 ? "-" : "";
      else
        out += v < 0 ? " - " : " + ";
      const double a = std::abs(v);
      if (a != 1) out += fmt(a) + "*";
      out += gens[i] + "^" + gens[j];
    }
  return out.empty() ? "0" : out;
}

}  // namespace

ModelDescription parse_model(std::istream& in) {
  ModelDescription out;
  Context ctx;
  std::array<Form, kDim> de;
  std::array<bool, kDim> have_d{};
  for (auto& f : de) f = Form(2);
  std::optional<Form> omega;
  bool have_name = false, have_sign = false;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string s = strip(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (s.empty()) continue;
    std::istringstream ls(s);
    std::string key;
    ls >> key;
    if (key == "model") {
      if (have_name) throw ModelParseError(line, "duplicate 'model' line");
      if (!(ls >> out.name)) throw ModelParseError(line, "missing model name");
      std::string extra;
      if (ls >> extra) throw ModelParseError(line, "trailing text after model name");
      have_name = true;
    } else if (key == "generators") {
      if (ctx.have_gens) throw ModelParseError(line, "duplicate 'generators' line");
      std::vector<std::string> names;
      for (std::string n; ls >> n;) names.push_back(n);
      if (names.size() != kDim) throw ModelParseError(line, "expected exactly 6 generator names");
      for (int i = 0; i < kDim; ++i) {
        const auto& n = names[i];
        if (!(std::isalpha(static_cast<unsigned char>(n[0])) || n[0] == '_'))
          throw ModelParseError(line, "invalid generator name '" + n + "'");
        for (int j = 0; j < i; ++j)
          if (names[j] == n) throw ModelParseError(line, "duplicate generator '" + n + "'");
        ctx.gens[i] = n;
      }
      ctx.have_gens = true;
    } else if (key == "const") {
      std::string name, eq;
      if (!(ls >> name >> eq) || eq != "=") throw ModelParseError(line, "expected 'const <name> = <value>'");
      std::string value;
      std::getline(ls, value);
      value = strip(value);
      char* end = nullptr;
      const double v = std::strtod(value.c_str(), &end);
      if (value.empty() || *end != '\0') throw ModelParseError(line, "malformed constant value '" + value + "'");
      if (ctx.consts.count(name)) throw ModelParseError(line, "duplicate constant '" + name + "'");
      if (ctx.have_gens && generator_index(ctx, name) >= 0)
        throw ModelParseError(line, "constant '" + name + "' shadows a generator");
      ctx.consts[name] = v;
      out.constants.emplace_back(name, v);
    } else if (key == "d") {
      if (!ctx.have_gens) throw ModelParseError(line, "'d' before 'generators'");
      std::string gen, eq;
      if (!(ls >> gen >> eq) || eq != "=") throw ModelParseError(line, "expected 'd <generator> = <expression>'");
      const int k = generator_index(ctx, gen);
      if (k < 0) throw ModelParseError(line, "unknown generator '" + gen + "'");
      if (have_d[k]) throw ModelParseError(line, "duplicate differential for '" + gen + "'");
      std::string rest;
      std::getline(ls, rest);
      de[k] = parse_two_form(rest, ctx, line);
      have_d[k] = true;
    } else if (key == "omega") {
      if (!ctx.have_gens) throw ModelParseError(line, "'omega' before 'generators'");
      if (omega) throw ModelParseError(line, "duplicate 'omega' line");
      std::string eq;
      if (!(ls >> eq) || eq != "=") throw ModelParseError(line, "expected 'omega = <expression>'");
      std::string rest;
      std::getline(ls, rest);
      omega = parse_two_form(rest, ctx, line);
    } else if (key == "sign_convention") {
      if (have_sign) throw ModelParseError(line, "duplicate 'sign_convention' line");
      std::string v;
      ls >> v;
      if (v == "standard")
        out.flipped = false;
      else if (v == "flipped")
        out.flipped = true;
      else
        throw ModelParseError(line, "sign_convention must be 'standard' or 'flipped'");
      have_sign = true;
    } else {
      throw ModelParseError(line, "unknown directive '" + key + "'");
    }
  }
  if (!have_name) throw ModelParseError(0, "missing 'model' line");
  if (!ctx.have_gens) throw ModelParseError(0, "missing 'generators' line");
  if (!omega) throw ModelParseError(0, "missing 'omega' line");
  out.generators = ctx.gens;
  if (out.flipped)
    for (auto& f : de) f = -f;
  try {
    out.model = make_model(out.name, de, *omega);
  } catch (const InvalidModel& e) {
    throw ModelParseError(0, std::string("invalid model: ") + e.what());
  } catch (const SingularSymplectic& e) {
    throw ModelParseError(0, std::string("invalid model: ") + e.what());
  }
  return out;
}

ModelDescription parse_model_text(const std::string& text) {
  std::istringstream in(text);
  return parse_model(in);
}

ModelDescription parse_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelParseError(0, "cannot open model file '" + path + "'");
  return parse_model(in);
}

std::string normalized(const ModelDescription& m) {
  std::ostringstream os;
  os << "model " << m.name << "\n";
  os << "generators";
  for (const auto& g : m.generators) os << ' ' << g;
  os << "\n";
  for (int k = 0; k < kDim; ++k)
    if (m.model.de[k].max_abs() != 0) os << "d " << m.generators[k] << " = " << render_two_form(m.model.de[k], m.generators) << "\n";
  os << "omega = " << render_two_form(m.model.omega, m.generators) << "\n";
  os << "sign_convention standard\n";
  return os.str();
}

std::string normalized(const LieModel& m) {
  ModelDescription d;
  d.name = m.name;
  for (int i = 0; i < kDim; ++i) d.generators[i] = "e" + std::to_string(i + 1);
  d.model = m;
  return normalized(d);
}

}  // namespace typeiia

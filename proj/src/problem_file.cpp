#include "ebsa/problem_file.hpp"

#include <cctype>
#include <fstream>
#include <optional>
#include <sstream>

namespace ebsa {

namespace {

struct Cursor {
  const std::string& s;
  std::size_t i = 0;

  void skip_ws() {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  }
  bool done() {
    skip_ws();
    return i >= s.size();
  }
  char peek() {
    skip_ws();
    return i < s.size() ? s[i] : '\0';
  }
};

double parse_number(Cursor& c) {
  c.skip_ws();
  std::size_t end = c.i;
  while (end < c.s.size() &&
         (std::isdigit(static_cast<unsigned char>(c.s[end])) || c.s[end] == '.' ||
          c.s[end] == 'e' || c.s[end] == 'E' ||
          ((c.s[end] == '+' || c.s[end] == '-') && end > c.i &&
           (c.s[end - 1] == 'e' || c.s[end - 1] == 'E'))))
    ++end;
  if (end == c.i) throw ParseError("expected a number at '" + c.s.substr(c.i) + "'");
  const std::string tok = c.s.substr(c.i, end - c.i);
  try {
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) throw ParseError("bad number '" + tok + "'");
    c.i = end;
    return v;
  } catch (const std::logic_error&) {
    throw ParseError("bad number '" + tok + "'");
  }
}

// factor := number | (x|y)<index> [ '^' int ]
Poly parse_factor(Cursor& c, std::size_t d, std::size_t l) {
  const std::size_t nv = d + l;
  const char ch = c.peek();
  if (ch == 'x' || ch == 'y') {
    ++c.i;
    std::size_t end = c.i;
    while (end < c.s.size() && std::isdigit(static_cast<unsigned char>(c.s[end]))) ++end;
    if (end == c.i) throw ParseError(std::string("variable '") + ch + "' needs an index");
    const std::size_t idx = std::stoul(c.s.substr(c.i, end - c.i));
    c.i = end;
    std::size_t var;
    if (ch == 'x') {
      if (idx < 1 || idx > d) throw ParseError("variable x" + std::to_string(idx) + " out of range");
      var = idx - 1;
    } else {
      if (idx < 1 || idx > l) throw ParseError("variable y" + std::to_string(idx) + " out of range");
      var = d + idx - 1;
    }
    int exp = 1;
    if (c.peek() == '^') {
      ++c.i;
      c.skip_ws();
      const double e = parse_number(c);
      exp = static_cast<int>(e);
      if (exp < 0 || static_cast<double>(exp) != e)
        throw ParseError("exponent must be a non-negative integer");
    }
    return Poly::var(nv, var).pow(exp);
  }
  return Poly::constant(nv, parse_number(c));
}

Poly parse_term(Cursor& c, std::size_t d, std::size_t l) {
  Poly term = parse_factor(c, d, l);
  while (c.peek() == '*') {
    ++c.i;
    term = term * parse_factor(c, d, l);
  }
  return term;
}

}  // namespace

Poly parse_poly(const std::string& text, std::size_t d, std::size_t l) {
  Cursor c{text};
  Poly acc(d + l);
  bool first = true;
  while (!c.done()) {
    double sign = 1.0;
    const char ch = c.peek();
    if (ch == '+' || ch == '-') {
      sign = ch == '-' ? -1.0 : 1.0;
      ++c.i;
    } else if (!first) {
      throw ParseError("expected '+' or '-' before '" + c.s.substr(c.i) + "'");
    }
    acc += parse_term(c, d, l) * sign;
    first = false;
  }
  if (first) throw ParseError("empty polynomial expression");
  return acc;
}

BilevelProblem load_problem_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open problem file '" + path + "'");

  std::optional<Dims> dims;
  std::string name;
  std::optional<std::string> f_text, cap_f_text;
  std::vector<std::string> g_text, cap_g_text, cap_h_text;
  std::vector<std::pair<std::string, std::pair<double, double>>> box_lines;
  std::optional<Vector> start;
  std::optional<Vector> ref_x, ref_y;
  std::optional<double> ref_F, ref_f;

  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    auto rest = [&ls]() {
      std::string r;
      std::getline(ls, r);
      return r;
    };
    auto fail = [lineno](const std::string& why) {
      throw ParseError("line " + std::to_string(lineno) + ": " + why);
    };

    if (key == "name") {
      if (!(ls >> name)) fail("name needs a value");
    } else if (key == "dims") {
      Dims dm;
      if (!(ls >> dm.d >> dm.l >> dm.m >> dm.p >> dm.q)) fail("dims needs five integers");
      if (dm.d == 0 || dm.l == 0) fail("dims must have d >= 1 and l >= 1");
      dims = dm;
    } else if (key == "box") {
      std::string var;
      double lo, hi;
      if (!(ls >> var >> lo >> hi)) fail("box needs <var> <lo> <hi>");
      if (!(lo < hi)) fail("box bounds must satisfy lo < hi");
      box_lines.push_back({var, {lo, hi}});
    } else if (key == "start") {
      Vector v;
      double t;
      while (ls >> t) v.push_back(t);
      start = v;
    } else if (key == "F") {
      cap_f_text = rest();
    } else if (key == "f") {
      f_text = rest();
    } else if (key == "g") {
      g_text.push_back(rest());
    } else if (key == "G") {
      cap_g_text.push_back(rest());
    } else if (key == "H") {
      cap_h_text.push_back(rest());
    } else if (key == "ref_x" || key == "ref_y") {
      Vector v;
      double t;
      while (ls >> t) v.push_back(t);
      (key == "ref_x" ? ref_x : ref_y) = v;
    } else if (key == "ref_F") {
      double t;
      if (!(ls >> t)) fail("ref_F needs a value");
      ref_F = t;
    } else if (key == "ref_f") {
      double t;
      if (!(ls >> t)) fail("ref_f needs a value");
      ref_f = t;
    } else {
      fail("unknown key '" + key + "'");
    }
  }

  if (!dims) throw ParseError(path + ": missing dims line");
  if (name.empty()) throw ParseError(path + ": missing name line");
  if (!cap_f_text) throw ParseError(path + ": missing F line");
  if (!f_text) throw ParseError(path + ": missing f line");
  const Dims dm = *dims;
  if (g_text.size() != dm.m)
    throw ParseError(path + ": expected " + std::to_string(dm.m) + " g lines, found " +
                     std::to_string(g_text.size()));
  if (cap_g_text.size() != dm.p)
    throw ParseError(path + ": expected " + std::to_string(dm.p) + " G lines");
  if (cap_h_text.size() != dm.q)
    throw ParseError(path + ": expected " + std::to_string(dm.q) + " H lines");

  PolyProblemSpec spec;
  spec.name = name;
  spec.dims = dm;

  spec.box.x_lo.assign(dm.d, 0.0);
  spec.box.x_hi.assign(dm.d, 0.0);
  spec.box.y_lo.assign(dm.l, 0.0);
  spec.box.y_hi.assign(dm.l, 0.0);
  std::vector<bool> seen(dm.d + dm.l, false);
  for (const auto& [var, range] : box_lines) {
    if (var.size() < 2 || (var[0] != 'x' && var[0] != 'y'))
      throw ParseError(path + ": bad box variable '" + var + "'");
    const std::size_t idx = std::stoul(var.substr(1));
    if (var[0] == 'x') {
      if (idx < 1 || idx > dm.d) throw ParseError(path + ": box variable '" + var + "' out of range");
      spec.box.x_lo[idx - 1] = range.first;
      spec.box.x_hi[idx - 1] = range.second;
      seen[idx - 1] = true;
    } else {
      if (idx < 1 || idx > dm.l) throw ParseError(path + ": box variable '" + var + "' out of range");
      spec.box.y_lo[idx - 1] = range.first;
      spec.box.y_hi[idx - 1] = range.second;
      seen[dm.d + idx - 1] = true;
    }
  }
  for (std::size_t i = 0; i < seen.size(); ++i)
    if (!seen[i]) throw ParseError(path + ": missing box line for variable " + std::to_string(i));

  if (!start || start->size() != dm.d + dm.l)
    throw ParseError(path + ": start needs exactly " + std::to_string(dm.d + dm.l) + " numbers");
  spec.x0.assign(start->begin(), start->begin() + dm.d);
  spec.y0.assign(start->begin() + dm.d, start->end());

  spec.F = parse_poly(*cap_f_text, dm.d, dm.l);
  spec.f = parse_poly(*f_text, dm.d, dm.l);
  for (const auto& t : g_text) spec.g.push_back(parse_poly(t, dm.d, dm.l));
  for (const auto& t : cap_g_text) spec.G.push_back(parse_poly(t, dm.d, dm.l));
  for (const auto& t : cap_h_text) spec.H.push_back(parse_poly(t, dm.d, dm.l));

  if (ref_x && ref_y && ref_F && ref_f) {
    if (ref_x->size() != dm.d || ref_y->size() != dm.l)
      throw ParseError(path + ": reference sizes do not match dims");
    spec.reference = Reference{*ref_x, *ref_y, *ref_F, *ref_f};
  }
  return make_poly_problem(spec);
}

}  // namespace ebsa

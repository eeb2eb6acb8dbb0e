// Copyright The dfnopt Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef DFNOPT_IO_HPP
#define DFNOPT_IO_HPP

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dfnopt/dfn3.hpp"
#include "dfnopt/error.hpp"
#include "dfnopt/geometry.hpp"

// Network text format:
//
//   dfn 1
//   fracture <id> K <k11> <k12> <k22>
//   v <x> <y> <z>                      (>= 3, in order)
//   bc <edge> dirichlet|neumann <value>
//   source <value>
//
// <value> is a number, expr:NAME or expr:NAME*factor. Edges without a bc
// line are homogeneous Neumann. '#' starts a comment.

namespace dfnopt {

/// Shortest round-tripping text for a double (17 significant digits max).
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

namespace detail {

struct Token {
  std::string_view text;
  int column;
};

inline std::vector<Token> tokenize(std::string_view line) {
  std::vector<Token> out;
  std::size_t k = 0;
  while (k < line.size()) {
    if (line[k] == '#') break;
    if (std::isspace(static_cast<unsigned char>(line[k]))) {
      ++k;
      continue;
    }
    const std::size_t b = k;
    while (k < line.size() && !std::isspace(static_cast<unsigned char>(line[k])) && line[k] != '#') ++k;
    out.push_back({line.substr(b, k - b), static_cast<int>(b) + 1});
  }
  return out;
}

inline double parse_number(const Token& t, int line) {
  double v = 0.0;
  const char* first = t.text.data();
  const char* last = first + t.text.size();
  if (!t.text.empty() && *first == '+') ++first;
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last || !std::isfinite(v))
    throw ParseError(line, t.column, "expected a number, got '" + std::string(t.text) + "'");
  return v;
}

inline int parse_int(const Token& t, int line) {
  int v = 0;
  auto res = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
  if (res.ec != std::errc() || res.ptr != t.text.data() + t.text.size())
    throw ParseError(line, t.column, "expected an integer, got '" + std::string(t.text) + "'");
  return v;
}

inline Field parse_value(const Token& t, int line) {
  constexpr std::string_view prefix = "expr:";
  if (t.text.substr(0, prefix.size()) != prefix) return Field::constant(parse_number(t, line));
  std::string_view rest = t.text.substr(prefix.size());
  double factor = 1.0;
  if (const auto star = rest.find('*'); star != std::string_view::npos) {
    factor = parse_number({rest.substr(star + 1), t.column + static_cast<int>(prefix.size() + star + 1)}, line);
    rest = rest.substr(0, star);
  }
  const auto& reg = expression_registry();
  const auto it = reg.find(std::string(rest));
  if (it == reg.end()) throw ParseError(line, t.column, "unknown expression '" + std::string(rest) + "'");
  return Field::expression(std::string(rest), it->second, factor);
}

inline std::string format_value(const Field& f) {
  if (f.is_constant()) return format_double(f.constant_value());
  std::string s = "expr:" + f.name();
  if (f.factor() != 1.0) s += "*" + format_double(f.factor());
  return s;
}

}  // namespace detail

/// Parses the network text format and builds the validated network.
inline FractureNetwork parse_network(std::string_view text) {
  std::vector<Fracture> fractures;
  std::vector<int> header_line;
  std::vector<std::vector<std::pair<int, BoundaryCondition>>> pending_bcs;
  bool have_header = false;
  int line_no = 0;
  int last_line = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = eol + 1;
    ++line_no;
    const auto tok = detail::tokenize(line);
    if (tok.empty()) {
      if (eol == text.size()) break;
      continue;
    }
    last_line = line_no;
    const std::string_view kw = tok[0].text;
    auto need = [&](std::size_t n) {
      if (tok.size() < n)
        throw ParseError(line_no, static_cast<int>(line.size()) + 1, "'" + std::string(kw) + "' expects " + std::to_string(n - 1) + " arguments");
      if (tok.size() > n) throw ParseError(line_no, tok[n].column, "unexpected token '" + std::string(tok[n].text) + "'");
    };
    if (!have_header) {
      if (kw != "dfn") throw ParseError(line_no, tok[0].column, "expected header 'dfn 1'");
      need(2);
      if (detail::parse_int(tok[1], line_no) != 1) throw ParseError(line_no, tok[1].column, "unsupported format version");
      have_header = true;
    } else if (kw == "fracture") {
      need(6);
      const int id = detail::parse_int(tok[1], line_no);
      if (id != static_cast<int>(fractures.size()))
        throw ParseError(line_no, tok[1].column, "fracture ids must be consecutive from 0");
      if (tok[2].text != "K") throw ParseError(line_no, tok[2].column, "expected 'K'");
      Fracture f;
      f.id = id;
      const double k11 = detail::parse_number(tok[3], line_no), k12 = detail::parse_number(tok[4], line_no),
                   k22 = detail::parse_number(tok[5], line_no);
      f.transmissivity << k11, k12, k12, k22;
      fractures.push_back(std::move(f));
      header_line.push_back(line_no);
      pending_bcs.emplace_back();
    } else if (fractures.empty()) {
      throw ParseError(line_no, tok[0].column, "'" + std::string(kw) + "' outside a fracture block");
    } else if (kw == "v") {
      need(4);
      fractures.back().vertices.emplace_back(detail::parse_number(tok[1], line_no), detail::parse_number(tok[2], line_no),
                                            detail::parse_number(tok[3], line_no));
    } else if (kw == "bc") {
      need(4);
      const int e = detail::parse_int(tok[1], line_no);
      if (e < 0) throw ParseError(line_no, tok[1].column, "edge index must be non-negative");
      BoundaryCondition bc;
      if (tok[2].text == "dirichlet")
        bc.kind = BoundaryCondition::Kind::Dirichlet;
      else if (tok[2].text == "neumann")
        bc.kind = BoundaryCondition::Kind::Neumann;
      else
        throw ParseError(line_no, tok[2].column, "unknown boundary condition '" + std::string(tok[2].text) + "'");
      bc.value = detail::parse_value(tok[3], line_no);
      for (const auto& [pe, _] : pending_bcs.back())
        if (pe == e) throw ParseError(line_no, tok[1].column, "duplicate bc for edge " + std::to_string(e));
      pending_bcs.back().emplace_back(e, bc);
    } else if (kw == "source") {
      need(2);
      fractures.back().source = detail::parse_value(tok[1], line_no);
    } else {
      throw ParseError(line_no, tok[0].column, "unknown keyword '" + std::string(kw) + "'");
    }
    if (eol == text.size()) break;
  }
  if (!have_header) throw ParseError(std::max(line_no, 1), 1, "no fractures");
  if (fractures.empty()) throw ParseError(std::max(last_line, 1), 1, "no fractures");
  for (std::size_t k = 0; k < fractures.size(); ++k) {
    auto& f = fractures[k];
    const int ln = header_line[k];
    if (f.vertices.size() < 3) throw ParseError(ln, 1, "polygon needs >= 3 vertices");
    f.edge_bcs.assign(f.vertices.size(), BoundaryCondition::neumann());
    for (const auto& [e, bc] : pending_bcs[k]) {
      if (e >= static_cast<int>(f.vertices.size()))
        throw ParseError(ln, 1, "bc edge " + std::to_string(e) + " out of range on fracture " + std::to_string(k));
      f.edge_bcs[static_cast<std::size_t>(e)] = bc;
    }
    try {
      validate_fracture(f);
    } catch (const GeometryError& err) {
      throw ParseError(ln, 1, "fracture " + std::to_string(k) + ": " + err.what());
    }
  }
  try {
    return FractureNetwork::build(std::move(fractures));
  } catch (const UnsupportedGeometryError&) {
    throw;
  } catch (const GeometryError& err) {
    throw ParseError(last_line, 1, err.what());
  }
}

inline std::string serialize_network(const FractureNetwork& net) {
  std::ostringstream os;
  os << "dfn 1\n";
  for (const auto& f : net.fractures()) {
    const auto& K = f.transmissivity;
    os << "fracture " << f.id << " K " << format_double(K(0, 0)) << ' ' << format_double(K(0, 1)) << ' '
       << format_double(K(1, 1)) << '\n';
    for (const auto& v : f.vertices)
      os << "v " << format_double(v.x()) << ' ' << format_double(v.y()) << ' ' << format_double(v.z()) << '\n';
    for (std::size_t e = 0; e < f.edge_bcs.size(); ++e) {
      const auto& bc = f.edge_bcs[e];
      if (!bc.is_dirichlet() && bc.value.is_zero()) continue;
      os << "bc " << e << (bc.is_dirichlet() ? " dirichlet " : " neumann ") << detail::format_value(bc.value) << '\n';
    }
    if (!f.source.is_zero()) os << "source " << detail::format_value(f.source) << '\n';
  }
  return os.str();
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline FractureNetwork load_network(const std::string& path) { return parse_network(read_file(path)); }

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << text;
  if (!out) throw ConfigError("write to '" + path + "' failed");
}

/// Flat `key = value` file; '#' comments, blank lines ignored.
inline std::map<std::string, std::string> parse_config(std::string_view text) {
  std::map<std::string, std::string> kv;
  std::istringstream in{std::string(text)};
  std::string line;
  int n = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++n;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(n, 1, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ParseError(n, 1, "empty key");
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

}  // namespace dfnopt

#endif  // DFNOPT_IO_HPP

#pragma once

// Text formats.
//
// Config (line oriented, '#' starts a comment):
//
//   [network]
//   group = symmetric(4)
//   activation = relu
//   bias = uniform
//   seed = 7
//
//   [reps]
//   tensor(defining, 3)
//   tensor(defining, 3)
//   trivial(3)
//
//   [check]
//   tol = 1e-8
//   trials = 8
//
// Representation expressions:
//   defining | trivial(n) | sign | pixel | regular | perm(i j k; ...)
//   sum(expr, expr, ...) | tensor(expr, d)
//
// Model: "eqnn-model 1" followed by one record per line
//   group <spec> | activation <spec> | bias <uniform|fixed> | rep <i> <expr>
//   weights <layer> <count> <values...> | biases <layer> <count> <values...>
//   dense <layer> <rows> <cols> <values...>
// Values are printed with 17 significant digits.

#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "eqnn/activation.hpp"
#include "eqnn/error.hpp"
#include "eqnn/format.hpp"
#include "eqnn/group.hpp"
#include "eqnn/network.hpp"
#include "eqnn/rep.hpp"

namespace eqnn {

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline std::string strip_comment(const std::string& s) { return s.substr(0, s.find('#')); }

inline std::optional<long long> parse_int(const std::string& s) {
  long long v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::optional<double> parse_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    return std::nullopt;
  }
  if (used != s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

// Recursive-descent parser for representation expressions.
class RepParser {
 public:
  RepParser(const GroupPtr& group, const std::string& text) : group_(group), s_(text) {}

  Representation parse() {
    Representation r = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + s_.substr(pos_) + "'");
    return r;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw Error("representation '" + s_ + "': " + what); }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!eat(c)) fail(std::string("expected '") + c + "'");
  }

  std::string name() {
    skip();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
    if (start == pos_) fail("expected a representation name");
    return s_.substr(start, pos_ - start);
  }

  std::size_t number() {
    skip();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    const auto v = parse_int(s_.substr(start, pos_ - start));
    if (!v || *v < 1 || *v > 100000) fail("expected a positive integer");
    return static_cast<std::size_t>(*v);
  }

  Representation expr() {
    const std::string head = name();
    if (head == "defining") return defining_rep(group_);
    if (head == "sign") return sign_rep(group_);
    if (head == "pixel") return pixel_rep(group_);
    if (head == "regular") return regular_rep(group_);
    if (head == "trivial") {
      std::size_t n = 1;
      if (eat('(')) {
        n = number();
        expect(')');
      }
      return trivial_rep(group_, n);
    }
    if (head == "tensor") {
      expect('(');
      Representation inner = expr();
      expect(',');
      const std::size_t d = number();
      expect(')');
      return tensor_identity(inner, d);
    }
    if (head == "sum") {
      expect('(');
      std::vector<Representation> parts{expr()};
      while (eat(',')) parts.push_back(expr());
      expect(')');
      return direct_sum(parts);
    }
    if (head == "perm") {
      expect('(');
      std::vector<std::vector<std::size_t>> lists(1);
      while (true) {
        skip();
        if (eat(')')) break;
        if (eat(';')) {
          lists.emplace_back();
          continue;
        }
        const std::size_t start = pos_;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        const auto v = parse_int(s_.substr(start, pos_ - start));
        if (!v) fail("expected an index in perm(...)");
        lists.back().push_back(static_cast<std::size_t>(*v));
      }
      return permutation_rep(group_, lists);
    }
    fail("unknown representation '" + head + "'");
  }

  const GroupPtr& group_;
  std::string s_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline Representation parse_rep(const GroupPtr& group, const std::string& text) {
  return detail::RepParser(group, text).parse();
}

struct Config {
  GroupPtr group;
  std::string group_spec;
  std::vector<Representation> reps;
  std::vector<std::string> rep_specs;
  ActivationSpec activation = ActivationSpec::relu();
  BiasSpace bias_space = BiasSpace::uniform;
  std::uint64_t seed = 0;
  double tol = 1e-8;
  std::size_t trials = 8;
  std::string task = "none";
};

/// Parses the config format above. Errors are ParseError located as
/// "line N, field section.key".
inline Config parse_config(std::istream& in) {
  Config cfg;
  std::string section;
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::pair<std::size_t, std::string>> rep_lines;
  std::optional<std::size_t> group_line;

  auto where = [&](const std::string& field) { return "line " + std::to_string(lineno) + ", field " + field; };

  while (std::getline(in, line)) {
    ++lineno;
    const std::string text = detail::trim(detail::strip_comment(line));
    if (text.empty()) continue;
    if (text.front() == '[') {
      if (text.back() != ']') throw ParseError("line " + std::to_string(lineno), "unterminated section header");
      section = detail::trim(text.substr(1, text.size() - 2));
      if (section != "network" && section != "reps" && section != "check") {
        throw ParseError("line " + std::to_string(lineno), "unknown section [" + section + "]");
      }
      continue;
    }
    if (section == "reps") {
      rep_lines.emplace_back(lineno, text);
      continue;
    }
    const auto eq = text.find('=');
    if (section.empty() || eq == std::string::npos) {
      throw ParseError("line " + std::to_string(lineno), "expected 'key = value' inside a section");
    }
    const std::string key = detail::trim(text.substr(0, eq));
    const std::string value = detail::trim(text.substr(eq + 1));
    const std::string field = section + "." + key;
    try {
      if (field == "network.group") {
        cfg.group_spec = NamedGroupSpec::parse(value).to_string();
        group_line = lineno;
      } else if (field == "network.activation") {
        cfg.activation = ActivationSpec::parse(value);
      } else if (field == "network.bias") {
        cfg.bias_space = parse_bias_space(value);
      } else if (field == "network.seed" || field == "check.trials") {
        const auto v = detail::parse_int(value);
        if (!v || *v < 0) throw Error("expected a non-negative integer, got '" + value + "'");
        (field == "network.seed" ? cfg.seed : cfg.trials) = static_cast<std::uint64_t>(*v);
      } else if (field == "check.tol") {
        const auto v = detail::parse_double(value);
        if (!v || *v <= 0) throw Error("expected a positive number, got '" + value + "'");
        cfg.tol = *v;
      } else if (field == "network.task") {
        cfg.task = value;
      } else {
        throw Error("unknown key");
      }
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(where(field), e.what());
    }
  }

  if (!group_line) throw ParseError("field network.group", "missing group");
  try {
    cfg.group = std::make_shared<const FiniteGroup>(named_group(cfg.group_spec));
  } catch (const Error& e) {
    lineno = *group_line;
    throw ParseError(where("network.group"), e.what());
  }
  for (std::size_t i = 0; i < rep_lines.size(); ++i) {
    lineno = rep_lines[i].first;
    try {
      cfg.reps.push_back(parse_rep(cfg.group, rep_lines[i].second));
      cfg.rep_specs.push_back(rep_lines[i].second);
    } catch (const Error& e) {
      throw ParseError(where("reps." + std::to_string(i)), e.what());
    }
  }
  if (cfg.reps.size() < 2) throw ParseError("field reps", "need at least two representations (input and output)");
  return cfg;
}

inline Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, "cannot open config file");
  return parse_config(in);
}

// ---------------------------------------------------------------------------
// Models

namespace detail {

inline void write_values(std::ostream& os, std::span<const double> v) {
  for (double x : v) os << ' ' << format_real(x, true);
}

}  // namespace detail

inline void save_model(std::ostream& os, const EquivariantNetwork& net) {
  if (net.group->name().empty()) throw Error("only networks over named groups can be saved");
  os << "eqnn-model 1\n";
  os << "group " << net.group->name() << '\n';
  os << "activation " << net.activation.to_string() << '\n';
  os << "bias " << to_string(net.bias_space) << '\n';
  for (std::size_t i = 0; i < net.reps.size(); ++i) {
    if (net.reps[i].spec().empty()) throw Error("representation " + std::to_string(i) + " has no expression");
    os << "rep " << i << ' ' << net.reps[i].spec() << '\n';
  }
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const Layer& l = net.layers[i];
    os << "weights " << i + 1 << ' ' << l.weight_coeffs.size();
    detail::write_values(os, l.weight_coeffs);
    os << '\n';
    if (l.has_bias()) {
      os << "biases " << i + 1 << ' ' << l.bias_coeffs.size();
      detail::write_values(os, l.bias_coeffs);
      os << '\n';
    }
    if (l.weight_override) {
      os << "dense " << i + 1 << ' ' << l.weight_override->rows() << ' ' << l.weight_override->cols();
      detail::write_values(os, l.weight_override->data());
      os << '\n';
    }
  }
}

inline std::string model_to_string(const EquivariantNetwork& net) {
  std::ostringstream os;
  save_model(os, net);
  return os.str();
}

/// Rebuilds bases from the group and representation expressions, then loads
/// coefficients (and any dense overrides). Errors are ParseError with a
/// "line N, field F" locator.
inline EquivariantNetwork load_model(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  auto where = [&](const std::string& field) { return "line " + std::to_string(lineno) + ", field " + field; };

  if (!std::getline(in, line) || detail::trim(line) != "eqnn-model 1") {
    throw ParseError("line 1", "expected header 'eqnn-model 1'");
  }
  lineno = 1;

  std::string group_spec, activation_text = "relu", bias_text = "uniform";
  std::map<std::size_t, std::pair<std::size_t, std::string>> rep_text;  // index -> (line, expr)
  struct Values {
    std::size_t line;
    std::vector<double> values;
    std::size_t rows = 0, cols = 0;
  };
  std::map<std::size_t, Values> weights, biases, dense;

  auto read_values = [&](std::istringstream& ss, std::size_t count, const std::string& field) {
    std::vector<double> v;
    std::string tok;
    while (ss >> tok) {
      const auto x = detail::parse_double(tok);
      if (!x) throw ParseError(where(field), "'" + tok + "' is not a finite number");
      v.push_back(*x);
    }
    if (v.size() != count) {
      throw ParseError(where(field), "expected " + std::to_string(count) + " values, found " + std::to_string(v.size()));
    }
    return v;
  };
  auto read_index = [&](std::istringstream& ss, const std::string& field) {
    std::string tok;
    ss >> tok;
    const auto v = detail::parse_int(tok);
    if (!v || *v < 0 || *v > 1000000) throw ParseError(where(field), "expected a non-negative integer, got '" + tok + "'");
    return static_cast<std::size_t>(*v);
  };

  while (std::getline(in, line)) {
    ++lineno;
    const std::string text = detail::trim(line);
    if (text.empty() || text.front() == '#') continue;
    std::istringstream ss(text);
    std::string key;
    ss >> key;
    if (key == "group") {
      std::getline(ss, group_spec);
      group_spec = detail::trim(group_spec);
    } else if (key == "activation") {
      std::getline(ss, activation_text);
      activation_text = detail::trim(activation_text);
      try {
        ActivationSpec::parse(activation_text);
      } catch (const Error& e) {
        throw ParseError(where("activation"), e.what());
      }
    } else if (key == "bias") {
      std::getline(ss, bias_text);
      bias_text = detail::trim(bias_text);
      try {
        parse_bias_space(bias_text);
      } catch (const Error& e) {
        throw ParseError(where("bias"), e.what());
      }
    } else if (key == "rep") {
      const std::size_t i = read_index(ss, "rep");
      std::string expr;
      std::getline(ss, expr);
      rep_text[i] = {lineno, detail::trim(expr)};
    } else if (key == "weights" || key == "biases") {
      const std::size_t layer = read_index(ss, key);
      const std::size_t count = read_index(ss, key + "." + std::to_string(layer));
      auto& target = key == "weights" ? weights : biases;
      target[layer] = Values{lineno, read_values(ss, count, key + "." + std::to_string(layer))};
    } else if (key == "dense") {
      const std::size_t layer = read_index(ss, key);
      const std::size_t rows = read_index(ss, "dense." + std::to_string(layer));
      const std::size_t cols = read_index(ss, "dense." + std::to_string(layer));
      dense[layer] = Values{lineno, read_values(ss, rows * cols, "dense." + std::to_string(layer)), rows, cols};
    } else {
      throw ParseError(where(key), "unknown record '" + key + "'");
    }
  }

  if (group_spec.empty()) throw ParseError("field group", "model has no group");
  GroupPtr group;
  try {
    group = std::make_shared<const FiniteGroup>(named_group(group_spec));
  } catch (const Error& e) {
    throw ParseError("field group", e.what());
  }
  std::vector<Representation> reps;
  for (const auto& [i, entry] : rep_text) {
    lineno = entry.first;
    if (i != reps.size()) throw ParseError(where("rep"), "representation indices must be 0, 1, 2, ... in order");
    try {
      reps.push_back(parse_rep(group, entry.second));
    } catch (const Error& e) {
      throw ParseError(where("rep." + std::to_string(i)), e.what());
    }
  }

  EquivariantNetwork net;
  try {
    net = build(group, reps, ActivationSpec::parse(activation_text), 0, parse_bias_space(bias_text));
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError("field rep", e.what());
  }

  for (std::size_t i = 1; i <= net.depth(); ++i) {
    Layer& l = net.layers[i - 1];
    const std::string wf = "weights." + std::to_string(i);
    auto w = weights.find(i);
    if (w == weights.end()) throw ParseError("field " + wf, "missing weight coefficients");
    lineno = w->second.line;
    if (w->second.values.size() != l.weight_coeffs.size()) {
      throw ParseError(where(wf), "layer has " + std::to_string(l.weight_coeffs.size()) + " basis elements, file has " +
                                      std::to_string(w->second.values.size()) + " coefficients");
    }
    l.weight_coeffs = w->second.values;
    const std::string bf = "biases." + std::to_string(i);
    auto b = biases.find(i);
    if (l.has_bias()) {
      if (b == biases.end()) throw ParseError("field " + bf, "missing bias coefficients");
      lineno = b->second.line;
      if (b->second.values.size() != l.bias_coeffs.size()) {
        throw ParseError(where(bf), "expected " + std::to_string(l.bias_coeffs.size()) + " bias coefficients");
      }
      l.bias_coeffs = b->second.values;
    } else if (b != biases.end()) {
      lineno = b->second.line;
      throw ParseError(where(bf), "the output layer has no bias");
    }
    if (auto d = dense.find(i); d != dense.end()) {
      lineno = d->second.line;
      if (d->second.rows != l.weights.rep_out.degree() || d->second.cols != l.weights.rep_in.degree()) {
        throw ParseError(where("dense." + std::to_string(i)), "dense weight has the wrong shape");
      }
      l.weight_override = Matrix(d->second.rows, d->second.cols, d->second.values);
    }
  }
  for (const auto* m : {&weights, &biases, &dense})
    for (const auto& [i, v] : *m)
      if (i == 0 || i > net.depth()) {
        lineno = v.line;
        throw ParseError(where("layer"), "layer " + std::to_string(i) + " does not exist");
      }
  return net;
}

inline EquivariantNetwork load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, "cannot open model file");
  return load_model(in);
}

inline EquivariantNetwork model_from_string(const std::string& text) {
  std::istringstream in(text);
  return load_model(in);
}

}  // namespace eqnn

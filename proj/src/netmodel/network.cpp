#include "fluxldp/network.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "fluxldp/errors.hpp"

namespace fluxldp {

int Reaction::total_order() const {
  int order = 0;
  for (int a : alpha) order += a;
  return order;
}

ReactionNetwork::ReactionNetwork(std::vector<std::string> species, std::vector<Reaction> reactions)
    : species_(std::move(species)), reactions_(std::move(reactions)) {
  if (species_.empty()) throw ValidationError("network needs at least one species");
  if (reactions_.empty()) throw ValidationError("network needs at least one reaction");
  std::unordered_set<std::string> seen;
  for (const auto& s : species_) {
    if (s.empty()) throw ValidationError("empty species name");
    if (!seen.insert(s).second) throw ValidationError("duplicate species '" + s + "'");
  }
  const std::size_t ny = species_.size();
  for (std::size_t r = 0; r < reactions_.size(); ++r) {
    auto& rx = reactions_[r];
    if (rx.alpha.size() != ny || rx.beta.size() != ny) {
      throw ValidationError("reaction " + std::to_string(r) + " has complexes of wrong length");
    }
    rx.gamma.assign(ny, 0);
    for (std::size_t y = 0; y < ny; ++y) {
      if (rx.alpha[y] < 0 || rx.beta[y] < 0) {
        throw ValidationError("reaction " + std::to_string(r) + " has a negative stoichiometric coefficient");
      }
      rx.gamma[y] = rx.beta[y] - rx.alpha[y];
    }
    std::visit(
        [r](const auto& k) {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, CustomKinetics>) {
            if (!k.macro) throw ValidationError("reaction " + std::to_string(r) + ": custom kinetics without macro rate");
          } else {
            if (!(k.kappa >= 0.0) || !std::isfinite(k.kappa)) {
              throw ValidationError("reaction " + std::to_string(r) + ": negative or non-finite rate constant");
            }
          }
        },
        rx.kinetics);
  }
}

std::size_t ReactionNetwork::species_index(std::string_view name) const {
  for (std::size_t i = 0; i < species_.size(); ++i) {
    if (species_[i] == name) return i;
  }
  throw ValidationError("unknown species '" + std::string(name) + "'");
}

int ReactionNetwork::max_total_order() const {
  int p = 0;
  for (const auto& rx : reactions_) p = std::max(p, rx.total_order());
  return p;
}

bool ReactionNetwork::is_serializable() const {
  return std::none_of(reactions_.begin(), reactions_.end(), [](const Reaction& rx) {
    return std::holds_alternative<CustomKinetics>(rx.kinetics);
  });
}

RealVec ReactionNetwork::apply_stoichiometry(std::span<const double> c0, std::span<const double> w) const {
  RealVec c(c0.begin(), c0.end());
  for (std::size_t r = 0; r < reactions_.size(); ++r) {
    const auto& g = reactions_[r].gamma;
    for (std::size_t y = 0; y < c.size(); ++y) {
      if (g[y] != 0) c[y] += g[y] * w[r];
    }
  }
  return c;
}

namespace {

bool same_kinetics(const Kinetics& a, const Kinetics& b) {
  if (a.index() != b.index()) return false;
  if (const auto* ma = std::get_if<MassAction>(&a)) return ma->kappa == std::get<MassAction>(b).kappa;
  if (const auto* cr = std::get_if<ConstantRate>(&a)) return cr->kappa == std::get<ConstantRate>(b).kappa;
  return false;  // custom kinetics have no value identity
}

}  // namespace

bool operator==(const Reaction& a, const Reaction& b) {
  return a.alpha == b.alpha && a.beta == b.beta && same_kinetics(a.kinetics, b.kinetics);
}

bool operator==(const ReactionNetwork& a, const ReactionNetwork& b) {
  return a.species() == b.species() && a.reactions() == b.reactions();
}

// ---------------------------------------------------------------------------
// DSL

namespace {

enum class Tok { Number, Ident, Plus, Arrow, At, LParen, RParen, Comma, End };

struct Token {
  Tok kind;
  std::string text;
  std::size_t line;
  std::size_t column;
};

struct Statement {
  std::vector<Token> tokens;
  std::size_t line;
  std::size_t column;
};

bool is_ident_start(char ch) { return std::isalpha(static_cast<unsigned char>(ch)) || ch == '_'; }
bool is_ident_char(char ch) { return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_'; }
bool is_digit(char ch) { return ch >= '0' && ch <= '9'; }

// Splits on newlines and ';', strips comments, tokenizes each statement.
std::vector<Statement> tokenize(std::string_view text) {
  std::vector<Statement> out;
  Statement cur{{}, 1, 1};
  std::size_t line = 1, col = 1;
  std::size_t i = 0;
  auto flush = [&]() {
    if (!cur.tokens.empty()) out.push_back(std::move(cur));
    cur = Statement{{}, line, col};
  };
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k, ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  while (i < text.size()) {
    const char ch = text[i];
    if (ch == '#') {
      while (i < text.size() && text[i] != '\n') advance(1);
      continue;
    }
    if (ch == '\n' || ch == ';') {
      advance(1);
      flush();
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(ch))) {
      advance(1);
      continue;
    }
    Token tok{Tok::End, {}, line, col};
    const bool after_lparen = !cur.tokens.empty() && cur.tokens.back().kind == Tok::LParen;
    if (ch == '-' && i + 1 < text.size() && text[i + 1] == '>') {
      tok.kind = Tok::Arrow;
      tok.text = "->";
      advance(2);
    } else if (is_digit(ch) || ch == '.' ||
               ((ch == '-' || ch == '+') && after_lparen && i + 1 < text.size() &&
                (is_digit(text[i + 1]) || text[i + 1] == '.'))) {
      std::size_t j = i;
      if (text[j] == '-' || text[j] == '+') ++j;
      while (j < text.size() && (is_digit(text[j]) || text[j] == '.')) ++j;
      if (j < text.size() && (text[j] == 'e' || text[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < text.size() && (text[k] == '+' || text[k] == '-')) ++k;
        if (k < text.size() && is_digit(text[k])) {
          j = k;
          while (j < text.size() && is_digit(text[j])) ++j;
        }
      }
      tok.kind = Tok::Number;
      tok.text = std::string(text.substr(i, j - i));
      advance(j - i);
    } else if (is_ident_start(ch)) {
      std::size_t j = i;
      while (j < text.size() && is_ident_char(text[j])) ++j;
      tok.kind = Tok::Ident;
      tok.text = std::string(text.substr(i, j - i));
      advance(j - i);
    } else if (ch == '+') {
      tok.kind = Tok::Plus;
      tok.text = "+";
      advance(1);
    } else if (ch == '@') {
      tok.kind = Tok::At;
      tok.text = "@";
      advance(1);
    } else if (ch == '(') {
      tok.kind = Tok::LParen;
      tok.text = "(";
      advance(1);
    } else if (ch == ')') {
      tok.kind = Tok::RParen;
      tok.text = ")";
      advance(1);
    } else if (ch == ',') {
      tok.kind = Tok::Comma;
      tok.text = ",";
      advance(1);
    } else {
      throw ParseError(line, col, std::string("unexpected character '") + ch + "'");
    }
    if (cur.tokens.empty()) {
      cur.line = tok.line;
      cur.column = tok.column;
    }
    cur.tokens.push_back(std::move(tok));
  }
  flush();
  return out;
}

struct RawTerm {
  int coeff;
  std::string species;
  std::size_t line, column;
};

struct RawReaction {
  std::vector<RawTerm> lhs, rhs;
  Kinetics kinetics;
};

class StatementParser {
 public:
  explicit StatementParser(const Statement& st) : st_(st) {}

  const Token& peek() const {
    static const Token end{Tok::End, "end of statement", 0, 0};
    if (pos_ < st_.tokens.size()) return st_.tokens[pos_];
    return end;
  }

  [[noreturn]] void fail(const std::string& what) const {
    const Token& t = peek();
    if (t.kind == Tok::End) {
      const Token& last = st_.tokens.back();
      throw ParseError(last.line, last.column + last.text.size(), what + " (got end of statement)");
    }
    throw ParseError(t.line, t.column, what + " (got '" + t.text + "')");
  }

  const Token& expect(Tok kind, const char* what) {
    if (peek().kind != kind) fail(std::string("expected ") + what);
    return st_.tokens[pos_++];
  }

  bool accept(Tok kind) {
    if (peek().kind == kind) {
      ++pos_;
      return true;
    }
    return false;
  }

  bool done() const { return pos_ >= st_.tokens.size(); }

  std::vector<RawTerm> complex() {
    std::vector<RawTerm> terms;
    if (peek().kind == Tok::Number && peek().text == "0") {
      const std::size_t save = pos_;
      ++pos_;
      if (peek().kind != Tok::Ident) return terms;  // the empty complex
      pos_ = save;
    }
    do {
      int coeff = 1;
      const Token& first = peek();
      if (first.kind == Tok::Number) {
        const Token& num = expect(Tok::Number, "coefficient");
        int value = 0;
        auto [p, ec] = std::from_chars(num.text.data(), num.text.data() + num.text.size(), value);
        if (ec != std::errc() || p != num.text.data() + num.text.size() || value <= 0) {
          throw ParseError(num.line, num.column, "stoichiometric coefficient must be a positive integer");
        }
        coeff = value;
      }
      const Token& name = expect(Tok::Ident, "species name");
      terms.push_back(RawTerm{coeff, name.text, first.line, first.column});
    } while (accept(Tok::Plus));
    return terms;
  }

  Kinetics kinetics() {
    const Token& kind = expect(Tok::Ident, "kinetics 'ma(...)' or 'const(...)'");
    if (kind.text != "ma" && kind.text != "const") {
      throw ParseError(kind.line, kind.column, "unknown kinetics '" + kind.text + "'");
    }
    expect(Tok::LParen, "'('");
    const Token& num = expect(Tok::Number, "rate constant");
    double kappa = 0.0;
    auto [p, ec] = std::from_chars(num.text.data(), num.text.data() + num.text.size(), kappa);
    if (ec != std::errc() || p != num.text.data() + num.text.size() || !std::isfinite(kappa)) {
      throw ParseError(num.line, num.column, "malformed rate constant '" + num.text + "'");
    }
    if (kappa < 0.0) throw ParseError(num.line, num.column, "negative rate constant");
    expect(Tok::RParen, "')'");
    if (kind.text == "ma") return MassAction{kappa};
    return ConstantRate{kappa};
  }

 private:
  const Statement& st_;
  std::size_t pos_ = 0;
};

bool has_arrow(const Statement& st) {
  return std::any_of(st.tokens.begin(), st.tokens.end(), [](const Token& t) { return t.kind == Tok::Arrow; });
}

std::string format_double(double x) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  std::string s(buf, p);
  // keep a decimal point so the DSL reads as a float
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

}  // namespace

ReactionNetwork parse_network(std::string_view text) {
  const auto statements = tokenize(text);
  std::vector<std::string> species;
  bool declared = false;
  std::vector<RawReaction> raw;

  for (const auto& st : statements) {
    StatementParser p(st);
    if (st.tokens.front().kind == Tok::Ident && st.tokens.front().text == "species" && !has_arrow(st)) {
      if (declared) throw ParseError(st.line, st.column, "duplicate species declaration");
      if (!raw.empty()) throw ParseError(st.line, st.column, "species declaration must precede reactions");
      declared = true;
      p.expect(Tok::Ident, "'species'");
      while (!p.done()) {
        const Token& name = p.expect(Tok::Ident, "species name");
        if (std::find(species.begin(), species.end(), name.text) != species.end()) {
          throw ParseError(name.line, name.column, "duplicate species '" + name.text + "'");
        }
        species.push_back(name.text);
        p.accept(Tok::Comma);
      }
      if (species.empty()) throw ParseError(st.line, st.column, "empty species declaration");
      continue;
    }
    RawReaction rx;
    rx.lhs = p.complex();
    p.expect(Tok::Arrow, "'->'");
    rx.rhs = p.complex();
    p.expect(Tok::At, "'@'");
    rx.kinetics = p.kinetics();
    if (!p.done()) p.fail("unexpected trailing input");
    for (const auto* side : {&rx.lhs, &rx.rhs}) {
      for (const auto& term : *side) {
        if (std::find(species.begin(), species.end(), term.species) != species.end()) continue;
        if (declared) throw ParseError(term.line, term.column, "unknown species '" + term.species + "'");
        species.push_back(term.species);
      }
    }
    raw.push_back(std::move(rx));
  }
  if (raw.empty()) throw ParseError(1, 1, "network has no reactions");
  if (species.empty()) throw ParseError(1, 1, "network has no species");

  std::vector<Reaction> reactions;
  reactions.reserve(raw.size());
  for (auto& rr : raw) {
    Reaction rx;
    rx.alpha.assign(species.size(), 0);
    rx.beta.assign(species.size(), 0);
    auto index_of = [&](const std::string& s) {
      return static_cast<std::size_t>(std::find(species.begin(), species.end(), s) - species.begin());
    };
    for (const auto& t : rr.lhs) rx.alpha[index_of(t.species)] += t.coeff;
    for (const auto& t : rr.rhs) rx.beta[index_of(t.species)] += t.coeff;
    rx.kinetics = std::move(rr.kinetics);
    reactions.push_back(std::move(rx));
  }
  return ReactionNetwork(std::move(species), std::move(reactions));
}

namespace {

std::string render_complex(const ReactionNetwork& net, const std::vector<int>& complex) {
  std::string out;
  for (std::size_t y = 0; y < complex.size(); ++y) {
    if (complex[y] == 0) continue;
    if (!out.empty()) out += " + ";
    if (complex[y] != 1) out += std::to_string(complex[y]) + " ";
    out += net.species()[y];
  }
  return out.empty() ? "0" : out;
}

}  // namespace

std::string render_network(const ReactionNetwork& net) {
  std::string out = "species";
  for (const auto& s : net.species()) out += " " + s;
  out += "\n";
  for (const auto& rx : net.reactions()) {
    out += render_complex(net, rx.alpha) + " -> " + render_complex(net, rx.beta) + " @ ";
    if (const auto* ma = std::get_if<MassAction>(&rx.kinetics)) {
      out += "ma(" + format_double(ma->kappa) + ")";
    } else if (const auto* cr = std::get_if<ConstantRate>(&rx.kinetics)) {
      out += "const(" + format_double(cr->kappa) + ")";
    } else {
      throw ValidationError("custom kinetics '" + std::get<CustomKinetics>(rx.kinetics).name +
                            "' cannot be rendered");
    }
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON

nlohmann::json network_to_json(const ReactionNetwork& net) {
  nlohmann::json j;
  j["species"] = net.species();
  j["reactions"] = nlohmann::json::array();
  for (const auto& rx : net.reactions()) {
    nlohmann::json jr;
    jr["alpha"] = nlohmann::json::object();
    jr["beta"] = nlohmann::json::object();
    for (std::size_t y = 0; y < net.num_species(); ++y) {
      if (rx.alpha[y] != 0) jr["alpha"][net.species()[y]] = rx.alpha[y];
      if (rx.beta[y] != 0) jr["beta"][net.species()[y]] = rx.beta[y];
    }
    if (const auto* ma = std::get_if<MassAction>(&rx.kinetics)) {
      jr["kinetics"] = {{"kind", "mass-action"}, {"kappa", ma->kappa}};
    } else if (const auto* cr = std::get_if<ConstantRate>(&rx.kinetics)) {
      jr["kinetics"] = {{"kind", "constant"}, {"kappa", cr->kappa}};
    } else {
      throw ValidationError("custom kinetics cannot be exported to JSON");
    }
    j["reactions"].push_back(std::move(jr));
  }
  return j;
}

ReactionNetwork network_from_json(const nlohmann::json& j) {
  try {
    std::vector<std::string> species = j.at("species").get<std::vector<std::string>>();
    std::vector<Reaction> reactions;
    const auto& jrs = j.at("reactions");
    for (std::size_t r = 0; r < jrs.size(); ++r) {
      const auto& jr = jrs[r];
      Reaction rx;
      rx.alpha.assign(species.size(), 0);
      rx.beta.assign(species.size(), 0);
      auto fill = [&](const char* key, std::vector<int>& dst) {
        for (const auto& [name, coeff] : jr.at(key).items()) {
          auto it = std::find(species.begin(), species.end(), name);
          if (it == species.end()) {
            throw ValidationError("reactions[" + std::to_string(r) + "]." + key + ": unknown species '" + name + "'");
          }
          dst[static_cast<std::size_t>(it - species.begin())] = coeff.get<int>();
        }
      };
      fill("alpha", rx.alpha);
      fill("beta", rx.beta);
      const auto& jk = jr.at("kinetics");
      const auto kind = jk.at("kind").get<std::string>();
      const double kappa = jk.at("kappa").get<double>();
      if (kappa < 0.0) throw ValidationError("reactions[" + std::to_string(r) + "].kinetics.kappa: negative rate constant");
      if (kind == "mass-action") {
        rx.kinetics = MassAction{kappa};
      } else if (kind == "constant") {
        rx.kinetics = ConstantRate{kappa};
      } else {
        throw ValidationError("reactions[" + std::to_string(r) + "].kinetics.kind: unknown kind '" + kind + "'");
      }
      reactions.push_back(std::move(rx));
    }
    return ReactionNetwork(std::move(species), std::move(reactions));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("network JSON: ") + e.what());
  }
}

ReactionNetwork load_network_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open network file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    try {
      return network_from_json(nlohmann::json::parse(text));
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError("network file '" + path + "': " + e.what());
    }
  }
  return parse_network(text);
}

// ---------------------------------------------------------------------------
// Rates

double macro_rate(const Reaction& rx, std::span<const double> c) {
  if (const auto* ma = std::get_if<MassAction>(&rx.kinetics)) {
    double k = ma->kappa;
    for (std::size_t y = 0; y < c.size(); ++y) {
      for (int a = 0; a < rx.alpha[y]; ++a) k *= c[y];
    }
    return k;
  }
  if (const auto* cr = std::get_if<ConstantRate>(&rx.kinetics)) return cr->kappa;
  return std::get<CustomKinetics>(rx.kinetics).macro(c);
}

RealVec macro_rate(const ReactionNetwork& net, std::span<const double> c) {
  if (c.size() != net.num_species()) throw ValidationError("concentration vector has wrong length");
  for (double x : c) {
    if (!(x >= 0.0)) throw ValidationError("negative concentration passed to macro_rate");
  }
  RealVec k(net.num_reactions());
  for (std::size_t r = 0; r < k.size(); ++r) k[r] = macro_rate(net.reaction(r), c);
  return k;
}

double micro_propensity(const Reaction& rx, std::int64_t volume, std::span<const std::int64_t> n) {
  const double v = static_cast<double>(volume);
  if (const auto* ma = std::get_if<MassAction>(&rx.kinetics)) {
    double k = ma->kappa * v;
    for (std::size_t y = 0; y < n.size(); ++y) {
      const int a = rx.alpha[y];
      if (a == 0) continue;
      if (n[y] < a) return 0.0;
      for (int i = 0; i < a; ++i) k *= static_cast<double>(n[y] - i) / v;
    }
    return k;
  }
  if (const auto* cr = std::get_if<ConstantRate>(&rx.kinetics)) return cr->kappa * v;
  const auto& custom = std::get<CustomKinetics>(rx.kinetics);
  if (custom.micro) return custom.micro(volume, n);
  RealVec c(n.size());
  for (std::size_t y = 0; y < n.size(); ++y) c[y] = static_cast<double>(n[y]) / v;
  return v * custom.macro(c);
}

RealVec micro_propensity(const ReactionNetwork& net, std::int64_t volume, std::span<const std::int64_t> n) {
  if (volume <= 0) throw ValidationError("volume must be positive");
  if (n.size() != net.num_species()) throw ValidationError("count vector has wrong length");
  for (auto x : n) {
    if (x < 0) throw ValidationError("negative molecule count");
  }
  RealVec k(net.num_reactions());
  for (std::size_t r = 0; r < k.size(); ++r) k[r] = micro_propensity(net.reaction(r), volume, n);
  return k;
}

}  // namespace fluxldp

// Copyright 2026 The molddpm Authors
// SPDX-License-Identifier: Apache-2.0

#include "molddpm/smiles.hpp"

#include "molddpm/error.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <set>

namespace molddpm {

namespace {

constexpr std::array<std::string_view, 16> kSupportedSymbols = {
    "B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I", "b", "c", "n", "o", "p", "s"};

bool is_supported(std::string_view symbol) {
  return std::find(kSupportedSymbols.begin(), kSupportedSymbols.end(), symbol) !=
         kSupportedSymbols.end();
}

std::optional<BondKind> bond_from_char(char c) {
  switch (c) {
    case '-': return BondKind::Single;
    case '=': return BondKind::Double;
    case '#': return BondKind::Triple;
    case ':': return BondKind::Aromatic;
    default: return std::nullopt;
  }
}

int atom_index(const AtomAlphabet& alphabet, std::string_view symbol, std::size_t pos) {
  auto idx = alphabet.index_of(symbol);
  if (!idx) {
    throw Error(ErrorCode::UnknownSymbol, "atom '" + std::string(symbol) + "'", pos);
  }
  return *idx;
}

SmilesToken bracket_atom(std::string_view text, std::size_t open,
                         const AtomAlphabet& alphabet, std::size_t& next) {
  const std::size_t close = text.find(']', open + 1);
  if (close == std::string_view::npos) {
    throw Error(ErrorCode::UnterminatedBracketAtom, "missing ']'", open);
  }
  std::size_t i = open + 1;
  auto at = [&](std::size_t k) { return k < close ? text[k] : '\0'; };
  if (std::isdigit(static_cast<unsigned char>(at(i)))) {
    throw Error(ErrorCode::UnsupportedFeature, "isotope", i);
  }
  std::string symbol;
  const char first = at(i);
  if (std::isupper(static_cast<unsigned char>(first))) {
    symbol.push_back(first);
    if (std::islower(static_cast<unsigned char>(at(i + 1)))) symbol.push_back(at(i + 1));
  } else if (std::islower(static_cast<unsigned char>(first))) {
    symbol.push_back(first);
    const std::string two{first, at(i + 1)};
    if (two == "se" || two == "as" || two == "te") symbol = two;
  } else if (first == '*') {
    throw Error(ErrorCode::UnsupportedFeature, "wildcard atom", i);
  } else {
    throw Error(ErrorCode::MalformedSmiles, "bracket atom without element", i);
  }
  if (symbol == "H") {
    throw Error(ErrorCode::UnsupportedFeature, "explicit hydrogen atom", i);
  }
  const std::size_t symbol_pos = i;
  i += symbol.size();
  SmilesToken token;
  token.kind = TokenKind::Atom;
  token.position = open;
  token.text = std::string(text.substr(open, close - open + 1));
  token.atom = atom_index(alphabet, symbol, symbol_pos);
  while (i < close) {
    const char c = text[i];
    if (c == '@') throw Error(ErrorCode::UnsupportedFeature, "chirality", i);
    if (c == '+' || c == '-') throw Error(ErrorCode::UnsupportedFeature, "formal charge", i);
    if (c == ':') throw Error(ErrorCode::UnsupportedFeature, "atom class", i);
    if (c == 'H') {
      ++i;
      while (i < close && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
      continue;
    }
    throw Error(ErrorCode::UnknownSymbol, std::string("'") + c + "' in bracket atom", i);
  }
  next = close + 1;
  return token;
}

}  // namespace

// ---------------------------------------------------------------------------
// Alphabets

AtomAlphabet AtomAlphabet::standard() {
  return AtomAlphabet({kSupportedSymbols.begin(), kSupportedSymbols.end()});
}

AtomAlphabet::AtomAlphabet(std::vector<std::string> symbols) : symbols_(std::move(symbols)) {
  if (symbols_.empty()) throw Error(ErrorCode::InvalidConfig, "empty atom alphabet");
  std::set<std::string> seen;
  for (const auto& s : symbols_) {
    if (!is_supported(s)) {
      throw Error(ErrorCode::InvalidConfig, "unsupported atom symbol '" + s + "'");
    }
    if (!seen.insert(s).second) {
      throw Error(ErrorCode::InvalidConfig, "duplicate atom symbol '" + s + "'");
    }
  }
}

std::optional<int> AtomAlphabet::index_of(std::string_view symbol) const {
  auto it = std::find(symbols_.begin(), symbols_.end(), symbol);
  if (it == symbols_.end()) return std::nullopt;
  return static_cast<int>(it - symbols_.begin());
}

bool AtomAlphabet::is_aromatic(int index) const {
  return std::islower(static_cast<unsigned char>(symbol(index).front())) != 0;
}

std::string_view BondAlphabet::name(int index) {
  static constexpr std::array<std::string_view, 5> names = {"none", "single", "double",
                                                            "triple", "aromatic"};
  return names.at(static_cast<std::size_t>(index));
}

// ---------------------------------------------------------------------------
// Tokenizer

std::vector<SmilesToken> tokenize(std::string_view text, const AtomAlphabet& alphabet) {
  if (text.empty()) throw Error(ErrorCode::MalformedSmiles, "empty input", 0);
  std::vector<SmilesToken> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (static_cast<unsigned char>(c) > 127) {
      throw Error(ErrorCode::UnknownSymbol, "non-ASCII character", i);
    }
    SmilesToken token;
    token.position = i;
    if (c == '[') {
      std::size_t next = i;
      tokens.push_back(bracket_atom(text, i, alphabet, next));
      i = next;
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::string symbol(1, c);
      if ((c == 'B' && i + 1 < text.size() && text[i + 1] == 'r') ||
          (c == 'C' && i + 1 < text.size() && text[i + 1] == 'l')) {
        symbol.push_back(text[i + 1]);
      }
      if (!is_supported(symbol)) {
        throw Error(ErrorCode::UnknownSymbol, "'" + symbol + "'", i);
      }
      token.kind = TokenKind::Atom;
      token.text = symbol;
      token.atom = atom_index(alphabet, symbol, i);
      tokens.push_back(std::move(token));
      i += symbol.size();
      continue;
    }
    if (auto bond = bond_from_char(c)) {
      token.kind = TokenKind::Bond;
      token.bond = *bond;
      token.text = std::string(1, c);
      tokens.push_back(std::move(token));
      ++i;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      token.kind = TokenKind::RingBond;
      token.ring = c - '0';
      token.text = std::string(1, c);
      tokens.push_back(std::move(token));
      ++i;
      continue;
    }
    switch (c) {
      case '%': {
        if (i + 2 >= text.size() || !std::isdigit(static_cast<unsigned char>(text[i + 1])) ||
            !std::isdigit(static_cast<unsigned char>(text[i + 2]))) {
          throw Error(ErrorCode::MalformedSmiles, "'%' must be followed by two digits", i);
        }
        token.kind = TokenKind::RingBond;
        token.ring = (text[i + 1] - '0') * 10 + (text[i + 2] - '0');
        token.text = std::string(text.substr(i, 3));
        tokens.push_back(std::move(token));
        i += 3;
        continue;
      }
      case '(':
      case ')':
        token.kind = c == '(' ? TokenKind::BranchOpen : TokenKind::BranchClose;
        token.text = std::string(1, c);
        tokens.push_back(std::move(token));
        ++i;
        continue;
      case '.':
        token.kind = TokenKind::Dot;
        token.text = ".";
        tokens.push_back(std::move(token));
        ++i;
        continue;
      case '/':
      case '\\':
        throw Error(ErrorCode::UnsupportedFeature, "double-bond stereo marker", i);
      case '@':
        throw Error(ErrorCode::UnsupportedFeature, "chirality", i);
      case '$':
        throw Error(ErrorCode::UnsupportedFeature, "quadruple bond", i);
      case '*':
        throw Error(ErrorCode::UnsupportedFeature, "wildcard atom", i);
      case ']':
        throw Error(ErrorCode::MalformedSmiles, "']' without '['", i);
      default:
        throw Error(ErrorCode::UnknownSymbol, std::string("'") + c + "'", i);
    }
  }
  return tokens;
}

// ---------------------------------------------------------------------------
// Parser

MolecularGraph parse_smiles(std::string_view text, const AtomAlphabet& alphabet) {
  const std::vector<SmilesToken> tokens = tokenize(text, alphabet);

  struct OpenRing {
    int atom;
    std::optional<BondKind> bond;
    std::size_t position;
  };

  MolecularGraph graph;
  int prev = -1;
  std::optional<BondKind> pending;
  std::size_t pending_pos = 0;
  std::vector<std::pair<int, std::size_t>> branches;  // (atom, '(' position)
  std::map<int, OpenRing> rings;
  const SmilesToken* last = nullptr;

  auto implicit_bond = [&](int a, int b) {
    return alphabet.is_aromatic(graph.node_type(a)) && alphabet.is_aromatic(graph.node_type(b))
               ? BondKind::Aromatic
               : BondKind::Single;
  };

  for (const SmilesToken& tok : tokens) {
    switch (tok.kind) {
      case TokenKind::Atom: {
        const int atom = graph.add_node(tok.atom);
        if (prev >= 0) {
          graph.set_bond(prev, atom, static_cast<int>(pending.value_or(implicit_bond(prev, atom))));
        } else if (pending) {
          throw Error(ErrorCode::MalformedSmiles, "bond without a preceding atom", pending_pos);
        }
        pending.reset();
        prev = atom;
        break;
      }
      case TokenKind::Bond:
        if (pending) throw Error(ErrorCode::MalformedSmiles, "consecutive bond symbols", tok.position);
        if (prev < 0) throw Error(ErrorCode::MalformedSmiles, "bond without a preceding atom", tok.position);
        pending = tok.bond;
        pending_pos = tok.position;
        break;
      case TokenKind::BranchOpen:
        if (prev < 0 || pending) {
          throw Error(ErrorCode::MalformedSmiles, "branch must follow an atom", tok.position);
        }
        branches.emplace_back(prev, tok.position);
        break;
      case TokenKind::BranchClose:
        if (branches.empty()) throw Error(ErrorCode::BranchUnderflow, "unmatched ')'", tok.position);
        if (pending || (last != nullptr && last->kind == TokenKind::BranchOpen)) {
          throw Error(ErrorCode::MalformedSmiles, "empty branch or dangling bond", tok.position);
        }
        prev = branches.back().first;
        branches.pop_back();
        break;
      case TokenKind::RingBond: {
        if (prev < 0) throw Error(ErrorCode::MalformedSmiles, "ring bond without an atom", tok.position);
        auto it = rings.find(tok.ring);
        if (it == rings.end()) {
          rings.emplace(tok.ring, OpenRing{prev, pending, tok.position});
        } else {
          const OpenRing open = it->second;
          rings.erase(it);
          if (open.atom == prev || graph.bond(open.atom, prev) != 0) {
            throw Error(ErrorCode::MalformedSmiles, "ring closure duplicates a bond", tok.position);
          }
          if (open.bond && pending && *open.bond != *pending) {
            throw Error(ErrorCode::ConflictingRingBond,
                        "ring " + std::to_string(tok.ring) + " has two different bond symbols",
                        tok.position);
          }
          const BondKind kind = open.bond ? *open.bond : pending.value_or(implicit_bond(open.atom, prev));
          graph.set_bond(open.atom, prev, static_cast<int>(kind));
        }
        pending.reset();
        break;
      }
      case TokenKind::Dot:
        if (prev < 0 || pending || !branches.empty()) {
          throw Error(ErrorCode::MalformedSmiles, "misplaced '.'", tok.position);
        }
        prev = -1;
        break;
    }
    last = &tok;
  }
  if (!branches.empty()) {
    throw Error(ErrorCode::BranchOverflow, "unclosed '('", branches.back().second);
  }
  if (!rings.empty()) {
    const auto& [index, open] = *rings.begin();
    throw Error(ErrorCode::UnmatchedRingBond, "ring " + std::to_string(index) + " never closed",
                open.position);
  }
  if (pending || prev < 0) {
    throw Error(ErrorCode::MalformedSmiles, "input ends without an atom", text.size());
  }
  return graph;
}

// ---------------------------------------------------------------------------
// Writer

namespace {

std::string bond_symbol(int kind, bool aromatic_a, bool aromatic_b) {
  const bool both = aromatic_a && aromatic_b;
  switch (static_cast<BondKind>(kind)) {
    case BondKind::Single: return both ? "-" : "";
    case BondKind::Double: return "=";
    case BondKind::Triple: return "#";
    case BondKind::Aromatic: return both ? "" : ":";
    case BondKind::None: break;
  }
  throw Error(ErrorCode::UnserializableGraph, "bond category " + std::to_string(kind));
}

std::string ring_label(int digit) {
  return digit < 10 ? std::to_string(digit) : "%" + std::to_string(digit);
}

class SmilesWriter {
 public:
  SmilesWriter(const MolecularGraph& g, const AtomAlphabet& alphabet)
      : g_(g), alphabet_(alphabet), n_(g.num_nodes()) {
    adjacency_.resize(static_cast<std::size_t>(n_));
    for (int i = 0; i < n_; ++i) {
      for (int j = 0; j < n_; ++j) {
        if (i != j && g.bond(i, j) != 0) adjacency_[static_cast<std::size_t>(i)].push_back(j);
      }
    }
    rank_.assign(static_cast<std::size_t>(n_), -1);
    parent_.assign(static_cast<std::size_t>(n_), -1);
    children_.resize(static_cast<std::size_t>(n_));
    rings_.resize(static_cast<std::size_t>(n_));
  }

  WrittenSmiles write() {
    WrittenSmiles out;
    for (int root = 0; root < n_; ++root) {
      if (rank_[static_cast<std::size_t>(root)] >= 0) continue;
      discover(root);
      if (!out.text.empty()) out.text += '.';
      emit(root, out.text);
    }
    out.order = order_;
    return out;
  }

 private:
  void discover(int root) {
    // Iterative preorder DFS; neighbours visited in ascending index order.
    struct Frame {
      int node;
      std::size_t next;
    };
    std::vector<Frame> stack;
    visit(root, -1);
    stack.push_back({root, 0});
    while (!stack.empty()) {
      Frame& f = stack.back();
      const auto& nbrs = adjacency_[static_cast<std::size_t>(f.node)];
      if (f.next == nbrs.size()) {
        stack.pop_back();
        continue;
      }
      const int v = nbrs[f.next++];
      const int u = f.node;
      if (rank_[static_cast<std::size_t>(v)] < 0) {
        children_[static_cast<std::size_t>(u)].push_back(v);
        visit(v, u);
        stack.push_back({v, 0});
      } else if (v != parent_[static_cast<std::size_t>(u)] &&
                 rank_[static_cast<std::size_t>(v)] < rank_[static_cast<std::size_t>(u)]) {
        // Back edge to an already-written atom: v opens, u closes.
        rings_[static_cast<std::size_t>(v)].push_back(u);
        rings_[static_cast<std::size_t>(u)].push_back(v);
      }
    }
  }

  void visit(int v, int parent) {
    rank_[static_cast<std::size_t>(v)] = static_cast<int>(order_.size());
    parent_[static_cast<std::size_t>(v)] = parent;
    order_.push_back(v);
  }

  bool aromatic(int v) const { return alphabet_.is_aromatic(g_.node_type(v)); }

  void emit(int root, std::string& out) {
    // Explicit stack of pending output actions keeps deep chains off the call stack.
    struct Action {
      int node;
      int from;          // bonded predecessor, -1 for the root
      bool close_paren;  // emit ')' instead of an atom
      bool open_paren;
    };
    std::vector<Action> stack{{root, -1, false, false}};
    while (!stack.empty()) {
      const Action a = stack.back();
      stack.pop_back();
      if (a.close_paren) {
        out += ')';
        continue;
      }
      if (a.open_paren) out += '(';
      if (a.from >= 0) out += bond_symbol(g_.bond(a.from, a.node), aromatic(a.from), aromatic(a.node));
      out += alphabet_.symbol(g_.node_type(a.node));
      emit_rings(a.node, out);
      const auto& kids = children_[static_cast<std::size_t>(a.node)];
      // Push in reverse so the first child is written first; all but the
      // last child become parenthesised branches.
      for (std::size_t k = kids.size(); k-- > 0;) {
        const bool branch = k + 1 < kids.size();
        if (branch) stack.push_back({-1, -1, true, false});
        stack.push_back({kids[k], a.node, false, branch});
      }
    }
  }

  void emit_rings(int u, std::string& out) {
    auto partners = rings_[static_cast<std::size_t>(u)];
    std::sort(partners.begin(), partners.end());
    std::vector<int> freed;
    for (int v : partners) {
      const auto key = std::minmax(u, v);
      auto it = open_digits_.find(key);
      if (it != open_digits_.end()) {
        out += ring_label(it->second);
        freed.push_back(it->second);
        open_digits_.erase(it);
      } else {
        int digit = 1;
        while (digit < 100 && used_.count(digit) != 0) ++digit;
        if (digit >= 100) {
          throw Error(ErrorCode::UnserializableGraph, "more than 99 open ring closures");
        }
        used_.insert(digit);
        open_digits_.emplace(key, digit);
        out += bond_symbol(g_.bond(u, v), aromatic(u), aromatic(v));
        out += ring_label(digit);
      }
    }
    for (int d : freed) used_.erase(d);
  }

  const MolecularGraph& g_;
  const AtomAlphabet& alphabet_;
  int n_;
  std::vector<std::vector<int>> adjacency_;
  std::vector<int> rank_;
  std::vector<int> parent_;
  std::vector<int> order_;
  std::vector<std::vector<int>> children_;
  std::vector<std::vector<int>> rings_;
  std::map<std::pair<int, int>, int> open_digits_;
  std::set<int> used_;
};

}  // namespace

WrittenSmiles write_smiles_ordered(const MolecularGraph& graph, const AtomAlphabet& alphabet) {
  graph.validate(alphabet.size(), BondAlphabet::size());
  return SmilesWriter(graph, alphabet).write();
}

std::string write_smiles(const MolecularGraph& graph, const AtomAlphabet& alphabet) {
  return write_smiles_ordered(graph, alphabet).text;
}

std::vector<std::string> valence_warnings(const MolecularGraph& graph,
                                          const AtomAlphabet& alphabet) {
  static const std::map<std::string, double, std::less<>> max_valence = {
      {"B", 3}, {"C", 4}, {"N", 3}, {"O", 2}, {"P", 5}, {"S", 6},
      {"F", 1}, {"Cl", 1}, {"Br", 1}, {"I", 1}};
  std::vector<std::string> warnings;
  for (int i = 0; i < graph.num_nodes(); ++i) {
    std::string element = alphabet.symbol(graph.node_type(i));
    element[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(element[0])));
    double total = 0.0;
    for (int j = 0; j < graph.num_nodes(); ++j) {
      if (i == j) continue;
      switch (static_cast<BondKind>(graph.bond(i, j))) {
        case BondKind::Single: total += 1.0; break;
        case BondKind::Double: total += 2.0; break;
        case BondKind::Triple: total += 3.0; break;
        case BondKind::Aromatic: total += 1.5; break;
        case BondKind::None: break;
      }
    }
    const double limit = max_valence.at(element);
    if (total > limit) {
      warnings.push_back("atom " + std::to_string(i) + " (" + alphabet.symbol(graph.node_type(i)) +
                         ") has bond order " + std::to_string(total) + " > " +
                         std::to_string(static_cast<int>(limit)));
    }
  }
  return warnings;
}

}  // namespace molddpm

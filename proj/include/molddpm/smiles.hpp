// Copyright 2026 The molddpm Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file smiles.hpp
 * @brief SMILES subset reader and writer.
 *
 * Supported: organic-subset atoms (B C N O P S F Cl Br I and aromatic
 * b c n o p s), bracket atoms carrying only an element and an optional
 * hydrogen count, bonds - = # :, branches, ring closures 0-9 and %nn, and '.'
 * separated components. Hydrogens stay implicit. An unannotated bond joins
 * two aromatic atoms with an aromatic bond and everything else with a single
 * bond. Stereo markers, charges, isotopes and atom classes are rejected.
 */

#pragma once

#include "molddpm/molgraph.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace molddpm {

enum class BondKind : int { None = 0, Single = 1, Double = 2, Triple = 3, Aromatic = 4 };

class AtomAlphabet {
 public:
  /// B C N O P S F Cl Br I b c n o p s, in that order (K = 16).
  static AtomAlphabet standard();
  /// Throws InvalidConfig on duplicates, empty input, or symbols outside the
  /// supported set.
  explicit AtomAlphabet(std::vector<std::string> symbols);

  int size() const { return static_cast<int>(symbols_.size()); }
  const std::vector<std::string>& symbols() const { return symbols_; }
  const std::string& symbol(int index) const { return symbols_.at(static_cast<std::size_t>(index)); }
  std::optional<int> index_of(std::string_view symbol) const;
  bool is_aromatic(int index) const;

  friend bool operator==(const AtomAlphabet&, const AtomAlphabet&) = default;

 private:
  std::vector<std::string> symbols_;
};

/// none, single, double, triple, aromatic (L = 5); index 0 is always none.
struct BondAlphabet {
  static constexpr int size() { return 5; }
  static std::string_view name(int index);
};

enum class TokenKind { Atom, Bond, BranchOpen, BranchClose, RingBond, Dot };

struct SmilesToken {
  TokenKind kind = TokenKind::Atom;
  std::string text;       // source spelling
  std::size_t position = 0;
  int atom = -1;          // alphabet index for Atom tokens
  BondKind bond = BondKind::None;
  int ring = -1;          // ring-closure number for RingBond tokens
};

std::vector<SmilesToken> tokenize(std::string_view text,
                                  const AtomAlphabet& alphabet = AtomAlphabet::standard());

MolecularGraph parse_smiles(std::string_view text,
                            const AtomAlphabet& alphabet = AtomAlphabet::standard());

struct WrittenSmiles {
  std::string text;
  /// order[k] is the graph node written as the k-th atom, so
  /// parse_smiles(text) == graph.permuted(order).
  std::vector<int> order;
};

/// Depth-first from the lowest-index unvisited node, neighbours in index
/// order, components joined with '.'. Throws UnserializableGraph when more
/// than 99 ring closures would be open at once.
WrittenSmiles write_smiles_ordered(const MolecularGraph& graph,
                                   const AtomAlphabet& alphabet = AtomAlphabet::standard());

std::string write_smiles(const MolecularGraph& graph,
                         const AtomAlphabet& alphabet = AtomAlphabet::standard());

/// Atoms whose bond-order sum exceeds their largest common valence.
/// Informational only; parsing never fails on valence.
std::vector<std::string> valence_warnings(const MolecularGraph& graph,
                                          const AtomAlphabet& alphabet = AtomAlphabet::standard());

}  // namespace molddpm

#pragma once

// Random direct-sum decompositions of the tangent space of R^D with
// non-constant frames, used to exercise the glueing construction.

#include <random>
#include <vector>

#include "sodegeo/glue.hpp"
#include "sodegeo/linalg.hpp"

namespace toy {

using namespace sodegeo;

/// Random polynomial of degree <= 2 in the coordinate jets.
inline Jet random_function(std::mt19937_64& rng, const std::vector<Jet>& z, double amplitude = 1.0) {
  std::uniform_real_distribution<double> u(-amplitude, amplitude);
  Jet f(u(rng));
  for (std::size_t i = 0; i < z.size(); ++i) {
    f += u(rng) * z[i];
    for (std::size_t j = i; j < z.size(); ++j) f += (0.5 * u(rng)) * (z[i] * z[j]);
  }
  return f;
}

inline VectorGerm random_field(std::mt19937_64& rng, const std::vector<Jet>& z, double amplitude = 1.0) {
  VectorGerm v;
  for (std::size_t i = 0; i < z.size(); ++i) v.push_back(toy::random_function(rng, z, amplitude));
  return v;
}

enum class DerivativeKind {
  kBracketTransfer,   // J+([X, J(Y)]) through another block
  kCoefficientTable,  // X(w^k(Y)) e_k + w^l(Y) C^k_l(X) e_k, k, l in the block
  kLeaking,           // coefficient table plus components outside the block
};

struct Decomposition {
  std::vector<double> point;
  std::vector<Jet> z;
  std::vector<VectorGerm> frame;      // e_k
  std::vector<CovectorGerm> coframe;  // w^k
  std::vector<std::vector<int>> blocks;
  std::vector<DerivativeKind> kinds;
  std::vector<GluePart> parts;

  VectorGerm project(std::size_t block, const VectorGerm& x) const { return parts[block].projector(x); }
};

namespace detail {

inline Endomorphism block_projector(const Decomposition& d, const std::vector<int>& block) {
  Endomorphism p(d.z.size());
  for (int k : block) p.add(d.frame[static_cast<std::size_t>(k)], d.coframe[static_cast<std::size_t>(k)]);
  return p;
}

}  // namespace detail

/// dim in [3, 6], 2 or 3 blocks. `leak_block` (if >= 0) gets a derivative
/// that does not preserve its image. The frame is a fixed function of the
/// rng state; `at` moves the evaluation point without changing it.
inline Decomposition make_decomposition(std::mt19937_64& rng, int dim, int nblocks, int leak_block = -1,
                                        bool prefer_bracket = true, const std::vector<double>* at = nullptr) {
  Decomposition d;
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < dim; ++i) d.point.push_back(0.5 * u(rng));
  if (at) d.point = *at;
  d.z = coordinate_jets(d.point, 3);

  Matrix<Jet> e(static_cast<std::size_t>(dim), std::vector<Jet>(static_cast<std::size_t>(dim)));
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) {
      e[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
          toy::random_function(rng, d.z, 0.15) + Jet(i == j ? 1.0 : 0.0);
    }
  }
  Matrix<Jet> inv = inverse(e);
  for (int k = 0; k < dim; ++k) {
    VectorGerm col;
    for (int i = 0; i < dim; ++i) col.push_back(e[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)]);
    d.frame.push_back(col);
    d.coframe.push_back(inv[static_cast<std::size_t>(k)]);
  }

  // Split 0..dim-1 into contiguous non-empty blocks.
  std::vector<int> cuts;
  while (static_cast<int>(cuts.size()) < nblocks - 1) {
    int c = 1 + static_cast<int>(rng() % static_cast<unsigned>(dim - 1));
    if (std::find(cuts.begin(), cuts.end(), c) == cuts.end()) cuts.push_back(c);
  }
  std::sort(cuts.begin(), cuts.end());
  int start = 0;
  for (int c : cuts) {
    std::vector<int> b;
    for (int k = start; k < c; ++k) b.push_back(k);
    d.blocks.push_back(b);
    start = c;
  }
  std::vector<int> last;
  for (int k = start; k < dim; ++k) last.push_back(k);
  d.blocks.push_back(last);

  const std::size_t D = static_cast<std::size_t>(dim);
  for (std::size_t a = 0; a < d.blocks.size(); ++a) {
    const auto& block = d.blocks[a];
    Endomorphism p = detail::block_projector(d, block);

    // Largest other block, for the transfer map.
    int partner = -1;
    for (std::size_t b = 0; b < d.blocks.size(); ++b) {
      if (b == a || d.blocks[b].size() < block.size()) continue;
      if (partner < 0 || d.blocks[b].size() > d.blocks[static_cast<std::size_t>(partner)].size()) {
        partner = static_cast<int>(b);
      }
    }

    DerivativeKind kind = DerivativeKind::kCoefficientTable;
    if (static_cast<int>(a) == leak_block) kind = DerivativeKind::kLeaking;
    else if (prefer_bracket && partner >= 0) kind = DerivativeKind::kBracketTransfer;
    d.kinds.push_back(kind);

    Connection nabla;
    if (kind == DerivativeKind::kBracketTransfer) {
      Endomorphism j(D), jplus(D);
      const auto& target = d.blocks[static_cast<std::size_t>(partner)];
      for (std::size_t r = 0; r < block.size(); ++r) {
        auto k = static_cast<std::size_t>(block[r]);
        auto m = static_cast<std::size_t>(target[r]);
        j.add(d.frame[m], d.coframe[k]);
        jplus.add(d.frame[k], d.coframe[m]);
      }
      nabla = [j, jplus](const VectorGerm& x, const VectorGerm& y) { return jplus(lie_bracket(x, j(y))); };
    } else {
      // C^k_l(X) = sum_i c_{kli} X^i with polynomial coefficients.
      struct Entry {
        std::size_t k, l;
        CovectorGerm form;
      };
      std::vector<Entry> table;
      std::vector<int> targets = block;
      if (kind == DerivativeKind::kLeaking) {
        for (int k = 0; k < dim; ++k) {
          if (std::find(block.begin(), block.end(), k) == block.end()) targets.push_back(k);
        }
      }
      for (int k : targets) {
        for (int l : block) {
          table.push_back({static_cast<std::size_t>(k), static_cast<std::size_t>(l), toy::random_field(rng, d.z, 0.5)});
        }
      }
      auto frame = d.frame;
      auto coframe = d.coframe;
      auto block_copy = block;
      nabla = [frame, coframe, block_copy, table, D](const VectorGerm& x, const VectorGerm& y) {
        VectorGerm r = zero_vector(D);
        for (int k : block_copy) {
          auto kk = static_cast<std::size_t>(k);
          r += directional(x, pair(coframe[kk], y)) * frame[kk];
        }
        for (const auto& t : table) r += (pair(coframe[t.l], y) * pair(t.form, x)) * frame[t.k];
        return r;
      };
    }
    d.parts.push_back({p, nabla, "block" + std::to_string(a)});
  }
  return d;
}

}  // namespace toy

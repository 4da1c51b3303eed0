#pragma once

#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace grushinlab {

// Exponent vector on phase space R^{2n}: entries 0..n-1 are x-exponents,
// entries n..2n-1 are xi-exponents.
struct MultiIndex {
  std::vector<int> e;

  MultiIndex() = default;
  explicit MultiIndex(std::size_t len) : e(len, 0) {}
  MultiIndex(std::initializer_list<int> init) : e(init) {}
  explicit MultiIndex(std::vector<int> init) : e(std::move(init)) {}

  std::size_t size() const { return e.size(); }
  int operator[](std::size_t i) const { return e[i]; }
  int& operator[](std::size_t i) { return e[i]; }

  int degree() const { return std::accumulate(e.begin(), e.end(), 0); }

  bool operator==(const MultiIndex& o) const { return e == o.e; }
  bool operator!=(const MultiIndex& o) const { return e != o.e; }

  MultiIndex plus(const MultiIndex& o) const {
    MultiIndex r(*this);
    for (std::size_t i = 0; i < e.size(); ++i) r.e[i] += o.e[i];
    return r;
  }

  // Decrement entry i; throws if already zero.
  MultiIndex minus_unit(std::size_t i) const {
    if (e[i] == 0) throw std::logic_error("MultiIndex: exponent underflow");
    MultiIndex r(*this);
    --r.e[i];
    return r;
  }

  std::string str() const {
    std::string s = "(";
    for (std::size_t i = 0; i < e.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(e[i]);
    }
    return s + ")";
  }
};

// Graded lexicographic order: first by total degree, ties broken
// lexicographically. Deterministic across runs; used as the canonical
// term order everywhere.
struct GradedLexLess {
  bool operator()(const MultiIndex& a, const MultiIndex& b) const {
    const int da = a.degree(), db = b.degree();
    if (da != db) return da < db;
    return a.e < b.e;
  }
};

}  // namespace grushinlab

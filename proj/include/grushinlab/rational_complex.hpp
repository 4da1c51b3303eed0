#pragma once

#include <boost/rational.hpp>
#include <complex>
#include <cstdint>
#include <string>

namespace grushinlab {

// Exact Gaussian-rational scalar for the symbol layer. Numerators stay tiny
// in the star-product tests, so 64-bit rationals suffice.
struct RationalComplex {
  using Rat = boost::rational<long long>;
  Rat re{0}, im{0};

  RationalComplex() = default;
  RationalComplex(Rat r, Rat i) : re(r), im(i) {}
  RationalComplex(Rat r) : re(r), im(0) {}        // NOLINT(runtime/explicit)
  RationalComplex(long long r) : re(r), im(0) {}  // NOLINT(runtime/explicit)

  static RationalComplex i_unit() { return {Rat(0), Rat(1)}; }

  RationalComplex operator+(const RationalComplex& o) const { return {re + o.re, im + o.im}; }
  RationalComplex operator-(const RationalComplex& o) const { return {re - o.re, im - o.im}; }
  RationalComplex operator-() const { return {-re, -im}; }
  RationalComplex operator*(const RationalComplex& o) const {
    return {re * o.re - im * o.im, re * o.im + im * o.re};
  }
  RationalComplex operator/(const RationalComplex& o) const {
    const Rat n = o.re * o.re + o.im * o.im;
    return {(re * o.re + im * o.im) / n, (im * o.re - re * o.im) / n};
  }
  RationalComplex& operator+=(const RationalComplex& o) { return *this = *this + o; }
  RationalComplex& operator*=(const RationalComplex& o) { return *this = *this * o; }

  bool operator==(const RationalComplex& o) const { return re == o.re && im == o.im; }
  bool operator!=(const RationalComplex& o) const { return !(*this == o); }

  bool is_zero() const { return re == Rat(0) && im == Rat(0); }

  std::complex<double> to_complex() const {
    return {boost::rational_cast<double>(re), boost::rational_cast<double>(im)};
  }

  std::string str() const {
    auto rs = [](const Rat& r) {
      std::string s = std::to_string(r.numerator());
      if (r.denominator() != 1) s += "/" + std::to_string(r.denominator());
      return s;
    };
    return rs(re) + (im >= Rat(0) ? "+" : "") + rs(im) + "i";
  }
};

using Rat = RationalComplex::Rat;

}  // namespace grushinlab

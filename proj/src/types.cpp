#include "bandinv/types.hpp"

#include <numeric>
#include <sstream>
#include <stdexcept>

namespace bandinv {

IVec operator+(const IVec& a, const IVec& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dimension mismatch");
  IVec r(a.size());
  for (size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

IVec operator-(const IVec& a, const IVec& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dimension mismatch");
  IVec r(a.size());
  for (size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

IVec operator-(const IVec& a) {
  IVec r(a.size());
  for (size_t i = 0; i < a.size(); ++i) r[i] = -a[i];
  return r;
}

IVec operator*(long long s, const IVec& a) {
  IVec r(a.size());
  for (size_t i = 0; i < a.size(); ++i) r[i] = s * a[i];
  return r;
}

bool is_zero(const IVec& a) {
  for (auto x : a)
    if (x != 0) return false;
  return true;
}

long long gcd_of(const IVec& a) {
  long long g = 0;
  for (auto x : a) g = std::gcd(g, x < 0 ? -x : x);
  return g;
}

std::string to_string(const IVec& a) {
  std::ostringstream os;
  os << '(';
  for (size_t i = 0; i < a.size(); ++i) os << (i ? "," : "") << a[i];
  os << ')';
  return os.str();
}

}  // namespace bandinv

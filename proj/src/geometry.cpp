#include "adams/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace adams {

namespace {

void require_same_dim(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("vector dimension mismatch: " +
                                std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()));
  }
}

}  // namespace

double dot(const Vector& a, const Vector& b) {
  require_same_dim(a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(const Vector& a) { return std::sqrt(dot(a, a)); }

Vector l2_normalize(const Vector& v) {
  const double n = norm(v);
  if (n < kZeroNormEps) {
    throw std::domain_error("cannot normalize a zero-norm vector");
  }
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / n;
  return out;
}

double cosine_similarity(const Vector& a, const Vector& b) {
  require_same_dim(a, b);
  const double na = norm(a);
  const double nb = norm(b);
  if (na < kZeroNormEps || nb < kZeroNormEps) {
    throw std::domain_error("cosine similarity of a zero-norm vector");
  }
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

std::pair<Vector, Vector> cosine_similarity_grad(const Vector& a,
                                                 const Vector& b) {
  require_same_dim(a, b);
  const double na = norm(a);
  const double nb = norm(b);
  if (na < kZeroNormEps || nb < kZeroNormEps) {
    throw std::domain_error("cosine similarity of a zero-norm vector");
  }
  const double inv = 1.0 / (na * nb);
  const double s = dot(a, b) * inv;
  Vector da(a.size()), db(b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    da[i] = b[i] * inv - s * a[i] / (na * na);
    db[i] = a[i] * inv - s * b[i] / (nb * nb);
  }
  return {std::move(da), std::move(db)};
}

}  // namespace adams

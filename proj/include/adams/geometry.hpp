#pragma once

#include <utility>
#include <vector>

namespace adams {

// Dense 64-bit vector. Acoustic embeddings x and text proxies t are
// plain Vectors; everything downstream assumes finite entries.
using Vector = std::vector<double>;

// Norms below this are treated as zero (domain error on normalize /
// cosine).
inline constexpr double kZeroNormEps = 1e-12;

double dot(const Vector& a, const Vector& b);
double norm(const Vector& a);

// v / ||v||. Throws std::domain_error when ||v|| < kZeroNormEps.
Vector l2_normalize(const Vector& v);

// dot(a,b) / (||a|| ||b||), clamped to [-1, 1].
// Throws std::invalid_argument on dimension mismatch and
// std::domain_error on a zero-norm input.
double cosine_similarity(const Vector& a, const Vector& b);

// (dS/da, dS/db) for S = cosine_similarity(a, b):
//   dS/da = b / (||a|| ||b||) - S * a / ||a||^2, and symmetrically for b.
std::pair<Vector, Vector> cosine_similarity_grad(const Vector& a,
                                                 const Vector& b);

}  // namespace adams

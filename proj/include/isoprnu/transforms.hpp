#pragma once

#include <cstddef>
#include <vector>

#include "isoprnu/plane.hpp"

namespace isoprnu {

/// Orthonormal type-II DCT basis of size n: row k holds basis vector k.
const std::vector<double>& dct_basis(std::size_t n);

/// 2-D orthonormal DCT-II of a square n x n plane.
Plane dct2(const Plane& block);
/// Inverse of dct2 (orthonormal DCT-III).
Plane idct2(const Plane& coeffs);

/// One level of a periodic 2-D orthogonal wavelet transform (8-tap Daubechies).
/// Dimensions must be even. Subbands are laid out in quadrants: LL top-left,
/// horizontal detail top-right, vertical detail bottom-left, diagonal bottom-right.
void dwt2_level(Plane& p, std::size_t height, std::size_t width);
void idwt2_level(Plane& p, std::size_t height, std::size_t width);

/// Circular 2-D autocorrelation of a zero-mean plane, un-normalized; lag (0,0) at index (0,0).
Plane circular_autocorrelation(const Plane& p);

}  // namespace isoprnu

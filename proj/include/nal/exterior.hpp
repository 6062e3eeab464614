#pragma once

#include <bit>
#include <complex>
#include <cstdint>
#include <vector>

namespace nal {

using Mask = std::uint32_t;

inline int popcount(Mask m) { return std::popcount(m); }

// Sign of e_a ^ e_b relative to the increasing-order basis element e_{a|b}; 0 if they overlap.
inline int wedge_sign(Mask a, Mask b) {
    if (a & b) return 0;
    int swaps = 0;
    Mask bb = b;
    while (bb) {
        int j = std::countr_zero(bb);
        bb &= bb - 1;
        swaps += popcount(a >> (j + 1));
    }
    return (swaps & 1) ? -1 : 1;
}

// Sign of the interior product of d/dx_k into e_I (k in I), removing index k.
inline int contraction_sign(Mask I, int k) {
    int below = popcount(I & ((Mask(1) << k) - 1));
    return (below & 1) ? -1 : 1;
}

// Dense element of the exterior algebra on n generators, indexed by mask.
using Dense = std::vector<std::complex<double>>;

struct TwoFormEntry {
    int i, j;  // i < j
    std::complex<double> v;
};

// Dense exp of a 2-form (even, nilpotent).
Dense exp_two_form(const std::vector<TwoFormEntry>& omega, int n);

// Pfaffian of an antisymmetric matrix given as row-major 2m x 2m array.
std::complex<double> pfaffian(const std::vector<std::complex<double>>& a, int size);

// Component of exp(omega) on the basis element e_J: the Pfaffian of omega restricted to J.
std::complex<double> exp_component(const std::vector<std::complex<double>>& omega_full, int n, Mask J);

}  // namespace nal

#pragma once

#include <array>

#include "bellsim/core.hpp"

namespace bellsim {

// One CHSH inequality instance: two settings per party and the position of
// the minus sign among the four terms
//   0: (xa, yb)   1: (xa, yb2)   2: (xa2, yb)   3: (xa2, yb2).
// All indices are 0-based. `value` holds |E(xa,yb) +- ... | for the stored
// sign pattern; local models obey value <= 2.
struct ChshWitness {
    int xa = 0;
    int xa2 = 1;
    int yb = 0;
    int yb2 = 1;
    int minus_pos = 0;
    double value = 0.0;
};

/// Signed CHSH sum of witness w on E (all four terms +, except minus_pos).
double chsh_value(const CorrelatorMatrix& e, const ChshWitness& w);

// Witness maximizing |chsh_value| over all row pairs, column pairs and the
// four minus positions ((m choose 2)^2 * 4 inequalities; 36 when m = 3).
// Ties break to the lexicographically smallest (xa, xa2, yb, yb2, minus_pos).
ChshWitness chsh_max(const CorrelatorMatrix& e);

// Result of reducing a 3x3 orthogonal-up-to-scale correlator matrix to the
// normal form with matrix[2][2] the largest entry in absolute value,
// matrix[0][0] >= matrix[1][1] > 0, matrix[0][1] <= 0, matrix[1][0] >= 0,
// and the first nonzero of (matrix[2][0], matrix[2][1], matrix[0][2],
// matrix[1][2]) positive; the last two conditions resolve the residual
// relabeling freedom, making the form unique for generic inputs.
// The transform record satisfies
//   matrix[i][j] = row_signs[i] * col_signs[j] * original[row_perm[i]][col_perm[j]].
struct CanonicalForm {
    CorrelatorMatrix matrix{3, 3};
    std::array<int, 3> row_perm{0, 1, 2};   // canonical row -> original row
    std::array<int, 3> col_perm{0, 1, 2};   // canonical col -> original col
    std::array<int, 3> row_signs{1, 1, 1};
    std::array<int, 3> col_signs{1, 1, 1};
};

// Deterministic reduction to the normal form above by relabeling settings
// and outcomes (row/column permutations and sign flips). Requires E^T E to
// be a positive multiple of the identity within 1e-6; throws
// std::invalid_argument naming the violated tolerance otherwise.
CanonicalForm canonicalize(const CorrelatorMatrix& e);

// Constructive violation certificate: the CHSH witness that reads
// E11 + E21 - E12 + E22 >= 2 in canonical coordinates, mapped back to the
// original setting indices. For correlators of two measurement triads at
// unit visibility its value is >= 2, with equality exactly when the triads
// are aligned. Requires E^T E = I within 1e-6.
ChshWitness proof_witness(const CorrelatorMatrix& e);

/// True iff the dot-product matrix A[x].B[y] is a signed permutation matrix
/// within tol (each of Alice's directions is +-1 of one of Bob's).
bool is_aligned(const Triad& a, const Triad& b, double tol);

}  // namespace bellsim

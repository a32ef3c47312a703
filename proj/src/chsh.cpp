#include "bellsim/chsh.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace bellsim {

namespace {

double signed_sum(double t0, double t1, double t2, double t3, int minus_pos) {
    // Fixed association order so equal witnesses produce bit-equal values.
    return (minus_pos == 0 ? -t0 : t0) + (minus_pos == 1 ? -t1 : t1) +
           (minus_pos == 2 ? -t2 : t2) + (minus_pos == 3 ? -t3 : t3);
}

// Scale c and max deviation of E^T E from c*I for a 3x3 matrix.
struct OrthoCheck {
    double scale;
    double deviation;
};

OrthoCheck orthogonality_check(const CorrelatorMatrix& e) {
    double g[3][3];
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k) s += e.at(k, i) * e.at(k, j);
            g[i][j] = s;
        }
    }
    const double c = (g[0][0] + g[1][1] + g[2][2]) / 3.0;
    double dev = 0.0;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            dev = std::max(dev, std::abs(g[i][j] - (i == j ? c : 0.0)));
        }
    }
    return {c, dev};
}

// Working state for the reduction: matrix plus the transform record.
struct Reduction {
    CanonicalForm f;

    explicit Reduction(const CorrelatorMatrix& e) {
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) f.matrix.at(i, j) = e.at(i, j);
    }

    double at(int i, int j) const { return f.matrix.at(i, j); }

    void swap_rows(int i, int j) {
        if (i == j) return;
        for (int c = 0; c < 3; ++c)
            std::swap(f.matrix.at(i, c), f.matrix.at(j, c));
        std::swap(f.row_perm[i], f.row_perm[j]);
        std::swap(f.row_signs[i], f.row_signs[j]);
    }

    void swap_cols(int i, int j) {
        if (i == j) return;
        for (int r = 0; r < 3; ++r)
            std::swap(f.matrix.at(r, i), f.matrix.at(r, j));
        std::swap(f.col_perm[i], f.col_perm[j]);
        std::swap(f.col_signs[i], f.col_signs[j]);
    }

    void flip_row(int i) {
        for (int c = 0; c < 3; ++c) f.matrix.at(i, c) = -f.matrix.at(i, c);
        f.row_signs[i] = -f.row_signs[i];
    }

    void flip_col(int j) {
        for (int r = 0; r < 3; ++r) f.matrix.at(r, j) = -f.matrix.at(r, j);
        f.col_signs[j] = -f.col_signs[j];
    }
};

}  // namespace

double chsh_value(const CorrelatorMatrix& e, const ChshWitness& w) {
    const auto in_rows = [&](int i) {
        return i >= 0 && static_cast<std::size_t>(i) < e.rows();
    };
    const auto in_cols = [&](int j) {
        return j >= 0 && static_cast<std::size_t>(j) < e.cols();
    };
    if (!in_rows(w.xa) || !in_rows(w.xa2) || !in_cols(w.yb) || !in_cols(w.yb2) ||
        w.xa == w.xa2 || w.yb == w.yb2 || w.minus_pos < 0 || w.minus_pos > 3) {
        throw std::invalid_argument("chsh_value: witness indices out of bounds");
    }
    return signed_sum(e.at(w.xa, w.yb), e.at(w.xa, w.yb2), e.at(w.xa2, w.yb),
                      e.at(w.xa2, w.yb2), w.minus_pos);
}

ChshWitness chsh_max(const CorrelatorMatrix& e) {
    const int rows = static_cast<int>(e.rows());
    const int cols = static_cast<int>(e.cols());
    if (rows < 2 || cols < 2) {
        throw std::invalid_argument("chsh_max: need at least 2 settings per party");
    }
    ChshWitness best;
    best.value = -1.0;
    for (int xa = 0; xa < rows; ++xa) {
        for (int xa2 = xa + 1; xa2 < rows; ++xa2) {
            for (int yb = 0; yb < cols; ++yb) {
                for (int yb2 = yb + 1; yb2 < cols; ++yb2) {
                    const double t0 = e.at(xa, yb);
                    const double t1 = e.at(xa, yb2);
                    const double t2 = e.at(xa2, yb);
                    const double t3 = e.at(xa2, yb2);
                    for (int p = 0; p < 4; ++p) {
                        const double v = std::abs(signed_sum(t0, t1, t2, t3, p));
                        if (v > best.value) {
                            best = ChshWitness{xa, xa2, yb, yb2, p, v};
                        }
                    }
                }
            }
        }
    }
    return best;
}

CanonicalForm canonicalize(const CorrelatorMatrix& e) {
    if (e.rows() != 3 || e.cols() != 3) {
        throw std::invalid_argument("canonicalize: matrix must be 3x3");
    }
    const auto check = orthogonality_check(e);
    if (!(check.scale > 0.0) || check.deviation > 1e-6) {
        throw std::invalid_argument(
            "canonicalize: E^T E deviates from c*I by " +
            std::to_string(check.deviation) + ", exceeding tolerance 1e-6");
    }

    Reduction r(e);

    // Largest |entry| to position (2,2); ties to the smallest (row, col).
    int bi = 0, bj = 0;
    double bmag = -1.0;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            const double m = std::abs(r.at(i, j));
            if (m > bmag) {
                bmag = m;
                bi = i;
                bj = j;
            }
        }
    }
    r.swap_rows(bi, 2);
    r.swap_cols(bj, 2);
    if (r.at(2, 2) < 0.0) r.flip_row(2);

    // Arrange the upper-left block so its diagonal stays away from zero;
    // for orthogonal inputs at most one arrangement can have a zero there.
    const double d_diag = std::min(std::abs(r.at(0, 0)), std::abs(r.at(1, 1)));
    const double d_anti = std::min(std::abs(r.at(0, 1)), std::abs(r.at(1, 0)));
    if (d_anti > d_diag) r.swap_cols(0, 1);

    if (r.at(0, 0) < 0.0) r.flip_row(0);
    if (r.at(1, 1) < 0.0) r.flip_row(1);

    // Off-diagonal sign convention: E12 <= 0 <= E21. Flipping row 1 and
    // column 1 together negates both while leaving the diagonal alone.
    if (r.at(0, 1) > r.at(1, 0)) {
        r.flip_row(1);
        r.flip_col(1);
    }

    // Two residual symmetries remain that the constraints so far do not see.
    // First: swapping both block rows and block columns and then flipping the
    // new row 1 and column 1 exchanges the two diagonal entries while keeping
    // every sign condition. Order the diagonal to fix it.
    if (r.at(0, 0) < r.at(1, 1)) {
        r.swap_rows(0, 1);
        r.swap_cols(0, 1);
        r.flip_row(1);
        r.flip_col(1);
    }

    // Second: flipping row 2 and column 2 together
    // preserves everything pinned so far but negates the four entries that
    // border the corner. Fix it so the first nonzero of them is positive,
    // making the form independent of how the input was labeled.
    const double border[4] = {r.at(2, 0), r.at(2, 1), r.at(0, 2), r.at(1, 2)};
    for (double v : border) {
        if (v != 0.0) {
            if (v < 0.0) {
                r.flip_row(2);
                r.flip_col(2);
            }
            break;
        }
    }

    return r.f;
}

ChshWitness proof_witness(const CorrelatorMatrix& e) {
    if (e.rows() != 3 || e.cols() != 3) {
        throw std::invalid_argument("proof_witness: matrix must be 3x3");
    }
    const auto check = orthogonality_check(e);
    if (std::abs(check.scale - 1.0) > 1e-6) {
        throw std::invalid_argument(
            "proof_witness: E^T E scale " + std::to_string(check.scale) +
            " deviates from 1 beyond tolerance 1e-6; rescale to unit visibility");
    }
    const CanonicalForm cf = canonicalize(e);

    // Certificate C00 + C10 - C01 + C11 >= 2 in canonical coordinates;
    // express each canonical term as a sign on an original entry.
    const int coeff[2][2] = {{+1, -1}, {+1, +1}};
    int sgn[4];
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            sgn[2 * i + j] = coeff[i][j] * cf.row_signs[i] * cf.col_signs[j];
        }
    }
    int n_minus = 0;
    for (int k = 0; k < 4; ++k) n_minus += (sgn[k] < 0);
    if (n_minus == 3) {
        for (int& s : sgn) s = -s;  // overall sign does not change |value|
        n_minus = 1;
    }
    ChshWitness w;
    w.xa = cf.row_perm[0];
    w.xa2 = cf.row_perm[1];
    w.yb = cf.col_perm[0];
    w.yb2 = cf.col_perm[1];
    for (int k = 0; k < 4; ++k) {
        if (sgn[k] < 0) w.minus_pos = k;
    }
    if (w.xa > w.xa2) {
        std::swap(w.xa, w.xa2);
        w.minus_pos ^= 2;
    }
    if (w.yb > w.yb2) {
        std::swap(w.yb, w.yb2);
        w.minus_pos ^= 1;
    }
    w.value = std::abs(chsh_value(e, w));
    return w;
}

bool is_aligned(const Triad& a, const Triad& b, double tol) {
    if (!(tol > 0.0)) {
        throw std::invalid_argument("is_aligned: tol must be positive");
    }
    bool col_used[3] = {false, false, false};
    for (int x = 0; x < 3; ++x) {
        int jbest = 0;
        double mbest = -1.0;
        for (int y = 0; y < 3; ++y) {
            const double m = std::abs(dot(a[x], b[y]));
            if (m > mbest) {
                mbest = m;
                jbest = y;
            }
        }
        if (std::abs(mbest - 1.0) > tol) return false;
        for (int y = 0; y < 3; ++y) {
            if (y != jbest && std::abs(dot(a[x], b[y])) > tol) return false;
        }
        if (col_used[jbest]) return false;
        col_used[jbest] = true;
    }
    return true;
}

}  // namespace bellsim

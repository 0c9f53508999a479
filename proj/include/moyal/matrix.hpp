#pragma once

#include <complex>

#include <Eigen/Dense>

namespace moyal {

using CMatrix = Eigen::MatrixXcd;
using Complex = std::complex<double>;

// A Hermitian matrix on the truncated index range 0..n. Entries are stored
// densely; callers that fill only the upper triangle should finish with
// hermitize().
struct HermitianField {
    CMatrix m;

    HermitianField() = default;
    explicit HermitianField(int cutoff) : m(CMatrix::Zero(cutoff + 1, cutoff + 1)) {}
    explicit HermitianField(CMatrix mat) : m(std::move(mat)) {}

    int cutoff() const { return static_cast<int>(m.rows()) - 1; }

    Complex& operator()(int i, int j) { return m(i, j); }
    const Complex& operator()(int i, int j) const { return m(i, j); }

    // max |c_mn - conj(c_nm)|
    double hermiticity_defect() const;

    // Overwrites with (m + m^dagger)/2.
    void hermitize() { m = ((m + m.adjoint()) / 2.0).eval(); }

    bool all_finite() const { return m.allFinite(); }
};

// Truncated matrix product, sum over k = 0..cutoff. Not Hermitian in
// general; callers needing Hermiticity must check.
inline CMatrix matmul(const CMatrix& a, const CMatrix& b) { return a * b; }

// tr(a b) = sum_{m,n} a_mn b_nm.
Complex trace_pair(const CMatrix& a, const CMatrix& b);

} // namespace moyal

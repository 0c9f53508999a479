#include "moyal/matrix.hpp"

namespace moyal {

double HermitianField::hermiticity_defect() const {
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

Complex trace_pair(const CMatrix& a, const CMatrix& b) {
    Complex s = 0.0;
    const auto n = a.rows();
    for (Eigen::Index m = 0; m < n; ++m)
        for (Eigen::Index k = 0; k < a.cols(); ++k) s += a(m, k) * b(k, m);
    return s;
}

} // namespace moyal

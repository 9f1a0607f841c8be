#pragma once

#include <string>
#include <vector>

#include <lapacke.h>

#include "susyopt/errors.hpp"

namespace susyopt::detail {

/// Column-major n x n eigenvectors, eigenvalues ascending.
struct SymmetricEigenpairs {
    std::size_t n = 0;       // matrix dimension
    std::size_t count = 0;   // number of eigenpairs
    std::vector<double> values;
    std::vector<double> vectors;  // n * count, column j is eigenvector j

    const double* vector(std::size_t j) const { return vectors.data() + j * n; }
};

inline void check_info(lapack_int info, const char* routine) {
    if (info != 0) {
        throw NumericalError(std::string(routine) + " failed with info = " + std::to_string(info));
    }
}

/// Full eigendecomposition of a dense symmetric matrix (divide and conquer).
inline SymmetricEigenpairs symmetric_eigen(std::vector<double> matrix, std::size_t n) {
    SymmetricEigenpairs out;
    out.n = n;
    out.count = n;
    out.values.resize(n);
    const auto ln = static_cast<lapack_int>(n);
    check_info(LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'U', ln, matrix.data(), ln, out.values.data()),
               "dsyevd");
    out.vectors = std::move(matrix);
    return out;
}

/// The k lowest eigenpairs of a dense symmetric matrix.
inline SymmetricEigenpairs symmetric_eigen_lowest(std::vector<double> matrix, std::size_t n,
                                                  std::size_t k) {
    SymmetricEigenpairs out;
    out.n = n;
    out.values.resize(n);
    out.vectors.resize(n * k);
    const auto ln = static_cast<lapack_int>(n);
    lapack_int found = 0;
    std::vector<lapack_int> support(2 * k);
    check_info(LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'V', 'I', 'U', ln, matrix.data(), ln, 0.0, 0.0, 1,
                              static_cast<lapack_int>(k), 0.0, &found, out.values.data(),
                              out.vectors.data(), ln, support.data()),
               "dsyevr");
    out.count = static_cast<std::size_t>(found);
    out.values.resize(out.count);
    return out;
}

/// The k lowest eigenpairs of the symmetric tridiagonal matrix (diag, off).
inline SymmetricEigenpairs tridiagonal_eigen_lowest(std::vector<double> diag,
                                                    std::vector<double> off, std::size_t k) {
    const std::size_t n = diag.size();
    SymmetricEigenpairs out;
    out.n = n;
    out.values.resize(n);
    out.vectors.resize(n * k);
    off.resize(n);  // dstevr uses e as workspace of length n
    lapack_int found = 0;
    std::vector<lapack_int> support(2 * k);
    check_info(LAPACKE_dstevr(LAPACK_COL_MAJOR, 'V', 'I', static_cast<lapack_int>(n), diag.data(),
                              off.data(), 0.0, 0.0, 1, static_cast<lapack_int>(k), 0.0, &found,
                              out.values.data(), out.vectors.data(), static_cast<lapack_int>(n),
                              support.data()),
               "dstevr");
    out.count = static_cast<std::size_t>(found);
    out.values.resize(out.count);
    return out;
}

}  // namespace susyopt::detail

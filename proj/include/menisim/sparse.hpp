#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace menisim {

using Vector = Eigen::VectorXd;

struct Triplet {
    int row = 0, col = 0;
    double value = 0.0;
};

/// Accumulates (i, j, v) contributions during assembly. Duplicates are summed
/// when the CSR matrix is finalized.
class TripletList {
public:
    TripletList(int rows, int cols) : rows_(rows), cols_(cols) {}

    void add(int row, int col, double value);
    void append(const TripletList& other);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    const std::vector<Triplet>& entries() const { return entries_; }

private:
    int rows_, cols_;
    std::vector<Triplet> entries_;
};

/// Compressed-row sparse matrix, double precision, zero-based indices.
/// Column indices are strictly increasing within each row and duplicates are
/// summed at construction.
class SparseMatrix {
public:
    SparseMatrix() = default;
    static SparseMatrix from_triplets(const TripletList& triplets);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    int nonzeros() const { return static_cast<int>(values_.size()); }

    const std::vector<int>& row_offsets() const { return row_offsets_; }
    const std::vector<int>& col_indices() const { return col_indices_; }
    const std::vector<double>& values() const { return values_; }

    Vector multiply(const Vector& x) const;
    /// y += s * A x
    void multiply_add(const Vector& x, double s, Vector& y) const;
    double coeff(int row, int col) const;

    /// MatrixMarket coordinate format (1-based, general).
    void write_matrix_market(const std::string& path) const;

private:
    int rows_ = 0, cols_ = 0;
    std::vector<int> row_offsets_;
    std::vector<int> col_indices_;
    std::vector<double> values_;
};

inline SparseMatrix assemble(const TripletList& triplets) {
    return SparseMatrix::from_triplets(triplets);
}

} // namespace menisim

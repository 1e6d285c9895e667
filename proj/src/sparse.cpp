#include "menisim/sparse.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "menisim/common.hpp"

namespace menisim {

void TripletList::add(int row, int col, double value) {
    require(row >= 0 && row < rows_ && col >= 0 && col < cols_,
            "triplet index (" + std::to_string(row) + "," + std::to_string(col) +
                ") outside " + std::to_string(rows_) + "x" + std::to_string(cols_));
    entries_.push_back({row, col, value});
}

void TripletList::append(const TripletList& other) {
    require(other.rows_ == rows_ && other.cols_ == cols_, "triplet list shape mismatch");
    entries_.insert(entries_.end(), other.entries_.begin(), other.entries_.end());
}

SparseMatrix SparseMatrix::from_triplets(const TripletList& triplets) {
    SparseMatrix m;
    m.rows_ = triplets.rows();
    m.cols_ = triplets.cols();

    // Stable counting sort by row, then in-row sort by column; equal (i,j)
    // pairs are summed in their insertion order so assembly is deterministic.
    std::vector<int> count(m.rows_ + 1, 0);
    for (const auto& t : triplets.entries()) count[t.row + 1]++;
    std::partial_sum(count.begin(), count.end(), count.begin());
    std::vector<Triplet> sorted(triplets.entries().size());
    {
        std::vector<int> cursor(count.begin(), count.end() - 1);
        for (const auto& t : triplets.entries()) sorted[cursor[t.row]++] = t;
    }
    m.row_offsets_.assign(m.rows_ + 1, 0);
    for (int r = 0; r < m.rows_; ++r) {
        auto first = sorted.begin() + count[r];
        auto last = sorted.begin() + count[r + 1];
        std::stable_sort(first, last,
                         [](const Triplet& a, const Triplet& b) { return a.col < b.col; });
        for (auto it = first; it != last;) {
            double v = it->value;
            const int col = it->col;
            ++it;
            while (it != last && it->col == col) {
                v += it->value;
                ++it;
            }
            m.col_indices_.push_back(col);
            m.values_.push_back(v);
        }
        m.row_offsets_[r + 1] = static_cast<int>(m.col_indices_.size());
    }
    return m;
}

Vector SparseMatrix::multiply(const Vector& x) const {
    Vector y = Vector::Zero(rows_);
    multiply_add(x, 1.0, y);
    return y;
}

void SparseMatrix::multiply_add(const Vector& x, double s, Vector& y) const {
    require(x.size() == cols_ && y.size() == rows_, "sparse multiply: dimension mismatch");
    for (int r = 0; r < rows_; ++r) {
        double acc = 0.0;
        for (int k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k)
            acc += values_[k] * x[col_indices_[k]];
        y[r] += s * acc;
    }
}

double SparseMatrix::coeff(int row, int col) const {
    for (int k = row_offsets_[row]; k < row_offsets_[row + 1]; ++k)
        if (col_indices_[k] == col) return values_[k];
    return 0.0;
}

void SparseMatrix::write_matrix_market(const std::string& path) const {
    std::FILE* f = std::fopen(path.c_str(), "w");
    require(f != nullptr, "cannot open " + path + " for writing");
    std::fprintf(f, "%%%%MatrixMarket matrix coordinate real general\n");
    std::fprintf(f, "%d %d %d\n", rows_, cols_, nonzeros());
    for (int r = 0; r < rows_; ++r)
        for (int k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k)
            std::fprintf(f, "%d %d %.17g\n", r + 1, col_indices_[k] + 1, values_[k]);
    std::fclose(f);
}

} // namespace menisim

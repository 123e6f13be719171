#pragma once

// Compressed sparse operator with coordinate-list assembly.

#include <cmath>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace cipfem {

using Vector = Eigen::VectorXd;

class SparseOperator {
public:
    using Matrix = Eigen::SparseMatrix<double>;

    SparseOperator() = default;
    SparseOperator(int rows, int cols) : m_(rows, cols) {}
    explicit SparseOperator(Matrix m) : m_(std::move(m)) { m_.makeCompressed(); }

    int rows() const noexcept { return static_cast<int>(m_.rows()); }
    int cols() const noexcept { return static_cast<int>(m_.cols()); }
    const Matrix& matrix() const noexcept { return m_; }

    Vector operator*(const Vector& x) const { return m_ * x; }
    double coeff(int i, int j) const { return m_.coeff(i, j); }
    SparseOperator transpose() const { return SparseOperator(Matrix(m_.transpose())); }
    double quadratic_form(const Vector& x) const { return x.dot(m_ * x); }

    /// max_ij |S_ij - S_ji|
    double asymmetry() const {
        const Matrix d = m_ - Matrix(m_.transpose());
        double r = 0.0;
        for (int k = 0; k < d.outerSize(); ++k) {
            for (Matrix::InnerIterator it(d, k); it; ++it) r = std::max(r, std::abs(it.value()));
        }
        return r;
    }

    Eigen::MatrixXd to_dense() const { return Eigen::MatrixXd(m_); }

    SparseOperator operator+(const SparseOperator& o) const { return SparseOperator(Matrix(m_ + o.m_)); }

private:
    Matrix m_;
};

/// Accumulates element contributions; duplicates are summed when finalised.
class TripletBuilder {
public:
    TripletBuilder(int rows, int cols) : rows_(rows), cols_(cols) {}

    void add(int i, int j, double v) {
        if (v != 0.0) triplets_.emplace_back(i, j, v);
    }

    template <class Local>
    void add_local(std::span<const int> row_dofs, std::span<const int> col_dofs, const Local& local) {
        for (std::size_t a = 0; a < row_dofs.size(); ++a) {
            for (std::size_t b = 0; b < col_dofs.size(); ++b) {
                add(row_dofs[a], col_dofs[b], local(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)));
            }
        }
    }

    SparseOperator finalize() const {
        SparseOperator::Matrix m(rows_, cols_);
        m.setFromTriplets(triplets_.begin(), triplets_.end());
        m.prune(0.0);
        return SparseOperator(std::move(m));
    }

private:
    int rows_;
    int cols_;
    std::vector<Eigen::Triplet<double>> triplets_;
};

/// Coordinate text dump: "row col value" per stored entry, 0-based.
inline void write_coordinate(std::ostream& os, const SparseOperator& op) {
    os.precision(17);
    os << "% " << op.rows() << ' ' << op.cols() << ' ' << op.matrix().nonZeros() << '\n';
    const auto& m = op.matrix();
    for (int k = 0; k < m.outerSize(); ++k) {
        for (SparseOperator::Matrix::InnerIterator it(m, k); it; ++it) {
            os << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
        }
    }
}

}  // namespace cipfem

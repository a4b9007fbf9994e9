#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rankenv {

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Which tail of a component counts as extreme.
enum class Side { LowerExtreme, UpperExtreme, TwoSided };

std::string to_string(Side s);
Side side_from_string(const std::string& s);

/// An (s+1) x d matrix of test vectors.  Row 0 holds the observed vector,
/// rows 1..s hold realizations generated under the null hypothesis.  Each
/// column carries its own side, so concatenated vectors can mix one-sided
/// and two-sided components.
struct TestMatrix {
    Matrix values;
    std::vector<Side> sides;

    TestMatrix() = default;
    TestMatrix(Matrix v, Side uniform_side)
        : values(std::move(v)), sides(values.cols(), uniform_side) {}
    TestMatrix(Matrix v, std::vector<Side> per_column)
        : values(std::move(v)), sides(std::move(per_column)) {}

    std::size_t n_rows() const { return values.rows(); }      // s+1
    std::size_t n_sim() const { return values.rows() - 1; }   // s
    std::size_t dim() const { return values.cols(); }         // d

    void validate() const;
};

inline void TestMatrix::validate() const {
    if (values.rows() < 2)
        throw std::invalid_argument("TestMatrix: need at least one simulated row (s >= 1)");
    if (values.cols() < 1)
        throw std::invalid_argument("TestMatrix: need at least one column (d >= 1)");
    if (sides.size() != values.cols())
        throw std::invalid_argument("TestMatrix: side vector length " + std::to_string(sides.size()) +
                                    " does not match d = " + std::to_string(values.cols()));
    for (std::size_t i = 0; i < values.rows(); ++i)
        for (std::size_t j = 0; j < values.cols(); ++j)
            if (!std::isfinite(values(i, j)))
                throw std::invalid_argument("TestMatrix: non-finite value at row " + std::to_string(i) +
                                            ", column " + std::to_string(j) + " (row 0 = observed)");
}

inline std::string to_string(Side s) {
    switch (s) {
        case Side::LowerExtreme: return "lower";
        case Side::UpperExtreme: return "upper";
        case Side::TwoSided: return "two";
    }
    return "two";
}

inline Side side_from_string(const std::string& s) {
    if (s == "lower") return Side::LowerExtreme;
    if (s == "upper") return Side::UpperExtreme;
    if (s == "two" || s == "two-sided" || s == "twosided") return Side::TwoSided;
    throw std::invalid_argument("unknown side '" + s + "' (expected lower|upper|two)");
}

}  // namespace rankenv

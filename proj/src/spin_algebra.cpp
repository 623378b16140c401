#include "coldex/spin_algebra.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "coldex/errors.hpp"

namespace coldex::spin {

namespace {

int index_of_m(int two_j, int two_m) { return (two_j - two_m) / 2; }

void check_spin(int two_j, const char* name) {
    if (two_j < 0)
        throw std::invalid_argument(std::string(name) + ": negative spin");
}

void check_projection(int two_j, int two_m, const char* name) {
    if (std::abs(two_m) > two_j)
        throw std::invalid_argument(std::string(name) + ": |m| exceeds j");
    if ((two_j - two_m) % 2 != 0)
        throw std::invalid_argument(std::string(name) + ": m and j differ by a non-integer");
}

// j(j+1) - m(m-1) = (j+m)(j-m+1), evaluated in twice-value units.
double lowering_factor(int two_j, int two_m) {
    return 0.25 * double(two_j + two_m) * double(two_j - two_m + 2);
}

} // namespace

void SpinSystem::validate() const {
    check_spin(two_s, "electron spin");
    check_spin(two_i1, "atom nuclear spin");
    check_spin(two_i2, "ion nuclear spin");
}

RealMatrix spin_z(int two_j) {
    check_spin(two_j, "spin_z");
    int d = two_j + 1;
    RealMatrix m = RealMatrix::Zero(d, d);
    for (int k = 0; k < d; ++k)
        m(k, k) = 0.5 * (two_j - 2 * k);
    return m;
}

RealMatrix spin_minus(int two_j) {
    check_spin(two_j, "spin_minus");
    int d = two_j + 1;
    RealMatrix m = RealMatrix::Zero(d, d);
    for (int k = 0; k + 1 < d; ++k) {
        int two_m = two_j - 2 * k;
        m(k + 1, k) = std::sqrt(lowering_factor(two_j, two_m));
    }
    return m;
}

RealMatrix spin_plus(int two_j) {
    return spin_minus(two_j).transpose();
}

CoupledBasis::CoupledBasis(int two_j1, int two_j2)
    : two_j1_(two_j1), two_j2_(two_j2) {
    check_spin(two_j1, "CoupledBasis j1");
    check_spin(two_j2, "CoupledBasis j2");
    const int d1 = two_j1 + 1;
    const int d2 = two_j2 + 1;
    dim_ = d1 * d2;
    columns_ = RealMatrix::Zero(dim_, dim_);
    labels_.reserve(dim_);

    auto product_index = [&](int two_m1, int two_m2) {
        return index_of_m(two_j1, two_m1) * d2 + index_of_m(two_j2, two_m2);
    };

    int col = 0;
    for (int two_big_j = two_j1 + two_j2; two_big_j >= std::abs(two_j1 - two_j2); two_big_j -= 2) {
        Eigen::VectorXd top = Eigen::VectorXd::Zero(dim_);
        if (two_big_j == two_j1 + two_j2) {
            top(product_index(two_j1, two_j2)) = 1.0;
        } else {
            // Highest-weight state of this multiplet: orthogonalize a seed
            // vector in the M = J sector against the higher multiplets.
            int two_m1_max = std::min(two_j1, two_big_j + two_j2);
            top(product_index(two_m1_max, two_big_j - two_m1_max)) = 1.0;
            for (int c = 0; c < col; ++c) {
                if (labels_[c].second != two_big_j)
                    continue;
                double overlap = columns_.col(c).dot(top);
                top -= overlap * columns_.col(c);
            }
            double nrm = top.norm();
            if (nrm < 1e-8)
                throw std::logic_error("CoupledBasis: degenerate top-state seed");
            top /= nrm;
            if (top(product_index(two_m1_max, two_big_j - two_m1_max)) < 0.0)
                top = -top;
        }

        columns_.col(col) = top;
        labels_.emplace_back(two_big_j, two_big_j);
        ++col;

        Eigen::VectorXd current = top;
        for (int two_big_m = two_big_j - 2; two_big_m >= -two_big_j; two_big_m -= 2) {
            Eigen::VectorXd lowered = Eigen::VectorXd::Zero(dim_);
            for (int i1 = 0; i1 < d1; ++i1) {
                for (int i2 = 0; i2 < d2; ++i2) {
                    double c = current(i1 * d2 + i2);
                    if (c == 0.0)
                        continue;
                    int two_m1 = two_j1 - 2 * i1;
                    int two_m2 = two_j2 - 2 * i2;
                    if (two_m1 > -two_j1)
                        lowered((i1 + 1) * d2 + i2) += c * std::sqrt(lowering_factor(two_j1, two_m1));
                    if (two_m2 > -two_j2)
                        lowered(i1 * d2 + i2 + 1) += c * std::sqrt(lowering_factor(two_j2, two_m2));
                }
            }
            lowered /= std::sqrt(lowering_factor(two_big_j, two_big_m + 2));
            columns_.col(col) = lowered;
            labels_.emplace_back(two_big_j, two_big_m);
            ++col;
            current = lowered;
        }
    }
    if (col != dim_)
        throw std::logic_error("CoupledBasis: incomplete coupled basis");
}

int CoupledBasis::column_of(int two_big_j, int two_big_m) const {
    for (int c = 0; c < dim_; ++c)
        if (labels_[c].first == two_big_j && labels_[c].second == two_big_m)
            return c;
    throw std::invalid_argument("CoupledBasis: (J, M) outside the coupled spectrum");
}

double CoupledBasis::coefficient(int two_m1, int two_m2, int two_big_j, int two_big_m) const {
    check_projection(two_j1_, two_m1, "clebsch_gordan m1");
    check_projection(two_j2_, two_m2, "clebsch_gordan m2");
    check_projection(two_big_j, two_big_m, "clebsch_gordan M");
    if (two_big_j > two_j1_ + two_j2_ || two_big_j < std::abs(two_j1_ - two_j2_))
        throw std::invalid_argument("clebsch_gordan: triangle rule violated");
    if (two_m1 + two_m2 != two_big_m)
        return 0.0;
    int row = index_of_m(two_j1_, two_m1) * (two_j2_ + 1) + index_of_m(two_j2_, two_m2);
    return columns_(row, column_of(two_big_j, two_big_m));
}

Eigen::VectorXd CoupledBasis::state(int two_big_j, int two_big_m) const {
    return columns_.col(column_of(two_big_j, two_big_m));
}

RealMatrix CoupledBasis::multiplet_projector(int two_big_j) const {
    RealMatrix p = RealMatrix::Zero(dim_, dim_);
    for (int two_big_m = two_big_j; two_big_m >= -two_big_j; two_big_m -= 2) {
        Eigen::VectorXd v = state(two_big_j, two_big_m);
        p += v * v.transpose();
    }
    return p;
}

double clebsch_gordan(int two_j1, int two_j2, int two_m1, int two_m2,
                      int two_big_j, int two_big_m) {
    CoupledBasis basis(two_j1, two_j2);
    return basis.coefficient(two_m1, two_m2, two_big_j, two_big_m);
}

Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

Matrix gerade_projector(const SpinSystem& sys) {
    sys.validate();
    if ((sys.two_i1 + sys.two_i2) % 2 != 0)
        throw std::invalid_argument("gerade_projector: total nuclear spin is not an integer");
    CoupledBasis nuclear(sys.two_i1, sys.two_i2);
    RealMatrix p = RealMatrix::Zero(nuclear.dim(), nuclear.dim());
    for (int two_i = sys.two_i1 + sys.two_i2; two_i >= std::abs(sys.two_i1 - sys.two_i2); two_i -= 2) {
        if ((two_i / 2) % 2 == 1)
            p += nuclear.multiplet_projector(two_i);
    }
    return p.cast<std::complex<double>>();
}

Matrix ungerade_projector(const SpinSystem& sys) {
    Matrix g = gerade_projector(sys);
    return Matrix::Identity(g.rows(), g.cols()) - g;
}

Matrix exchange_operator(const SpinSystem& sys) {
    sys.validate();
    if (sys.two_i1 != sys.two_i2)
        throw std::invalid_argument("exchange_operator: nuclear spins differ; resonant exchange undefined");
    const int dn = sys.dim_i1();
    Matrix swap = Matrix::Zero(dn * dn, dn * dn);
    for (int a = 0; a < dn; ++a)
        for (int b = 0; b < dn; ++b)
            swap(a * dn + b, b * dn + a) = 1.0;
    return kron(Matrix::Identity(sys.dim_s(), sys.dim_s()), swap);
}

Matrix exchange_operator_coupled(const SpinSystem& sys) {
    sys.validate();
    if (sys.two_i1 != sys.two_i2)
        throw std::invalid_argument("exchange_operator_coupled: nuclear spins differ");
    CoupledBasis nuclear(sys.two_i1, sys.two_i2);
    RealMatrix op = RealMatrix::Zero(nuclear.dim(), nuclear.dim());
    for (int two_i = 2 * sys.two_i1; two_i >= 0; two_i -= 2) {
        // Exchange symmetry of the |I, Iz> multiplet: (-1)^(2 j - I).
        int exponent = sys.two_i1 - two_i / 2;
        double sign = (exponent % 2 == 0) ? 1.0 : -1.0;
        op += sign * nuclear.multiplet_projector(two_i);
    }
    return kron(Matrix::Identity(sys.dim_s(), sys.dim_s()), op.cast<std::complex<double>>());
}

Matrix hyperfine_projector(const SpinSystem& sys, int two_f) {
    sys.validate();
    if (two_f > sys.two_s + sys.two_i1 || two_f < std::abs(sys.two_s - sys.two_i1))
        throw std::invalid_argument("hyperfine_projector: F outside the triangle range");
    CoupledBasis atom(sys.two_s, sys.two_i1);
    RealMatrix p = atom.multiplet_projector(two_f);
    return kron(p.cast<std::complex<double>>(), Matrix::Identity(sys.dim_i2(), sys.dim_i2()));
}

Matrix total_nuclear_z(const SpinSystem& sys) {
    sys.validate();
    Matrix iz1 = spin_z(sys.two_i1).cast<std::complex<double>>();
    Matrix iz2 = spin_z(sys.two_i2).cast<std::complex<double>>();
    Matrix id1 = Matrix::Identity(sys.dim_i1(), sys.dim_i1());
    Matrix id2 = Matrix::Identity(sys.dim_i2(), sys.dim_i2());
    Matrix nuclear = kron(iz1, id2) + kron(id1, iz2);
    return kron(Matrix::Identity(sys.dim_s(), sys.dim_s()), nuclear);
}

std::vector<std::pair<int, int>> manifold_states(const SpinSystem& sys, int two_f) {
    sys.validate();
    if (two_f > sys.two_s + sys.two_i1 || two_f < std::abs(sys.two_s - sys.two_i1))
        throw std::invalid_argument("manifold_states: F outside the triangle range");
    std::vector<std::pair<int, int>> states;
    for (int two_m = two_f; two_m >= -two_f; two_m -= 2)
        states.emplace_back(two_f, two_m);
    return states;
}

Matrix mixed_state(const SpinSystem& sys,
                   const std::vector<std::pair<int, int>>& atom_states) {
    sys.validate();
    if (atom_states.empty())
        throw std::invalid_argument("mixed_state: empty state list");
    CoupledBasis atom(sys.two_s, sys.two_i1);
    const int da = atom.dim();
    RealMatrix rho1 = RealMatrix::Zero(da, da);
    for (auto [two_f, two_m] : atom_states) {
        Eigen::VectorXd v = atom.state(two_f, two_m);
        rho1 += v * v.transpose();
    }
    rho1 /= double(atom_states.size());
    Matrix rho2 = Matrix::Identity(sys.dim_i2(), sys.dim_i2()) / double(sys.dim_i2());
    return kron(rho1.cast<std::complex<double>>(), rho2);
}

double compute_xi(const Matrix& rho, const Matrix& final_projector, const SpinSystem& sys) {
    sys.validate();
    const int d = sys.dim();
    if (rho.rows() != d || rho.cols() != d || final_projector.rows() != d || final_projector.cols() != d)
        throw std::invalid_argument("compute_xi: dimension mismatch with the spin system");
    if (!is_projector(final_projector))
        throw std::invalid_argument("compute_xi: final projector is not idempotent Hermitian");
    Matrix pi = exchange_operator(sys);
    Matrix scattered = pi * rho * pi;
    std::complex<double> tr = (final_projector * scattered * final_projector).trace();
    return tr.real();
}

bool is_hermitian(const Matrix& m, double tol) {
    return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

bool is_projector(const Matrix& m, double tol) {
    if (!is_hermitian(m, tol))
        return false;
    return (m * m - m).cwiseAbs().maxCoeff() <= tol;
}

} // namespace coldex::spin

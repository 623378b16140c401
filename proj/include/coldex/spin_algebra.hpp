#pragma once

#include <Eigen/Dense>
#include <complex>
#include <utility>
#include <vector>

namespace coldex::spin {

using Matrix = Eigen::MatrixXcd;
using RealMatrix = Eigen::MatrixXd;

/// Quantum numbers of the colliding pair, stored as twice-values so that
/// half-integers stay exact: two_s for the electron, two_i1 for the
/// neutral atom's nucleus, two_i2 for the ion's nucleus.
struct SpinSystem {
    int two_s = 1;
    int two_i1 = 3;
    int two_i2 = 3;

    int dim_s() const { return two_s + 1; }
    int dim_i1() const { return two_i1 + 1; }
    int dim_i2() const { return two_i2 + 1; }
    int dim_nuclear() const { return dim_i1() * dim_i2(); }
    int dim() const { return dim_s() * dim_nuclear(); }

    /// Throws on negative or otherwise malformed quantum numbers.
    void validate() const;
};

/// Single-spin operators in the descending-m basis (m = j, j-1, ..., -j).
RealMatrix spin_z(int two_j);
RealMatrix spin_plus(int two_j);
RealMatrix spin_minus(int two_j);

/// Coupled basis |J,M> of two spins, built by lowering from the stretched
/// state and Gram-Schmidt orthogonalization for each top state, which fixes
/// the Condon-Shortley sign convention without any closed-form sign rules.
/// Product basis index is idx(m1)*d2 + idx(m2) with m descending.
class CoupledBasis {
public:
    CoupledBasis(int two_j1, int two_j2);

    int two_j1() const { return two_j1_; }
    int two_j2() const { return two_j2_; }
    int dim() const { return dim_; }

    /// <m1 m2 | J M>, Condon-Shortley convention.
    double coefficient(int two_m1, int two_m2, int two_big_j, int two_big_m) const;

    /// Column vector of |J,M> in the product basis.
    Eigen::VectorXd state(int two_big_j, int two_big_m) const;

    /// Projector onto the full J multiplet (sum over M), on the product space.
    RealMatrix multiplet_projector(int two_big_j) const;

private:
    int column_of(int two_big_j, int two_big_m) const;

    int two_j1_, two_j2_, dim_;
    RealMatrix columns_;                       // dim x dim, coupled states
    std::vector<std::pair<int, int>> labels_;  // (two_J, two_M) per column
};

/// Standalone Clebsch-Gordan coefficient. Rejects triangle-rule or
/// projection-range violations; returns 0 when M != m1 + m2.
double clebsch_gordan(int two_j1, int two_j2, int two_m1, int two_m2,
                      int two_big_j, int two_big_m);

/// Projector onto odd total nuclear spin, on the nuclear product space
/// (dim_i1 * dim_i2). Requires integer total spin.
Matrix gerade_projector(const SpinSystem& sys);

/// Complement of the gerade projector on the nuclear product space.
Matrix ungerade_projector(const SpinSystem& sys);

/// Nuclear-spin swap tensored with the electron identity, on the full
/// space: <s,a,b| Pi |s',a',b'> = delta_ss' delta_ab' delta_ba'.
/// Requires identical nuclear spins.
Matrix exchange_operator(const SpinSystem& sys);

/// Same operator assembled from total-nuclear-spin multiplet projectors,
/// each weighted by its exchange symmetry (-1)^(2 I1 - I). For half-integer
/// nuclear spins this is the odd-total-spin (gerade) projector minus the
/// even (ungerade) one.
Matrix exchange_operator_coupled(const SpinSystem& sys);

/// Projector onto the neutral atom's total-spin-F manifold (electron
/// coupled with nucleus 1), identity on nucleus 2. Full-space operator.
Matrix hyperfine_projector(const SpinSystem& sys, int two_f);

/// Total nuclear z projection I1z + I2z on the full space (diagonal).
Matrix total_nuclear_z(const SpinSystem& sys);

/// All (two_f, two_m) states of one hyperfine manifold of the neutral atom.
std::vector<std::pair<int, int>> manifold_states(const SpinSystem& sys, int two_f);

/// rho = rho1 (x) rho2 with rho1 the uniform mixture over the listed
/// (two_f, two_m) hyperfine states of the neutral atom and rho2 the fully
/// mixed ion nuclear state.
Matrix mixed_state(const SpinSystem& sys,
                   const std::vector<std::pair<int, int>>& atom_states);

/// Spin statistical factor xi = Tr(P Pi rho Pi P) for the exchange
/// operator of `sys` and a final-state projector P. P must be idempotent.
double compute_xi(const Matrix& rho, const Matrix& final_projector, const SpinSystem& sys);

/// Kronecker product, row-major convention (left factor is the slow index).
Matrix kron(const Matrix& a, const Matrix& b);

bool is_hermitian(const Matrix& m, double tol = 1e-12);
bool is_projector(const Matrix& m, double tol = 1e-10);

} // namespace coldex::spin

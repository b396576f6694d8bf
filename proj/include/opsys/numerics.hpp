#pragma once

// Numerical kernels: Hermitian eigendecomposition (cyclic Jacobi), active-set
// nonnegative least squares, and Dykstra alternating projections for
// affine-slice / PSD-product feasibility problems.

#include <limits>
#include <optional>
#include <vector>

#include "opsys/space.hpp"

namespace opsys {

struct EigResult {
  RVector eigenvalues;   // ascending
  CMatrix eigenvectors;  // unitary, column i pairs with eigenvalues(i)
};

/// Full spectral decomposition of a Hermitian matrix (upper triangle is
/// authoritative). Eigenvector phases are normalised so that the first entry
/// of magnitude > 1e-12 is real and positive.
EigResult herm_eig(const CMatrix& h);
/// Eigenvalues only, ascending.
RVector herm_eigenvalues(const CMatrix& h);
double min_eigenvalue(const CMatrix& h);
/// Nearest PSD matrix in Frobenius norm (negative eigenvalues clipped).
CMatrix psd_project(const CMatrix& h);

struct NnlsResult {
  RVector coeffs;
  double residual = 0.0;
  int iterations = 0;
  bool converged = true;
};

/// min ||A c - b||_2 subject to c >= 0 (Lawson-Hanson active set).
/// `tol` bounds the dual gradient used to stop the outer loop.
NnlsResult nnls_solve(const RMatrix& a, const RVector& b, double tol = 1e-12, int max_iter = -1);

// Feasibility ----------------------------------------------------------------

/// Real isometric vectorisation of an n x n Hermitian matrix (n^2 entries):
/// diagonal first, then sqrt(2) Re / sqrt(2) Im of the strict upper triangle.
RVector hvec(const CMatrix& h);
CMatrix hmat(const Eigen::Ref<const RVector>& v, int n);

/// Constraints sum_j coeff(k, j) Q_j + sum_i s_i dirs[i][k] = rhs[k] for every
/// row k, over Hermitian n x n variables Q_j >= 0 and scalars s_i >= 0.
struct AffineSystem {
  int n = 1;
  RMatrix coeff;                               // rows x g
  std::vector<CMatrix> rhs;                    // rows blocks
  std::vector<std::vector<CMatrix>> scalar_dirs;  // each: rows blocks

  int rows() const { return static_cast<int>(coeff.rows()); }
  int vars() const { return static_cast<int>(coeff.cols()); }
};

struct FeasPoint {
  std::vector<CMatrix> blocks;  // g PSD blocks
  RVector scalars;              // m nonnegative scalars
};

enum class FeasStatus { Feasible, InfeasibleEvidence, Budget };
const char* to_string(FeasStatus s);

struct FeasOptions {
  int max_iter = 50000;
  double tol = 1e-8;
  /// Infeasibility is declared once the inter-set gap changes by less than
  /// this relative amount over `stall_window` iterations.
  double stall_rel = 1e-5;
  int stall_window = 200;
  int burn_in = 300;
  bool record_gaps = false;
  /// Dykstra correction on the cone step; false gives plain alternating projections.
  bool dykstra = true;
};

struct FeasResult {
  FeasStatus status = FeasStatus::Budget;
  FeasPoint point;  // Feasible: the certified point; otherwise the last PSD iterate
  double gap = 0.0;
  /// Candidate separator: y in row space, with A^* y in the PSD product cone
  /// (approximately) and <y, rhs> < 0. Present for InfeasibleEvidence.
  std::optional<std::vector<CMatrix>> separator;
  int iterations = 0;
  double residual = 0.0;  // affine residual of `point`
  std::vector<double> gaps;
};

FeasResult dykstra_psd_feasibility(const AffineSystem& sys, const FeasOptions& opts = {});

// Interior point ------------------------------------------------------------

enum class MarginStatus { Optimal, PrimalHit, DualHit, Stalled };
const char* to_string(MarginStatus s);

struct MarginOptions {
  int max_iter = 120;
  double feas_tol = 1e-10;  // relative primal and dual residuals
  double gap_tol = 1e-10;
  /// Residual accepted for the early stops below.
  double hit_tol = 1e-8;
  /// Cost on block traces and scalars; keeps the dual strictly feasible.
  double reg = 1e-12;
  /// Cost on the free-direction multipliers. Bounds them on the central
  /// path when the directions are recession directions of the feasible set;
  /// the dual then pairs to at most dir_reg with each direction.
  double dir_reg = 1e-10;
  /// Early stop once a primal-feasible iterate has sigma <= stop_sigma.
  double stop_sigma = -1.0;
  /// Early stop once a dual-feasible iterate has objective >= stop_dual.
  double stop_dual = std::numeric_limits<double>::infinity();
};

struct MarginResult {
  MarginStatus status = MarginStatus::Stalled;
  FeasPoint point;     // strictly feasible blocks and scalars of the last iterate
  double sigma = 0.0;  // unit multiplier of `point`
  /// Dual functional F = -Y, one block per row; F pairs to <= 1 with the unit.
  std::vector<CMatrix> dual;
  double primal_obj = 0.0;
  double dual_obj = 0.0;
  double primal_res = 0.0;  // relative
  double dual_res = 0.0;    // relative
  int iterations = 0;
};

/// Smallest sigma >= 0 with rhs + sigma * unit = sum_j coeff Q_j + sum_i s_i dirs_i
/// over Q_j >= 0, s_i >= 0 (primal-dual path following, HKM direction,
/// Mehrotra predictor-corrector). The dual objective lower-bounds sigma.
MarginResult sdp_margin(const AffineSystem& sys, const std::vector<CMatrix>& unit, const MarginOptions& opts = {});

/// sum_j coeff(k, j) Q_j + sum_i s_i dirs[i][k] - rhs[k], stacked over k.
std::vector<CMatrix> affine_residual(const AffineSystem& sys, const FeasPoint& p);

}  // namespace opsys

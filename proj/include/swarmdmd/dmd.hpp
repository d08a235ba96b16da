#pragma once

#include <complex>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <variant>

#include <Eigen/Dense>

#include "swarmdmd/observables.hpp"

namespace swarmdmd {

/// Rank retained by the number of singular triplets.
struct FixedRank {
    std::size_t rank;
};

/// Smallest rank whose cumulative squared singular values reach `fraction`
/// of the total.
struct EnergyRank {
    double fraction;
};

using RankSpec = std::variant<FixedRank, EnergyRank>;

inline constexpr std::size_t kDefaultRank = 8;

/// Singular values below this fraction of sigma_1 are always discarded.
inline constexpr double kSingularValueFloor = 1e-12;

struct TruncatedSVD {
    Eigen::MatrixXd U;     // rows x r
    Eigen::VectorXd sigma; // r, non-increasing, strictly positive
    Eigen::MatrixXd V;     // cols x r

    std::size_t rank() const { return static_cast<std::size_t>(sigma.size()); }
    Eigen::MatrixXd reconstruct() const { return U * sigma.asDiagonal() * V.transpose(); }
};

/// Economy-size SVD truncated to the requested rank (never forms full square
/// factors). Throws NumericalError("rank-deficient input") when nothing
/// survives the singular value floor.
TruncatedSVD truncated_svd(const Eigen::MatrixXd& M, RankSpec rank);

struct InteractionModel {
    Eigen::MatrixXd K; // (2N) x (N m)
    FeatureLayout layout;
    std::size_t rank = 0;
    Dynamics dynamics = Dynamics::standard;
    double dt = 0.0;

    std::size_t n_agents() const { return layout.n_agents(); }
    void validate() const;
};

/// K = (S - drift) V Sigma^-1 U^T from the rank-truncated SVD of Y. The model
/// records the rank actually retained.
InteractionModel estimate_K(const SnapshotMatrices& mats, RankSpec rank = FixedRank{kDefaultRank});

/// Same estimator on raw matrices.
Eigen::MatrixXd estimate_K(const Eigen::MatrixXd& target, const Eigen::MatrixXd& Y, RankSpec rank,
                           std::size_t* retained_rank = nullptr);

struct DmdModes {
    Eigen::VectorXcd eigenvalues;  // Lambda
    Eigen::MatrixXcd modes;        // W = X' V Sigma^-1 W~
    Eigen::MatrixXd reduced;       // A~ = U^T X' V Sigma^-1
    Eigen::MatrixXcd reduced_modes; // W~

    /// max |A~ W~ - W~ Lambda|.
    double reduced_residual() const;

    /// x_k ~ W Lambda^k b with b the least-squares mode amplitudes of x_0.
    Eigen::VectorXd predict(const Eigen::VectorXd& x0, std::size_t steps) const;
};

/// Exact DMD: SVD of X, reduced operator, its eigendecomposition and the
/// lifted modes.
DmdModes dmd_modes(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Xprime, RankSpec rank);

/// Row i of K rebuilt element-wise as u_j^T Sigma^-1 V^T s_i over all feature
/// rows j. Recomputes the SVD of mats.Y at model.rank and throws InternalError
/// if any row disagrees with the stored K beyond 1e-9 relative tolerance.
Eigen::MatrixXd influence_rows(const InteractionModel& model, const SnapshotMatrices& mats);

// Text serialization: header `swarmdmd-k v1 rows cols rank dynamics dt`, one
// row of K per line, then a `layout` line listing the kinds.
void write_model(std::ostream& os, const InteractionModel& model);
InteractionModel read_model(std::istream& is);
void save_model(const InteractionModel& model, const std::filesystem::path& path);
InteractionModel load_model(const std::filesystem::path& path);

} // namespace swarmdmd

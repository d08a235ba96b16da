#include "swarmdmd/dmd.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "swarmdmd/error.hpp"
#include "swarmdmd/io.hpp"

namespace swarmdmd {

namespace {

using Index = Eigen::Index;

std::size_t requested_rank(const RankSpec& spec, const Eigen::VectorXd& sigma) {
    if (const auto* fixed = std::get_if<FixedRank>(&spec)) {
        return fixed->rank;
    }
    const double fraction = std::get<EnergyRank>(spec).fraction;
    if (!(fraction > 0.0 && fraction <= 1.0)) {
        throw InvalidArgument("energy threshold must lie in (0, 1]");
    }
    const double total = sigma.squaredNorm();
    double acc = 0.0;
    for (Index i = 0; i < sigma.size(); ++i) {
        acc += sigma(i) * sigma(i);
        if (acc >= fraction * total) {
            return static_cast<std::size_t>(i + 1);
        }
    }
    return static_cast<std::size_t>(sigma.size());
}

} // namespace

TruncatedSVD truncated_svd(const Eigen::MatrixXd& M, RankSpec rank) {
    if (M.size() == 0) {
        throw InvalidArgument("cannot decompose an empty matrix");
    }
    if (!M.allFinite()) {
        throw NumericalError("matrix contains non-finite entries");
    }
    const auto max_rank = static_cast<std::size_t>(std::min(M.rows(), M.cols()));
    if (const auto* fixed = std::get_if<FixedRank>(&rank); fixed && fixed->rank > max_rank) {
        throw InvalidArgument("rank " + std::to_string(fixed->rank) + " exceeds min(rows, cols) = " +
                              std::to_string(max_rank));
    }

    Eigen::BDCSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& sv = svd.singularValues();

    std::size_t keep = std::min(requested_rank(rank, sv), max_rank);
    const double floor = sv.size() > 0 ? kSingularValueFloor * sv(0) : 0.0;
    std::size_t above = 0;
    while (above < static_cast<std::size_t>(sv.size()) && sv(static_cast<Index>(above)) > floor) {
        ++above;
    }
    keep = std::min(keep, above);
    if (keep == 0 || !(sv(0) > 0.0)) {
        throw NumericalError("rank-deficient input: no singular value survives truncation");
    }

    const Index r = static_cast<Index>(keep);
    return TruncatedSVD{svd.matrixU().leftCols(r), sv.head(r), svd.matrixV().leftCols(r)};
}

void InteractionModel::validate() const {
    const auto n = layout.n_agents();
    if (static_cast<std::size_t>(K.rows()) != 2 * n || static_cast<std::size_t>(K.cols()) != layout.rows()) {
        throw InvalidArgument("K is " + std::to_string(K.rows()) + "x" + std::to_string(K.cols()) + ", layout implies " +
                              std::to_string(2 * n) + "x" + std::to_string(layout.rows()));
    }
    if (!(dt > 0.0)) {
        throw InvalidArgument("model dt must be > 0");
    }
}

Eigen::MatrixXd estimate_K(const Eigen::MatrixXd& target, const Eigen::MatrixXd& Y, RankSpec rank,
                           std::size_t* retained_rank) {
    if (target.cols() != Y.cols()) {
        throw InvalidArgument("S and Y must have the same number of columns");
    }
    if (Y.size() == 0 || Y.cwiseAbs().maxCoeff() == 0.0) {
        throw NumericalError("no observable signal: feature matrix Y is zero");
    }
    // A fixed rank above the feature count asks for everything Y has.
    if (auto* fixed = std::get_if<FixedRank>(&rank)) {
        fixed->rank = std::min(fixed->rank, static_cast<std::size_t>(std::min(Y.rows(), Y.cols())));
    }
    const TruncatedSVD svd = truncated_svd(Y, rank);
    if (retained_rank) {
        *retained_rank = svd.rank();
    }
    const Eigen::MatrixXd weighted = (target * svd.V) * svd.sigma.cwiseInverse().asDiagonal();
    return weighted * svd.U.transpose();
}

InteractionModel estimate_K(const SnapshotMatrices& mats, RankSpec rank) {
    if (mats.S.rows() != mats.X.rows() || mats.S.cols() != mats.Y.cols() || mats.drift.rows() != mats.S.rows() ||
        mats.drift.cols() != mats.S.cols()) {
        throw InvalidArgument("snapshot matrices are inconsistent");
    }
    if (static_cast<std::size_t>(mats.Y.rows()) != mats.layout.rows()) {
        throw InvalidArgument("Y rows do not match the feature layout");
    }
    InteractionModel model;
    model.K = estimate_K(mats.target(), mats.Y, rank, &model.rank);
    model.layout = mats.layout;
    model.dynamics = mats.dynamics;
    model.dt = mats.dt;
    return model;
}

double DmdModes::reduced_residual() const {
    const Eigen::MatrixXcd lhs = reduced.cast<std::complex<double>>() * reduced_modes;
    const Eigen::MatrixXcd rhs = reduced_modes * eigenvalues.asDiagonal();
    return (lhs - rhs).cwiseAbs().maxCoeff();
}

Eigen::VectorXd DmdModes::predict(const Eigen::VectorXd& x0, std::size_t steps) const {
    const Eigen::VectorXcd x0c = x0.cast<std::complex<double>>();
    const Eigen::VectorXcd amplitudes = modes.completeOrthogonalDecomposition().solve(x0c);
    Eigen::VectorXcd powers(eigenvalues.size());
    for (Index i = 0; i < eigenvalues.size(); ++i) {
        powers(i) = std::pow(eigenvalues(i), static_cast<double>(steps));
    }
    return (modes * powers.cwiseProduct(amplitudes)).real();
}

DmdModes dmd_modes(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Xprime, RankSpec rank) {
    if (X.rows() != Xprime.rows() || X.cols() != Xprime.cols()) {
        throw InvalidArgument("X and X' must have the same shape");
    }
    const TruncatedSVD svd = truncated_svd(X, rank);
    const Eigen::MatrixXd lifted = Xprime * svd.V * svd.sigma.cwiseInverse().asDiagonal();

    DmdModes out;
    out.reduced = svd.U.transpose() * lifted;
    Eigen::EigenSolver<Eigen::MatrixXd> eig(out.reduced, true);
    if (eig.info() != Eigen::Success) {
        throw NumericalError("eigendecomposition of the reduced operator failed");
    }
    out.eigenvalues = eig.eigenvalues();
    out.reduced_modes = eig.eigenvectors();
    out.modes = lifted.cast<std::complex<double>>() * out.reduced_modes;
    return out;
}

Eigen::MatrixXd influence_rows(const InteractionModel& model, const SnapshotMatrices& mats) {
    model.validate();
    if (model.layout != mats.layout || mats.Y.cols() != mats.S.cols()) {
        throw InvalidArgument("model and snapshot matrices disagree on layout");
    }
    const TruncatedSVD svd = truncated_svd(mats.Y, FixedRank{model.rank});
    if (svd.rank() != model.rank) {
        throw InvalidArgument("snapshot matrices do not support the model's rank");
    }
    const Eigen::MatrixXd target = mats.target();
    const Eigen::VectorXd inv_sigma = svd.sigma.cwiseInverse();

    Eigen::MatrixXd rows(target.rows(), svd.U.rows());
    for (Index i = 0; i < target.rows(); ++i) {
        // Temporal projection V^T s_i, scaled by Sigma^-1, then spread over
        // every feature row through u_j.
        const Eigen::VectorXd projected = inv_sigma.cwiseProduct(svd.V.transpose() * target.row(i).transpose());
        for (Index j = 0; j < svd.U.rows(); ++j) {
            rows(i, j) = svd.U.row(j).dot(projected);
        }
    }

    const double scale = model.K.norm();
    for (Index i = 0; i < rows.rows(); ++i) {
        const double row_norm = model.K.row(i).norm();
        const double diff = (rows.row(i) - model.K.row(i)).norm();
        if (diff > 1e-9 * std::max(row_norm, 1e-12 * scale)) {
            std::ostringstream os;
            os << "influence row " << i << " deviates from K by " << diff << " (row norm " << row_norm << ")";
            throw InternalError(os.str());
        }
    }
    return rows;
}

void write_model(std::ostream& os, const InteractionModel& model) {
    model.validate();
    os << "swarmdmd-k v1 " << model.K.rows() << ' ' << model.K.cols() << ' ' << model.rank << ' '
       << to_string(model.dynamics) << ' ' << format_double(model.dt) << '\n';
    std::string line;
    for (Index i = 0; i < model.K.rows(); ++i) {
        line.clear();
        for (Index j = 0; j < model.K.cols(); ++j) {
            if (j) line += ' ';
            line += format_double(model.K(i, j));
        }
        line += '\n';
        os << line;
    }
    os << "layout";
    for (auto k : model.layout.kinds()) {
        os << ' ' << to_string(k);
    }
    os << '\n';
}

InteractionModel read_model(std::istream& is) {
    std::string header;
    if (!std::getline(is, header)) {
        throw IoError("model file is empty");
    }
    std::istringstream hs(header);
    std::string magic, version, dynamics, dt_text;
    Index rows = 0, cols = 0;
    std::size_t rank = 0;
    if (!(hs >> magic >> version >> rows >> cols >> rank >> dynamics >> dt_text) || magic != "swarmdmd-k" ||
        version != "v1") {
        throw IoError("line 1: expected 'swarmdmd-k v1 rows cols rank dynamics dt'");
    }
    if (rows <= 0 || cols <= 0 || rows % 2 != 0) {
        throw IoError("line 1: invalid K dimensions");
    }

    InteractionModel model;
    model.rank = rank;
    try {
        model.dynamics = parse_dynamics(dynamics);
    } catch (const InvalidArgument& e) {
        throw IoError(std::string("line 1: ") + e.what());
    }
    {
        auto [ptr, ec] = std::from_chars(dt_text.data(), dt_text.data() + dt_text.size(), model.dt);
        if (ec != std::errc() || ptr != dt_text.data() + dt_text.size()) {
            throw IoError("line 1: malformed dt");
        }
    }

    model.K.resize(rows, cols);
    std::string line;
    for (Index i = 0; i < rows; ++i) {
        if (!std::getline(is, line)) {
            throw IoError("line " + std::to_string(i + 2) + ": missing K row");
        }
        const char* p = line.data();
        const char* end = line.data() + line.size();
        for (Index j = 0; j < cols; ++j) {
            while (p < end && (*p == ' ' || *p == '\t')) ++p;
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(p, end, v);
            if (ec != std::errc()) {
                throw IoError("line " + std::to_string(i + 2) + ": malformed value in column " + std::to_string(j));
            }
            model.K(i, j) = v;
            p = ptr;
        }
        while (p < end && (*p == ' ' || *p == '\t' || *p == '\r')) ++p;
        if (p != end) {
            throw IoError("line " + std::to_string(i + 2) + ": too many values");
        }
    }

    if (!std::getline(is, line)) {
        throw IoError("missing layout line");
    }
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag != "layout") {
        throw IoError("line " + std::to_string(rows + 2) + ": expected 'layout'");
    }
    std::vector<FeatureKind> kinds;
    try {
        for (std::string name; ls >> name;) kinds.push_back(parse_feature_kind(name));
        model.layout = FeatureLayout(std::move(kinds), static_cast<std::size_t>(rows / 2));
        model.validate();
    } catch (const InvalidArgument& e) {
        throw IoError(std::string("invalid model: ") + e.what());
    }
    return model;
}

void save_model(const InteractionModel& model, const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    write_model(os, model);
    if (!os) {
        throw IoError("failed writing " + path.string());
    }
}

InteractionModel load_model(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) {
        throw IoError("cannot open " + path.string());
    }
    try {
        return read_model(is);
    } catch (const IoError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

} // namespace swarmdmd

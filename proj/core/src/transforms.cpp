#include "mmrisk/transforms.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "mmrisk/errors.hpp"
#include "linsolve.hpp"

namespace mmrisk {

namespace {

void check_domain(const CumulantDomain& dom, double r) {
    if (!dom.contains(r)) {
        throw NumericError("cumulant argument r = " + std::to_string(r) +
                           " outside finiteness interval (" + std::to_string(dom.r_lo) +
                           ", " + std::to_string(dom.r_hi) + ")");
    }
}

} // namespace

CumulantDomain cumulant_domain(const ValidatedModel& model) {
    CumulantDomain dom{-std::numeric_limits<double>::infinity(),
                       std::numeric_limits<double>::infinity()};
    for (int k = 0; k < model.states(); ++k) {
        const StateJumpLaw& law = model.law(k);
        if (law.neg_rate > 0.0) dom.r_lo = std::max(dom.r_lo, -law.neg_exp_rate);
        if (law.pos_rate > 0.0) dom.r_hi = std::min(dom.r_hi, law.pos_law.min_rate());
    }
    if (model.spec().has_switching_jumps()) {
        for (const auto& row : model.spec().switching_jumps) {
            for (const auto& cell : row) {
                if (cell.has_value()) dom.r_hi = std::min(dom.r_hi, cell->min_rate());
            }
        }
    }
    return dom;
}

CumulantDomain cumulant_domain(const DualDescriptor& dual) {
    CumulantDomain dom{-std::numeric_limits<double>::infinity(),
                       std::numeric_limits<double>::infinity()};
    for (const DualDescriptor::StateLaw& law : dual.laws) {
        if (law.up_rate > 0.0) dom.r_hi = std::min(dom.r_hi, law.up_exp_rate);
        if (law.down_rate > 0.0) dom.r_lo = std::max(dom.r_lo, -law.down_law.min_rate());
    }
    return dom;
}

Matrix cumulant_matrix(const ValidatedModel& model, double r) {
    check_domain(cumulant_domain(model), r);
    const int m = model.states();
    Matrix K = model.Q();
    for (int k = 0; k < m; ++k) {
        const StateJumpLaw& law = model.law(k);
        if (law.pos_rate > 0.0) K(k, k) += law.pos_rate * (law.pos_law.mgf(r) - 1.0);
        if (law.neg_rate > 0.0) {
            // E[e^{-r Exp(c)}] = c / (c + r)
            K(k, k) += law.neg_rate * (law.neg_exp_rate / (law.neg_exp_rate + r) - 1.0);
        }
        if (!model.spec().switching_jumps.empty()) {
            for (int s = 0; s < m; ++s) {
                const auto& cell =
                    model.spec().switching_jumps[static_cast<size_t>(k)][static_cast<size_t>(s)];
                if (cell.has_value()) K(k, s) *= cell->mgf(r);
            }
        }
    }
    return K;
}

Matrix cumulant_matrix(const DualDescriptor& dual, double r) {
    check_domain(cumulant_domain(dual), r);
    const int m = dual.chain.m;
    Matrix K = dual.chain.Q;
    for (int k = 0; k < m; ++k) {
        const DualDescriptor::StateLaw& law = dual.laws[static_cast<size_t>(k)];
        if (law.up_rate > 0.0) {
            K(k, k) += law.up_rate * (law.up_exp_rate / (law.up_exp_rate - r) - 1.0);
        }
        if (law.down_rate > 0.0) {
            K(k, k) += law.down_rate * (law.down_law.mgf(-r) - 1.0);
        }
    }
    return K;
}

Matrix resolvent(const ValidatedModel& model, double r, double s) {
    if (!(s > 0.0)) throw NumericError("resolvent needs s > 0");
    const int m = model.states();
    const Matrix A = s * Matrix::Identity(m, m) - cumulant_matrix(model, r);
    return detail::solve_checked(A, Matrix(s * Matrix::Identity(m, m)), "resolvent");
}

Matrix first_jump_transform(const ValidatedModel& model, double s) {
    if (s < 0.0) throw NumericError("first_jump_transform needs s >= 0");
    const int m = model.states();
    const Matrix A = s * Matrix::Identity(m, m) + model.Lambda() - model.Q();
    return detail::solve_checked(A, model.Lambda(), "first jump transform");
}

Matrix p0_limit(const ValidatedModel& model) {
    const int m = model.states();
    const Matrix A = model.Lambda() - model.Q();
    return detail::solve_checked(A, Matrix(Matrix::Identity(m, m)), "jump epoch kernel");
}

} // namespace mmrisk

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "coupled_labels/datamodel.hpp"

namespace coupled_labels {

/// Trainable L x L label-coupling matrix with a fixed strength alpha.
/// Entry (i, j) moves label j's logit in proportion to label i's predicted
/// probability. The diagonal is zero at rest.
struct CouplingMatrix {
    Matrix a;
    double alpha = 0.3;

    static CouplingMatrix zeros(std::size_t num_labels, double alpha);
    [[nodiscard]] std::size_t num_labels() const { return static_cast<std::size_t>(a.rows()); }
};

struct RefineForward {
    Matrix z_prime;
    Matrix probs;  ///< sigmoid(z), kept for the backward pass
};

/// z' = z + alpha * sigmoid(z) * A, one message-passing step.
RefineForward refine_forward(const Matrix& z, const CouplingMatrix& cm);

struct RefineBackward {
    Matrix grad_z;
    Matrix grad_a;
};

/// grad_z = g + alpha * (g * A^T) .* p .* (1 - p);  grad_A = alpha * p^T * g,
/// diagonal zeroed.
RefineBackward refine_backward(const Matrix& grad_z_prime, const RefineForward& cache,
                               const CouplingMatrix& cm);

void enforce_zero_diag(CouplingMatrix& cm);
void enforce_zero_diag(Matrix& a);

/// L x L CSV, rows are source labels and columns targets, diagonal written as 0.
std::string coupling_to_csv(const Matrix& a, const std::vector<std::string>& label_names);
Matrix coupling_from_csv(const std::string& text, std::vector<std::string>* label_names = nullptr);

}  // namespace coupled_labels

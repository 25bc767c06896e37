#include "coupled_labels/coupling.hpp"

#include "coupled_labels/csv.hpp"
#include "coupled_labels/losses.hpp"

namespace coupled_labels {

CouplingMatrix CouplingMatrix::zeros(std::size_t num_labels, double alpha) {
    const auto l = static_cast<Eigen::Index>(num_labels);
    return CouplingMatrix{Matrix::Zero(l, l), alpha};
}

namespace {

void check_square(const CouplingMatrix& cm) {
    if (cm.a.rows() != cm.a.cols())
        throw ValidationError("coupling matrix must be square");
}

}  // namespace

RefineForward refine_forward(const Matrix& z, const CouplingMatrix& cm) {
    check_square(cm);
    if (z.cols() != cm.a.rows())
        throw ValidationError("refine_forward: logits have " + std::to_string(z.cols()) +
                              " labels but coupling matrix is " + std::to_string(cm.a.rows()) +
                              " x " + std::to_string(cm.a.cols()));
    RefineForward out;
    out.probs = sigmoid(z);
    // Diagonal masked here as well as after every optimizer step.
    Matrix a = cm.a;
    enforce_zero_diag(a);
    Matrix messages = out.probs * a;
    out.z_prime = z + cm.alpha * messages;
    return out;
}

RefineBackward refine_backward(const Matrix& grad_z_prime, const RefineForward& cache,
                               const CouplingMatrix& cm) {
    check_square(cm);
    if (grad_z_prime.rows() != cache.probs.rows() || grad_z_prime.cols() != cache.probs.cols() ||
        grad_z_prime.cols() != cm.a.rows())
        throw ValidationError("refine_backward: gradient shape does not match forward cache");
    Matrix a = cm.a;
    enforce_zero_diag(a);

    RefineBackward out;
    const Matrix slope = cache.probs.array() * (1.0 - cache.probs.array());
    Matrix back = grad_z_prime * a.transpose();
    out.grad_z = grad_z_prime + cm.alpha * Matrix(back.array() * slope.array());
    out.grad_a = cm.alpha * (cache.probs.transpose() * grad_z_prime);
    enforce_zero_diag(out.grad_a);
    return out;
}

void enforce_zero_diag(Matrix& a) {
    const auto n = std::min(a.rows(), a.cols());
    for (Eigen::Index i = 0; i < n; ++i) a(i, i) = 0.0;
}

void enforce_zero_diag(CouplingMatrix& cm) { enforce_zero_diag(cm.a); }

std::string coupling_to_csv(const Matrix& a, const std::vector<std::string>& label_names) {
    Matrix canonical = a;
    enforce_zero_diag(canonical);
    return csv::matrix_to_csv(canonical, label_names, label_names, "source\\target");
}

Matrix coupling_from_csv(const std::string& text, std::vector<std::string>* label_names) {
    Matrix a = csv::matrix_from_csv(text, label_names, true);
    if (a.rows() != a.cols()) throw ValidationError("coupling csv: matrix is not square");
    return a;
}

}  // namespace coupled_labels

#include "orderedae/activation.hpp"

#include <cmath>
#include <string>

#include "orderedae/errors.hpp"

namespace oae {

Matrix activate(Activation act, const Matrix& z) {
    if (act == Activation::Linear) return z;
    Matrix v = z;
    for (double& e : v.data()) e = std::tanh(e);
    return v;
}

Matrix activate_deriv(Activation act, const Matrix& z) {
    Matrix d(z.rows(), z.cols(), 1.0);
    if (act == Activation::Linear) return d;
    auto zd = z.data();
    auto dd = d.data();
    for (std::size_t k = 0; k < zd.size(); ++k) {
        const double t = std::tanh(zd[k]);
        dd[k] = 1.0 - t * t;
    }
    return d;
}

std::string_view to_string(Activation act) noexcept {
    switch (act) {
        case Activation::Tanh: return "tanh";
        case Activation::Linear: return "linear";
    }
    return "unknown";
}

Activation activation_from_string(std::string_view name) {
    if (name == "tanh") return Activation::Tanh;
    if (name == "linear") return Activation::Linear;
    throw ContractError("unknown activation '" + std::string(name) + "'");
}

}  // namespace oae

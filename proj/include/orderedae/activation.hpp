#pragma once

#include <string_view>

#include "orderedae/matrix.hpp"

namespace oae {

enum class Activation { Tanh, Linear };

Matrix activate(Activation act, const Matrix& z);
/// Elementwise σ'(z).
Matrix activate_deriv(Activation act, const Matrix& z);

std::string_view to_string(Activation act) noexcept;
/// Inverse of to_string; throws ContractError for unknown names.
Activation activation_from_string(std::string_view name);

}  // namespace oae

#pragma once

#include "mpotrace/tensor.hpp"

// Site-level gauge helpers shared between the chain algebra and the sweeping
// optimizers. Site tensors are (out, in, left, right).
namespace mpotrace::detail {

// rows: left bond, columns: (out, in, right)
Matrix right_matrix(const Tensor &site);
Tensor site_from_right_matrix(const Matrix &m, Index d, Index dr);

// site * r over the right bond
Tensor absorb_right(const Tensor &site, const Matrix &r);
// l * site over the left bond
Tensor absorb_left(const Matrix &l, const Tensor &site);

// Divides the site by its norm and returns log(norm); zero sites are left
// untouched and contribute 0.
double normalize_site(Tensor &site);

} // namespace mpotrace::detail

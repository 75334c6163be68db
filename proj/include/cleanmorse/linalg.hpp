#pragma once
#include <Eigen/Dense>

namespace cleanmorse {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Symmetric inverse square root of an SPD matrix.
Mat inverse_sqrt_spd(const Mat& G);

// Gram-Schmidt via QR, keeping the orientation of the input columns
// (diagonal of R made positive).
Mat orthonormalize(const Mat& A);

}  // namespace cleanmorse

#ifndef JOINTKPE_TENSOR_H_
#define JOINTKPE_TENSOR_H_

#include <Eigen/Core>

namespace jointkpe {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

}  // namespace jointkpe

#endif  // JOINTKPE_TENSOR_H_

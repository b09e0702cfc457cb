#pragma once

#include <string>
#include <string_view>

#include <Eigen/Core>

namespace etongue {

// Lower-case hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

// Digest of a feature matrix: dimensions followed by the IEEE-754 bit
// pattern of every entry in row-major order, big-endian.
std::string matrix_digest(const Eigen::MatrixXd& X);

}  // namespace etongue

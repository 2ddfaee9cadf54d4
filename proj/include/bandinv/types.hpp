#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

namespace bandinv {

using cplx = std::complex<double>;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using IMat = Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic>;

// Integer coordinates of a lattice point.
using IVec = std::vector<long long>;

IVec operator+(const IVec& a, const IVec& b);
IVec operator-(const IVec& a, const IVec& b);
IVec operator-(const IVec& a);
IVec operator*(long long s, const IVec& a);

bool is_zero(const IVec& a);
long long gcd_of(const IVec& a);
std::string to_string(const IVec& a);

}  // namespace bandinv

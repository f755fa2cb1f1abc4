#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace gridid {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;
using Index = Eigen::Index;

class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}
    const std::string& kind() const { return kind_; }

private:
    std::string kind_;
};

// Input files, specs or arguments that fail validation.
class InvalidInput : public Error {
public:
    explicit InvalidInput(const std::string& what) : Error("invalid_input", what) {}
};

class RankDeficient : public Error {
public:
    explicit RankDeficient(const std::string& what) : Error("rank_deficient", what) {}
};

class SolverFailure : public Error {
public:
    explicit SolverFailure(const std::string& what) : Error("solver_failure", what) {}
};

// Worker count: GRIDID_THREADS if set and positive, else hardware concurrency.
int thread_count();

}  // namespace gridid

#pragma once

#include <cstdint>
#include <string>

#include "gridid/netmodel.hpp"

namespace gridid::phasors {

struct PhasorDataset {
    netmodel::TerminalIndex terminals;
    CMatrix V;  // dim x K
    CMatrix I;  // dim x K
    double slot_seconds = 1.0;

    Index dim() const { return V.rows(); }
    Index slots() const { return V.cols(); }
    // Throws InvalidInput on shape mismatch, K = 0 or non-finite values.
    void validate() const;
    // Columns [begin, end).
    PhasorDataset slice(Index begin, Index end) const;
};

PhasorDataset load_phasor_csv(const std::string& path);
void save_phasor_csv(const std::string& path, const PhasorDataset& ds);

struct NoiseOptions {
    bool currents = false;
};

PhasorDataset add_noise(const PhasorDataset& ds, double sigma, std::uint64_t seed, NoiseOptions opt = {});

Index numerical_rank(const CMatrix& V, double tol = 1e-8);
inline Index numerical_rank(const PhasorDataset& ds, double tol = 1e-8) { return numerical_rank(ds.V, tol); }

}  // namespace gridid::phasors

#include "gridid/phasors.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>

namespace gridid::phasors {

using netmodel::Terminal;

void PhasorDataset::validate() const {
    if (V.rows() != I.rows() || V.cols() != I.cols()) throw InvalidInput("V and I shapes differ");
    if (V.rows() != terminals.size()) throw InvalidInput("terminal count does not match data rows");
    if (V.cols() < 1) throw InvalidInput("dataset has no slots");
    if (!V.allFinite() || !I.allFinite()) throw InvalidInput("dataset contains non-finite values");
}

PhasorDataset PhasorDataset::slice(Index begin, Index end) const {
    if (begin < 0 || end > slots() || begin >= end) throw InvalidInput("bad slot range");
    return {terminals, V.middleCols(begin, end - begin), I.middleCols(begin, end - begin), slot_seconds};
}

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(line);
    while (std::getline(ss, cur, ',')) out.push_back(cur);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_double(const std::string& s, size_t line_no) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw InvalidInput("line " + std::to_string(line_no) + ": bad number '" + s + "'");
    if (!std::isfinite(v)) throw InvalidInput("line " + std::to_string(line_no) + ": non-finite value");
    return v;
}

struct Row {
    cplx v, i;
};

}  // namespace

PhasorDataset load_phasor_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw InvalidInput(path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "k,node,phase,v_re,v_im,i_re,i_im")
        throw InvalidInput(path + ": header must be k,node,phase,v_re,v_im,i_re,i_im");

    std::map<std::pair<Terminal, long>, Row> rows;
    std::vector<Terminal> terms;
    long kmax = -1;
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto f = split(line);
        if (f.size() != 7) throw InvalidInput("line " + std::to_string(line_no) + ": expected 7 fields");
        long k = 0;
        auto [p, ec] = std::from_chars(f[0].data(), f[0].data() + f[0].size(), k);
        if (ec != std::errc() || p != f[0].data() + f[0].size() || k < 0)
            throw InvalidInput("line " + std::to_string(line_no) + ": bad slot index");
        if (f[2].size() != 1) throw InvalidInput("line " + std::to_string(line_no) + ": bad phase");
        Terminal t{f[1], netmodel::parse_phase(f[2][0])};
        Row r{{parse_double(f[3], line_no), parse_double(f[4], line_no)},
              {parse_double(f[5], line_no), parse_double(f[6], line_no)}};
        if (!rows.emplace(std::make_pair(t, k), r).second)
            throw InvalidInput("duplicate row for (" + t.node + "," + f[2] + "," + std::to_string(k) + ")");
        terms.push_back(t);
        kmax = std::max(kmax, k);
    }
    if (kmax < 0) throw InvalidInput(path + ": no data rows");
    PhasorDataset ds;
    ds.terminals = netmodel::TerminalIndex(terms);
    const Index dim = ds.terminals.size(), K = kmax + 1;
    ds.V.resize(dim, K);
    ds.I.resize(dim, K);
    for (Index r = 0; r < dim; ++r) {
        const auto& t = ds.terminals[r];
        for (Index k = 0; k < K; ++k) {
            auto it = rows.find({t, static_cast<long>(k)});
            if (it == rows.end())
                throw InvalidInput("missing row for (" + t.node + "," + netmodel::phase_char(t.phase) + "," +
                                   std::to_string(k) + ")");
            ds.V(r, k) = it->second.v;
            ds.I(r, k) = it->second.i;
        }
    }
    return ds;
}

void save_phasor_csv(const std::string& path, const PhasorDataset& ds) {
    ds.validate();
    FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw InvalidInput("cannot write " + path);
    std::fputs("k,node,phase,v_re,v_im,i_re,i_im\n", f);
    for (Index k = 0; k < ds.slots(); ++k)
        for (Index r = 0; r < ds.dim(); ++r) {
            const auto& t = ds.terminals[r];
            std::fprintf(f, "%ld,%s,%c,%.17g,%.17g,%.17g,%.17g\n", static_cast<long>(k), t.node.c_str(),
                         netmodel::phase_char(t.phase), ds.V(r, k).real(), ds.V(r, k).imag(),
                         ds.I(r, k).real(), ds.I(r, k).imag());
        }
    if (std::fclose(f) != 0) throw InvalidInput("write failed: " + path);
}

PhasorDataset add_noise(const PhasorDataset& ds, double sigma, std::uint64_t seed, NoiseOptions opt) {
    if (!(sigma >= 0.0)) throw InvalidInput("noise sigma must be >= 0");
    PhasorDataset out = ds;
    if (sigma == 0.0) return out;
    // boost distributions give the same stream on every platform, unlike std::
    boost::random::mt19937_64 rng(seed);
    boost::random::normal_distribution<double> nd(0.0, sigma);
    auto perturb = [&](CMatrix& M) {
        for (Index k = 0; k < M.cols(); ++k)
            for (Index r = 0; r < M.rows(); ++r) {
                double re = nd(rng);
                double im = nd(rng);
                M(r, k) += cplx(re, im);
            }
    };
    perturb(out.V);
    if (opt.currents) perturb(out.I);
    return out;
}

Index numerical_rank(const CMatrix& V, double tol) {
    if (V.size() == 0) return 0;
    Eigen::BDCSVD<CMatrix> svd(V);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || s(0) == 0.0) return 0;
    Index r = 0;
    for (Index i = 0; i < s.size(); ++i)
        if (s(i) > tol * s(0)) ++r;
    return r;
}

}  // namespace gridid::phasors

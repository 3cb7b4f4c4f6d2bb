#pragma once

// Incremental ConeProgram assembler shared by the surrogate fitter and the
// scheduling-model compiler. Not installed.
//
// Every row handed to the builder describes a slack as an affine form
// s = rhs + sum(vals[k] * var[cols[k]]); the builder stores nonnegative rows
// first and SOC blocks after, as the solver's cone layout requires.

#include <string>
#include <utility>
#include <vector>

#include <Eigen/SparseCore>

#include "stabsched/common.hpp"
#include "stabsched/conic.hpp"

namespace stabsched::detail {

struct AffineRow {
    std::vector<int> cols;
    std::vector<double> vals;
    double rhs = 0.0;

    void add(int col, double val) {
        if (val == 0.0) return;
        cols.push_back(col);
        vals.push_back(val);
    }
};

class ConeBuilder {
public:
    int add_var(std::string name, double cost = 0.0) {
        names_.push_back(std::move(name));
        cost_.push_back(cost);
        return int(names_.size()) - 1;
    }
    void add_cost(int var, double delta) { cost_[std::size_t(var)] += delta; }
    int n_vars() const { return int(names_.size()); }
    const std::string& var_name(int v) const { return names_[std::size_t(v)]; }

    /// rhs + expr == 0
    void add_eq(AffineRow row) { eq_.push_back(std::move(row)); }

    /// Slack s = rhs + expr must be >= 0. Returns the final row index in G
    /// (nonnegative rows always precede SOC rows).
    int add_nonneg(AffineRow row) {
        nonneg_.push_back(std::move(row));
        return int(nonneg_.size()) - 1;
    }

    /// Slacks (s_0, ..., s_{k-1}) form one second-order cone block. Returns
    /// the block ordinal; resolve its first G row with soc_first_row() after
    /// finish().
    int add_soc(std::vector<AffineRow> rows) {
        if (rows.size() < 2) throw ValidationError("SOC block needs dimension >= 2");
        soc_.push_back(std::move(rows));
        return int(soc_.size()) - 1;
    }

    int soc_first_row(int ordinal) const {
        return soc_starts_[std::size_t(ordinal)];
    }

    ConeProgram finish() {
        ConeProgram prog;
        prog.n = n_vars();
        prog.var_names = names_;
        prog.c = Eigen::Map<const Eigen::VectorXd>(cost_.data(), long(cost_.size()));

        std::vector<Eigen::Triplet<double>> ta;
        Eigen::VectorXd b(long(eq_.size()));
        for (std::size_t r = 0; r < eq_.size(); ++r) {
            const AffineRow& row = eq_[r];
            for (std::size_t k = 0; k < row.cols.size(); ++k)
                ta.emplace_back(int(r), row.cols[k], row.vals[k]);
            b[long(r)] = -row.rhs;
        }
        prog.A.resize(long(eq_.size()), prog.n);
        prog.A.setFromTriplets(ta.begin(), ta.end());
        prog.b = std::move(b);

        int m = int(nonneg_.size());
        soc_starts_.clear();
        for (const auto& block : soc_) {
            soc_starts_.push_back(m);
            m += int(block.size());
        }
        std::vector<Eigen::Triplet<double>> tg;
        Eigen::VectorXd h(m);
        int r = 0;
        auto emit = [&](const AffineRow& row) {
            // s = rhs + expr and s = h - Gx, so G gets -expr and h gets rhs
            for (std::size_t k = 0; k < row.cols.size(); ++k)
                tg.emplace_back(r, row.cols[k], -row.vals[k]);
            h[r] = row.rhs;
            ++r;
        };
        for (const auto& row : nonneg_) emit(row);
        for (const auto& block : soc_)
            for (const auto& row : block) emit(row);
        prog.G.resize(m, prog.n);
        prog.G.setFromTriplets(tg.begin(), tg.end());
        prog.h = std::move(h);

        if (!nonneg_.empty())
            prog.cones.push_back({ConeTag::NonNegative, int(nonneg_.size())});
        for (const auto& block : soc_)
            prog.cones.push_back({ConeTag::SecondOrder, int(block.size())});
        return prog;
    }

private:
    std::vector<std::string> names_;
    std::vector<double> cost_;
    std::vector<AffineRow> eq_;
    std::vector<AffineRow> nonneg_;
    std::vector<std::vector<AffineRow>> soc_;
    std::vector<int> soc_starts_;
};

}  // namespace stabsched::detail
